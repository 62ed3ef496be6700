#include "hol/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hol
{

namespace
{

constexpr double kTieEps = 1e-12;
// An interval must clear an excluded neighbour by this much; exact-fit gaps are rejected.
constexpr double kGapEps = 1e-9;

// Objective contribution of one feature value when the hypothesis outputs 1 or 0 there.
struct PointCost
{
  double x;
  double at_one;
  double at_zero;
};

// Signed terms go through the pseudo-label identity when the loss is absolute, so the
// sweep only ever sees weighted absolute-loss pairs plus constant offsets.
std::vector<PointCost> binary_point_costs(const MixedErmQuery& query)
{
  std::vector<PointCost> costs;
  costs.reserve(query.pairs.size() + query.signed_terms.size());
  for (const auto& p : query.pairs) {
    costs.push_back({p.x.scalar(), p.weight * loss_unchecked(query.loss, 1.0, p.y),
                     p.weight * loss_unchecked(query.loss, 0.0, p.y)});
  }
  const double c = query.coefficient;
  for (const auto& s : query.signed_terms) {
    if (query.loss.kind == LossKind::Absolute) {
      const auto pl = signed_to_absolute(s.sign);
      costs.push_back({s.x.scalar(), c * (std::abs(1.0 - pl.label) + pl.offset),
                       c * (std::abs(0.0 - pl.label) + pl.offset)});
    } else {
      costs.push_back({s.x.scalar(), c * s.sign, 0.0});
    }
  }
  return costs;
}

// Distinct sorted values with the summed (at_one - at_zero) delta per value.
struct Sweep
{
  std::vector<double> values;
  std::vector<double> delta;
  double base = 0.0;
};

Sweep make_sweep(std::vector<PointCost> costs)
{
  std::sort(costs.begin(), costs.end(), [](const PointCost& a, const PointCost& b) { return a.x < b.x; });
  Sweep s;
  for (const auto& c : costs) {
    s.base += c.at_zero;
    if (s.values.empty() || s.values.back() != c.x) {
      s.values.push_back(c.x);
      s.delta.push_back(0.0);
    }
    s.delta.back() += c.at_one - c.at_zero;
  }
  return s;
}

// Grid point k; when 1/step is an integer n, k/n rounds like the same rational written any other way.
double grid_point(long k, double step, long n)
{
  const bool integral = std::abs(static_cast<double>(n) * step - 1.0) < 1e-9;
  return std::min(1.0, integral ? static_cast<double>(k) / static_cast<double>(n) : k * step);
}

}  // namespace

// ---------------------------------------------------------------- threshold

Hypothesis ThresholdClass::at(double a)
{
  Hypothesis h;
  h.params = Eigen::VectorXd::Constant(1, a);
  return h;
}

double ThresholdClass::evaluate(const Hypothesis& h, const Feature& x) const
{
  return x.scalar() >= h.params[0] ? 1.0 : 0.0;
}

std::vector<Hypothesis> ThresholdClass::parameter_grid(double step) const
{
  std::vector<Hypothesis> grid;
  const auto n = static_cast<long>(std::ceil(1.0 / step - 1e-9));
  for (long k = 0; k <= n; ++k) {
    grid.push_back(at(grid_point(k, step, n)));
  }
  return grid;
}

ErmResult ThresholdClass::do_solve(const MixedErmQuery& query) const
{
  const Sweep s = make_sweep(binary_point_costs(query));
  const auto m = s.values.size();
  if (m == 0) {
    return {at(0.0), 0.0};
  }
  // suffix[i] = objective when every value with index >= i is covered.
  std::vector<double> suffix(m + 1, 0.0);
  for (std::size_t i = m; i-- > 0;) {
    suffix[i] = suffix[i + 1] + s.delta[i];
  }

  std::size_t best = 0;
  double best_obj = s.base + suffix[0];
  // Cell i > 0 is a in (v[i-1], v[i]]; cell m exists only when v[m-1] < 1.
  const std::size_t last = s.values.back() < 1.0 ? m : m - 1;
  for (std::size_t i = 1; i <= last; ++i) {
    const double obj = s.base + suffix[i];
    if (obj < best_obj - kTieEps) {
      best_obj = obj;
      best = i;
    }
  }
  double a = 0.0;
  if (best > 0) {
    const double right = best < m ? s.values[best] : 1.0;
    a = 0.5 * (s.values[best - 1] + right);
  }
  return {at(a), best_obj};
}

// ---------------------------------------------------------------- interval

IntervalClass::IntervalClass(double min_length) : min_length_(min_length)
{
  if (!(min_length > 0.0 && min_length <= 1.0)) {
    throw ConfigError("interval min_length must lie in (0,1]");
  }
}

Hypothesis IntervalClass::at(double a, double b)
{
  Hypothesis h;
  h.params.resize(2);
  h.params << a, b;
  return h;
}

double IntervalClass::evaluate(const Hypothesis& h, const Feature& x) const
{
  const double v = x.scalar();
  return (v >= h.params[0] && v <= h.params[1]) ? 1.0 : 0.0;
}

std::vector<Hypothesis> IntervalClass::parameter_grid(double step) const
{
  std::vector<Hypothesis> grid;
  const auto n = static_cast<long>(std::ceil(1.0 / step - 1e-9));
  for (long i = 0; i <= n; ++i) {
    const double a = grid_point(i, step, n);
    for (long k = i; k <= n; ++k) {
      const double b = grid_point(k, step, n);
      if (b - a >= min_length_ - 1e-12) {
        grid.push_back(at(a, b));
      }
    }
  }
  return grid;
}

ErmResult IntervalClass::do_solve(const MixedErmQuery& query) const
{
  const Sweep s = make_sweep(binary_point_costs(query));
  const auto m = s.values.size();
  const double len = min_length_;
  const auto& v = s.values;

  struct Candidate
  {
    double obj;
    double a;
    double b;
  };
  bool have = false;
  Candidate best{0.0, 0.0, 0.0};
  auto offer = [&](double obj, double a, double b) {
    if (!have || obj < best.obj - kTieEps ||
        (obj <= best.obj + kTieEps && (a < best.a || (a == best.a && b < best.b)))) {
      best = {obj, a, b};
      have = true;
    }
  };

  // Intervals that cover none of the queried values.
  if (m == 0) {
    offer(s.base, 0.0, len);
  } else {
    if (v.front() > len) {
      offer(s.base, 0.0, len);
    }
    for (std::size_t i = 0; i + 1 < m; ++i) {
      if (v[i + 1] - v[i] - len > kGapEps) {
        const double a = v[i] + 0.5 * (v[i + 1] - v[i] - len);
        offer(s.base, a, a + len);
      }
    }
    if (1.0 - v.back() > len) {
      offer(s.base, 1.0 - len, 1.0);
    }
  }

  // Intervals covering exactly the run v[p..q]; the objective is constant on each run.
  std::vector<double> prefix(m + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    prefix[i + 1] = prefix[i] + s.delta[i];
  }
  for (std::size_t p = 0; p < m; ++p) {
    const bool lo_open = p > 0;
    const double lo = lo_open ? v[p - 1] : 0.0;
    for (std::size_t q = p; q < m; ++q) {
      const bool hi_open = q + 1 < m;
      const double hi = hi_open ? v[q + 1] : 1.0;
      const double slack = hi - lo - len;
      const bool feasible = (lo_open || hi_open) ? slack > kGapEps : slack >= 0.0;
      if (!feasible) {
        continue;
      }
      // assign v[p] directly; lo + (v[p] - lo) can round above v[p]
      double a = 0.0;
      if (lo_open) {
        a = 0.5 * slack < v[p] - lo ? lo + 0.5 * slack : v[p];
      }
      const double b = std::max(v[q], a + len);
      offer(s.base + prefix[q + 1] - prefix[p], a, b);
    }
  }
  return {at(best.a, best.b), best.obj};
}

// ---------------------------------------------------------------- finite

FiniteClass::FiniteClass(std::vector<Fn> members, bool binary) : members_(std::move(members)), binary_(binary)
{
  if (members_.empty()) {
    throw ConfigError("finite class must be nonempty");
  }
}

FiniteClass FiniteClass::constants(const std::vector<double>& values)
{
  std::vector<Fn> fns;
  bool binary = true;
  for (double c : values) {
    require_unit(c, "constant hypothesis value");
    binary = binary && (c == 0.0 || c == 1.0);
    fns.emplace_back([c](const Feature&) { return c; });
  }
  return FiniteClass(std::move(fns), binary);
}

FiniteClass FiniteClass::table(std::vector<double> support, const Eigen::MatrixXd& table)
{
  if (table.cols() != static_cast<Eigen::Index>(support.size()) || table.rows() == 0) {
    throw ConfigError("finite table shape must be |H| x |support|");
  }
  auto shared = std::make_shared<const std::vector<double>>(std::move(support));
  std::vector<Fn> fns;
  bool binary = true;
  for (Eigen::Index k = 0; k < table.rows(); ++k) {
    Eigen::VectorXd row = table.row(k).transpose();
    for (Eigen::Index i = 0; i < row.size(); ++i) {
      require_unit(row[i], "finite table entry");
      binary = binary && (row[i] == 0.0 || row[i] == 1.0);
    }
    fns.emplace_back([shared, row](const Feature& x) {
      const double xv = x.scalar();
      std::size_t nearest = 0;
      double gap = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < shared->size(); ++i) {
        const double d = std::abs((*shared)[i] - xv);
        if (d < gap) {
          gap = d;
          nearest = i;
        }
      }
      return row[static_cast<Eigen::Index>(nearest)];
    });
  }
  return FiniteClass(std::move(fns), binary);
}

Hypothesis FiniteClass::at(std::size_t k)
{
  Hypothesis h;
  h.index = k;
  return h;
}

double FiniteClass::evaluate(const Hypothesis& h, const Feature& x) const
{
  return members_.at(h.index)(x);
}

std::vector<Hypothesis> FiniteClass::parameter_grid(double) const
{
  std::vector<Hypothesis> all;
  for (std::size_t k = 0; k < members_.size(); ++k) {
    all.push_back(at(k));
  }
  return all;
}

ErmResult FiniteClass::do_solve(const MixedErmQuery& query) const
{
  ErmResult best{at(0), std::numeric_limits<double>::infinity()};
  for (std::size_t k = 0; k < members_.size(); ++k) {
    double obj = 0.0;
    for (const auto& p : query.pairs) {
      obj += p.weight * loss_unchecked(query.loss, members_[k](p.x), p.y);
    }
    double linear = 0.0;
    for (const auto& s : query.signed_terms) {
      linear += s.sign * members_[k](s.x);
    }
    obj += query.coefficient * linear;
    if (obj < best.objective - kTieEps) {
      best = {at(k), obj};
    }
  }
  return best;
}

// ---------------------------------------------------------------- lipschitz

LipschitzClass::LipschitzClass(int dim) : dim_(dim)
{
  if (dim < 1 || dim > kMaxFeatureDim) {
    throw ConfigError("lipschitz class dimension out of range");
  }
}

double LipschitzClass::evaluate(const Hypothesis& h, const Feature& x) const
{
  if (!h.anchors || h.anchors->empty()) {
    return 0.0;
  }
  double v = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < h.anchors->size(); ++i) {
    v = std::max(v, h.params[static_cast<Eigen::Index>(i)] - distance_inf(x, (*h.anchors)[i]));
  }
  return std::clamp(v, 0.0, 1.0);
}

namespace
{

// min c'x s.t. Ax <= b, x >= 0 with b >= 0, so the slack basis is feasible. Dense tableau, Bland's rule.
Eigen::VectorXd simplex_min(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c)
{
  constexpr double eps = 1e-11;
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
  T.topLeftCorner(m, n) = A;
  T.block(0, n, m, m).setIdentity();
  T.topRightCorner(m, 1) = b;
  T.bottomLeftCorner(1, n) = c.transpose();
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  std::iota(basis.begin(), basis.end(), n);

  while (true) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < n + m; ++j) {
      if (T(m, j) < -eps) {
        enter = j;
        break;
      }
    }
    if (enter < 0) {
      break;
    }
    Eigen::Index leave = -1;
    double ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (T(i, enter) > eps) {
        const double r = T(i, n + m) / T(i, enter);
        if (r < ratio - eps || (r <= ratio + eps && leave >= 0 && basis[i] < basis[leave])) {
          ratio = r;
          leave = i;
        }
      }
    }
    if (leave < 0) {
      throw InvariantBreach("lipschitz LP is unbounded");
    }
    T.row(leave) /= T(leave, enter);
    for (Eigen::Index i = 0; i <= m; ++i) {
      if (i != leave && T(i, enter) != 0.0) {
        T.row(i) -= T(i, enter) * T.row(leave);
      }
    }
    basis[static_cast<std::size_t>(leave)] = enter;
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (basis[i] < n) {
      x[basis[i]] = T(i, n + m);
    }
  }
  return x;
}

}  // namespace

ErmResult LipschitzClass::do_solve(const MixedErmQuery& query) const
{
  if (query.loss.kind != LossKind::Absolute) {
    throw UnsupportedError("lipschitz oracle supports the absolute loss only");
  }
  // Distinct anchors with their attached labels and linear coefficients.
  auto anchors = std::make_shared<std::vector<Feature>>();
  std::vector<std::size_t> pair_slot;
  std::vector<double> linear;
  auto slot = [&](const Feature& x) {
    if (x.dim() != dim_) {
      throw UnsupportedError("lipschitz class dimension mismatch");
    }
    for (std::size_t i = 0; i < anchors->size(); ++i) {
      if ((*anchors)[i] == x) {
        return i;
      }
    }
    anchors->push_back(x);
    linear.push_back(0.0);
    return anchors->size() - 1;
  };
  for (const auto& p : query.pairs) {
    pair_slot.push_back(slot(p.x));
  }
  for (const auto& s : query.signed_terms) {
    linear[slot(s.x)] += query.coefficient * s.sign;
  }
  const auto n = static_cast<Eigen::Index>(anchors->size());
  Hypothesis h;
  h.anchors = anchors;
  if (n == 0) {
    return {h, 0.0};
  }

  // |v - y| = (y - v) + 2 max(0, v - y): one slack s_p >= v - y per pair keeps every right-hand side >= 0.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> edges;
  if (dim_ == 1) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return (*anchors)[a].scalar() < (*anchors)[b].scalar(); });
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
      edges.emplace_back(order[k], order[k + 1]);
      edges.emplace_back(order[k + 1], order[k]);
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i != j) {
          edges.emplace_back(i, j);
        }
      }
    }
  }
  const auto P = static_cast<Eigen::Index>(query.pairs.size());
  const Eigen::Index rows = P + static_cast<Eigen::Index>(edges.size()) + n;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, n + P);
  Eigen::VectorXd b(rows);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n + P);
  for (Eigen::Index i = 0; i < n; ++i) {
    c[i] = linear[static_cast<std::size_t>(i)];
  }
  Eigen::Index r = 0;
  for (Eigen::Index p = 0; p < P; ++p, ++r) {
    const auto& pair = query.pairs[static_cast<std::size_t>(p)];
    const auto i = static_cast<Eigen::Index>(pair_slot[static_cast<std::size_t>(p)]);
    c[i] -= pair.weight;
    c[n + p] = 2.0 * pair.weight;
    A(r, i) = 1.0;
    A(r, n + p) = -1.0;
    b[r] = pair.y;
  }
  for (const auto& [i, j] : edges) {
    A(r, i) = 1.0;
    A(r, j) = -1.0;
    b[r] = distance_inf((*anchors)[i], (*anchors)[j]);
    ++r;
  }
  for (Eigen::Index i = 0; i < n; ++i, ++r) {
    A(r, i) = 1.0;
    b[r] = 1.0;
  }
  const Eigen::VectorXd x = simplex_min(A, b, c);
  // Pivoting round-off can break a constraint by an ulp; the lower McShane extension restores them.
  const Eigen::VectorXd raw = x.head(n).cwiseMax(0.0).cwiseMin(1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = raw[i];
    for (Eigen::Index j = 0; j < n; ++j) {
      best = std::max(best, raw[j] - distance_inf((*anchors)[i], (*anchors)[j]));
    }
    v[i] = std::min(best, 1.0);
  }

  double obj = 0.0;
  for (Eigen::Index p = 0; p < P; ++p) {
    const auto& pair = query.pairs[static_cast<std::size_t>(p)];
    obj += pair.weight * std::abs(v[static_cast<Eigen::Index>(pair_slot[static_cast<std::size_t>(p)])] - pair.y);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    obj += linear[static_cast<std::size_t>(i)] * v[i];
  }
  h.params = std::move(v);
  return {h, obj};
}

// ---------------------------------------------------------------- reference

ErmResult reference_solve(const HypothesisClass& cls, const MixedErmQuery& query, double grid_step)
{
  if (!(grid_step > 0.0)) {
    throw InputError("grid step must be positive");
  }
  ErmResult best{{}, std::numeric_limits<double>::infinity()};
  for (auto& h : cls.parameter_grid(grid_step)) {
    const double obj = query_objective(cls, h, query);
    if (obj < best.objective - kTieEps) {
      best = {std::move(h), obj};
    }
  }
  return best;
}

}  // namespace hol
