#include "hol/verify.hpp"

#include "hol/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace hol
{

void CheckReport::record(double margin, double se)
{
  ++instances;
  worst_margin = std::min(worst_margin, margin);
  std_error = std::max(std_error, se);
  if (margin < 0.0) {
    passed = false;
  }
}

std::string CheckReport::line() const
{
  std::ostringstream os;
  os << (passed ? "PASS " : "FAIL ") << name << " instances=" << instances << " worst_margin=" << worst_margin
     << " std_error=" << std_error;
  if (!note.empty()) {
    os << " note=\"" << note << "\"";
  }
  return os.str();
}

// ---------------------------------------------------------------- rademacher

double rademacher_sup(const HypothesisClass& cls, const std::vector<Feature>& xs, const std::vector<int>& signs)
{
  MixedErmQuery q;
  q.coefficient = 1.0;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    q.signed_terms.push_back({-signs[t], xs[t]});
  }
  return -cls.solve(q).objective;
}

McEstimate estimate_rademacher(const HypothesisClass& cls, const std::vector<Feature>& xs, std::size_t mc_samples,
                               Rng& rng)
{
  McAccumulator acc;
  std::vector<int> signs(xs.size());
  for (std::size_t s = 0; s < mc_samples; ++s) {
    for (auto& e : signs) {
      e = (rng() >> 63) ? 1 : -1;
    }
    acc.add(rademacher_sup(cls, xs, signs));
  }
  return acc.result();
}

double exact_rademacher(const HypothesisClass& cls, const std::vector<Feature>& xs)
{
  const std::size_t T = xs.size();
  if (T > 24) {
    throw InputError("exhaustive sign enumeration is limited to T <= 24");
  }
  std::vector<int> signs(T);
  double total = 0.0;
  const std::uint64_t patterns = std::uint64_t{1} << T;
  for (std::uint64_t mask = 0; mask < patterns; ++mask) {
    for (std::size_t t = 0; t < T; ++t) {
      signs[t] = ((mask >> t) & 1U) ? 1 : -1;
    }
    total += rademacher_sup(cls, xs, signs);
  }
  return total / static_cast<double>(patterns);
}

double expected_abs_walk(std::size_t T)
{
  const auto n = static_cast<double>(T);
  double total = 0.0;
  for (std::size_t k = 0; k <= T; ++k) {
    const auto kd = static_cast<double>(k);
    const double log_p = std::lgamma(n + 1) - std::lgamma(kd + 1) - std::lgamma(n - kd + 1) - n * std::log(2.0);
    total += std::exp(log_p) * std::abs(2.0 * kd - n);
  }
  return total;
}

// ---------------------------------------------------------------- fixtures

namespace
{

std::shared_ptr<const HypothesisClass> table_class(const std::vector<double>& support, const Eigen::MatrixXd& table)
{
  return std::make_shared<FiniteClass>(FiniteClass::table(support, table));
}

std::vector<Feature> features(const std::vector<double>& xs)
{
  std::vector<Feature> out;
  for (double x : xs) {
    out.emplace_back(x);
  }
  return out;
}

Feature sample_support(const TinyScenario& s, Rng& rng)
{
  std::discrete_distribution<std::size_t> pick(s.probs.begin(), s.probs.end());
  return s.support[pick(rng)];
}

// Random histories of the given length, labels drawn from {0, 1/2, 1}.
std::vector<LabeledPair> random_history(const TinyScenario& s, std::size_t length, Rng& rng)
{
  std::vector<LabeledPair> h;
  std::uniform_int_distribution<int> lab(0, 2);
  for (std::size_t i = 0; i < length; ++i) {
    h.push_back({sample_support(s, rng), 0.5 * lab(rng), 1.0});
  }
  return h;
}

void add_random_histories(TinyScenario& s, std::size_t per_length, Rng& rng)
{
  s.histories.push_back({});
  for (std::size_t len = 1; len < s.horizon; ++len) {
    for (std::size_t k = 0; k < per_length; ++k) {
      s.histories.push_back(random_history(s, len, rng));
    }
  }
}

}  // namespace

TinyScenario singleton_fixture()
{
  TinyScenario s;
  s.name = "singleton";
  s.cls = std::make_shared<FiniteClass>(FiniteClass::constants({0.5}));
  s.support = features({0.3, 0.7});
  s.probs = {0.5, 0.5};
  s.horizon = 1;
  s.histories = {{}};
  return s;
}

TinyScenario mismatched_pool_fixture()
{
  TinyScenario s;
  s.name = "mismatched_pool";
  Eigen::MatrixXd t(2, 2);
  t << 0, 0, 0, 1;
  s.cls = table_class({0.2, 0.8}, t);
  s.support = features({0.2});
  s.probs = {1.0};
  s.pool = features({0.8, 0.8});
  s.horizon = 2;
  s.histories = {{}, {{Feature(0.2), 1.0, 1.0}}, {{Feature(0.2), 0.5, 1.0}}};
  return s;
}

std::vector<TinyScenario> admissibility_fixtures(std::uint64_t seed)
{
  Rng rng(derive_seed(seed, {0xad}));
  std::vector<TinyScenario> out;
  out.push_back(singleton_fixture());

  {
    TinyScenario s;
    s.name = "two_constants";
    s.cls = std::make_shared<FiniteClass>(FiniteClass::constants({0.0, 1.0}));
    s.support = features({0.2, 0.8});
    s.probs = {0.5, 0.5};
    s.pool = features({0.2, 0.8});
    s.horizon = 2;
    s.histories = {{},
                   {{Feature(0.2), 0.0, 1.0}},
                   {{Feature(0.8), 1.0, 1.0}},
                   {{Feature(0.2), 0.5, 1.0}}};
    out.push_back(s);
  }
  {
    TinyScenario s;
    s.name = "binary_table";
    const std::vector<double> xs = {0.1, 0.4, 0.6, 0.9};
    Eigen::MatrixXd t(6, 4);
    t << 0, 0, 0, 0,
         0, 0, 0, 1,
         0, 0, 1, 1,
         0, 1, 1, 1,
         1, 1, 1, 1,
         0, 0, 0, 0;
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < 4; ++i) {
      t(5, i) = coin(rng) ? 1.0 : 0.0;
    }
    s.cls = table_class(xs, t);
    s.support = features(xs);
    s.probs = {0.4, 0.3, 0.2, 0.1};
    for (int i = 0; i < 6; ++i) {
      s.pool.push_back(sample_support(s, rng));
    }
    s.horizon = 3;
    add_random_histories(s, 3, rng);
    out.push_back(s);
  }
  {
    TinyScenario s;
    s.name = "real_table";
    const std::vector<double> xs = {0.25, 0.5, 0.75};
    Eigen::MatrixXd t(5, 3);
    std::uniform_int_distribution<int> level(0, 4);
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 3; ++c) {
        t(r, c) = 0.25 * level(rng);
      }
    }
    s.cls = table_class(xs, t);
    s.support = features(xs);
    s.probs = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    s.probs.back() = 1.0 - s.probs[0] - s.probs[1];
    for (int i = 0; i < 5; ++i) {
      s.pool.push_back(sample_support(s, rng));
    }
    s.horizon = 3;
    add_random_histories(s, 3, rng);
    out.push_back(s);
  }
  out.push_back(mismatched_pool_fixture());
  {
    TinyScenario s;
    s.name = "squared_loss";
    s.cls = std::make_shared<FiniteClass>(FiniteClass::constants({0.1, 0.6, 0.9}));
    s.loss = LossFn::squared();
    s.support = features({0.3, 0.7});
    s.probs = {0.5, 0.5};
    s.pool = features({0.3, 0.7, 0.3});
    s.horizon = 2;
    s.histories = {{}, {{Feature(0.3), 0.2, 1.0}}, {{Feature(0.7), 1.0, 1.0}}};
    out.push_back(s);
  }
  return out;
}

std::vector<TinyScenario> decomposition_fixtures()
{
  std::vector<TinyScenario> out;
  {
    TinyScenario s = singleton_fixture();
    s.horizon = 2;
    s.pool = features({0.3, 0.7});
    out.push_back(s);
  }
  {
    TinyScenario s;
    s.name = "two_constants";
    s.cls = std::make_shared<FiniteClass>(FiniteClass::constants({0.0, 1.0}));
    s.support = features({0.2, 0.8});
    s.probs = {0.5, 0.5};
    s.pool = features({0.2, 0.8});
    s.horizon = 2;
    out.push_back(s);
  }
  {
    TinyScenario s;
    s.name = "binary_table";
    Eigen::MatrixXd t(3, 2);
    t << 0, 1, 1, 0, 1, 1;
    s.cls = table_class({0.3, 0.7}, t);
    s.support = features({0.3, 0.7});
    s.probs = {0.6, 0.4};
    s.pool = features({0.3, 0.7, 0.7});
    s.horizon = 2;
    out.push_back(s);
  }
  out.push_back(mismatched_pool_fixture());
  return out;
}

// ---------------------------------------------------------------- admissibility

CheckReport check_admissibility(const std::vector<TinyScenario>& scenarios, const AdmissibilityOptions& options)
{
  CheckReport report;
  report.name = "admissibility";
  const std::vector<double> ys = y_grid(options.y_step);

  for (std::size_t si = 0; si < scenarios.size(); ++si) {
    const TinyScenario& sc = scenarios[si];
    const double L = sc.loss.lipschitz;
    PredictorConfig pcfg;
    pcfg.horizon = sc.horizon;
    pcfg.loss = sc.loss;
    pcfg.y_grid_step = options.y_step;
    pcfg.yhat_tolerance = options.yhat_tolerance;

    for (std::size_t hi = 0; hi < sc.histories.size(); ++hi) {
      const auto& hist = sc.histories[hi];
      const std::size_t j = hist.size() + 1;
      if (j > sc.horizon) {
        throw InputError("history fixture longer than the horizon");
      }
      const std::size_t count = sc.horizon - j;
      const std::size_t samples = count == 0 ? 1 : options.mc_samples;
      Rng rng(derive_seed(options.seed, {si, hi}));

      double lhs = 0.0;
      double rhs = 0.0;
      double var_l = 0.0;
      double var_r = 0.0;
      for (std::size_t xi = 0; xi < sc.support.size(); ++xi) {
        const Feature& x = sc.support[xi];
        const double p = sc.probs[xi];
        std::vector<McAccumulator> per_y(ys.size());
        McAccumulator right;
        GameHistory gh{hist, x};
        const bool fast = fast_path_eligible(gh, *sc.cls, sc.loss);
        for (std::size_t s = 0; s < samples; ++s) {
          const RelaxationDraw draw = draw_halluc(sc.pool, count, rng);
          const OuterObjective phi = outer_objective(gh, draw, *sc.cls, pcfg);
          const double yhat = fast ? fast_yhat(phi.values.front(), phi.values.back())
                                   : minimize_outer(phi, pcfg.tolerance());
          const double played = std::clamp(yhat + options.corruption, 0.0, 1.0);
          for (std::size_t k = 0; k < ys.size(); ++k) {
            per_y[k].add(loss_unchecked(sc.loss, played, ys[k]) + phi.values[k]);
          }
          std::vector<int> signs{1};
          signs.insert(signs.end(), draw.signs.begin(), draw.signs.end());
          const double up = f_eval(hist, draw.halluc, signs, x, *sc.cls, sc.loss);
          signs[0] = -1;
          const double down = f_eval(hist, draw.halluc, signs, x, *sc.cls, sc.loss);
          right.add(0.5 * (up + down));
        }
        std::size_t best = 0;
        for (std::size_t k = 1; k < ys.size(); ++k) {
          if (per_y[k].result().mean > per_y[best].result().mean) {
            best = k;
          }
        }
        const McEstimate l = per_y[best].result();
        const McEstimate r = right.result();
        lhs += p * l.mean;
        rhs += p * r.mean;
        var_l += p * p * l.std_error * l.std_error;
        var_r += p * p * r.std_error * r.std_error;
      }
      const double sigma = std::sqrt(var_l + var_r);
      // The predictor's argmin is only resolved to yhat_tolerance, worth at most L times that.
      const double allowed = rhs + 3.0 * sigma + L * pcfg.tolerance() + 1e-9;
      report.record(allowed - lhs, sigma);
    }
  }
  return report;
}

// ---------------------------------------------------------------- sensitivity

namespace
{

double lattice(Rng& rng, int steps)
{
  return std::uniform_int_distribution<int>(0, steps)(rng) / static_cast<double>(steps);
}

struct SensitivityInstance
{
  std::shared_ptr<const HypothesisClass> cls;
  LossFn loss;
  std::vector<Feature> probes;
  std::vector<LabeledPair> history;
  std::vector<Feature> tail;
  std::vector<int> signs;
};

SensitivityInstance random_sensitivity_instance(std::size_t index, Rng& rng)
{
  SensitivityInstance in;
  std::uniform_int_distribution<int> len(0, 4);
  std::uniform_int_distribution<int> tail_len(0, 3);
  std::vector<double> support;
  if (index % 3 == 2) {
    in.cls = std::make_shared<ThresholdClass>();
    in.loss = LossFn::absolute();
    for (int k = 0; k <= 100; ++k) {
      support.push_back(k / 100.0);
    }
  } else {
    const int n = std::uniform_int_distribution<int>(2, 6)(rng);
    const int m = std::uniform_int_distribution<int>(1, 8)(rng);
    for (int i = 0; i < n; ++i) {
      support.push_back((i + 0.5) / n);
    }
    Eigen::MatrixXd t(m, n);
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < n; ++c) {
        t(r, c) = lattice(rng, 20);
      }
    }
    in.cls = table_class(support, t);
    in.loss = index % 3 == 0 ? LossFn::absolute() : LossFn::squared();
  }
  in.probes = features(support);
  std::uniform_int_distribution<std::size_t> pick(0, support.size() - 1);
  const int j = len(rng);
  for (int i = 0; i < j; ++i) {
    in.history.push_back({in.probes[pick(rng)], lattice(rng, 20), 1.0});
  }
  const int r = tail_len(rng);
  for (int i = 0; i < r; ++i) {
    in.tail.push_back(in.probes[pick(rng)]);
  }
  for (int i = 0; i <= r; ++i) {
    in.signs.push_back((rng() >> 63) ? 1 : -1);
  }
  return in;
}

}  // namespace

CheckReport check_sensitivity(std::size_t count, std::uint64_t seed)
{
  CheckReport report;
  report.name = "sensitivity";
  Rng rng(derive_seed(seed, {0x5e}));
  for (std::size_t n = 0; n < count; ++n) {
    SensitivityInstance in = random_sensitivity_instance(n, rng);
    const double L = in.loss.lipschitz;
    const double j = static_cast<double>(in.history.size());

    std::vector<LabeledPair> perturbed = in.history;
    double delta = 0.0;
    std::uniform_real_distribution<double> shift(-0.1, 0.1);
    for (auto& p : perturbed) {
      const double y = std::clamp(p.y + shift(rng), 0.0, 1.0);
      delta = std::max(delta, std::abs(y - p.y));
      p.y = y;
    }

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double worst_label = std::numeric_limits<double>::infinity();
    for (const auto& x : in.probes) {
      const double f = f_eval(in.history, in.tail, in.signs, x, *in.cls, in.loss);
      const double g = f_eval(perturbed, in.tail, in.signs, x, *in.cls, in.loss);
      lo = std::min(lo, f);
      hi = std::max(hi, f);
      worst_label = std::min(worst_label, j * L * delta + 1e-9 - std::abs(f - g));
    }
    report.record(std::min(4.0 * L + 1e-9 - (hi - lo), worst_label));
  }
  return report;
}

// ---------------------------------------------------------------- binary structure

CheckReport check_binary_structure(std::size_t count, std::uint64_t seed)
{
  CheckReport report;
  report.name = "binary_structure";
  Rng rng(derive_seed(seed, {0xf2}));
  const LossFn loss = LossFn::absolute();
  for (std::size_t n = 0; n < count; ++n) {
    const int size = std::uniform_int_distribution<int>(2, 6)(rng);
    const int m = std::uniform_int_distribution<int>(1, 8)(rng);
    std::vector<double> support;
    for (int i = 0; i < size; ++i) {
      support.push_back((i + 0.5) / size);
    }
    Eigen::MatrixXd t(m, size);
    std::bernoulli_distribution coin(0.5);
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < size; ++c) {
        t(r, c) = coin(rng) ? 1.0 : 0.0;
      }
    }
    const FiniteClass cls = FiniteClass::table(support, t);
    const std::vector<Feature> xs = features(support);
    std::uniform_int_distribution<std::size_t> pick(0, xs.size() - 1);

    std::vector<LabeledPair> history;
    const int j = std::uniform_int_distribution<int>(0, 4)(rng);
    for (int i = 0; i < j; ++i) {
      history.push_back({xs[pick(rng)], coin(rng) ? 1.0 : 0.0, 1.0});
    }
    std::vector<Feature> tail;
    std::vector<int> signs{1};
    const int r = std::uniform_int_distribution<int>(0, 3)(rng);
    for (int i = 0; i < r; ++i) {
      tail.push_back(xs[pick(rng)]);
      signs.push_back(coin(rng) ? 1 : -1);
    }

    // F(h) = 2 sum eps_i h(x~_i) - L_j^h, integer valued.
    std::vector<double> F(m, 0.0);
    for (int h = 0; h < m; ++h) {
      for (int i = 0; i < r; ++i) {
        F[h] += 2.0 * signs[i + 1] * cls.value(h, tail[i]);
      }
      for (const auto& p : history) {
        F[h] -= std::abs(cls.value(h, p.x) - p.y);
      }
    }
    const double fmax = *std::max_element(F.begin(), F.end());

    double worst = std::numeric_limits<double>::infinity();
    for (const auto& x : xs) {
      double h0 = 0.0;
      double h1 = 0.0;
      for (int h = 0; h < m; ++h) {
        if (F[h] == fmax) {
          h0 = std::max(h0, cls.value(h, x));
        } else if (F[h] == fmax - 1.0) {
          h1 = std::max(h1, cls.value(h, x));
        }
      }
      const double predicted = h0 == 1.0 ? fmax + 2.0 : (h1 == 1.0 ? fmax + 1.0 : fmax);
      const double direct = f_eval(history, tail, signs, x, cls, loss);
      worst = std::min(worst, 1e-9 - std::abs(predicted - direct));
    }
    report.record(worst);
  }
  return report;
}

// ---------------------------------------------------------------- decomposition

namespace
{

// Every ordered subsequence of distinct pool entries of length c, combined with every sign pattern.
std::vector<RelaxationDraw> enumerate_draws(const SidePool& pool, std::size_t c, std::size_t limit)
{
  std::vector<RelaxationDraw> out;
  if (c > pool.size()) {
    throw PoolExhaustedError("pool too small for exact enumeration");
  }
  double total = std::ldexp(1.0, static_cast<int>(c));
  for (std::size_t i = 0; i < c; ++i) {
    total *= static_cast<double>(pool.size() - i);
  }
  if (total > static_cast<double>(limit)) {
    throw ConfigError("scenario too large for exact enumeration");
  }
  std::vector<std::size_t> idx;
  std::vector<bool> used(pool.size(), false);
  std::function<void()> rec = [&]() {
    if (idx.size() == c) {
      for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << c); ++mask) {
        RelaxationDraw d;
        for (std::size_t i = 0; i < c; ++i) {
          d.halluc.push_back(pool[idx[i]]);
          d.signs.push_back(((mask >> i) & 1U) ? 1 : -1);
        }
        out.push_back(std::move(d));
      }
      return;
    }
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!used[i]) {
        used[i] = true;
        idx.push_back(i);
        rec();
        idx.pop_back();
        used[i] = false;
      }
    }
  };
  rec();
  return out;
}

class Decomposition
{
public:
  Decomposition(const TinyScenario& sc, const DecompositionOptions& opt)
      : sc_(sc), opt_(opt), ys_(y_grid(opt.y_step))
  {
    pcfg_.horizon = sc.horizon;
    pcfg_.loss = sc.loss;
    pcfg_.y_grid_step = opt.y_step;
    pcfg_.yhat_tolerance = opt.yhat_tolerance;
  }

  // E_{x_j} max_y E_draw [ l(yhat, y) + value of the rest of the game ].
  double regret(std::size_t j, std::vector<LabeledPair>& pairs) const
  {
    if (j > sc_.horizon) {
      return -best_in_hindsight(*sc_.cls, pairs, sc_.loss).objective;
    }
    const auto draws = enumerate_draws(sc_.pool, sc_.horizon - j, opt_.max_enumeration);
    double total = 0.0;
    for (std::size_t xi = 0; xi < sc_.support.size(); ++xi) {
      const GameHistory gh{pairs, sc_.support[xi]};
      std::vector<double> preds;
      preds.reserve(draws.size());
      for (const auto& d : draws) {
        preds.push_back(predict(gh, d, *sc_.cls, pcfg_).yhat);
      }
      double best = -std::numeric_limits<double>::infinity();
      for (double y : ys_) {
        double expected = 0.0;
        for (double p : preds) {
          expected += loss_unchecked(sc_.loss, p, y);
        }
        expected /= static_cast<double>(preds.size());
        pairs.push_back({sc_.support[xi], y, 1.0});
        best = std::max(best, expected + regret(j + 1, pairs));
        pairs.pop_back();
      }
      total += sc_.probs[xi] * best;
    }
    return total;
  }

  double R(const std::vector<LabeledPair>& pairs) const
  {
    const std::size_t c = sc_.horizon - pairs.size();
    const auto draws = enumerate_draws(sc_.pool, c, opt_.max_enumeration);
    double total = 0.0;
    for (const auto& d : draws) {
      std::vector<SignedTerm> terms;
      for (std::size_t i = 0; i < c; ++i) {
        terms.push_back({d.signs[i], d.halluc[i]});
      }
      total += playout_sup(pairs, terms, *sc_.cls, sc_.loss);
    }
    return total / static_cast<double>(draws.size());
  }

  double Rtilde(const std::vector<LabeledPair>& pairs) const
  {
    const std::size_t c = sc_.horizon - pairs.size();
    if (c == 0) {
      return R(pairs);
    }
    const auto tails = enumerate_draws(sc_.pool, c - 1, opt_.max_enumeration);
    double total = 0.0;
    for (std::size_t xi = 0; xi < sc_.support.size(); ++xi) {
      double sum = 0.0;
      for (const auto& d : tails) {
        for (int first : {1, -1}) {
          std::vector<int> signs{first};
          signs.insert(signs.end(), d.signs.begin(), d.signs.end());
          sum += f_eval(pairs, d.halluc, signs, sc_.support[xi], *sc_.cls, sc_.loss);
        }
      }
      total += sc_.probs[xi] * sum / (2.0 * static_cast<double>(tails.size()));
    }
    return total;
  }

  // E_{x^j} max_{y^j} (R~_j - R_j).
  double discrepancy(std::size_t j) const
  {
    double total = 0.0;
    std::vector<LabeledPair> pairs;
    std::function<void(double)> over_x = [&](double weight) {
      if (pairs.size() == j) {
        double best = -std::numeric_limits<double>::infinity();
        std::function<void(std::size_t)> over_y = [&](std::size_t k) {
          if (k == j) {
            best = std::max(best, Rtilde(pairs) - R(pairs));
            return;
          }
          for (double y : ys_) {
            pairs[k].y = y;
            over_y(k + 1);
          }
        };
        over_y(0);
        total += weight * best;
        return;
      }
      for (std::size_t xi = 0; xi < sc_.support.size(); ++xi) {
        pairs.push_back({sc_.support[xi], 0.0, 1.0});
        over_x(weight * sc_.probs[xi]);
        pairs.pop_back();
      }
    };
    over_x(1.0);
    return total;
  }

private:
  const TinyScenario& sc_;
  const DecompositionOptions& opt_;
  PredictorConfig pcfg_;
  std::vector<double> ys_;
};

}  // namespace

CheckReport check_decomposition(const std::vector<TinyScenario>& scenarios, const DecompositionOptions& options)
{
  CheckReport report;
  report.name = "decomposition";
  for (const auto& sc : scenarios) {
    const Decomposition d(sc, options);
    std::vector<LabeledPair> pairs;
    const double lhs = d.regret(1, pairs);
    double rhs = options.r0_scale * d.Rtilde({});
    for (std::size_t j = 1; j < sc.horizon; ++j) {
      rhs += d.discrepancy(j);
    }
    const double slack = sc.loss.lipschitz * options.yhat_tolerance * static_cast<double>(sc.horizon) + 1e-9;
    report.record(rhs + slack - lhs);
  }
  report.note = "exact enumeration";
  return report;
}

// ---------------------------------------------------------------- discrepancy probe

std::vector<DiscrepancyPoint> discrepancy_probe(const TinyScenario& sc, std::size_t mc_samples, std::uint64_t seed,
                                                DrawMode mode)
{
  std::vector<DiscrepancyPoint> out;
  Rng rng(derive_seed(seed, {0xd1}));
  std::uniform_real_distribution<double> label(0.0, 1.0);
  for (std::size_t j = 1; j < sc.horizon; ++j) {
    McAccumulator acc;
    for (std::size_t s = 0; s < mc_samples; ++s) {
      std::vector<LabeledPair> hist;
      for (std::size_t i = 0; i < j; ++i) {
        hist.push_back({sample_support(sc, rng), label(rng), 1.0});
      }
      // One playout for positions j+1..M; R_j evaluates f at x~_{j+1}, R~_j at a fresh x ~ mu.
      const RelaxationDraw d = draw_halluc(sc.pool, sc.horizon - j, rng, mode);
      const std::vector<Feature> tail(d.halluc.begin() + 1, d.halluc.end());
      const double r = f_eval(hist, tail, d.signs, d.halluc.front(), *sc.cls, sc.loss);
      const double rt = f_eval(hist, tail, d.signs, sample_support(sc, rng), *sc.cls, sc.loss);
      acc.add(rt - r);
    }
    DiscrepancyPoint p;
    p.j = j;
    p.discrepancy = acc.result();
    p.reference = std::sqrt(static_cast<double>(j) / static_cast<double>(std::max<std::size_t>(sc.pool.size(), 1)));
    out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------- suite

std::vector<CheckReport> run_verify_suite(const VerifyOptions& options)
{
  std::vector<CheckReport> out;
  const FiniteClass two = FiniteClass::constants({0.0, 1.0});

  {
    CheckReport r;
    r.name = "rademacher_exact_T2";
    const double v = exact_rademacher(two, features({0.3, 0.6}));
    r.record(1e-12 - std::abs(v - 0.5));
    out.push_back(r);
  }
  {
    CheckReport r;
    r.name = "rademacher_mc_T100";
    std::vector<Feature> xs(100, Feature(0.5));
    Rng rng(derive_seed(options.seed, {0x7ad}));
    const McEstimate e = estimate_rademacher(two, xs, options.rademacher_mc, rng);
    r.record(3.0 * e.std_error - std::abs(e.mean - 0.5 * expected_abs_walk(100)), e.std_error);
    r.note = "lower estimate: x^T fixed";
    out.push_back(r);
  }

  AdmissibilityOptions adm;
  adm.mc_samples = options.mc_samples;
  adm.seed = options.seed;
  out.push_back(check_admissibility(admissibility_fixtures(options.seed), adm));
  {
    AdmissibilityOptions bad = adm;
    bad.corruption = 0.3;
    CheckReport c = check_admissibility({singleton_fixture()}, bad);
    CheckReport r;
    r.name = "admissibility_negative_control";
    r.record(c.passed ? -1.0 : -c.worst_margin);
    r.note = "predictor shifted by +0.3 must violate the bound";
    out.push_back(r);
  }
  out.push_back(check_sensitivity(options.sensitivity_instances, options.seed));
  out.push_back(check_binary_structure(options.binary_structure_instances, options.seed));

  DecompositionOptions dec;
  out.push_back(check_decomposition(decomposition_fixtures(), dec));
  {
    DecompositionOptions bad = dec;
    bad.r0_scale = 0.5;
    CheckReport c = check_decomposition({mismatched_pool_fixture()}, bad);
    CheckReport r;
    r.name = "decomposition_negative_control";
    r.record(c.passed ? -1.0 : -c.worst_margin);
    r.note = "halved R~_0 must violate the bound";
    out.push_back(r);
  }
  return out;
}

}  // namespace hol
