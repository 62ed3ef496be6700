#include "hol/bandit.hpp"

#include "hol/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hol
{

namespace
{

constexpr std::uint64_t kFeatureStream = 11;
constexpr std::uint64_t kDrawStream = 12;
constexpr std::uint64_t kActionStream = 13;

}  // namespace

PolicyClass::PolicyClass(std::vector<Policy> policies, int arms) : policies_(std::move(policies)), arms_(arms)
{
  if (policies_.empty()) {
    throw ConfigError("policy class must be nonempty");
  }
  if (arms < 1) {
    throw ConfigError("need at least one arm");
  }
}

PolicyClass PolicyClass::constant_arms(int arms)
{
  std::vector<Policy> ps;
  for (int k = 0; k < arms; ++k) {
    ps.emplace_back([k](const Feature&) { return k; });
  }
  return PolicyClass(std::move(ps), arms);
}

PolicyClass PolicyClass::standard4()
{
  std::vector<Policy> ps;
  ps.emplace_back([](const Feature&) { return 0; });
  ps.emplace_back([](const Feature&) { return 1; });
  ps.emplace_back([](const Feature& x) { return x.scalar() < 0.5 ? 0 : 1; });
  ps.emplace_back([](const Feature& x) { return x.scalar() < 0.5 ? 1 : 0; });
  return PolicyClass(std::move(ps), 2);
}

int PolicyClass::action(std::size_t policy, const Feature& x) const
{
  const int a = policies_.at(policy)(x);
  if (a < 0 || a >= arms_) {
    throw InvariantBreach("policy returned an arm outside [0, K)");
  }
  return a;
}

double gamma_default(std::size_t class_size, int arms, std::size_t horizon)
{
  if (class_size < 2 || arms < 2 || horizon < 1) {
    throw ConfigError("gamma_default needs |H| >= 2, K >= 2 and M >= 1");
  }
  const double g = std::cbrt(std::log(static_cast<double>(class_size)) /
                             (static_cast<double>(arms) * static_cast<double>(horizon)));
  return std::min(g, 1.0 / arms);
}

PolicyErmResult policy_erm(const PolicyClass& cls, const std::vector<WeightedContext>& pairs)
{
  cls.count_call();
  PolicyErmResult best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t h = 0; h < cls.size(); ++h) {
    double total = 0.0;
    for (const auto& p : pairs) {
      total += p.weights[cls.action(h, p.x)];
    }
    if (total < best.objective) {
      best = {h, total};
    }
  }
  return best;
}

BanditDraw draw_bandit(const SidePool& pool, std::size_t count, int arms, double gamma, Rng& rng)
{
  const RelaxationDraw base = draw_halluc(pool, count, rng);
  BanditDraw d;
  d.halluc = base.halluc;
  std::bernoulli_distribution active(std::min(1.0, gamma * arms));
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::VectorXd s(arms);
    for (int k = 0; k < arms; ++k) {
      s[k] = (rng() >> 63) ? 1.0 : -1.0;
    }
    d.signs.push_back(s);
    d.z.push_back(active(rng) ? 1.0 / gamma : 0.0);
  }
  return d;
}

Eigen::VectorXd phi_values(const std::vector<WeightedContext>& estimated_history, const Feature& x,
                           const BanditDraw& draw, const PolicyClass& cls, double gamma)
{
  const int K = cls.arms();
  std::vector<WeightedContext> pairs = estimated_history;
  for (std::size_t i = 0; i < draw.halluc.size(); ++i) {
    pairs.push_back({draw.halluc[i], 2.0 * draw.z[i] * draw.signs[i]});
  }
  pairs.push_back({x, Eigen::VectorXd::Zero(K)});
  Eigen::VectorXd phi(K + 1);
  phi[0] = policy_erm(cls, pairs).objective;
  for (int k = 0; k < K; ++k) {
    pairs.back().weights = Eigen::VectorXd::Unit(K, k) / gamma;
    phi[k + 1] = policy_erm(cls, pairs).objective;
  }
  return phi;
}

double waterfill_objective(const Eigen::VectorXd& q, const Eigen::VectorXd& b)
{
  return (q - b.cwiseMax(0.0)).cwiseMax(0.0).sum();
}

Waterfill waterfill_q(const Eigen::VectorXd& b)
{
  const auto K = b.size();
  if (K < 1) {
    throw InputError("waterfill needs at least one arm");
  }
  const Eigen::VectorXd bp = b.cwiseMax(0.0);
  const double s = bp.sum();
  Waterfill w;
  if (s >= 1.0) {
    w.q = bp / s;
  } else {
    w.q = bp.array() + (1.0 - s) / static_cast<double>(K);
  }
  w.g = waterfill_objective(w.q, b);
  return w;
}

Eigen::VectorXd mix_q(const Eigen::VectorXd& qhat, double gamma)
{
  const auto K = static_cast<double>(qhat.size());
  if (!(gamma >= 0.0 && gamma * K <= 1.0 + 1e-12)) {
    throw ConfigError("mixing needs 0 <= gamma <= 1/K");
  }
  return (1.0 - gamma * K) * qhat.array() + gamma;
}

Eigen::VectorXd estimate_cost(int arm, double observed_cost, const Eigen::VectorXd& q, double gamma, Rng& rng)
{
  require_unit(observed_cost, "observed cost");
  if (q[arm] < gamma - 1e-12) {
    throw InvariantBreach("q[arm] below the exploration floor gamma");
  }
  const double p = std::min(1.0, gamma * observed_cost / q[arm]);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(q.size());
  if (std::bernoulli_distribution(p)(rng)) {
    c[arm] = 1.0 / gamma;
  }
  return c;
}

namespace
{

class ConstantCosts final : public CostAdversary
{
public:
  explicit ConstantCosts(Eigen::VectorXd c) : c_(std::move(c)) {}
  Eigen::VectorXd costs(std::size_t, const Feature&) const override { return c_; }
  std::string name() const override { return "constant"; }

private:
  Eigen::VectorXd c_;
};

class ThresholdCosts final : public CostAdversary
{
public:
  ThresholdCosts(double threshold, Eigen::VectorXd low, Eigen::VectorXd high)
      : threshold_(threshold), low_(std::move(low)), high_(std::move(high))
  {
  }
  Eigen::VectorXd costs(std::size_t, const Feature& x) const override
  {
    return x.scalar() < threshold_ ? low_ : high_;
  }
  std::string name() const override { return "context_threshold"; }

private:
  double threshold_;
  Eigen::VectorXd low_;
  Eigen::VectorXd high_;
};

void require_cost_vector(const Eigen::VectorXd& c)
{
  if (c.size() < 1) {
    throw ConfigError("cost vector must be nonempty");
  }
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    require_unit(c[i], "cost");
  }
}

int sample_arm(const Eigen::VectorXd& q, Rng& rng)
{
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < q.size(); ++k) {
    acc += q[k];
    if (u < acc) {
      return static_cast<int>(k);
    }
  }
  return static_cast<int>(q.size() - 1);
}

}  // namespace

CostAdversaryPtr constant_costs(Eigen::VectorXd c)
{
  require_cost_vector(c);
  return std::make_shared<ConstantCosts>(std::move(c));
}

CostAdversaryPtr context_threshold_costs(double threshold, Eigen::VectorXd low, Eigen::VectorXd high)
{
  require_cost_vector(low);
  require_cost_vector(high);
  if (low.size() != high.size()) {
    throw ConfigError("cost vectors must have equal length");
  }
  return std::make_shared<ThresholdCosts>(threshold, std::move(low), std::move(high));
}

BanditTrace run_bandit(const PolicyClass& cls, const ShiftingProcess& env, const CostAdversary& adversary,
                       std::size_t T, const BanditConfig& config)
{
  if (T < 1) {
    throw InputError("horizon T must be >= 1");
  }
  const int K = cls.arms();
  if (config.gamma && !(*config.gamma > 0.0 && *config.gamma * K <= 1.0 + 1e-12)) {
    throw ConfigError("gamma must lie in (0, 1/K]");
  }
  const EpochSchedule schedule = EpochSchedule::polynomial(1.5);

  BanditTrace trace;
  std::vector<Feature> xs;
  std::vector<Eigen::VectorXd> costs;
  std::vector<WeightedContext> estimated;
  std::size_t current_epoch = 0;
  double gamma = 0.0;

  for (std::size_t t = 1; t <= T; ++t) {
    const EpochIndex idx = schedule.locate(t);
    const std::size_t m = schedule.length(idx.n);
    if (idx.n != current_epoch) {
      current_epoch = idx.n;
      estimated.clear();
      gamma = config.gamma ? *config.gamma : gamma_default(cls.size(), K, m);
    }
    Rng feature_rng(derive_seed(config.seed, {kFeatureStream, t}));
    xs.push_back(env.sample(t, feature_rng));
    const Feature& x = xs.back();

    const SidePool pool(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(idx.start));
    const std::size_t count = std::min(m - idx.j, pool.size());
    Rng draw_rng(derive_seed(config.seed, {kDrawStream, t}));
    const BanditDraw draw = draw_bandit(pool, count, K, gamma, draw_rng);

    const std::uint64_t before = cls.calls();
    const Eigen::VectorXd phi = phi_values(estimated, x, draw, cls, gamma);
    const Eigen::VectorXd b = gamma * (phi.tail(K).array() - phi[0]).matrix();
    const Eigen::VectorXd q = mix_q(waterfill_q(b).q, gamma);
    if (q.minCoeff() < gamma - 1e-12 || std::abs(q.sum() - 1.0) > 1e-9) {
      throw InvariantBreach("mixed distribution lost its exploration floor");
    }

    Rng action_rng(derive_seed(config.seed, {kActionStream, t}));
    const int arm = sample_arm(q, action_rng);
    Eigen::VectorXd c = adversary.costs(t, x);
    if (c.size() != K) {
      throw AdversaryFault("cost vector length differs from the arm count");
    }
    for (Eigen::Index k = 0; k < c.size(); ++k) {
      if (!(c[k] >= 0.0 && c[k] <= 1.0)) {
        throw AdversaryFault(adversary.name() + " emitted a cost outside [0,1]");
      }
    }
    estimated.push_back({x, estimate_cost(arm, c[arm], q, gamma, action_rng)});
    costs.push_back(c);

    BanditRow row;
    row.t = t;
    row.epoch = idx.n;
    row.j = idx.j;
    row.arm = arm;
    row.gamma = gamma;
    row.q = q;
    row.expected_loss = q.dot(c);
    row.realized_cost = c[arm];
    row.erm_calls = cls.calls() - before;
    trace.rows.push_back(row);
  }

  // Comparator over the true costs; this call is bookkeeping and is not charged to any round.
  std::vector<WeightedContext> truth;
  truth.reserve(T);
  for (std::size_t i = 0; i < T; ++i) {
    truth.push_back({xs[i], costs[i]});
  }
  const PolicyClass scratch(cls);
  const PolicyErmResult best = policy_erm(scratch, truth);
  trace.comparator = best.policy;
  trace.comparator_cost = best.objective;

  double cum = 0.0;
  for (std::size_t i = 0; i < T; ++i) {
    auto& row = trace.rows[i];
    row.comparator_cost = costs[i][cls.action(best.policy, xs[i])];
    cum += row.expected_loss - row.comparator_cost;
    row.cumulative_regret = cum;
    trace.erm_calls_total += row.erm_calls;
  }
  trace.regret = cum;
  return trace;
}

}  // namespace hol
