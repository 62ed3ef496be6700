#ifndef HOL_BANDIT_HPP_
#define HOL_BANDIT_HPP_

#include "hol/core.hpp"
#include "hol/environment.hpp"
#include "hol/epochs.hpp"

#include <Eigen/Core>

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hol
{

/// A finite set of policies X -> {0, ..., K-1}. Arms are 0-based here; CSV output is too.
class PolicyClass
{
public:
  using Policy = std::function<int(const Feature&)>;

  PolicyClass(std::vector<Policy> policies, int arms);
  PolicyClass(const PolicyClass& other) : policies_(other.policies_), arms_(other.arms_) {}

  /// One policy per arm, each always pulling it.
  static PolicyClass constant_arms(int arms);
  /// Two arms: always 0, always 1, x < 1/2 -> 0 else 1, and x < 1/2 -> 1 else 0.
  static PolicyClass standard4();

  int action(std::size_t policy, const Feature& x) const;
  std::size_t size() const { return policies_.size(); }
  int arms() const { return arms_; }

  std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }
  void count_call() const { calls_.fetch_add(1, std::memory_order_relaxed); }

private:
  std::vector<Policy> policies_;
  int arms_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

/// (ln|H| / (K M))^{1/3} clipped to (0, 1/K].
double gamma_default(std::size_t class_size, int arms, std::size_t horizon);

struct WeightedContext
{
  Feature x;
  Eigen::VectorXd weights;  // one entry per arm
};

struct PolicyErmResult
{
  std::size_t policy = 0;
  double objective = 0.0;
};

/// argmin_h sum_i weights_i[h(x_i)] by enumeration; lowest index wins ties.
PolicyErmResult policy_erm(const PolicyClass& cls, const std::vector<WeightedContext>& pairs);

struct BanditDraw
{
  std::vector<Feature> halluc;
  std::vector<Eigen::VectorXd> signs;  // entries +-1, one vector per hallucinated round
  std::vector<double> z;               // 0 or 1/gamma
};

/// Hallucinated contexts without replacement, sign vectors and Z_i with P[Z_i = 1/gamma] = gamma K.
BanditDraw draw_bandit(const SidePool& pool, std::size_t count, int arms, double gamma, Rng& rng);

/// Phi_0 .. Phi_K for round j using K + 1 policy_erm calls.
Eigen::VectorXd phi_values(const std::vector<WeightedContext>& estimated_history, const Feature& x,
                           const BanditDraw& draw, const PolicyClass& cls, double gamma);

struct Waterfill
{
  Eigen::VectorXd q;
  double g = 0.0;
};

/// argmin over the simplex of g(q) = sum_k max(0, q_k - max(b_k, 0)).
Waterfill waterfill_q(const Eigen::VectorXd& b);

/// g(q) for a given q; exposed for brute-force comparisons.
double waterfill_objective(const Eigen::VectorXd& q, const Eigen::VectorXd& b);

/// (1 - gamma K) qhat + gamma 1.
Eigen::VectorXd mix_q(const Eigen::VectorXd& qhat, double gamma);

/// Importance-weighted estimate (I / gamma) e_arm with I ~ Bernoulli(gamma c / q[arm]).
Eigen::VectorXd estimate_cost(int arm, double observed_cost, const Eigen::VectorXd& q, double gamma, Rng& rng);

class CostAdversary
{
public:
  virtual ~CostAdversary() = default;
  virtual Eigen::VectorXd costs(std::size_t t, const Feature& x) const = 0;
  virtual std::string name() const = 0;
};

using CostAdversaryPtr = std::shared_ptr<const CostAdversary>;

CostAdversaryPtr constant_costs(Eigen::VectorXd c);
/// costs `low` when x < threshold, `high` otherwise.
CostAdversaryPtr context_threshold_costs(double threshold, Eigen::VectorXd low, Eigen::VectorXd high);

struct BanditRow
{
  std::size_t t = 0;
  std::size_t epoch = 1;
  std::size_t j = 1;
  int arm = 0;
  double gamma = 0.0;
  Eigen::VectorXd q;
  double expected_loss = 0.0;
  double realized_cost = 0.0;
  double comparator_cost = 0.0;
  double cumulative_regret = 0.0;
  std::uint64_t erm_calls = 0;
};

struct BanditTrace
{
  std::vector<BanditRow> rows;
  std::size_t comparator = 0;
  double comparator_cost = 0.0;
  double regret = 0.0;
  std::uint64_t erm_calls_total = 0;
};

struct BanditConfig
{
  std::optional<double> gamma;  // empty selects gamma_default per epoch
  std::uint64_t seed = 0;
};

/// Epochs of length round(n^{3/2}); estimated costs restart every epoch.
BanditTrace run_bandit(const PolicyClass& cls, const ShiftingProcess& env, const CostAdversary& adversary,
                       std::size_t T, const BanditConfig& config);

}  // namespace hol

#endif  // HOL_BANDIT_HPP_
