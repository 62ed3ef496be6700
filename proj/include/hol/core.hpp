#ifndef HOL_CORE_HPP_
#define HOL_CORE_HPP_

#include <Eigen/Core>

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace hol
{

// Error taxonomy. Every failure surfaced by the library is one of these.
struct InputError : std::invalid_argument { using std::invalid_argument::invalid_argument; };
struct DomainError : InputError { using InputError::InputError; };
struct ConfigError : std::invalid_argument { using std::invalid_argument::invalid_argument; };
struct UnsupportedError : std::logic_error { using std::logic_error::logic_error; };
struct PoolExhaustedError : std::out_of_range { using std::out_of_range::out_of_range; };
struct AdversaryFault : std::runtime_error { using std::runtime_error::runtime_error; };
struct InvariantBreach : std::logic_error { using std::logic_error::logic_error; };

using Rng = std::mt19937_64;

/// Mixes a base seed with a tag path into an independent stream seed (splitmix64 chain).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags);

inline constexpr int kMaxFeatureDim = 8;
using FeatureVector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxFeatureDim, 1>;

/// A point of the instance space [0,1]^d, d <= kMaxFeatureDim. Stored inline (no heap).
class Feature
{
public:
  Feature() : value_(FeatureVector::Zero(1)) {}
  explicit Feature(double x);
  explicit Feature(const Eigen::Ref<const Eigen::VectorXd>& x);

  Eigen::Index dim() const { return value_.size(); }
  double scalar() const;
  double operator[](Eigen::Index i) const { return value_[i]; }
  const FeatureVector& coords() const { return value_; }

  friend bool operator==(const Feature& a, const Feature& b)
  {
    return a.dim() == b.dim() && a.value_ == b.value_;
  }

private:
  FeatureVector value_;
};

/// Sup-norm distance.
double distance_inf(const Feature& a, const Feature& b);

/// Throws DomainError unless 0 <= v <= 1.
void require_unit(double v, const char* what);

enum class LossKind { Absolute, Custom };

/// Convex-in-prediction loss on [0,1]^2 with a declared Lipschitz constant.
struct LossFn
{
  LossKind kind = LossKind::Absolute;
  double lipschitz = 1.0;
  std::function<double(double, double)> evaluator;
  std::string name = "absolute";

  static LossFn absolute();
  /// Custom losses must declare L; the engine never estimates it.
  static LossFn custom(std::string name, double lipschitz, std::function<double(double, double)> fn);
  /// (a - y)^2, which is 2-Lipschitz on [0,1].
  static LossFn squared();
};

double loss_eval(const LossFn& loss, double prediction, double label);

/// Same as loss_eval without the domain checks; for inner loops over validated data.
inline double loss_unchecked(const LossFn& loss, double prediction, double label)
{
  if (loss.kind == LossKind::Absolute) {
    const double d = prediction - label;
    return d < 0 ? -d : d;
  }
  return loss.evaluator(prediction, label);
}

struct LabeledPair
{
  Feature x;
  double y = 0.0;
  double weight = 1.0;
};

struct SignedTerm
{
  int sign = 1;  // -1 or +1
  Feature x;
};

/// inf_h { sum_i w_i l(h(x_i), y_i) + C sum_j eps_j h(x~_j) }
struct MixedErmQuery
{
  std::vector<LabeledPair> pairs;
  std::vector<SignedTerm> signed_terms;
  double coefficient = 0.0;
  LossFn loss = LossFn::absolute();

  void validate() const;
};

struct PseudoLabel
{
  double label;
  double offset;
};

/// eps * v == |v - label| + offset for v in [0,1].
PseudoLabel signed_to_absolute(int sign);

/// Opaque handle identifying one member of a hypothesis class.
struct Hypothesis
{
  std::size_t index = 0;
  Eigen::VectorXd params;
  std::shared_ptr<const std::vector<Feature>> anchors;
};

struct ErmResult
{
  Hypothesis hypothesis;
  double objective = 0.0;
};

/// A class H of functions X -> [0,1] together with its mixed-ERM oracle.
///
/// solve() counts calls; counters are per instance, so give every worker its own clone().
class HypothesisClass
{
public:
  HypothesisClass() = default;
  HypothesisClass(const HypothesisClass&) : calls_(0) {}
  HypothesisClass& operator=(const HypothesisClass&) { return *this; }
  virtual ~HypothesisClass() = default;

  virtual double evaluate(const Hypothesis& h, const Feature& x) const = 0;

  ErmResult solve(const MixedErmQuery& query) const
  {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return do_solve(query);
  }

  /// Declared additive error of solve() on the objective; 0 for exact oracles.
  virtual double tolerance() const { return 0.0; }
  /// True if every member maps into {0,1}.
  virtual bool binary() const = 0;
  virtual std::string name() const = 0;
  virtual std::unique_ptr<HypothesisClass> clone() const = 0;

  /// Bounded parameterization for brute-force reference solves.
  virtual std::vector<Hypothesis> parameter_grid(double step) const;

  std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }
  void reset_calls() const { calls_.store(0, std::memory_order_relaxed); }

protected:
  virtual ErmResult do_solve(const MixedErmQuery& query) const = 0;

private:
  mutable std::atomic<std::uint64_t> calls_{0};
};

/// Evaluates the mixed objective of `query` at a fixed hypothesis.
double query_objective(const HypothesisClass& cls, const Hypothesis& h, const MixedErmQuery& query);

/// The comparator inf_h sum l(h(x_t), y_t).
ErmResult best_in_hindsight(const HypothesisClass& cls, const std::vector<LabeledPair>& pairs, const LossFn& loss);

}  // namespace hol

#endif  // HOL_CORE_HPP_
