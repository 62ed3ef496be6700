#ifndef HOL_ENVIRONMENT_HPP_
#define HOL_ENVIRONMENT_HPP_

#include "hol/core.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hol
{

/// A feature law mu on [0,1]^d: discrete, uniform on an interval, or a product of scalar laws.
class FeatureDistribution
{
public:
  static FeatureDistribution discrete(std::vector<Feature> support, std::vector<double> probs);
  static FeatureDistribution point_mass(double x);
  static FeatureDistribution uniform(double a = 0.0, double b = 1.0);
  static FeatureDistribution product(std::vector<FeatureDistribution> components);

  Feature sample(Rng& rng) const;
  Eigen::Index dim() const;

  bool is_discrete() const { return kind_ == Kind::Discrete; }
  const std::vector<Feature>& support() const { return support_; }
  const std::vector<double>& probs() const { return probs_; }

private:
  enum class Kind { Discrete, Uniform, Product };

  double sample_scalar(Rng& rng) const;

  Kind kind_ = Kind::Uniform;
  std::vector<Feature> support_;
  std::vector<double> probs_;
  std::vector<double> cumulative_;
  double a_ = 0.0;
  double b_ = 1.0;
  std::vector<FeatureDistribution> components_;
};

/// Piecewise-i.i.d. features: segment k is active from starts[k] (1-based) until the next start.
class ShiftingProcess
{
public:
  struct Segment
  {
    FeatureDistribution dist;
    std::size_t start;
  };

  explicit ShiftingProcess(std::vector<Segment> segments);
  static ShiftingProcess iid(FeatureDistribution dist);

  Feature sample(std::size_t t, Rng& rng) const;
  const FeatureDistribution& active(std::size_t t) const;
  std::size_t changes() const { return segments_.size() - 1; }
  /// First round of every segment after the first.
  std::vector<std::size_t> change_points() const;
  const std::vector<Segment>& segments() const { return segments_; }

private:
  std::vector<Segment> segments_;
};

/// What an adversary sees when choosing y_t.
struct LabelContext
{
  std::size_t t = 1;
  std::span<const Feature> features;  // x_1..x_t
  std::span<const double> labels;     // y_1..y_{t-1}
  /// Monte-Carlo estimate of the learner's mean prediction at round t; nullptr when unavailable.
  const std::function<double()>* probe = nullptr;

  const Feature& current() const { return features.back(); }
  double probe_mean() const;
};

class Adversary
{
public:
  enum class Kind { Oblivious, Adaptive, SemiAdaptive };

  virtual ~Adversary() = default;
  virtual double label(const LabelContext& ctx) const = 0;
  virtual Kind kind() const = 0;
  virtual std::string name() const = 0;
  virtual bool uses_probe() const { return false; }
};

using AdversaryPtr = std::shared_ptr<const Adversary>;

/// Labels y_t = f(t, x_t).
AdversaryPtr oblivious(std::string name, std::function<double(std::size_t, const Feature&)> f);
/// Labels from the full context, optionally consulting the probe.
AdversaryPtr adaptive(std::string name, std::function<double(const LabelContext&)> f, bool uses_probe);
/// Labels from the window x_{t-B..t} only.
AdversaryPtr semi_adaptive(std::string name, std::size_t window,
                           std::function<double(std::size_t, std::span<const Feature>)> f);

/// h*(x) with its value flipped independently with probability p; flips are keyed on (seed, t).
AdversaryPtr noisy_target(std::function<double(const Feature&)> target, double p, std::uint64_t seed);
/// noisy_target with the threshold h*(x) = 1{x >= a}.
AdversaryPtr noisy_threshold(double a, double p, std::uint64_t seed);
/// y_t = 1 if the probed mean prediction is below 1/2, else 0.
AdversaryPtr flip_to_far();
/// y_t in {0,1} maximizing l(probe, y) minus the increase of the best-in-hindsight loss.
AdversaryPtr comparator_squeeze(std::shared_ptr<const HypothesisClass> cls, LossFn loss);
AdversaryPtr constant_label(double y);
/// y_t = values[(t - 1) mod values.size()].
AdversaryPtr periodic(std::vector<double> values);

/// Validates an emitted label; throws AdversaryFault when it leaves [0,1].
double checked_label(const Adversary& adv, const LabelContext& ctx);

}  // namespace hol

#endif  // HOL_ENVIRONMENT_HPP_
