#include "hol/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace hol
{

FeatureDistribution FeatureDistribution::discrete(std::vector<Feature> support, std::vector<double> probs)
{
  if (support.empty() || support.size() != probs.size()) {
    throw ConfigError("discrete distribution needs matching nonempty support and probabilities");
  }
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) {
      throw ConfigError("probabilities must be nonnegative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ConfigError("probabilities must sum to 1");
  }
  for (const auto& x : support) {
    if (x.dim() != support.front().dim()) {
      throw ConfigError("discrete support mixes dimensions");
    }
  }
  FeatureDistribution d;
  d.kind_ = Kind::Discrete;
  d.support_ = std::move(support);
  d.probs_ = std::move(probs);
  d.cumulative_.resize(d.probs_.size());
  std::partial_sum(d.probs_.begin(), d.probs_.end(), d.cumulative_.begin());
  return d;
}

FeatureDistribution FeatureDistribution::point_mass(double x)
{
  return discrete({Feature(x)}, {1.0});
}

FeatureDistribution FeatureDistribution::uniform(double a, double b)
{
  if (!(a >= 0.0 && b <= 1.0 && a <= b)) {
    throw ConfigError("uniform interval must satisfy 0 <= a <= b <= 1");
  }
  FeatureDistribution d;
  d.kind_ = Kind::Uniform;
  d.a_ = a;
  d.b_ = b;
  return d;
}

FeatureDistribution FeatureDistribution::product(std::vector<FeatureDistribution> components)
{
  if (components.empty() || static_cast<int>(components.size()) > kMaxFeatureDim) {
    throw ConfigError("product distribution needs 1..8 components");
  }
  for (const auto& c : components) {
    if (c.dim() != 1) {
      throw ConfigError("product components must be scalar");
    }
  }
  FeatureDistribution d;
  d.kind_ = Kind::Product;
  d.components_ = std::move(components);
  return d;
}

Eigen::Index FeatureDistribution::dim() const
{
  switch (kind_) {
    case Kind::Discrete:
      return support_.front().dim();
    case Kind::Uniform:
      return 1;
    case Kind::Product:
      return static_cast<Eigen::Index>(components_.size());
  }
  return 1;
}

double FeatureDistribution::sample_scalar(Rng& rng) const
{
  return sample(rng).scalar();
}

Feature FeatureDistribution::sample(Rng& rng) const
{
  switch (kind_) {
    case Kind::Discrete: {
      if (support_.size() == 1) {
        return support_.front();
      }
      const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
      const auto i = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), support_.size() - 1);
      return support_[i];
    }
    case Kind::Uniform:
      return Feature(a_ + (b_ - a_) * std::uniform_real_distribution<double>(0.0, 1.0)(rng));
    case Kind::Product: {
      Eigen::VectorXd v(static_cast<Eigen::Index>(components_.size()));
      for (std::size_t i = 0; i < components_.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = components_[i].sample_scalar(rng);
      }
      return Feature(v);
    }
  }
  return Feature();
}

ShiftingProcess::ShiftingProcess(std::vector<Segment> segments) : segments_(std::move(segments))
{
  if (segments_.empty() || segments_.front().start != 1) {
    throw ConfigError("the first segment must start at t = 1");
  }
  for (std::size_t i = 1; i < segments_.size(); ++i) {
    if (segments_[i].start <= segments_[i - 1].start) {
      throw ConfigError("segment start times must be strictly increasing");
    }
    if (segments_[i].dist.dim() != segments_[0].dist.dim()) {
      throw ConfigError("segments mix feature dimensions");
    }
  }
}

ShiftingProcess ShiftingProcess::iid(FeatureDistribution dist)
{
  return ShiftingProcess({{std::move(dist), 1}});
}

const FeatureDistribution& ShiftingProcess::active(std::size_t t) const
{
  if (t < 1) {
    throw InputError("rounds are numbered from 1");
  }
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                             [](std::size_t v, const Segment& s) { return v < s.start; });
  return std::prev(it)->dist;
}

Feature ShiftingProcess::sample(std::size_t t, Rng& rng) const
{
  return active(t).sample(rng);
}

std::vector<std::size_t> ShiftingProcess::change_points() const
{
  std::vector<std::size_t> cps;
  for (std::size_t i = 1; i < segments_.size(); ++i) {
    cps.push_back(segments_[i].start);
  }
  return cps;
}

double LabelContext::probe_mean() const
{
  if (probe == nullptr || !*probe) {
    throw AdversaryFault("adversary requires a predictor probe but none was supplied");
  }
  return (*probe)();
}

namespace
{

class FnAdversary final : public Adversary
{
public:
  FnAdversary(std::string name, Kind kind, std::function<double(const LabelContext&)> f, bool probe)
      : name_(std::move(name)), kind_(kind), f_(std::move(f)), probe_(probe)
  {
  }

  double label(const LabelContext& ctx) const override { return f_(ctx); }
  Kind kind() const override { return kind_; }
  std::string name() const override { return name_; }
  bool uses_probe() const override { return probe_; }

private:
  std::string name_;
  Kind kind_;
  std::function<double(const LabelContext&)> f_;
  bool probe_;
};

double unit_draw(std::uint64_t seed, std::size_t t)
{
  Rng rng(derive_seed(seed, {0x6e6f697365ULL, t}));
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace

AdversaryPtr oblivious(std::string name, std::function<double(std::size_t, const Feature&)> f)
{
  return std::make_shared<FnAdversary>(
      std::move(name), Adversary::Kind::Oblivious,
      [f = std::move(f)](const LabelContext& ctx) { return f(ctx.t, ctx.current()); }, false);
}

AdversaryPtr adaptive(std::string name, std::function<double(const LabelContext&)> f, bool uses_probe)
{
  return std::make_shared<FnAdversary>(std::move(name), Adversary::Kind::Adaptive, std::move(f), uses_probe);
}

AdversaryPtr semi_adaptive(std::string name, std::size_t window,
                           std::function<double(std::size_t, std::span<const Feature>)> f)
{
  return std::make_shared<FnAdversary>(
      std::move(name), Adversary::Kind::SemiAdaptive,
      [window, f = std::move(f)](const LabelContext& ctx) {
        const std::size_t n = ctx.features.size();
        const std::size_t keep = std::min(n, window + 1);
        return f(ctx.t, ctx.features.subspan(n - keep, keep));
      },
      false);
}

AdversaryPtr noisy_target(std::function<double(const Feature&)> target, double p, std::uint64_t seed)
{
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ConfigError("flip probability must lie in [0,1]");
  }
  return oblivious("noisy_target", [target = std::move(target), p, seed](std::size_t t, const Feature& x) {
    const double y = target(x);
    return unit_draw(seed, t) < p ? 1.0 - y : y;
  });
}

AdversaryPtr noisy_threshold(double a, double p, std::uint64_t seed)
{
  return noisy_target([a](const Feature& x) { return x.scalar() >= a ? 1.0 : 0.0; }, p, seed);
}

AdversaryPtr flip_to_far()
{
  return adaptive(
      "flip_to_far", [](const LabelContext& ctx) { return ctx.probe_mean() < 0.5 ? 1.0 : 0.0; }, true);
}

AdversaryPtr comparator_squeeze(std::shared_ptr<const HypothesisClass> cls, LossFn loss)
{
  if (!cls) {
    throw ConfigError("comparator_squeeze needs a hypothesis class");
  }
  return adaptive(
      "comparator_squeeze",
      [cls, loss](const LabelContext& ctx) {
        const double guess = ctx.probe_mean();
        std::vector<LabeledPair> pairs;
        pairs.reserve(ctx.t);
        for (std::size_t i = 0; i + 1 < ctx.t; ++i) {
          pairs.push_back({ctx.features[i], ctx.labels[i], 1.0});
        }
        MixedErmQuery q;
        q.loss = loss;
        q.pairs = pairs;
        const double before = pairs.empty() ? 0.0 : cls->solve(q).objective;
        double best_y = 0.0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (double y : {0.0, 1.0}) {
          q.pairs = pairs;
          q.pairs.push_back({ctx.current(), y, 1.0});
          const double score = loss_unchecked(loss, guess, y) - (cls->solve(q).objective - before);
          if (score > best_score) {
            best_score = score;
            best_y = y;
          }
        }
        return best_y;
      },
      true);
}

AdversaryPtr constant_label(double y)
{
  require_unit(y, "constant label");
  return oblivious("constant", [y](std::size_t, const Feature&) { return y; });
}

AdversaryPtr periodic(std::vector<double> values)
{
  if (values.empty()) {
    throw ConfigError("periodic adversary needs at least one value");
  }
  for (double v : values) {
    require_unit(v, "periodic label");
  }
  return oblivious("periodic",
                   [values = std::move(values)](std::size_t t, const Feature&) { return values[(t - 1) % values.size()]; });
}

double checked_label(const Adversary& adv, const LabelContext& ctx)
{
  const double y = adv.label(ctx);
  if (!(y >= 0.0 && y <= 1.0)) {
    throw AdversaryFault(adv.name() + " emitted label " + std::to_string(y) + " outside [0,1] at t=" +
                         std::to_string(ctx.t));
  }
  return y;
}

}  // namespace hol
