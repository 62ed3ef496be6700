#include "hol/core.hpp"

#include <cmath>
#include <string>

namespace hol
{

namespace
{

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags)
{
  std::uint64_t s = splitmix64(base);
  for (auto t : tags) {
    s = splitmix64(s ^ splitmix64(t + 0x632be59bd9b4e019ULL));
  }
  return s;
}

Feature::Feature(double x) : value_(1)
{
  require_unit(x, "feature coordinate");
  value_[0] = x;
}

Feature::Feature(const Eigen::Ref<const Eigen::VectorXd>& x)
{
  if (x.size() < 1 || x.size() > kMaxFeatureDim) {
    throw InputError("feature dimension must be in [1, " + std::to_string(kMaxFeatureDim) + "]");
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    require_unit(x[i], "feature coordinate");
  }
  value_ = x;
}

double Feature::scalar() const
{
  if (value_.size() != 1) {
    throw UnsupportedError("scalar feature required, got dimension " + std::to_string(value_.size()));
  }
  return value_[0];
}

double distance_inf(const Feature& a, const Feature& b)
{
  if (a.dim() != b.dim()) {
    throw InputError("feature dimension mismatch");
  }
  return (a.coords() - b.coords()).cwiseAbs().maxCoeff();
}

void require_unit(double v, const char* what)
{
  if (!(v >= 0.0 && v <= 1.0)) {
    throw DomainError(std::string(what) + " outside [0,1]: " + std::to_string(v));
  }
}

LossFn LossFn::absolute()
{
  return LossFn{};
}

LossFn LossFn::custom(std::string name, double lipschitz, std::function<double(double, double)> fn)
{
  if (!(lipschitz > 0.0) || !fn) {
    throw ConfigError("custom loss needs a positive Lipschitz constant and an evaluator");
  }
  return LossFn{LossKind::Custom, lipschitz, std::move(fn), std::move(name)};
}

LossFn LossFn::squared()
{
  return custom("squared", 2.0, [](double a, double y) { return (a - y) * (a - y); });
}

double loss_eval(const LossFn& loss, double prediction, double label)
{
  require_unit(prediction, "prediction");
  require_unit(label, "label");
  return loss_unchecked(loss, prediction, label);
}

void MixedErmQuery::validate() const
{
  if (!(coefficient >= 0.0)) {
    throw InputError("mixed ERM coefficient must be >= 0");
  }
  for (const auto& p : pairs) {
    require_unit(p.y, "label");
    if (!(p.weight >= 0.0)) {
      throw InputError("pair weight must be >= 0");
    }
  }
  for (const auto& s : signed_terms) {
    if (s.sign != 1 && s.sign != -1) {
      throw InputError("sign must be +1 or -1");
    }
  }
}

PseudoLabel signed_to_absolute(int sign)
{
  if (sign != 1 && sign != -1) {
    throw InputError("sign must be +1 or -1");
  }
  const double shift = (1.0 - sign) / 2.0;
  return {shift, -shift};
}

std::vector<Hypothesis> HypothesisClass::parameter_grid(double) const
{
  throw UnsupportedError(name() + " has no bounded parameterization");
}

double query_objective(const HypothesisClass& cls, const Hypothesis& h, const MixedErmQuery& query)
{
  double total = 0.0;
  for (const auto& p : query.pairs) {
    total += p.weight * loss_unchecked(query.loss, cls.evaluate(h, p.x), p.y);
  }
  double linear = 0.0;
  for (const auto& s : query.signed_terms) {
    linear += s.sign * cls.evaluate(h, s.x);
  }
  return total + query.coefficient * linear;
}

ErmResult best_in_hindsight(const HypothesisClass& cls, const std::vector<LabeledPair>& pairs, const LossFn& loss)
{
  if (pairs.empty()) {
    throw InputError("best_in_hindsight needs at least one pair");
  }
  MixedErmQuery q;
  q.pairs = pairs;
  q.loss = loss;
  return cls.solve(q);
}

}  // namespace hol
