#ifndef HOL_ORACLES_HPP_
#define HOL_ORACLES_HPP_

#include "hol/core.hpp"

#include <functional>
#include <string>
#include <vector>

namespace hol
{

/// {x -> 1{x >= a} : a in [0,1]} over scalar features. Exact oracle by cell sweep.
class ThresholdClass final : public HypothesisClass
{
public:
  double evaluate(const Hypothesis& h, const Feature& x) const override;
  bool binary() const override { return true; }
  std::string name() const override { return "threshold"; }
  std::unique_ptr<HypothesisClass> clone() const override { return std::make_unique<ThresholdClass>(*this); }
  std::vector<Hypothesis> parameter_grid(double step) const override;

  static Hypothesis at(double a);

protected:
  ErmResult do_solve(const MixedErmQuery& query) const override;
};

/// {x -> 1{a <= x <= b} : [a,b] in [0,1], b - a >= min_length}.
class IntervalClass final : public HypothesisClass
{
public:
  explicit IntervalClass(double min_length);

  double evaluate(const Hypothesis& h, const Feature& x) const override;
  bool binary() const override { return true; }
  std::string name() const override { return "interval"; }
  std::unique_ptr<HypothesisClass> clone() const override { return std::make_unique<IntervalClass>(*this); }
  std::vector<Hypothesis> parameter_grid(double step) const override;

  double min_length() const { return min_length_; }
  static Hypothesis at(double a, double b);

protected:
  ErmResult do_solve(const MixedErmQuery& query) const override;

private:
  double min_length_;
};

/// An explicit finite list of hypotheses. Exact enumeration, lowest index wins ties.
class FiniteClass final : public HypothesisClass
{
public:
  using Fn = std::function<double(const Feature&)>;

  FiniteClass(std::vector<Fn> members, bool binary);

  /// h_k(x) == values[k] for all x.
  static FiniteClass constants(const std::vector<double>& values);
  /// h_k(support[i]) == table(k, i); features are matched to the nearest support point.
  static FiniteClass table(std::vector<double> support, const Eigen::MatrixXd& table);

  double evaluate(const Hypothesis& h, const Feature& x) const override;
  bool binary() const override { return binary_; }
  std::string name() const override { return "finite"; }
  std::unique_ptr<HypothesisClass> clone() const override { return std::make_unique<FiniteClass>(*this); }
  std::vector<Hypothesis> parameter_grid(double step) const override;

  std::size_t size() const { return members_.size(); }
  double value(std::size_t k, const Feature& x) const { return members_[k](x); }
  static Hypothesis at(std::size_t k);

protected:
  ErmResult do_solve(const MixedErmQuery& query) const override;

private:
  std::vector<Fn> members_;
  bool binary_;
};

/// All 1-Lipschitz functions [0,1]^d -> [0,1] under the sup norm (absolute loss only).
///
/// The oracle solves the linear program over the values at the queried points exactly
/// (dense simplex); hypotheses evaluate off-sample through the lower McShane extension.
class LipschitzClass final : public HypothesisClass
{
public:
  explicit LipschitzClass(int dim);

  double evaluate(const Hypothesis& h, const Feature& x) const override;
  double tolerance() const override { return 1e-3; }
  bool binary() const override { return false; }
  std::string name() const override { return "lipschitz"; }
  std::unique_ptr<HypothesisClass> clone() const override { return std::make_unique<LipschitzClass>(*this); }

  int dim() const { return dim_; }

protected:
  ErmResult do_solve(const MixedErmQuery& query) const override;

private:
  int dim_;
};

/// Brute-force minimization over cls.parameter_grid(grid_step). Test oracle only.
ErmResult reference_solve(const HypothesisClass& cls, const MixedErmQuery& query, double grid_step);

}  // namespace hol

#endif  // HOL_ORACLES_HPP_
