#ifndef HOL_VERIFY_HPP_
#define HOL_VERIFY_HPP_

#include "hol/core.hpp"
#include "hol/predictor.hpp"

#include <memory>
#include <string>
#include <vector>

namespace hol
{

struct CheckReport
{
  std::string name;
  std::size_t instances = 0;
  bool passed = true;
  /// Smallest (allowed - observed) over all instances; negative means a violation.
  double worst_margin = std::numeric_limits<double>::infinity();
  /// Largest combined Monte-Carlo standard error seen; 0 for exact checks.
  double std_error = 0.0;
  std::string note;

  void record(double margin, double se = 0.0);
  std::string line() const;
};

/// sup_h sum_t eps_t h(x_t) through one oracle call.
double rademacher_sup(const HypothesisClass& cls, const std::vector<Feature>& xs, const std::vector<int>& signs);

/// Monte Carlo over the signs for a fixed x^T; a lower estimate of the sup over x^T.
McEstimate estimate_rademacher(const HypothesisClass& cls, const std::vector<Feature>& xs, std::size_t mc_samples,
                               Rng& rng);

/// Exhaustive average over all 2^T sign patterns (T <= 24).
double exact_rademacher(const HypothesisClass& cls, const std::vector<Feature>& xs);

/// E|eps_1 + ... + eps_T| from the binomial law.
double expected_abs_walk(std::size_t T);

/// A tiny game: finite feature law, finite class, fixed side pool and horizon M.
struct TinyScenario
{
  std::string name;
  std::shared_ptr<const HypothesisClass> cls;
  std::vector<Feature> support;
  std::vector<double> probs;
  SidePool pool;
  std::size_t horizon = 1;
  LossFn loss = LossFn::absolute();
  /// Histories x^{j-1}, y^{j-1} at which admissibility is checked (j = size + 1).
  std::vector<std::vector<LabeledPair>> histories;
};

struct AdmissibilityOptions
{
  std::size_t mc_samples = 2000;
  double y_step = 0.05;
  double yhat_tolerance = 1e-6;
  /// Added to every prediction before clamping; nonzero only for negative controls.
  double corruption = 0.0;
  std::uint64_t seed = 7;
};

/// Checks E_x sup_y E[l(yhat, y) + R_j] <= R~_{j-1} at every history of every scenario.
CheckReport check_admissibility(const std::vector<TinyScenario>& scenarios, const AdmissibilityOptions& options);

std::vector<TinyScenario> admissibility_fixtures(std::uint64_t seed);

/// Singleton class {h = 1/2}, M = 1.
TinyScenario singleton_fixture();

/// Spread of f over a probe grid <= 4L and label-Lipschitz bound j L ||y - y'||_inf.
CheckReport check_sensitivity(std::size_t count, std::uint64_t seed);

/// Structural three-case formula for binary classes versus direct evaluation of f.
CheckReport check_binary_structure(std::size_t count, std::uint64_t seed);

struct DecompositionOptions
{
  double y_step = 0.05;
  double yhat_tolerance = 1e-6;
  /// Multiplies R~_0 on the right-hand side; 0.5 is the negative control.
  double r0_scale = 1.0;
  std::size_t max_enumeration = 2'000'000;
};

/// Exact side-information regret against the grid adversary versus R~_0 + sum_j E sup (R~_j - R_j).
CheckReport check_decomposition(const std::vector<TinyScenario>& scenarios, const DecompositionOptions& options);

std::vector<TinyScenario> decomposition_fixtures();

/// mu is a point mass where all hypotheses agree, while the pool sits where they disagree.
TinyScenario mismatched_pool_fixture();

struct DiscrepancyPoint
{
  std::size_t j = 0;
  McEstimate discrepancy;
  double reference = 0.0;  // sqrt(j / N)
};

/// Monte-Carlo estimates of R~_j - R_j at random histories; diagnostic only.
std::vector<DiscrepancyPoint> discrepancy_probe(const TinyScenario& scenario, std::size_t mc_samples,
                                                std::uint64_t seed, DrawMode mode = DrawMode::WithoutReplacement);

struct VerifyOptions
{
  std::size_t mc_samples = 2000;
  std::size_t sensitivity_instances = 200;
  std::size_t binary_structure_instances = 1000;
  std::size_t rademacher_mc = 20000;
  std::uint64_t seed = 7;
};

/// Every check plus its negative control (a negative control passes when its check fails).
std::vector<CheckReport> run_verify_suite(const VerifyOptions& options);

}  // namespace hol

#endif  // HOL_VERIFY_HPP_
