#ifndef HOL_PREDICTOR_HPP_
#define HOL_PREDICTOR_HPP_

#include "hol/core.hpp"

#include <functional>
#include <vector>

namespace hol
{

/// Observed side-information features; the empirical measure over them stands in for mu.
using SidePool = std::vector<Feature>;

enum class DrawMode { WithoutReplacement, WithReplacement };

/// One random playout: hallucinated features and their Rademacher signs.
struct RelaxationDraw
{
  std::vector<Feature> halluc;
  std::vector<int> signs;
};

/// Uniform ordered subsequence of `pool` (partial Fisher-Yates) plus i.i.d. signs.
/// WithReplacement samples pool entries i.i.d. instead; used by the relaxation evaluators only.
RelaxationDraw draw_halluc(const SidePool& pool, std::size_t count, Rng& rng,
                           DrawMode mode = DrawMode::WithoutReplacement);

struct PredictorConfig
{
  std::size_t horizon = 1;
  LossFn loss = LossFn::absolute();
  double y_grid_step = 0.0;     // <= 0 selects 1/(L sqrt(M))
  double yhat_tolerance = 0.0;  // <= 0 selects 1/(L sqrt(M))
  bool fast_binary_path = true;
  std::uint64_t seed = 0;

  double grid_step() const;
  double tolerance() const;
};

/// Rounds i < j of the current game and the feature x_j being predicted.
struct GameHistory
{
  std::vector<LabeledPair> rounds;
  Feature current;
};

/// sup_h [ 2L sum_i eps_i h(x~_i) - sum_k w_k l(h(x_k), y_k) ] via one oracle call.
double playout_sup(const std::vector<LabeledPair>& pairs, const std::vector<SignedTerm>& terms,
                   const HypothesisClass& cls, const LossFn& loss);

/// The bracketed sup of the prediction rule at adversary label probe_y.
double inner_sup(const GameHistory& history, const RelaxationDraw& draw, double probe_y,
                 const HypothesisClass& cls, const PredictorConfig& config);

/// phi(yhat) = max over the y grid of [ l(yhat, y) + G(y) ], with G cached per grid point.
struct OuterObjective
{
  std::vector<double> ys;
  std::vector<double> values;
  LossFn loss;

  double operator()(double yhat) const;
};

/// Grid {0, s, 2s, ...} with 1 appended if not already present.
std::vector<double> y_grid(double step);

OuterObjective outer_objective(const GameHistory& history, const RelaxationDraw& draw,
                               const HypothesisClass& cls, const PredictorConfig& config);

struct Prediction
{
  double yhat = 0.5;
  double phi = 0.0;
  std::uint64_t erm_calls = 0;
};

/// Ternary search on [0,1] down to bracket width `tolerance`; returns the bracket midpoint.
double minimize_outer(const OuterObjective& phi, double tolerance);

/// Closed-form minimizer of max(yhat + g0, 1 - yhat + g1) over [0,1].
double fast_yhat(double g0, double g1);

/// Ternary search over yhat on the cached outer objective; returns the final bracket midpoint.
Prediction predict_general(const GameHistory& history, const RelaxationDraw& draw,
                           const HypothesisClass& cls, const PredictorConfig& config);

/// Two oracle calls; requires a binary class, binary history labels and the absolute loss.
Prediction predict_binary_fast(const GameHistory& history, const RelaxationDraw& draw,
                               const HypothesisClass& cls, const PredictorConfig& config);

/// True when predict_binary_fast's preconditions hold.
bool fast_path_eligible(const GameHistory& history, const HypothesisClass& cls, const LossFn& loss);

/// Fast path when enabled and eligible, general path otherwise.
Prediction predict(const GameHistory& history, const RelaxationDraw& draw, const HypothesisClass& cls,
                   const PredictorConfig& config);

/// ceil(L sqrt(M)) + 2.
std::uint64_t general_call_budget(const LossFn& loss, std::size_t horizon);

struct McEstimate
{
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Running mean / standard error accumulator.
class McAccumulator
{
public:
  void add(double v);
  McEstimate result() const;

private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

using FeatureSampler = std::function<Feature(Rng&)>;

/// R_j for the history x^j, y^j (history.size() == j), by Monte Carlo over playouts from `pool`.
McEstimate relaxation_R(const std::vector<LabeledPair>& history, const SidePool& pool, const HypothesisClass& cls,
                        const PredictorConfig& config, std::size_t mc_samples, Rng& rng,
                        DrawMode mode = DrawMode::WithoutReplacement);

/// R~_j: as relaxation_R but position j+1 is drawn from `truth` instead of the pool.
McEstimate relaxation_Rtilde(const std::vector<LabeledPair>& history, const SidePool& pool,
                             const FeatureSampler& truth, const HypothesisClass& cls, const PredictorConfig& config,
                             std::size_t mc_samples, Rng& rng, DrawMode mode = DrawMode::WithoutReplacement);

/// f(x) = sup_h { 2L eps_{j+1} h(x) + 2L sum_{i>=j+2} eps_i h(x~_i) - L_j^h }.
/// `signs` holds eps_{j+1..M}; `tail` holds x~_{j+2..M}.
double f_eval(const std::vector<LabeledPair>& history, const std::vector<Feature>& tail, const std::vector<int>& signs,
              const Feature& x, const HypothesisClass& cls, const LossFn& loss);

}  // namespace hol

#endif  // HOL_PREDICTOR_HPP_
