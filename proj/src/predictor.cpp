#include "hol/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace hol
{

RelaxationDraw draw_halluc(const SidePool& pool, std::size_t count, Rng& rng, DrawMode mode)
{
  RelaxationDraw d;
  d.halluc.reserve(count);
  d.signs.reserve(count);
  const std::size_t n = pool.size();
  if (mode == DrawMode::WithoutReplacement) {
    if (count > n) {
      throw PoolExhaustedError("need " + std::to_string(count) + " hallucinated samples from a pool of " +
                               std::to_string(n));
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(idx[i], idx[pick(rng)]);
      d.halluc.push_back(pool[idx[i]]);
    }
  } else {
    if (count > 0 && n == 0) {
      throw PoolExhaustedError("cannot sample from an empty pool");
    }
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      d.halluc.push_back(pool[pick(rng)]);
    }
  }
  for (std::size_t i = 0; i < count; ++i) {
    d.signs.push_back((rng() >> 63) ? 1 : -1);
  }
  return d;
}

double PredictorConfig::grid_step() const
{
  if (y_grid_step > 0.0) {
    return y_grid_step;
  }
  return 1.0 / (loss.lipschitz * std::sqrt(static_cast<double>(std::max<std::size_t>(horizon, 1))));
}

double PredictorConfig::tolerance() const
{
  if (yhat_tolerance > 0.0) {
    return yhat_tolerance;
  }
  return 1.0 / (loss.lipschitz * std::sqrt(static_cast<double>(std::max<std::size_t>(horizon, 1))));
}

double playout_sup(const std::vector<LabeledPair>& pairs, const std::vector<SignedTerm>& terms,
                   const HypothesisClass& cls, const LossFn& loss)
{
  // The oracle minimizes, so flip the signs of the linear part and negate the result.
  MixedErmQuery q;
  q.pairs = pairs;
  q.signed_terms.reserve(terms.size());
  for (const auto& t : terms) {
    q.signed_terms.push_back({-t.sign, t.x});
  }
  q.coefficient = 2.0 * loss.lipschitz;
  q.loss = loss;
  return -cls.solve(q).objective;
}

double inner_sup(const GameHistory& history, const RelaxationDraw& draw, double probe_y,
                 const HypothesisClass& cls, const PredictorConfig& config)
{
  std::vector<LabeledPair> pairs;
  pairs.reserve(history.rounds.size() + 1);
  pairs.insert(pairs.end(), history.rounds.begin(), history.rounds.end());
  pairs.push_back({history.current, probe_y, 1.0});
  std::vector<SignedTerm> terms;
  terms.reserve(draw.halluc.size());
  for (std::size_t i = 0; i < draw.halluc.size(); ++i) {
    terms.push_back({draw.signs[i], draw.halluc[i]});
  }
  return playout_sup(pairs, terms, cls, config.loss);
}

double OuterObjective::operator()(double yhat) const
{
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ys.size(); ++i) {
    best = std::max(best, loss_unchecked(loss, yhat, ys[i]) + values[i]);
  }
  return best;
}

std::vector<double> y_grid(double step)
{
  if (!(step > 0.0)) {
    throw ConfigError("y grid step must be positive");
  }
  std::vector<double> ys;
  const auto n = static_cast<long>(std::floor(1.0 / step + 1e-9));
  for (long k = 0; k <= n; ++k) {
    ys.push_back(std::min(1.0, k * step));
  }
  if (ys.back() < 1.0 - 1e-12) {
    ys.push_back(1.0);
  } else {
    ys.back() = 1.0;
  }
  return ys;
}

OuterObjective outer_objective(const GameHistory& history, const RelaxationDraw& draw,
                               const HypothesisClass& cls, const PredictorConfig& config)
{
  OuterObjective phi;
  phi.loss = config.loss;
  phi.ys = y_grid(config.grid_step());
  phi.values.reserve(phi.ys.size());
  for (double y : phi.ys) {
    phi.values.push_back(inner_sup(history, draw, y, cls, config));
  }
  return phi;
}

double minimize_outer(const OuterObjective& phi, double tolerance)
{
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > tolerance) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (phi(m1) < phi(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  return 0.5 * (lo + hi);
}

double fast_yhat(double g0, double g1)
{
  return std::clamp(0.5 * (1.0 + g1 - g0), 0.0, 1.0);
}

Prediction predict_general(const GameHistory& history, const RelaxationDraw& draw,
                           const HypothesisClass& cls, const PredictorConfig& config)
{
  const OuterObjective phi = outer_objective(history, draw, cls, config);
  Prediction p;
  p.yhat = minimize_outer(phi, config.tolerance());
  p.phi = phi(p.yhat);
  p.erm_calls = phi.ys.size();
  return p;
}

bool fast_path_eligible(const GameHistory& history, const HypothesisClass& cls, const LossFn& loss)
{
  if (!cls.binary() || loss.kind != LossKind::Absolute) {
    return false;
  }
  return std::all_of(history.rounds.begin(), history.rounds.end(),
                     [](const LabeledPair& p) { return p.y == 0.0 || p.y == 1.0; });
}

Prediction predict_binary_fast(const GameHistory& history, const RelaxationDraw& draw,
                               const HypothesisClass& cls, const PredictorConfig& config)
{
  if (!fast_path_eligible(history, cls, config.loss)) {
    throw UnsupportedError("fast binary path needs a binary class, binary labels and the absolute loss");
  }
  const double g0 = inner_sup(history, draw, 0.0, cls, config);
  const double g1 = inner_sup(history, draw, 1.0, cls, config);
  Prediction p;
  p.yhat = fast_yhat(g0, g1);
  p.phi = std::max(p.yhat + g0, 1.0 - p.yhat + g1);
  p.erm_calls = 2;
  return p;
}

Prediction predict(const GameHistory& history, const RelaxationDraw& draw, const HypothesisClass& cls,
                   const PredictorConfig& config)
{
  if (config.fast_binary_path && fast_path_eligible(history, cls, config.loss)) {
    return predict_binary_fast(history, draw, cls, config);
  }
  return predict_general(history, draw, cls, config);
}

std::uint64_t general_call_budget(const LossFn& loss, std::size_t horizon)
{
  return static_cast<std::uint64_t>(std::ceil(loss.lipschitz * std::sqrt(static_cast<double>(horizon)) - 1e-12)) + 2;
}

void McAccumulator::add(double v)
{
  ++n_;
  const double d = v - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (v - mean_);
}

McEstimate McAccumulator::result() const
{
  McEstimate e;
  e.mean = mean_;
  e.samples = n_;
  e.std_error = n_ > 1 ? std::sqrt(m2_ / static_cast<double>(n_ - 1) / static_cast<double>(n_)) : 0.0;
  return e;
}

namespace
{

std::size_t remaining(const std::vector<LabeledPair>& history, const PredictorConfig& config)
{
  if (history.size() > config.horizon) {
    throw InputError("history longer than the horizon");
  }
  return config.horizon - history.size();
}

}  // namespace

McEstimate relaxation_R(const std::vector<LabeledPair>& history, const SidePool& pool, const HypothesisClass& cls,
                        const PredictorConfig& config, std::size_t mc_samples, Rng& rng, DrawMode mode)
{
  const std::size_t count = remaining(history, config);
  McAccumulator acc;
  const std::size_t rounds = count == 0 ? 1 : std::max<std::size_t>(mc_samples, 1);
  for (std::size_t s = 0; s < rounds; ++s) {
    const RelaxationDraw d = draw_halluc(pool, count, rng, mode);
    std::vector<SignedTerm> terms;
    for (std::size_t i = 0; i < count; ++i) {
      terms.push_back({d.signs[i], d.halluc[i]});
    }
    acc.add(playout_sup(history, terms, cls, config.loss));
  }
  return acc.result();
}

McEstimate relaxation_Rtilde(const std::vector<LabeledPair>& history, const SidePool& pool,
                             const FeatureSampler& truth, const HypothesisClass& cls, const PredictorConfig& config,
                             std::size_t mc_samples, Rng& rng, DrawMode mode)
{
  const std::size_t count = remaining(history, config);
  if (count == 0) {
    return relaxation_R(history, pool, cls, config, mc_samples, rng, mode);
  }
  McAccumulator acc;
  for (std::size_t s = 0; s < std::max<std::size_t>(mc_samples, 1); ++s) {
    const Feature x = truth(rng);
    const RelaxationDraw tail = draw_halluc(pool, count - 1, rng, mode);
    std::vector<int> signs;
    signs.push_back((rng() >> 63) ? 1 : -1);
    signs.insert(signs.end(), tail.signs.begin(), tail.signs.end());
    acc.add(f_eval(history, tail.halluc, signs, x, cls, config.loss));
  }
  return acc.result();
}

double f_eval(const std::vector<LabeledPair>& history, const std::vector<Feature>& tail, const std::vector<int>& signs,
              const Feature& x, const HypothesisClass& cls, const LossFn& loss)
{
  if (signs.size() != tail.size() + 1) {
    throw InputError("f_eval needs one sign per tail feature plus one for the probe");
  }
  std::vector<SignedTerm> terms;
  terms.reserve(signs.size());
  terms.push_back({signs[0], x});
  for (std::size_t i = 0; i < tail.size(); ++i) {
    terms.push_back({signs[i + 1], tail[i]});
  }
  return playout_sup(history, terms, cls, loss);
}

}  // namespace hol
