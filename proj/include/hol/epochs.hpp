#ifndef HOL_EPOCHS_HPP_
#define HOL_EPOCHS_HPP_

#include "hol/core.hpp"
#include "hol/environment.hpp"
#include "hol/predictor.hpp"

#include <memory>
#include <string>
#include <vector>

namespace hol
{

inline constexpr double kMaxAlpha = 8.0;

/// alpha = 1 / (2 (1 - q)); q in [1/2, 1), results above kMaxAlpha are rejected.
double alpha_from_q(double q);

struct EpochIndex
{
  std::size_t n = 1;      // epoch, 1-based
  std::size_t j = 1;      // offset inside the epoch, 1-based
  std::size_t start = 0;  // S(n), rounds completed before epoch n
};

/// n -> M(n). Fractional lengths are rounded half up and floored at 1.
class EpochSchedule
{
public:
  enum class Kind { Polynomial, Geometric, Fixed };

  static EpochSchedule polynomial(double alpha);
  static EpochSchedule geometric(double ratio);
  static EpochSchedule fixed(std::size_t length);

  std::size_t length(std::size_t n) const;
  /// S(n) = M(1) + ... + M(n-1).
  std::size_t start(std::size_t n) const;
  /// Unrounded M(n) and S(n).
  double real_length(std::size_t n) const;
  double real_start(std::size_t n) const;
  EpochIndex locate(std::size_t t) const;

  Kind kind() const { return kind_; }
  double parameter() const { return param_; }
  std::string describe() const;

private:
  EpochSchedule(Kind kind, double param) : kind_(kind), param_(param) {}

  Kind kind_;
  double param_;
};

struct TraceRow
{
  std::size_t t = 0;
  std::size_t epoch = 1;
  std::size_t j = 1;
  std::size_t block = 0;
  std::size_t pool_size = 0;
  std::size_t halluc = 0;
  Feature x;
  double y = 0.0;
  double yhat = 0.0;
  double loss = 0.0;
  double cum_loss = 0.0;
  double cum_regret = 0.0;
  double comparator_loss = 0.0;
  std::uint64_t erm_calls = 0;
};

/// Learner and best-in-hindsight losses over a contiguous stretch of rounds.
struct StretchSummary
{
  std::size_t block = 0;
  std::size_t epoch = 0;
  std::size_t first_t = 0;
  std::size_t last_t = 0;
  double learner_loss = 0.0;
  double comparator_loss = 0.0;

  double regret() const { return learner_loss - comparator_loss; }
};

struct RegretTrace
{
  std::vector<TraceRow> rows;
  std::vector<StretchSummary> epochs;
  std::vector<StretchSummary> blocks;
  Hypothesis comparator;
  double comparator_loss = 0.0;
  double regret = 0.0;
  std::uint64_t erm_calls_total = 0;
  double rounding_drift = 0.0;  // integer minus real-valued prefix sum at the last epoch reached
  std::string adversary;
  bool extrapolation = false;
};

struct OnlineConfig
{
  EpochSchedule schedule = EpochSchedule::polynomial(1.0);
  /// Loss, grid/tolerance overrides and fast-path flag; the horizon is set per epoch.
  PredictorConfig predictor;
  std::size_t probe_size = 64;
  std::uint64_t seed = 0;
};

/// Plays T rounds of the epoch predictor: inside epoch n the side pool is every feature seen
/// before the epoch started and each round draws min(M(n) - j, pool size) hallucinated samples.
RegretTrace run_epoch_predictor(const HypothesisClass& cls, const ShiftingProcess& env, const Adversary& adversary,
                                std::size_t T, const OnlineConfig& config);

/// Throws InvariantBreach unless total regret <= sum of per-epoch regrets (within oracle tolerance).
void check_epoch_additivity(const RegretTrace& trace, double oracle_tolerance);

namespace detail
{

/// Shared state of one game; blocks restart the predictor but keep the global history.
class Game
{
public:
  Game(const HypothesisClass& cls, const ShiftingProcess& env, const Adversary& adversary, const OnlineConfig& config);

  /// Runs the epoch predictor from scratch on rounds first_t .. first_t + length - 1.
  void play_block(std::size_t first_t, std::size_t length, std::size_t block);
  RegretTrace finish();

private:
  const HypothesisClass& cls_;
  const ShiftingProcess& env_;
  const Adversary& adversary_;
  const OnlineConfig& config_;
  std::unique_ptr<HypothesisClass> probe_cls_;
  std::unique_ptr<HypothesisClass> aux_cls_;
  std::vector<Feature> xs_;
  std::vector<double> ys_;
  std::vector<TraceRow> rows_;
  std::vector<StretchSummary> epochs_;
  std::vector<StretchSummary> blocks_;
  double drift_ = 0.0;
};

}  // namespace detail

}  // namespace hol

#endif  // HOL_EPOCHS_HPP_
