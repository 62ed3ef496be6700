#include "hol/epochs.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace hol
{

namespace
{

// Stream tags for derive_seed.
constexpr std::uint64_t kFeatureStream = 1;
constexpr std::uint64_t kDrawStream = 2;
constexpr std::uint64_t kProbeStream = 3;

constexpr double kLengthCap = 4.0e18;

std::size_t round_half_up(double v)
{
  return static_cast<std::size_t>(std::floor(std::min(v, kLengthCap) + 0.5));
}

}  // namespace

double alpha_from_q(double q)
{
  if (!(q >= 0.5)) {
    throw ConfigError("q must be at least 1/2");
  }
  if (q >= 1.0) {
    throw ConfigError("q must be below 1");
  }
  const double alpha = 1.0 / (2.0 * (1.0 - q));
  if (alpha > kMaxAlpha) {
    throw ConfigError("alpha = " + std::to_string(alpha) + " exceeds the cap of 8");
  }
  return alpha;
}

EpochSchedule EpochSchedule::polynomial(double alpha)
{
  if (!(alpha >= 1.0 && alpha <= kMaxAlpha)) {
    throw ConfigError("polynomial schedule needs 1 <= alpha <= 8");
  }
  return {Kind::Polynomial, alpha};
}

EpochSchedule EpochSchedule::geometric(double ratio)
{
  if (!(ratio > 1.0)) {
    throw ConfigError("geometric schedule needs ratio > 1");
  }
  return {Kind::Geometric, ratio};
}

EpochSchedule EpochSchedule::fixed(std::size_t length)
{
  if (length < 1) {
    throw ConfigError("fixed schedule needs length >= 1");
  }
  return {Kind::Fixed, static_cast<double>(length)};
}

double EpochSchedule::real_length(std::size_t n) const
{
  const auto nd = static_cast<double>(n);
  switch (kind_) {
    case Kind::Polynomial:
      return std::pow(nd, param_);
    case Kind::Geometric:
      return std::pow(param_, nd);
    case Kind::Fixed:
      return param_;
  }
  return 1.0;
}

std::size_t EpochSchedule::length(std::size_t n) const
{
  if (n < 1) {
    throw InputError("epochs are numbered from 1");
  }
  return std::max<std::size_t>(1, round_half_up(real_length(n)));
}

std::size_t EpochSchedule::start(std::size_t n) const
{
  std::size_t s = 0;
  for (std::size_t i = 1; i < n; ++i) {
    s += length(i);
  }
  return s;
}

double EpochSchedule::real_start(std::size_t n) const
{
  double s = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    s += real_length(i);
  }
  return s;
}

EpochIndex EpochSchedule::locate(std::size_t t) const
{
  if (t < 1) {
    throw InputError("rounds are numbered from 1");
  }
  EpochIndex idx;
  for (;;) {
    const std::size_t m = length(idx.n);
    if (t <= idx.start + m) {
      idx.j = t - idx.start;
      return idx;
    }
    idx.start += m;
    ++idx.n;
  }
}

std::string EpochSchedule::describe() const
{
  std::ostringstream os;
  switch (kind_) {
    case Kind::Polynomial:
      os << "polynomial(alpha=" << param_ << ")";
      break;
    case Kind::Geometric:
      os << "geometric(ratio=" << param_ << ")";
      break;
    case Kind::Fixed:
      os << "fixed(" << param_ << ")";
      break;
  }
  return os.str();
}

namespace detail
{

Game::Game(const HypothesisClass& cls, const ShiftingProcess& env, const Adversary& adversary,
           const OnlineConfig& config)
    : cls_(cls), env_(env), adversary_(adversary), config_(config), probe_cls_(cls.clone()), aux_cls_(cls.clone())
{
}

void Game::play_block(std::size_t first_t, std::size_t length, std::size_t block)
{
  const auto& schedule = config_.schedule;
  const std::size_t base = first_t - 1;  // rounds before this block
  std::size_t epoch_first = first_t;

  auto close_epoch = [&](std::size_t n, std::size_t last_t) {
    StretchSummary s;
    s.block = block;
    s.epoch = n;
    s.first_t = epoch_first;
    s.last_t = last_t;
    std::vector<LabeledPair> pairs;
    for (std::size_t t = epoch_first; t <= last_t; ++t) {
      s.learner_loss += rows_[t - 1].loss;
      pairs.push_back({xs_[t - 1], ys_[t - 1], 1.0});
    }
    s.comparator_loss = best_in_hindsight(*aux_cls_, pairs, config_.predictor.loss).objective;
    epochs_.push_back(s);
  };

  std::size_t last_epoch = 1;
  for (std::size_t tau = 1; tau <= length; ++tau) {
    const std::size_t t = base + tau;
    const EpochIndex idx = schedule.locate(tau);
    if (idx.n != last_epoch) {
      close_epoch(last_epoch, t - 1);
      epoch_first = t;
      last_epoch = idx.n;
    }
    const std::size_t m = schedule.length(idx.n);

    Rng feature_rng(derive_seed(config_.seed, {kFeatureStream, t}));
    xs_.push_back(env_.sample(t, feature_rng));

    const SidePool pool(xs_.begin() + static_cast<std::ptrdiff_t>(base),
                        xs_.begin() + static_cast<std::ptrdiff_t>(base + idx.start));
    const std::size_t count = std::min(m - idx.j, pool.size());

    GameHistory history;
    history.current = xs_.back();
    for (std::size_t i = base + idx.start; i + 1 < t; ++i) {
      history.rounds.push_back({xs_[i], ys_[i], 1.0});
    }
    PredictorConfig pcfg = config_.predictor;
    pcfg.horizon = m;

    Rng draw_rng(derive_seed(config_.seed, {kDrawStream, t}));
    const RelaxationDraw draw = draw_halluc(pool, count, draw_rng);
    const std::uint64_t before = cls_.calls();
    const Prediction pred = predict(history, draw, cls_, pcfg);
    const std::uint64_t calls = cls_.calls() - before;

    std::function<double()> probe;
    if (adversary_.uses_probe()) {
      probe = [&, t]() {
        Rng probe_rng(derive_seed(config_.seed, {kProbeStream, t}));
        const std::size_t k = std::max<std::size_t>(config_.probe_size, 1);
        double total = 0.0;
        for (std::size_t s = 0; s < k; ++s) {
          const RelaxationDraw d = draw_halluc(pool, count, probe_rng);
          total += predict(history, d, *probe_cls_, pcfg).yhat;
        }
        return total / static_cast<double>(k);
      };
    }
    LabelContext ctx;
    ctx.t = t;
    ctx.features = std::span<const Feature>(xs_);
    ctx.labels = std::span<const double>(ys_);
    ctx.probe = probe ? &probe : nullptr;
    const double y = checked_label(adversary_, ctx);
    ys_.push_back(y);

    TraceRow row;
    row.t = t;
    row.epoch = idx.n;
    row.j = idx.j;
    row.block = block;
    row.pool_size = pool.size();
    row.halluc = count;
    row.x = xs_.back();
    row.y = y;
    row.yhat = pred.yhat;
    row.loss = loss_eval(config_.predictor.loss, pred.yhat, y);
    row.erm_calls = calls;
    rows_.push_back(row);
  }
  close_epoch(last_epoch, base + length);

  drift_ = static_cast<double>(schedule.start(last_epoch + 1)) - schedule.real_start(last_epoch + 1);

  StretchSummary b;
  b.block = block;
  b.first_t = first_t;
  b.last_t = base + length;
  std::vector<LabeledPair> pairs;
  for (std::size_t t = first_t; t <= b.last_t; ++t) {
    b.learner_loss += rows_[t - 1].loss;
    pairs.push_back({xs_[t - 1], ys_[t - 1], 1.0});
  }
  b.comparator_loss = best_in_hindsight(*aux_cls_, pairs, config_.predictor.loss).objective;
  blocks_.push_back(b);
}

RegretTrace Game::finish()
{
  RegretTrace trace;
  trace.adversary = adversary_.name();
  std::vector<LabeledPair> pairs;
  pairs.reserve(rows_.size());
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    pairs.push_back({xs_[i], ys_[i], 1.0});
  }
  const ErmResult best = best_in_hindsight(*aux_cls_, pairs, config_.predictor.loss);
  trace.comparator = best.hypothesis;
  trace.comparator_loss = best.objective;

  double cum_loss = 0.0;
  double cum_cmp = 0.0;
  for (auto& row : rows_) {
    row.comparator_loss = loss_eval(config_.predictor.loss, aux_cls_->evaluate(best.hypothesis, row.x), row.y);
    cum_loss += row.loss;
    cum_cmp += row.comparator_loss;
    row.cum_loss = cum_loss;
    row.cum_regret = cum_loss - cum_cmp;
    trace.erm_calls_total += row.erm_calls;
  }
  trace.regret = rows_.empty() ? 0.0 : rows_.back().cum_regret;
  trace.rows = std::move(rows_);
  trace.epochs = std::move(epochs_);
  trace.blocks = std::move(blocks_);
  trace.rounding_drift = drift_;
  return trace;
}

}  // namespace detail

RegretTrace run_epoch_predictor(const HypothesisClass& cls, const ShiftingProcess& env, const Adversary& adversary,
                                std::size_t T, const OnlineConfig& config)
{
  if (T < 1) {
    throw InputError("horizon T must be >= 1");
  }
  detail::Game game(cls, env, adversary, config);
  game.play_block(1, T, 0);
  RegretTrace trace = game.finish();
  check_epoch_additivity(trace, cls.tolerance());
  return trace;
}

void check_epoch_additivity(const RegretTrace& trace, double oracle_tolerance)
{
  double sum = 0.0;
  for (const auto& e : trace.epochs) {
    sum += e.regret();
  }
  const double slack = 1e-9 * (1.0 + static_cast<double>(trace.rows.size())) +
                       oracle_tolerance * static_cast<double>(trace.epochs.size() + 1);
  if (trace.regret > sum + slack) {
    throw InvariantBreach("total regret " + std::to_string(trace.regret) + " exceeds the sum of epoch regrets " +
                          std::to_string(sum));
  }
}

}  // namespace hol
