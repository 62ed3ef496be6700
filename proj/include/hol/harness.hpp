#ifndef HOL_HARNESS_HPP_
#define HOL_HARNESS_HPP_

#include "hol/bandit.hpp"
#include "hol/environment.hpp"
#include "hol/epochs.hpp"
#include "hol/verify.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hol
{

using nlohmann::json;

enum class Mode { Online, Shifting, Bandit, Verify, Rademacher };

std::string mode_name(Mode m);
Mode parse_mode(const std::string& s);

/// A validated experiment. The *_spec members are the JSON sub-objects, already checked to resolve.
struct ExperimentConfig
{
  Mode mode = Mode::Online;
  json class_spec;
  json env_spec;
  json adversary_spec;
  json schedule_spec;
  LossFn loss = LossFn::absolute();
  std::vector<std::size_t> horizons;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path out = "out";
  std::size_t probe_size = 64;
  std::optional<double> gamma;
  std::optional<std::size_t> shifts;  // K for block_length; empty uses the environment's change count
  VerifyOptions verify;
  std::size_t rademacher_mc = 20000;
  unsigned workers = 0;  // 0 selects the hardware concurrency
  json canonical;        // fully defaulted config; hashed and echoed into the summary
  std::string hash;      // 16 hex digits
};

/// Built-in defaults for every key; class and adversary defaults depend on the mode.
json default_config(Mode mode = Mode::Online);

/// Applies "a.b.c=value" to `config`. The value is parsed as JSON when possible, else taken as a string.
void apply_override(json& config, const std::string& assignment);

/// Merges `user` over the defaults and validates; ConfigError messages name the offending field path.
ExperimentConfig parse_config(const json& user);

/// FNV-1a over the compact dump of `canonical`, ignoring "out" and "workers".
std::string config_hash(const json& canonical);

std::unique_ptr<HypothesisClass> make_class(const json& spec);
PolicyClass make_policy_class(const json& spec);
/// Feature process for horizon T; shifting specs place their change points relative to T.
ShiftingProcess make_environment(const json& spec, std::size_t T);
/// `seed` keys any internal randomness of the adversary (label noise); `class_spec` feeds comparator_squeeze.
AdversaryPtr make_adversary(const json& spec, const json& class_spec, const LossFn& loss, std::uint64_t seed);
CostAdversaryPtr make_cost_adversary(const json& spec);
EpochSchedule make_schedule(const json& spec);

/// Throws InvariantBreach unless every cumulative column is the prefix sum of its per-round column.
void check_prefix_sums(const RegretTrace& trace);
void check_prefix_sums(const BanditTrace& trace);

/// CSV text for one trace; the first line is "# schema=1".
std::string online_csv(const RegretTrace& trace, bool with_block);
std::string bandit_csv(const BanditTrace& trace);

struct ExponentFit
{
  std::vector<double> horizons;
  std::vector<double> regrets;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root mean square in log space
  bool ok = false;
  std::string notice;
};

/// OLS of log(regret) on log(T). Needs >= 3 strictly increasing horizons; a nonpositive regret skips the fit.
ExponentFit fit_exponent(const std::vector<double>& horizons, const std::vector<double>& regrets);

struct HorizonStats
{
  std::size_t T = 0;
  std::vector<double> regrets;  // one per seed, in seed order
  double mean = 0.0;
  double stddev = 0.0;
  std::uint64_t erm_calls = 0;
  std::size_t straddling = 0;    // shifting only: max over seeds
  std::size_t block_length = 0;  // shifting only
};

struct ExperimentResult
{
  json summary;
  std::vector<HorizonStats> horizons;
  std::vector<CheckReport> checks;  // verify mode
  std::vector<std::filesystem::path> files;
  int exit_code = 0;
};

/// Runs every (horizon, seed) job, writes one CSV per trace and summary.json into config.out.
/// On any failure the files written by this call are removed and the error is rethrown.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace hol

#endif  // HOL_HARNESS_HPP_
