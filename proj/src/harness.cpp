#include "hol/harness.hpp"

#include "hol/oracles.hpp"
#include "hol/shifting.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace hol
{

namespace fs = std::filesystem;

std::string mode_name(Mode m)
{
  switch (m) {
    case Mode::Online:
      return "online";
    case Mode::Shifting:
      return "shifting";
    case Mode::Bandit:
      return "bandit";
    case Mode::Verify:
      return "verify";
    case Mode::Rademacher:
      return "rademacher";
  }
  return "online";
}

Mode parse_mode(const std::string& s)
{
  for (Mode m : {Mode::Online, Mode::Shifting, Mode::Bandit, Mode::Verify, Mode::Rademacher}) {
    if (mode_name(m) == s) {
      return m;
    }
  }
  throw ConfigError("mode: unknown mode '" + s + "'");
}

// ---------------------------------------------------------------- field access

namespace
{

[[noreturn]] void fail(const std::string& path, const std::string& what)
{
  throw ConfigError(path + ": " + what);
}

const json& field(const json& obj, const std::string& key, const std::string& path)
{
  if (!obj.is_object()) {
    fail(path, "expected an object");
  }
  auto it = obj.find(key);
  if (it == obj.end()) {
    fail(path + "." + key, "missing");
  }
  return *it;
}

double number(const json& obj, const std::string& key, const std::string& path)
{
  const json& v = field(obj, key, path);
  if (!v.is_number()) {
    fail(path + "." + key, "expected a number");
  }
  return v.get<double>();
}

double number_or(const json& obj, const std::string& key, double fallback, const std::string& path)
{
  return obj.contains(key) ? number(obj, key, path) : fallback;
}

std::uint64_t count_value(const json& v, const std::string& path)
{
  if (v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    return v.get<std::uint64_t>();
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && std::floor(d) == d && d < 1.8e19) {
      return static_cast<std::uint64_t>(d);
    }
  }
  fail(path, "expected a nonnegative integer");
}

std::uint64_t count(const json& obj, const std::string& key, const std::string& path)
{
  return count_value(field(obj, key, path), path + "." + key);
}

std::vector<double> numbers(const json& obj, const std::string& key, const std::string& path)
{
  const json& v = field(obj, key, path);
  if (!v.is_array() || v.empty()) {
    fail(path + "." + key, "expected a nonempty array of numbers");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) {
      fail(path + "." + key + "[" + std::to_string(i) + "]", "expected a number");
    }
    out.push_back(v[i].get<double>());
  }
  return out;
}

Eigen::VectorXd vector_of(const json& obj, const std::string& key, const std::string& path)
{
  const auto v = numbers(obj, key, path);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string name_of(const json& spec, const std::string& path)
{
  const json& v = field(spec, "name", path);
  if (!v.is_string()) {
    fail(path + ".name", "expected a string");
  }
  return v.get<std::string>();
}

Feature feature_of(const json& v, const std::string& path)
{
  if (v.is_number()) {
    return Feature(v.get<double>());
  }
  if (v.is_array() && !v.empty()) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        fail(path, "expected a number or an array of numbers");
      }
      x[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    return Feature(x);
  }
  fail(path, "expected a number or an array of numbers");
}

// Rethrows library validation errors with the field path attached.
template <class F>
auto at_path(const std::string& path, F&& f) -> decltype(f())
{
  try {
    return f();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.rfind(path, 0) == 0) {
      throw;
    }
    fail(path, msg);
  } catch (const InputError& e) {
    fail(path, e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------- catalogs

std::unique_ptr<HypothesisClass> make_class(const json& spec)
{
  const std::string path = "class";
  const std::string name = name_of(spec, path);
  return at_path(path, [&]() -> std::unique_ptr<HypothesisClass> {
    if (name == "threshold") {
      return std::make_unique<ThresholdClass>();
    }
    if (name == "interval") {
      return std::make_unique<IntervalClass>(number_or(spec, "min_length", 0.05, path));
    }
    if (name == "constants") {
      return std::make_unique<FiniteClass>(FiniteClass::constants(numbers(spec, "values", path)));
    }
    if (name == "table") {
      const auto support = numbers(spec, "support", path);
      const json& rows = field(spec, "rows", path);
      if (!rows.is_array() || rows.empty()) {
        fail(path + ".rows", "expected a nonempty array of rows");
      }
      Eigen::MatrixXd t(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(support.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::string rp = path + ".rows[" + std::to_string(r) + "]";
        if (!rows[r].is_array() || rows[r].size() != support.size()) {
          fail(rp, "row length must equal the support size");
        }
        for (std::size_t c = 0; c < support.size(); ++c) {
          if (!rows[r][c].is_number()) {
            fail(rp, "expected numbers");
          }
          t(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
        }
      }
      return std::make_unique<FiniteClass>(FiniteClass::table(support, t));
    }
    if (name == "lipschitz") {
      return std::make_unique<LipschitzClass>(static_cast<int>(spec.contains("dim") ? count(spec, "dim", path) : 1));
    }
    fail(path + ".name", "unknown class '" + name + "'");
  });
}

PolicyClass make_policy_class(const json& spec)
{
  const std::string path = "class";
  const std::string name = name_of(spec, path);
  return at_path(path, [&]() -> PolicyClass {
    if (name == "standard4") {
      return PolicyClass::standard4();
    }
    if (name == "constant_arms") {
      return PolicyClass::constant_arms(static_cast<int>(count(spec, "arms", path)));
    }
    fail(path + ".name", "unknown policy class '" + name + "'");
  });
}

namespace
{

FeatureDistribution make_distribution(const json& spec, const std::string& path)
{
  const std::string name = name_of(spec, path);
  return at_path(path, [&]() -> FeatureDistribution {
    if (name == "uniform") {
      return FeatureDistribution::uniform(number_or(spec, "a", 0.0, path), number_or(spec, "b", 1.0, path));
    }
    if (name == "point_mass") {
      return FeatureDistribution::point_mass(number(spec, "x", path));
    }
    if (name == "discrete") {
      const json& sup = field(spec, "support", path);
      if (!sup.is_array() || sup.empty()) {
        fail(path + ".support", "expected a nonempty array");
      }
      std::vector<Feature> support;
      for (std::size_t i = 0; i < sup.size(); ++i) {
        support.push_back(feature_of(sup[i], path + ".support[" + std::to_string(i) + "]"));
      }
      std::vector<double> probs = spec.contains("probs")
                                      ? numbers(spec, "probs", path)
                                      : std::vector<double>(support.size(), 1.0 / static_cast<double>(support.size()));
      return FeatureDistribution::discrete(std::move(support), std::move(probs));
    }
    if (name == "product") {
      const json& comps = field(spec, "components", path);
      if (!comps.is_array() || comps.empty()) {
        fail(path + ".components", "expected a nonempty array");
      }
      std::vector<FeatureDistribution> parts;
      for (std::size_t i = 0; i < comps.size(); ++i) {
        parts.push_back(make_distribution(comps[i], path + ".components[" + std::to_string(i) + "]"));
      }
      return FeatureDistribution::product(std::move(parts));
    }
    fail(path + ".name", "unknown environment '" + name + "'");
  });
}

}  // namespace

ShiftingProcess make_environment(const json& spec, std::size_t T)
{
  const std::string path = "env";
  const std::string name = name_of(spec, path);
  std::vector<FeatureDistribution> parts;
  if (name == "point_shifts") {
    for (double x : numbers(spec, "points", path)) {
      parts.push_back(at_path(path + ".points", [&] { return FeatureDistribution::point_mass(x); }));
    }
  } else if (name == "shifts") {
    const json& segs = field(spec, "segments", path);
    if (!segs.is_array() || segs.empty()) {
      fail(path + ".segments", "expected a nonempty array");
    }
    for (std::size_t i = 0; i < segs.size(); ++i) {
      parts.push_back(make_distribution(segs[i], path + ".segments[" + std::to_string(i) + "]"));
    }
  } else {
    return ShiftingProcess::iid(make_distribution(spec, path));
  }
  // Segments split [1, T] evenly; segment k starts at 1 + floor(k T / P).
  const std::size_t P = parts.size();
  if (P > T) {
    fail(path, "more segments than rounds");
  }
  std::vector<ShiftingProcess::Segment> segments;
  for (std::size_t k = 0; k < P; ++k) {
    segments.push_back({parts[k], 1 + k * T / P});
  }
  return at_path(path, [&] { return ShiftingProcess(std::move(segments)); });
}

AdversaryPtr make_adversary(const json& spec, const json& class_spec, const LossFn& loss, std::uint64_t seed)
{
  const std::string path = "adversary";
  const std::string name = name_of(spec, path);
  return at_path(path, [&]() -> AdversaryPtr {
    if (name == "noisy_threshold") {
      return noisy_threshold(number_or(spec, "a", 0.5, path), number_or(spec, "p", 0.1, path), seed);
    }
    if (name == "constant") {
      return constant_label(number(spec, "y", path));
    }
    if (name == "periodic") {
      return periodic(numbers(spec, "values", path));
    }
    if (name == "flip_to_far") {
      return flip_to_far();
    }
    if (name == "comparator_squeeze") {
      return comparator_squeeze(std::shared_ptr<const HypothesisClass>(make_class(class_spec)), loss);
    }
    if (name == "window_majority") {
      const std::size_t window = count(spec, "window", path);
      return semi_adaptive("window_majority", window, [](std::size_t, std::span<const Feature> xs) {
        double s = 0.0;
        for (const auto& x : xs) {
          s += x.coords()[0];
        }
        return s >= 0.5 * static_cast<double>(xs.size()) ? 1.0 : 0.0;
      });
    }
    fail(path + ".name", "unknown adversary '" + name + "'");
  });
}

CostAdversaryPtr make_cost_adversary(const json& spec)
{
  const std::string path = "adversary";
  const std::string name = name_of(spec, path);
  return at_path(path, [&]() -> CostAdversaryPtr {
    if (name == "constant_costs") {
      return constant_costs(vector_of(spec, "costs", path));
    }
    if (name == "context_threshold") {
      return context_threshold_costs(number_or(spec, "threshold", 0.5, path), vector_of(spec, "low", path),
                                     vector_of(spec, "high", path));
    }
    fail(path + ".name", "unknown cost adversary '" + name + "'");
  });
}

EpochSchedule make_schedule(const json& spec)
{
  const std::string path = "schedule";
  const json& kind_v = field(spec, "kind", path);
  if (!kind_v.is_string()) {
    fail(path + ".kind", "expected a string");
  }
  const std::string kind = kind_v.get<std::string>();
  return at_path(path, [&]() -> EpochSchedule {
    if (kind == "polynomial") {
      if (spec.contains("q") && spec.contains("alpha")) {
        fail(path, "give either q or alpha, not both");
      }
      if (spec.contains("alpha")) {
        return EpochSchedule::polynomial(number(spec, "alpha", path));
      }
      return EpochSchedule::polynomial(alpha_from_q(number_or(spec, "q", 0.5, path)));
    }
    if (kind == "geometric") {
      return EpochSchedule::geometric(number_or(spec, "ratio", 2.0, path));
    }
    if (kind == "fixed") {
      return EpochSchedule::fixed(count(spec, "length", path));
    }
    fail(path + ".kind", "unknown schedule '" + kind + "'");
  });
}

// ---------------------------------------------------------------- config

json default_config(Mode mode)
{
  json c = {
      {"mode", mode_name(mode)},
      {"class", {{"name", "threshold"}}},
      {"env", {{"name", "uniform"}, {"a", 0.0}, {"b", 1.0}}},
      {"adversary", {{"name", "noisy_threshold"}, {"a", 0.5}, {"p", 0.1}}},
      {"T", 256},
      {"horizons", json::array()},
      {"schedule", {{"kind", "polynomial"}, {"q", 0.5}}},
      {"loss", "absolute"},
      {"seeds", {0}},
      {"out", "out"},
      {"probe_size", 64},
      {"gamma", nullptr},
      {"shifts", nullptr},
      {"mc", {{"admissibility", 2000}, {"sensitivity", 200}, {"binary_structure", 1000}, {"rademacher", 20000}}},
      {"workers", 0},
  };
  if (mode == Mode::Bandit) {
    c["class"] = {{"name", "standard4"}};
    c["adversary"] = {{"name", "constant_costs"}, {"costs", {0.0, 1.0}}};
  } else if (mode == Mode::Rademacher) {
    c["class"] = {{"name", "constants"}, {"values", {0.0, 1.0}}};
    c["T"] = 100;
  } else if (mode == Mode::Shifting) {
    c["env"] = {{"name", "point_shifts"}, {"points", {0.25, 0.75, 0.4}}};
  }
  return c;
}

void apply_override(json& config, const std::string& assignment)
{
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set: expected key=value, got '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  std::vector<std::string> parts;
  for (std::size_t pos = 0;;) {
    const auto dot = key.find('.', pos);
    parts.push_back(key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos));
    if (parts.back().empty()) {
      throw ConfigError("--set: empty path component in '" + key + "'");
    }
    if (dot == std::string::npos) {
      break;
    }
    pos = dot + 1;
  }
  json* node = &config;
  for (const auto& part : parts) {
    if (!node->is_object()) {
      *node = json::object();
    }
    node = &(*node)[part];
  }
  *node = value;
}

std::string config_hash(const json& canonical)
{
  json keyed = canonical;
  keyed.erase("out");
  keyed.erase("workers");
  const std::string text = keyed.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config(const json& user)
{
  if (!user.is_object()) {
    throw ConfigError("config: expected a JSON object");
  }
  Mode mode = Mode::Online;
  if (user.contains("mode")) {
    if (!user["mode"].is_string()) {
      fail("mode", "expected a string");
    }
    mode = parse_mode(user["mode"].get<std::string>());
  }
  json c = default_config(mode);
  for (auto it = user.begin(); it != user.end(); ++it) {
    if (!c.contains(it.key())) {
      fail(it.key(), "unknown key");
    }
  }
  // Sub-objects are replaced wholesale, except mc which merges key by key.
  json mc = c["mc"];
  for (auto it = user.begin(); it != user.end(); ++it) {
    c[it.key()] = it.value();
  }
  if (user.contains("mc")) {
    if (!user["mc"].is_object()) {
      fail("mc", "expected an object");
    }
    for (auto it = user["mc"].begin(); it != user["mc"].end(); ++it) {
      if (!mc.contains(it.key())) {
        fail("mc." + it.key(), "unknown key");
      }
      mc[it.key()] = it.value();
    }
  }
  c["mc"] = mc;

  ExperimentConfig cfg;
  cfg.mode = mode;
  cfg.class_spec = c["class"];
  cfg.env_spec = c["env"];
  cfg.adversary_spec = c["adversary"];
  cfg.schedule_spec = c["schedule"];

  if (!c["loss"].is_string()) {
    fail("loss", "expected a string");
  }
  const std::string loss = c["loss"].get<std::string>();
  if (loss == "absolute") {
    cfg.loss = LossFn::absolute();
  } else if (loss == "squared") {
    cfg.loss = LossFn::squared();
  } else {
    fail("loss", "unknown loss '" + loss + "'");
  }

  if (!c["horizons"].is_array()) {
    fail("horizons", "expected an array");
  }
  for (std::size_t i = 0; i < c["horizons"].size(); ++i) {
    cfg.horizons.push_back(count_value(c["horizons"][i], "horizons[" + std::to_string(i) + "]"));
  }
  if (cfg.horizons.empty()) {
    cfg.horizons.push_back(count_value(c["T"], "T"));
  }
  for (std::size_t i = 0; i < cfg.horizons.size(); ++i) {
    if (cfg.horizons[i] < 1) {
      fail("horizons[" + std::to_string(i) + "]", "T must be >= 1");
    }
    if (i > 0 && cfg.horizons[i] <= cfg.horizons[i - 1]) {
      fail("horizons", "must be strictly increasing");
    }
  }

  if (!c["seeds"].is_array() || c["seeds"].empty()) {
    fail("seeds", "expected a nonempty array");
  }
  for (std::size_t i = 0; i < c["seeds"].size(); ++i) {
    cfg.seeds.push_back(count_value(c["seeds"][i], "seeds[" + std::to_string(i) + "]"));
  }
  if (!c["out"].is_string()) {
    fail("out", "expected a string");
  }
  cfg.out = c["out"].get<std::string>();
  cfg.probe_size = count_value(c["probe_size"], "probe_size");
  if (!c["gamma"].is_null()) {
    if (!c["gamma"].is_number()) {
      fail("gamma", "expected a number or null");
    }
    cfg.gamma = c["gamma"].get<double>();
  }
  if (!c["shifts"].is_null()) {
    cfg.shifts = count_value(c["shifts"], "shifts");
    if (*cfg.shifts < 1) {
      fail("shifts", "must be >= 1");
    }
  }
  cfg.verify.mc_samples = count_value(c["mc"]["admissibility"], "mc.admissibility");
  cfg.verify.sensitivity_instances = count_value(c["mc"]["sensitivity"], "mc.sensitivity");
  cfg.verify.binary_structure_instances = count_value(c["mc"]["binary_structure"], "mc.binary_structure");
  cfg.verify.rademacher_mc = count_value(c["mc"]["rademacher"], "mc.rademacher");
  cfg.verify.seed = cfg.seeds.front();
  cfg.rademacher_mc = cfg.verify.rademacher_mc;
  if (cfg.rademacher_mc < 2) {
    fail("mc.rademacher", "need at least 2 samples");
  }
  cfg.workers = static_cast<unsigned>(count_value(c["workers"], "workers"));

  // Resolve every catalog name now so that jobs cannot fail on configuration.
  const std::size_t T_max = cfg.horizons.back();
  switch (mode) {
    case Mode::Online:
    case Mode::Shifting: {
      const auto cls = make_class(cfg.class_spec);
      const ShiftingProcess env = make_environment(cfg.env_spec, T_max);
      make_adversary(cfg.adversary_spec, cfg.class_spec, cfg.loss, 0);
      make_schedule(cfg.schedule_spec);
      if (env.segments().front().dist.dim() != 1 && cls->name().rfind("lipschitz", 0) != 0) {
        fail("env", "multi-dimensional features need the lipschitz class");
      }
      if (mode == Mode::Shifting && !cfg.shifts && env.changes() == 0) {
        fail("shifts", "environment has no change points; set shifts explicitly");
      }
      break;
    }
    case Mode::Bandit: {
      const PolicyClass cls = make_policy_class(cfg.class_spec);
      make_environment(cfg.env_spec, T_max);
      const CostAdversaryPtr adv = make_cost_adversary(cfg.adversary_spec);
      if (adv->costs(1, Feature(0.0)).size() != cls.arms()) {
        fail("adversary", "cost vector length differs from the policy class arm count");
      }
      if (cfg.gamma && !(*cfg.gamma > 0.0 && *cfg.gamma * cls.arms() <= 1.0 + 1e-12)) {
        fail("gamma", "must lie in (0, 1/K]");
      }
      if (!cfg.gamma && cls.size() < 2) {
        fail("gamma", "default gamma needs at least two policies");
      }
      break;
    }
    case Mode::Rademacher:
      make_class(cfg.class_spec);
      make_environment(cfg.env_spec, T_max);
      break;
    case Mode::Verify:
      break;
  }
  cfg.canonical = c;
  cfg.hash = config_hash(c);
  return cfg;
}

// ---------------------------------------------------------------- CSV

namespace
{

void put(std::string& out, double v)
{
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, r.ptr);
}

void put(std::string& out, std::uint64_t v)
{
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, r.ptr);
}

void put(std::string& out, const Feature& x)
{
  const auto& c = x.coords();
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    if (i > 0) {
      out += ';';
    }
    put(out, c[i]);
  }
}

bool close(double a, double b)
{
  return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b));
}

}  // namespace

void check_prefix_sums(const RegretTrace& trace)
{
  double loss = 0.0;
  double regret = 0.0;
  for (const auto& r : trace.rows) {
    loss += r.loss;
    regret += r.loss - r.comparator_loss;
    if (!close(r.cum_loss, loss) || !close(r.cum_regret, regret)) {
      throw InvariantBreach("cumulative columns diverge from prefix sums at t=" + std::to_string(r.t));
    }
  }
}

void check_prefix_sums(const BanditTrace& trace)
{
  double regret = 0.0;
  for (const auto& r : trace.rows) {
    regret += r.expected_loss - r.comparator_cost;
    if (!close(r.cumulative_regret, regret)) {
      throw InvariantBreach("cumulative regret diverges from its prefix sum at t=" + std::to_string(r.t));
    }
  }
}

std::string online_csv(const RegretTrace& trace, bool with_block)
{
  std::string out = "# schema=1\n";
  out += with_block ? "t,block,epoch,j,x,y,yhat,loss,cum_loss,cum_regret,erm_calls,comparator_loss\n"
                    : "t,epoch,j,x,y,yhat,loss,cum_loss,cum_regret,erm_calls,comparator_loss\n";
  out.reserve(out.size() + trace.rows.size() * 96);
  for (const auto& r : trace.rows) {
    put(out, static_cast<std::uint64_t>(r.t));
    out += ',';
    if (with_block) {
      put(out, static_cast<std::uint64_t>(r.block));
      out += ',';
    }
    put(out, static_cast<std::uint64_t>(r.epoch));
    out += ',';
    put(out, static_cast<std::uint64_t>(r.j));
    out += ',';
    put(out, r.x);
    for (double v : {r.y, r.yhat, r.loss, r.cum_loss, r.cum_regret}) {
      out += ',';
      put(out, v);
    }
    out += ',';
    put(out, r.erm_calls);
    out += ',';
    put(out, r.comparator_loss);
    out += '\n';
  }
  return out;
}

std::string bandit_csv(const BanditTrace& trace)
{
  std::string out = "# schema=1\nt,epoch,arm,expected_loss,realized_cost,cumulative_regret,comparator_cost,erm_calls\n";
  for (const auto& r : trace.rows) {
    put(out, static_cast<std::uint64_t>(r.t));
    out += ',';
    put(out, static_cast<std::uint64_t>(r.epoch));
    out += ',';
    put(out, static_cast<std::uint64_t>(r.arm));
    for (double v : {r.expected_loss, r.realized_cost, r.cumulative_regret, r.comparator_cost}) {
      out += ',';
      put(out, v);
    }
    out += ',';
    put(out, r.erm_calls);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------- exponent fit

ExponentFit fit_exponent(const std::vector<double>& horizons, const std::vector<double>& regrets)
{
  if (horizons.size() != regrets.size()) {
    throw InputError("fit_exponent: horizons and regrets differ in length");
  }
  if (horizons.size() < 3) {
    throw InputError("fit_exponent: need at least 3 horizons");
  }
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (!(horizons[i] > 0.0) || (i > 0 && horizons[i] <= horizons[i - 1])) {
      throw InputError("fit_exponent: horizons must be positive and strictly increasing");
    }
  }
  ExponentFit fit;
  fit.horizons = horizons;
  fit.regrets = regrets;
  for (double r : regrets) {
    if (!(r > 0.0)) {
      fit.notice = "fit skipped: nonpositive mean regret";
      return fit;
    }
  }
  const auto n = static_cast<Eigen::Index>(horizons.size());
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    A(i, 0) = 1.0;
    A(i, 1) = std::log(horizons[static_cast<std::size_t>(i)]);
    b[i] = std::log(regrets[static_cast<std::size_t>(i)]);
  }
  const Eigen::Vector2d coef = A.colPivHouseholderQr().solve(b);
  fit.intercept = coef[0];
  fit.slope = coef[1];
  fit.residual = std::sqrt((A * coef - b).squaredNorm() / static_cast<double>(n));
  fit.ok = true;
  return fit;
}

// ---------------------------------------------------------------- runner

namespace
{

struct JobOutput
{
  double value = 0.0;  // regret, or the Rademacher estimate
  double std_error = 0.0;
  std::uint64_t erm_calls = 0;
  std::size_t straddling = 0;
  std::size_t block_length = 0;
  std::string csv;
  std::string exact;  // rademacher only
};

JobOutput run_online_job(const ExperimentConfig& cfg, std::size_t T, std::uint64_t seed)
{
  const auto cls = make_class(cfg.class_spec);
  const ShiftingProcess env = make_environment(cfg.env_spec, T);
  const AdversaryPtr adv = make_adversary(cfg.adversary_spec, cfg.class_spec, cfg.loss, seed);
  OnlineConfig oc{make_schedule(cfg.schedule_spec), {}, cfg.probe_size, seed};
  oc.predictor.loss = cfg.loss;
  oc.predictor.seed = seed;

  JobOutput out;
  RegretTrace trace;
  if (cfg.mode == Mode::Shifting) {
    const std::size_t K = cfg.shifts ? *cfg.shifts : env.changes();
    trace = run_shifting(*cls, env, *adv, T, K, oc);
    out.block_length = block_length(T, K);
    out.straddling = straddling_blocks(T, out.block_length, env.change_points());
  } else {
    trace = run_epoch_predictor(*cls, env, *adv, T, oc);
  }
  check_prefix_sums(trace);
  if (trace.erm_calls_total != cls->calls()) {
    throw InvariantBreach("erm_calls column total differs from the oracle counter");
  }
  out.value = trace.regret;
  out.erm_calls = trace.erm_calls_total;
  out.csv = online_csv(trace, cfg.mode == Mode::Shifting);
  return out;
}

JobOutput run_bandit_job(const ExperimentConfig& cfg, std::size_t T, std::uint64_t seed)
{
  const PolicyClass cls = make_policy_class(cfg.class_spec);
  const ShiftingProcess env = make_environment(cfg.env_spec, T);
  const CostAdversaryPtr adv = make_cost_adversary(cfg.adversary_spec);
  BanditConfig bc;
  bc.gamma = cfg.gamma;
  bc.seed = seed;
  const BanditTrace trace = run_bandit(cls, env, *adv, T, bc);
  check_prefix_sums(trace);
  if (trace.erm_calls_total != cls.calls()) {
    throw InvariantBreach("erm_calls column total differs from the oracle counter");
  }
  JobOutput out;
  out.value = trace.regret;
  out.erm_calls = trace.erm_calls_total;
  out.csv = bandit_csv(trace);
  return out;
}

JobOutput run_rademacher_job(const ExperimentConfig& cfg, std::size_t T, std::uint64_t seed)
{
  const auto cls = make_class(cfg.class_spec);
  const ShiftingProcess env = make_environment(cfg.env_spec, T);
  Rng feature_rng(derive_seed(seed, {0x4ad, T}));
  std::vector<Feature> xs;
  for (std::size_t t = 1; t <= T; ++t) {
    xs.push_back(env.sample(t, feature_rng));
  }
  Rng sign_rng(derive_seed(seed, {0x5167, T}));
  const McEstimate e = estimate_rademacher(*cls, xs, cfg.rademacher_mc, sign_rng);
  JobOutput out;
  out.value = e.mean;
  out.std_error = e.std_error;
  if (T <= 16) {
    std::string s;
    put(s, exact_rademacher(*cls, xs));
    out.exact = s;
  }
  out.erm_calls = cls->calls();
  return out;
}

double mean_of(const std::vector<double>& v)
{
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v)
{
  if (v.size() < 2) {
    return 0.0;
  }
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) {
    s += (x - m) * (x - m);
  }
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

void write_file(const fs::path& path, const std::string& text, std::vector<fs::path>& written)
{
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) {
    throw InputError("cannot open " + path.string() + " for writing");
  }
  written.push_back(path);
  os << text;
  if (!os.flush()) {
    throw InputError("write failed for " + path.string());
  }
}

json report_json(const CheckReport& r)
{
  json j = {{"name", r.name},
            {"passed", r.passed},
            {"instances", r.instances},
            {"std_error", r.std_error},
            {"note", r.note}};
  j["worst_margin"] = std::isfinite(r.worst_margin) ? json(r.worst_margin) : json(nullptr);
  return j;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg)
{
  ExperimentResult result;
  std::vector<fs::path> written;
  try {
    fs::create_directories(cfg.out);
    json summary = {{"config_hash", cfg.hash},
                    {"mode", mode_name(cfg.mode)},
                    {"seeds", cfg.seeds},
                    {"config", cfg.canonical}};

    if (cfg.mode == Mode::Verify) {
      result.checks = run_verify_suite(cfg.verify);
      json checks = json::array();
      bool all = true;
      for (const auto& r : result.checks) {
        checks.push_back(report_json(r));
        all = all && r.passed;
      }
      summary["checks"] = checks;
      summary["passed"] = all;
      summary["mean_regret"] = nullptr;
      summary["std_regret"] = nullptr;
      summary["erm_calls_total"] = 0;
      result.exit_code = all ? 0 : 1;
    } else {
      struct Job
      {
        std::size_t h;
        std::size_t s;
      };
      std::vector<Job> jobs;
      for (std::size_t h = 0; h < cfg.horizons.size(); ++h) {
        for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
          jobs.push_back({h, s});
        }
      }
      std::vector<JobOutput> outputs(jobs.size());
      std::vector<std::exception_ptr> errors(jobs.size());
      std::atomic<std::size_t> next{0};
      auto worker = [&]() {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
          const std::size_t T = cfg.horizons[jobs[i].h];
          const std::uint64_t seed = cfg.seeds[jobs[i].s];
          try {
            switch (cfg.mode) {
              case Mode::Bandit:
                outputs[i] = run_bandit_job(cfg, T, seed);
                break;
              case Mode::Rademacher:
                outputs[i] = run_rademacher_job(cfg, T, seed);
                break;
              default:
                outputs[i] = run_online_job(cfg, T, seed);
                break;
            }
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      };
      unsigned n_workers = cfg.workers ? cfg.workers : std::max(1U, std::thread::hardware_concurrency());
      n_workers = static_cast<unsigned>(std::min<std::size_t>(n_workers, jobs.size()));
      if (n_workers <= 1) {
        worker();
      } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < n_workers; ++w) {
          pool.emplace_back(worker);
        }
        for (auto& th : pool) {
          th.join();
        }
      }
      for (const auto& e : errors) {
        if (e) {
          std::rethrow_exception(e);
        }
      }

      std::string rademacher_rows = "# schema=1\nT,seed,mean,std_error,samples,exact\n";
      for (std::size_t i = 0; i < jobs.size(); ++i) {
        const std::size_t T = cfg.horizons[jobs[i].h];
        const std::uint64_t seed = cfg.seeds[jobs[i].s];
        if (cfg.mode == Mode::Rademacher) {
          put(rademacher_rows, static_cast<std::uint64_t>(T));
          rademacher_rows += ',';
          put(rademacher_rows, seed);
          rademacher_rows += ',';
          put(rademacher_rows, outputs[i].value);
          rademacher_rows += ',';
          put(rademacher_rows, outputs[i].std_error);
          rademacher_rows += ',';
          put(rademacher_rows, static_cast<std::uint64_t>(cfg.rademacher_mc));
          rademacher_rows += ',' + outputs[i].exact + '\n';
        } else {
          const std::string name = mode_name(cfg.mode) + "_T" + std::to_string(T) + "_seed" + std::to_string(seed) +
                                   "_" + cfg.hash + ".csv";
          write_file(cfg.out / name, outputs[i].csv, written);
        }
      }
      if (cfg.mode == Mode::Rademacher) {
        write_file(cfg.out / ("rademacher_" + cfg.hash + ".csv"), rademacher_rows, written);
      }

      json per_horizon = json::array();
      std::uint64_t calls_total = 0;
      for (std::size_t h = 0; h < cfg.horizons.size(); ++h) {
        HorizonStats st;
        st.T = cfg.horizons[h];
        for (std::size_t i = 0; i < jobs.size(); ++i) {
          if (jobs[i].h == h) {
            st.regrets.push_back(outputs[i].value);
            st.erm_calls += outputs[i].erm_calls;
            st.straddling = std::max(st.straddling, outputs[i].straddling);
            st.block_length = outputs[i].block_length;
          }
        }
        st.mean = mean_of(st.regrets);
        st.stddev = stddev_of(st.regrets);
        calls_total += st.erm_calls;
        json entry = {{"T", st.T}, {"erm_calls_total", st.erm_calls}};
        if (cfg.mode == Mode::Rademacher) {
          entry["mean_estimate"] = st.mean;
          entry["std_estimate"] = st.stddev;
          entry["estimates"] = st.regrets;
        } else {
          entry["mean_regret"] = st.mean;
          entry["std_regret"] = st.stddev;
          entry["regrets"] = st.regrets;
        }
        if (cfg.mode == Mode::Shifting) {
          entry["block_length"] = st.block_length;
          entry["straddling_blocks"] = st.straddling;
        }
        per_horizon.push_back(entry);
        result.horizons.push_back(std::move(st));
      }
      summary["per_horizon"] = per_horizon;
      summary["erm_calls_total"] = calls_total;
      if (cfg.mode == Mode::Rademacher) {
        summary["mean_regret"] = nullptr;
        summary["std_regret"] = nullptr;
      } else {
        summary["mean_regret"] = result.horizons.back().mean;
        summary["std_regret"] = result.horizons.back().stddev;
        if (cfg.horizons.size() >= 3) {
          std::vector<double> hs;
          std::vector<double> rs;
          for (const auto& st : result.horizons) {
            hs.push_back(static_cast<double>(st.T));
            rs.push_back(st.mean);
          }
          const ExponentFit fit = fit_exponent(hs, rs);
          if (fit.ok) {
            summary["exponent_fit"] = {{"slope", fit.slope},
                                       {"intercept", fit.intercept},
                                       {"residual", fit.residual},
                                       {"horizons", fit.horizons},
                                       {"mean_regrets", fit.regrets}};
          } else {
            summary["exponent_fit_notice"] = fit.notice;
          }
        } else if (cfg.horizons.size() == 2) {
          summary["exponent_fit_notice"] = "fit skipped: need at least 3 horizons";
        }
      }
    }
    json files = json::array();
    for (const auto& p : written) {
      files.push_back(p.filename().string());
    }
    summary["files"] = files;
    write_file(cfg.out / ("summary_" + cfg.hash + ".json"), summary.dump(2) + "\n", written);
    result.summary = std::move(summary);
    result.files = written;
    return result;
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) {
      fs::remove(p, ec);
    }
    throw;
  }
}

}  // namespace hol
