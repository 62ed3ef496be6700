#include "hol/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace
{

// "3", "0,1,5" or "0-19".
std::vector<std::uint64_t> parse_seed_list(const std::vector<std::string>& items)
{
  std::vector<std::uint64_t> out;
  for (const auto& item : items) {
    const auto dash = item.find('-');
    try {
      if (dash == std::string::npos) {
        out.push_back(std::stoull(item));
        continue;
      }
      const std::uint64_t a = std::stoull(item.substr(0, dash));
      const std::uint64_t b = std::stoull(item.substr(dash + 1));
      if (b < a) {
        throw hol::ConfigError("--seed: empty range '" + item + "'");
      }
      for (std::uint64_t s = a; s <= b; ++s) {
        out.push_back(s);
      }
    } catch (const std::logic_error&) {
      throw hol::ConfigError("--seed: cannot parse '" + item + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Oracle-efficient hybrid online learning experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> seeds;
  std::string out;
  std::vector<std::size_t> horizons;
  std::vector<std::string> overrides;

  for (const char* mode : {"online", "shifting", "bandit", "verify", "rademacher"}) {
    CLI::App* sub = app.add_subcommand(mode, std::string("run the ") + mode + " experiment");
    sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seeds, "seed list, e.g. 0,1,2 or 0-19")->delimiter(',');
    sub->add_option("--out", out, "output directory");
    sub->add_option("--horizons", horizons, "comma-separated horizons")->delimiter(',');
    sub->add_option("--set", overrides, "override key=value (dotted keys, JSON values)");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string mode = app.get_subcommands().front()->get_name();

  try {
    hol::json user = hol::json::object();
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      try {
        user = hol::json::parse(is);
      } catch (const hol::json::parse_error& e) {
        throw hol::ConfigError(config_path + ": " + e.what());
      }
      if (user.contains("mode") && user["mode"] != mode) {
        throw hol::ConfigError("mode: config says " + user["mode"].dump() + " but the subcommand is " + mode);
      }
    }
    user["mode"] = mode;
    for (const auto& o : overrides) {
      hol::apply_override(user, o);
    }
    if (!seeds.empty()) {
      user["seeds"] = parse_seed_list(seeds);
    }
    if (!out.empty()) {
      user["out"] = out;
    }
    if (!horizons.empty()) {
      user["horizons"] = horizons;
    }

    const hol::ExperimentConfig cfg = hol::parse_config(user);
    const hol::ExperimentResult result = hol::run_experiment(cfg);
    for (const auto& r : result.checks) {
      std::cout << r.line() << "\n";
    }
    std::cout << result.summary.dump(2) << "\n";
    return result.exit_code;
  } catch (const hol::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const hol::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
