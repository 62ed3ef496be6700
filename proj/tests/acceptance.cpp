// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "hol/bandit.hpp"
#include "hol/epochs.hpp"
#include "hol/harness.hpp"
#include "hol/oracles.hpp"
#include "hol/shifting.hpp"
#include "hol/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <vector>

using namespace hol;
namespace fs = std::filesystem;

namespace
{

struct Outcome
{
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const fs::path kScratch = "acceptance_out";

// Lattice queries k/100 so a 0.005 reference grid holds a representative of every cell.
MixedErmQuery lattice_query(std::mt19937_64& rng, const std::vector<double>* support)
{
  std::uniform_int_distribution<int> lattice(0, 100);
  std::uniform_int_distribution<int> n_pairs(0, 8);
  std::uniform_int_distribution<int> n_signed(0, 5);
  std::uniform_int_distribution<int> lab(0, 4);
  std::uniform_int_distribution<int> wt(1, 3);
  const auto point = [&]() {
    if (support) {
      return Feature((*support)[std::uniform_int_distribution<std::size_t>(0, support->size() - 1)(rng)]);
    }
    return Feature(lattice(rng) / 100.0);
  };
  MixedErmQuery q;
  const int np = n_pairs(rng);
  for (int i = 0; i < np; ++i) {
    const bool binary = (rng() >> 63) != 0;
    const double y = binary ? double(lab(rng) % 2) : lab(rng) / 4.0;
    q.pairs.push_back({point(), y, double(wt(rng))});
  }
  const int ns = n_signed(rng);
  for (int i = 0; i < ns; ++i) {
    q.signed_terms.push_back({(rng() >> 63) ? 1 : -1, point()});
  }
  q.coefficient = std::uniform_int_distribution<int>(0, 4)(rng) / 2.0;
  return q;
}

Outcome oracle_exactness()
{
  std::mt19937_64 rng(101);
  const double step = 0.005;
  const double tol = 1e-9;
  std::size_t mismatches = 0;
  std::size_t queries = 0;
  double worst = 0.0;
  const auto compare = [&](const HypothesisClass& cls, const MixedErmQuery& q) {
    const double got = cls.solve(q).objective;
    const double ref = reference_solve(cls, q, step).objective;
    worst = std::max(worst, std::abs(got - ref));
    mismatches += std::abs(got - ref) > tol * (1.0 + std::abs(ref));
    ++queries;
  };

  const ThresholdClass th;
  for (int i = 0; i < 500; ++i) {
    compare(th, lattice_query(rng, nullptr));
  }
  const double widths[] = {0.05, 0.3, 0.8};
  for (int i = 0; i < 500; ++i) {
    compare(IntervalClass(widths[i % 3]), lattice_query(rng, nullptr));
  }
  const std::vector<double> support{0.1, 0.3, 0.5, 0.7, 0.9};
  for (int i = 0; i < 500; ++i) {
    Eigen::MatrixXd t(6, 5);
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) {
        t(r, c) = std::uniform_int_distribution<int>(0, 4)(rng) / 4.0;
      }
    }
    compare(FiniteClass::table(support, t), lattice_query(rng, &support));
  }
  return {mismatches == 0, "queries=" + std::to_string(queries) + " mismatches=" + std::to_string(mismatches) +
                               " max_gap=" + fmt("%.3g", worst)};
}

Outcome call_budget()
{
  const ThresholdClass th;
  const auto env = ShiftingProcess::iid(FeatureDistribution::uniform());
  const std::size_t T = 512;
  OnlineConfig cfg;
  cfg.seed = 5;

  const auto fast_adv = noisy_threshold(0.5, 0.1, 5);
  const RegretTrace fast = run_epoch_predictor(th, env, *fast_adv, T, cfg);
  std::size_t fast_bad = 0;
  for (const auto& r : fast.rows) {
    fast_bad += r.erm_calls != 2;
  }

  OnlineConfig gen = cfg;
  gen.predictor.fast_binary_path = false;
  const auto gen_adv = noisy_threshold(0.5, 0.1, 5);
  const RegretTrace general = run_epoch_predictor(th, env, *gen_adv, T, gen);
  std::size_t gen_bad = 0;
  std::uint64_t gen_max = 0;
  for (const auto& r : general.rows) {
    gen_bad += r.erm_calls > general_call_budget(gen.predictor.loss, gen.schedule.length(r.epoch));
    gen_max = std::max(gen_max, r.erm_calls);
  }
  const bool ok = fast.rows.size() == T && general.rows.size() == T && fast_bad == 0 && gen_bad == 0;
  return {ok, "fast_rounds_not_2=" + std::to_string(fast_bad) + " general_over_budget=" + std::to_string(gen_bad) +
                  " general_max_calls=" + std::to_string(gen_max)};
}

Outcome admissibility()
{
  const auto start = std::chrono::steady_clock::now();
  AdmissibilityOptions opt;
  opt.mc_samples = 2000;
  const auto fixtures = admissibility_fixtures(7);
  bool shapes = true;
  for (const auto& s : fixtures) {
    const auto* fin = dynamic_cast<const FiniteClass*>(s.cls.get());
    shapes = shapes && fin && fin->size() <= 6 && s.support.size() <= 4 && s.horizon <= 3;
  }
  const CheckReport main = check_admissibility(fixtures, opt);
  AdmissibilityOptions bad = opt;
  bad.corruption = 0.3;
  const CheckReport control = check_admissibility(fixtures, bad);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {shapes && main.passed && !control.passed && secs < 300.0,
          "fixtures=" + std::to_string(fixtures.size()) + " worst_margin=" + fmt("%.4g", main.worst_margin) +
              " control_passed=" + (control.passed ? "yes" : "no") + " seconds=" + fmt("%.1f", secs)};
}

Outcome sensitivity()
{
  const CheckReport r = check_sensitivity(200, 7);
  return {r.passed && r.instances >= 200, r.line()};
}

Outcome binary_structure()
{
  const CheckReport r = check_binary_structure(1000, 7);
  return {r.passed && r.instances == 1000, r.line()};
}

// E|S_T| for a simple symmetric walk, summed over the binomial law in log space.
double abs_walk(std::size_t T)
{
  const double n = double(T);
  double total = 0.0;
  for (std::size_t k = 0; k <= T; ++k) {
    const double kk = double(k);
    total += std::exp(std::lgamma(n + 1) - std::lgamma(kk + 1) - std::lgamma(n - kk + 1) - n * std::log(2.0)) *
             std::abs(2 * kk - n);
  }
  return total;
}

Outcome rademacher()
{
  const FiniteClass two = FiniteClass::constants({0.0, 1.0});
  const double exact2 = exact_rademacher(two, {Feature(0.3), Feature(0.6)});
  Rng rng(0x5167);
  const std::vector<Feature> xs(100, Feature(0.5));
  const McEstimate mc = estimate_rademacher(two, xs, 20000, rng);
  const double target = 0.5 * abs_walk(100);
  const bool ok = exact2 == 0.5 && std::abs(mc.mean - target) <= 3 * mc.std_error;
  return {ok, "T2=" + fmt("%.6g", exact2) + " T100=" + fmt("%.5f", mc.mean) + " target=" + fmt("%.5f", target) +
                  " se=" + fmt("%.2g", mc.std_error)};
}

// Runs one experiment into the scratch directory; horizon means in order.
ExperimentResult experiment(const std::string& mode, const std::vector<std::string>& sets, const std::string& tag)
{
  json cfg = default_config(parse_mode(mode));
  for (const auto& s : sets) {
    apply_override(cfg, s);
  }
  cfg["out"] = (kScratch / tag).string();
  return run_experiment(parse_config(cfg));
}

ExponentFit fit_of(const ExperimentResult& r)
{
  std::vector<double> hs;
  std::vector<double> ms;
  for (const auto& h : r.horizons) {
    hs.push_back(double(h.T));
    ms.push_back(h.mean);
  }
  return fit_exponent(hs, ms);
}

std::string means_of(const ExperimentResult& r)
{
  std::string s;
  for (const auto& h : r.horizons) {
    s += (s.empty() ? "" : ",") + fmt("%.1f", h.mean);
  }
  return s;
}

const std::vector<std::string> kOnlineSweep = {"horizons=[512,1024,2048,4096]", "seeds=[0,1,2,3,4,5,6,7,8,9,10,"
                                                                                  "11,12,13,14,15,16,17,18,19]"};

Outcome online_growth()
{
  const auto start = std::chrono::steady_clock::now();
  const ExperimentResult r = experiment("online", kOnlineSweep, "c7");
  const ExponentFit fit = fit_of(r);
  bool doubling = true;
  for (std::size_t i = 0; i + 1 < r.horizons.size(); ++i) {
    doubling = doubling && r.horizons[i + 1].mean / 2.0 < r.horizons[i].mean;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {fit.ok && fit.slope <= 0.85 && doubling && secs < 1800.0,
          "slope=" + fmt("%.4f", fit.slope) + " gate<=0.85 means=" + means_of(r) +
              " doubling=" + (doubling ? "ok" : "violated") + " seconds=" + fmt("%.1f", secs)};
}

Outcome adaptive_growth()
{
  std::vector<std::string> sets = kOnlineSweep;
  sets.push_back(R"(adversary={"name":"flip_to_far"})");
  const ExperimentResult r = experiment("online", sets, "c8");
  const ExponentFit fit = fit_of(r);
  const std::string band = fit.slope <= 0.85 ? "" : " (report-only band)";
  return {fit.ok && fit.slope <= 0.95, "slope=" + fmt("%.4f", fit.slope) + " gate<=0.95" + band + " means=" + means_of(r)};
}

Outcome shifting_growth()
{
  std::vector<std::string> sets = {kOnlineSweep[1], "horizons=[1024,2048,4096,8192]"};
  const ExperimentResult r = experiment("shifting", sets, "c9");
  const ExponentFit fit = fit_of(r);
  // K is the change count of the default point_shifts environment
  const std::size_t K = make_environment(default_config(Mode::Shifting)["env"], 1024).change_points().size();
  std::size_t worst = 0;
  bool exact = K == 2;
  for (const auto& h : r.horizons) {
    worst = std::max(worst, h.straddling);
    const ShiftingProcess env = make_environment(default_config(Mode::Shifting)["env"], h.T);
    exact = exact && h.block_length == block_length(h.T, K) &&
            straddling_blocks(h.T, h.block_length, env.change_points()) <= K;
  }
  return {fit.ok && fit.slope <= 0.95 && exact && worst <= K,
          "K=" + std::to_string(K) + " max_straddling=" + std::to_string(worst) + " slope=" + fmt("%.4f", fit.slope) +
              " gate<=0.95 means=" + means_of(r)};
}

Eigen::VectorXd vec(std::initializer_list<double> v)
{
  Eigen::VectorXd out(Eigen::Index(v.size()));
  Eigen::Index i = 0;
  for (double x : v) {
    out[i++] = x;
  }
  return out;
}

double grid_min(const Eigen::VectorXd& b, double step)
{
  const int n = int(std::lround(1.0 / step));
  double best = INFINITY;
  for (int i = 0; i <= n; ++i) {
    if (b.size() == 2) {
      best = std::min(best, waterfill_objective(vec({i * step, 1.0 - i * step}), b));
      continue;
    }
    for (int k = 0; k <= n - i; ++k) {
      best = std::min(best, waterfill_objective(vec({i * step, k * step, 1.0 - (i + k) * step}), b));
    }
  }
  return best;
}

Outcome bandit_minimax()
{
  Rng rng(10);
  std::uniform_real_distribution<double> u(-0.5, 1.0);
  std::uniform_int_distribution<int> lat(-100, 200);
  double gap2 = 0.0;
  double gap3 = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const Eigen::VectorXd b2 = vec({u(rng), u(rng)});
    gap2 = std::max(gap2, std::abs(waterfill_q(b2).g - grid_min(b2, 0.001)));
    const Eigen::VectorXd b3 = vec({lat(rng) * 0.005, lat(rng) * 0.005, lat(rng) * 0.005});
    gap3 = std::max(gap3, std::abs(waterfill_q(b3).g - grid_min(b3, 0.005)));
  }

  const Eigen::VectorXd c = vec({0.3, 0.8, 0.5});
  const Eigen::VectorXd q = vec({0.5, 0.2, 0.3});
  const double gamma = 0.1;
  const int n = 100000;
  std::discrete_distribution<int> arm({0.5, 0.2, 0.3});
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < n; ++i) {
    const int a = arm(rng);
    const Eigen::VectorXd e = estimate_cost(a, c[a], q, gamma, rng);
    sum += e;
    sq += e.cwiseProduct(e);
  }
  bool unbiased = true;
  double worst_z = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double mean = sum[k] / n;
    const double se = std::sqrt((sq[k] / n - mean * mean) / n);
    worst_z = std::max(worst_z, std::abs(mean - c[k]) / se);
    unbiased = unbiased && std::abs(mean - c[k]) <= 3 * se;
  }

  const auto env = ShiftingProcess::iid(FeatureDistribution::uniform());
  const auto costs = constant_costs(vec({0.0, 1.0}));
  BanditConfig cfg;
  cfg.seed = 11;
  const BanditTrace tr = run_bandit(PolicyClass::standard4(), env, *costs, 512, cfg);
  std::size_t floor_bad = 0;
  for (const auto& r : tr.rows) {
    floor_bad += !(r.q.minCoeff() >= r.gamma);
  }
  const bool ok = gap2 <= 1e-6 && gap3 <= 1e-4 && unbiased && tr.rows.size() == 512 && floor_bad == 0;
  return {ok, "K2_gap=" + fmt("%.2g", gap2) + " K3_gap=" + fmt("%.2g", gap3) + " worst_z=" + fmt("%.2f", worst_z) +
                  " rounds_below_gamma=" + std::to_string(floor_bad)};
}

Outcome bandit_growth()
{
  const ExperimentResult r = experiment("bandit", kOnlineSweep, "c11");
  const ExponentFit fit = fit_of(r);
  // uniform play over two arms with costs (0, 1) loses 1/2 per round against the best policy
  const double uniform = 0.5 * double(r.horizons.back().T);
  const double final_mean = r.horizons.back().mean;
  return {fit.ok && fit.slope <= 0.95 && final_mean <= 0.75 * uniform,
          "slope=" + fmt("%.4f", fit.slope) + " gate<=0.95 final_mean=" + fmt("%.1f", final_mean) +
              " uniform=" + fmt("%.1f", uniform) + " means=" + means_of(r)};
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism()
{
  const std::vector<std::pair<std::string, std::vector<std::string>>> runs = {
      {"online", {"horizons=[64,128]", "seeds=[0,1,2]"}},
      {"online", {"T=96", R"(adversary={"name":"flip_to_far"})"}},
      {"shifting", {"horizons=[256]", "seeds=[4,5]"}},
      {"bandit", {"horizons=[128,256]", "seeds=[0,1]"}},
  };
  std::size_t compared = 0;
  std::size_t differing = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::vector<std::string> a = runs[i].second;
    std::vector<std::string> b = runs[i].second;
    a.push_back("workers=1");
    b.push_back("workers=2");
    const std::string tag = "c12_" + std::to_string(i);
    const ExperimentResult ra = experiment(runs[i].first, a, tag + "a");
    const ExperimentResult rb = experiment(runs[i].first, b, tag + "b");
    for (const auto& f : ra.files) {
      if (f.extension() != ".csv") {
        continue;
      }
      ++compared;
      const fs::path other = kScratch / (tag + "b") / f.filename();
      differing += !fs::exists(other) || slurp(f) != slurp(other);
    }
  }
  return {compared > 0 && differing == 0,
          "csv_files=" + std::to_string(compared) + " differing=" + std::to_string(differing)};
}

}  // namespace

int main()
{
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"C1 oracle_exactness", oracle_exactness},
      {"C2 erm_call_budget", call_budget},
      {"C3 approx_admissibility", admissibility},
      {"C4 sensitivity", sensitivity},
      {"C5 binary_sup_structure", binary_structure},
      {"C6 rademacher", rademacher},
      {"C7 online_regret_growth", online_growth},
      {"C8 adaptive_regret_growth", adaptive_growth},
      {"C9 shifting", shifting_growth},
      {"C10 bandit_minimax", bandit_minimax},
      {"C11 bandit_regret_growth", bandit_growth},
      {"C12 determinism", determinism},
  };
  std::error_code ec;
  fs::remove_all(kScratch, ec);
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  fs::remove_all(kScratch, ec);
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
