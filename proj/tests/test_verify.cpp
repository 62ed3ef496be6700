#include "hol/oracles.hpp"
#include "hol/verify.hpp"

#include <doctest.h>

#include <cmath>

using namespace hol;

namespace
{

// E|eps_1 + ... + eps_T| = sum_k C(T,k) 2^-T |2k - T|, via log-gamma.
double abs_walk_reference(std::size_t T)
{
  double total = 0.0;
  const double n = static_cast<double>(T);
  for (std::size_t k = 0; k <= T; ++k) {
    const double kk = static_cast<double>(k);
    const double logp = std::lgamma(n + 1) - std::lgamma(kk + 1) - std::lgamma(n - kk + 1) - n * std::log(2.0);
    total += std::exp(logp) * std::abs(2 * kk - n);
  }
  return total;
}

std::vector<Feature> pts(std::initializer_list<double> xs)
{
  std::vector<Feature> out;
  for (double x : xs) {
    out.emplace_back(x);
  }
  return out;
}

}  // namespace

TEST_CASE("Rademacher averages")
{
  const FiniteClass two = FiniteClass::constants({0.0, 1.0});
  CHECK(exact_rademacher(two, pts({0.3, 0.6})) == doctest::Approx(0.5));
  CHECK(rademacher_sup(two, pts({0.3, 0.6}), {1, 1}) == doctest::Approx(2.0));
  CHECK(rademacher_sup(two, pts({0.3, 0.6}), {-1, 1}) == doctest::Approx(0.0));
  CHECK(rademacher_sup(two, pts({0.3, 0.6}), {-1, -1}) == doctest::Approx(0.0));

  const FiniteClass c = FiniteClass::constants({0.4});
  CHECK(std::abs(exact_rademacher(c, pts({0.1, 0.2, 0.3, 0.4}))) <= 1e-12);

  // exact enumeration agrees with the walk formula for the two-constant class
  for (std::size_t T = 1; T <= 10; ++T) {
    std::vector<Feature> xs(T, Feature(0.5));
    CHECK(exact_rademacher(two, xs) == doctest::Approx(0.5 * abs_walk_reference(T)));
  }
  CHECK(expected_abs_walk(100) == doctest::Approx(abs_walk_reference(100)).epsilon(1e-12));
  CHECK(expected_abs_walk(100) == doctest::Approx(std::sqrt(200.0 / M_PI)).epsilon(0.01));

  Rng rng(4);
  std::vector<Feature> xs(100, Feature(0.5));
  const McEstimate e = estimate_rademacher(two, xs, 20000, rng);
  CHECK(e.samples == 20000);
  CHECK(e.std_error > 0.0);
  CHECK(std::abs(e.mean - 0.5 * abs_walk_reference(100)) <= 3 * e.std_error);
}

TEST_CASE("admissibility on the worked fixtures")
{
  AdmissibilityOptions opt;
  opt.mc_samples = 2000;
  const CheckReport single = check_admissibility({singleton_fixture()}, opt);
  CHECK(single.passed);
  CHECK(single.worst_margin >= 0.0);
  CHECK(single.instances == 1);

  const auto all = admissibility_fixtures(7);
  REQUIRE(all.size() >= 2);
  CHECK(all[1].name == "two_constants");
  CHECK(all[1].horizon == 2);
  const CheckReport two = check_admissibility({all[1]}, opt);
  CHECK(two.passed);

  for (const auto& s : all) {
    CHECK(s.support.size() <= 4);
    CHECK(s.horizon <= 3);
    CHECK(s.pool.size() <= 6);
  }
  const CheckReport report = check_admissibility(all, opt);
  CHECK(report.passed);
  CHECK(report.std_error > 0.0);

  AdmissibilityOptions bad = opt;
  bad.corruption = 0.3;
  CHECK_FALSE(check_admissibility({singleton_fixture()}, bad).passed);
}

TEST_CASE("sensitivity and binary structure suites")
{
  const CheckReport s = check_sensitivity(200, 7);
  CHECK(s.passed);
  CHECK(s.instances >= 200);
  const CheckReport f = check_binary_structure(1000, 7);
  CHECK(f.passed);
  CHECK(f.instances == 1000);
}

TEST_CASE("sensitivity fixtures by hand")
{
  const ThresholdClass th;
  const LossFn abs = LossFn::absolute();
  const std::vector<LabeledPair> h = {{Feature(0.5), 1.0, 1.0}};
  double lo = INFINITY;
  double hi = -INFINITY;
  for (int k = 0; k <= 100; ++k) {
    const double f = f_eval(h, {}, {-1}, Feature(k / 100.0), th, abs);
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  CHECK(hi - lo == doctest::Approx(2.0));
  CHECK(hi - lo <= 4.0);

  const FiniteClass half = FiniteClass::constants({0.5});
  for (int k = 0; k <= 10; ++k) {
    CHECK(f_eval(h, {}, {1}, Feature(k / 10.0), half, abs) == doctest::Approx(f_eval(h, {}, {1}, Feature(0.0), half, abs)));
  }

  // labels moved by at most 0.1 at j = 3 shift f by at most 0.3
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<LabeledPair> a;
    std::vector<LabeledPair> b;
    for (int i = 0; i < 3; ++i) {
      const double y = u(rng);
      const double y2 = std::clamp(y + 0.2 * u(rng) - 0.1, 0.0, 1.0);
      const Feature x(u(rng));
      a.push_back({x, y, 1.0});
      b.push_back({x, y2, 1.0});
    }
    const std::vector<Feature> tail = pts({u(rng)});
    const std::vector<int> signs = {(rng() >> 63) ? 1 : -1, (rng() >> 63) ? 1 : -1};
    for (int k = 0; k <= 20; ++k) {
      const Feature x(k / 20.0);
      CHECK(std::abs(f_eval(a, tail, signs, x, th, abs) - f_eval(b, tail, signs, x, th, abs)) <= 0.3 + 1e-9);
    }
  }
}

TEST_CASE("decomposition")
{
  DecompositionOptions opt;
  const auto fixtures = decomposition_fixtures();
  const CheckReport all = check_decomposition(fixtures, opt);
  CHECK(all.passed);
  CHECK(all.instances == fixtures.size());

  DecompositionOptions bad = opt;
  bad.r0_scale = 0.5;
  CHECK_FALSE(check_decomposition({mismatched_pool_fixture()}, bad).passed);

  // the singleton fixture sits exactly on the bound: both sides vanish
  const CheckReport single = check_decomposition({fixtures.front()}, opt);
  CHECK(single.passed);
  CHECK(single.worst_margin <= 1e-5);

  DecompositionOptions tiny = opt;
  tiny.max_enumeration = 1;
  CHECK_THROWS_AS(check_decomposition({fixtures[1]}, tiny), ConfigError);
}

TEST_CASE("discrepancy probe")
{
  TinyScenario single = singleton_fixture();
  single.horizon = 3;
  single.pool = pts({0.3, 0.7, 0.3, 0.7});
  for (const auto& p : discrepancy_probe(single, 500, 1)) {
    CHECK(std::abs(p.discrepancy.mean) <= 1e-12);
  }

  // pool equal to the support of a uniform 2-point law, sampled with replacement
  TinyScenario matched;
  Eigen::MatrixXd t(2, 2);
  t << 0, 1, 1, 0;
  matched.cls = std::make_shared<FiniteClass>(FiniteClass::table({0.2, 0.8}, t));
  matched.support = pts({0.2, 0.8});
  matched.probs = {0.5, 0.5};
  matched.pool = pts({0.2, 0.8});
  matched.horizon = 3;
  const auto pts_m = discrepancy_probe(matched, 20000, 2, DrawMode::WithReplacement);
  REQUIRE(pts_m.size() == 2);
  for (const auto& p : pts_m) {
    CHECK(std::abs(p.discrepancy.mean) <= 3 * p.discrepancy.std_error);
    CHECK(p.reference == doctest::Approx(std::sqrt(p.j / 2.0)));
  }

  // doubling a mismatched pool with the same composition does not raise the discrepancy
  TinyScenario skew = matched;
  skew.pool = pts({0.2, 0.2, 0.2, 0.8});
  TinyScenario skew2 = skew;
  skew2.pool = pts({0.2, 0.2, 0.2, 0.8, 0.2, 0.2, 0.2, 0.8});
  const auto a = discrepancy_probe(skew, 20000, 3, DrawMode::WithReplacement);
  const auto b = discrepancy_probe(skew2, 20000, 3, DrawMode::WithReplacement);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double se = std::hypot(a[i].discrepancy.std_error, b[i].discrepancy.std_error);
    CHECK(std::abs(b[i].discrepancy.mean) <= std::abs(a[i].discrepancy.mean) + 3 * se);
  }
}

TEST_CASE("suite is deterministic and complete")
{
  VerifyOptions opt;
  opt.mc_samples = 300;
  opt.sensitivity_instances = 20;
  opt.binary_structure_instances = 50;
  opt.rademacher_mc = 2000;
  const auto a = run_verify_suite(opt);
  const auto b = run_verify_suite(opt);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].line() == b[i].line());
  }
  std::vector<std::string> names;
  for (const auto& r : a) {
    names.push_back(r.name);
  }
  CHECK(names == std::vector<std::string>{"rademacher_exact_T2", "rademacher_mc_T100", "admissibility",
                                          "admissibility_negative_control", "sensitivity", "binary_structure", "decomposition",
                                          "decomposition_negative_control"});
}

TEST_CASE("CheckReport bookkeeping")
{
  CheckReport r;
  r.name = "x";
  r.record(0.5, 0.1);
  r.record(0.2);
  CHECK(r.passed);
  CHECK(r.worst_margin == 0.2);
  CHECK(r.std_error == 0.1);
  CHECK(r.line().rfind("PASS x instances=2", 0) == 0);
  r.record(-0.01);
  CHECK_FALSE(r.passed);
  CHECK(r.line().rfind("FAIL", 0) == 0);
}
