#include "hol/core.hpp"
#include "hol/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace hol;

TEST_CASE("absolute loss values")
{
  const LossFn abs = LossFn::absolute();
  CHECK(loss_eval(abs, 0.3, 0.3) == 0.0);
  CHECK(loss_eval(abs, 0.0, 1.0) == 1.0);
  CHECK(loss_eval(abs, 0.25, 0.75) == doctest::Approx(0.5));
  CHECK(abs.lipschitz == 1.0);
}

TEST_CASE("loss_eval rejects out-of-range arguments")
{
  const LossFn abs = LossFn::absolute();
  CHECK_THROWS_AS(loss_eval(abs, -0.1, 0.5), DomainError);
  CHECK_THROWS_AS(loss_eval(abs, 0.5, 1.5), DomainError);
  CHECK_THROWS_AS(loss_eval(abs, std::nan(""), 0.5), DomainError);
}

TEST_CASE("custom losses carry a declared Lipschitz constant")
{
  CHECK_THROWS_AS(LossFn::custom("bad", 0.0, [](double a, double y) { return a - y; }), ConfigError);
  const LossFn sq = LossFn::squared();
  CHECK(sq.lipschitz == 2.0);
  CHECK(loss_eval(sq, 0.2, 0.7) == doctest::Approx(0.25));
}

TEST_CASE("signed_to_absolute identity")
{
  const PseudoLabel plus = signed_to_absolute(1);
  CHECK(plus.label == 0.0);
  CHECK(plus.offset == 0.0);
  const PseudoLabel minus = signed_to_absolute(-1);
  CHECK(minus.label == 1.0);
  CHECK(minus.offset == -1.0);
  CHECK(std::abs(0.4 - minus.label) + minus.offset == doctest::Approx(-0.4));
  CHECK_THROWS_AS(signed_to_absolute(0), InputError);

  // eps * v == |v - label| + offset on a grid of v
  for (int sign : {-1, 1}) {
    const PseudoLabel p = signed_to_absolute(sign);
    for (int k = 0; k <= 20; ++k) {
      const double v = k / 20.0;
      CHECK(std::abs(v - p.label) + p.offset == doctest::Approx(sign * v));
    }
  }
}

TEST_CASE("best_in_hindsight on small samples")
{
  const ThresholdClass th;
  const LossFn abs = LossFn::absolute();
  CHECK(best_in_hindsight(th, {{Feature(0.2), 0, 1}, {Feature(0.8), 1, 1}}, abs).objective == doctest::Approx(0.0));
  CHECK(best_in_hindsight(th, {{Feature(0.2), 1, 1}, {Feature(0.8), 0, 1}}, abs).objective == doctest::Approx(1.0));

  const FiniteClass two = FiniteClass::constants({0.0, 1.0});
  CHECK(best_in_hindsight(two, {{Feature(0.4), 0.5, 1}}, abs).objective == doctest::Approx(0.5));
}

TEST_CASE("query validation")
{
  MixedErmQuery q;
  q.pairs.push_back({Feature(0.5), 1.2, 1.0});
  CHECK_THROWS_AS(q.validate(), DomainError);
  q.pairs = {{Feature(0.5), 1.0, -1.0}};
  CHECK_THROWS_AS(q.validate(), InputError);
  q.pairs = {{Feature(0.5), 1.0, 1.0}};
  q.signed_terms.push_back({2, Feature(0.3)});
  CHECK_THROWS_AS(q.validate(), InputError);
}

TEST_CASE("solve counts oracle calls per instance")
{
  const ThresholdClass th;
  MixedErmQuery q;
  q.pairs.push_back({Feature(0.5), 1.0, 1.0});
  th.solve(q);
  th.solve(q);
  CHECK(th.calls() == 2);
  const auto copy = th.clone();
  CHECK(copy->calls() == 0);
  th.reset_calls();
  CHECK(th.calls() == 0);
}

TEST_CASE("derive_seed separates streams and is deterministic")
{
  std::set<std::uint64_t> seen;
  for (std::uint64_t tag = 0; tag < 100; ++tag) {
    seen.insert(derive_seed(7, {tag}));
    seen.insert(derive_seed(7, {tag, 1}));
  }
  CHECK(seen.size() == 200);
  CHECK(derive_seed(3, {1, 2}) == derive_seed(3, {1, 2}));
  CHECK(derive_seed(3, {1, 2}) != derive_seed(3, {2, 1}));
}

TEST_CASE("features are bounded in dimension and range")
{
  CHECK_THROWS_AS(Feature(1.5), DomainError);
  Eigen::VectorXd big = Eigen::VectorXd::Constant(kMaxFeatureDim + 1, 0.5);
  CHECK_THROWS_AS(Feature{big}, InputError);
  Eigen::VectorXd v(2);
  v << 0.1, 0.7;
  const Feature f(v);
  CHECK(f.dim() == 2);
  CHECK_THROWS_AS(f.scalar(), UnsupportedError);
  CHECK(distance_inf(f, Feature(Eigen::Vector2d(0.3, 0.2))) == doctest::Approx(0.5));
}
