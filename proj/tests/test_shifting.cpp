#include "hol/oracles.hpp"
#include "hol/shifting.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace hol;

TEST_CASE("block_length")
{
  CHECK(block_length(100000, 10) == 1585);
  CHECK(block_length(32, 1) == 16);
  CHECK(block_length(50, 50) == 1);
  CHECK(block_length(50, 500) == 1);
  CHECK(block_length(1, 1) == 1);
  CHECK(block_length(2, 1) == 2);
  CHECK_THROWS_AS(block_length(0, 1), InputError);
  CHECK_THROWS_AS(block_length(10, 0), InputError);
  for (std::size_t T = 1; T < 3000; T += 37) {
    for (std::size_t K : {1u, 2u, 5u, 40u}) {
      const std::size_t B = block_length(T, K);
      CHECK(B >= 1);
      CHECK(B <= T);
      CHECK(std::abs(double(B) - std::pow(double(T) / double(K), 0.8)) <= 0.5 + 1e-9 * T + (B == 1 ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("straddling_blocks counts interior change points")
{
  CHECK(straddling_blocks(10, 5, {6}) == 0);  // a change at a block start does not straddle
  CHECK(straddling_blocks(10, 5, {5}) == 1);
  CHECK(straddling_blocks(10, 5, {2, 3}) == 1);
  CHECK(straddling_blocks(10, 5, {2, 9}) == 2);
  CHECK(straddling_blocks(10, 1, {2, 9}) == 0);
  CHECK(straddling_blocks(11, 5, {11}) == 0);
}

TEST_CASE("a single block reproduces the epoch predictor")
{
  const ThresholdClass th;
  const auto env = ShiftingProcess::iid(FeatureDistribution::uniform());
  const auto adv = noisy_threshold(0.4, 0.1, 2);
  OnlineConfig cfg;
  cfg.seed = 6;
  for (std::size_t T : {1u, 2u}) {
    REQUIRE(block_length(T, 1) == T);
    const RegretTrace a = run_shifting(th, env, *adv, T, 1, cfg);
    const RegretTrace b = run_epoch_predictor(th, env, *adv, T, cfg);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      CHECK(a.rows[i].x.scalar() == b.rows[i].x.scalar());
      CHECK(a.rows[i].yhat == b.rows[i].yhat);
      CHECK(a.rows[i].cum_regret == b.rows[i].cum_regret);
    }
  }
}

TEST_CASE("unit blocks never see a pool")
{
  const ThresholdClass th;
  const auto env = ShiftingProcess::iid(FeatureDistribution::uniform());
  const auto adv = noisy_threshold(0.5, 0.0, 1);
  OnlineConfig cfg;
  const RegretTrace tr = run_shifting(th, env, *adv, 40, 40, cfg);
  CHECK(tr.blocks.size() == 40);
  for (const auto& r : tr.rows) {
    CHECK(r.pool_size == 0);
    CHECK(r.halluc == 0);
    CHECK(r.epoch == 1);
    CHECK(r.j == 1);
    CHECK(r.yhat == 0.5);  // empty history, empty draw
  }
}

TEST_CASE("two-segment shift")
{
  const std::size_t T = 4096;
  const ShiftingProcess env({{FeatureDistribution::point_mass(0.2), 1},
                             {FeatureDistribution::point_mass(0.8), T / 2 + 1}});
  const ThresholdClass th;
  const auto adv = noisy_threshold(0.5, 0.1, 4);
  OnlineConfig cfg;
  cfg.seed = 2;
  const std::size_t K = 1;
  const std::size_t B = block_length(T, K);
  const RegretTrace tr = run_shifting(th, env, *adv, T, K, cfg);
  CHECK(straddling_blocks(T, B, env.change_points()) <= K);
  CHECK_FALSE(tr.extrapolation);

  std::size_t mixed = 0;
  for (const auto& blk : tr.blocks) {
    std::set<double> seen;
    for (std::size_t t = blk.first_t; t <= blk.last_t; ++t) {
      seen.insert(tr.rows[t - 1].x.scalar());
    }
    mixed += seen.size() > 1;
    // pools restart at every block
    CHECK(tr.rows[blk.first_t - 1].pool_size == 0);
    CHECK(tr.rows[blk.first_t - 1].epoch == 1);
  }
  CHECK(mixed <= K);

  // regret is against one global comparator
  double cum = 0.0;
  double cmp = 0.0;
  for (const auto& r : tr.rows) {
    cum += r.loss;
    cmp += r.comparator_loss;
  }
  CHECK(tr.regret == doctest::Approx(cum - cmp));
  CHECK(cmp == doctest::Approx(tr.comparator_loss));
  double block_cmp = 0.0;
  for (const auto& blk : tr.blocks) {
    block_cmp += blk.comparator_loss;
  }
  CHECK(block_cmp <= tr.comparator_loss + 1e-9);
}

TEST_CASE("real-valued classes are flagged as extrapolation")
{
  const FiniteClass cls = FiniteClass::constants({0.25, 0.75});
  const auto env = ShiftingProcess::iid(FeatureDistribution::uniform());
  const auto adv = constant_label(1.0);
  OnlineConfig cfg;
  CHECK(run_shifting(cls, env, *adv, 20, 2, cfg).extrapolation);
}
