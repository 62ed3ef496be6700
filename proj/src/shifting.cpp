#include "hol/shifting.hpp"

#include <algorithm>
#include <cmath>

namespace hol
{

std::size_t block_length(std::size_t T, std::size_t K)
{
  if (T < 1 || K < 1) {
    throw InputError("block_length needs T >= 1 and K >= 1");
  }
  const double b = std::pow(static_cast<double>(T), 0.8) * std::pow(static_cast<double>(K), -0.8);
  const auto rounded = static_cast<std::size_t>(std::floor(b + 0.5));
  return std::clamp<std::size_t>(rounded, 1, T);
}

std::size_t straddling_blocks(std::size_t T, std::size_t B, const std::vector<std::size_t>& change_points)
{
  if (B < 1) {
    throw InputError("block length must be >= 1");
  }
  std::size_t count = 0;
  for (std::size_t s = 1; s <= T; s += B) {
    const std::size_t e = std::min(T, s + B - 1);
    const bool hit = std::any_of(change_points.begin(), change_points.end(),
                                 [&](std::size_t c) { return c > s && c <= e; });
    count += hit ? 1 : 0;
  }
  return count;
}

RegretTrace run_shifting(const HypothesisClass& cls, const ShiftingProcess& env, const Adversary& adversary,
                         std::size_t T, std::size_t K, const OnlineConfig& config)
{
  const std::size_t B = block_length(T, K);
  detail::Game game(cls, env, adversary, config);
  std::size_t block = 0;
  for (std::size_t s = 1; s <= T; s += B) {
    game.play_block(s, std::min(B, T - s + 1), block++);
  }
  RegretTrace trace = game.finish();
  trace.extrapolation = !cls.binary();
  return trace;
}

}  // namespace hol
