#ifndef HOL_SHIFTING_HPP_
#define HOL_SHIFTING_HPP_

#include "hol/epochs.hpp"

#include <vector>

namespace hol
{

/// round(T^{4/5} K^{-4/5}) clamped to [1, T].
std::size_t block_length(std::size_t T, std::size_t K);

/// Number of blocks [s, s + B - 1] with some change point c satisfying s < c <= s + B - 1.
std::size_t straddling_blocks(std::size_t T, std::size_t B, const std::vector<std::size_t>& change_points);

/// Fixed-block scheme: the epoch predictor restarts from scratch in every block of length
/// block_length(T, K). Regret is measured against one global comparator; per-block comparators
/// are kept in trace.blocks.
RegretTrace run_shifting(const HypothesisClass& cls, const ShiftingProcess& env, const Adversary& adversary,
                         std::size_t T, std::size_t K, const OnlineConfig& config);

}  // namespace hol

#endif  // HOL_SHIFTING_HPP_
