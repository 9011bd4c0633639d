#pragma once

// Fast stochastic temporal-clustering augmentation.
//
// Note the convention: here p is the fraction of intervals *merged*, so the
// output has T - ceil(p*T) events, while the coarsening operators use p as
// the fraction of events *retained*.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "tci/core.hpp"

namespace tci {

using Rng = std::mt19937_64;

struct AugmentConfig {
    double p_high = 0.5;  // in [0, 1)
    bool weighted = false;
    std::uint64_t rng_seed = 0;
};

/// Selection probabilities over the T-1 inter-event intervals.
struct IntervalWeights {
    std::vector<double> probs;
};

/// Gaps are clamped to this many hours before inversion.
inline constexpr double kMinGapHours = 1e-9;

/// Uniform, or proportional to 1/max(gap, 1e-9) when `weighted`.
/// Throws DataError when T < 2.
IntervalWeights interval_weights(const EventSequence& seq, bool weighted);

/// m distinct interval indices, distributed as m successive weighted draws
/// without replacement. Implemented with Gumbel top-m keys. Returned
/// indices are ascending. Throws DataError when fewer than m intervals carry
/// nonzero weight.
std::vector<std::size_t> sample_intervals(const IntervalWeights& weights, std::size_t m, Rng& rng);

/// Merge events i and i+1 for every selected interval i; chains collapse into
/// one cluster. Indices are 0-based and must be < T-1.
EventSequence merge_intervals(const EventSequence& seq, std::span<const std::size_t> selected);

struct AugmentDraw {
    EventSequence sequence;
    double p = 0.0;                     // drawn merge fraction
    std::vector<std::size_t> selected;  // merged intervals
};

/// One augmentation draw with its drawn p and interval set. The number of
/// merged intervals is ceil(p*T), capped at T-1.
AugmentDraw fast_augment_draw(const EventSequence& seq, const AugmentConfig& cfg, Rng& rng);

EventSequence fast_augment(const EventSequence& seq, const AugmentConfig& cfg, Rng& rng);

}  // namespace tci
