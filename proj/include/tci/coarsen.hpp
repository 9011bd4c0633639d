#pragma once

// Deterministic coarsening operators: grid&count and cluster&count.
//
// Both keep ceil(p*T) output events for retention factor p in (0, 1] and
// attach a count to every output event. cluster&count partitions timestamps
// with an exact 1-D k-means; grid&count snaps events to a regular grid over
// an observation window.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "tci/core.hpp"

namespace tci {

enum class CoarsenMode { Grid, Cluster };

struct Interval {
    double left = 0.0;
    double right = 1.0;
    bool operator==(const Interval&) const = default;
};

struct CoarseningSpec {
    CoarsenMode mode = CoarsenMode::Cluster;
    double p = 1.0;
    /// Grid mode only; defaults to the sequence span.
    std::optional<Interval> interval;
};

/// Contiguous partition of a sorted point list. Cluster indices are
/// 0-based and non-decreasing along the points.
struct Clustering {
    std::vector<std::size_t> assignments;
    std::size_t count = 0;
};

/// Optimal contiguous k-partition of sorted `points` under within-cluster
/// squared deviation. Among exact cost ties the lexicographically smallest
/// boundary vector wins. Requires 1 <= k <= points.size() and sorted input
/// (std::invalid_argument otherwise).
Clustering kmeans1d_exact(std::span<const double> points, std::size_t k);

/// Within-cluster sum of squared deviations, two-pass per cluster.
double within_cluster_cost(std::span<const double> points, const Clustering& clustering);

/// Merge each cluster of `seq` into one event. Output is sorted by time.
EventSequence merge_clusters(const EventSequence& seq, const Clustering& clustering);

EventSequence cluster_and_count(const EventSequence& seq, double p);

/// Throws DataError when ceil(p*T) < 2 (the grid needs two points; use
/// cluster mode instead) or an event lies outside the interval.
EventSequence grid_and_count(const EventSequence& seq, double p, Interval interval);

/// Regular grid of n >= 2 points spanning the interval.
std::vector<double> grid_points(Interval interval, std::size_t n);

/// Index of the grid point nearest to t; ties go to the lower index.
std::size_t nearest_grid_index(std::span<const double> grid, double t);

/// Observation window used when a grid spec carries none: the sequence
/// span, widened to one hour when all events share a timestamp.
Interval default_interval(const EventSequence& seq);

EventSequence coarsen(const EventSequence& seq, const CoarseningSpec& spec);

}  // namespace tci
