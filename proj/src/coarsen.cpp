#include "tci/coarsen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tci {

namespace {

// Segment costs from prefix sums of values shifted by the first point, which
// keeps the sum-of-squares cancellation small for timestamps far from zero.
class SegmentCost {
public:
    explicit SegmentCost(std::span<const double> points)
        : sum_(points.size() + 1, 0.0), sq_(points.size() + 1, 0.0) {
        const double shift = points.empty() ? 0.0 : points.front();
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double v = points[i] - shift;
            sum_[i + 1] = sum_[i] + v;
            sq_[i + 1] = sq_[i] + v * v;
        }
    }

    // Cost of the half-open segment [begin, end).
    double operator()(std::size_t begin, std::size_t end) const {
        const double n = static_cast<double>(end - begin);
        const double s = sum_[end] - sum_[begin];
        const double cost = (sq_[end] - sq_[begin]) - s * s / n;
        return cost > 0.0 ? cost : 0.0;
    }

private:
    std::vector<double> sum_;
    std::vector<double> sq_;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

// One layer of the suffix recurrence
//   cur[i] = min_{e in (i, last]} cost(i, e) + prev[e],
// filled by divide and conquer on the monotone leftmost argmin.
void fill_layer(const SegmentCost& cost, const std::vector<double>& prev, std::vector<double>& cur,
                std::size_t lo, std::size_t hi, std::size_t e_lo, std::size_t e_hi, std::size_t last) {
    // Inclusive index ranges; `hi < lo` guarded by the callers via signed math.
    if (lo > hi) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    const std::size_t from = std::max(mid + 1, e_lo);
    const std::size_t to = std::min(last, e_hi);
    double best = kInf;
    std::size_t best_e = from;
    for (std::size_t e = from; e <= to; ++e) {
        const double v = cost(mid, e) + prev[e];
        if (v < best) {
            best = v;
            best_e = e;
        }
    }
    cur[mid] = best;
    if (mid > lo) fill_layer(cost, prev, cur, lo, mid - 1, e_lo, best_e, last);
    if (mid < hi) fill_layer(cost, prev, cur, mid + 1, hi, best_e, e_hi, last);
}

}  // namespace

Clustering kmeans1d_exact(std::span<const double> points, std::size_t k) {
    const std::size_t n = points.size();
    if (k == 0 || k > n) {
        throw std::invalid_argument("kmeans1d_exact: need 1 <= k <= number of points");
    }
    if (!std::is_sorted(points.begin(), points.end())) {
        throw std::invalid_argument("kmeans1d_exact: points must be sorted ascending");
    }

    Clustering out;
    out.count = k;
    out.assignments.resize(n);
    if (k == n) {
        for (std::size_t i = 0; i < n; ++i) out.assignments[i] = i;
        return out;
    }
    if (k == 1) {
        std::fill(out.assignments.begin(), out.assignments.end(), 0);
        return out;
    }

    const SegmentCost cost(points);
    // layers[j][i]: best cost of splitting points[i..n) into j + 1 clusters.
    std::vector<std::vector<double>> layers(k, std::vector<double>(n + 1, kInf));
    for (std::size_t i = 0; i < n; ++i) layers[0][i] = cost(i, n);
    for (std::size_t j = 1; j + 1 < k; ++j) {
        // j + 1 clusters starting at i need i <= n - (j + 1); the first
        // cluster may end at most at n - j.
        fill_layer(cost, layers[j - 1], layers[j], 0, n - (j + 1), 1, n - j, n - j);
    }
    {
        const std::size_t j = k - 1;
        double best = kInf;
        for (std::size_t e = 1; e <= n - j; ++e) best = std::min(best, cost(0, e) + layers[j - 1][e]);
        layers[j][0] = best;
    }

    // Forward reconstruction: the smallest feasible boundary at each step
    // gives the lexicographically smallest optimal boundary vector. Equal
    // costs can differ in the last bits after prefix-sum rounding.
    const double tolerance = 1e-11 * cost(0, n);
    std::size_t begin = 0;
    for (std::size_t cluster = 0; cluster < k; ++cluster) {
        const std::size_t remaining = k - cluster;  // clusters still to place, including this one
        std::size_t end = n;
        if (remaining > 1) {
            const double target = layers[remaining - 1][begin];
            const std::vector<double>& rest = layers[remaining - 2];
            end = 0;
            for (std::size_t e = begin + 1; e <= n - (remaining - 1); ++e) {
                if (cost(begin, e) + rest[e] <= target + tolerance) {
                    end = e;
                    break;
                }
            }
            if (end == 0) {
                // Unreachable unless the layer values were not produced by
                // the same expression; fall back to the exact minimizer.
                double best = kInf;
                for (std::size_t e = begin + 1; e <= n - (remaining - 1); ++e) {
                    const double v = cost(begin, e) + rest[e];
                    if (v < best) {
                        best = v;
                        end = e;
                    }
                }
            }
        }
        for (std::size_t i = begin; i < end; ++i) out.assignments[i] = cluster;
        begin = end;
    }
    return out;
}

double within_cluster_cost(std::span<const double> points, const Clustering& clustering) {
    if (points.size() != clustering.assignments.size()) {
        throw std::invalid_argument("within_cluster_cost: size mismatch");
    }
    double total = 0.0;
    std::size_t begin = 0;
    while (begin < points.size()) {
        std::size_t end = begin;
        while (end < points.size() && clustering.assignments[end] == clustering.assignments[begin]) ++end;
        double mean = 0.0;
        for (std::size_t i = begin; i < end; ++i) mean += points[i];
        mean /= static_cast<double>(end - begin);
        for (std::size_t i = begin; i < end; ++i) total += (points[i] - mean) * (points[i] - mean);
        begin = end;
    }
    return total;
}

EventSequence merge_clusters(const EventSequence& seq, const Clustering& clustering) {
    if (clustering.assignments.size() != seq.events.size()) {
        throw std::invalid_argument("merge_clusters: assignment length differs from sequence length");
    }
    std::vector<std::vector<Event>> members(clustering.count);
    for (std::size_t i = 0; i < seq.events.size(); ++i) {
        const std::size_t a = clustering.assignments[i];
        if (a >= clustering.count) throw std::invalid_argument("merge_clusters: cluster index out of range");
        members[a].push_back(seq.events[i]);
    }
    EventSequence out{seq.id, seq.r, {}};
    out.events.reserve(clustering.count);
    for (const auto& m : members) {
        if (!m.empty()) out.events.push_back(merge_events(m));
    }
    std::stable_sort(out.events.begin(), out.events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
    return out;
}

EventSequence cluster_and_count(const EventSequence& seq, double p) {
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("cluster_and_count: p must lie in (0, 1]");
    require_valid(seq, true);
    const std::size_t T = seq.length();
    const std::size_t k = std::max<std::size_t>(1, retained_length(p, T));
    std::vector<double> times(T);
    for (std::size_t i = 0; i < T; ++i) times[i] = seq.events[i].t;
    return merge_clusters(seq, kmeans1d_exact(times, k));
}

std::vector<double> grid_points(Interval interval, std::size_t n) {
    if (n < 2) throw std::invalid_argument("grid_points: need at least two points");
    std::vector<double> grid(n);
    const double step = (interval.right - interval.left) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) grid[i] = interval.left + static_cast<double>(i) * step;
    return grid;
}

std::size_t nearest_grid_index(std::span<const double> grid, double t) {
    const auto it = std::lower_bound(grid.begin(), grid.end(), t);
    if (it == grid.begin()) return 0;
    if (it == grid.end()) return grid.size() - 1;
    const auto hi = static_cast<std::size_t>(it - grid.begin());
    const std::size_t lo = hi - 1;
    return (t - grid[lo]) <= (grid[hi] - t) ? lo : hi;
}

Interval default_interval(const EventSequence& seq) {
    if (seq.events.empty()) return {};
    const double lo = seq.events.front().t;
    const double hi = seq.events.back().t;
    return hi > lo ? Interval{lo, hi} : Interval{lo, lo + 1.0};
}

EventSequence grid_and_count(const EventSequence& seq, double p, Interval interval) {
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("grid_and_count: p must lie in (0, 1]");
    if (!(interval.left < interval.right)) throw std::invalid_argument("grid_and_count: interval needs t_L < t_R");
    require_valid(seq, true);
    const std::size_t T = seq.length();
    const std::size_t cells = retained_length(p, T);
    if (cells < 2) {
        throw DataError("grid&count needs ceil(p*T) >= 2 grid points (got " + std::to_string(cells) +
                        " for sequence '" + seq.id + "'); use cluster mode for this resolution");
    }
    const std::vector<double> grid = grid_points(interval, cells);
    std::vector<std::vector<Event>> members(cells);
    for (const Event& e : seq.events) {
        if (e.t < interval.left || e.t > interval.right) {
            throw DataError("grid&count: event time outside the observation interval in sequence '" + seq.id + "'");
        }
        members[nearest_grid_index(grid, e.t)].push_back(e);
    }
    EventSequence out{seq.id, seq.r, {}};
    out.events.reserve(cells);
    for (std::size_t g = 0; g < cells; ++g) {
        if (members[g].empty()) {
            out.events.push_back(Event{grid[g], std::vector<double>(seq.r, 0.0), std::vector<bool>(seq.r, false), 0});
        } else {
            out.events.push_back(merge_events(members[g]));
        }
    }
    std::stable_sort(out.events.begin(), out.events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
    return out;
}

EventSequence coarsen(const EventSequence& seq, const CoarseningSpec& spec) {
    switch (spec.mode) {
        case CoarsenMode::Cluster:
            return cluster_and_count(seq, spec.p);
        case CoarsenMode::Grid:
            return grid_and_count(seq, spec.p, spec.interval.value_or(default_interval(seq)));
    }
    throw std::invalid_argument("coarsen: unknown mode");
}

}  // namespace tci
