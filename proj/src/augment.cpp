#include "tci/augment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tci/coarsen.hpp"

namespace tci {

IntervalWeights interval_weights(const EventSequence& seq, bool weighted) {
    const std::size_t T = seq.length();
    if (T < 2) throw DataError("interval_weights: sequence '" + seq.id + "' has no intervals");
    IntervalWeights w;
    w.probs.assign(T - 1, 1.0 / static_cast<double>(T - 1));
    if (!weighted) return w;

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < T; ++i) {
        const double gap = seq.events[i + 1].t - seq.events[i].t;
        w.probs[i] = 1.0 / std::max(gap, kMinGapHours);
        total += w.probs[i];
    }
    for (double& v : w.probs) v /= total;
    return w;
}

std::vector<std::size_t> sample_intervals(const IntervalWeights& weights, std::size_t m, Rng& rng) {
    if (m == 0) return {};
    struct Keyed {
        double key;
        std::size_t index;
    };
    std::vector<Keyed> keys;
    keys.reserve(weights.probs.size());
    // Exponential race: the interval with the smallest E/w is drawn first,
    // and the order of the races equals sequential sampling with
    // renormalization. Equivalent to Gumbel top-m on log w.
    std::exponential_distribution<double> exp1(1.0);
    for (std::size_t i = 0; i < weights.probs.size(); ++i) {
        const double w = weights.probs[i];
        const double e = exp1(rng);
        if (w > 0.0) keys.push_back({e / w, i});
    }
    if (keys.size() < m) {
        throw DataError("sample_intervals: requested " + std::to_string(m) + " intervals but only " +
                        std::to_string(keys.size()) + " have nonzero weight");
    }
    std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(m), keys.end(),
                      [](const Keyed& a, const Keyed& b) {
                          return a.key < b.key || (a.key == b.key && a.index < b.index);
                      });
    std::vector<std::size_t> out(m);
    for (std::size_t i = 0; i < m; ++i) out[i] = keys[i].index;
    std::sort(out.begin(), out.end());
    return out;
}

EventSequence merge_intervals(const EventSequence& seq, std::span<const std::size_t> selected) {
    const std::size_t T = seq.length();
    std::vector<bool> joined(T > 0 ? T - 1 : 0, false);
    for (std::size_t i : selected) {
        if (i + 1 >= T) throw std::invalid_argument("merge_intervals: interval index out of range");
        joined[i] = true;
    }
    Clustering clusters;
    clusters.assignments.resize(T);
    std::size_t current = 0;
    for (std::size_t i = 0; i < T; ++i) {
        if (i > 0 && !joined[i - 1]) ++current;
        clusters.assignments[i] = current;
    }
    clusters.count = T == 0 ? 0 : current + 1;
    return merge_clusters(seq, clusters);
}

AugmentDraw fast_augment_draw(const EventSequence& seq, const AugmentConfig& cfg, Rng& rng) {
    if (!(cfg.p_high >= 0.0 && cfg.p_high < 1.0)) {
        throw std::invalid_argument("fast_augment: p_high must lie in [0, 1)");
    }
    AugmentDraw draw;
    // Closed interval [0, p_high].
    std::uniform_real_distribution<double> unif(
        0.0, std::nextafter(cfg.p_high, std::numeric_limits<double>::infinity()));
    draw.p = cfg.p_high > 0.0 ? std::min(unif(rng), cfg.p_high) : 0.0;

    const std::size_t T = seq.length();
    if (T < 2) {
        draw.sequence = seq;
        return draw;
    }
    const std::size_t m = std::min(retained_length(draw.p, T), T - 1);
    if (m == 0) {
        draw.sequence = seq;
        return draw;
    }
    draw.selected = sample_intervals(interval_weights(seq, cfg.weighted), m, rng);
    draw.sequence = merge_intervals(seq, draw.selected);
    return draw;
}

EventSequence fast_augment(const EventSequence& seq, const AugmentConfig& cfg, Rng& rng) {
    return fast_augment_draw(seq, cfg, rng).sequence;
}

}  // namespace tci
