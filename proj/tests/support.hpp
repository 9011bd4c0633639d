#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "tci/core.hpp"

namespace tci::testing {

/// Random valid sequence: sorted times with occasional duplicates, random
/// missingness, counts 1..3 when `random_counts`.
inline EventSequence random_sequence(std::mt19937_64& rng, std::size_t T, std::size_t r, bool random_counts = true) {
    std::uniform_real_distribution<double> time(0.0, 48.0);
    std::normal_distribution<double> value(0.0, 2.0);
    std::bernoulli_distribution observed(0.7);
    std::bernoulli_distribution duplicate(0.1);
    std::uniform_int_distribution<int> count(1, 3);

    std::vector<double> times(T);
    for (auto& t : times) t = time(rng);
    std::sort(times.begin(), times.end());
    for (std::size_t i = 1; i < T; ++i) {
        if (duplicate(rng)) times[i] = times[i - 1];
    }

    EventSequence seq;
    seq.id = "rand";
    seq.r = r;
    for (double t : times) {
        std::vector<double> x(r);
        std::vector<bool> mask(r);
        for (std::size_t j = 0; j < r; ++j) {
            mask[j] = observed(rng);
            x[j] = value(rng);
        }
        seq.events.push_back(make_event(t, std::move(x), std::move(mask), random_counts ? count(rng) : 1));
    }
    return seq;
}

/// Five events at t = [0, 0.45, 0.55, 0.90, 1.00], two observed variables.
inline EventSequence five_event_sequence() {
    EventSequence seq;
    seq.id = "five";
    seq.r = 2;
    const double t[] = {0.0, 0.45, 0.55, 0.90, 1.00};
    const double a[] = {1.5, -0.25, 3.75, 2.0, 6.5};
    const double b[] = {10.0, 12.0, 13.0, 9.0, 8.0};
    for (int i = 0; i < 5; ++i) seq.events.push_back(make_event(t[i], {a[i], b[i]}, {true, true}));
    return seq;
}

}  // namespace tci::testing
