#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "../support.hpp"
#include "tci/coarsen.hpp"

using namespace tci;

namespace {

double range_cost(const std::vector<double>& pts, std::size_t lo, std::size_t hi) {
    double mean = 0.0;
    for (std::size_t i = lo; i < hi; ++i) mean += pts[i];
    mean /= static_cast<double>(hi - lo);
    double c = 0.0;
    for (std::size_t i = lo; i < hi; ++i) c += (pts[i] - mean) * (pts[i] - mean);
    return c;
}

// Exhaustive search returning the best boundary vector (cluster start
// indices after the first) in lexicographic order among exact-cost ties.
std::vector<std::size_t> brute_force_boundaries(const std::vector<double>& pts, std::size_t k, double& best_cost) {
    const std::size_t T = pts.size();
    best_cost = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> best;
    std::vector<std::size_t> cur(k - 1);
    // Enumerate combinations in lexicographic order; keep the first minimum
    // up to a tiny tolerance so equal-cost partitions computed with
    // different rounding still count as ties.
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t slot, std::size_t from) {
        if (slot == k - 1) {
            double c = 0.0;
            std::size_t lo = 0;
            for (std::size_t b : cur) {
                c += range_cost(pts, lo, b);
                lo = b;
            }
            c += range_cost(pts, lo, T);
            if (!std::isfinite(best_cost) || c < best_cost - 1e-9 * std::max(1.0, best_cost)) {
                best_cost = c;
                best = cur;
            }
            return;
        }
        for (std::size_t b = from; b + (k - 1 - slot) <= T; ++b) {
            cur[slot] = b;
            rec(slot + 1, b + 1);
        }
    };
    rec(0, 1);
    return best;
}

std::vector<std::size_t> boundaries_of(const Clustering& c) {
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i < c.assignments.size(); ++i) {
        if (c.assignments[i] != c.assignments[i - 1]) out.push_back(i);
    }
    return out;
}

EventSequence at_times(std::vector<double> times) {
    EventSequence s;
    s.id = "s";
    s.r = 1;
    for (std::size_t i = 0; i < times.size(); ++i) {
        s.events.push_back(make_event(times[i], {static_cast<double>(i + 1)}, {true}));
    }
    return s;
}

}  // namespace

TEST_CASE("kmeans1d_exact examples") {
    SUBCASE("two obvious pairs") {
        const std::vector<double> pts{0, 1, 10, 11};
        const Clustering c = kmeans1d_exact(pts, 2);
        CHECK(c.count == 2);
        CHECK(c.assignments == std::vector<std::size_t>{0, 0, 1, 1});
        CHECK(within_cluster_cost(pts, c) == doctest::Approx(1.0));
    }
    SUBCASE("k = T gives singletons") {
        const std::vector<double> pts{0.5, 1.5, 2.0, 9.0};
        const Clustering c = kmeans1d_exact(pts, 4);
        CHECK(c.assignments == std::vector<std::size_t>{0, 1, 2, 3});
        CHECK(within_cluster_cost(pts, c) == 0.0);
    }
    SUBCASE("k = 1 is one cluster") {
        const std::vector<double> pts{0.5, 1.5, 2.0, 9.0};
        CHECK(kmeans1d_exact(pts, 1).assignments == std::vector<std::size_t>{0, 0, 0, 0});
    }
    SUBCASE("contract violations") {
        const std::vector<double> pts{0, 1};
        CHECK_THROWS_AS(kmeans1d_exact(pts, 3), std::invalid_argument);
        CHECK_THROWS_AS(kmeans1d_exact(pts, 0), std::invalid_argument);
        const std::vector<double> unsorted{1, 0};
        CHECK_THROWS_AS(kmeans1d_exact(unsorted, 1), std::invalid_argument);
    }
}

TEST_CASE("kmeans1d_exact matches brute force, including tie-breaking") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> small(0, 4);
    std::uniform_real_distribution<double> uni(0.0, 30.0);
    for (int trial = 0; trial < 400; ++trial) {
        const std::size_t T = 1 + static_cast<std::size_t>(rng() % 10);
        std::vector<double> pts(T);
        const bool ties = trial % 2 == 0;
        for (auto& v : pts) v = ties ? small(rng) : uni(rng);
        std::sort(pts.begin(), pts.end());
        for (std::size_t k = 1; k <= T; ++k) {
            double want = 0.0;
            const auto boundaries = brute_force_boundaries(pts, k, want);
            const Clustering c = kmeans1d_exact(pts, k);
            CHECK(within_cluster_cost(pts, c) == doctest::Approx(want).epsilon(1e-9).scale(1.0));
            if (ties) CHECK(boundaries_of(c) == boundaries);
        }
    }
}

TEST_CASE("kmeans1d_exact tie-breaking on equally spaced points") {
    // {0,1,2}, k=2: {0}{1,2} and {0,1}{2} cost the same; the smaller boundary wins.
    const std::vector<double> pts{0, 1, 2};
    CHECK(kmeans1d_exact(pts, 2).assignments == std::vector<std::size_t>{0, 1, 1});
}

TEST_CASE("kmeans1d_exact is stable for large offsets") {
    std::vector<double> pts;
    for (int i = 0; i < 40; ++i) pts.push_back(1e6 + (i % 10 < 5 ? 0.0 : 100.0) + 0.01 * i);
    std::sort(pts.begin(), pts.end());
    const Clustering c = kmeans1d_exact(pts, 8);
    const Clustering c2 = kmeans1d_exact(pts, 8);
    CHECK(c.assignments == c2.assignments);
    CHECK(std::is_sorted(c.assignments.begin(), c.assignments.end()));
}

TEST_CASE("cluster_and_count on the five-event fixture") {
    const EventSequence seq = testing::five_event_sequence();
    const EventSequence out = cluster_and_count(seq, 0.6);
    REQUIRE(out.length() == 3);
    CHECK(out.events[0].c == 1);
    CHECK(out.events[1].c == 2);
    CHECK(out.events[2].c == 2);
    CHECK(out.events[1].t == (0.45 + 0.55) / 2);
    CHECK(out.events[2].t == (0.90 + 1.00) / 2);
    CHECK(out.events[2].x[0] == (seq.events[3].x[0] + seq.events[4].x[0]) / 2);
}

TEST_CASE("cluster_and_count identities") {
    std::mt19937_64 rng(12);
    SUBCASE("p = 1 on distinct timestamps") {
        EventSequence seq = testing::random_sequence(rng, 25, 3);
        for (std::size_t i = 0; i < seq.length(); ++i) seq.events[i].t = 0.3 * static_cast<double>(i);
        CHECK(cluster_and_count(seq, 1.0) == seq);
    }
    SUBCASE("T = 1, any p") {
        const EventSequence seq = testing::random_sequence(rng, 1, 3);
        CHECK(cluster_and_count(seq, 0.01) == seq);
        CHECK(cluster_and_count(seq, 1.0) == seq);
    }
    SUBCASE("bad p") {
        const EventSequence seq = testing::random_sequence(rng, 4, 3);
        CHECK_THROWS_AS(cluster_and_count(seq, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(cluster_and_count(seq, 1.5), std::invalid_argument);
    }
}

TEST_CASE("grid_and_count on the five-event fixture") {
    const EventSequence seq = testing::five_event_sequence();
    const EventSequence out = grid_and_count(seq, 0.6, {0.0, 1.0});
    REQUIRE(out.length() == 3);
    CHECK(out.events[0].t == 0.0);
    CHECK(out.events[1].t == 0.5);
    CHECK(out.events[2].t == 0.95);
    CHECK(out.events[0].c == 1);
    CHECK(out.events[1].c == 2);
    CHECK(out.events[2].c == 2);
}

TEST_CASE("grid_and_count edge cases") {
    SUBCASE("everything at t_L leaves an empty cell") {
        const EventSequence seq = at_times({2.0, 2.0, 2.0, 2.0});
        const EventSequence out = grid_and_count(seq, 0.5, {2.0, 3.0});
        REQUIRE(out.length() == 2);
        CHECK(out.events[0].c == 4);
        CHECK(out.events[1].c == 0);
        CHECK(out.events[1].t == 3.0);
        CHECK(out.events[1].x == std::vector<double>{0.0});
        CHECK(out.events[1].mask == std::vector<bool>{false});
        CHECK(validate(out, true).empty());
    }
    SUBCASE("two events on the grid points, p = 1") {
        const EventSequence seq = at_times({0.0, 5.0});
        CHECK(grid_and_count(seq, 1.0, {0.0, 5.0}) == seq);
    }
    SUBCASE("ties go to the lower grid index") {
        const EventSequence seq = at_times({0.0, 0.5, 1.0});
        const EventSequence out = grid_and_count(seq, 2.0 / 3.0, {0.0, 1.0});
        REQUIRE(out.length() == 2);
        CHECK(out.events[0].c == 2);
        CHECK(out.events[1].c == 1);
    }
    SUBCASE("fewer than two cells is rejected") {
        CHECK_THROWS_AS(grid_and_count(at_times({0.0, 1.0, 2.0}), 0.2, {0.0, 2.0}), DataError);
    }
    SUBCASE("events outside the interval are rejected") {
        CHECK_THROWS_AS(grid_and_count(at_times({0.0, 1.0, 2.0}), 1.0, {0.0, 1.5}), DataError);
    }
    SUBCASE("degenerate interval") {
        CHECK_THROWS_AS(grid_and_count(at_times({0.0, 1.0}), 1.0, {1.0, 1.0}), std::invalid_argument);
    }
}

TEST_CASE("nearest_grid_index and grid_points") {
    const auto grid = grid_points({0.0, 1.0}, 3);
    CHECK(grid == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(nearest_grid_index(grid, -3.0) == 0);
    CHECK(nearest_grid_index(grid, 0.25) == 0);
    CHECK(nearest_grid_index(grid, 0.26) == 1);
    CHECK(nearest_grid_index(grid, 0.75) == 1);
    CHECK(nearest_grid_index(grid, 7.0) == 2);
    CHECK_THROWS_AS(grid_points({0.0, 1.0}, 1), std::invalid_argument);
}

TEST_CASE("default_interval") {
    CHECK(default_interval(at_times({1.0, 4.0})) == Interval{1.0, 4.0});
    CHECK(default_interval(at_times({2.0, 2.0})) == Interval{2.0, 3.0});
}

TEST_CASE("coarsen dispatch") {
    std::mt19937_64 rng(13);
    EventSequence seq = testing::random_sequence(rng, 4, 2);
    for (std::size_t i = 0; i < seq.length(); ++i) seq.events[i].t = static_cast<double>(i);
    CHECK(coarsen(seq, {CoarsenMode::Cluster, 1.0, std::nullopt}) == seq);
    CHECK(coarsen(seq, {CoarsenMode::Cluster, 0.5, std::nullopt}).length() == 2);
    CHECK(coarsen(testing::five_event_sequence(), {CoarsenMode::Grid, 0.6, Interval{0.0, 1.0}}) ==
          grid_and_count(testing::five_event_sequence(), 0.6, {0.0, 1.0}));
}

TEST_CASE("coarsening properties on random sequences") {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t T = 1 + rng() % 80;
        const EventSequence seq = testing::random_sequence(rng, T, 2);
        const double p = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
        const std::size_t want = retained_length(p, T);

        const EventSequence c = cluster_and_count(seq, p);
        CHECK(c.length() == want);
        CHECK(total_count(c) == total_count(seq));
        CHECK(validate(c).empty());
        // Contiguity: consecutive outputs do not interleave with the input order.
        for (std::size_t i = 1; i < c.length(); ++i) CHECK(c.events[i - 1].t <= c.events[i].t);

        if (want >= 2) {
            const EventSequence g = grid_and_count(seq, p, default_interval(seq));
            CHECK(g.length() == want);
            CHECK(total_count(g) == total_count(seq));
            CHECK(validate(g, true).empty());
        }
    }
}

TEST_CASE("cluster contiguity holds for the k-means partition") {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 200; ++trial) {
        const EventSequence seq = testing::random_sequence(rng, 1 + rng() % 60, 1);
        std::vector<double> t;
        for (const auto& e : seq.events) t.push_back(e.t);
        const Clustering c = kmeans1d_exact(t, 1 + rng() % t.size());
        for (std::size_t i = 1; i < t.size(); ++i) {
            CHECK((c.assignments[i] == c.assignments[i - 1] || c.assignments[i] == c.assignments[i - 1] + 1));
        }
        CHECK(c.assignments.back() + 1 == c.count);
    }
}
