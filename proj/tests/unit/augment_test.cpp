#include <doctest.h>

#include <array>
#include <cmath>
#include <map>
#include <random>

#include "../support.hpp"
#include "tci/augment.hpp"

using namespace tci;

namespace {

EventSequence at_times(std::vector<double> times) {
    EventSequence s;
    s.id = "s";
    s.r = 1;
    for (std::size_t i = 0; i < times.size(); ++i) s.events.push_back(make_event(times[i], {double(i)}, {true}));
    return s;
}

}  // namespace

TEST_CASE("interval_weights") {
    SUBCASE("gaps [1, 3] weighted") {
        const auto w = interval_weights(at_times({0.0, 1.0, 4.0}), true);
        REQUIRE(w.probs.size() == 2);
        CHECK(w.probs[0] == doctest::Approx(0.75));
        CHECK(w.probs[1] == doctest::Approx(0.25));
    }
    SUBCASE("unweighted is uniform") {
        const auto w = interval_weights(at_times({0.0, 1.0, 5.0, 5.5}), false);
        for (double p : w.probs) CHECK(p == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("zero gap dominates") {
        const auto w = interval_weights(at_times({0.0, 0.0, 2.0}), true);
        CHECK(w.probs[0] > 0.999999);
        CHECK(w.probs[1] == doctest::Approx(0.5e-9).epsilon(1e-6));
        Rng rng(21);
        std::size_t zero_first = 0;
        for (int i = 0; i < 100000; ++i) zero_first += sample_intervals(w, 1, rng).front() == 0;
        CHECK(zero_first > 99900);
    }
    SUBCASE("probabilities sum to one") {
        std::mt19937_64 rng(22);
        for (int trial = 0; trial < 100; ++trial) {
            const auto w = interval_weights(testing::random_sequence(rng, 2 + rng() % 50, 1), trial % 2 == 0);
            double s = 0.0;
            for (double p : w.probs) {
                CHECK(p >= 0.0);
                s += p;
            }
            CHECK(std::abs(s - 1.0) <= 1e-12);
        }
    }
    SUBCASE("T < 2") { CHECK_THROWS_AS(interval_weights(at_times({1.0}), true), DataError); }
}

TEST_CASE("sample_intervals") {
    Rng rng(23);
    const auto w = interval_weights(at_times({0.0, 1.0, 2.0, 3.0}), false);
    CHECK(sample_intervals(w, 0, rng).empty());
    CHECK(sample_intervals(w, 3, rng) == std::vector<std::size_t>{0, 1, 2});
    CHECK_THROWS_AS(sample_intervals(w, 4, rng), DataError);

    IntervalWeights sparse{{0.5, 0.0, 0.5}};
    CHECK(sample_intervals(sparse, 2, rng) == std::vector<std::size_t>{0, 2});
    CHECK_THROWS_AS(sample_intervals(sparse, 3, rng), DataError);
}

TEST_CASE("sample_intervals uniform frequencies pass a chi-square bound") {
    Rng rng(24);
    const auto w = interval_weights(at_times({0.0, 1.0, 2.0, 3.0}), false);
    constexpr int kDraws = 300000;
    std::array<int, 3> hits{};
    for (int i = 0; i < kDraws; ++i) ++hits[sample_intervals(w, 1, rng).front()];
    double chi2 = 0.0;
    for (int h : hits) chi2 += (h - kDraws / 3.0) * (h - kDraws / 3.0) / (kDraws / 3.0);
    CHECK(chi2 < 13.816);  // 99.9% quantile, 2 degrees of freedom
}

TEST_CASE("sample_intervals matches sequential draws without replacement") {
    // Weights [0.5, 0.3, 0.2], m = 2: P({0,1}) = .5*.3/.5 + .3*.5/.7, etc.
    IntervalWeights w{{0.5, 0.3, 0.2}};
    const auto pair_prob = [&](std::size_t a, std::size_t b) {
        const double pa = w.probs[a];
        const double pb = w.probs[b];
        return pa * pb / (1 - pa) + pb * pa / (1 - pb);
    };
    Rng rng(25);
    constexpr int kDraws = 200000;
    std::map<std::pair<std::size_t, std::size_t>, int> hits;
    for (int i = 0; i < kDraws; ++i) {
        const auto s = sample_intervals(w, 2, rng);
        ++hits[{s[0], s[1]}];
    }
    for (auto [a, b] : {std::pair<std::size_t, std::size_t>{0, 1}, {0, 2}, {1, 2}}) {
        const double f = hits[{a, b}] / double(kDraws);
        CHECK(f == doctest::Approx(pair_prob(a, b)).epsilon(0.01));
    }
}

TEST_CASE("merge_intervals") {
    SUBCASE("E = {2} on the five-event fixture") {
        const EventSequence seq = testing::five_event_sequence();
        const std::vector<std::size_t> e{1};  // 0-based interval between events 2 and 3
        const EventSequence out = merge_intervals(seq, e);
        REQUIRE(out.length() == 4);
        CHECK(out.events[1].t == (seq.events[1].t + seq.events[2].t) / 2);
        CHECK(out.events[1].x[0] == (seq.events[1].x[0] + seq.events[2].x[0]) / 2);
        CHECK(out.events[1].x[1] == (seq.events[1].x[1] + seq.events[2].x[1]) / 2);
        CHECK(out.events[1].c == 2);
    }
    SUBCASE("chains collapse transitively") {
        const std::vector<std::size_t> e{0, 1};
        const EventSequence out = merge_intervals(at_times({0.0, 1.0, 2.0, 3.0}), e);
        REQUIRE(out.length() == 2);
        CHECK(out.events[0].c == 3);
        CHECK(out.events[1].c == 1);
    }
    SUBCASE("out of range") {
        const std::vector<std::size_t> e{3};
        CHECK_THROWS_AS(merge_intervals(at_times({0.0, 1.0, 2.0, 3.0}), e), std::invalid_argument);
    }
}

TEST_CASE("fast_augment") {
    std::mt19937_64 gen(26);
    SUBCASE("p_high = 0 is the identity") {
        for (int trial = 0; trial < 50; ++trial) {
            const EventSequence seq = testing::random_sequence(gen, 1 + gen() % 40, 3);
            Rng rng(trial);
            CHECK(fast_augment(seq, {0.0, trial % 2 == 0, 0}, rng) == seq);
        }
    }
    SUBCASE("T = 1 unchanged") {
        const EventSequence seq = testing::random_sequence(gen, 1, 3);
        Rng rng(1);
        CHECK(fast_augment(seq, {0.9, true, 0}, rng) == seq);
    }
    SUBCASE("length and count contracts") {
        for (int trial = 0; trial < 500; ++trial) {
            const std::size_t T = 2 + gen() % 100;
            const EventSequence seq = testing::random_sequence(gen, T, 2);
            Rng rng(trial);
            const AugmentDraw d = fast_augment_draw(seq, {0.5, trial % 2 == 0, 0}, rng);
            CHECK(d.p >= 0.0);
            CHECK(d.p <= 0.5);
            const auto merges = static_cast<std::size_t>(std::ceil(d.p * double(T)));
            CHECK(d.selected.size() == merges);
            CHECK(d.sequence.length() == T - merges);
            CHECK(total_count(d.sequence) == total_count(seq));
            CHECK(validate(d.sequence).empty());
        }
    }
    SUBCASE("seed determinism") {
        const EventSequence seq = testing::random_sequence(gen, 50, 2);
        Rng a(77);
        Rng b(77);
        CHECK(fast_augment(seq, {0.5, true, 0}, a) == fast_augment(seq, {0.5, true, 0}, b));
    }
    SUBCASE("invalid p_high") {
        const EventSequence seq = testing::random_sequence(gen, 5, 2);
        Rng rng(1);
        CHECK_THROWS_AS(fast_augment(seq, {1.0, false, 0}, rng), std::invalid_argument);
        CHECK_THROWS_AS(fast_augment(seq, {-0.1, false, 0}, rng), std::invalid_argument);
    }
}

TEST_CASE("weighted augmentation merges closer events more often") {
    const EventSequence seq = at_times({0.0, 0.1, 5.0, 10.0});
    std::array<int, 3> hits{};
    for (int i = 0; i < 20000; ++i) {
        Rng rng(i);
        const AugmentDraw d = fast_augment_draw(seq, {0.25, true, 0}, rng);
        for (std::size_t s : d.selected) ++hits[s];
    }
    CHECK(hits[0] > 10 * hits[1]);
    CHECK(hits[0] > 10 * hits[2]);
}
