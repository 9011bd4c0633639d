#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "../support.hpp"
#include "tci/coarsen.hpp"
#include "tci/eval.hpp"

using namespace tci;

namespace {

// Pairwise definition: P(score_pos > score_neg) + 0.5 P(equal).
double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
    double wins = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[i] == 1 && y[j] == 0) {
                pairs += 1.0;
                wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
            }
        }
    }
    return wins / pairs;
}

// Precision at each positive's rank, distinct scores only.
double rank_ap(const std::vector<double>& s, const std::vector<int>& y) {
    double ap = 0.0;
    int pos = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (y[i] != 1) continue;
        ++pos;
        int above = 0;
        int pos_above = 0;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (s[j] >= s[i]) {
                ++above;
                pos_above += y[j];
            }
        }
        ap += static_cast<double>(pos_above) / above;
    }
    return ap / pos;
}

PairedMetric auc_metric() {
    return [](std::span<const double> p, std::span<const double> t) {
        std::vector<int> y(t.begin(), t.end());
        return roc_auc(p, y);
    };
}

}  // namespace

TEST_CASE("classification metric examples") {
    const std::vector<int> y{1, 0};
    CHECK(roc_auc(std::vector<double>{0.9, 0.1}, y) == 1.0);
    CHECK(average_precision(std::vector<double>{0.9, 0.1}, y) == 1.0);
    CHECK(average_precision(std::vector<double>{0.1, 0.9}, y) == 0.5);
    CHECK(roc_auc(std::vector<double>(6, 0.3), std::vector<int>{1, 0, 1, 0, 0, 1}) == 0.5);
    const auto m = classification_metrics(std::vector<double>{0.9, 0.1}, y);
    CHECK(m.roc_auc == 1.0);
    CHECK(m.map == 1.0);
}

TEST_CASE("single-class labels") {
    const std::vector<double> s{0.2, 0.8};
    CHECK_THROWS_AS(roc_auc(s, std::vector<int>{1, 1}), NumericError);
    CHECK(average_precision(s, std::vector<int>{1, 1}) == 1.0);
    CHECK_THROWS_AS(average_precision(s, std::vector<int>{0, 0}), NumericError);
    CHECK_THROWS_AS(roc_auc(s, std::vector<int>{1}), std::invalid_argument);
}

TEST_CASE("roc_auc and average precision agree with brute force") {
    std::mt19937_64 rng(51);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng() % 40;
        std::vector<double> s(n);
        std::vector<int> y(n);
        const bool ties = trial % 2 == 0;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = ties ? static_cast<double>(rng() % 5) : std::uniform_real_distribution<double>(0, 1)(rng);
            y[i] = static_cast<int>(rng() & 1u);
        }
        y[0] = 1;
        y[1] = 0;
        CHECK(roc_auc(s, y) == doctest::Approx(pairwise_auc(s, y)).epsilon(1e-12));
        // With ties, the block rule equals ranking each positive after its whole tie block.
        CHECK(average_precision(s, y) == doctest::Approx(rank_ap(s, y)).epsilon(1e-12));
    }
}

TEST_CASE("regression metric examples") {
    const std::vector<double> t{1.0, 4.0, -2.0, 0.5};
    const auto same = regression_metrics(t, t);
    CHECK(same.mae == 0.0);
    CHECK(same.rmse == 0.0);
    CHECK(same.correlation == doctest::Approx(1.0));
    std::vector<double> shifted = t;
    for (double& v : shifted) v += 10.0;
    const auto sh = regression_metrics(shifted, t);
    CHECK(sh.mae == doctest::Approx(10.0));
    CHECK(sh.rmse == doctest::Approx(10.0));
    CHECK(sh.correlation == doctest::Approx(1.0));
    const auto hand = regression_metrics(std::vector<double>{0, 2}, std::vector<double>{0, 1});
    CHECK(hand.mae == 0.5);
    CHECK(hand.rmse == doctest::Approx(std::sqrt(0.5)));
    CHECK(hand.correlation == doctest::Approx(1.0));
    CHECK_THROWS_AS(pearson_correlation(std::vector<double>{1, 1}, std::vector<double>{0, 1}), NumericError);
}

TEST_CASE("bootstrap") {
    std::mt19937_64 rng(52);
    SUBCASE("constant metric has zero stderr") {
        const std::vector<double> v{1, 2, 3, 4, 5};
        const auto b = bootstrap(mean_absolute_error, v, v, 200, 1);
        CHECK(b.mean == 0.0);
        CHECK(b.std_error == 0.0);
        CHECK(b.runs == 200);
    }
    SUBCASE("one run") {
        const std::vector<double> p{1, 2, 3};
        const std::vector<double> t{1, 1, 1};
        const auto b = bootstrap(mean_absolute_error, p, t, 1, 8);
        CHECK(b.std_error == 0.0);
        CHECK(b.runs == 1);
        CHECK(b.mean >= 0.0);
        CHECK(b.mean <= 2.0);
    }
    SUBCASE("seed stability on 50 pairs") {
        std::vector<double> s(50);
        std::vector<double> y(50);
        for (std::size_t i = 0; i < 50; ++i) {
            y[i] = static_cast<double>(i % 2);
            s[i] = y[i] * 0.6 + std::uniform_real_distribution<double>(0, 1)(rng);
        }
        const auto a = bootstrap(auc_metric(), s, y, 1000, 1);
        const auto b = bootstrap(auc_metric(), s, y, 1000, 2);
        CHECK(a.std_error > 0.0);
        CHECK(std::abs(a.std_error - b.std_error) <= 0.2 * b.std_error);
        CHECK(a.mean == doctest::Approx(roc_auc(s, std::vector<int>(y.begin(), y.end()))).epsilon(0.05));
        const auto again = bootstrap(auc_metric(), s, y, 1000, 1);
        CHECK(again.mean == a.mean);
        CHECK(again.std_error == a.std_error);
    }
    SUBCASE("single-class resamples are redrawn") {
        const std::vector<double> s{0.1, 0.9, 0.2};
        const std::vector<double> y{0, 1, 0};
        const auto b = bootstrap(auc_metric(), s, y, 300, 4);
        CHECK(b.runs == 300);
    }
    SUBCASE("hopeless resamples give up") {
        const std::vector<double> s{0.1, 0.9};
        const std::vector<double> y{1, 1};
        CHECK_THROWS_AS(bootstrap(auc_metric(), s, y, 5, 4), NumericError);
    }
    SUBCASE("zero runs") {
        const std::vector<double> v{1};
        CHECK_THROWS_AS(bootstrap(mean_absolute_error, v, v, 0, 1), std::invalid_argument);
    }
}

TEST_CASE("fgsm") {
    std::mt19937_64 rng(53);
    FeatureMatrix x(3, 4);
    FeatureMatrix g(3, 4);
    for (auto& v : x.data) v = std::normal_distribution<double>(0, 100)(rng);
    for (auto& v : g.data) v = std::normal_distribution<double>(0, 1)(rng);
    g.data[0] = 0.0;
    CHECK(fgsm(x, 0.0, g) == x);
    for (double eps : {0.01, 0.05, 0.1, 0.3}) {
        const FeatureMatrix xt = fgsm(x, eps, g);
        for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(std::abs(xt.data[i] - x.data[i]) <= eps);
        CHECK(xt.data[0] == x.data[0]);
    }
    FeatureMatrix neg = g;
    for (auto& v : neg.data) v = -1.0;
    const FeatureMatrix down = fgsm(x, 0.25, neg);
    for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(down.data[i] == doctest::Approx(x.data[i] - 0.25));
    CHECK_THROWS_AS(fgsm(x, -1.0, g), std::invalid_argument);
    CHECK_THROWS_AS(fgsm(x, 0.1, FeatureMatrix(2, 4)), std::invalid_argument);
}

TEST_CASE("invariance_gap") {
    std::mt19937_64 rng(54);
    std::vector<EventSequence> seqs;
    for (int i = 0; i < 20; ++i) seqs.push_back(testing::random_sequence(rng, 2 + rng() % 30, 2));
    const SequenceModel mean_x = [](const EventSequence& s) {
        double total = 0.0;
        for (const auto& e : s.events) total += e.x[0];
        return std::vector<double>{total / static_cast<double>(s.length()), static_cast<double>(s.length())};
    };
    const SequenceTransform identity = [](const EventSequence& s, std::size_t) { return s; };
    const SequenceTransform halve = [](const EventSequence& s, std::size_t) { return cluster_and_count(s, 0.5); };
    CHECK(invariance_gap(mean_x, seqs, identity) == std::vector<double>{0.0, 0.0});
    const SequenceModel constant = [](const EventSequence&) { return std::vector<double>{0.7}; };
    CHECK(invariance_gap(constant, seqs, halve) == std::vector<double>{0.0});

    double want = 0.0;
    for (const auto& s : seqs) want += static_cast<double>(s.length() - retained_length(0.5, s.length()));
    CHECK(invariance_gap(mean_x, seqs, halve)[1] == doctest::Approx(want / seqs.size()));
}

TEST_CASE("report formats") {
    EvalReport r;
    r.notes.emplace_back("sequences", "3");
    MetricEntry m{"roc_auc", 0.75, true, {0.7, 0.05, 10}};
    r.metrics.push_back(m);
    std::ostringstream text;
    r.write_text(text);
    CHECK(text.str() == "sequences: 3\nroc_auc: 0.75 (bootstrap mean 0.69999999999999996, stderr "
                        "0.050000000000000003, runs 10)\n");
    std::ostringstream kv;
    r.write_kv(kv);
    CHECK(kv.str().find("roc_auc.bootstrap_runs=10\n") != std::string::npos);
}
