#include "tci/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "tci/format.hpp"
#include "tci/simd.hpp"

namespace tci {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw std::invalid_argument(std::string(what) + ": length mismatch");
    if (a == 0) throw std::invalid_argument(std::string(what) + ": empty input");
}

std::vector<std::size_t> order_by_score_desc(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    require_same_length(scores.size(), labels.size(), "roc_auc");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double positive_rank_sum = 0.0;
    std::size_t positives = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] != 0) {
                positive_rank_sum += midrank;
                ++positives;
            }
        }
        i = j;
    }
    const std::size_t negatives = n - positives;
    if (positives == 0 || negatives == 0) throw NumericError("roc_auc undefined: labels contain a single class");
    const double np = static_cast<double>(positives);
    return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(negatives));
}

double average_precision(std::span<const double> scores, std::span<const int> labels) {
    require_same_length(scores.size(), labels.size(), "average_precision");
    const auto order = order_by_score_desc(scores);
    const std::size_t total_pos =
        static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](int y) { return y != 0; }));
    if (total_pos == 0) throw NumericError("average precision undefined: no positive labels");

    double ap = 0.0;
    std::size_t seen = 0;
    std::size_t tp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        std::size_t block_pos = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            if (labels[order[j]] != 0) ++block_pos;
            ++j;
        }
        seen += j - i;
        tp += block_pos;
        if (block_pos > 0) {
            ap += static_cast<double>(block_pos) * static_cast<double>(tp) / static_cast<double>(seen);
        }
        i = j;
    }
    return ap / static_cast<double>(total_pos);
}

ClassificationMetrics classification_metrics(std::span<const double> scores, std::span<const int> labels) {
    return {roc_auc(scores, labels), average_precision(scores, labels)};
}

double mean_absolute_error(std::span<const double> preds, std::span<const double> targets) {
    require_same_length(preds.size(), targets.size(), "mae");
    double s = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) s += std::abs(preds[i] - targets[i]);
    return s / static_cast<double>(preds.size());
}

double root_mean_squared_error(std::span<const double> preds, std::span<const double> targets) {
    require_same_length(preds.size(), targets.size(), "rmse");
    double s = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) s += (preds[i] - targets[i]) * (preds[i] - targets[i]);
    return std::sqrt(s / static_cast<double>(preds.size()));
}

double pearson_correlation(std::span<const double> preds, std::span<const double> targets) {
    require_same_length(preds.size(), targets.size(), "correlation");
    const double n = static_cast<double>(preds.size());
    const double mp = std::accumulate(preds.begin(), preds.end(), 0.0) / n;
    const double mt = std::accumulate(targets.begin(), targets.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double a = preds[i] - mp;
        const double b = targets[i] - mt;
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    if (sxx <= 0.0 || syy <= 0.0) throw NumericError("correlation undefined: zero variance");
    return sxy / std::sqrt(sxx * syy);
}

RegressionMetrics regression_metrics(std::span<const double> preds, std::span<const double> targets) {
    return {mean_absolute_error(preds, targets), root_mean_squared_error(preds, targets),
            pearson_correlation(preds, targets)};
}

BootstrapEstimate bootstrap(const PairedMetric& metric, std::span<const double> preds,
                            std::span<const double> targets, std::size_t runs, std::uint64_t seed) {
    require_same_length(preds.size(), targets.size(), "bootstrap");
    if (runs == 0) throw std::invalid_argument("bootstrap: runs must be >= 1");
    constexpr std::size_t kMaxRetries = 100;
    const std::size_t n = preds.size();

    std::vector<double> values(runs);
    std::vector<double> p(n);
    std::vector<double> t(n);
    for (std::size_t run = 0; run < runs; ++run) {
        std::mt19937_64 rng(mix_seed(seed, run));
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        for (std::size_t attempt = 0;; ++attempt) {
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t k = pick(rng);
                p[i] = preds[k];
                t[i] = targets[k];
            }
            try {
                values[run] = metric(p, t);
                break;
            } catch (const NumericError&) {
                if (attempt + 1 >= kMaxRetries) throw;
            }
        }
    }

    BootstrapEstimate est;
    est.runs = runs;
    est.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(runs);
    if (runs > 1) {
        double sq = 0.0;
        for (double v : values) sq += (v - est.mean) * (v - est.mean);
        est.std_error = std::sqrt(sq / static_cast<double>(runs - 1));
    }
    return est;
}

FeatureMatrix fgsm(const FeatureMatrix& features, double eps, const FeatureMatrix& gradient) {
    if (!(eps >= 0.0)) throw std::invalid_argument("fgsm: eps must be >= 0");
    if (gradient.rows != features.rows || gradient.cols != features.cols) {
        throw std::invalid_argument("fgsm: gradient shape differs from features");
    }
    FeatureMatrix out(features.rows, features.cols);
    simd::active().sign_step(features.data.data(), gradient.data.data(), eps, out.data.data(), features.data.size());
    return out;
}

std::vector<double> fgsm_predict(const Model& model, const FeatureCodec& codec, const LabeledSequence& item,
                                 double eps) {
    const ReferencePredictor& f = model.predictor;
    if (!model.mre) {
        const FeatureMatrix x = codec.featurize(item.sequence);
        return f.predict(fgsm(x, eps, f.input_gradient(x, item.label)));
    }
    const auto grads = mre_input_gradient(item.sequence, f, model.beta, *model.mre, codec, item.label);
    std::vector<Descriptor> descriptors;
    for (const auto& v : grads.views) descriptors.push_back(v.descriptor);
    const auto alpha = attention_weights(descriptors, model.beta);
    std::vector<double> out(f.output_dim(), 0.0);
    for (std::size_t k = 0; k < grads.views.size(); ++k) {
        const auto pk = f.predict(fgsm(grads.views[k].features, eps, grads.gradients[k]));
        for (std::size_t o = 0; o < out.size(); ++o) out[o] += alpha[k] * pk[o];
    }
    return out;
}

std::vector<double> invariance_gap(const SequenceModel& model, std::span<const EventSequence> sequences,
                                   const SequenceTransform& transform) {
    std::vector<double> gap;
    for (std::size_t i = 0; i < sequences.size(); ++i) {
        const auto base = model(sequences[i]);
        const auto moved = model(transform(sequences[i], i));
        if (moved.size() != base.size()) throw std::invalid_argument("invariance_gap: output width changed");
        if (gap.empty()) gap.assign(base.size(), 0.0);
        for (std::size_t o = 0; o < base.size(); ++o) gap[o] += std::abs(moved[o] - base[o]);
    }
    for (double& g : gap) g /= static_cast<double>(sequences.size());
    return gap;
}

void EvalReport::write_text(std::ostream& os) const {
    for (const auto& [key, value] : notes) os << key << ": " << value << '\n';
    for (const auto& m : metrics) {
        os << m.name << ": " << format_double(m.value);
        if (m.has_bootstrap) {
            os << " (bootstrap mean " << format_double(m.bootstrap.mean) << ", stderr "
               << format_double(m.bootstrap.std_error) << ", runs " << m.bootstrap.runs << ')';
        }
        os << '\n';
    }
}

void EvalReport::write_kv(std::ostream& os) const {
    for (const auto& [key, value] : notes) os << key << '=' << value << '\n';
    for (const auto& m : metrics) {
        os << m.name << '=' << format_double(m.value) << '\n';
        if (m.has_bootstrap) {
            os << m.name << ".bootstrap_mean=" << format_double(m.bootstrap.mean) << '\n';
            os << m.name << ".bootstrap_stderr=" << format_double(m.bootstrap.std_error) << '\n';
            os << m.name << ".bootstrap_runs=" << m.bootstrap.runs << '\n';
        }
    }
}

}  // namespace tci
