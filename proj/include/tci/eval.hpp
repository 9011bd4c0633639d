#pragma once

// Metrics, bootstrap uncertainty, FGSM perturbation and invariance gaps.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tci/codec.hpp"
#include "tci/core.hpp"
#include "tci/model.hpp"

namespace tci {

/// ROC-AUC as the normalized Mann-Whitney statistic with midranks for tied
/// scores. Throws NumericError unless both classes are present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Average precision: precision at each positive's rank, averaged over the
/// positives. Tied scores are ranked as one block (precision measured at the
/// end of the block). Throws NumericError when there are no positives.
double average_precision(std::span<const double> scores, std::span<const int> labels);

struct ClassificationMetrics {
    double roc_auc = 0.0;
    double map = 0.0;
};
ClassificationMetrics classification_metrics(std::span<const double> scores, std::span<const int> labels);

struct RegressionMetrics {
    double mae = 0.0;
    double rmse = 0.0;
    double correlation = 0.0;
};
double mean_absolute_error(std::span<const double> preds, std::span<const double> targets);
double root_mean_squared_error(std::span<const double> preds, std::span<const double> targets);
/// Pearson correlation; NumericError on zero variance.
double pearson_correlation(std::span<const double> preds, std::span<const double> targets);
RegressionMetrics regression_metrics(std::span<const double> preds, std::span<const double> targets);

/// Metric over paired (prediction, target) values. Targets are doubles for
/// both tasks; classification metrics read them as 0/1.
using PairedMetric = std::function<double(std::span<const double> preds, std::span<const double> targets)>;

struct BootstrapEstimate {
    double mean = 0.0;
    double std_error = 0.0;  // sample standard deviation over runs; 0 when runs == 1
    std::size_t runs = 0;
};

/// Resamples pairs with replacement. Run i draws from its own substream of
/// `seed`, so the result is independent of scheduling. A run whose metric
/// throws NumericError (e.g. a single-class resample) is redrawn up to 100
/// times before the error propagates.
BootstrapEstimate bootstrap(const PairedMetric& metric, std::span<const double> preds,
                            std::span<const double> targets, std::size_t runs, std::uint64_t seed);

/// x + eps * sign(gradient), sign(0) = 0.
FeatureMatrix fgsm(const FeatureMatrix& features, double eps, const FeatureMatrix& gradient);

/// Prediction after an FGSM step on the model's own input features, using
/// the exact loss gradient for the label. For an ensemble, every
/// resolution view is perturbed with its share of the ensemble gradient.
std::vector<double> fgsm_predict(const Model& model, const FeatureCodec& codec, const LabeledSequence& item,
                                 double eps);

using SequenceModel = std::function<std::vector<double>(const EventSequence&)>;
/// `index` lets stochastic transforms derive a per-sequence RNG stream.
using SequenceTransform = std::function<EventSequence(const EventSequence&, std::size_t index)>;

/// Mean |g(T(X)) - g(X)| over the sequences, per output.
std::vector<double> invariance_gap(const SequenceModel& model, std::span<const EventSequence> sequences,
                                   const SequenceTransform& transform);

struct MetricEntry {
    std::string name;
    double value = 0.0;
    bool has_bootstrap = false;
    BootstrapEstimate bootstrap;
};

struct EvalReport {
    std::vector<MetricEntry> metrics;
    /// Extra context lines, e.g. the transform an invariance gap was measured under.
    std::vector<std::pair<std::string, std::string>> notes;

    void write_text(std::ostream& os) const;
    /// One `key=value` per line.
    void write_kv(std::ostream& os) const;
};

}  // namespace tci
