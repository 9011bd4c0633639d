#include "tci/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tci {

namespace {

// Model inputs for one sequence: a single feature matrix, or one view per
// resolution when the ensemble is on.
struct Prepared {
    FeatureMatrix features;
    std::vector<ResolutionView> views;
};

Prepared prepare(const EventSequence& seq, const FeatureCodec& codec, const std::optional<MreSettings>& mre) {
    Prepared p;
    if (mre) {
        p.views = resolution_views(seq, *mre, codec);
    } else {
        p.features = codec.featurize(seq);
    }
    return p;
}

// Forward pass; when `grad` is non-empty also accumulates the gradient of
// the example loss into it (predictor params first, then beta). Returns the
// example loss.
double example_step(const Model& model, const Prepared& in, const Label& label, std::span<double> grad) {
    const ReferencePredictor& f = model.predictor;
    const Task task = f.task();
    if (!model.mre) {
        const auto tr = f.forward(in.features);
        const double l = loss(tr.output, label, task);
        if (!grad.empty()) f.backward(tr, f.logit_gradient(tr, label), grad.first(f.param_count()));
        return l;
    }

    const std::size_t K = in.views.size();
    const std::size_t s = f.output_dim();
    std::vector<ReferencePredictor::Trace> traces;
    std::vector<Descriptor> descriptors;
    traces.reserve(K);
    descriptors.reserve(K);
    for (const auto& v : in.views) {
        traces.push_back(f.forward(v.features));
        descriptors.push_back(v.descriptor);
    }
    const std::vector<double> alpha = attention_weights(descriptors, model.beta);
    std::vector<double> g(s, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t o = 0; o < s; ++o) g[o] += alpha[k] * traces[k].output[o];
    }
    const double l = loss(g, label, task);
    if (grad.empty()) return l;

    // d loss / d g
    std::vector<double> dg(s);
    if (task == Task::Regression) {
        dg[0] = 2.0 * (g[0] - std::get<double>(label));
    } else {
        const auto& y = std::get<ClassLabel>(label);
        for (std::size_t o = 0; o < s; ++o) {
            const double p = std::clamp(g[o], 1e-12, 1.0 - 1e-12);
            dg[o] = (p - (y[o] != 0 ? 1.0 : 0.0)) / (p * (1.0 - p));
        }
    }

    std::span<double> grad_theta = grad.first(f.param_count());
    std::span<double> grad_beta = grad.subspan(f.param_count(), kDescriptorDim);
    std::vector<double> d_logits(s);
    for (std::size_t k = 0; k < K; ++k) {
        double d_score = 0.0;
        for (std::size_t o = 0; o < s; ++o) {
            const double fk = traces[k].output[o];
            const double head = task == Task::Classification ? fk * (1.0 - fk) : 1.0;
            d_logits[o] = alpha[k] * dg[o] * head;
            d_score += dg[o] * (fk - g[o]);
        }
        f.backward(traces[k], d_logits, grad_theta);
        d_score *= alpha[k];
        for (std::size_t d = 0; d < kDescriptorDim; ++d) grad_beta[d] += d_score * descriptors[k][d];
    }
    return l;
}

void check_labels(std::span<const LabeledSequence> data, const ReferencePredictor::Shape& shape) {
    for (const auto& item : data) {
        if (shape.task == Task::Classification) {
            const auto* y = std::get_if<ClassLabel>(&item.label);
            if (y == nullptr || y->size() != shape.output) {
                throw DataError("sequence '" + item.sequence.id + "': label does not match the task");
            }
        } else if (!std::holds_alternative<double>(item.label)) {
            throw DataError("sequence '" + item.sequence.id + "': label does not match the task");
        }
    }
}

}  // namespace

ReferencePredictor::Shape infer_shape(std::span<const LabeledSequence> data, std::size_t input, std::size_t hidden) {
    if (data.empty()) throw DataError("cannot infer the task from an empty split");
    ReferencePredictor::Shape shape;
    shape.input = input;
    shape.hidden = hidden;
    if (const auto* y = std::get_if<ClassLabel>(&data.front().label)) {
        shape.task = Task::Classification;
        shape.output = y->size();
    } else {
        shape.task = Task::Regression;
        shape.output = 1;
    }
    return shape;
}

double mean_loss(const Model& model, std::span<const LabeledSequence> data, const FeatureCodec& codec) {
    if (data.empty()) return 0.0;
    double total = 0.0;
    for (const auto& item : data) {
        total += example_step(model, prepare(item.sequence, codec, model.mre), item.label, {});
    }
    return total / static_cast<double>(data.size());
}

TrainResult train(std::span<const LabeledSequence> train_set, std::span<const LabeledSequence> val_set,
                  const FeatureCodec& codec, const TrainConfig& config, const EpochCallback& on_epoch) {
    if (train_set.empty()) throw DataError("train: empty training split");
    if (config.batch_size == 0) throw std::invalid_argument("train: batch size must be positive");

    const auto shape = infer_shape(train_set, codec.width(), config.hidden);
    check_labels(train_set, shape);
    check_labels(val_set, shape);

    TrainResult result;
    Model& model = result.model;
    model.predictor = ReferencePredictor(shape, mix_seed(config.seed, 0));
    model.mre = config.mre;

    const std::size_t n = train_set.size();
    const bool augmenting = config.augment.has_value();
    std::vector<Prepared> fixed_inputs;
    if (!augmenting) {
        fixed_inputs.reserve(n);
        for (const auto& item : train_set) fixed_inputs.push_back(prepare(item.sequence, codec, model.mre));
    }
    std::vector<Prepared> val_inputs;
    val_inputs.reserve(val_set.size());
    for (const auto& item : val_set) val_inputs.push_back(prepare(item.sequence, codec, model.mre));

    const std::size_t theta_count = model.predictor.param_count();
    const std::size_t total_params = theta_count + (model.mre ? kDescriptorDim : 0);
    std::vector<double> grad(total_params, 0.0);
    std::vector<double> velocity(total_params, 0.0);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(mix_seed(config.seed, 1));
    const std::uint64_t augment_seed = mix_seed(config.seed, 2);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t stop = std::min(n, start + config.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t b = start; b < stop; ++b) {
                const std::size_t idx = order[b];
                const LabeledSequence& item = train_set[idx];
                double l = 0.0;
                if (augmenting) {
                    // Independent stream per (epoch, sequence).
                    Rng rng(mix_seed(augment_seed, (static_cast<std::uint64_t>(epoch) << 32) ^ idx));
                    const EventSequence augmented = fast_augment(item.sequence, *config.augment, rng);
                    l = example_step(model, prepare(augmented, codec, model.mre), item.label, grad);
                } else {
                    l = example_step(model, fixed_inputs[idx], item.label, grad);
                }
                if (!std::isfinite(l)) {
                    throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                                       " (non-finite loss on sequence '" + item.sequence.id + "')");
                }
                epoch_loss += l;
            }
            const double scale = config.learning_rate / static_cast<double>(stop - start);
            auto params = model.predictor.params();
            for (std::size_t i = 0; i < total_params; ++i) {
                velocity[i] = config.momentum * velocity[i] - scale * grad[i];
                if (i < theta_count) {
                    params[i] += velocity[i];
                } else {
                    model.beta[i - theta_count] += velocity[i];
                }
            }
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = epoch_loss / static_cast<double>(n);
        if (!val_inputs.empty()) {
            double total = 0.0;
            for (std::size_t i = 0; i < val_inputs.size(); ++i) {
                total += example_step(model, val_inputs[i], val_set[i].label, {});
            }
            stats.val_loss = total / static_cast<double>(val_inputs.size());
        }
        if (!std::isfinite(stats.train_loss) || !std::isfinite(stats.val_loss)) {
            throw NumericError("training diverged at epoch " + std::to_string(epoch));
        }
        result.trace.push_back(stats);
        if (on_epoch) on_epoch(epoch, model);
    }
    return result;
}

}  // namespace tci
