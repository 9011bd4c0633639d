#pragma once

// Predictors and the multi-resolution ensemble (MRE).
//
// The ensemble evaluates one shared predictor on K coarsened views of a
// sequence and mixes the outputs with attention weights computed from
// per-view descriptors:
//
//   g(X) = sum_k alpha_k(X) * f(featurize(C_{p_k}(X)))
//   alpha = softmax(beta . phi_k),  phi_k = [log(T'_k + 1), p_k, zero-count fraction]

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "tci/codec.hpp"
#include "tci/coarsen.hpp"
#include "tci/core.hpp"

namespace tci {

enum class Task { Classification, Regression };

/// Classification: summed binary cross-entropy over outputs.
/// Regression: squared error on the single output.
double loss(std::span<const double> output, const Label& label, Task task);

class Predictor {
public:
    virtual ~Predictor() = default;

    virtual Task task() const = 0;
    virtual std::size_t input_dim() const = 0;
    virtual std::size_t output_dim() const = 0;
    /// Probabilities in [0,1]^s for classification, one real for regression.
    virtual std::vector<double> predict(const FeatureMatrix& features) const = 0;
    /// d loss / d features, same shape as `features`.
    virtual FeatureMatrix input_gradient(const FeatureMatrix& features, const Label& label) const = 0;
};

/// Mean over events, one ReLU hidden layer, then a logistic or identity head.
class ReferencePredictor final : public Predictor {
public:
    struct Shape {
        std::size_t input = 0;
        std::size_t hidden = 0;
        std::size_t output = 1;
        Task task = Task::Classification;
        bool operator==(const Shape&) const = default;
    };

    /// Intermediate values of one forward pass, kept for backpropagation.
    struct Trace {
        std::vector<double> pooled;
        std::vector<double> hidden;  // post-activation
        std::vector<double> output;  // post-head
        std::size_t rows = 0;
    };

    ReferencePredictor() = default;
    /// He-initialized hidden weights, scaled output weights, zero biases.
    ReferencePredictor(Shape shape, std::uint64_t seed);
    ReferencePredictor(Shape shape, std::vector<double> params);

    Task task() const override { return shape_.task; }
    std::size_t input_dim() const override { return shape_.input; }
    std::size_t output_dim() const override { return shape_.output; }
    const Shape& shape() const { return shape_; }

    std::vector<double> predict(const FeatureMatrix& features) const override;
    FeatureMatrix input_gradient(const FeatureMatrix& features, const Label& label) const override;

    Trace forward(const FeatureMatrix& features) const;

    /// Accumulates d loss / d params into `grad` given d loss / d (pre-head
    /// output) and, when `d_pooled` is non-empty, writes d loss / d pooled.
    void backward(const Trace& trace, std::span<const double> d_logits, std::span<double> grad,
                  std::span<double> d_pooled = {}) const;

    /// d loss / d (pre-head output) for one example.
    std::vector<double> logit_gradient(const Trace& trace, const Label& label) const;

    /// Vector-Jacobian product from pre-head output back to the input rows.
    FeatureMatrix input_gradient_from_logits(const Trace& trace, std::span<const double> d_logits) const;

    std::span<const double> params() const { return params_; }
    std::span<double> params() { return params_; }
    std::size_t param_count() const { return params_.size(); }

    bool operator==(const ReferencePredictor& o) const { return shape_ == o.shape_ && params_ == o.params_; }

private:
    // Flat layout: W1 (hidden x input), b1, W2 (output x hidden), b2.
    std::size_t w1() const { return 0; }
    std::size_t b1() const { return shape_.hidden * shape_.input; }
    std::size_t w2() const { return b1() + shape_.hidden; }
    std::size_t b2() const { return w2() + shape_.output * shape_.hidden; }

    Shape shape_;
    std::vector<double> params_;
};

/// Number of attention descriptor features.
inline constexpr std::size_t kDescriptorDim = 3;
using Descriptor = std::array<double, kDescriptorDim>;
using AttentionParams = std::array<double, kDescriptorDim>;

struct MreSettings {
    CoarsenMode mode = CoarsenMode::Cluster;
    std::vector<double> resolutions{1.0, 0.5, 0.25, 0.125};
    std::optional<Interval> interval;  // grid mode window; defaults to the sequence span
    bool operator==(const MreSettings&) const = default;
};

/// [log(T' + 1), p, fraction of zero-count events] for one coarsened view.
Descriptor attention_descriptor(const EventSequence& coarsened, double p);

/// Normalized exponentials of beta . descriptor.
std::vector<double> attention_weights(std::span<const Descriptor> descriptors, const AttentionParams& beta);

/// One coarsened and featurized view per resolution.
struct ResolutionView {
    FeatureMatrix features;
    Descriptor descriptor{};
};

std::vector<ResolutionView> resolution_views(const EventSequence& seq, const MreSettings& settings,
                                             const FeatureCodec& codec);

struct MreOutput {
    std::vector<double> prediction;
    std::vector<double> alpha;
    std::vector<std::vector<double>> per_resolution;
};

MreOutput mre_predict(const EventSequence& seq, const Predictor& predictor, const AttentionParams& beta,
                      const MreSettings& settings, const FeatureCodec& codec);

struct MreInputGradient {
    std::vector<ResolutionView> views;
    std::vector<FeatureMatrix> gradients;  // d loss(y, g) / d features, per view
    AttentionParams beta{};
};

/// Gradient of the ensemble loss with respect to every view's features,
/// with the attention weights held fixed (they depend on the views' shapes,
/// not their feature values).
MreInputGradient mre_input_gradient(const EventSequence& seq, const ReferencePredictor& predictor,
                                    const AttentionParams& beta, const MreSettings& settings,
                                    const FeatureCodec& codec, const Label& label);

/// A trained model: the shared predictor plus, when the ensemble is on, its
/// attention parameters and resolution schedule.
struct Model {
    ReferencePredictor predictor;
    std::optional<MreSettings> mre;
    AttentionParams beta{};

    std::vector<double> predict(const EventSequence& seq, const FeatureCodec& codec) const;

    /// Versioned text record; doubles use 17 significant digits, so a
    /// write/read round trip is exact.
    void write(std::ostream& os) const;
    static Model read(std::istream& is);

    bool operator==(const Model&) const = default;
};

}  // namespace tci
