#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tci/augment.hpp"
#include "tci/codec.hpp"
#include "tci/core.hpp"
#include "tci/model.hpp"

namespace tci {

struct TrainConfig {
    std::size_t epochs = 50;
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::size_t batch_size = 32;
    std::size_t hidden = 64;
    std::uint64_t seed = 0;
    /// When set, every training sequence is replaced by a fresh augmentation
    /// draw each epoch.
    std::optional<AugmentConfig> augment;
    /// When set, trains the multi-resolution ensemble (shared predictor and
    /// attention parameters jointly).
    std::optional<MreSettings> mre;
};

struct EpochStats {
    std::size_t epoch = 0;
    double train_loss = 0.0;  // mean over the epoch's examples, pre-update
    double val_loss = 0.0;    // mean over the validation split; 0 when empty
};

struct TrainResult {
    Model model;
    std::vector<EpochStats> trace;
};

/// Called after every epoch with the 1-based epoch number.
using EpochCallback = std::function<void(std::size_t epoch, const Model&)>;

/// Mini-batch SGD with momentum. Deterministic for a fixed seed. Throws
/// DataError on an empty train split or mismatched labels and NumericError
/// (naming the epoch) when the loss becomes non-finite.
TrainResult train(std::span<const LabeledSequence> train_set, std::span<const LabeledSequence> val_set,
                  const FeatureCodec& codec, const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Mean loss of `model` over a labeled set.
double mean_loss(const Model& model, std::span<const LabeledSequence> data, const FeatureCodec& codec);

/// Infers the task and output width from the first label.
ReferencePredictor::Shape infer_shape(std::span<const LabeledSequence> data, std::size_t input, std::size_t hidden);

}  // namespace tci
