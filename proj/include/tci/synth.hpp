#pragma once

// Synthetic irregular sequences with labels driven by time-weighted means.
//
// Each sequence carries smooth latent signals over [0, horizon]. Events are
// observed at times drawn from a mix of uniform arrivals and Gaussian bursts
// around Poisson-distributed visit centers, with random per-variable
// missingness. The label is a noisy threshold of a fixed linear contrast of
// the latent time-weighted means, so transforms that keep time-weighted
// means roughly intact keep P(y | X) roughly intact.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tci/codec.hpp"
#include "tci/core.hpp"
#include "tci/model.hpp"

namespace tci {

struct SynthConfig {
    std::size_t n_sequences = 1000;
    double val_fraction = 0.15;
    double test_fraction = 0.15;
    std::size_t real_variables = 4;
    std::size_t ordinal_variables = 1;  // levels 1..5
    std::size_t t_min = 16;
    std::size_t t_max = 64;
    double horizon_hours = 24.0;
    double burst_intensity = 0.7;  // fraction of events drawn inside bursts
    double burst_spread_hours = 0.25;
    double observe_prob = 0.6;
    double measurement_noise = 0.2;
    double signal_scale = 4.0;  // logit = scale * normalized contrast
    double label_noise = 1.0;   // logistic noise scale on the logit; 0 = deterministic
    Task task = Task::Classification;
    std::uint64_t seed = 0;
};

struct SynthSplit {
    std::vector<LabeledSequence> items;
    /// P(y = 1 | latent means) under the generating rule (classification),
    /// or the noiseless target (regression).
    std::vector<double> bayes;
};

struct SynthDataset {
    SynthSplit train;
    SynthSplit val;
    SynthSplit test;
};

/// Throws DataError for an inconsistent config (t_max < t_min, t_min < 1,
/// negative noise, fractions outside [0, 1], no variables).
void check_config(const SynthConfig& config);

SynthDataset generate(const SynthConfig& config);

/// Variable kinds matching generated data.
Schema synth_schema(const SynthConfig& config);

/// Contrast weights applied to the per-variable time-weighted means.
std::vector<double> contrast_weights(const SynthConfig& config);

/// The generating label rule evaluated on time-weighted means estimated from
/// the observed events (nearest-neighbour time weights over the horizon;
/// unobserved variables contribute their prior mean 0).
double oracle_probability(const EventSequence& seq, const SynthConfig& config);

/// Per-variable time-weighted mean estimates used by `oracle_probability`,
/// on the latent scale.
std::vector<double> estimated_time_means(const EventSequence& seq, const SynthConfig& config);

}  // namespace tci
