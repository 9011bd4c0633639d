#include "tci/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace tci {

namespace {

constexpr double kOrdinalCenter = 3.0;
constexpr double kOrdinalLevels = 5.0;

// m + a*sin(w t + phi) + b*(t/H - 1/2)
struct LatentSignal {
    double level = 0.0;
    double amplitude = 0.0;
    double omega = 0.0;
    double phase = 0.0;
    double drift = 0.0;

    double at(double t, double horizon) const {
        return level + amplitude * std::sin(omega * t + phase) + drift * (t / horizon - 0.5);
    }

    // Exact mean over [0, H]; the drift term integrates to zero.
    double time_mean(double horizon) const {
        return level + amplitude * (std::cos(phase) - std::cos(omega * horizon + phase)) / (omega * horizon);
    }
};

double sigmoid(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

double logit_of(std::span<const double> means, std::span<const double> weights, double scale) {
    double s = 0.0;
    for (std::size_t j = 0; j < means.size(); ++j) s += weights[j] * means[j];
    return scale * s;
}

double label_probability(double logit, double noise) {
    if (noise == 0.0) return logit > 0.0 ? 1.0 : 0.0;
    return sigmoid(logit / noise);
}

struct Generated {
    LabeledSequence item;
    double bayes = 0.0;
};

Generated generate_one(const SynthConfig& cfg, std::size_t index, std::mt19937_64& rng) {
    const std::size_t r = cfg.real_variables + cfg.ordinal_variables;
    const double H = cfg.horizon_hours;
    std::normal_distribution<double> std_normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<LatentSignal> signals(r);
    for (auto& s : signals) {
        s.level = std_normal(rng);
        s.amplitude = 0.5 + unit(rng);
        s.omega = 2.0 * std::numbers::pi / (6.0 + 18.0 * unit(rng));
        s.phase = 2.0 * std::numbers::pi * unit(rng);
        s.drift = std_normal(rng);
    }

    std::uniform_int_distribution<std::size_t> length(cfg.t_min, cfg.t_max);
    const std::size_t T = length(rng);
    std::poisson_distribution<int> extra_centers(static_cast<double>(T) / 8.0);
    const std::size_t n_centers = 1 + static_cast<std::size_t>(extra_centers(rng));
    std::vector<double> centers(n_centers);
    for (double& c : centers) c = H * unit(rng);
    std::uniform_int_distribution<std::size_t> pick_center(0, n_centers - 1);
    std::normal_distribution<double> spread(0.0, cfg.burst_spread_hours);

    std::vector<double> times(T);
    for (double& t : times) {
        if (unit(rng) < cfg.burst_intensity) {
            t = std::clamp(centers[pick_center(rng)] + spread(rng), 0.0, H);
        } else {
            t = H * unit(rng);
        }
    }
    std::sort(times.begin(), times.end());

    EventSequence seq;
    seq.id = "s" + std::to_string(index);
    seq.r = r;
    std::uniform_int_distribution<std::size_t> pick_var(0, r - 1);
    std::normal_distribution<double> meas(0.0, cfg.measurement_noise > 0.0 ? cfg.measurement_noise : 1.0);
    for (double t : times) {
        std::vector<bool> mask(r);
        bool any = false;
        for (std::size_t j = 0; j < r; ++j) {
            mask[j] = unit(rng) < cfg.observe_prob;
            any = any || mask[j];
        }
        if (!any) mask[pick_var(rng)] = true;
        std::vector<double> x(r, 0.0);
        for (std::size_t j = 0; j < r; ++j) {
            const double noise = cfg.measurement_noise > 0.0 ? meas(rng) : 0.0;
            if (!mask[j]) continue;
            const double v = signals[j].at(t, H) + noise;
            if (j < cfg.real_variables) {
                x[j] = v;
            } else {
                x[j] = std::clamp(std::round(v + kOrdinalCenter), 1.0, kOrdinalLevels);
            }
        }
        seq.events.push_back(make_event(t, std::move(x), std::move(mask)));
    }

    std::vector<double> means(r);
    for (std::size_t j = 0; j < r; ++j) means[j] = signals[j].time_mean(H);
    const double logit = logit_of(means, contrast_weights(cfg), cfg.signal_scale);

    Generated g;
    g.item.sequence = std::move(seq);
    if (cfg.task == Task::Classification) {
        // Threshold of logit plus logistic noise == Bernoulli(sigmoid(logit / noise)).
        double noisy = logit;
        if (cfg.label_noise > 0.0) {
            const double u = std::clamp(unit(rng), 1e-16, 1.0 - 1e-16);
            noisy += cfg.label_noise * std::log(u / (1.0 - u));
        }
        g.item.label = ClassLabel{noisy > 0.0 ? 1 : 0};
        g.bayes = label_probability(logit, cfg.label_noise);
    } else {
        g.item.label = logit + cfg.label_noise * std_normal(rng);
        g.bayes = logit;
    }
    return g;
}

}  // namespace

void check_config(const SynthConfig& c) {
    if (c.t_min < 1) throw DataError("synth: t_min must be >= 1");
    if (c.t_max < c.t_min) throw DataError("synth: t_max < t_min");
    if (c.real_variables + c.ordinal_variables == 0) throw DataError("synth: no variables");
    if (c.label_noise < 0.0 || c.measurement_noise < 0.0) throw DataError("synth: noise levels must be >= 0");
    if (c.burst_intensity < 0.0 || c.burst_intensity > 1.0) throw DataError("synth: burst intensity outside [0, 1]");
    if (c.observe_prob <= 0.0 || c.observe_prob > 1.0) throw DataError("synth: observe_prob outside (0, 1]");
    if (c.val_fraction < 0.0 || c.test_fraction < 0.0 || c.val_fraction + c.test_fraction > 1.0) {
        throw DataError("synth: split fractions must be >= 0 and sum to at most 1");
    }
    if (!(c.horizon_hours > 0.0)) throw DataError("synth: horizon must be positive");
    if (c.burst_spread_hours < 0.0) throw DataError("synth: burst spread must be >= 0");
}

std::vector<double> contrast_weights(const SynthConfig& config) {
    const std::size_t r = config.real_variables + config.ordinal_variables;
    std::vector<double> w(r);
    for (std::size_t j = 0; j < r; ++j) w[j] = (j % 2 == 0) ? 1.0 : -1.0;
    const double norm = std::sqrt(static_cast<double>(r));
    for (double& v : w) v /= norm;
    return w;
}

Schema synth_schema(const SynthConfig& config) {
    Schema schema;
    for (std::size_t j = 0; j < config.real_variables; ++j) {
        schema.variables.push_back({VariableKind::Real, "real" + std::to_string(j), {}});
    }
    for (std::size_t j = 0; j < config.ordinal_variables; ++j) {
        schema.variables.push_back({VariableKind::Ordinal, "ord" + std::to_string(j), {1, 2, 3, 4, 5}});
    }
    return schema;
}

SynthDataset generate(const SynthConfig& config) {
    check_config(config);
    const std::size_t n = config.n_sequences;
    std::vector<Generated> all;
    all.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        // One stream per sequence: a sequence does not change when n does.
        std::mt19937_64 rng(mix_seed(config.seed, i));
        all.push_back(generate_one(config, i, rng));
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 split_rng(mix_seed(config.seed, ~std::uint64_t{0}));
    std::shuffle(order.begin(), order.end(), split_rng);
    const auto n_test = static_cast<std::size_t>(std::llround(config.test_fraction * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(std::llround(config.val_fraction * static_cast<double>(n)));

    SynthDataset ds;
    for (std::size_t k = 0; k < n; ++k) {
        SynthSplit& split = k < n_test ? ds.test : (k < n_test + n_val ? ds.val : ds.train);
        Generated& g = all[order[k]];
        split.items.push_back(std::move(g.item));
        split.bayes.push_back(g.bayes);
    }
    return ds;
}

std::vector<double> estimated_time_means(const EventSequence& seq, const SynthConfig& config) {
    const std::size_t r = config.real_variables + config.ordinal_variables;
    if (seq.r != r) throw DataError("oracle: sequence dimensionality differs from the synthetic config");
    const double H = config.horizon_hours;
    std::vector<double> means(r, 0.0);
    std::vector<double> times;
    std::vector<double> values;
    for (std::size_t j = 0; j < r; ++j) {
        times.clear();
        values.clear();
        for (const Event& e : seq.events) {
            if (!e.mask[j]) continue;
            times.push_back(e.t);
            values.push_back(j < config.real_variables ? e.x[j] : e.x[j] - kOrdinalCenter);
        }
        if (times.empty()) continue;
        // Each observation covers the span closer to it than to its neighbours.
        double total = 0.0;
        double weight_sum = 0.0;
        for (std::size_t i = 0; i < times.size(); ++i) {
            const double lo = i == 0 ? 0.0 : 0.5 * (times[i - 1] + times[i]);
            const double hi = i + 1 == times.size() ? H : 0.5 * (times[i] + times[i + 1]);
            const double w = std::max(hi - lo, 0.0);
            total += w * values[i];
            weight_sum += w;
        }
        means[j] = weight_sum > 0.0 ? total / weight_sum
                                    : std::accumulate(values.begin(), values.end(), 0.0) /
                                          static_cast<double>(values.size());
    }
    return means;
}

double oracle_probability(const EventSequence& seq, const SynthConfig& config) {
    const auto means = estimated_time_means(seq, config);
    const double logit = logit_of(means, contrast_weights(config), config.signal_scale);
    return config.task == Task::Classification ? label_probability(logit, config.label_noise) : logit;
}

}  // namespace tci
