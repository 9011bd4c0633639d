#include "tci/model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "tci/format.hpp"
#include "tci/simd.hpp"

namespace tci {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void check_label(const Label& label, std::size_t outputs, Task task) {
    if (task == Task::Classification) {
        const auto* y = std::get_if<ClassLabel>(&label);
        if (y == nullptr || y->size() != outputs) {
            throw DataError("classification label must be a binary vector of length " + std::to_string(outputs));
        }
    } else if (!std::holds_alternative<double>(label) || outputs != 1) {
        throw DataError("regression needs a real label and a single output");
    }
}

}  // namespace

double loss(std::span<const double> output, const Label& label, Task task) {
    check_label(label, output.size(), task);
    if (task == Task::Regression) {
        const double diff = output[0] - std::get<double>(label);
        return diff * diff;
    }
    const auto& y = std::get<ClassLabel>(label);
    double total = 0.0;
    for (std::size_t o = 0; o < output.size(); ++o) {
        const double p = std::clamp(output[o], 1e-12, 1.0 - 1e-12);
        total -= y[o] != 0 ? std::log(p) : std::log1p(-p);
    }
    return total;
}

ReferencePredictor::ReferencePredictor(Shape shape, std::uint64_t seed) : shape_(shape) {
    if (shape.input == 0 || shape.hidden == 0 || shape.output == 0) {
        throw std::invalid_argument("ReferencePredictor: dimensions must be positive");
    }
    if (shape.task == Task::Regression && shape.output != 1) {
        throw std::invalid_argument("ReferencePredictor: regression has one output");
    }
    params_.assign(b2() + shape.output, 0.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> hidden_init(0.0, std::sqrt(2.0 / static_cast<double>(shape.input)));
    std::normal_distribution<double> output_init(0.0, std::sqrt(1.0 / static_cast<double>(shape.hidden)));
    for (std::size_t i = 0; i < shape.hidden * shape.input; ++i) params_[w1() + i] = hidden_init(rng);
    for (std::size_t i = 0; i < shape.output * shape.hidden; ++i) params_[w2() + i] = output_init(rng);
}

ReferencePredictor::ReferencePredictor(Shape shape, std::vector<double> params)
    : shape_(shape), params_(std::move(params)) {
    if (params_.size() != b2() + shape.output) {
        throw std::invalid_argument("ReferencePredictor: parameter count does not match shape");
    }
}

ReferencePredictor::Trace ReferencePredictor::forward(const FeatureMatrix& features) const {
    if (features.cols != shape_.input) {
        throw DataError("predictor expects " + std::to_string(shape_.input) + " features per event, got " +
                        std::to_string(features.cols));
    }
    if (features.rows == 0) throw DataError("predictor input has no events");
    const auto& k = simd::active();
    Trace tr;
    tr.rows = features.rows;
    tr.pooled.assign(shape_.input, 0.0);
    for (std::size_t i = 0; i < features.rows; ++i) k.axpy(1.0, features.row(i).data(), tr.pooled.data(), shape_.input);
    const double inv = 1.0 / static_cast<double>(features.rows);
    for (double& v : tr.pooled) v *= inv;

    tr.hidden.resize(shape_.hidden);
    const double* W1 = params_.data() + w1();
    for (std::size_t j = 0; j < shape_.hidden; ++j) {
        tr.hidden[j] = k.dot(W1 + j * shape_.input, tr.pooled.data(), shape_.input) + params_[b1() + j];
    }
    k.relu(tr.hidden.data(), tr.hidden.data(), shape_.hidden);

    tr.output.resize(shape_.output);
    const double* W2 = params_.data() + w2();
    for (std::size_t o = 0; o < shape_.output; ++o) {
        const double z = k.dot(W2 + o * shape_.hidden, tr.hidden.data(), shape_.hidden) + params_[b2() + o];
        tr.output[o] = shape_.task == Task::Classification ? sigmoid(z) : z;
    }
    return tr;
}

std::vector<double> ReferencePredictor::predict(const FeatureMatrix& features) const {
    return forward(features).output;
}

std::vector<double> ReferencePredictor::logit_gradient(const Trace& trace, const Label& label) const {
    check_label(label, shape_.output, shape_.task);
    std::vector<double> d(shape_.output);
    if (shape_.task == Task::Regression) {
        d[0] = 2.0 * (trace.output[0] - std::get<double>(label));
    } else {
        const auto& y = std::get<ClassLabel>(label);
        for (std::size_t o = 0; o < shape_.output; ++o) d[o] = trace.output[o] - (y[o] != 0 ? 1.0 : 0.0);
    }
    return d;
}

void ReferencePredictor::backward(const Trace& trace, std::span<const double> d_logits, std::span<double> grad,
                                  std::span<double> d_pooled) const {
    const auto& k = simd::active();
    const double* W1 = params_.data() + w1();
    const double* W2 = params_.data() + w2();
    std::vector<double> d_hidden(shape_.hidden, 0.0);
    for (std::size_t o = 0; o < shape_.output; ++o) {
        const double g = d_logits[o];
        if (g == 0.0) continue;
        k.axpy(g, trace.hidden.data(), grad.data() + w2() + o * shape_.hidden, shape_.hidden);
        grad[b2() + o] += g;
        k.axpy(g, W2 + o * shape_.hidden, d_hidden.data(), shape_.hidden);
    }
    for (std::size_t j = 0; j < shape_.hidden; ++j) {
        if (trace.hidden[j] <= 0.0) d_hidden[j] = 0.0;
    }
    for (std::size_t j = 0; j < shape_.hidden; ++j) {
        const double g = d_hidden[j];
        if (g == 0.0) continue;
        k.axpy(g, trace.pooled.data(), grad.data() + w1() + j * shape_.input, shape_.input);
        grad[b1() + j] += g;
    }
    if (!d_pooled.empty()) {
        std::fill(d_pooled.begin(), d_pooled.end(), 0.0);
        for (std::size_t j = 0; j < shape_.hidden; ++j) {
            if (d_hidden[j] != 0.0) k.axpy(d_hidden[j], W1 + j * shape_.input, d_pooled.data(), shape_.input);
        }
    }
}

FeatureMatrix ReferencePredictor::input_gradient_from_logits(const Trace& trace,
                                                            std::span<const double> d_logits) const {
    std::vector<double> scratch(params_.size(), 0.0);
    std::vector<double> d_pooled(shape_.input, 0.0);
    backward(trace, d_logits, scratch, d_pooled);

    // Mean pooling spreads the pooled gradient evenly over the events.
    FeatureMatrix out(trace.rows, shape_.input);
    const double inv = 1.0 / static_cast<double>(trace.rows);
    for (std::size_t i = 0; i < trace.rows; ++i) {
        auto row = out.row(i);
        for (std::size_t c = 0; c < shape_.input; ++c) row[c] = d_pooled[c] * inv;
    }
    return out;
}

FeatureMatrix ReferencePredictor::input_gradient(const FeatureMatrix& features, const Label& label) const {
    const Trace tr = forward(features);
    return input_gradient_from_logits(tr, logit_gradient(tr, label));
}

Descriptor attention_descriptor(const EventSequence& coarsened, double p) {
    std::size_t empty = 0;
    for (const Event& e : coarsened.events) {
        if (e.c == 0) ++empty;
    }
    const double n = static_cast<double>(coarsened.length());
    return {std::log(n + 1.0), p, n > 0.0 ? static_cast<double>(empty) / n : 0.0};
}

std::vector<double> attention_weights(std::span<const Descriptor> descriptors, const AttentionParams& beta) {
    std::vector<double> scores(descriptors.size());
    for (std::size_t k = 0; k < descriptors.size(); ++k) {
        double s = 0.0;
        for (std::size_t f = 0; f < kDescriptorDim; ++f) s += beta[f] * descriptors[k][f];
        scores[k] = s;
    }
    if (scores.empty()) return scores;
    const double top = *std::max_element(scores.begin(), scores.end());
    double total = 0.0;
    for (double& s : scores) {
        s = std::exp(s - top);
        total += s;
    }
    for (double& s : scores) s /= total;
    return scores;
}

std::vector<ResolutionView> resolution_views(const EventSequence& seq, const MreSettings& settings,
                                             const FeatureCodec& codec) {
    if (settings.resolutions.empty()) throw std::invalid_argument("MRE needs at least one resolution");
    std::vector<ResolutionView> views;
    views.reserve(settings.resolutions.size());
    for (double p : settings.resolutions) {
        const EventSequence coarse = coarsen(seq, CoarseningSpec{settings.mode, p, settings.interval});
        views.push_back({codec.featurize(coarse), attention_descriptor(coarse, p)});
    }
    return views;
}

MreOutput mre_predict(const EventSequence& seq, const Predictor& predictor, const AttentionParams& beta,
                      const MreSettings& settings, const FeatureCodec& codec) {
    const auto views = resolution_views(seq, settings, codec);
    std::vector<Descriptor> descriptors;
    descriptors.reserve(views.size());
    for (const auto& v : views) descriptors.push_back(v.descriptor);

    MreOutput out;
    out.alpha = attention_weights(descriptors, beta);
    out.prediction.assign(predictor.output_dim(), 0.0);
    for (std::size_t k = 0; k < views.size(); ++k) {
        out.per_resolution.push_back(predictor.predict(views[k].features));
        for (std::size_t o = 0; o < out.prediction.size(); ++o) {
            out.prediction[o] += out.alpha[k] * out.per_resolution.back()[o];
        }
    }
    return out;
}

MreInputGradient mre_input_gradient(const EventSequence& seq, const ReferencePredictor& predictor,
                                    const AttentionParams& beta, const MreSettings& settings,
                                    const FeatureCodec& codec, const Label& label) {
    MreInputGradient out;
    out.views = resolution_views(seq, settings, codec);
    out.beta = beta;
    std::vector<Descriptor> descriptors;
    std::vector<ReferencePredictor::Trace> traces;
    for (const auto& v : out.views) {
        descriptors.push_back(v.descriptor);
        traces.push_back(predictor.forward(v.features));
    }
    const auto alpha = attention_weights(descriptors, beta);
    const std::size_t s = predictor.output_dim();
    const Task task = predictor.task();
    std::vector<double> g(s, 0.0);
    for (std::size_t k = 0; k < traces.size(); ++k) {
        for (std::size_t o = 0; o < s; ++o) g[o] += alpha[k] * traces[k].output[o];
    }
    loss(g, label, task);  // validates the label

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
    std::vector<double> d_logits(s);
    for (std::size_t k = 0; k < traces.size(); ++k) {
        for (std::size_t o = 0; o < s; ++o) {
            const double fk = traces[k].output[o];
            d_logits[o] = alpha[k] * dg[o] * (task == Task::Classification ? fk * (1.0 - fk) : 1.0);
        }
        out.gradients.push_back(predictor.input_gradient_from_logits(traces[k], d_logits));
    }
    return out;
}

std::vector<double> Model::predict(const EventSequence& seq, const FeatureCodec& codec) const {
    if (!mre) return predictor.predict(codec.featurize(seq));
    return mre_predict(seq, predictor, beta, *mre, codec).prediction;
}

void Model::write(std::ostream& os) const {
    const auto& s = predictor.shape();
    os << "tci-model 1\n";
    os << "task " << (s.task == Task::Classification ? "classification" : "regression") << '\n';
    os << "shape " << s.input << ' ' << s.hidden << ' ' << s.output << '\n';
    if (!mre) {
        os << "mre none\n";
    } else {
        os << "mre " << (mre->mode == CoarsenMode::Grid ? "grid" : "cluster") << '\n';
        os << "resolutions " << mre->resolutions.size();
        for (double p : mre->resolutions) os << ' ' << format_double(p);
        os << '\n';
        if (mre->interval) {
            os << "interval " << format_double(mre->interval->left) << ' ' << format_double(mre->interval->right)
               << '\n';
        } else {
            os << "interval none\n";
        }
    }
    os << "beta";
    for (double b : beta) os << ' ' << format_double(b);
    os << "\nparams " << predictor.param_count() << '\n';
    for (double v : predictor.params()) os << format_double(v) << '\n';
}

namespace {

class LineReader {
public:
    explicit LineReader(std::istream& is) : is_(is) {}

    std::istringstream expect(const std::string& key) {
        std::string line;
        if (!std::getline(is_, line)) throw DataError("model: unexpected end of input, expected '" + key + "'");
        ++line_;
        std::istringstream ls(line);
        std::string got;
        ls >> got;
        if (got != key) throw error("expected '" + key + "', got '" + got + "'");
        return ls;
    }

    std::string word(std::istringstream& ls) {
        std::string w;
        if (!(ls >> w)) throw error("missing field");
        return w;
    }

    double number(std::istringstream& ls) { return parse_double(word(ls), where()); }

    std::size_t count(std::istringstream& ls) {
        const std::string w = word(ls);
        if (w.empty() || w.find_first_not_of("0123456789") != std::string::npos) throw error("bad count '" + w + "'");
        if (w.size() > 12) throw error("count out of range '" + w + "'");
        return static_cast<std::size_t>(std::stoull(w));
    }

    double bare_number() {
        std::string line;
        if (!std::getline(is_, line)) throw DataError("model: truncated parameter list");
        ++line_;
        return parse_double(line, where());
    }

    DataError error(const std::string& what) const { return DataError(where() + ": " + what); }

private:
    std::string where() const { return "model line " + std::to_string(line_); }

    std::istream& is_;
    std::size_t line_ = 0;
};

}  // namespace

Model Model::read(std::istream& is) {
    LineReader in(is);
    {
        auto ls = in.expect("tci-model");
        if (in.count(ls) != 1) throw in.error("unsupported model version");
    }
    ReferencePredictor::Shape shape;
    {
        auto ls = in.expect("task");
        const std::string t = in.word(ls);
        if (t == "classification") {
            shape.task = Task::Classification;
        } else if (t == "regression") {
            shape.task = Task::Regression;
        } else {
            throw in.error("unknown task '" + t + "'");
        }
    }
    {
        auto ls = in.expect("shape");
        shape.input = in.count(ls);
        shape.hidden = in.count(ls);
        shape.output = in.count(ls);
        if (shape.input == 0 || shape.hidden == 0 || shape.output == 0) throw in.error("dimensions must be positive");
        if (shape.task == Task::Regression && shape.output != 1) throw in.error("regression has one output");
    }
    Model m;
    {
        auto ls = in.expect("mre");
        const std::string mode = in.word(ls);
        if (mode != "none") {
            MreSettings settings;
            if (mode == "grid") {
                settings.mode = CoarsenMode::Grid;
            } else if (mode == "cluster") {
                settings.mode = CoarsenMode::Cluster;
            } else {
                throw in.error("unknown MRE mode '" + mode + "'");
            }
            auto rs = in.expect("resolutions");
            const std::size_t k = in.count(rs);
            settings.resolutions.clear();
            if (k == 0) throw in.error("MRE needs at least one resolution");
            for (std::size_t i = 0; i < k; ++i) {
                const double p = in.number(rs);
                if (!(p > 0.0 && p <= 1.0)) throw in.error("resolution outside (0, 1]");
                settings.resolutions.push_back(p);
            }
            auto is_line = in.expect("interval");
            std::string first = in.word(is_line);
            if (first != "none") {
                const double left = parse_double(first, "model interval");
                settings.interval = Interval{left, in.number(is_line)};
                if (!(settings.interval->left < settings.interval->right)) throw in.error("interval needs left < right");
            }
            m.mre = std::move(settings);
        }
    }
    {
        auto ls = in.expect("beta");
        for (double& b : m.beta) b = in.number(ls);
    }
    std::size_t n = 0;
    {
        auto ls = in.expect("params");
        n = in.count(ls);
        const std::size_t expected = shape.hidden * shape.input + shape.hidden + shape.output * shape.hidden + shape.output;
        if (n != expected) throw in.error("parameter count does not match shape");
    }
    std::vector<double> params(n);
    for (double& v : params) v = in.bare_number();
    try {
        m.predictor = ReferencePredictor(shape, std::move(params));
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("model: ") + e.what());
    }
    return m;
}

}  // namespace tci
