#include "tci/codec.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "tci/format.hpp"

namespace tci {

double percentile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("percentile_sorted: empty input");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

RobustStats fit_robust_stats(std::span<const double> values) {
    if (values.empty()) throw DataError("fit_robust_stats: variable has no observed values");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());

    RobustStats s;
    s.p2 = percentile_sorted(sorted, 0.02);
    s.p98 = percentile_sorted(sorted, 0.98);

    // With two or three distinct values the interpolated bounds can exclude
    // every sample; fall back to all of them then.
    const bool any_inside = std::any_of(sorted.begin(), sorted.end(),
                                        [&](double v) { return v >= s.p2 && v <= s.p98; });
    const auto retained = [&](double v) { return !any_inside || (v >= s.p2 && v <= s.p98); };

    double sum = 0.0;
    std::size_t n = 0;
    for (double v : sorted) {
        if (retained(v)) {
            sum += v;
            ++n;
        }
    }
    s.mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (double v : sorted) {
        if (retained(v)) sq += (v - s.mean) * (v - s.mean);
    }
    s.stddev = std::sqrt(sq / static_cast<double>(n));
    if (s.stddev < 1e-8) s.stddev = 1.0;
    return s;
}

double transform_real(double value, const RobustStats& stats) {
    const double clamped = std::clamp(value, stats.p2, stats.p98);
    return (clamped - stats.mean) / stats.stddev;
}

std::vector<double> unary_encode(std::size_t level, std::size_t k) {
    if (k == 0 || level < 1 || level > k) {
        throw std::out_of_range("unary_encode: level must lie in [1, k]");
    }
    std::vector<double> bits(k - 1, 0.0);
    std::fill_n(bits.begin(), level - 1, 1.0);
    return bits;
}

std::size_t bin_index(double value, std::span<const double> upper_edges) {
    std::size_t bin = 1;
    for (double edge : upper_edges) {
        if (value <= edge) return bin;
        ++bin;
    }
    return bin;
}

std::vector<double> encode_count(std::int64_t c) {
    if (c < 0) throw std::invalid_argument("encode_count: negative count");
    return unary_encode(bin_index(static_cast<double>(c), kCountBinEdges), kCountBinEdges.size() + 1);
}

std::vector<double> encode_time_gap(double gap_hours) {
    if (!(gap_hours >= 0.0)) throw std::invalid_argument("encode_time_gap: negative gap");
    return unary_encode(bin_index(gap_hours, kTimeGapBinEdges), kTimeGapBinEdges.size() + 1);
}

std::size_t ordinal_level(double value, const OrdinalSpec& spec) {
    const auto& lv = spec.levels;
    if (lv.empty()) throw std::invalid_argument("ordinal_level: no levels");
    const auto it = std::lower_bound(lv.begin(), lv.end(), value);
    if (it == lv.begin()) return 1;
    if (it == lv.end()) return lv.size();
    const auto hi = static_cast<std::size_t>(it - lv.begin());
    return (value - lv[hi - 1]) <= (lv[hi] - value) ? hi : hi + 1;
}

FeatureCodec FeatureCodec::fit(const Schema& schema, std::span<const EventSequence> train) {
    const std::size_t r = schema.variables.size();
    std::vector<std::vector<double>> observed(r);
    for (const EventSequence& seq : train) {
        if (seq.r != r) {
            throw DataError("codec fit: sequence '" + seq.id + "' has " + std::to_string(seq.r) +
                            " variables, schema has " + std::to_string(r));
        }
        for (const Event& e : seq.events) {
            for (std::size_t j = 0; j < r; ++j) {
                if (e.mask[j]) observed[j].push_back(e.x[j]);
            }
        }
    }

    FeatureCodec codec;
    codec.variables_.resize(r);
    for (std::size_t j = 0; j < r; ++j) {
        const VariableSchema& vs = schema.variables[j];
        Variable& v = codec.variables_[j];
        v.kind = vs.kind;
        v.name = vs.name.empty() ? "v" + std::to_string(j) : vs.name;
        if (vs.kind == VariableKind::Real) {
            if (observed[j].empty()) throw DataError("codec fit: real variable '" + v.name + "' is never observed");
            v.stats = fit_robust_stats(observed[j]);
        } else {
            std::vector<double> levels = vs.levels;
            if (levels.empty()) levels = observed[j];
            std::sort(levels.begin(), levels.end());
            levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
            if (levels.empty()) throw DataError("codec fit: ordinal variable '" + v.name + "' has no levels");
            v.ordinal.levels = std::move(levels);
        }
    }
    return codec;
}

std::size_t FeatureCodec::width() const {
    std::size_t d = 0;
    for (const Variable& v : variables_) {
        d += v.kind == VariableKind::Real ? 1 : v.ordinal.levels.size() - 1;
    }
    return d + kCountBinEdges.size() + kTimeGapBinEdges.size();
}

FeatureMatrix FeatureCodec::featurize(const EventSequence& seq) const {
    if (seq.r != variables_.size()) {
        throw DataError("featurize: sequence '" + seq.id + "' has " + std::to_string(seq.r) +
                        " variables, codec expects " + std::to_string(variables_.size()));
    }
    FeatureMatrix out(seq.length(), width());
    for (std::size_t i = 0; i < seq.length(); ++i) {
        const Event& e = seq.events[i];
        if (e.x.size() != seq.r || e.mask.size() != seq.r) {
            throw DataError("featurize: event dimensionality mismatch in sequence '" + seq.id + "'");
        }
        auto row = out.row(i);
        std::size_t col = 0;
        for (std::size_t j = 0; j < variables_.size(); ++j) {
            const Variable& v = variables_[j];
            if (v.kind == VariableKind::Real) {
                row[col++] = e.mask[j] ? transform_real(e.x[j], v.stats) : 0.0;
            } else {
                const std::size_t k = v.ordinal.levels.size();
                if (e.mask[j]) {
                    const auto bits = unary_encode(ordinal_level(e.x[j], v.ordinal), k);
                    std::copy(bits.begin(), bits.end(), row.begin() + static_cast<std::ptrdiff_t>(col));
                }
                col += k - 1;
            }
        }
        for (double b : encode_count(e.c)) row[col++] = b;
        const double gap = i == 0 ? 0.0 : e.t - seq.events[i - 1].t;
        for (double b : encode_time_gap(std::max(gap, 0.0))) row[col++] = b;
    }
    return out;
}

void FeatureCodec::write(std::ostream& os) const {
    os << "tci-codec 1\n";
    os << "variables " << variables_.size() << '\n';
    for (const Variable& v : variables_) {
        if (v.kind == VariableKind::Real) {
            os << "real " << v.name << ' ' << format_double(v.stats.p2) << ' ' << format_double(v.stats.p98) << ' '
               << format_double(v.stats.mean) << ' ' << format_double(v.stats.stddev) << '\n';
        } else {
            os << "ordinal " << v.name << ' ' << v.ordinal.levels.size();
            for (double a : v.ordinal.levels) os << ' ' << format_double(a);
            os << '\n';
        }
    }
    os << "count_bins";
    for (double e : kCountBinEdges) os << ' ' << format_double(e);
    os << "\ntime_bins";
    for (double e : kTimeGapBinEdges) os << ' ' << format_double(e);
    os << "\nwidth " << width() << '\n';
}

namespace {

std::istringstream next_line(std::istream& is, std::size_t& line_no, const char* expect) {
    std::string line;
    if (!std::getline(is, line)) {
        throw DataError(std::string("codec: unexpected end of input, expected '") + expect + "'");
    }
    ++line_no;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key != expect) {
        throw DataError("codec line " + std::to_string(line_no) + ": expected '" + expect + "', got '" + key + "'");
    }
    return ls;
}

template <typename T>
T read_value(std::istringstream& ls, std::size_t line_no) {
    std::string tok;
    if (!(ls >> tok)) throw DataError("codec line " + std::to_string(line_no) + ": missing value");
    if constexpr (std::is_same_v<T, double>) {
        return parse_double(tok, "codec line " + std::to_string(line_no));
    } else {
        try {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            return static_cast<T>(v);
        } catch (const std::exception&) {
            throw DataError("codec line " + std::to_string(line_no) + ": bad integer '" + tok + "'");
        }
    }
}

}  // namespace

FeatureCodec FeatureCodec::read(std::istream& is) {
    std::size_t line_no = 0;
    {
        auto ls = next_line(is, line_no, "tci-codec");
        if (read_value<std::size_t>(ls, line_no) != 1) throw DataError("codec: unsupported version");
    }
    std::size_t n = 0;
    {
        auto ls = next_line(is, line_no, "variables");
        n = read_value<std::size_t>(ls, line_no);
    }
    FeatureCodec codec;
    for (std::size_t j = 0; j < n; ++j) {
        std::string line;
        if (!std::getline(is, line)) throw DataError("codec: missing variable lines");
        ++line_no;
        std::istringstream ls(line);
        std::string kind;
        Variable v;
        ls >> kind >> v.name;
        if (kind == "real") {
            v.kind = VariableKind::Real;
            v.stats.p2 = read_value<double>(ls, line_no);
            v.stats.p98 = read_value<double>(ls, line_no);
            v.stats.mean = read_value<double>(ls, line_no);
            v.stats.stddev = read_value<double>(ls, line_no);
            if (!(v.stats.p2 <= v.stats.p98) || !(v.stats.stddev > 0.0)) {
                throw DataError("codec line " + std::to_string(line_no) + ": invalid robust statistics");
            }
        } else if (kind == "ordinal") {
            v.kind = VariableKind::Ordinal;
            const auto k = read_value<std::size_t>(ls, line_no);
            if (k == 0) throw DataError("codec line " + std::to_string(line_no) + ": ordinal needs levels");
            for (std::size_t l = 0; l < k; ++l) v.ordinal.levels.push_back(read_value<double>(ls, line_no));
            if (!std::is_sorted(v.ordinal.levels.begin(), v.ordinal.levels.end(), std::less_equal<>())) {
                throw DataError("codec line " + std::to_string(line_no) + ": ordinal levels not increasing");
            }
        } else {
            throw DataError("codec line " + std::to_string(line_no) + ": unknown variable kind '" + kind + "'");
        }
        codec.variables_.push_back(std::move(v));
    }
    {
        auto ls = next_line(is, line_no, "count_bins");
        for (double e : kCountBinEdges) {
            if (read_value<double>(ls, line_no) != e) throw DataError("codec: unsupported count bins");
        }
    }
    {
        auto ls = next_line(is, line_no, "time_bins");
        for (double e : kTimeGapBinEdges) {
            if (read_value<double>(ls, line_no) != e) throw DataError("codec: unsupported time bins");
        }
    }
    {
        auto ls = next_line(is, line_no, "width");
        if (read_value<std::size_t>(ls, line_no) != codec.width()) throw DataError("codec: width mismatch");
    }
    return codec;
}

}  // namespace tci
