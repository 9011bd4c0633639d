#pragma once

// Feature codec: robust standardization with Winsorization for real
// variables, thermometer (unary) codes for ordinal variables, count bins and
// time-gap bins, zero-fill for anything unobserved.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tci/core.hpp"

namespace tci {

enum class VariableKind { Real, Ordinal };

struct RobustStats {
    double p2 = 0.0;
    double p98 = 0.0;
    double mean = 0.0;
    double stddev = 1.0;
    bool operator==(const RobustStats&) const = default;
};

struct OrdinalSpec {
    std::vector<double> levels;  // strictly increasing
    bool operator==(const OrdinalSpec&) const = default;
};

/// Declared kind of each variable. Ordinal variables may list their levels;
/// an empty level list is filled from the distinct training values.
struct VariableSchema {
    VariableKind kind = VariableKind::Real;
    std::string name;
    std::vector<double> levels;
    bool operator==(const VariableSchema&) const = default;
};

struct Schema {
    std::vector<VariableSchema> variables;
    bool operator==(const Schema&) const = default;
};

/// Upper bin edges for counts: (0,1], (1,2], (2,4], (4,inf). Zero counts
/// fall into the first bin.
inline constexpr std::array<double, 3> kCountBinEdges{1.0, 2.0, 4.0};
/// Upper bin edges in hours for the gap to the previous event:
/// [0,0.5], (0.5,2], (2,8], (8,24], (24,72], (72,inf).
inline constexpr std::array<double, 5> kTimeGapBinEdges{0.5, 2.0, 8.0, 24.0, 72.0};

/// Percentile by linear interpolation between order statistics of sorted
/// values (position q*(n-1)).
double percentile_sorted(std::span<const double> sorted, double q);

/// Throws DataError when `values` is empty.
RobustStats fit_robust_stats(std::span<const double> values);

/// Clamp into [p2, p98], then standardize.
double transform_real(double value, const RobustStats& stats);

/// k-1 bits, the first level-1 set. `level` is 1-based.
std::vector<double> unary_encode(std::size_t level, std::size_t k);

/// 1-based bin index of `value` against ascending upper edges; values at or
/// below the first edge land in bin 1.
std::size_t bin_index(double value, std::span<const double> upper_edges);

std::vector<double> encode_count(std::int64_t c);
std::vector<double> encode_time_gap(double gap_hours);

/// 1-based level nearest to `value` (ties to the lower level).
std::size_t ordinal_level(double value, const OrdinalSpec& spec);

/// Row-major T x d matrix.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    FeatureMatrix() = default;
    FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    bool operator==(const FeatureMatrix&) const = default;
};

class FeatureCodec {
public:
    struct Variable {
        VariableKind kind = VariableKind::Real;
        std::string name;
        RobustStats stats;    // real only
        OrdinalSpec ordinal;  // ordinal only
        bool operator==(const Variable&) const = default;
    };

    /// Fits on training sequences only; there is no way to refit an
    /// existing codec. Throws DataError for a real variable with no
    /// observations, an ordinal with no levels, or a dimensionality mismatch.
    static FeatureCodec fit(const Schema& schema, std::span<const EventSequence> train);

    std::size_t input_dim() const { return variables_.size(); }
    std::size_t width() const;
    const std::vector<Variable>& variables() const { return variables_; }

    /// One row per event. Throws DataError on dimensionality mismatch.
    FeatureMatrix featurize(const EventSequence& seq) const;

    /// Flat text form; doubles written with 17 significant digits.
    void write(std::ostream& os) const;
    static FeatureCodec read(std::istream& is);

    bool operator==(const FeatureCodec&) const = default;

private:
    std::vector<Variable> variables_;
};

}  // namespace tci
