#pragma once

// Event-sequence data model shared by every other module.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace tci {

/// Raised for malformed or inapplicable input data (CLI exit code 2).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a computation produces or would need a non-finite or undefined
/// value: training divergence, an undefined metric (CLI exit code 3).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One timestamped observation. `t` is in hours since sequence start.
struct Event {
    double t = 0.0;
    std::vector<double> x;
    std::vector<bool> mask;  // true = observed
    std::int64_t c = 1;      // count; 0 only for empty grid cells

    std::size_t dim() const { return x.size(); }
    bool operator==(const Event&) const = default;
};

struct EventSequence {
    std::string id;
    std::size_t r = 0;
    std::vector<Event> events;

    std::size_t length() const { return events.size(); }
    bool operator==(const EventSequence&) const = default;
};

/// Multi-label binary targets.
using ClassLabel = std::vector<int>;
/// Either a classification label vector or a real regression target.
using Label = std::variant<ClassLabel, double>;

struct LabeledSequence {
    EventSequence sequence;
    Label label;
};

enum class ViolationKind {
    Empty,
    DimensionMismatch,
    UnsortedTimestamps,
    NonFiniteTime,
    NonFiniteValue,
    UnobservedNonzero,
    NonpositiveCount,
};

struct Violation {
    ViolationKind kind;
    std::size_t event = 0;
    std::string message;
};

/// Every invariant violation in `seq`; empty means valid. `allow_empty_cells`
/// accepts c = 0 (grid&count output), otherwise counts must be >= 1.
std::vector<Violation> validate(const EventSequence& seq, bool allow_empty_cells = false);

/// Throws DataError naming the first violation.
void require_valid(const EventSequence& seq, bool allow_empty_cells = false);

/// Masked mean merge. Time is the member mean, each variable is averaged
/// over the members that observed it (0 and unobserved if none did), and
/// counts add up. Throws std::invalid_argument on an empty member list or
/// mixed dimensionality.
Event merge_events(std::span<const Event> members);

/// Events for a fresh observation: x zeroed where unobserved, count 1.
Event make_event(double t, std::vector<double> x, std::vector<bool> mask, std::int64_t c = 1);

/// Sum of counts.
std::int64_t total_count(const EventSequence& seq);

/// Number of output events for retention factor p on T input events,
/// i.e. ceil(p*T). A 1e-9 slack absorbs representation error in products
/// such as 0.35 * 20 that land just above an integer.
std::size_t retained_length(double p, std::size_t T);

/// Splitmix64 finalizer, used to derive independent RNG substreams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace tci
