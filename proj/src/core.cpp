#include "tci/core.hpp"

#include <cmath>
#include <sstream>

namespace tci {

namespace {

Violation make_violation(ViolationKind kind, std::size_t event, const std::string& what) {
    std::ostringstream os;
    os << "event " << event << ": " << what;
    return {kind, event, os.str()};
}

}  // namespace

std::vector<Violation> validate(const EventSequence& seq, bool allow_empty_cells) {
    std::vector<Violation> out;
    if (seq.events.empty()) {
        out.push_back({ViolationKind::Empty, 0, "sequence has no events"});
        return out;
    }
    for (std::size_t i = 0; i < seq.events.size(); ++i) {
        const Event& e = seq.events[i];
        if (e.x.size() != seq.r || e.mask.size() != seq.r) {
            out.push_back(make_violation(ViolationKind::DimensionMismatch, i, "dimensionality differs from r"));
            continue;
        }
        if (!std::isfinite(e.t)) {
            out.push_back(make_violation(ViolationKind::NonFiniteTime, i, "timestamp not finite"));
        } else if (i > 0 && std::isfinite(seq.events[i - 1].t) && seq.events[i - 1].t > e.t) {
            out.push_back(make_violation(ViolationKind::UnsortedTimestamps, i, "timestamps unsorted"));
        }
        for (std::size_t j = 0; j < seq.r; ++j) {
            if (!std::isfinite(e.x[j])) {
                out.push_back(make_violation(ViolationKind::NonFiniteValue, i, "value not finite"));
            } else if (!e.mask[j] && e.x[j] != 0.0) {
                out.push_back(make_violation(ViolationKind::UnobservedNonzero, i, "unobserved slot nonzero"));
            }
        }
        const std::int64_t min_count = allow_empty_cells ? 0 : 1;
        if (e.c < min_count) {
            out.push_back(make_violation(ViolationKind::NonpositiveCount, i, "nonpositive count"));
        }
    }
    return out;
}

void require_valid(const EventSequence& seq, bool allow_empty_cells) {
    auto violations = validate(seq, allow_empty_cells);
    if (!violations.empty()) {
        throw DataError("sequence '" + seq.id + "': " + violations.front().message);
    }
}

Event merge_events(std::span<const Event> members) {
    if (members.empty()) {
        throw std::invalid_argument("merge_events: empty member list");
    }
    const std::size_t r = members.front().dim();
    Event out;
    out.x.assign(r, 0.0);
    out.mask.assign(r, false);
    out.c = 0;

    std::vector<std::size_t> observed(r, 0);
    double t_sum = 0.0;
    for (const Event& e : members) {
        if (e.x.size() != r || e.mask.size() != r) {
            throw std::invalid_argument("merge_events: members differ in dimensionality");
        }
        t_sum += e.t;
        out.c += e.c;
        for (std::size_t j = 0; j < r; ++j) {
            if (e.mask[j]) {
                out.x[j] += e.x[j];
                ++observed[j];
            }
        }
    }
    out.t = t_sum / static_cast<double>(members.size());
    for (std::size_t j = 0; j < r; ++j) {
        if (observed[j] > 0) {
            out.x[j] /= static_cast<double>(observed[j]);
            out.mask[j] = true;
        }
    }
    return out;
}

Event make_event(double t, std::vector<double> x, std::vector<bool> mask, std::int64_t c) {
    if (x.size() != mask.size()) {
        throw std::invalid_argument("make_event: value/mask size mismatch");
    }
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!mask[j]) x[j] = 0.0;
    }
    return Event{t, std::move(x), std::move(mask), c};
}

std::int64_t total_count(const EventSequence& seq) {
    std::int64_t total = 0;
    for (const Event& e : seq.events) total += e.c;
    return total;
}

std::size_t retained_length(double p, std::size_t T) {
    const double raw = std::ceil(p * static_cast<double>(T) - 1e-9);
    if (raw <= 0.0) return 0;
    const auto n = static_cast<std::size_t>(raw);
    return n > T ? T : n;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace tci
