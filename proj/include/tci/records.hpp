#pragma once

// Line-delimited sequence records, one JSON object per line:
//
//   {"id":"s1","label":[1],"events":[{"t":0.5,"x":[1.25,null],"c":1}, ...]}
//
// `label` is optional: a 0/1 array for classification, a number for
// regression. `null` in `x` marks an unobserved variable. Numbers are
// written with 17 significant digits, so parse(format(r)) == r.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tci/codec.hpp"
#include "tci/core.hpp"

namespace tci {

struct SequenceRecord {
    EventSequence sequence;
    std::optional<Label> label;
    bool operator==(const SequenceRecord&) const = default;
};

/// Throws DataError("line N: ...") for malformed JSON, schema errors, or an
/// invalid sequence (counts may be 0 to admit grid&count output).
SequenceRecord parse_record(std::string_view line, std::size_t line_no);
std::string format_record(const SequenceRecord& record);

/// Blank lines are skipped; line numbers in errors are 1-based.
std::vector<SequenceRecord> read_records(std::istream& is);
void write_records(std::ostream& os, std::span<const SequenceRecord> records);

/// Records that carry a label; DataError names the first one without.
std::vector<LabeledSequence> labeled(std::span<const SequenceRecord> records);

/// Featurized matrix as one JSON line: {"id":...,"rows":T,"cols":d,"data":[[...],...]}.
std::string format_feature_record(const std::string& id, const FeatureMatrix& m);

/// Schema JSON: {"variables":[{"name":"hr","kind":"real"},{"kind":"ordinal","levels":[1,2,3]}]}.
Schema parse_schema(std::string_view json);
std::string format_schema(const Schema& schema);

}  // namespace tci
