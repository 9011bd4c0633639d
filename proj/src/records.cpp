#include "tci/records.hpp"

#include <istream>
#include <ostream>

#include <json.hpp>

#include "tci/format.hpp"

namespace tci {

using nlohmann::json;

namespace {

DataError line_error(std::size_t line_no, const std::string& what) {
    return DataError("line " + std::to_string(line_no) + ": " + what);
}

double number_field(const json& j, const char* key, std::size_t line_no) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_number()) throw line_error(line_no, std::string("missing numeric '") + key + "'");
    return it->get<double>();
}

}  // namespace

namespace {

SequenceRecord parse_record_unchecked(std::string_view line, std::size_t line_no) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw line_error(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw line_error(line_no, "record must be a JSON object");

    SequenceRecord rec;
    const auto id = j.find("id");
    if (id == j.end()) throw line_error(line_no, "missing 'id'");
    rec.sequence.id = id->is_string() ? id->get<std::string>() : id->dump();

    if (const auto lab = j.find("label"); lab != j.end() && !lab->is_null()) {
        if (lab->is_number()) {
            rec.label = lab->get<double>();
        } else if (lab->is_array()) {
            ClassLabel y;
            for (const auto& v : *lab) {
                if (!v.is_number_integer() || (v.get<long long>() != 0 && v.get<long long>() != 1)) {
                    throw line_error(line_no, "classification labels must be 0 or 1");
                }
                y.push_back(static_cast<int>(v.get<long long>()));
            }
            if (y.empty()) throw line_error(line_no, "empty label vector");
            rec.label = std::move(y);
        } else {
            throw line_error(line_no, "label must be a number or an array of 0/1");
        }
    }

    const auto events = j.find("events");
    if (events == j.end() || !events->is_array() || events->empty()) {
        throw line_error(line_no, "'events' must be a nonempty array");
    }
    bool first = true;
    for (const auto& ev : *events) {
        if (!ev.is_object()) throw line_error(line_no, "event must be an object");
        Event e;
        e.t = number_field(ev, "t", line_no);
        const auto x = ev.find("x");
        if (x == ev.end() || !x->is_array()) throw line_error(line_no, "event needs an 'x' array");
        for (const auto& v : *x) {
            if (v.is_null()) {
                e.x.push_back(0.0);
                e.mask.push_back(false);
            } else if (v.is_number()) {
                e.x.push_back(v.get<double>());
                e.mask.push_back(true);
            } else {
                throw line_error(line_no, "x entries must be numbers or null");
            }
        }
        if (const auto c = ev.find("c"); c != ev.end()) {
            if (!c->is_number_integer()) throw line_error(line_no, "count 'c' must be an integer");
            e.c = c->get<std::int64_t>();
        }
        if (first) {
            rec.sequence.r = e.x.size();
            first = false;
        }
        rec.sequence.events.push_back(std::move(e));
    }
    const auto violations = validate(rec.sequence, true);
    if (!violations.empty()) throw line_error(line_no, violations.front().message);
    return rec;
}

}  // namespace

SequenceRecord parse_record(std::string_view line, std::size_t line_no) {
    try {
        return parse_record_unchecked(line, line_no);
    } catch (const json::exception& e) {
        throw line_error(line_no, e.what());
    }
}

std::string format_record(const SequenceRecord& rec) {
    std::string out = "{\"id\":" + json(rec.sequence.id).dump();
    if (rec.label) {
        out += ",\"label\":";
        if (const auto* y = std::get_if<ClassLabel>(&*rec.label)) {
            out += '[';
            for (std::size_t i = 0; i < y->size(); ++i) {
                if (i) out += ',';
                out += std::to_string((*y)[i]);
            }
            out += ']';
        } else {
            out += format_double(std::get<double>(*rec.label));
        }
    }
    out += ",\"events\":[";
    for (std::size_t i = 0; i < rec.sequence.events.size(); ++i) {
        const Event& e = rec.sequence.events[i];
        if (i) out += ',';
        out += "{\"t\":" + format_double(e.t) + ",\"x\":[";
        for (std::size_t k = 0; k < e.x.size(); ++k) {
            if (k) out += ',';
            out += e.mask[k] ? format_double(e.x[k]) : "null";
        }
        out += "],\"c\":" + std::to_string(e.c) + '}';
    }
    out += "]}";
    return out;
}

std::vector<SequenceRecord> read_records(std::istream& is) {
    std::vector<SequenceRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(parse_record(line, line_no));
    }
    return out;
}

void write_records(std::ostream& os, std::span<const SequenceRecord> records) {
    for (const auto& r : records) os << format_record(r) << '\n';
}

std::vector<LabeledSequence> labeled(std::span<const SequenceRecord> records) {
    std::vector<LabeledSequence> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        if (!r.label) throw DataError("sequence '" + r.sequence.id + "' has no label");
        out.push_back({r.sequence, *r.label});
    }
    return out;
}

std::string format_feature_record(const std::string& id, const FeatureMatrix& m) {
    std::string out = "{\"id\":" + json(id).dump() + ",\"rows\":" + std::to_string(m.rows) +
                      ",\"cols\":" + std::to_string(m.cols) + ",\"data\":[";
    for (std::size_t i = 0; i < m.rows; ++i) {
        if (i) out += ',';
        out += '[';
        for (std::size_t c = 0; c < m.cols; ++c) {
            if (c) out += ',';
            out += format_double(m(i, c));
        }
        out += ']';
    }
    out += "]}";
    return out;
}

namespace {

Schema parse_schema_unchecked(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("schema: malformed JSON: ") + e.what());
    }
    const auto vars = j.find("variables");
    if (vars == j.end() || !vars->is_array()) throw DataError("schema: missing 'variables' array");
    Schema schema;
    for (const auto& v : *vars) {
        VariableSchema vs;
        const std::string kind = v.value("kind", std::string("real"));
        if (kind == "real") {
            vs.kind = VariableKind::Real;
        } else if (kind == "ordinal") {
            vs.kind = VariableKind::Ordinal;
            if (const auto lv = v.find("levels"); lv != v.end()) {
                for (const auto& a : *lv) {
                    if (!a.is_number()) throw DataError("schema: ordinal levels must be numbers");
                    vs.levels.push_back(a.get<double>());
                }
                for (std::size_t i = 1; i < vs.levels.size(); ++i) {
                    if (!(vs.levels[i - 1] < vs.levels[i])) throw DataError("schema: ordinal levels must increase");
                }
            }
        } else {
            throw DataError("schema: unknown variable kind '" + kind + "'");
        }
        vs.name = v.value("name", std::string());
        if (vs.name.find_first_of(" \t\n") != std::string::npos) throw DataError("schema: names may not contain spaces");
        schema.variables.push_back(std::move(vs));
    }
    return schema;
}

}  // namespace

Schema parse_schema(std::string_view text) {
    try {
        return parse_schema_unchecked(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("schema: ") + e.what());
    }
}

std::string format_schema(const Schema& schema) {
    json vars = json::array();
    for (const auto& v : schema.variables) {
        json o;
        o["name"] = v.name;
        o["kind"] = v.kind == VariableKind::Real ? "real" : "ordinal";
        if (v.kind == VariableKind::Ordinal && !v.levels.empty()) o["levels"] = v.levels;
        vars.push_back(std::move(o));
    }
    json j;
    j["variables"] = std::move(vars);
    return j.dump(2) + "\n";
}

}  // namespace tci
