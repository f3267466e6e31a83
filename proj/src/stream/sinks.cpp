#include "cardiocep/number_format.hpp"
#include "cardiocep/stream.hpp"

#include <json.hpp>

#include <ostream>

namespace cardiocep {

FileSink::FileSink(const std::string& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc)
{
    if (!out_) {
        throw IoError("cannot open '" + path + "' for writing");
    }
}

void FileSink::write(std::string_view line)
{
    out_.write(line.data(), static_cast<std::streamsize>(line.size()));
    out_.put('\n');
    if (!out_) {
        throw IoError("write to '" + path_ + "' failed");
    }
}

void FileSink::flush()
{
    out_.flush();
    if (!out_) {
        throw IoError("flush of '" + path_ + "' failed");
    }
}

void StreamSink::write(std::string_view line)
{
    out_ << line << '\n';
    if (!out_) {
        throw IoError("write to output stream failed");
    }
}

void StreamSink::flush()
{
    out_.flush();
    if (!out_) {
        throw IoError("flush of output stream failed");
    }
}

void MemorySink::write(std::string_view line)
{
    std::lock_guard lock(mutex_);
    lines_.emplace_back(line);
}

std::vector<std::string> MemorySink::lines() const
{
    std::lock_guard lock(mutex_);
    return lines_;
}

std::size_t MemorySink::flushes() const
{
    std::lock_guard lock(mutex_);
    return flushes_;
}

namespace {

struct FlagName {
    unsigned bit;
    const char* name;
};

constexpr FlagName kFlagNames[] = {
    {kFlagClamped, "clamped"},
    {kFlagUnruled, "unruled"},
    {kFlagIsolatedSystolic, "isolated-systolic"},
    {kFlagIsolatedDiastolic, "isolated-diastolic"},
};

template <typename T>
T get_field(const nlohmann::json& obj, const char* key)
{
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw FormatError(0, std::string("missing key '") + key + "'");
    }
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw FormatError(0, std::string("key '") + key + "' has the wrong type");
    }
}

nlohmann::json parse_object(std::string_view line)
{
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& ex) {
        throw FormatError(0, std::string("malformed JSON: ") + ex.what());
    }
    if (!obj.is_object()) {
        throw FormatError(0, "expected a JSON object");
    }
    return obj;
}

} // namespace

std::vector<std::string> flag_names(unsigned flags)
{
    std::vector<std::string> out;
    for (const auto& f : kFlagNames) {
        if (flags & f.bit) {
            out.emplace_back(f.name);
        }
    }
    return out;
}

std::string to_ndjson(const RiskAssessment& a)
{
    std::string out;
    out.reserve(160 + 40 * a.fired.size());
    out += "{\"event_id\":" + std::to_string(a.event_id);
    out += ",\"ts_ms\":" + std::to_string(a.ts_ms);
    out += ",\"window_id\":" + std::to_string(a.window_id);
    out += ",\"score\":" + format_fixed(a.score, 2);
    out += ",\"category\":\"";
    out += to_string(a.category);
    out += "\",\"fired\":[";
    for (std::size_t i = 0; i < a.fired.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += "{\"rule\":\"" + a.fired[i].rule + "\",\"strength\":" + format_number(a.fired[i].strength) + "}";
    }
    out += "],\"flags\":[";
    bool first = true;
    for (const auto& f : kFlagNames) {
        if (a.flags & f.bit) {
            out += first ? "\"" : ",\"";
            out += f.name;
            out += '"';
            first = false;
        }
    }
    out += "]}";
    return out;
}

RiskAssessment parse_assessment(std::string_view line)
{
    const auto obj = parse_object(line);
    RiskAssessment a;
    a.event_id = get_field<std::uint64_t>(obj, "event_id");
    a.ts_ms = get_field<std::int64_t>(obj, "ts_ms");
    a.window_id = get_field<std::int64_t>(obj, "window_id");
    a.score = get_field<double>(obj, "score");
    const auto category = parse_category(get_field<std::string>(obj, "category"));
    if (!category) {
        throw FormatError(0, "unknown category");
    }
    a.category = *category;
    const auto fired = obj.find("fired");
    if (fired == obj.end() || !fired->is_array()) {
        throw FormatError(0, "key 'fired' must be an array");
    }
    for (const auto& entry : *fired) {
        if (!entry.is_object()) {
            throw FormatError(0, "fired entries must be objects");
        }
        a.fired.push_back({get_field<std::string>(entry, "rule"), get_field<double>(entry, "strength")});
    }
    for (const auto& name : get_field<std::vector<std::string>>(obj, "flags")) {
        bool known = false;
        for (const auto& f : kFlagNames) {
            if (name == f.name) {
                a.flags |= f.bit;
                known = true;
            }
        }
        if (!known) {
            throw FormatError(0, "unknown flag '" + name + "'");
        }
    }
    return a;
}

std::string to_ndjson(const WindowStats& s)
{
    std::string out = "{\"window_id\":" + std::to_string(s.window_id);
    out += ",\"start_ms\":" + std::to_string(s.start_ms);
    out += ",\"end_ms\":" + std::to_string(s.end_ms);
    out += ",\"events_in\":" + std::to_string(s.events_in);
    out += ",\"events_scored\":" + std::to_string(s.events_scored);
    out += ",\"counts\":{";
    for (std::size_t i = 0; i < kRiskCategories.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += '"';
        out += to_string(kRiskCategories[i]);
        out += "\":" + std::to_string(s.counts[i]);
    }
    out += "},\"rule_count\":" + std::to_string(s.rule_count);
    out += ",\"model_version\":" + std::to_string(s.model_version);
    out += ",\"cumulative_events_in\":" + std::to_string(s.cumulative_events_in);
    out += ",\"cumulative_events_scored\":" + std::to_string(s.cumulative_events_scored);
    out += '}';
    return out;
}

WindowStats parse_window_stats(std::string_view line)
{
    const auto obj = parse_object(line);
    WindowStats s;
    s.window_id = get_field<std::int64_t>(obj, "window_id");
    s.start_ms = get_field<std::int64_t>(obj, "start_ms");
    s.end_ms = get_field<std::int64_t>(obj, "end_ms");
    s.events_in = get_field<std::uint64_t>(obj, "events_in");
    s.events_scored = get_field<std::uint64_t>(obj, "events_scored");
    const auto counts = obj.find("counts");
    if (counts == obj.end() || !counts->is_object()) {
        throw FormatError(0, "key 'counts' must be an object");
    }
    for (std::size_t i = 0; i < kRiskCategories.size(); ++i) {
        s.counts[i] = get_field<std::uint64_t>(*counts, std::string(to_string(kRiskCategories[i])).c_str());
    }
    s.rule_count = get_field<std::size_t>(obj, "rule_count");
    s.model_version = get_field<int>(obj, "model_version");
    s.cumulative_events_in = get_field<std::uint64_t>(obj, "cumulative_events_in");
    s.cumulative_events_scored = get_field<std::uint64_t>(obj, "cumulative_events_scored");
    return s;
}

} // namespace cardiocep
