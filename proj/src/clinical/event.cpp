#include "cardiocep/clinical.hpp"
#include "cardiocep/number_format.hpp"

#include <json.hpp>

#include <array>
#include <charconv>
#include <cmath>

namespace cardiocep {

namespace {

constexpr std::string_view kCanonicalHeader =
    "event_id,timestamp,age,gender,height,weight,sbp,dbp,cholesterol,glucose,smoking,alcohol,active,label";

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) {
            return out;
        }
        start = pos + 1;
    }
}

double real_field(std::string_view text, std::size_t column, const char* name)
{
    auto v = parse_real(text);
    if (!v) {
        throw FormatError(column, std::string(name) + ": not a number: '" + std::string(text) + "'");
    }
    return *v;
}

long long int_field(std::string_view text, std::size_t column, const char* name)
{
    auto v = parse_integer(text);
    if (!v) {
        throw FormatError(column, std::string(name) + ": not an integer: '" + std::string(text) + "'");
    }
    return *v;
}

std::uint64_t id_field(std::string_view text, std::size_t column)
{
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw FormatError(column, "id: not a non-negative integer: '" + std::string(text) + "'");
    }
    return value;
}

int flag_field(std::string_view text, std::size_t column, const char* name)
{
    const long long v = int_field(text, column, name);
    if (v != 0 && v != 1) {
        throw FormatError(column, std::string(name) + ": expected 0 or 1, got " + std::to_string(v));
    }
    return static_cast<int>(v);
}

int code_field(std::string_view text, std::size_t column, const char* name)
{
    const long long v = int_field(text, column, name);
    if (v < 1 || v > 3) {
        throw FormatError(column, std::string(name) + ": code outside {1,2,3}: " + std::to_string(v));
    }
    return static_cast<int>(v);
}

// Representative values for the dataset's categorical codes 1/2/3.
constexpr std::array kCholesterolCodes{4.5, 5.65, 6.5};
constexpr std::array kGlucoseCodes{0.9, 1.12, 1.4};

PatientEvent parse_kaggle(std::string_view line)
{
    const auto f = split(line, ';');
    if (f.size() != 13) {
        throw FormatError(0, "expected 13 ';'-separated columns, got " + std::to_string(f.size()));
    }
    PatientEvent e;
    e.event_id = id_field(f[0], 1);
    const double days = real_field(f[1], 2, "age");
    if (days < 0) {
        throw FormatError(2, "age: negative");
    }
    e.age = days / 365.25;
    const long long gender = int_field(f[2], 3, "gender");
    if (gender != 1 && gender != 2) {
        throw FormatError(3, "gender: expected 1 or 2, got " + std::to_string(gender));
    }
    e.gender = static_cast<int>(gender);
    e.height = real_field(f[3], 4, "height");
    e.weight = real_field(f[4], 5, "weight");
    e.sbp = real_field(f[5], 6, "ap_hi");
    if (e.sbp <= 0) {
        throw FormatError(6, "ap_hi: must be positive");
    }
    e.dbp = real_field(f[6], 7, "ap_lo");
    if (e.dbp <= 0) {
        throw FormatError(7, "ap_lo: must be positive");
    }
    e.cholesterol = kCholesterolCodes[static_cast<std::size_t>(code_field(f[7], 8, "cholesterol") - 1)];
    e.glucose = kGlucoseCodes[static_cast<std::size_t>(code_field(f[8], 9, "gluc") - 1)];
    e.smoking = flag_field(f[9], 10, "smoke");
    e.alcohol = flag_field(f[10], 11, "alco");
    e.active = flag_field(f[11], 12, "active");
    e.label = flag_field(f[12], 13, "cardio");
    return e;
}

PatientEvent parse_canonical(std::string_view line)
{
    const auto f = split(line, ',');
    if (f.size() != 14) {
        throw FormatError(0, "expected 14 ','-separated columns, got " + std::to_string(f.size()));
    }
    PatientEvent e;
    e.event_id = id_field(f[0], 1);
    e.timestamp_ms = int_field(f[1], 2, "timestamp");
    e.age = real_field(f[2], 3, "age");
    e.gender = static_cast<int>(int_field(f[3], 4, "gender"));
    e.height = real_field(f[4], 5, "height");
    e.weight = real_field(f[5], 6, "weight");
    e.sbp = real_field(f[6], 7, "sbp");
    e.dbp = real_field(f[7], 8, "dbp");
    e.cholesterol = real_field(f[8], 9, "cholesterol");
    e.glucose = real_field(f[9], 10, "glucose");
    e.smoking = static_cast<int>(int_field(f[10], 11, "smoking"));
    e.alcohol = static_cast<int>(int_field(f[11], 12, "alcohol"));
    e.active = static_cast<int>(int_field(f[12], 13, "active"));
    if (!f[13].empty()) {
        e.label = flag_field(f[13], 14, "label");
    }
    check_event(e);
    return e;
}

} // namespace

std::optional<double> event_field(const PatientEvent& e, std::string_view name) noexcept
{
    if (name == "age") return e.age;
    if (name == "sbp") return e.sbp;
    if (name == "dbp") return e.dbp;
    if (name == "gender") return e.gender;
    if (name == "glucose") return e.glucose;
    if (name == "cholesterol") return e.cholesterol;
    if (name == "smoking") return e.smoking;
    if (name == "height") return e.height;
    if (name == "weight") return e.weight;
    if (name == "alcohol") return e.alcohol;
    if (name == "active") return e.active;
    return std::nullopt;
}

void check_event(const PatientEvent& e)
{
    if (!(e.age >= 0)) throw FormatError(3, "age: must be >= 0");
    if (e.gender != 1 && e.gender != 2) throw FormatError(4, "gender: expected 1 or 2");
    if (!std::isfinite(e.height)) throw FormatError(5, "height: not finite");
    if (!std::isfinite(e.weight)) throw FormatError(6, "weight: not finite");
    if (!(e.sbp > 0)) throw FormatError(7, "sbp: must be positive");
    if (!(e.dbp > 0)) throw FormatError(8, "dbp: must be positive");
    if (!std::isfinite(e.cholesterol)) throw FormatError(9, "cholesterol: not finite");
    if (!std::isfinite(e.glucose)) throw FormatError(10, "glucose: not finite");
    if (e.smoking != 0 && e.smoking != 1) throw FormatError(11, "smoking: expected 0 or 1");
    if (e.alcohol != 0 && e.alcohol != 1) throw FormatError(12, "alcohol: expected 0 or 1");
    if (e.active != 0 && e.active != 1) throw FormatError(13, "active: expected 0 or 1");
    if (e.label && *e.label != 0 && *e.label != 1) throw FormatError(14, "label: expected 0 or 1");
}

PatientEvent parse_dataset_row(std::string_view line, DatasetFormat format)
{
    return format == DatasetFormat::KaggleCardio ? parse_kaggle(line) : parse_canonical(line);
}

bool is_header_row(std::string_view line, DatasetFormat format)
{
    if (format == DatasetFormat::CanonicalCsv) {
        return trim(line) == kCanonicalHeader;
    }
    const auto first = trim(line.substr(0, line.find(';')));
    return !parse_real(first).has_value();
}

std::string_view canonical_csv_header() noexcept
{
    return kCanonicalHeader;
}

std::string to_canonical_csv(const PatientEvent& e)
{
    std::string out;
    out.reserve(96);
    out += std::to_string(e.event_id);
    out += ',';
    out += std::to_string(e.timestamp_ms);
    out += ',' + format_number(e.age);
    out += ',' + std::to_string(e.gender);
    for (double v : {e.height, e.weight, e.sbp, e.dbp, e.cholesterol, e.glucose}) {
        out += ',' + format_number(v);
    }
    for (int v : {e.smoking, e.alcohol, e.active}) {
        out += ',' + std::to_string(v);
    }
    out += ',';
    if (e.label) {
        out += std::to_string(*e.label);
    }
    return out;
}

std::string to_ndjson(const PatientEvent& e)
{
    std::string out = "{\"event_id\":" + std::to_string(e.event_id);
    out += ",\"ts_ms\":" + std::to_string(e.timestamp_ms);
    out += ",\"age\":" + format_number(e.age);
    out += ",\"gender\":" + std::to_string(e.gender);
    out += ",\"height\":" + format_number(e.height);
    out += ",\"weight\":" + format_number(e.weight);
    out += ",\"sbp\":" + format_number(e.sbp);
    out += ",\"dbp\":" + format_number(e.dbp);
    out += ",\"cholesterol\":" + format_number(e.cholesterol);
    out += ",\"glucose\":" + format_number(e.glucose);
    out += ",\"smoking\":" + std::to_string(e.smoking);
    out += ",\"alcohol\":" + std::to_string(e.alcohol);
    out += ",\"active\":" + std::to_string(e.active);
    if (e.label) {
        out += ",\"label\":" + std::to_string(*e.label);
    }
    out += '}';
    return out;
}

namespace {

const nlohmann::json& required(const nlohmann::json& obj, const char* key)
{
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw FormatError(0, std::string("missing key '") + key + "'");
    }
    return *it;
}

double json_number(const nlohmann::json& obj, const char* key)
{
    const auto& v = required(obj, key);
    if (!v.is_number()) {
        throw FormatError(0, std::string("key '") + key + "': not a number");
    }
    return v.get<double>();
}

long long json_integer(const nlohmann::json& v, const char* key)
{
    if (v.is_number_integer()) {
        return v.get<long long>();
    }
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9.0e15) {
            return static_cast<long long>(d);
        }
    }
    throw FormatError(0, std::string("key '") + key + "': not an integer");
}

} // namespace

PatientEvent parse_event_json(std::string_view line)
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
    PatientEvent e;
    const auto& id = required(obj, "event_id");
    if (!id.is_number_unsigned() && !(id.is_number_integer() && id.get<long long>() >= 0)) {
        throw FormatError(0, "key 'event_id': not a non-negative integer");
    }
    e.event_id = id.get<std::uint64_t>();
    if (auto it = obj.find("ts_ms"); it != obj.end() && !it->is_null()) {
        e.timestamp_ms = json_integer(*it, "ts_ms");
    }
    e.age = json_number(obj, "age");
    e.gender = static_cast<int>(json_integer(required(obj, "gender"), "gender"));
    e.height = json_number(obj, "height");
    e.weight = json_number(obj, "weight");
    e.sbp = json_number(obj, "sbp");
    e.dbp = json_number(obj, "dbp");
    e.cholesterol = json_number(obj, "cholesterol");
    e.glucose = json_number(obj, "glucose");
    e.smoking = static_cast<int>(json_integer(required(obj, "smoking"), "smoking"));
    e.alcohol = static_cast<int>(json_integer(required(obj, "alcohol"), "alcohol"));
    e.active = static_cast<int>(json_integer(required(obj, "active"), "active"));
    if (auto it = obj.find("label"); it != obj.end() && !it->is_null()) {
        e.label = static_cast<int>(json_integer(*it, "label"));
    }
    try {
        check_event(e);
    } catch (const FormatError& ex) {
        throw FormatError(0, ex.reason());
    }
    return e;
}

} // namespace cardiocep
