#include "cardiocep/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>

namespace cardiocep {

namespace {

enum FieldId : std::uint32_t {
    kAge = 1, kGender, kHeight, kWeight, kSbp, kDbp, kCholesterol, kGlucose, kSmoking, kAlcohol, kActive,
};

class Stream {
public:
    Stream(std::uint64_t seed, std::uint32_t field)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32), field};
        engine_.seed(seq);
    }

    // 53 random bits in [0, 1)
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(FieldRange r, double scale)
    {
        const double v = std::round((r.lo + unit() * (r.hi - r.lo)) * scale) / scale;
        return std::clamp(v, r.lo, r.hi);
    }

    int bernoulli(double p) { return unit() < p ? 1 : 0; }

private:
    std::mt19937_64 engine_;
};

void check_range(const char* name, FieldRange r, const LinguisticVariable* var)
{
    if (!(std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi)) {
        throw Error(std::string("generator: range for ") + name + " is invalid");
    }
    if (var != nullptr && (r.lo < var->universe.lo || r.hi > var->universe.hi)) {
        throw Error(std::string("generator: range for ") + name + " leaves the clinical universe");
    }
}

} // namespace

void check_spec(const GeneratorSpec& spec)
{
    if (spec.n == 0) {
        throw Error("generator: n must be positive");
    }
    const FuzzyModel& model = builtin_model();
    check_range("age", spec.age, model.find_input("age"));
    check_range("sbp", spec.sbp, model.find_input("sbp"));
    check_range("dbp", spec.dbp, model.find_input("dbp"));
    check_range("cholesterol", spec.cholesterol, model.find_input("cholesterol"));
    check_range("glucose", spec.glucose, model.find_input("glucose"));
    check_range("height", spec.height, nullptr);
    check_range("weight", spec.weight, nullptr);
    if (spec.height.lo <= 0 || spec.weight.lo <= 0) {
        throw Error("generator: height and weight must be positive");
    }
    for (double p : {spec.p_male, spec.p_smoking, spec.p_alcohol, spec.p_active}) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw Error("generator: probabilities must lie in [0, 1]");
        }
    }
}

std::vector<PatientEvent> generate(const GeneratorSpec& spec)
{
    check_spec(spec);
    Stream age(spec.seed, kAge);
    Stream gender(spec.seed, kGender);
    Stream height(spec.seed, kHeight);
    Stream weight(spec.seed, kWeight);
    Stream sbp(spec.seed, kSbp);
    Stream dbp(spec.seed, kDbp);
    Stream chol(spec.seed, kCholesterol);
    Stream gluc(spec.seed, kGlucose);
    Stream smoking(spec.seed, kSmoking);
    Stream alcohol(spec.seed, kAlcohol);
    Stream active(spec.seed, kActive);

    std::vector<PatientEvent> out;
    out.reserve(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        PatientEvent e;
        e.event_id = i + 1;
        e.timestamp_ms = static_cast<std::int64_t>(i) * spec.interval_ms;
        e.age = age.uniform(spec.age, 10);
        e.gender = gender.bernoulli(spec.p_male) ? 2 : 1;
        e.height = height.uniform(spec.height, 10);
        e.weight = weight.uniform(spec.weight, 10);
        e.sbp = sbp.uniform(spec.sbp, 10);
        e.dbp = dbp.uniform(spec.dbp, 10);
        e.cholesterol = chol.uniform(spec.cholesterol, 100);
        e.glucose = gluc.uniform(spec.glucose, 100);
        e.smoking = smoking.bernoulli(spec.p_smoking);
        e.alcohol = alcohol.bernoulli(spec.p_alcohol);
        e.active = active.bernoulli(spec.p_active);
        out.push_back(e);
    }
    return out;
}

void write_cohort(const std::vector<PatientEvent>& events, std::ostream& out, CohortFormat format)
{
    if (format == CohortFormat::CanonicalCsv) {
        out << canonical_csv_header() << '\n';
        for (const auto& e : events) {
            out << to_canonical_csv(e) << '\n';
        }
    } else {
        for (const auto& e : events) {
            out << to_ndjson(e) << '\n';
        }
    }
}

void write_cohort(const std::vector<PatientEvent>& events, const std::string& path, CohortFormat format)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    write_cohort(events, out, format);
    out.flush();
    if (!out) {
        throw IoError("write to '" + path + "' failed");
    }
}

std::vector<PatientEvent> read_cohort(const std::string& path, CohortFormat format)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::vector<PatientEvent> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        try {
            if (format == CohortFormat::CanonicalCsv) {
                if (line_no == 1) {
                    if (!is_header_row(line, DatasetFormat::CanonicalCsv)) {
                        throw FormatError(0, "missing canonical-csv header");
                    }
                    continue;
                }
                out.push_back(parse_dataset_row(line, DatasetFormat::CanonicalCsv));
            } else {
                out.push_back(parse_event_json(line));
            }
        } catch (const FormatError& ex) {
            throw FormatError(ex.column(), "line " + std::to_string(line_no) + ": " + ex.reason());
        }
    }
    if (in.bad()) {
        throw IoError("read error on '" + path + "'");
    }
    return out;
}

} // namespace cardiocep
