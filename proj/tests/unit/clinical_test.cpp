#include "cardiocep/clinical.hpp"
#include "cardiocep/engine.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace cardiocep;

TEST(Bands, PublishedPartition)
{
    const auto& table = band_table();
    const auto* sbp = find_bands(table, "sbp");
    ASSERT_NE(sbp, nullptr);
    EXPECT_EQ(sbp->unit, Unit::MmHg);
    ASSERT_NE(sbp->find("Normally High"), nullptr);
    EXPECT_EQ(sbp->find("Normally High")->text, "130-139");
    EXPECT_EQ(sbp->find("Optimal")->hi, 120.0);
    EXPECT_FALSE(sbp->find("Optimal")->lo);
    const auto* dbp = find_bands(table, "dbp");
    ASSERT_NE(dbp, nullptr);
    EXPECT_EQ(dbp->bands.size(), 6u);
    EXPECT_EQ(dbp->find("Grade 3 (Severe)")->lo, 110.0);
    ASSERT_EQ(dbp->annotations.size(), 1u);
    EXPECT_EQ(find_bands(table, "glucose")->find("Diabetic")->lo, 1.26);
    EXPECT_EQ(find_bands(table, "gender")->bands.size(), 2u);
    EXPECT_EQ(find_bands(table, "weight"), nullptr);
}

TEST(Bands, IsolatedHypertension)
{
    EXPECT_TRUE(isolated_hypertension(150, 80).isolated_systolic);
    EXPECT_FALSE(isolated_hypertension(150, 80).isolated_diastolic);
    EXPECT_TRUE(isolated_hypertension(130, 95).isolated_diastolic);
    EXPECT_FALSE(isolated_hypertension(150, 95).isolated_systolic);
    EXPECT_FALSE(isolated_hypertension(150, 95).isolated_diastolic);
    EXPECT_FALSE(isolated_hypertension(120, 70).isolated_systolic);
    EXPECT_TRUE(isolated_hypertension(140, 89.9).isolated_systolic);
}

TEST(Models, BuiltinShape)
{
    const FuzzyModel& m = builtin_model();
    EXPECT_EQ(m.name, "cardio_risk");
    std::vector<std::string> names;
    for (const auto& v : m.inputs) {
        names.push_back(v.name);
    }
    EXPECT_EQ(names, (std::vector<std::string>{"age", "sbp", "dbp", "gender", "glucose", "cholesterol", "smoking"}));
    EXPECT_EQ(m.rules.size(), 10u);
    EXPECT_EQ(m.output, risk_output());
    EXPECT_EQ(m.settings.default_value, 50.0);
    EXPECT_EQ(m.find_input("gender")->kind, VariableKind::CrispCoded);
    EXPECT_EQ(m.output.terms[0].shape, TriangularTerm::left_shoulder(0, 0, 20));
    EXPECT_EQ(m.output.terms[4].shape, TriangularTerm::right_shoulder(75, 100, 100));
}

TEST(Models, TermsFollowTheBandTable)
{
    // Triangle apexes sit at band midpoints and the feet at neighbouring
    // midpoints, so membership peaks inside the published band.
    const auto& sbp = *builtin_model().find_input("sbp");
    const auto& bands = find_bands(band_table(), "sbp")->bands;
    for (std::size_t i = 1; i + 1 < sbp.terms.size(); ++i) {
        const Band& band = bands[i];
        ASSERT_TRUE(band.lo && band.hi);
        EXPECT_DOUBLE_EQ(sbp.terms[i].shape.b, (*band.lo + *band.hi) / 2) << sbp.terms[i].name;
        EXPECT_EQ(membership(sbp.terms[i].shape, sbp.terms[i].shape.b), 1.0);
    }
}

TEST(Models, ExtendedCoversEveryCombination)
{
    const FuzzyModel& m = extended_model();
    EXPECT_EQ(m.name, "cardio_risk_extended");
    ASSERT_EQ(m.rules.size(), 1440u);
    for (std::size_t i = 0; i < 10; ++i) {
        EXPECT_EQ(m.rules[i], builtin_model().rules[i]);
    }
    std::set<std::vector<std::string>> seen;
    for (std::size_t i = 0; i < m.rules.size(); ++i) {
        const Rule& r = m.rules[i];
        EXPECT_EQ(r.id, "RULE_" + std::to_string(i + 1));
        std::vector<std::string> key;
        for (const auto& c : r.antecedent) {
            key.push_back(c.term);
        }
        EXPECT_TRUE(seen.insert(key).second) << r.id;
        if (i >= 10) {
            EXPECT_EQ(r.consequent.term, risk_term(severity_category(severity_points(r.antecedent)))) << r.id;
        }
    }
    EXPECT_EQ(seen.size(), 4u * 5 * 6 * 2 * 3 * 2);
}

TEST(Models, Severity)
{
    EXPECT_EQ(severity_category(0), RiskCategory::VeryLow);
    EXPECT_EQ(severity_category(1), RiskCategory::VeryLow);
    EXPECT_EQ(severity_category(3), RiskCategory::Low);
    EXPECT_EQ(severity_category(4), RiskCategory::Medium);
    EXPECT_EQ(severity_category(6), RiskCategory::Medium);
    EXPECT_EQ(severity_category(8), RiskCategory::High);
    EXPECT_EQ(severity_category(9), RiskCategory::VeryHigh);
    const std::vector<Clause> worst{{"age", "very_old"}, {"sbp", "grade2_sbp"}, {"dbp", "grade3_dbp"},
                                    {"gender", "male"},  {"glucose", "diabetic"}, {"smoking", "smoker"}};
    EXPECT_EQ(severity_points(worst), 3 + 4 + 1 + 2 + 2);
    const std::vector<Clause> best{{"age", "young"}, {"sbp", "optimal_sbp"}, {"dbp", "optimal_dbp"},
                                   {"gender", "female"}, {"glucose", "non_diabetic"}, {"smoking", "non_smoker"}};
    EXPECT_EQ(severity_points(best), 0);
    EXPECT_EQ(risk_term(RiskCategory::Medium), "medium_risk");
}

TEST(Events, KaggleRow)
{
    const PatientEvent e = parse_dataset_row("988;22113;1;157;93.0;130;80;3;1;0;0;1;1", DatasetFormat::KaggleCardio);
    EXPECT_EQ(e.event_id, 988u);
    EXPECT_DOUBLE_EQ(e.age, 22113 / 365.25);
    EXPECT_EQ(e.gender, 1);
    EXPECT_EQ(e.sbp, 130);
    EXPECT_EQ(e.dbp, 80);
    EXPECT_EQ(e.cholesterol, 6.5);
    EXPECT_EQ(e.glucose, 0.9);
    EXPECT_EQ(e.label, 1);
    EXPECT_TRUE(is_header_row("id;age;gender;height;weight;ap_hi;ap_lo;cholesterol;gluc;smoke;alco;active;cardio", DatasetFormat::KaggleCardio));
    EXPECT_FALSE(is_header_row("988;22113;1;157;93.0;130;80;3;1;0;0;1;1", DatasetFormat::KaggleCardio));
}

TEST(Events, KaggleErrorsNameTheColumn)
{
    const auto column_of = [](std::string_view line) -> std::size_t {
        try {
            parse_dataset_row(line, DatasetFormat::KaggleCardio);
        } catch (const FormatError& ex) {
            return ex.column();
        }
        return 99;
    };
    EXPECT_EQ(column_of("988;22113;3;157;93.0;130;80;3;1;0;0;1;1"), 3u);
    EXPECT_EQ(column_of("988;22113;1;157;93.0;abc;80;3;1;0;0;1;1"), 6u);
    EXPECT_EQ(column_of("988;22113;1;157;93.0;130;80;4;1;0;0;1;1"), 8u);
    EXPECT_EQ(column_of("988;22113;1;157;93.0;130;80;3;1;2;0;1;1"), 10u);
    EXPECT_EQ(column_of("988;22113;1;157;93.0;130;80;3;1;0;0;1"), 0u);
}

TEST(Events, CanonicalAndJsonRoundTrip)
{
    PatientEvent e;
    e.event_id = 7;
    e.timestamp_ms = 1234;
    e.age = 52.3;
    e.gender = 2;
    e.height = 171.5;
    e.weight = 80.2;
    e.sbp = 141.1;
    e.dbp = 88.8;
    e.cholesterol = 5.21;
    e.glucose = 1.07;
    e.smoking = 1;
    e.alcohol = 0;
    e.active = 1;
    EXPECT_EQ(parse_dataset_row(to_canonical_csv(e), DatasetFormat::CanonicalCsv), e);
    EXPECT_EQ(parse_event_json(to_ndjson(e)), e);
    EXPECT_EQ(to_ndjson(e).find("label"), std::string::npos);
    e.label = 0;
    EXPECT_EQ(parse_dataset_row(to_canonical_csv(e), DatasetFormat::CanonicalCsv), e);
    EXPECT_EQ(parse_event_json(to_ndjson(e)), e);
    EXPECT_TRUE(is_header_row(canonical_csv_header(), DatasetFormat::CanonicalCsv));
}

TEST(Events, JsonErrors)
{
    EXPECT_THROW(parse_event_json("{\"event_id\":1"), FormatError);
    EXPECT_THROW(parse_event_json("[1,2]"), FormatError);
    EXPECT_THROW(parse_event_json("{\"event_id\":1,\"timestamp\":0}"), FormatError);
}

TEST(Events, FieldLookupAndChecks)
{
    PatientEvent e;
    e.age = 40;
    e.sbp = 120;
    e.dbp = 80;
    EXPECT_EQ(event_field(e, "age"), 40.0);
    EXPECT_EQ(event_field(e, "sbp"), 120.0);
    EXPECT_FALSE(event_field(e, "risk"));
    EXPECT_NO_THROW(check_event(e));
    e.gender = 3;
    EXPECT_THROW(check_event(e), FormatError);
    e.gender = 1;
    e.sbp = 0;
    try {
        check_event(e);
        FAIL();
    } catch (const FormatError& ex) {
        EXPECT_EQ(ex.column(), 7u);
    }
}
