// Acceptance gate: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance AC3 AC5    run a subset
//
// AC9 uses the reduced grid {5,15,25} s x {5,15,25} rules unless
// CARDIOCEP_FULL_GRID=1.

#include "../support/oracles.hpp"

#include "cardiocep/bench.hpp"
#include "cardiocep/clinical.hpp"
#include "cardiocep/cohort.hpp"
#include "cardiocep/engine.hpp"
#include "cardiocep/fcl.hpp"
#include "cardiocep/number_format.hpp"
#include "cardiocep/stream.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <unistd.h>

using namespace cardiocep;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fixed(double v, int decimals) { return format_fixed(v, decimals); }

// ---------------------------------------------------------------------------

Outcome ac1_membership()
{
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-100, 100);
    double worst = 0.0;
    bool boundaries = true;
    constexpr int kPoints = 100000;
    for (TermShape shape : {TermShape::Triangle, TermShape::LeftShoulder, TermShape::RightShoulder}) {
        for (int i = 0; i < kPoints; ++i) {
            double v[3] = {u(rng), u(rng), u(rng)};
            std::sort(v, v + 3);
            if (!(v[0] < v[1] && v[1] < v[2])) {
                continue;
            }
            const TriangularTerm t{v[0], v[1], v[2], shape};
            const double x = std::uniform_real_distribution<double>(v[0] - 20, v[2] + 20)(rng);
            worst = std::max(worst, std::abs(membership(t, x) - oracle::membership(t, x)));
            if (i % 1000 == 0) {
                const double below = shape == TermShape::LeftShoulder ? 1.0 : 0.0;
                const double above = shape == TermShape::RightShoulder ? 1.0 : 0.0;
                const double at_c = shape == TermShape::RightShoulder ? 1.0 : 0.0;
                boundaries = boundaries && membership(t, v[0] - 1) == below && membership(t, v[0]) == below && membership(t, v[1]) == 1.0 &&
                             membership(t, v[2]) == at_c && membership(t, v[2] + 1) == above;
            }
        }
    }
    for (int i = 0; i < kPoints; ++i) {
        const double b = u(rng);
        const auto t = TriangularTerm::singleton(b);
        const double x = i % 2 == 0 ? b : u(rng);
        worst = std::max(worst, std::abs(membership(t, x) - oracle::membership(t, x)));
    }
    const double elapsed = seconds_since(start);
    return {worst < 1e-12 && boundaries && elapsed < 1.0,
            "max error " + std::to_string(worst) + ", boundaries " + (boundaries ? "exact" : "WRONG") + ", " + fixed(elapsed, 3) + " s"};
}

FuzzyModel ac2_model()
{
    const std::string text = R"(FUNCTION_BLOCK oracle_model
VAR_INPUT x1 : REAL; x2 : REAL; END_VAR
VAR_OUTPUT y : REAL; END_VAR
FUZZIFY x1
  RANGE := (0 .. 10);
  TERM lo := (0, 1) (5, 0);
  TERM mid := (0, 0) (5, 1) (10, 0);
  TERM hi := (5, 0) (10, 1);
END_FUZZIFY
FUZZIFY x2
  RANGE := (0 .. 10);
  TERM lo := (0, 1) (2, 1) (6, 0);
  TERM mid := (2, 0) (6, 1) (9, 0);
  TERM hi := (6, 0) (9, 1) (10, 1);
END_FUZZIFY
DEFUZZIFY y
  RANGE := (0 .. 100);
  TERM small := (0, 1) (25, 1) (50, 0);
  TERM medium := (20, 0) (50, 1) (80, 0);
  TERM large := (50, 0) (75, 1) (100, 1);
  METHOD : COG;
  RESOLUTION := 101;
END_DEFUZZIFY
RULEBLOCK rules
  RULE 1 : IF x1 IS lo AND x2 IS lo THEN y IS small;
  RULE 2 : IF x1 IS lo AND x2 IS mid THEN y IS small;
  RULE 3 : IF x1 IS lo AND x2 IS hi THEN y IS medium WITH 0.6;
  RULE 4 : IF x1 IS mid AND x2 IS lo THEN y IS small;
  RULE 5 : IF x1 IS mid AND x2 IS mid THEN y IS medium;
  RULE 6 : IF x1 IS mid AND x2 IS hi THEN y IS large WITH 0.8;
  RULE 7 : IF x1 IS hi AND x2 IS lo THEN y IS medium;
  RULE 8 : IF x1 IS hi AND x2 IS mid THEN y IS large;
  RULE 9 : IF x1 IS hi THEN y IS large WITH 0.5;
END_RULEBLOCK
END_FUNCTION_BLOCK
)";
    return parse_fcl(text);
}

Outcome ac2_mamdani()
{
    const auto start = std::chrono::steady_clock::now();
    const FuzzyModel model = ac2_model();
    const InferenceEngine engine(model);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 10);
    double worst = 0.0;
    int compared = 0;
    for (int i = 0; i < 500; ++i) {
        const double x1 = u(rng);
        const double x2 = u(rng);
        const auto expected = oracle::mamdani(model, {{"x1", x1}, {"x2", x2}}, 101);
        if (!expected) {
            return {false, "oracle found no firing rule at (" + format_number(x1) + ", " + format_number(x2) + ")"};
        }
        const CrispResult got = engine.infer({{"x1", x1}, {"x2", x2}});
        worst = std::max(worst, std::abs(got.score - *expected));
        ++compared;
    }
    const double elapsed = seconds_since(start);
    return {worst < 0.1 && compared == 500 && elapsed < 10.0,
            std::to_string(compared) + " inputs, max deviation " + std::to_string(worst) + ", " + fixed(elapsed, 3) + " s"};
}

double apex(const TriangularTerm& t) { return t.b; }

Outcome ac3_published_rules()
{
    const FuzzyModel& model = builtin_model();
    const std::map<std::string, RiskCategory> published{
        {"RULE_1", RiskCategory::Low},     {"RULE_2", RiskCategory::Medium}, {"RULE_3", RiskCategory::High}, {"RULE_4", RiskCategory::Low},
        {"RULE_5", RiskCategory::High},    {"RULE_6", RiskCategory::Medium}, {"RULE_7", RiskCategory::Medium},
        {"RULE_8", RiskCategory::High},    {"RULE_9", RiskCategory::Low},    {"RULE_10", RiskCategory::High},
    };
    const InferenceEngine engine(model);
    int passed = 0;
    std::string failures;
    for (const auto& [id, expected] : published) {
        const Rule* rule = model.find_rule(id);
        if (rule == nullptr) {
            failures += " " + id + "(missing)";
            continue;
        }
        InputMap inputs;
        for (const auto& var : model.inputs) {
            inputs[var.name] = apex(var.terms.front().shape);
        }
        for (const auto& clause : rule->antecedent) {
            inputs[clause.variable] = apex(model.find_input(clause.variable)->find_term(clause.term)->shape);
        }
        try {
            const CrispResult result = engine.infer(inputs);
            if (result.category == expected) {
                ++passed;
            } else {
                failures += " " + id + "->" + (result.category ? std::string(to_string(*result.category)) : "none");
            }
        } catch (const Error& ex) {
            failures += " " + id + "(" + ex.what() + ")";
        }
    }
    return {passed == 10, std::to_string(passed) + "/10 published consequents reproduced" + failures};
}

Outcome ac4_bands()
{
    const std::pair<double, RiskCategory> cases[] = {
        {10, RiskCategory::VeryLow}, {30, RiskCategory::Low}, {50, RiskCategory::Medium}, {70, RiskCategory::High}, {100, RiskCategory::VeryHigh},
    };
    std::string detail;
    bool pass = true;
    for (const auto& [score, expected] : cases) {
        const RiskCategory got = classify_risk(score);
        pass = pass && got == expected;
        detail += (detail.empty() ? "" : ", ") + format_number(score) + "->" + std::string(to_string(got));
    }
    return {pass, detail};
}

Outcome ac5_round_trip()
{
    int ok = 0;
    std::string failures;
    const auto check = [&](const FuzzyModel& m, const std::string& label) {
        try {
            const FuzzyModel again = parse_fcl(print_fcl(m));
            if (again == m && print_fcl(again) == print_fcl(m)) {
                ++ok;
                return;
            }
            failures += " " + label + "(differs)";
        } catch (const Error& ex) {
            failures += " " + label + "(" + ex.what() + ")";
        }
    };
    check(builtin_model(), "builtin");
    try {
        const FuzzyModel shipped = parse_fcl_file(std::string(CARDIOCEP_DATA_DIR) + "/clinical.fcl");
        if (shipped == builtin_model()) {
            check(shipped, "clinical.fcl");
        } else {
            failures += " clinical.fcl(not the built-in model)";
        }
    } catch (const Error& ex) {
        failures += std::string(" clinical.fcl(") + ex.what() + ")";
    }
    oracle::ModelGenerator gen(5);
    int random_ok = 0;
    for (int i = 0; i < 50; ++i) {
        const FuzzyModel m = gen.model(i);
        if (has_errors(validate_model(m))) {
            failures += " random" + std::to_string(i) + "(generator produced an invalid model)";
            continue;
        }
        const int before = ok;
        check(m, "random" + std::to_string(i));
        random_ok += ok - before;
    }
    return {ok == 52, "built-in + shipped file + " + std::to_string(random_ok) + "/50 random models" + failures};
}

// ---------------------------------------------------------------------------
// Golden run

struct GoldenRun {
    RunSummary summary;
    std::string alerts;
    std::vector<std::string> assessments;
    std::vector<std::string> stats;
};

std::string cohort_path()
{
    static const std::string path = [] {
        const auto p = std::filesystem::temp_directory_path() / ("cardiocep_golden_" + std::to_string(::getpid()) + ".csv");
        GeneratorSpec spec;
        spec.n = 1000;
        spec.seed = 42;
        write_cohort(generate(spec), p.string(), CohortFormat::CanonicalCsv);
        return p.string();
    }();
    return path;
}

GoldenRun golden_run()
{
    SimulatedClock clock;
    MemorySink alerts;
    MemorySink assessments;
    MemorySink stats;
    RuntimeConfig config;
    config.window = {5000, 0};
    config.clock = &clock;
    config.alerts = &alerts;
    config.assessments = &assessments;
    config.stats = &stats;
    StreamRuntime runtime(extended_model(), config);
    auto source = open_file_replay(cohort_path(), SourceFormat::CanonicalCsv, 100.0, clock);
    GoldenRun run;
    run.summary = runtime.run(*source);
    for (const auto& line : alerts.lines()) {
        run.alerts += line + "\n";
    }
    run.assessments = assessments.lines();
    run.stats = stats.lines();
    return run;
}

Outcome ac6_determinism()
{
    const GoldenRun first = golden_run();
    bool identical = !first.alerts.empty();
    for (int i = 0; i < 2; ++i) {
        identical = identical && golden_run().alerts == first.alerts;
    }
    bool coverage = true;
    std::string counts;
    for (std::size_t i = 0; i < kRiskCategories.size(); ++i) {
        coverage = coverage && first.summary.counts[i] > 0;
        counts += (counts.empty() ? "" : " ") + std::string(to_string(kRiskCategories[i])) + "=" + std::to_string(first.summary.counts[i]);
    }
    return {identical && coverage && !first.summary.aborted,
            std::string(identical ? "3 runs byte-identical" : "alert streams DIFFER") + ", " + counts};
}

Outcome ac7_partition()
{
    const GoldenRun run = golden_run();
    std::uint64_t total = 0;
    std::map<std::int64_t, std::uint64_t> per_window;
    for (const auto& line : run.stats) {
        const WindowStats s = parse_window_stats(line);
        total += s.events_in;
        per_window[s.window_id] = s.events_in;
    }
    std::set<std::uint64_t> seen;
    std::map<std::int64_t, std::uint64_t> assessed;
    bool unique = true;
    bool assigned = true;
    const WindowSpec spec{5000, 0};
    for (const auto& line : run.assessments) {
        const RiskAssessment a = parse_assessment(line);
        unique = unique && seen.insert(a.event_id).second;
        assigned = assigned && assign_window(a.ts_ms, spec) == a.window_id;
        ++assessed[a.window_id];
    }
    bool consistent = true;
    for (const auto& [window, n] : assessed) {
        consistent = consistent && per_window.count(window) == 1 && per_window.at(window) == n;
    }
    const bool pass = total == 1000 && seen.size() == 1000 && unique && assigned && consistent;
    return {pass, "sum of events_in " + std::to_string(total) + " over " + std::to_string(per_window.size()) + " windows, " +
                      std::to_string(seen.size()) + " distinct events" + (unique ? "" : ", DUPLICATES") +
                      (assigned ? "" : ", window id mismatch") + (consistent ? "" : ", window counts disagree")};
}

FuzzyModel relabelled(const FuzzyModel& base, const std::string& prefix)
{
    FuzzyModel m = base;
    for (auto& rule : m.rules) {
        rule.id = prefix + rule.id;
    }
    return m;
}

Outcome ac8_hot_deploy()
{
    const FuzzyModel model_a = extended_model();
    const FuzzyModel model_b = relabelled(extended_model(), "NEXT_");
    GeneratorSpec cohort;
    cohort.n = 2000;
    cohort.seed = 8;
    const auto events = generate(cohort);
    std::mt19937_64 rng(8);
    int clean = 0;
    int swapped = 0;
    std::string failures;
    for (int trial = 0; trial < 20; ++trial) {
        const std::uint64_t trigger = std::uniform_int_distribution<std::uint64_t>(50, 1950)(rng);
        SimulatedClock clock;
        MemorySink assessments;
        MemorySink stats;
        RuntimeConfig config;
        config.window = {1000, 0};
        config.clock = &clock;
        config.assessments = &assessments;
        config.stats = &stats;
        StreamRuntime runtime(model_a, config);
        auto source = open_memory_source(events, 100.0, &clock);
        RunSummary summary;
        std::thread worker([&] { summary = runtime.run(*source); });
        while (runtime.events_scored() < trigger) {
            std::this_thread::yield();
        }
        const DeploymentReceipt receipt = runtime.deploy_rules(model_b);
        worker.join();

        std::map<std::int64_t, std::set<int>> versions_by_window; // 1 = A ids, 2 = B ids
        for (const auto& line : assessments.lines()) {
            const RiskAssessment a = parse_assessment(line);
            for (const auto& f : a.fired) {
                versions_by_window[a.window_id].insert(f.rule.rfind("NEXT_", 0) == 0 ? 2 : 1);
            }
        }
        bool ok = !summary.aborted;
        bool saw_b = false;
        for (const auto& [window, versions] : versions_by_window) {
            const bool expect_b = window >= receipt.effective_window;
            ok = ok && versions.size() == 1 && (*versions.begin() == 2) == expect_b;
            saw_b = saw_b || versions.count(2) > 0;
        }
        for (const auto& line : stats.lines()) {
            const WindowStats s = parse_window_stats(line);
            ok = ok && (s.window_id >= receipt.effective_window ? s.model_version == receipt.version : s.model_version == 1);
        }
        clean += ok ? 1 : 0;
        swapped += saw_b ? 1 : 0;
        if (!ok) {
            failures += " trial" + std::to_string(trial) + "(trigger " + std::to_string(trigger) + ")";
        }
    }
    return {clean == 20, std::to_string(clean) + "/20 deploys with single-version windows, " + std::to_string(swapped) +
                             " observed the new version" + failures};
}

Outcome ac9_trend()
{
    const char* full = std::getenv("CARDIOCEP_FULL_GRID");
    BenchPlan plan;
    if (full == nullptr || std::string(full) != "1") {
        plan.durations_s = {5, 15, 25};
        plan.rule_counts = {5, 15, 25};
    }
    plan.repetitions = 3;
    const auto start = std::chrono::steady_clock::now();
    const BenchReport report = run_throughput(plan);
    std::string detail;
    bool pass = true;
    for (const auto& row : report.rows) {
        pass = pass && row.ok;
    }
    for (const auto& check : check_trends(report)) {
        pass = pass && check.pass;
        detail += (detail.empty() ? "" : "; ") + check.name + " " + (check.pass ? "holds" : "FAILS") + " [" + check.detail + "]";
    }
    std::string grid;
    for (const auto& row : report.rows) {
        grid += " " + format_number(row.duration_s) + "s/" + std::to_string(row.rule_count) + "r/" + std::to_string(row.rep) + "=" +
                std::to_string(row.events_processed);
    }
    std::cerr << "AC9 grid:" << grid << '\n';
    return {pass, detail + "; " + fixed(seconds_since(start), 0) + " s"};
}

Outcome ac10_simulated()
{
    BenchPlan plan;
    plan.simulated = true;
    plan.rate = 100;
    plan.durations_s = {5};
    plan.repetitions = 3;
    const BenchReport five = run_throughput(plan);
    plan.durations_s = {5, 10, 15, 20, 25};
    plan.repetitions = 1;
    const BenchReport grid = run_throughput(plan);
    std::size_t exact = 0;
    for (const auto& row : five.rows) {
        exact += row.ok && row.events_processed == 500 ? 1 : 0;
    }
    std::size_t scaled = 0;
    for (const auto& row : grid.rows) {
        scaled += row.ok && row.events_processed == static_cast<std::uint64_t>(100 * row.duration_s) ? 1 : 0;
    }
    return {exact == five.rows.size() && exact == 15 && scaled == grid.rows.size(),
            std::to_string(exact) + "/" + std::to_string(five.rows.size()) + " cells at 5 s processed exactly 500; " +
                std::to_string(scaled) + "/" + std::to_string(grid.rows.size()) + " cells matched rate x duration"};
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"AC1", ac1_membership},  {"AC2", ac2_mamdani},     {"AC3", ac3_published_rules}, {"AC4", ac4_bands},
        {"AC5", ac5_round_trip},  {"AC6", ac6_determinism}, {"AC7", ac7_partition},       {"AC8", ac8_hot_deploy},
        {"AC9", ac9_trend},       {"AC10", ac10_simulated},
    };
    std::set<std::string> selected(argv + 1, argv + argc);
    for (const auto& name : selected) {
        if (std::none_of(criteria.begin(), criteria.end(), [&](const auto& c) { return c.first == name; })) {
            std::cerr << "unknown criterion " << name << '\n';
            return 2;
        }
    }
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        if (!selected.empty() && selected.count(name) == 0) {
            continue;
        }
        Outcome outcome;
        try {
            outcome = run();
        } catch (const std::exception& ex) {
            outcome = {false, std::string("threw: ") + ex.what()};
        }
        std::cout << (outcome.pass ? "PASS " : "FAIL ") << name << "  " << outcome.detail << std::endl;
        failed += outcome.pass ? 0 : 1;
    }
    std::filesystem::remove(std::filesystem::temp_directory_path() / ("cardiocep_golden_" + std::to_string(::getpid()) + ".csv"));
    return failed == 0 ? 0 : 1;
}
