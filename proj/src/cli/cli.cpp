#include "cardiocep/cli.hpp"

#include "cardiocep/bench.hpp"
#include "cardiocep/clinical.hpp"
#include "cardiocep/cohort.hpp"
#include "cardiocep/engine.hpp"
#include "cardiocep/fcl.hpp"
#include "cardiocep/number_format.hpp"
#include "cardiocep/stream.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>

namespace cardiocep {

namespace {

class UsageError : public Error {
public:
    using Error::Error;
};

bool ends_with(std::string_view s, std::string_view suffix)
{
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string env_or(const char* name, std::string fallback)
{
    const char* value = std::getenv(name);
    return value != nullptr && *value != '\0' ? std::string(value) : fallback;
}

FuzzyModel load_model(const std::string& spec)
{
    if (spec == "builtin") {
        return builtin_model();
    }
    if (spec == "extended") {
        return extended_model();
    }
    return parse_fcl_file(spec);
}

RiskCategory parse_threshold(const std::string& text)
{
    const auto category = parse_category(text);
    if (!category) {
        throw UsageError("unknown category '" + text + "' (expected VeryLow, Low, Medium, High or VeryHigh)");
    }
    return *category;
}

void print_diagnostics(const std::vector<Diagnostic>& diagnostics, std::ostream& err)
{
    for (const auto& d : diagnostics) {
        err << to_string(d) << '\n';
    }
}

// ---------------------------------------------------------------------------
// check

struct CheckArgs {
    std::string path;
    bool builtin = false;
    bool extended = false;
};

int cmd_check(const CheckArgs& args, std::ostream& out, std::ostream& err)
{
    if (static_cast<int>(!args.path.empty()) + static_cast<int>(args.builtin) + static_cast<int>(args.extended) != 1) {
        throw UsageError("check needs exactly one of FILE, --builtin, --extended");
    }
    const FuzzyModel model = args.builtin ? builtin_model() : args.extended ? extended_model() : parse_fcl_file(args.path);
    print_diagnostics(validate_model(model), err);
    out << print_fcl(model);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// infer

struct InferArgs {
    std::string model;
    bool builtin = false;
    bool extended = false;
    std::string record;
    bool json = false;
    std::vector<std::string> inputs;
};

InputMap collect_inputs(const InferArgs& args, std::istream& in)
{
    InputMap inputs;
    if (!args.record.empty()) {
        std::string text = args.record;
        if (text == "-") {
            if (!std::getline(in, text)) {
                throw UsageError("no record on standard input");
            }
        }
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& ex) {
            throw UsageError(std::string("malformed record: ") + ex.what());
        }
        if (!obj.is_object()) {
            throw UsageError("record must be a JSON object");
        }
        for (const auto& [key, value] : obj.items()) {
            if (value.is_number()) {
                inputs[key] = value.get<double>();
            }
        }
    }
    for (const auto& pair : args.inputs) {
        const auto eq = pair.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw UsageError("expected name=value, found '" + pair + "'");
        }
        const auto value = parse_real(std::string_view(pair).substr(eq + 1));
        if (!value) {
            throw UsageError("value for '" + pair.substr(0, eq) + "' is not a finite number");
        }
        inputs[pair.substr(0, eq)] = *value;
    }
    return inputs;
}

int cmd_infer(const InferArgs& args, std::istream& in, std::ostream& out)
{
    if (static_cast<int>(!args.model.empty()) + static_cast<int>(args.builtin) + static_cast<int>(args.extended) > 1) {
        throw UsageError("choose one of --model, --builtin, --extended");
    }
    const InputMap inputs = collect_inputs(args, in);
    const FuzzyModel model = args.extended ? extended_model() : args.model.empty() ? builtin_model() : load_model(args.model);

    std::vector<std::string> missing;
    for (const auto& var : model.inputs) {
        if (inputs.find(var.name) == inputs.end()) {
            missing.push_back(var.name);
        }
    }
    for (const auto& [name, value] : inputs) {
        if (model.find_input(name) == nullptr && args.record.empty()) {
            throw UsageError("'" + name + "' is not an input of model " + model.name);
        }
    }
    if (!missing.empty()) {
        throw MissingVariable(missing);
    }

    const InferenceEngine engine(model);
    const CrispResult result = engine.infer(inputs);

    if (args.json) {
        nlohmann::ordered_json obj;
        obj["model"] = model.name;
        nlohmann::ordered_json memberships = nlohmann::ordered_json::object();
        for (const auto& mv : result.memberships) {
            nlohmann::ordered_json terms = nlohmann::ordered_json::object();
            for (const auto& [term, degree] : mv.entries) {
                terms[term] = degree;
            }
            memberships[mv.variable] = {{"value", mv.value}, {"clamped", mv.clamped}, {"terms", terms}};
        }
        obj["memberships"] = memberships;
        nlohmann::ordered_json fired = nlohmann::ordered_json::array();
        for (const auto& f : result.fired) {
            fired.push_back({{"rule", f.rule}, {"strength", f.strength}});
        }
        obj["fired"] = fired;
        obj["score"] = result.score;
        obj["category"] = result.category ? nlohmann::ordered_json(std::string(to_string(*result.category))) : nlohmann::ordered_json(nullptr);
        out << obj.dump() << '\n';
        return kExitOk;
    }

    out << "model: " << model.name << " (" << model.rules.size() << " rules)\n";
    out << "memberships:\n";
    for (const auto& mv : result.memberships) {
        out << "  " << mv.variable << " = " << format_number(mv.value) << (mv.clamped ? " (clamped)" : "") << '\n';
        for (const auto& [term, degree] : mv.entries) {
            out << fmt::format("    {:<12} {}\n", term, format_number(degree));
        }
    }
    out << "fired rules:\n";
    for (const auto& f : result.fired) {
        out << fmt::format("  {:<12} {}\n", f.rule, format_number(f.strength));
    }
    out << "score: " << format_number(result.score) << '\n';
    out << "category: " << (result.category ? to_string(*result.category) : std::string_view("n/a")) << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// run

struct RunArgs {
    std::string source;
    std::string format;
    double window_s = 5.0;
    std::string model = "extended";
    std::string alerts;
    std::string stats;
    std::string assessments;
    std::string threshold = "Medium";
    double rate = 100.0;
    bool simulated = false;
    bool event_time = false;
    std::int64_t epoch_ms = 0;
    std::size_t max_connections = 1;
};

void print_summary(const RunSummary& s, std::ostream& out)
{
    const auto line = [&](std::string_view key, const std::string& value) { out << fmt::format("{:<18} {}\n", key, value); };
    line("events_in", std::to_string(s.events_in));
    line("events_scored", std::to_string(s.events_scored));
    line("rejected", std::to_string(s.rejected));
    line("late", std::to_string(s.late));
    line("windows", std::to_string(s.windows));
    for (std::size_t i = 0; i < kRiskCategories.size(); ++i) {
        line(to_string(kRiskCategories[i]), std::to_string(s.counts[i]));
    }
    line("unruled", std::to_string(s.unruled));
    line("alerts", std::to_string(s.alerts));
    line("mean_latency_us", format_fixed(s.mean_event_latency_us, 1));
}

int cmd_run(const RunArgs& args, std::istream& in, std::ostream& out, std::ostream& err)
{
    if (args.source.empty()) {
        throw UsageError("run needs --source (FILE, '-' or tcp:PORT)");
    }
    if (!(args.window_s > 0) || !std::isfinite(args.window_s)) {
        throw UsageError("--window must be positive");
    }
    if (!(args.rate >= 0) || !std::isfinite(args.rate)) {
        throw UsageError("--rate must be non-negative");
    }
    const RiskCategory threshold = parse_threshold(args.threshold);
    const bool tcp = args.source.rfind("tcp:", 0) == 0;
    const bool stdin_source = args.source == "-";
    std::optional<long long> port;
    if (tcp) {
        port = parse_integer(std::string_view(args.source).substr(4));
        if (!port || *port < 0 || *port > 65535) {
            throw UsageError("invalid port in '" + args.source + "'");
        }
    }
    SourceFormat format = SourceFormat::CanonicalCsv;
    if (!args.format.empty()) {
        const auto parsed = parse_source_format(args.format);
        if (!parsed) {
            throw UsageError("unknown format '" + args.format + "' (expected kaggle-cardio, canonical-csv or ndjson)");
        }
        format = *parsed;
    } else if (tcp || stdin_source || ends_with(args.source, ".ndjson") || ends_with(args.source, ".jsonl")) {
        format = SourceFormat::Ndjson;
    }
    if (tcp && format != SourceFormat::Ndjson) {
        throw UsageError("tcp sources carry ndjson");
    }
    const auto window_ms = static_cast<std::int64_t>(std::llround(args.window_s * 1000.0));
    if (window_ms <= 0) {
        throw UsageError("--window is shorter than a millisecond");
    }

    FuzzyModel model = load_model(args.model);
    if (auto diagnostics = serving_diagnostics(model); has_errors(diagnostics)) {
        throw RejectedDeployment(std::move(diagnostics));
    }

    std::unique_ptr<Clock> clock;
    if (args.simulated) {
        clock = std::make_unique<SimulatedClock>();
    } else {
        clock = std::make_unique<RealClock>();
    }

    std::unique_ptr<EventSource> source;
    if (tcp) {
        auto tcp_source = std::make_unique<TcpSource>(static_cast<std::uint16_t>(*port), args.max_connections);
        err << "listening on 127.0.0.1:" << tcp_source->port() << std::endl;
        source = std::move(tcp_source);
    } else if (stdin_source) {
        source = open_stream_source(in, format);
    } else {
        source = open_file_replay(args.source, format, args.rate, *clock);
    }

    std::unique_ptr<FileSink> alerts;
    std::unique_ptr<FileSink> stats;
    std::unique_ptr<FileSink> assessments;
    if (!args.alerts.empty()) {
        alerts = std::make_unique<FileSink>(args.alerts);
    }
    if (!args.stats.empty()) {
        stats = std::make_unique<FileSink>(args.stats);
    }
    if (!args.assessments.empty()) {
        assessments = std::make_unique<FileSink>(args.assessments);
    }

    RuntimeConfig config;
    config.window = {window_ms, args.epoch_ms};
    config.time_mode = args.event_time ? TimeMode::Event : TimeMode::Processing;
    config.alert_threshold = threshold;
    config.clock = clock.get();
    config.alerts = alerts.get();
    config.stats = stats.get();
    config.assessments = assessments.get();
    StreamRuntime runtime(std::move(model), config);

    const RunSummary summary = runtime.run(*source);
    print_summary(summary, out);
    for (const auto& reason : source->reject_reasons()) {
        err << "rejected: " << reason << '\n';
    }
    if (summary.aborted) {
        err << "error: " << summary.error << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
    long long n = 1000;
    std::uint64_t seed = 42;
    std::string out;
    std::string format;
};

CohortFormat cohort_format(const std::string& format, const std::string& path)
{
    if (format.empty()) {
        return ends_with(path, ".ndjson") || ends_with(path, ".jsonl") ? CohortFormat::Ndjson : CohortFormat::CanonicalCsv;
    }
    if (format == "csv" || format == "canonical-csv") {
        return CohortFormat::CanonicalCsv;
    }
    if (format == "ndjson") {
        return CohortFormat::Ndjson;
    }
    throw UsageError("unknown cohort format '" + format + "' (expected canonical-csv or ndjson)");
}

int cmd_gen(const GenArgs& args, std::ostream& out)
{
    if (args.n <= 0) {
        throw UsageError("--n must be positive");
    }
    const CohortFormat format = cohort_format(args.format, args.out);
    GeneratorSpec spec;
    spec.n = static_cast<std::size_t>(args.n);
    spec.seed = args.seed;
    const auto events = generate(spec);
    write_cohort(events, args.out, format);

    const auto range = [&](std::string_view name, FieldRange r) {
        out << fmt::format("  {:<12} [{}, {}]\n", name, format_number(r.lo), format_number(r.hi));
    };
    out << "n            " << spec.n << '\n';
    out << "seed         " << spec.seed << '\n';
    out << "format       " << (format == CohortFormat::Ndjson ? "ndjson" : "canonical-csv") << '\n';
    out << "out          " << args.out << '\n';
    out << "ranges:\n";
    range("age", spec.age);
    range("sbp", spec.sbp);
    range("dbp", spec.dbp);
    range("cholesterol", spec.cholesterol);
    range("glucose", spec.glucose);
    range("height", spec.height);
    range("weight", spec.weight);
    out << "probabilities: male " << format_number(spec.p_male) << ", smoking " << format_number(spec.p_smoking) << ", alcohol "
        << format_number(spec.p_alcohol) << ", active " << format_number(spec.p_active) << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
    std::vector<double> durations{5, 10, 15, 20, 25};
    std::vector<std::size_t> rules{5, 10, 15, 20, 25};
    int reps = 3;
    std::string out;
    std::string format;
    bool simulated = false;
    double rate = 100.0;
    bool deploy_latency = false;
    std::string source;
    std::string source_format;
    long long n = 1000;
    std::uint64_t seed = 42;
};

std::vector<PatientEvent> load_events(const std::string& path, SourceFormat format)
{
    SimulatedClock clock;
    auto source = open_file_replay(path, format, 0.0, clock);
    std::vector<PatientEvent> events;
    while (auto e = source->next()) {
        events.push_back(*e);
    }
    if (events.empty()) {
        throw Error("'" + path + "' holds no valid events");
    }
    return events;
}

int cmd_bench(const BenchArgs& args, std::ostream& out, std::ostream& err)
{
    BenchPlan plan;
    plan.durations_s = args.durations;
    plan.rule_counts = args.rules;
    plan.repetitions = args.reps;
    plan.simulated = args.simulated;
    plan.rate = args.rate;
    if (args.n <= 0) {
        throw UsageError("--n must be positive");
    }
    plan.cohort.n = static_cast<std::size_t>(args.n);
    plan.cohort.seed = args.seed;
    try {
        check_plan(plan);
    } catch (const Error& ex) {
        throw UsageError(ex.what());
    }
    ReportFormat report_format = ReportFormat::Csv;
    if (args.format == "ndjson" || (args.format.empty() && (ends_with(args.out, ".ndjson") || ends_with(args.out, ".jsonl")))) {
        report_format = ReportFormat::Ndjson;
    } else if (!args.format.empty() && args.format != "csv") {
        throw UsageError("unknown report format '" + args.format + "' (expected csv or ndjson)");
    }
    std::optional<SourceFormat> source_format = SourceFormat::CanonicalCsv;
    if (!args.source_format.empty()) {
        source_format = parse_source_format(args.source_format);
        if (!source_format) {
            throw UsageError("unknown format '" + args.source_format + "'");
        }
    } else if (ends_with(args.source, ".ndjson") || ends_with(args.source, ".jsonl")) {
        source_format = SourceFormat::Ndjson;
    }
    if (!args.source.empty()) {
        plan.events = load_events(args.source, *source_format);
    }

    out << fmt::format("{:>10} {:>6} {:>4} {:>12} {:>14} {:>12}  {}\n", "duration_s", "rules", "rep", "events", "latency_us", "deploy_us",
                       "status");
    const BenchReport report = run_throughput(plan, [&](const BenchRow& row) {
        out << fmt::format("{:>10} {:>6} {:>4} {:>12} {:>14} {:>12}  {}\n", format_number(row.duration_s), row.rule_count, row.rep,
                           row.events_processed, format_fixed(row.mean_event_latency_us, 1),
                           row.deploy_latency_us ? std::to_string(*row.deploy_latency_us) : std::string("-"),
                           row.ok ? std::string("ok") : "failed: " + row.error);
        out.flush();
    });
    if (!args.out.empty()) {
        write_report(report, args.out, report_format);
    }

    if (plan.simulated) {
        bool exact = true;
        for (const auto& row : report.rows) {
            exact = exact && row.ok && row.events_processed == static_cast<std::uint64_t>(std::llround(plan.rate * row.duration_s));
        }
        out << "check events = rate x duration: " << (exact ? "PASS" : "FAIL") << '\n';
    } else {
        for (const auto& check : check_trends(report)) {
            out << "check " << check.name << ": " << (check.pass ? "PASS" : "FAIL") << " (" << check.detail << ")\n";
        }
    }

    if (args.deploy_latency) {
        std::vector<PatientEvent> storage;
        const auto& events = plan.events.empty() ? (storage = generate(plan.cohort)) : plan.events;
        out << fmt::format("{:>6} {:>12}  {}\n", "rules", "median_us", "samples_us");
        for (const auto& d : run_deploy_latency(plan.rule_counts, plan.repetitions, events)) {
            std::string samples;
            for (auto s : d.samples_us) {
                samples += (samples.empty() ? "" : ",") + std::to_string(s);
            }
            out << fmt::format("{:>6} {:>12}  {}\n", d.rule_count, d.ok ? std::to_string(d.median_us) : std::string("failed"),
                               d.ok ? samples : d.error);
        }
    }

    const bool failed = std::any_of(report.rows.begin(), report.rows.end(), [](const BenchRow& r) { return !r.ok; });
    if (failed) {
        err << "error: some benchmark cells failed\n";
        return kExitRuntime;
    }
    return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Fuzzy clinical risk scoring over event streams", "cardiocep"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    CheckArgs check;
    auto* check_cmd = app.add_subcommand("check", "Parse and validate an FCL model; print its canonical form");
    check_cmd->add_option("file", check.path, "FCL file");
    check_cmd->add_flag("--builtin", check.builtin, "Use the built-in 10-rule clinical model");
    check_cmd->add_flag("--extended", check.extended, "Use the built-in extended clinical model");

    InferArgs infer;
    auto* infer_cmd = app.add_subcommand("infer", "Score one record and explain the inference");
    infer_cmd->add_option("inputs", infer.inputs, "Inputs as name=value");
    infer_cmd->add_option("--model", infer.model, "FCL file, 'builtin' or 'extended' (default builtin)");
    infer_cmd->add_flag("--builtin", infer.builtin, "Use the built-in 10-rule clinical model");
    infer_cmd->add_flag("--extended", infer.extended, "Use the built-in extended clinical model");
    infer_cmd->add_option("--record", infer.record, "One JSON object of inputs; '-' reads a line from standard input");
    infer_cmd->add_flag("--json", infer.json, "Emit one JSON object instead of text");

    RunArgs run;
    run.alerts = env_or("CARDIOCEP_ALERTS_PATH", "");
    run.stats = env_or("CARDIOCEP_STATS_PATH", "");
    auto* run_cmd = app.add_subcommand("run", "Stream events through the scoring pipeline");
    run_cmd->add_option("--source", run.source, "Event file, '-' for standard input, or tcp:PORT")->required();
    run_cmd->add_option("--format", run.format, "kaggle-cardio, canonical-csv or ndjson (default from the file name)");
    run_cmd->add_option("--window", run.window_s, "Window length in seconds")->capture_default_str();
    run_cmd->add_option("--model", run.model, "FCL file, 'builtin' or 'extended'")->capture_default_str();
    run_cmd->add_option("--out", run.alerts, "Alert NDJSON path (default $CARDIOCEP_ALERTS_PATH)");
    run_cmd->add_option("--stats", run.stats, "Window statistics NDJSON path (default $CARDIOCEP_STATS_PATH)");
    run_cmd->add_option("--assessments", run.assessments, "NDJSON path for every assessment");
    run_cmd->add_option("--threshold", run.threshold, "Lowest category that raises an alert")->capture_default_str();
    run_cmd->add_option("--rate", run.rate, "File replay rate in events/s, 0 for unpaced")->capture_default_str();
    run_cmd->add_flag("--simulated-clock", run.simulated, "Use a simulated clock (deterministic windows)");
    run_cmd->add_flag("--event-time", run.event_time, "Window on event timestamps instead of arrival time");
    run_cmd->add_option("--epoch-ms", run.epoch_ms, "Window epoch for --event-time")->capture_default_str();
    run_cmd->add_option("--max-connections", run.max_connections, "TCP connections to serve before ending")->capture_default_str();

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic patient cohort");
    gen_cmd->add_option("--n", gen.n, "Number of patients")->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
    gen_cmd->add_option("--out", gen.out, "Output path")->required();
    gen_cmd->add_option("--format", gen.format, "canonical-csv or ndjson (default from the file name)");

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "Measure throughput across durations and rule counts");
    bench_cmd->add_option("--durations", bench.durations, "Durations in seconds")->delimiter(',')->capture_default_str();
    bench_cmd->add_option("--rules", bench.rules, "Rule counts (prefixes of the extended model)")->delimiter(',')->capture_default_str();
    bench_cmd->add_option("--reps", bench.reps, "Repetitions per cell")->capture_default_str();
    bench_cmd->add_option("--out", bench.out, "Report path");
    bench_cmd->add_option("--format", bench.format, "csv or ndjson (default from the file name)");
    bench_cmd->add_flag("--simulated-clock", bench.simulated, "Paced source on a simulated clock");
    bench_cmd->add_option("--rate", bench.rate, "Source rate for --simulated-clock, events/s")->capture_default_str();
    bench_cmd->add_flag("--deploy-latency", bench.deploy_latency, "Also measure rule deployment latency");
    bench_cmd->add_option("--source", bench.source, "Event file (default: generated cohort)");
    bench_cmd->add_option("--source-format", bench.source_format, "kaggle-cardio, canonical-csv or ndjson");
    bench_cmd->add_option("--n", bench.n, "Generated cohort size")->capture_default_str();
    bench_cmd->add_option("--seed", bench.seed, "Generated cohort seed")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& ex) {
        app.exit(ex, out, err);
        return kExitOk;
    } catch (const CLI::CallForAllHelp& ex) {
        app.exit(ex, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& ex) {
        app.exit(ex, out, err);
        return kExitUsage;
    }

    try {
        if (check_cmd->parsed()) {
            return cmd_check(check, out, err);
        }
        if (infer_cmd->parsed()) {
            return cmd_infer(infer, in, out);
        }
        if (run_cmd->parsed()) {
            return cmd_run(run, in, out, err);
        }
        if (gen_cmd->parsed()) {
            return cmd_gen(gen, out);
        }
        return cmd_bench(bench, out, err);
    } catch (const UsageError& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitUsage;
    } catch (const MissingVariable& ex) {
        err << "error: missing input variables:";
        for (const auto& name : ex.variables()) {
            err << ' ' << name;
        }
        err << '\n';
        return kExitUsage;
    } catch (const SyntaxError& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitValidation;
    } catch (const SemanticError& ex) {
        print_diagnostics(ex.diagnostics(), err);
        return kExitValidation;
    } catch (const RejectedDeployment& ex) {
        print_diagnostics(ex.diagnostics(), err);
        return kExitValidation;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitRuntime;
    }
}

} // namespace cardiocep
