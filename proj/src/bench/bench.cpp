#include "cardiocep/bench.hpp"

#include "cardiocep/number_format.hpp"
#include "cardiocep/stream.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace cardiocep {

namespace {

constexpr std::string_view kHeader = "duration_s,rule_count,rep,events_processed,mean_event_latency_us,deploy_latency_us,status";

const std::vector<PatientEvent>& plan_events(const BenchPlan& plan, std::vector<PatientEvent>& storage)
{
    if (!plan.events.empty()) {
        return plan.events;
    }
    storage = generate(plan.cohort);
    return storage;
}

// Runs `rt` on `source` in a worker thread; the caller drives it through
// `drive`, which may call stop().
template <typename Drive>
RunSummary run_driven(StreamRuntime& rt, EventSource& source, Drive&& drive)
{
    RunSummary summary;
    std::exception_ptr error;
    std::atomic<bool> done{false};
    std::thread worker([&] {
        try {
            summary = rt.run(source);
        } catch (...) {
            error = std::current_exception();
        }
        done.store(true);
    });
    try {
        drive(done);
    } catch (...) {
        rt.stop();
        worker.join();
        throw;
    }
    worker.join();
    if (error) {
        std::rethrow_exception(error);
    }
    return summary;
}

BenchRow run_cell(const BenchPlan& plan, const std::vector<PatientEvent>& events, double duration_s, std::size_t rules, int rep)
{
    BenchRow row;
    row.duration_s = duration_s;
    row.rule_count = rules;
    row.rep = rep;
    try {
        const FuzzyModel model = rule_prefix_model(rules);
        if (plan.simulated) {
            SimulatedClock clock;
            RuntimeConfig config;
            config.clock = &clock;
            StreamRuntime rt(model, config);
            const auto limit = static_cast<std::uint64_t>(std::llround(plan.rate * duration_s));
            auto source = open_memory_source(events, plan.rate, &clock, true, limit);
            const RunSummary summary = run_driven(rt, *source, [&](const std::atomic<bool>& done) {
                while (!done.load() && rt.events_scored() < limit / 2) {
                    std::this_thread::sleep_for(std::chrono::microseconds(200));
                }
                row.deploy_latency_us = rt.deploy_rules(model).latency_us;
            });
            if (summary.aborted) {
                throw Error(summary.error);
            }
            row.events_processed = summary.events_scored;
            row.mean_event_latency_us = summary.mean_event_latency_us;
        } else {
            RealClock clock;
            RuntimeConfig config;
            config.clock = &clock;
            StreamRuntime rt(model, config);
            auto source = open_memory_source(events, 0.0, nullptr, true);
            const auto budget = std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(duration_s));
            const RunSummary summary = run_driven(rt, *source, [&](const std::atomic<bool>&) {
                const auto start = std::chrono::steady_clock::now();
                std::this_thread::sleep_until(start + budget / 2);
                row.deploy_latency_us = rt.deploy_rules(model).latency_us;
                std::this_thread::sleep_until(start + budget);
                row.events_processed = rt.events_scored();
                rt.stop();
            });
            if (summary.aborted) {
                throw Error(summary.error);
            }
            row.mean_event_latency_us = summary.mean_event_latency_us;
        }
    } catch (const std::exception& ex) {
        row.ok = false;
        row.error = ex.what();
    }
    return row;
}

std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) {
            return out;
        }
        start = pos + 1;
    }
}

BenchRow parse_csv_row(std::string_view line)
{
    const auto cols = split(line, ',');
    if (cols.size() != 7) {
        throw FormatError(0, "expected 7 columns, found " + std::to_string(cols.size()));
    }
    BenchRow row;
    const auto duration = parse_real(cols[0]);
    const auto rules = parse_integer(cols[1]);
    const auto rep = parse_integer(cols[2]);
    const auto events = parse_integer(cols[3]);
    const auto latency = parse_real(cols[4]);
    if (!duration || *duration <= 0) {
        throw FormatError(1, "invalid duration");
    }
    if (!rules || *rules <= 0) {
        throw FormatError(2, "invalid rule count");
    }
    if (!rep || *rep <= 0) {
        throw FormatError(3, "invalid repetition");
    }
    if (!events || *events < 0) {
        throw FormatError(4, "invalid event count");
    }
    if (!latency) {
        throw FormatError(5, "invalid latency");
    }
    row.duration_s = *duration;
    row.rule_count = static_cast<std::size_t>(*rules);
    row.rep = static_cast<int>(*rep);
    row.events_processed = static_cast<std::uint64_t>(*events);
    row.mean_event_latency_us = *latency;
    if (!cols[5].empty()) {
        const auto deploy = parse_integer(cols[5]);
        if (!deploy) {
            throw FormatError(6, "invalid deploy latency");
        }
        row.deploy_latency_us = *deploy;
    }
    if (cols[6] == "ok") {
        row.ok = true;
    } else if (cols[6].substr(0, 6) == "failed") {
        row.ok = false;
        row.error = cols[6].size() > 7 ? std::string(cols[6].substr(7)) : std::string();
    } else {
        throw FormatError(7, "status must be 'ok' or 'failed'");
    }
    return row;
}

std::string csv_status(const BenchRow& row)
{
    if (row.ok) {
        return "ok";
    }
    std::string reason = row.error;
    std::replace_if(reason.begin(), reason.end(), [](char c) { return c == ',' || c == '\n' || c == '\r'; }, ' ');
    return reason.empty() ? "failed" : "failed:" + reason;
}

BenchRow parse_json_row(std::string_view line)
{
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(line);
        BenchRow row;
        row.duration_s = obj.at("duration_s").get<double>();
        row.rule_count = obj.at("rule_count").get<std::size_t>();
        row.rep = obj.at("rep").get<int>();
        row.events_processed = obj.at("events_processed").get<std::uint64_t>();
        row.mean_event_latency_us = obj.at("mean_event_latency_us").get<double>();
        if (const auto it = obj.find("deploy_latency_us"); it != obj.end() && !it->is_null()) {
            row.deploy_latency_us = it->get<std::int64_t>();
        }
        const auto status = obj.at("status").get<std::string>();
        if (status != "ok" && status != "failed") {
            throw FormatError(0, "status must be 'ok' or 'failed'");
        }
        row.ok = status == "ok";
        if (const auto it = obj.find("error"); it != obj.end()) {
            row.error = it->get<std::string>();
        }
        return row;
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError(0, std::string("malformed report record: ") + ex.what());
    }
}

std::string json_row(const BenchRow& row)
{
    nlohmann::ordered_json obj;
    obj["duration_s"] = row.duration_s;
    obj["rule_count"] = row.rule_count;
    obj["rep"] = row.rep;
    obj["events_processed"] = row.events_processed;
    obj["mean_event_latency_us"] = row.mean_event_latency_us;
    obj["deploy_latency_us"] = row.deploy_latency_us ? nlohmann::ordered_json(*row.deploy_latency_us) : nlohmann::ordered_json(nullptr);
    obj["status"] = row.ok ? "ok" : "failed";
    if (!row.ok) {
        obj["error"] = row.error;
    }
    return obj.dump();
}

using Grid = std::map<int, std::map<double, std::map<std::size_t, const BenchRow*>>>; // rep -> duration -> rules

bool majority(int holds, int total) { return total > 0 && 2 * holds > total; }

} // namespace

void check_plan(const BenchPlan& plan)
{
    if (plan.durations_s.empty() || plan.rule_counts.empty()) {
        throw Error("bench plan needs at least one duration and one rule count");
    }
    for (double d : plan.durations_s) {
        if (!(d > 0) || !std::isfinite(d)) {
            throw Error("bench durations must be positive");
        }
    }
    for (std::size_t r : plan.rule_counts) {
        if (r == 0 || r > extended_model().rules.size()) {
            throw Error("bench rule counts must lie in [1, " + std::to_string(extended_model().rules.size()) + "]");
        }
    }
    if (plan.repetitions < 1) {
        throw Error("bench repetitions must be at least 1");
    }
    if (plan.simulated && !(plan.rate > 0 && std::isfinite(plan.rate))) {
        throw Error("simulated bench rate must be positive");
    }
}

FuzzyModel rule_prefix_model(std::size_t n)
{
    FuzzyModel model = extended_model();
    if (n == 0 || n > model.rules.size()) {
        throw Error("rule prefix length " + std::to_string(n) + " is out of range");
    }
    model.rules.resize(n);
    return model;
}

BenchReport run_throughput(const BenchPlan& plan, const BenchProgress& progress)
{
    check_plan(plan);
    std::vector<PatientEvent> storage;
    const auto& events = plan_events(plan, storage);
    BenchReport report;
    for (int rep = 1; rep <= plan.repetitions; ++rep) {
        for (double duration : plan.durations_s) {
            for (std::size_t rules : plan.rule_counts) {
                report.rows.push_back(run_cell(plan, events, duration, rules, rep));
                if (progress) {
                    progress(report.rows.back());
                }
            }
        }
    }
    return report;
}

std::vector<DeployLatency> run_deploy_latency(const std::vector<std::size_t>& rule_counts, int repetitions,
                                              const std::vector<PatientEvent>& events)
{
    if (repetitions < 1) {
        throw Error("deploy latency needs at least one repetition");
    }
    std::vector<DeployLatency> out;
    for (std::size_t count : rule_counts) {
        DeployLatency result;
        result.rule_count = count;
        try {
            FuzzyModel model = rule_prefix_model(count);
            RealClock clock;
            RuntimeConfig config;
            config.clock = &clock;
            StreamRuntime rt(rule_prefix_model(std::min<std::size_t>(5, count)), config);
            auto source = open_memory_source(events, 0.0, nullptr, true);
            const RunSummary summary = run_driven(rt, *source, [&](const std::atomic<bool>& done) {
                while (!done.load() && rt.events_scored() == 0) {
                    std::this_thread::sleep_for(std::chrono::microseconds(100));
                }
                for (int i = 0; i < repetitions; ++i) {
                    result.samples_us.push_back(rt.deploy_rules(model).latency_us);
                }
                rt.stop();
            });
            if (summary.aborted) {
                throw Error(summary.error);
            }
            auto sorted = result.samples_us;
            std::sort(sorted.begin(), sorted.end());
            result.median_us = sorted[sorted.size() / 2];
        } catch (const std::exception& ex) {
            result.ok = false;
            result.error = ex.what();
        }
        out.push_back(std::move(result));
    }
    return out;
}

std::string_view bench_csv_header() noexcept { return kHeader; }

void write_report(const BenchReport& report, std::ostream& out, ReportFormat format)
{
    if (format == ReportFormat::Csv) {
        out << kHeader << '\n';
        for (const auto& row : report.rows) {
            out << format_number(row.duration_s) << ',' << row.rule_count << ',' << row.rep << ',' << row.events_processed << ','
                << format_number(row.mean_event_latency_us) << ','
                << (row.deploy_latency_us ? std::to_string(*row.deploy_latency_us) : std::string()) << ',' << csv_status(row)
                << '\n';
        }
    } else {
        for (const auto& row : report.rows) {
            out << json_row(row) << '\n';
        }
    }
}

void write_report(const BenchReport& report, const std::string& path, ReportFormat format)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    write_report(report, out, format);
    out.flush();
    if (!out) {
        throw IoError("write to '" + path + "' failed");
    }
}

BenchReport read_report(const std::string& path, ReportFormat format)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    BenchReport report;
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
            if (format == ReportFormat::Csv) {
                if (line_no == 1) {
                    if (line != kHeader) {
                        throw FormatError(0, "unexpected header");
                    }
                    continue;
                }
                report.rows.push_back(parse_csv_row(line));
            } else {
                report.rows.push_back(parse_json_row(line));
            }
        } catch (const FormatError& ex) {
            throw FormatError(ex.column(), "line " + std::to_string(line_no) + ": " + ex.reason());
        }
    }
    return report;
}

std::vector<TrendCheck> check_trends(const BenchReport& report)
{
    Grid grid;
    for (const auto& row : report.rows) {
        grid[row.rep][row.duration_s][row.rule_count] = &row;
    }
    const int reps = static_cast<int>(grid.size());
    std::map<double, int> by_duration;   // reps where rule-count trend holds
    std::map<std::size_t, int> by_rules; // reps where duration trend holds
    for (const auto& [rep, durations] : grid) {
        std::map<std::size_t, std::vector<const BenchRow*>> columns;
        for (const auto& [duration, cells] : durations) {
            bool holds = true;
            const BenchRow* prev = nullptr;
            for (const auto& [rules, row] : cells) {
                holds = holds && row->ok && (prev == nullptr || row->events_processed <= prev->events_processed);
                prev = row;
                columns[rules].push_back(row);
            }
            by_duration[duration] += holds ? 1 : 0;
        }
        for (const auto& [rules, column] : columns) {
            bool holds = true;
            for (std::size_t i = 0; i < column.size(); ++i) {
                holds = holds && column[i]->ok && (i == 0 || column[i]->events_processed > column[i - 1]->events_processed);
            }
            by_rules[rules] += holds ? 1 : 0;
        }
    }

    TrendCheck rule_trend{"events non-increasing in rule count", !by_duration.empty(), ""};
    for (const auto& [duration, holds] : by_duration) {
        rule_trend.pass = rule_trend.pass && majority(holds, reps);
        rule_trend.detail += (rule_trend.detail.empty() ? "" : " ") + format_number(duration) + "s:" + std::to_string(holds) + "/" +
                             std::to_string(reps);
    }
    TrendCheck duration_trend{"events increasing in duration", !by_rules.empty(), ""};
    for (const auto& [rules, holds] : by_rules) {
        duration_trend.pass = duration_trend.pass && majority(holds, reps);
        duration_trend.detail += (duration_trend.detail.empty() ? "" : " ") + std::to_string(rules) + " rules:" + std::to_string(holds) +
                                 "/" + std::to_string(reps);
    }
    return {rule_trend, duration_trend};
}

} // namespace cardiocep
