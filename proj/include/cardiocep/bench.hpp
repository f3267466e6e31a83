#pragma once

// Throughput and deployment-latency measurements over the stream runtime.

#include "cardiocep/clinical.hpp"
#include "cardiocep/cohort.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cardiocep {

struct BenchPlan {
    std::vector<double> durations_s{5, 10, 15, 20, 25};
    std::vector<std::size_t> rule_counts{5, 10, 15, 20, 25};
    int repetitions = 3;
    bool simulated = false;
    /// Source rate for simulated cells (events/s). Real-clock cells are unpaced.
    double rate = 100.0;
    /// Events fed (cyclically) to every cell; empty means generate(cohort).
    std::vector<PatientEvent> events;
    GeneratorSpec cohort;
};

/// Throws Error on an empty or non-positive entry.
void check_plan(const BenchPlan& plan);

/// The first `n` rules of extended_model(), as a servable model.
FuzzyModel rule_prefix_model(std::size_t n);

struct BenchRow {
    double duration_s = 0.0;
    std::size_t rule_count = 0;
    int rep = 1; // 1-based
    std::uint64_t events_processed = 0;
    double mean_event_latency_us = 0.0;
    std::optional<std::int64_t> deploy_latency_us;
    bool ok = true;
    std::string error; // set when !ok

    bool operator==(const BenchRow&) const = default;
};

struct BenchReport {
    std::vector<BenchRow> rows;
    bool operator==(const BenchReport&) const = default;
};

using BenchProgress = std::function<void(const BenchRow&)>;

/// One fresh pipeline per (repetition, duration, rule count), run
/// sequentially. Each cell redeploys its model halfway through and records
/// that receipt's latency. A failed cell is recorded and the grid continues.
BenchReport run_throughput(const BenchPlan& plan, const BenchProgress& progress = {});

struct DeployLatency {
    std::size_t rule_count = 0;
    std::vector<std::int64_t> samples_us;
    std::int64_t median_us = 0;
    bool ok = true;
    std::string error;
};

/// For each count, deploys a prefix model `repetitions` times into a running
/// real-clock pipeline and reports the median receipt latency.
std::vector<DeployLatency> run_deploy_latency(const std::vector<std::size_t>& rule_counts, int repetitions,
                                              const std::vector<PatientEvent>& events);

enum class ReportFormat { Csv, Ndjson };

std::string_view bench_csv_header() noexcept;
void write_report(const BenchReport& report, std::ostream& out, ReportFormat format);
/// Throws IoError.
void write_report(const BenchReport& report, const std::string& path, ReportFormat format);
/// Throws IoError or FormatError.
BenchReport read_report(const std::string& path, ReportFormat format);

struct TrendCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Best-effort shape checks on a real-clock report, each required to hold in
/// a strict majority of repetitions:
///   events non-increasing in rule count for every duration;
///   events strictly increasing in duration for every rule count.
std::vector<TrendCheck> check_trends(const BenchReport& report);

} // namespace cardiocep
