#pragma once

// In-process CEP pipeline: sources -> scorer -> sinks over bounded buffers,
// tumbling windows, hot rule deployment.

#include "cardiocep/clinical.hpp"
#include "cardiocep/engine.hpp"
#include "cardiocep/fcl.hpp"

#include <array>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace cardiocep {

// ---------------------------------------------------------------------------
// Clocks (microseconds)

class Clock {
public:
    virtual ~Clock() = default;
    virtual std::int64_t now_us() const = 0;
    /// Real clocks sleep; the simulated clock jumps forward.
    virtual void sleep_until(std::int64_t us) = 0;
    virtual bool simulated() const noexcept = 0;
};

/// Wall time since the Unix epoch, advanced by a monotonic source.
class RealClock final : public Clock {
public:
    RealClock();
    std::int64_t now_us() const override;
    void sleep_until(std::int64_t us) override;
    bool simulated() const noexcept override { return false; }

private:
    std::int64_t base_us_;
    std::int64_t steady_base_us_;
};

class SimulatedClock final : public Clock {
public:
    explicit SimulatedClock(std::int64_t start_us = 0) : now_(start_us) {}
    std::int64_t now_us() const override { return now_.load(std::memory_order_acquire); }
    void sleep_until(std::int64_t us) override { advance_to(us); }
    bool simulated() const noexcept override { return true; }

    void advance(std::int64_t us);
    /// Never moves backwards.
    void advance_to(std::int64_t us);

private:
    std::atomic<std::int64_t> now_;
};

// ---------------------------------------------------------------------------
// Windows

struct WindowSpec {
    std::int64_t length_ms = 5000;
    std::int64_t epoch_ms = 0;
};

/// floor((ts - epoch) / length); windows are half-open [start, end).
std::int64_t assign_window(std::int64_t timestamp_ms, const WindowSpec& spec);
std::int64_t window_start_ms(std::int64_t window_id, const WindowSpec& spec) noexcept;

// ---------------------------------------------------------------------------
// Sources

enum class SourceFormat { KaggleCardio, CanonicalCsv, Ndjson };

std::optional<SourceFormat> parse_source_format(std::string_view text) noexcept;
std::string_view to_string(SourceFormat format) noexcept;

class EventSource {
public:
    virtual ~EventSource() = default;
    /// Blocks until the next event; nullopt at end of stream.
    virtual std::optional<PatientEvent> next() = 0;
    /// Malformed records skipped so far.
    virtual std::uint64_t rejected() const noexcept = 0;
    /// First few reject reasons, for diagnostics.
    virtual std::vector<std::string> reject_reasons() const { return {}; }
    /// Makes a blocked next() return nullopt. Safe from any thread.
    virtual void stop() {}
};

/// Parses lines of `format`, skipping blank lines and a leading header.
/// Malformed lines are counted and skipped.
class LineDecoder {
public:
    explicit LineDecoder(SourceFormat format) : format_(format) {}
    std::optional<PatientEvent> decode(std::string_view line);
    std::uint64_t rejected() const noexcept { return rejected_; }
    const std::vector<std::string>& reasons() const noexcept { return reasons_; }

private:
    SourceFormat format_;
    bool first_ = true;
    std::uint64_t line_no_ = 0;
    std::uint64_t rejected_ = 0;
    std::vector<std::string> reasons_;
};

/// Replays a file paced at `rate` events/s against `clock` (0 = unpaced).
/// Event i is released at start + i/rate; the end of stream at start + n/rate.
/// Throws IoError when the file cannot be opened.
std::unique_ptr<EventSource> open_file_replay(const std::string& path, SourceFormat format, double rate, Clock& clock);

/// Unpaced line stream (stdin).
std::unique_ptr<EventSource> open_stream_source(std::istream& in, SourceFormat format);

/// In-memory events, paced like file replay. With `cycle`, the list repeats
/// (ids stay as given) until `limit` events have been emitted or stop().
std::unique_ptr<EventSource> open_memory_source(std::vector<PatientEvent> events, double rate, Clock* clock, bool cycle = false,
                                                std::optional<std::uint64_t> limit = std::nullopt);

/// NDJSON over TCP. Accepts one connection at a time; the stream ends when
/// `max_connections` connections have closed, or on stop().
class TcpSource final : public EventSource {
public:
    /// Port 0 binds an ephemeral port. Throws IoError.
    explicit TcpSource(std::uint16_t port, std::size_t max_connections = 1);
    ~TcpSource() override;

    std::uint16_t port() const noexcept { return port_; }
    std::optional<PatientEvent> next() override;
    std::uint64_t rejected() const noexcept override { return rejected_.load(); }
    std::vector<std::string> reject_reasons() const override;
    void stop() override;

private:
    bool fill_line(std::string& line);

    int listen_fd_ = -1;
    int conn_fd_ = -1;
    int wake_fd_[2] = {-1, -1};
    std::uint16_t port_ = 0;
    std::size_t max_connections_;
    std::size_t served_ = 0;
    std::string buffer_;
    LineDecoder decoder_{SourceFormat::Ndjson};
    std::atomic<std::uint64_t> rejected_{0};
    std::atomic<bool> stopped_{false};
    mutable std::mutex reasons_mutex_;
    std::vector<std::string> reasons_;
};

// ---------------------------------------------------------------------------
// Sinks

class LineSink {
public:
    virtual ~LineSink() = default;
    /// Throws IoError on failure.
    virtual void write(std::string_view line) = 0;
    virtual void flush() = 0;
};

class FileSink final : public LineSink {
public:
    /// Truncates. Throws IoError.
    explicit FileSink(const std::string& path);
    void write(std::string_view line) override;
    void flush() override;

private:
    std::string path_;
    std::ofstream out_;
};

class StreamSink final : public LineSink {
public:
    explicit StreamSink(std::ostream& out) : out_(out) {}
    void write(std::string_view line) override;
    void flush() override;

private:
    std::ostream& out_;
};

class MemorySink final : public LineSink {
public:
    void write(std::string_view line) override;
    void flush() override { ++flushes_; }
    std::vector<std::string> lines() const;
    std::size_t flushes() const;

private:
    mutable std::mutex mutex_;
    std::vector<std::string> lines_;
    std::size_t flushes_ = 0;
};

// ---------------------------------------------------------------------------
// Payloads

enum AssessmentFlag : unsigned {
    kFlagClamped = 1u << 0,
    kFlagUnruled = 1u << 1,
    kFlagIsolatedSystolic = 1u << 2,
    kFlagIsolatedDiastolic = 1u << 3,
};

struct RiskAssessment {
    std::uint64_t event_id = 0;
    std::int64_t ts_ms = 0;
    std::int64_t window_id = 0;
    double score = 0.0; // quantized to 0.01
    RiskCategory category = RiskCategory::VeryLow;
    std::vector<FiredRule> fired;
    unsigned flags = 0;

    bool operator==(const RiskAssessment&) const = default;
};

std::vector<std::string> flag_names(unsigned flags);

/// {"event_id":..,"ts_ms":..,"window_id":..,"score":30.00,"category":"Low",
///  "fired":[{"rule":"RULE_1","strength":1}],"flags":["clamped"]}
std::string to_ndjson(const RiskAssessment& assessment);
/// Throws FormatError.
RiskAssessment parse_assessment(std::string_view line);

struct WindowStats {
    std::int64_t window_id = 0;
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    std::uint64_t events_in = 0;
    std::uint64_t events_scored = 0;
    std::array<std::uint64_t, 5> counts{}; // by RiskCategory
    std::size_t rule_count = 0;
    int model_version = 0;
    std::uint64_t cumulative_events_in = 0;
    std::uint64_t cumulative_events_scored = 0;

    bool operator==(const WindowStats&) const = default;
};

std::string to_ndjson(const WindowStats& stats);
/// Throws FormatError.
WindowStats parse_window_stats(std::string_view line);

// ---------------------------------------------------------------------------
// Runtime

class RejectedDeployment : public Error {
public:
    explicit RejectedDeployment(std::vector<Diagnostic> diagnostics);
    const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

private:
    std::vector<Diagnostic> diagnostics_;
};

/// validate_model plus the runtime's own requirements: every input is a
/// patient event field and the output has five terms ordered by severity.
std::vector<Diagnostic> serving_diagnostics(const FuzzyModel& model);

struct DeploymentReceipt {
    int version = 0;
    std::int64_t effective_window = 0;
    /// Wall time from the request until the model is installed for the
    /// effective window.
    std::int64_t latency_us = 0;
};

enum class TimeMode { Processing, Event };

struct RuntimeConfig {
    WindowSpec window;
    TimeMode time_mode = TimeMode::Processing;
    RiskCategory alert_threshold = RiskCategory::Medium;
    std::size_t buffer_capacity = 4096;
    Clock* clock = nullptr; // required
    LineSink* alerts = nullptr;
    LineSink* assessments = nullptr;
    LineSink* stats = nullptr;
};

struct RunSummary {
    std::uint64_t events_in = 0;
    std::uint64_t events_scored = 0;
    std::uint64_t rejected = 0; // malformed records plus late events
    std::uint64_t late = 0;
    std::uint64_t windows = 0;
    std::array<std::uint64_t, 5> counts{};
    std::uint64_t unruled = 0;
    std::uint64_t alerts = 0;
    double mean_event_latency_us = 0.0;
    bool aborted = false;
    std::string error;
};

template <typename T>
class BoundedQueue;

class StreamRuntime {
public:
    /// Throws RejectedDeployment when `model` cannot be served.
    StreamRuntime(FuzzyModel model, RuntimeConfig config);
    ~StreamRuntime();

    StreamRuntime(const StreamRuntime&) = delete;
    StreamRuntime& operator=(const StreamRuntime&) = delete;

    /// Drives `source` to completion (or stop()). One run per runtime.
    RunSummary run(EventSource& source);

    /// Validates and compiles `model`, then swaps it in when the next window
    /// opens. Safe from any thread. Throws RejectedDeployment.
    DeploymentReceipt deploy_rules(FuzzyModel model);

    /// Ends the run early; safe from any thread.
    void stop();

    std::uint64_t events_scored() const noexcept { return events_scored_.load(std::memory_order_relaxed); }
    int model_version() const;

private:
    struct Item;
    struct Output;
    struct Active;

    void source_loop(EventSource& source);
    void sink_loop();
    void score_loop();
    void score(const Item& item);
    void advance_to_window(std::int64_t id);
    void open_window(std::int64_t id);
    void close_window();
    void emit(Output&& out);
    void fail(const std::string& message);

    RuntimeConfig config_;
    std::unique_ptr<BoundedQueue<Item>> events_;
    std::unique_ptr<BoundedQueue<Output>> outputs_;

    mutable std::mutex model_mutex_;
    std::shared_ptr<const Active> active_;
    std::shared_ptr<const Active> pending_;
    std::int64_t pending_window_ = 0;
    int next_version_ = 2;
    std::int64_t open_window_id_ = -1;
    bool started_ = false;

    std::atomic<bool> stop_{false};
    std::atomic<std::uint64_t> events_scored_{0};
    EventSource* source_ = nullptr;
    std::mutex error_mutex_;
    std::string error_;
    std::int64_t epoch_ms_ = 0;

    // scorer state
    std::optional<WindowStats> current_;
    std::optional<std::int64_t> last_closed_;
    std::shared_ptr<const Active> window_model_;
    std::vector<double> values_;
    Evaluation evaluation_;
    std::uint64_t cumulative_in_ = 0;
    std::uint64_t cumulative_scored_ = 0;
    RunSummary summary_;
    double latency_sum_us_ = 0.0;
};

} // namespace cardiocep
