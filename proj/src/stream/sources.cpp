#include "cardiocep/stream.hpp"

#include <cmath>
#include <fstream>
#include <istream>

namespace cardiocep {

namespace {

constexpr std::size_t kMaxReasons = 20;

std::int64_t slot_us(std::int64_t start, std::uint64_t index, double rate)
{
    return start + static_cast<std::int64_t>(std::llround(static_cast<double>(index) * 1.0e6 / rate));
}

class ReplaySource final : public EventSource {
public:
    ReplaySource(const std::string& path, SourceFormat format, double rate, Clock& clock)
        : in_(path, std::ios::binary), decoder_(format), format_(format), rate_(rate), clock_(clock)
    {
        if (!in_) {
            throw IoError("cannot open '" + path + "'");
        }
    }

    std::optional<PatientEvent> next() override
    {
        if (done_) {
            return std::nullopt;
        }
        if (start_us_ < 0) {
            start_us_ = clock_.now_us();
        }
        std::string line;
        while (!stopped_.load(std::memory_order_relaxed) && std::getline(in_, line)) {
            auto event = decoder_.decode(line);
            if (!event) {
                continue;
            }
            std::int64_t release = clock_.now_us();
            if (rate_ > 0) {
                release = slot_us(start_us_, emitted_, rate_);
                clock_.sleep_until(release);
            }
            if (format_ == SourceFormat::KaggleCardio) {
                event->timestamp_ms = release / 1000;
            }
            ++emitted_;
            return event;
        }
        if (in_.bad()) {
            throw IoError("read error during replay");
        }
        done_ = true;
        if (rate_ > 0 && !stopped_.load()) {
            clock_.sleep_until(slot_us(start_us_, emitted_, rate_));
        }
        return std::nullopt;
    }

    std::uint64_t rejected() const noexcept override { return decoder_.rejected(); }
    std::vector<std::string> reject_reasons() const override { return decoder_.reasons(); }
    void stop() override { stopped_.store(true); }

private:
    std::ifstream in_;
    LineDecoder decoder_;
    SourceFormat format_;
    double rate_;
    Clock& clock_;
    std::int64_t start_us_ = -1;
    std::uint64_t emitted_ = 0;
    bool done_ = false;
    std::atomic<bool> stopped_{false};
};

class LineStreamSource final : public EventSource {
public:
    LineStreamSource(std::istream& in, SourceFormat format) : in_(in), decoder_(format) {}

    std::optional<PatientEvent> next() override
    {
        std::string line;
        while (!stopped_.load(std::memory_order_relaxed) && std::getline(in_, line)) {
            if (auto event = decoder_.decode(line)) {
                return event;
            }
        }
        return std::nullopt;
    }

    std::uint64_t rejected() const noexcept override { return decoder_.rejected(); }
    std::vector<std::string> reject_reasons() const override { return decoder_.reasons(); }
    void stop() override { stopped_.store(true); }

private:
    std::istream& in_;
    LineDecoder decoder_;
    std::atomic<bool> stopped_{false};
};

class MemorySource final : public EventSource {
public:
    MemorySource(std::vector<PatientEvent> events, double rate, Clock* clock, bool cycle, std::optional<std::uint64_t> limit)
        : events_(std::move(events)), rate_(rate), clock_(clock), cycle_(cycle), limit_(limit)
    {
        if (rate_ > 0 && clock_ == nullptr) {
            throw Error("a paced memory source needs a clock");
        }
    }

    std::optional<PatientEvent> next() override
    {
        if (rate_ > 0 && start_us_ < 0) {
            start_us_ = clock_->now_us();
        }
        const bool exhausted = events_.empty() || (!cycle_ && emitted_ >= events_.size());
        if (stopped_.load(std::memory_order_relaxed) || exhausted || (limit_ && emitted_ >= *limit_)) {
            if (rate_ > 0 && !finished_ && !stopped_.load()) {
                clock_->sleep_until(slot_us(start_us_, emitted_, rate_));
            }
            finished_ = true;
            return std::nullopt;
        }
        if (rate_ > 0) {
            clock_->sleep_until(slot_us(start_us_, emitted_, rate_));
        }
        return events_[emitted_++ % events_.size()];
    }

    std::uint64_t rejected() const noexcept override { return 0; }
    void stop() override { stopped_.store(true); }

private:
    std::vector<PatientEvent> events_;
    double rate_;
    Clock* clock_;
    bool cycle_;
    std::optional<std::uint64_t> limit_;
    std::int64_t start_us_ = -1;
    std::uint64_t emitted_ = 0;
    bool finished_ = false;
    std::atomic<bool> stopped_{false};
};

} // namespace

std::optional<SourceFormat> parse_source_format(std::string_view text) noexcept
{
    if (text == "kaggle-cardio" || text == "kaggle") return SourceFormat::KaggleCardio;
    if (text == "canonical-csv" || text == "csv") return SourceFormat::CanonicalCsv;
    if (text == "ndjson") return SourceFormat::Ndjson;
    return std::nullopt;
}

std::string_view to_string(SourceFormat format) noexcept
{
    switch (format) {
    case SourceFormat::KaggleCardio: return "kaggle-cardio";
    case SourceFormat::CanonicalCsv: return "canonical-csv";
    case SourceFormat::Ndjson: return "ndjson";
    }
    return "?";
}

std::optional<PatientEvent> LineDecoder::decode(std::string_view line)
{
    ++line_no_;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) {
        line.remove_suffix(1);
    }
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
        return std::nullopt;
    }
    const bool first = first_;
    first_ = false;
    try {
        switch (format_) {
        case SourceFormat::KaggleCardio:
            if (first && is_header_row(line, DatasetFormat::KaggleCardio)) {
                return std::nullopt;
            }
            return parse_dataset_row(line, DatasetFormat::KaggleCardio);
        case SourceFormat::CanonicalCsv:
            if (first && is_header_row(line, DatasetFormat::CanonicalCsv)) {
                return std::nullopt;
            }
            return parse_dataset_row(line, DatasetFormat::CanonicalCsv);
        case SourceFormat::Ndjson:
            return parse_event_json(line);
        }
    } catch (const FormatError& ex) {
        ++rejected_;
        if (reasons_.size() < kMaxReasons) {
            reasons_.push_back("line " + std::to_string(line_no_) + ": " + ex.what());
        }
    }
    return std::nullopt;
}

std::unique_ptr<EventSource> open_file_replay(const std::string& path, SourceFormat format, double rate, Clock& clock)
{
    return std::make_unique<ReplaySource>(path, format, rate, clock);
}

std::unique_ptr<EventSource> open_stream_source(std::istream& in, SourceFormat format)
{
    return std::make_unique<LineStreamSource>(in, format);
}

std::unique_ptr<EventSource> open_memory_source(std::vector<PatientEvent> events, double rate, Clock* clock, bool cycle,
                                                std::optional<std::uint64_t> limit)
{
    return std::make_unique<MemorySource>(std::move(events), rate, clock, cycle, limit);
}

} // namespace cardiocep
