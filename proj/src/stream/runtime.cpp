#include "cardiocep/stream.hpp"

#include <chrono>
#include <cmath>
#include <thread>

namespace cardiocep {

// Blocking FIFO with a fixed capacity. push() waits while full, so producers
// are paced by the consumer and nothing is dropped.
template <typename T>
class BoundedQueue {
public:
    enum class Pop { Items, Timeout, Closed };

    explicit BoundedQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

    /// `stamp(item)` runs under the queue lock right before the item is
    /// enqueued. Returns false once the queue is closed.
    template <typename Stamp>
    bool push(T item, Stamp&& stamp)
    {
        std::unique_lock lock(mutex_);
        not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
        if (closed_) {
            return false;
        }
        stamp(item);
        items_.push_back(std::move(item));
        if (items_.size() == 1) {
            not_empty_.notify_one();
        }
        return true;
    }

    bool push(T item)
    {
        return push(std::move(item), [](T&) {});
    }

    Pop pop_batch(std::vector<T>& out, std::size_t max, std::chrono::microseconds timeout)
    {
        out.clear();
        std::unique_lock lock(mutex_);
        if (!not_empty_.wait_for(lock, timeout, [&] { return closed_ || !items_.empty(); })) {
            return Pop::Timeout;
        }
        if (items_.empty()) {
            return Pop::Closed;
        }
        const bool was_full = items_.size() >= capacity_;
        while (!items_.empty() && out.size() < max) {
            out.push_back(std::move(items_.front()));
            items_.pop_front();
        }
        if (was_full) {
            not_full_.notify_all();
        }
        return Pop::Items;
    }

    /// Runs `f(empty)` under the queue lock.
    template <typename F>
    auto with_lock(F&& f)
    {
        std::lock_guard lock(mutex_);
        return f(items_.empty());
    }

    void close()
    {
        std::lock_guard lock(mutex_);
        closed_ = true;
        not_full_.notify_all();
        not_empty_.notify_all();
    }

private:
    std::size_t capacity_;
    std::mutex mutex_;
    std::condition_variable not_full_;
    std::condition_variable not_empty_;
    std::deque<T> items_;
    bool closed_ = false;
};

namespace {

std::int64_t steady_ns()
{
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

enum class Field { Age, Sbp, Dbp, Gender, Glucose, Cholesterol, Smoking, Height, Weight, Alcohol, Active };

std::optional<Field> field_of(std::string_view name)
{
    static constexpr std::pair<std::string_view, Field> kFields[] = {
        {"age", Field::Age},         {"sbp", Field::Sbp},       {"dbp", Field::Dbp},
        {"gender", Field::Gender},   {"glucose", Field::Glucose}, {"cholesterol", Field::Cholesterol},
        {"smoking", Field::Smoking}, {"height", Field::Height}, {"weight", Field::Weight},
        {"alcohol", Field::Alcohol}, {"active", Field::Active},
    };
    for (const auto& [n, f] : kFields) {
        if (n == name) {
            return f;
        }
    }
    return std::nullopt;
}

double read_field(const PatientEvent& e, Field f)
{
    switch (f) {
    case Field::Age: return e.age;
    case Field::Sbp: return e.sbp;
    case Field::Dbp: return e.dbp;
    case Field::Gender: return e.gender;
    case Field::Glucose: return e.glucose;
    case Field::Cholesterol: return e.cholesterol;
    case Field::Smoking: return e.smoking;
    case Field::Height: return e.height;
    case Field::Weight: return e.weight;
    case Field::Alcohol: return e.alcohol;
    case Field::Active: return e.active;
    }
    return 0.0;
}


std::string first_error(const std::vector<Diagnostic>& diagnostics)
{
    for (const auto& d : diagnostics) {
        if (d.severity == Severity::Error) {
            return to_string(d);
        }
    }
    return "invalid model";
}

} // namespace

std::vector<Diagnostic> serving_diagnostics(const FuzzyModel& model)
{
    auto diagnostics = validate_model(model);
    for (const auto& var : model.inputs) {
        if (!field_of(var.name)) {
            diagnostics.push_back({Severity::Error, "variable " + var.name, "input is not a patient event field"});
        }
    }
    if (model.output.terms.size() != kRiskCategories.size()) {
        diagnostics.push_back({Severity::Error, "variable " + model.output.name,
                               "output needs exactly 5 terms ordered by severity, has " + std::to_string(model.output.terms.size())});
    }
    return diagnostics;
}

RejectedDeployment::RejectedDeployment(std::vector<Diagnostic> diagnostics)
    : Error("deployment rejected: " + first_error(diagnostics)), diagnostics_(std::move(diagnostics))
{
}

struct StreamRuntime::Active {
    explicit Active(FuzzyModel model) : engine(std::move(model))
    {
        for (const auto& var : engine.model().inputs) {
            fields.push_back(*field_of(var.name));
        }
    }

    int version = 1;
    InferenceEngine engine;
    std::vector<Field> fields;
};

struct StreamRuntime::Item {
    PatientEvent event;
    std::int64_t ts_ms = 0;
    std::int64_t ingest_ns = 0;
};

struct StreamRuntime::Output {
    enum class Kind { Assessment, Window } kind = Kind::Assessment;
    RiskAssessment assessment;
    bool alert = false;
    WindowStats stats;
};

StreamRuntime::StreamRuntime(FuzzyModel model, RuntimeConfig config) : config_(config)
{
    if (config_.clock == nullptr) {
        throw Error("runtime needs a clock");
    }
    if (config_.window.length_ms <= 0) {
        throw Error("window length must be positive");
    }
    auto diagnostics = serving_diagnostics(model);
    if (has_errors(diagnostics)) {
        throw RejectedDeployment(std::move(diagnostics));
    }
    auto active = std::make_shared<Active>(std::move(model));
    active->version = 1;
    active_ = std::move(active);
    events_ = std::make_unique<BoundedQueue<Item>>(config_.buffer_capacity);
    outputs_ = std::make_unique<BoundedQueue<Output>>(config_.buffer_capacity);
}

StreamRuntime::~StreamRuntime() = default;

int StreamRuntime::model_version() const
{
    std::lock_guard lock(model_mutex_);
    return active_->version;
}

DeploymentReceipt StreamRuntime::deploy_rules(FuzzyModel model)
{
    const std::int64_t t0 = steady_ns();
    auto diagnostics = serving_diagnostics(model);
    if (has_errors(diagnostics)) {
        throw RejectedDeployment(std::move(diagnostics));
    }
    auto active = std::make_shared<Active>(std::move(model));
    DeploymentReceipt receipt;
    {
        std::lock_guard lock(model_mutex_);
        active->version = next_version_++;
        receipt.version = active->version;
        if (!started_) {
            active_ = std::move(active);
            pending_.reset();
            receipt.effective_window = 0;
        } else {
            receipt.effective_window = open_window_id_ + 1;
            pending_ = std::move(active);
            pending_window_ = receipt.effective_window;
        }
    }
    receipt.latency_us = (steady_ns() - t0) / 1000;
    return receipt;
}

void StreamRuntime::stop()
{
    stop_.store(true);
    {
        std::lock_guard lock(error_mutex_);
        if (source_ != nullptr) {
            source_->stop();
        }
    }
    events_->close();
}

void StreamRuntime::fail(const std::string& message)
{
    {
        std::lock_guard lock(error_mutex_);
        if (error_.empty()) {
            error_ = message;
        }
    }
    stop();
}

void StreamRuntime::source_loop(EventSource& source)
{
    const bool processing = config_.time_mode == TimeMode::Processing;
    Clock& clock = *config_.clock;
    try {
        while (!stop_.load(std::memory_order_relaxed)) {
            auto event = source.next();
            if (!event) {
                break;
            }
            Item item{std::move(*event), 0, 0};
            const bool pushed = events_->push(std::move(item), [&](Item& it) {
                it.ts_ms = processing ? clock.now_us() / 1000 : it.event.timestamp_ms;
                it.ingest_ns = steady_ns();
            });
            if (!pushed) {
                break;
            }
        }
    } catch (const std::exception& ex) {
        fail(std::string("source: ") + ex.what());
    }
    events_->close();
}

void StreamRuntime::sink_loop()
{
    std::vector<Output> batch;
    bool failed = false;
    for (;;) {
        const auto r = outputs_->pop_batch(batch, 256, std::chrono::milliseconds(100));
        if (r == BoundedQueue<Output>::Pop::Closed) {
            break;
        }
        if (failed) {
            continue; // keep draining so the scorer never blocks
        }
        try {
            for (const auto& out : batch) {
                if (out.kind == Output::Kind::Assessment) {
                    const std::string line = to_ndjson(out.assessment);
                    if (out.alert && config_.alerts != nullptr) {
                        config_.alerts->write(line);
                    }
                    if (config_.assessments != nullptr) {
                        config_.assessments->write(line);
                    }
                } else {
                    if (config_.stats != nullptr) {
                        config_.stats->write(to_ndjson(out.stats));
                    }
                    for (LineSink* sink : {config_.alerts, config_.assessments, config_.stats}) {
                        if (sink != nullptr) {
                            sink->flush();
                        }
                    }
                }
            }
        } catch (const std::exception& ex) {
            failed = true;
            fail(std::string("sink: ") + ex.what());
        }
    }
    if (!failed) {
        try {
            for (LineSink* sink : {config_.alerts, config_.assessments, config_.stats}) {
                if (sink != nullptr) {
                    sink->flush();
                }
            }
        } catch (const std::exception& ex) {
            fail(std::string("sink: ") + ex.what());
        }
    }
}

void StreamRuntime::emit(Output&& out)
{
    if (config_.alerts != nullptr || config_.assessments != nullptr || config_.stats != nullptr) {
        outputs_->push(std::move(out));
    }
}

void StreamRuntime::open_window(std::int64_t id)
{
    std::shared_ptr<const Active> active;
    {
        std::lock_guard lock(model_mutex_);
        if (pending_ && id >= pending_window_) {
            active_ = std::move(pending_);
            pending_.reset();
        }
        open_window_id_ = id;
        active = active_;
    }
    WindowSpec spec = config_.window;
    spec.epoch_ms = epoch_ms_;
    WindowStats stats;
    stats.window_id = id;
    stats.start_ms = window_start_ms(id, spec);
    stats.end_ms = stats.start_ms + spec.length_ms;
    stats.rule_count = active->engine.model().rules.size();
    stats.model_version = active->version;
    current_ = stats;
    window_model_ = std::move(active);
}

void StreamRuntime::close_window()
{
    WindowStats stats = *current_;
    current_.reset();
    summary_.windows++;
    cumulative_in_ += stats.events_in;
    cumulative_scored_ += stats.events_scored;
    stats.cumulative_events_in = cumulative_in_;
    stats.cumulative_events_scored = cumulative_scored_;
    last_closed_ = stats.window_id;
    Output out;
    out.kind = Output::Kind::Window;
    out.stats = stats;
    emit(std::move(out));
}

void StreamRuntime::advance_to_window(std::int64_t id)
{
    if (current_) {
        close_window();
    }
    std::int64_t next = last_closed_ ? *last_closed_ + 1 : (config_.time_mode == TimeMode::Processing ? 0 : id);
    for (; next < id; ++next) {
        open_window(next);
        close_window();
    }
    open_window(id);
}

void StreamRuntime::score(const Item& item)
{
    WindowSpec spec = config_.window;
    spec.epoch_ms = epoch_ms_;
    const std::int64_t w = assign_window(item.ts_ms, spec);
    if ((current_ && w < current_->window_id) || (last_closed_ && w <= *last_closed_)) {
        summary_.late++;
        return;
    }
    if (!current_ || w > current_->window_id) {
        advance_to_window(w);
    }
    WindowStats& stats = *current_;
    stats.events_in++;
    summary_.events_in++;

    const Active& active = *window_model_;
    values_.resize(active.fields.size());
    for (std::size_t i = 0; i < active.fields.size(); ++i) {
        values_[i] = read_field(item.event, active.fields[i]);
    }
    try {
        active.engine.evaluate(values_, evaluation_);
    } catch (const Error&) {
        return;
    }
    const double score = std::round(evaluation_.score * 100.0) / 100.0;
    const RiskCategory category = *category_for(active.engine.model().output, score);
    const auto slot = static_cast<std::size_t>(category);
    stats.events_scored++;
    stats.counts[slot]++;
    summary_.events_scored++;
    summary_.counts[slot]++;
    if (evaluation_.unruled) {
        summary_.unruled++;
    }
    const bool alert = category >= config_.alert_threshold;
    if (alert) {
        summary_.alerts++;
    }
    latency_sum_us_ += static_cast<double>(steady_ns() - item.ingest_ns) / 1000.0;
    events_scored_.fetch_add(1, std::memory_order_relaxed);

    const bool wanted = config_.assessments != nullptr || (alert && config_.alerts != nullptr);
    if (!wanted) {
        return;
    }
    Output out;
    out.kind = Output::Kind::Assessment;
    out.alert = alert;
    RiskAssessment& a = out.assessment;
    a.event_id = item.event.event_id;
    a.ts_ms = item.ts_ms;
    a.window_id = w;
    a.score = score;
    a.category = category;
    a.fired.reserve(evaluation_.fired.size());
    for (const auto& [index, strength] : evaluation_.fired) {
        a.fired.push_back({active.engine.model().rules[index].id, strength});
    }
    const auto iso = isolated_hypertension(item.event.sbp, item.event.dbp);
    a.flags = (evaluation_.clamped ? kFlagClamped : 0u) | (evaluation_.unruled ? kFlagUnruled : 0u)
            | (iso.isolated_systolic ? kFlagIsolatedSystolic : 0u) | (iso.isolated_diastolic ? kFlagIsolatedDiastolic : 0u);
    emit(std::move(out));
}

void StreamRuntime::score_loop()
{
    using Pop = BoundedQueue<Item>::Pop;
    const bool processing = config_.time_mode == TimeMode::Processing;
    std::vector<Item> batch;
    batch.reserve(256);
    for (;;) {
        const Pop r = events_->pop_batch(batch, 256, std::chrono::milliseconds(20));
        if (r == Pop::Closed || stop_.load(std::memory_order_relaxed)) {
            break;
        }
        if (r == Pop::Timeout) {
            if (processing && current_) {
                // Close on the clock only when nothing is queued: any later push
                // is stamped at or after this reading.
                const std::int64_t end = current_->end_ms;
                const bool due = events_->with_lock([&](bool empty) { return empty && config_.clock->now_us() / 1000 >= end; });
                if (due) {
                    close_window();
                }
            }
            continue;
        }
        for (const Item& item : batch) {
            score(item);
        }
    }
    if (current_) {
        close_window();
    }
}

RunSummary StreamRuntime::run(EventSource& source)
{
    {
        std::lock_guard lock(model_mutex_);
        if (started_) {
            throw Error("a runtime can only run once");
        }
        started_ = true;
    }
    epoch_ms_ = config_.time_mode == TimeMode::Processing ? config_.clock->now_us() / 1000 : config_.window.epoch_ms;
    {
        std::lock_guard lock(error_mutex_);
        source_ = &source;
    }
    if (stop_.load()) {
        source.stop();
    }

    const bool has_sinks = config_.alerts != nullptr || config_.assessments != nullptr || config_.stats != nullptr;
    std::thread producer([&] { source_loop(source); });
    std::thread consumer;
    if (has_sinks) {
        consumer = std::thread([&] { sink_loop(); });
    }

    score_loop();

    source.stop();
    events_->close();
    producer.join();
    outputs_->close();
    if (consumer.joinable()) {
        consumer.join();
    }
    {
        std::lock_guard lock(error_mutex_);
        source_ = nullptr;
        summary_.error = error_;
    }
    summary_.aborted = !summary_.error.empty();
    summary_.rejected = source.rejected() + summary_.late;
    summary_.mean_event_latency_us = summary_.events_scored > 0 ? latency_sum_us_ / static_cast<double>(summary_.events_scored) : 0.0;
    return summary_;
}

} // namespace cardiocep
