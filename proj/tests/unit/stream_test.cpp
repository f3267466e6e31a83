#include "cardiocep/clinical.hpp"
#include "cardiocep/cohort.hpp"
#include "cardiocep/stream.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

using namespace cardiocep;

namespace {

std::vector<PatientEvent> cohort(std::size_t n, std::uint64_t seed = 42)
{
    GeneratorSpec spec;
    spec.n = n;
    spec.seed = seed;
    return generate(spec);
}

std::string temp_path(const std::string& name)
{
    return (std::filesystem::temp_directory_path() / ("cardiocep_" + std::to_string(::getpid()) + "_" + name)).string();
}

class ThrowingSink final : public LineSink {
public:
    explicit ThrowingSink(std::size_t after) : after_(after) {}
    void write(std::string_view) override
    {
        if (++written_ > after_) {
            throw IoError("disk full");
        }
    }
    void flush() override {}

private:
    std::size_t after_;
    std::size_t written_ = 0;
};

struct RunResult {
    RunSummary summary;
    std::vector<RiskAssessment> assessments;
    std::vector<WindowStats> stats;
    std::vector<std::string> alerts;
};

RunResult run_events(std::vector<PatientEvent> events, RuntimeConfig config, const FuzzyModel& model = extended_model(), double rate = 100)
{
    SimulatedClock clock;
    MemorySink assessments;
    MemorySink stats;
    MemorySink alerts;
    if (config.clock == nullptr) {
        config.clock = &clock;
    }
    config.assessments = &assessments;
    config.stats = &stats;
    config.alerts = &alerts;
    StreamRuntime runtime(model, config);
    auto source = open_memory_source(std::move(events), rate, config.clock);
    RunResult run;
    run.summary = runtime.run(*source);
    for (const auto& line : assessments.lines()) {
        run.assessments.push_back(parse_assessment(line));
    }
    for (const auto& line : stats.lines()) {
        run.stats.push_back(parse_window_stats(line));
    }
    run.alerts = alerts.lines();
    return run;
}

} // namespace

TEST(Windows, Assignment)
{
    const WindowSpec spec{5000, 0};
    EXPECT_EQ(assign_window(0, spec), 0);
    EXPECT_EQ(assign_window(4999, spec), 0);
    EXPECT_EQ(assign_window(5000, spec), 1);
    EXPECT_EQ(assign_window(-1, spec), -1);
    EXPECT_EQ(window_start_ms(3, spec), 15000);
    const WindowSpec shifted{1000, 250};
    EXPECT_EQ(assign_window(250, shifted), 0);
    EXPECT_EQ(assign_window(249, shifted), -1);
    std::mt19937_64 rng(31);
    for (int i = 0; i < 10000; ++i) {
        const WindowSpec s{std::uniform_int_distribution<std::int64_t>(1, 100000)(rng), std::uniform_int_distribution<std::int64_t>(-1000000, 1000000)(rng)};
        const std::int64_t ts = std::uniform_int_distribution<std::int64_t>(-10000000, 10000000)(rng);
        const std::int64_t w = assign_window(ts, s);
        EXPECT_LE(window_start_ms(w, s), ts);
        EXPECT_LT(ts, window_start_ms(w + 1, s));
    }
}

TEST(Clock, SimulatedNeverGoesBack)
{
    SimulatedClock clock(100);
    clock.advance(50);
    EXPECT_EQ(clock.now_us(), 150);
    clock.advance_to(120);
    EXPECT_EQ(clock.now_us(), 150);
    clock.sleep_until(1000);
    EXPECT_EQ(clock.now_us(), 1000);
    RealClock real;
    const auto a = real.now_us();
    real.sleep_until(a + 2000);
    EXPECT_GE(real.now_us(), a + 2000);
}

TEST(Sources, DecoderSkipsHeaderBlanksAndBadRows)
{
    LineDecoder decoder(SourceFormat::CanonicalCsv);
    EXPECT_FALSE(decoder.decode(canonical_csv_header()));
    EXPECT_FALSE(decoder.decode(""));
    const auto events = cohort(2);
    EXPECT_EQ(decoder.decode(to_canonical_csv(events[0])), events[0]);
    EXPECT_FALSE(decoder.decode("1,2,3"));
    EXPECT_EQ(decoder.decode(to_canonical_csv(events[1])), events[1]);
    EXPECT_EQ(decoder.rejected(), 1u);
    ASSERT_EQ(decoder.reasons().size(), 1u);
}

TEST(Sources, FileReplayPacingOnSimulatedClock)
{
    const auto events = cohort(50);
    const std::string path = temp_path("replay.csv");
    write_cohort(events, path, CohortFormat::CanonicalCsv);
    SimulatedClock clock(1'000'000);
    auto source = open_file_replay(path, SourceFormat::CanonicalCsv, 10.0, clock);
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto e = source->next();
        ASSERT_TRUE(e);
        EXPECT_EQ(*e, events[i]);
        EXPECT_EQ(clock.now_us(), 1'000'000 + static_cast<std::int64_t>(i) * 100'000);
    }
    EXPECT_FALSE(source->next());
    EXPECT_EQ(clock.now_us(), 1'000'000 + 50 * 100'000);
    std::filesystem::remove(path);
    EXPECT_THROW(open_file_replay("/nonexistent.csv", SourceFormat::CanonicalCsv, 1.0, clock), IoError);
}

TEST(Sources, KaggleReplaySynthesizesTimestamps)
{
    const std::string path = temp_path("kaggle.csv");
    {
        std::ofstream out(path);
        out << "id;age;gender;height;weight;ap_hi;ap_lo;cholesterol;gluc;smoke;alco;active;cardio\n";
        out << "0;18393;2;168;62.0;110;80;1;1;0;0;1;0\n";
        out << "1;20228;1;156;85.0;140;90;3;1;0;0;1;1\n";
        out << "bad row\n";
        out << "2;18857;1;165;64.0;130;70;3;1;0;0;0;1\n";
    }
    SimulatedClock clock;
    auto source = open_file_replay(path, SourceFormat::KaggleCardio, 100.0, clock);
    std::vector<PatientEvent> got;
    while (auto e = source->next()) {
        got.push_back(*e);
    }
    ASSERT_EQ(got.size(), 3u);
    EXPECT_EQ(got[0].timestamp_ms, 0);
    EXPECT_EQ(got[1].timestamp_ms, 10);
    EXPECT_EQ(got[2].timestamp_ms, 20);
    EXPECT_EQ(source->rejected(), 1u);
    std::filesystem::remove(path);
}

TEST(Sources, StreamAndMemory)
{
    const auto events = cohort(3);
    std::stringstream in;
    for (const auto& e : events) {
        in << to_ndjson(e) << "\n";
    }
    in << "{not json}\n";
    auto source = open_stream_source(in, SourceFormat::Ndjson);
    for (const auto& e : events) {
        EXPECT_EQ(source->next(), e);
    }
    EXPECT_FALSE(source->next());
    EXPECT_EQ(source->rejected(), 1u);

    auto cyc = open_memory_source(events, 0, nullptr, true, 7);
    int n = 0;
    while (cyc->next()) {
        ++n;
    }
    EXPECT_EQ(n, 7);
}

TEST(Sources, Tcp)
{
    TcpSource source(0, 1);
    ASSERT_GT(source.port(), 0);
    const auto events = cohort(5);
    std::thread client([&] {
        const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(source.port());
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        ASSERT_EQ(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
        std::string payload;
        for (const auto& e : events) {
            payload += to_ndjson(e) + "\n";
        }
        payload += "garbage\n";
        ::send(fd, payload.data(), payload.size(), 0);
        ::close(fd);
    });
    std::vector<PatientEvent> got;
    while (auto e = source.next()) {
        got.push_back(*e);
    }
    client.join();
    EXPECT_EQ(got, events);
    EXPECT_EQ(source.rejected(), 1u);
}

TEST(Sources, TcpStopUnblocks)
{
    TcpSource source(0, 1);
    std::thread stopper([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        source.stop();
    });
    EXPECT_FALSE(source.next());
    stopper.join();
}

TEST(Payloads, AssessmentRoundTrip)
{
    RiskAssessment a;
    a.event_id = 9;
    a.ts_ms = 12345;
    a.window_id = 2;
    a.score = 30.25;
    a.category = RiskCategory::Low;
    a.fired = {{"RULE_1", 0.5}, {"RULE_4", 1}};
    a.flags = kFlagClamped | kFlagIsolatedSystolic;
    const std::string line = to_ndjson(a);
    EXPECT_EQ(line, "{\"event_id\":9,\"ts_ms\":12345,\"window_id\":2,\"score\":30.25,\"category\":\"Low\",\"fired\":[{\"rule\":\"RULE_1\","
                    "\"strength\":0.5},{\"rule\":\"RULE_4\",\"strength\":1}],\"flags\":[\"clamped\",\"isolated-systolic\"]}");
    EXPECT_EQ(parse_assessment(line), a);
    EXPECT_THROW(parse_assessment("{\"event_id\":1}"), FormatError);
}

TEST(Payloads, WindowStatsRoundTrip)
{
    WindowStats s;
    s.window_id = 3;
    s.start_ms = 15000;
    s.end_ms = 20000;
    s.events_in = 10;
    s.events_scored = 10;
    s.counts = {1, 2, 3, 4, 0};
    s.rule_count = 1440;
    s.model_version = 2;
    s.cumulative_events_in = 40;
    s.cumulative_events_scored = 40;
    EXPECT_EQ(parse_window_stats(to_ndjson(s)), s);
}

TEST(Runtime, GoldenRunCountsAreFrozen)
{
    const RunResult run = run_events(cohort(1000), RuntimeConfig{});
    const std::array<std::uint64_t, 5> golden{2, 66, 354, 369, 209};
    EXPECT_EQ(run.summary.counts, golden);
    EXPECT_EQ(run.summary.events_in, 1000u);
    EXPECT_EQ(run.summary.events_scored, 1000u);
    EXPECT_EQ(run.summary.windows, 2u);
    EXPECT_EQ(run.summary.rejected, 0u);
    EXPECT_FALSE(run.summary.aborted);
}

TEST(Runtime, WindowsPartitionEvents)
{
    RuntimeConfig config;
    config.window = {1000, 0};
    const RunResult run = run_events(cohort(777, 5), config);
    std::uint64_t total = 0;
    std::int64_t expected_id = 0;
    for (const auto& s : run.stats) {
        EXPECT_EQ(s.window_id, expected_id++);
        EXPECT_EQ(s.end_ms - s.start_ms, 1000);
        EXPECT_EQ(s.events_in, s.events_scored);
        total += s.events_in;
        EXPECT_EQ(s.cumulative_events_in, total);
        std::uint64_t by_category = 0;
        for (auto c : s.counts) {
            by_category += c;
        }
        EXPECT_EQ(by_category, s.events_scored);
    }
    EXPECT_EQ(total, 777u);
    std::set<std::uint64_t> ids;
    for (const auto& a : run.assessments) {
        EXPECT_TRUE(ids.insert(a.event_id).second);
        EXPECT_EQ(assign_window(a.ts_ms, config.window), a.window_id);
    }
    EXPECT_EQ(ids.size(), 777u);
}

TEST(Runtime, AlertsFollowTheThreshold)
{
    RuntimeConfig config;
    config.alert_threshold = RiskCategory::VeryHigh;
    const RunResult run = run_events(cohort(400), config);
    EXPECT_EQ(run.alerts.size(), run.summary.counts[4]);
    EXPECT_EQ(run.summary.alerts, run.summary.counts[4]);
    for (const auto& line : run.alerts) {
        EXPECT_EQ(parse_assessment(line).category, RiskCategory::VeryHigh);
    }
}

TEST(Runtime, ScoresAreQuantizedAndCategorized)
{
    const RunResult run = run_events(cohort(300), RuntimeConfig{});
    for (const auto& a : run.assessments) {
        EXPECT_DOUBLE_EQ(a.score, std::round(a.score * 100) / 100);
        EXPECT_EQ(category_for(risk_output(), a.score), a.category);
    }
}

TEST(Runtime, UnruledEventsUseTheFallback)
{
    const RunResult run = run_events(cohort(300), RuntimeConfig{}, builtin_model());
    EXPECT_GT(run.summary.unruled, 0u);
    std::uint64_t unruled = 0;
    for (const auto& a : run.assessments) {
        if (a.flags & kFlagUnruled) {
            ++unruled;
            EXPECT_TRUE(a.fired.empty());
            EXPECT_EQ(a.score, 50.0);
            EXPECT_EQ(a.category, RiskCategory::Medium);
        }
    }
    EXPECT_EQ(unruled, run.summary.unruled);
}

TEST(Runtime, EventTimeWindowsAndLateEvents)
{
    auto events = cohort(6);
    const std::int64_t ts[] = {100, 1200, 1300, 900, 3500, 2999};
    for (std::size_t i = 0; i < events.size(); ++i) {
        events[i].timestamp_ms = ts[i];
    }
    RuntimeConfig config;
    config.time_mode = TimeMode::Event;
    config.window = {1000, 0};
    const RunResult run = run_events(events, config, extended_model(), 0);
    EXPECT_EQ(run.summary.events_in, 4u);
    EXPECT_EQ(run.summary.late, 2u);
    EXPECT_EQ(run.summary.rejected, 2u);
    ASSERT_EQ(run.stats.size(), 4u); // windows 0..3, window 2 empty
    EXPECT_EQ(run.stats[0].events_in, 1u);
    EXPECT_EQ(run.stats[1].events_in, 2u);
    EXPECT_EQ(run.stats[2].events_in, 0u);
    EXPECT_EQ(run.stats[3].events_in, 1u);
}

TEST(Runtime, DeployBeforeStartTakesEffectImmediately)
{
    SimulatedClock clock;
    MemorySink stats;
    RuntimeConfig config;
    config.clock = &clock;
    config.stats = &stats;
    StreamRuntime runtime(builtin_model(), config);
    const auto receipt = runtime.deploy_rules(extended_model());
    EXPECT_EQ(receipt.version, 2);
    EXPECT_EQ(receipt.effective_window, 0);
    EXPECT_EQ(runtime.model_version(), 2);
    auto source = open_memory_source(cohort(100), 100, &clock);
    runtime.run(*source);
    for (const auto& line : stats.lines()) {
        EXPECT_EQ(parse_window_stats(line).rule_count, 1440u);
    }
}

TEST(Runtime, RejectedDeployment)
{
    SimulatedClock clock;
    RuntimeConfig config;
    config.clock = &clock;
    StreamRuntime runtime(builtin_model(), config);
    FuzzyModel bad = builtin_model();
    bad.rules[0].antecedent[0].term = "teenage";
    try {
        runtime.deploy_rules(bad);
        FAIL();
    } catch (const RejectedDeployment& ex) {
        EXPECT_FALSE(ex.diagnostics().empty());
    }
    FuzzyModel foreign = builtin_model();
    foreign.inputs[0].name = "shoe_size";
    for (auto& rule : foreign.rules) {
        rule.antecedent[0].variable = "shoe_size";
    }
    EXPECT_THROW(runtime.deploy_rules(foreign), RejectedDeployment);
    EXPECT_EQ(runtime.model_version(), 1);
    EXPECT_THROW(StreamRuntime(foreign, config), RejectedDeployment);
}

TEST(Runtime, SinkFailureAbortsTheRun)
{
    SimulatedClock clock;
    ThrowingSink sink(10);
    RuntimeConfig config;
    config.clock = &clock;
    config.assessments = &sink;
    StreamRuntime runtime(extended_model(), config);
    auto source = open_memory_source(cohort(1000), 0, nullptr, true);
    const RunSummary summary = runtime.run(*source);
    EXPECT_TRUE(summary.aborted);
    EXPECT_NE(summary.error.find("disk full"), std::string::npos);
    EXPECT_GE(summary.events_scored, 10u);
}

TEST(Runtime, StopEndsAnUnboundedRun)
{
    RealClock clock;
    RuntimeConfig config;
    config.clock = &clock;
    StreamRuntime runtime(extended_model(), config);
    auto source = open_memory_source(cohort(100), 0, nullptr, true);
    std::thread stopper([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(200));
        runtime.stop();
    });
    const RunSummary summary = runtime.run(*source);
    stopper.join();
    EXPECT_FALSE(summary.aborted);
    EXPECT_GT(summary.events_scored, 0u);
    EXPECT_EQ(summary.events_scored, runtime.events_scored());
}

TEST(Runtime, ProcessingTimeOnRealClockClosesIdleWindows)
{
    RealClock clock;
    MemorySink stats;
    RuntimeConfig config;
    config.clock = &clock;
    config.window = {100, 0};
    config.stats = &stats;
    StreamRuntime runtime(extended_model(), config);
    const auto events = cohort(3);
    auto source = open_memory_source(events, 10.0, &clock); // 300 ms of traffic
    const RunSummary summary = runtime.run(*source);
    EXPECT_EQ(summary.events_in, 3u);
    EXPECT_GE(summary.windows, 3u);
    std::uint64_t total = 0;
    for (const auto& line : stats.lines()) {
        total += parse_window_stats(line).events_in;
    }
    EXPECT_EQ(total, 3u);
}
