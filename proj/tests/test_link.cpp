// Channel plans, the link simulator, trace I/O and scenario configs.

#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "rfforce/rfforce.hpp"

using namespace rfforce;

namespace {

ScenarioConfig quiet_config() {
    ScenarioConfig c;
    c.reader = ReaderProfile::ideal();
    return c;
}

std::string to_jsonl(const std::vector<TagReadRecord>& r) {
    std::ostringstream ss;
    write_trace_jsonl(ss, r);
    return ss.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// channel plan

TEST(ChannelPlan, DefaultPlanGrid) {
    const auto plan = default_channel_plan(1);
    ASSERT_EQ(plan.channel_count(), 50);
    EXPECT_DOUBLE_EQ(plan.frequency(0), 902.25e6);
    EXPECT_DOUBLE_EQ(plan.frequency(49), 926.75e6);
    EXPECT_DOUBLE_EQ(plan.hop_interval(), 0.2);
}

TEST(ChannelPlan, ShuffledTableIsPermutationAndRepeats) {
    const auto plan = default_channel_plan(9);
    std::set<int> seen(plan.hop_table().begin(), plan.hop_table().end());
    EXPECT_EQ(seen.size(), 50u);
    for (std::int64_t h = 0; h < 200; ++h) EXPECT_EQ(plan.channel_for_hop(h), plan.channel_for_hop(h + 50));
    EXPECT_EQ(plan.channel_at(0.19), plan.hop_table()[0]);
    EXPECT_EQ(plan.channel_at(0.2), plan.hop_table()[1]);
    EXPECT_EQ(default_channel_plan(9), plan);
    EXPECT_FALSE(default_channel_plan(10) == plan);
}

TEST(ChannelPlan, SequentialAndPerCycle) {
    ChannelPlan seq(channel_grid(5, 900e6, 1e6), 0.1, hop_order::sequential, 0);
    for (int h = 0; h < 12; ++h) EXPECT_EQ(seq.channel_for_hop(h), h % 5);
    ChannelPlan pc(channel_grid(20, 900e6, 1e6), 0.1, hop_order::shuffled_per_cycle, 4);
    std::set<int> cycle1;
    bool differs = false;
    for (int h = 20; h < 40; ++h) {
        cycle1.insert(pc.channel_for_hop(h));
        differs |= pc.channel_for_hop(h) != pc.channel_for_hop(h - 20);
    }
    EXPECT_EQ(cycle1.size(), 20u);
    EXPECT_TRUE(differs);
}

TEST(ChannelPlan, Validation) {
    EXPECT_THROW(ChannelPlan({}, 0.2, hop_order::sequential, 0), input_error);
    EXPECT_THROW(ChannelPlan({2e6, 1e6}, 0.2, hop_order::sequential, 0), input_error);
    EXPECT_THROW(ChannelPlan({1e6}, 0.0, hop_order::sequential, 0), input_error);
    EXPECT_THROW(parse_hop_order("random"), input_error);
    EXPECT_EQ(parse_hop_order(to_string(hop_order::shuffled_per_cycle)), hop_order::shuffled_per_cycle);
}

TEST(Timeline, StepHold) {
    const auto tl = ForceTimeline::step(0.0, 6.0, 5.0);
    EXPECT_EQ(tl.force_at(4.999), 0.0);
    EXPECT_EQ(tl.force_at(5.0), 6.0);
    EXPECT_THROW(tl.force_at(-1.0), simulation_error);
    EXPECT_THROW(ForceTimeline({{0, 0}, {0, 1}}), input_error);
    EXPECT_THROW(ForceTimeline(std::vector<ForceBreakpoint>{}), input_error);
}

// ---------------------------------------------------------------------------
// simulator

TEST(Simulator, NoiselessReadsMatchModel) {
    auto c = quiet_config();
    const auto trace = c.simulate(5);
    ASSERT_FALSE(trace.empty());
    const auto curve = c.build_curve();
    for (const auto& r : trace) {
        const double expected = reflect_phase(curve.at(c.timeline.force_at(r.timestamp)), LineSpec{50, r.frequency});
        ASSERT_NEAR(r.phase_deg, expected, 1e-6);
        ASSERT_EQ(r.epc, default_epc);
        ASSERT_EQ(r.channel_index, c.build_plan(5).channel_at(r.timestamp));
    }
}

TEST(Simulator, ReadRateAndOrdering) {
    auto c = quiet_config();
    c.duration = 100.0;
    c.timeline = ForceTimeline::constant(0.0);
    const auto trace = c.simulate(77);
    EXPECT_NEAR(static_cast<double>(trace.size()) / 100.0, 90.0, 3.0);
    for (std::size_t i = 1; i < trace.size(); ++i) ASSERT_GT(trace[i].timestamp, trace[i - 1].timestamp);
    for (const auto& r : trace) {
        ASSERT_GE(r.phase_deg, 0.0);
        ASSERT_LT(r.phase_deg, 360.0);
    }
}

TEST(Simulator, EdgeCases) {
    auto c = quiet_config();
    c.duration = 0.0;
    EXPECT_TRUE(c.simulate(1).empty());
    c.duration = 12.0;
    c.timeline = ForceTimeline::step(0.0, 7.0, 5.0);
    try {
        c.simulate(1);
        FAIL();
    } catch (const simulation_error& e) {
        EXPECT_EQ(e.timestamp(), 5.0);
    }
    c.timeline = ForceTimeline({{1.0, 0.0}});
    EXPECT_THROW(c.simulate(1), simulation_error);
    c = quiet_config();
    c.reader.reads_per_second = 0.0;
    EXPECT_THROW(c.simulate(1), input_error);
}

TEST(Simulator, SeedDeterminism) {
    ScenarioConfig c;
    EXPECT_EQ(to_jsonl(c.simulate(3)), to_jsonl(c.simulate(3)));
    EXPECT_NE(to_jsonl(c.simulate(3)), to_jsonl(c.simulate(4)));
}

TEST(Simulator, SourcesUseIndependentStreams) {
    // Turning read noise off leaves arrival times and channels untouched.
    ScenarioConfig a;
    ScenarioConfig b = a;
    b.reader.phase_noise_sigma = 0.0;
    const auto ta = a.simulate(8), tb = b.simulate(8);
    ASSERT_EQ(ta.size(), tb.size());
    for (std::size_t i = 0; i < ta.size(); ++i) {
        ASSERT_EQ(ta[i].timestamp, tb[i].timestamp);
        ASSERT_EQ(ta[i].channel_index, tb[i].channel_index);
        ASSERT_EQ(ta[i].rssi_dbm, tb[i].rssi_dbm);
    }
}

TEST(Simulator, FlipsAreHalfTurnsLatchedPerHop) {
    auto c = quiet_config();
    c.reader.flip_probability = 0.5;
    c.timeline = ForceTimeline::constant(0.0);
    const auto trace = c.simulate(12);
    const auto plan = c.build_plan(12);
    std::size_t flipped = 0;
    std::map<std::int64_t, std::set<bool>> per_hop;
    for (const auto& r : trace) {
        const double clean = reflect_phase(1e-12, LineSpec{50, r.frequency});
        const double d = std::abs(wrap180(r.phase_deg - clean));
        ASSERT_TRUE(d < 1e-6 || std::abs(d - 180.0) < 1e-6);
        per_hop[plan.hop_index(r.timestamp)].insert(d > 90.0);
        flipped += d > 90.0;
    }
    for (const auto& [hop, states] : per_hop) ASSERT_EQ(states.size(), 1u) << "hop " << hop;
    EXPECT_GT(flipped, trace.size() / 5);
}

TEST(Simulator, RssiDipFollowsForce) {
    auto c = quiet_config();
    const auto trace = c.simulate(2);
    for (const auto& r : trace) {
        const double expected = -55.0 - 1.0 * c.timeline.force_at(r.timestamp) / 6.0;
        ASSERT_DOUBLE_EQ(r.rssi_dbm, expected);
    }
}

TEST(Simulator, FixedOffsetsAreApplied) {
    auto c = quiet_config();
    std::vector<double> offs(50);
    for (int k = 0; k < 50; ++k) offs[static_cast<std::size_t>(k)] = 7.0 * k;
    c.reader.per_channel_offset = OffsetSpec::fixed_values(offs);
    const auto trace = c.simulate(6);
    const auto curve = c.build_curve();
    for (const auto& r : trace) {
        const double base = reflect_phase(curve.at(c.timeline.force_at(r.timestamp)), LineSpec{50, r.frequency});
        ASSERT_NEAR(wrap180(r.phase_deg - base - 7.0 * r.channel_index), 0.0, 1e-6);
    }
    c.reader.per_channel_offset = OffsetSpec::fixed_values({1.0, 2.0});
    EXPECT_THROW(c.simulate(6), input_error);
}

// ---------------------------------------------------------------------------
// trace I/O

TEST(TraceIo, JsonlAndCsvRoundTrip) {
    ScenarioConfig c;
    c.duration = 3.0;
    const auto trace = c.simulate(21);
    std::stringstream j, s;
    write_trace_jsonl(j, trace);
    write_trace_csv(s, trace);
    EXPECT_EQ(read_trace(j), trace);
    EXPECT_EQ(read_trace(s), trace);
    std::stringstream empty;
    EXPECT_TRUE(read_trace(empty).empty());
}

TEST(TraceIo, Raw4096ImportAndAliases) {
    std::stringstream in(
        "Timestamp,EPC,Channel,Phase_Raw,RSSI\n"
        "0.5,ABC,3,2048,-50\n"
        "0.25,ABC,1,1024,-51\n");
    const auto r = import_reader_trace(in, phase_units::raw4096);
    ASSERT_EQ(r.size(), 2u);
    EXPECT_EQ(r[0].timestamp, 0.25);
    EXPECT_EQ(r[0].phase_deg, 90.0);
    EXPECT_EQ(r[1].phase_deg, 180.0);
    EXPECT_EQ(r[1].frequency, default_channel_plan().frequency(3));
}

TEST(TraceIo, ImportErrorsCarryLineNumbers) {
    auto line_of = [](const std::string& text, phase_units u) -> std::size_t {
        std::stringstream in(text);
        try {
            import_reader_trace(in, u);
        } catch (const import_error& e) {
            return e.line();
        }
        return 0;
    };
    EXPECT_EQ(line_of("t,epc,ch,phase_deg,rssi\n0,A,1,10,-50\n1,A,1,400,-50\n", phase_units::deg), 3u);
    EXPECT_EQ(line_of("t,epc,ch,phase_deg,rssi\n0,A,1,10\n", phase_units::deg), 2u);
    EXPECT_EQ(line_of("t,epc,ch,phase_deg,rssi\n0,A,x,10,-50\n", phase_units::deg), 2u);
    EXPECT_EQ(line_of("t,epc,phase_deg,rssi\n", phase_units::deg), 1u);
    EXPECT_EQ(line_of("t,epc,ch,phase,rssi\n0,A,1,4096,-50\n", phase_units::raw4096), 2u);
    EXPECT_EQ(line_of("", phase_units::deg), 1u);
    std::stringstream bad("{\"t\":1}\n");
    EXPECT_THROW(read_trace(bad), import_error);
}

// ---------------------------------------------------------------------------
// scenario config

TEST(Scenario, DefaultsRoundTrip) {
    const ScenarioConfig c;
    const auto j = to_json(c);
    EXPECT_TRUE(scenario_from_json(j) == c);
    EXPECT_EQ(to_json(scenario_from_json(j)).dump(), j.dump());
    EXPECT_TRUE(scenario_from_json(nlohmann::json::object()) == c);
}

TEST(Scenario, CustomValuesRoundTrip) {
    const auto j = nlohmann::json::parse(R"({
        "seed": 99, "duration_s": 30,
        "sensor": {"mode": "hyperelastic", "interpolation": "linear", "grid_points": 31},
        "channel_plan": {"channel_count": 10, "hop_order": "sequential"},
        "reader": {"offset": {"mode": "fixed", "values_deg": [0,1,2,3,4,5,6,7,8,9]}, "flip_probability": 0},
        "multipath": {"dynamic_sigma_deg": 5, "dynamic_enabled": true},
        "timeline": [[0, 0], [10, 3], [20, 6]],
        "windows": {"baseline_s": [0, 5], "event_s": [25, 30]}})");
    const auto c = scenario_from_json(j);
    EXPECT_EQ(c.seed, 99u);
    EXPECT_EQ(c.sensor.mode, curve_source::hyperelastic);
    EXPECT_EQ(c.plan.channel_count, 10);
    EXPECT_EQ(c.timeline.force_at(15.0), 3.0);
    EXPECT_EQ(c.event.start, 25.0);
    EXPECT_TRUE(scenario_from_json(to_json(c)) == c);
}

TEST(Scenario, ErrorsNameTheKeyPath) {
    auto path_of = [](const char* text) -> std::string {
        try {
            scenario_from_json(nlohmann::json::parse(text));
        } catch (const config_error& e) {
            return e.path();
        }
        return "";
    };
    EXPECT_EQ(path_of(R"({"sensor": {"geometry": {"lenght_mm": 4}}})"), "sensor.geometry.lenght_mm");
    EXPECT_EQ(path_of(R"({"bogus": 1})"), "bogus");
    EXPECT_EQ(path_of(R"({"seed": -1})"), "seed");
    EXPECT_EQ(path_of(R"({"line": {"z0_ohm": "fifty"}})"), "line.z0_ohm");
    EXPECT_EQ(path_of(R"({"line": {"z0_ohm": -50}})"), "line");
    EXPECT_EQ(path_of(R"({"windows": {"event_s": [5, 1]}})"), "windows.event_s");
    EXPECT_EQ(path_of(R"({"channel_plan": {"hop_order": "zigzag"}})"), "channel_plan.hop_order");
    EXPECT_EQ(path_of(R"({"timeline": [[0, 0], [0, 1]]})"), "timeline");
    EXPECT_EQ(path_of(R"({"sensor": {"anchors_pf": [[0, 2], [6, 3]]}})"), "sensor");
    EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), config_error);
}
