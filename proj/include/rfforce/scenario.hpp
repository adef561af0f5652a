#pragma once

// Declarative scenario file (JSON). Every key is optional and defaults to the
// values below; unknown keys are rejected with their full path.
//
// {
//   "seed": 1, "duration_s": 12, "epc": "E280...",
//   "sensor":   {"mode": "anchored-interpolation", "interpolation": "monotone-cubic",
//                "anchors_pf": [[0, 1.0], [6, 1.65]], "max_force_n": 6, "grid_points": 61,
//                "geometry": {"length_mm": 4, "width_mm": 2, "dielectric_thickness_mm": 0.2,
//                             "electrode_thickness_mm": 0.035},
//                "material": {"name": "ecoflex-00-30", "relative_permittivity": 2.8, "shear_modulus_kpa": 354.3}},
//   "line":     {"z0_ohm": 50, "frequency_mhz": 900},
//   "channel_plan": {"channel_count": 50, "first_mhz": 902.25, "spacing_mhz": 0.5,
//                    "hop_interval_s": 0.2, "hop_order": "shuffled-table"},
//   "reader":   {"reads_per_second": 90, "offset": {"mode": "uniform", "low_deg": 0, "high_deg": 360},
//                "flip_probability": 0.05, "phase_noise_sigma_deg": 2, "rssi_base_dbm": -55,
//                "rssi_force_dip_db": 1, "rssi_noise_sigma_db": 0.2},
//   "multipath": {"static_sigma_deg": 0, "dynamic_sigma_deg": 0, "dynamic_enabled": false},
//   "timeline": [[0, 0], [5, 6]],
//   "windows":  {"baseline_s": [0, 2], "event_s": [10, 12]}
// }

#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfforce/errors.hpp"
#include "rfforce/estimator.hpp"
#include "rfforce/link_sim.hpp"
#include "rfforce/sensor.hpp"
#include "rfforce/transduction.hpp"

namespace rfforce {

// Values are kept in the units of the file (mm, pF, MHz, kPa) so that
// parse -> serialize -> parse is exact; conversion to SI happens in the
// build_* accessors.
struct SensorConfig {
    curve_source mode = curve_source::anchored_interpolation;
    interpolation kind = interpolation::monotone_cubic;
    std::vector<std::pair<double, double>> anchors_pf{{0.0, 1.0}, {6.0, 1.65}};
    double max_force_n = 6.0;
    std::size_t grid_points = 61;
    double length_mm = 4.0;
    double width_mm = 2.0;
    double dielectric_thickness_mm = 0.2;
    double electrode_thickness_mm = 0.035;
    std::string material_name = "ecoflex-00-30";
    double relative_permittivity = 2.8;
    double shear_modulus_kpa = 354.3;
    bool operator==(const SensorConfig&) const = default;

    SensorGeometry geometry() const {
        return {length_mm * 1e-3, width_mm * 1e-3, dielectric_thickness_mm * 1e-3, electrode_thickness_mm * 1e-3};
    }
    MaterialSpec material() const { return {relative_permittivity, shear_modulus_kpa * 1e3, material_name}; }
    CurveRequest curve_request() const {
        CurveRequest req;
        req.mode = mode;
        req.kind = kind;
        req.anchors.clear();
        for (auto [f, c] : anchors_pf) req.anchors.push_back({f, c * 1e-12});
        return req;
    }
};

struct LineConfig {
    double z0_ohm = 50.0;
    double frequency_mhz = 900.0;
    bool operator==(const LineConfig&) const = default;
    LineSpec spec() const { return {z0_ohm, frequency_mhz * 1e6}; }
};

struct PlanConfig {
    int channel_count = 50;
    double first_mhz = 902.25;
    double spacing_mhz = 0.5;
    double hop_interval_s = 0.2;
    hop_order order = hop_order::shuffled_table;
    bool operator==(const PlanConfig&) const = default;
};

struct ScenarioConfig {
    std::uint64_t seed = 1;
    double duration = 12.0;
    SensorConfig sensor{};
    LineConfig line{};
    PlanConfig plan{};
    ReaderProfile reader{};
    MultipathModel multipath{};
    ForceTimeline timeline = ForceTimeline::step(0.0, 6.0, 5.0);
    TimeWindow baseline{0.0, 2.0};
    TimeWindow event{10.0, 12.0};

    ForceCapacitanceCurve build_curve() const {
        return build_capacitance_curve(sensor.geometry(), sensor.material(), sensor.curve_request(),
                                       uniform_force_grid(sensor.max_force_n, sensor.grid_points));
    }

    LineSpec build_line() const { return line.spec(); }

    ChannelPlan build_plan(std::uint64_t plan_seed) const {
        return ChannelPlan(channel_grid(plan.channel_count, plan.first_mhz * 1e6, plan.spacing_mhz * 1e6),
                           plan.hop_interval_s, plan.order, plan_seed);
    }
    ChannelPlan build_plan() const { return build_plan(seed); }

    std::vector<TagReadRecord> simulate(std::uint64_t run_seed) const {
        return simulate_trace(build_curve(), build_line(), build_plan(run_seed), reader, multipath, timeline, duration,
                              run_seed);
    }
};

inline bool operator==(const OffsetSpec& a, const OffsetSpec& b) {
    return a.mode == b.mode && a.low_deg == b.low_deg && a.high_deg == b.high_deg && a.values == b.values;
}

inline bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) {
    const auto& ra = a.reader;
    const auto& rb = b.reader;
    return a.seed == b.seed && a.duration == b.duration && a.sensor == b.sensor && a.line == b.line &&
           a.plan == b.plan && ra.reads_per_second == rb.reads_per_second &&
           ra.per_channel_offset == rb.per_channel_offset && ra.flip_probability == rb.flip_probability &&
           ra.phase_noise_sigma == rb.phase_noise_sigma && ra.rssi_base == rb.rssi_base &&
           ra.rssi_force_dip == rb.rssi_force_dip && ra.rssi_noise_sigma == rb.rssi_noise_sigma && ra.epc == rb.epc &&
           a.multipath.static_sigma_deg == b.multipath.static_sigma_deg &&
           a.multipath.static_offsets == b.multipath.static_offsets &&
           a.multipath.dynamic_sigma == b.multipath.dynamic_sigma &&
           a.multipath.dynamic_enabled == b.multipath.dynamic_enabled && a.timeline == b.timeline &&
           a.baseline.start == b.baseline.start && a.baseline.end == b.baseline.end &&
           a.event.start == b.event.start && a.event.end == b.event.end;
}

namespace detail {

// Typed accessor over one JSON object that records which keys were consumed.
class object_reader {
public:
    object_reader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw config_error(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    const nlohmann::json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    template <typename T>
    void get(const std::string& key, T& out) {
        if (!has(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw config_error(child_path(key), "wrong type");
        }
    }

    void number(const std::string& key, double& out, double scale = 1.0) {
        if (!has(key)) return;
        if (!j_.at(key).is_number()) throw config_error(child_path(key), "expected a number");
        out = j_.at(key).get<double>() * scale;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw config_error(child_path(it.key()), "unknown key");
        }
    }

private:
    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline std::vector<std::pair<double, double>> read_pairs(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array()) throw config_error(path, "expected an array of [a, b] pairs");
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& p = j[i];
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
            throw config_error(path + "[" + std::to_string(i) + "]", "expected [number, number]");
        }
        out.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    return out;
}

inline TimeWindow read_window(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw config_error(path, "expected [start, end]");
    }
    TimeWindow w{j[0].get<double>(), j[1].get<double>()};
    if (!(w.end > w.start)) throw config_error(path, "end must be > start");
    return w;
}

}  // namespace detail

inline ScenarioConfig scenario_from_json(const nlohmann::json& root) {
    using detail::object_reader;
    ScenarioConfig c;
    object_reader r(root, "");

    if (r.has("seed")) {
        const auto& s = r.raw("seed");
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
            throw config_error("seed", "expected a non-negative integer");
        }
        c.seed = s.get<std::uint64_t>();
    }
    r.number("duration_s", c.duration);
    r.get("epc", c.reader.epc);

    if (r.has("sensor")) {
        object_reader s(r.raw("sensor"), "sensor");
        std::string mode = to_string(c.sensor.mode);
        s.get("mode", mode);
        try {
            c.sensor.mode = parse_curve_source(mode);
        } catch (const input_error& e) {
            throw config_error("sensor.mode", e.what());
        }
        std::string interp = "monotone-cubic";
        s.get("interpolation", interp);
        if (interp == "monotone-cubic") c.sensor.kind = interpolation::monotone_cubic;
        else if (interp == "linear") c.sensor.kind = interpolation::linear;
        else throw config_error("sensor.interpolation", "expected monotone-cubic or linear");
        if (s.has("anchors_pf")) c.sensor.anchors_pf = detail::read_pairs(s.raw("anchors_pf"), "sensor.anchors_pf");
        s.number("max_force_n", c.sensor.max_force_n);
        if (s.has("grid_points")) {
            const auto& g = s.raw("grid_points");
            if (!g.is_number_integer() || g.get<long long>() < 2) throw config_error("sensor.grid_points", "expected an integer >= 2");
            c.sensor.grid_points = g.get<std::size_t>();
        }
        if (s.has("geometry")) {
            object_reader g(s.raw("geometry"), "sensor.geometry");
            g.number("length_mm", c.sensor.length_mm);
            g.number("width_mm", c.sensor.width_mm);
            g.number("dielectric_thickness_mm", c.sensor.dielectric_thickness_mm);
            g.number("electrode_thickness_mm", c.sensor.electrode_thickness_mm);
            g.finish();
        }
        if (s.has("material")) {
            object_reader m(s.raw("material"), "sensor.material");
            m.get("name", c.sensor.material_name);
            m.number("relative_permittivity", c.sensor.relative_permittivity);
            m.number("shear_modulus_kpa", c.sensor.shear_modulus_kpa);
            m.finish();
        }
        s.finish();
    }

    if (r.has("line")) {
        object_reader l(r.raw("line"), "line");
        l.number("z0_ohm", c.line.z0_ohm);
        l.number("frequency_mhz", c.line.frequency_mhz);
        l.finish();
    }

    if (r.has("channel_plan")) {
        object_reader p(r.raw("channel_plan"), "channel_plan");
        if (p.has("channel_count")) {
            const auto& n = p.raw("channel_count");
            if (!n.is_number_integer() || n.get<long long>() < 1) throw config_error("channel_plan.channel_count", "expected an integer >= 1");
            c.plan.channel_count = n.get<int>();
        }
        p.number("first_mhz", c.plan.first_mhz);
        p.number("spacing_mhz", c.plan.spacing_mhz);
        p.number("hop_interval_s", c.plan.hop_interval_s);
        std::string order = to_string(c.plan.order);
        p.get("hop_order", order);
        try {
            c.plan.order = parse_hop_order(order);
        } catch (const input_error& e) {
            throw config_error("channel_plan.hop_order", e.what());
        }
        p.finish();
    }

    if (r.has("reader")) {
        object_reader p(r.raw("reader"), "reader");
        p.number("reads_per_second", c.reader.reads_per_second);
        if (p.has("offset")) {
            object_reader o(p.raw("offset"), "reader.offset");
            std::string mode = "uniform";
            o.get("mode", mode);
            if (mode == "uniform") {
                c.reader.per_channel_offset.mode = OffsetSpec::kind::uniform;
                o.number("low_deg", c.reader.per_channel_offset.low_deg);
                o.number("high_deg", c.reader.per_channel_offset.high_deg);
            } else if (mode == "fixed") {
                c.reader.per_channel_offset = OffsetSpec::zero();
                o.get("values_deg", c.reader.per_channel_offset.values);
            } else {
                throw config_error("reader.offset.mode", "expected uniform or fixed");
            }
            o.finish();
        }
        p.number("flip_probability", c.reader.flip_probability);
        p.number("phase_noise_sigma_deg", c.reader.phase_noise_sigma);
        p.number("rssi_base_dbm", c.reader.rssi_base);
        p.number("rssi_force_dip_db", c.reader.rssi_force_dip);
        p.number("rssi_noise_sigma_db", c.reader.rssi_noise_sigma);
        p.finish();
    }

    if (r.has("multipath")) {
        object_reader m(r.raw("multipath"), "multipath");
        m.number("static_sigma_deg", c.multipath.static_sigma_deg);
        m.get("static_offsets_deg", c.multipath.static_offsets);
        m.number("dynamic_sigma_deg", c.multipath.dynamic_sigma);
        m.get("dynamic_enabled", c.multipath.dynamic_enabled);
        m.finish();
    }

    if (r.has("timeline")) {
        std::vector<ForceBreakpoint> pts;
        for (auto [t, f] : detail::read_pairs(r.raw("timeline"), "timeline")) pts.push_back({t, f});
        try {
            c.timeline = ForceTimeline(std::move(pts));
        } catch (const input_error& e) {
            throw config_error("timeline", e.what());
        }
    }

    if (r.has("windows")) {
        object_reader w(r.raw("windows"), "windows");
        if (w.has("baseline_s")) c.baseline = detail::read_window(w.raw("baseline_s"), "windows.baseline_s");
        if (w.has("event_s")) c.event = detail::read_window(w.raw("event_s"), "windows.event_s");
        w.finish();
    }
    r.finish();

    // Semantic checks, reported against the owning section.
    auto check = [](const char* path, auto&& fn) {
        try {
            fn();
        } catch (const input_error& e) {
            throw config_error(path, e.what());
        }
    };
    if (!(c.duration >= 0.0)) throw config_error("duration_s", "must be >= 0");
    check("sensor", [&] { c.build_curve(); });
    check("line", [&] { c.build_line().validate(); });
    check("channel_plan", [&] { c.build_plan(); });
    check("reader", [&] { c.reader.validate(); });
    check("multipath", [&] { c.multipath.validate(); });
    return c;
}

inline nlohmann::json to_json(const ScenarioConfig& c) {
    using nlohmann::json;
    json anchors = json::array();
    for (auto [f, cap] : c.sensor.anchors_pf) anchors.push_back({f, cap});
    json timeline = json::array();
    for (const auto& b : c.timeline.breakpoints()) timeline.push_back({b.time, b.force});

    json offset;
    if (c.reader.per_channel_offset.mode == OffsetSpec::kind::uniform) {
        offset = {{"mode", "uniform"},
                  {"low_deg", c.reader.per_channel_offset.low_deg},
                  {"high_deg", c.reader.per_channel_offset.high_deg}};
    } else {
        offset = {{"mode", "fixed"}, {"values_deg", c.reader.per_channel_offset.values}};
    }

    return {
        {"seed", c.seed},
        {"duration_s", c.duration},
        {"epc", c.reader.epc},
        {"sensor",
         {{"mode", to_string(c.sensor.mode)},
          {"interpolation", c.sensor.kind == interpolation::linear ? "linear" : "monotone-cubic"},
          {"anchors_pf", anchors},
          {"max_force_n", c.sensor.max_force_n},
          {"grid_points", c.sensor.grid_points},
          {"geometry",
           {{"length_mm", c.sensor.length_mm},
            {"width_mm", c.sensor.width_mm},
            {"dielectric_thickness_mm", c.sensor.dielectric_thickness_mm},
            {"electrode_thickness_mm", c.sensor.electrode_thickness_mm}}},
          {"material",
           {{"name", c.sensor.material_name},
            {"relative_permittivity", c.sensor.relative_permittivity},
            {"shear_modulus_kpa", c.sensor.shear_modulus_kpa}}}}},
        {"line", {{"z0_ohm", c.line.z0_ohm}, {"frequency_mhz", c.line.frequency_mhz}}},
        {"channel_plan",
         {{"channel_count", c.plan.channel_count},
          {"first_mhz", c.plan.first_mhz},
          {"spacing_mhz", c.plan.spacing_mhz},
          {"hop_interval_s", c.plan.hop_interval_s},
          {"hop_order", to_string(c.plan.order)}}},
        {"reader",
         {{"reads_per_second", c.reader.reads_per_second},
          {"offset", offset},
          {"flip_probability", c.reader.flip_probability},
          {"phase_noise_sigma_deg", c.reader.phase_noise_sigma},
          {"rssi_base_dbm", c.reader.rssi_base},
          {"rssi_force_dip_db", c.reader.rssi_force_dip},
          {"rssi_noise_sigma_db", c.reader.rssi_noise_sigma}}},
        {"multipath",
         {{"static_sigma_deg", c.multipath.static_sigma_deg},
          {"static_offsets_deg", c.multipath.static_offsets},
          {"dynamic_sigma_deg", c.multipath.dynamic_sigma},
          {"dynamic_enabled", c.multipath.dynamic_enabled}}},
        {"timeline", timeline},
        {"windows", {{"baseline_s", {c.baseline.start, c.baseline.end}}, {"event_s", {c.event.start, c.event.end}}}},
    };
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error(path, "cannot open config file");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw config_error(path, std::string("not valid JSON: ") + e.what());
    }
    return scenario_from_json(j);
}

}  // namespace rfforce
