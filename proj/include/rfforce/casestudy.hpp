#pragma once

// Scenario drivers built on the simulator and estimator: step detection for
// multi-level force profiles, the item-counting classifier, the staircase
// profile, and seeded Monte-Carlo accuracy trials.

#include <algorithm>
#include <cmath>
#include <span>
#include <random>
#include <limits>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfforce/estimator.hpp"
#include "rfforce/link_sim.hpp"
#include "rfforce/scenario.hpp"

namespace rfforce {

// ---------------------------------------------------------------------------
// Step detection

struct StepDetectorOptions {
    double min_jump_deg = 5.0;
    std::size_t window_reads = 90;     // reads on each side of a candidate change
    std::size_t reference_reads = 10;  // leading reads per channel averaged into its reference
    double jump_threshold_deg = default_jump_threshold_deg;
};

struct DetectedStep {
    double time;
    double jump_deg;
};

namespace detail {
inline double median_of(std::vector<double> v) {
    const std::size_t m = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m), v.end());
    double hi = v[m];
    if (v.size() % 2) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m));
    return 0.5 * (lo + hi);
}
}  // namespace detail

/// Moving-median change-point detector on the offset-free phase stream. Every
/// read is expressed relative to the first read of its channel (after
/// de-flipping and half-turn folding), which removes the per-hop offsets and
/// leaves one stream of sensor phase changes. A step is reported where the
/// medians of the `window_reads` reads before and after a point differ by at
/// least `min_jump_deg`; candidates closer than one window belong to the same
/// step, which is placed at the strongest of them.
inline std::vector<DetectedStep> detect_steps(std::span<const TagReadRecord> trace, const std::string& epc,
                                              const StepDetectorOptions& options = {}) {
    if (options.window_reads < 1) throw input_error("detect_steps: window_reads must be >= 1");
    struct Point {
        double t;
        double rel;
    };
    std::vector<Point> stream;
    for (const auto& series : group_by_channel(trace, epc)) {
        const auto clean = deflip_180(series, options.jump_threshold_deg);
        if (clean.samples.empty()) continue;
        const double first = clean.samples.front().phase_deg;
        const std::size_t n_ref = std::min(options.reference_reads, clean.samples.size());
        double acc = 0.0;
        for (std::size_t k = 0; k < n_ref; ++k) acc += fold90(wrap180(clean.samples[k].phase_deg - first));
        const double ref = first + acc / static_cast<double>(n_ref);
        for (const auto& s : clean.samples) stream.push_back({s.timestamp, fold90(wrap180(s.phase_deg - ref))});
    }
    std::sort(stream.begin(), stream.end(), [](const Point& a, const Point& b) { return a.t < b.t; });

    const std::size_t w = options.window_reads;
    std::vector<DetectedStep> steps;
    if (stream.size() < 2 * w) return steps;

    std::optional<DetectedStep> best;
    std::size_t last_candidate = 0;
    for (std::size_t i = w; i + w <= stream.size(); ++i) {
        std::vector<double> before, after;
        before.reserve(w);
        after.reserve(w);
        for (std::size_t k = i - w; k < i; ++k) before.push_back(stream[k].rel);
        for (std::size_t k = i; k < i + w; ++k) after.push_back(stream[k].rel);
        const double jump = detail::median_of(after) - detail::median_of(before);
        if (std::abs(jump) < options.min_jump_deg) continue;
        const double t = 0.5 * (stream[i - 1].t + stream[i].t);
        if (best && i - last_candidate > w) {
            steps.push_back(*best);
            best.reset();
        }
        if (!best || std::abs(jump) > std::abs(best->jump_deg)) best = DetectedStep{t, jump};
        last_candidate = i;
    }
    if (best) steps.push_back(*best);
    return steps;
}

// ---------------------------------------------------------------------------
// Trial protocol shared by the accuracy suites and the box study: zero force,
// a step at `step_time`, and baseline/event windows one hop cycle apart so
// both windows visit the same channels of a shuffled hop table.

struct StepTrial {
    double step_time = 5.0;
    TimeWindow baseline{0.0, 2.0};
    TimeWindow event{10.0, 12.0};
    double duration = 12.0;
};

inline ScenarioConfig step_trial_scenario(const ScenarioConfig& base, const StepTrial& trial, double force) {
    ScenarioConfig c = base;
    c.timeline = ForceTimeline::step(0.0, force, trial.step_time);
    c.baseline = trial.baseline;
    c.event = trial.event;
    c.duration = trial.duration;
    return c;
}

struct TrialResult {
    double true_force;
    std::optional<ForceEstimate> estimate;
    std::string failure;

    double abs_error() const {
        return estimate ? std::abs(estimate->force_n - true_force) : std::numeric_limits<double>::infinity();
    }
};

/// One seeded trial: simulate the step, estimate with `calibration`.
inline TrialResult run_step_trial(const ScenarioConfig& base, const StepTrial& trial, const CalibrationModel& calibration,
                                  double force, std::uint64_t seed, const EstimateOptions& options = {}) {
    const ScenarioConfig c = step_trial_scenario(base, trial, force);
    const auto records = c.simulate(seed);
    TrialResult r{force, std::nullopt, {}};
    try {
        r.estimate = estimate_force(records, c.reader.epc, calibration, c.baseline, c.event, options);
    } catch (const estimation_error& e) {
        r.failure = e.what();
    }
    return r;
}

struct AccuracySummary {
    std::vector<TrialResult> trials;
    double median_abs_error = 0.0;
    double p95_abs_error = 0.0;
    std::size_t failures = 0;
};

/// Forces drawn uniformly on [0, max force] from a stream derived from `seed`;
/// trial i simulates with seed mix_seed(seed, i).
inline AccuracySummary accuracy_suite(const ScenarioConfig& base, const StepTrial& trial,
                                      const CalibrationModel& calibration, std::size_t trials, std::uint64_t seed,
                                      const EstimateOptions& options = {}) {
    AccuracySummary s;
    std::mt19937_64 rng(mix_seed(seed, 0xF0C5));
    std::uniform_real_distribution<double> force(0.0, base.sensor.max_force_n);
    std::vector<double> errors;
    for (std::size_t i = 0; i < trials; ++i) {
        const double f = force(rng);
        s.trials.push_back(run_step_trial(base, trial, calibration, f, mix_seed(seed, i), options));
        errors.push_back(s.trials.back().abs_error());
        if (!s.trials.back().estimate) ++s.failures;
    }
    std::sort(errors.begin(), errors.end());
    if (!errors.empty()) {
        s.median_abs_error = errors.size() % 2 ? errors[errors.size() / 2]
                                               : 0.5 * (errors[errors.size() / 2 - 1] + errors[errors.size() / 2]);
        s.p95_abs_error = errors[std::min(errors.size() - 1, static_cast<std::size_t>(0.95 * errors.size()))];
    }
    return s;
}

// ---------------------------------------------------------------------------
// Box study: classify how many identical items rest on the sensor.

struct ClassificationReport {
    std::vector<double> class_forces;
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
    double accuracy = 0.0;
    std::size_t trials = 0;
    std::vector<double> estimates;
};

struct BoxStudy {
    double item_force = 2.0;
    int max_items = 3;
    std::size_t trials = 160;
    StepTrial protocol{};
};

inline ClassificationReport casestudy_box(const ScenarioConfig& base, const CalibrationModel& calibration,
                                          const BoxStudy& study, std::uint64_t seed) {
    if (study.trials < 1) throw input_error("casestudy-box: trials must be >= 1");
    if (study.max_items < 1) throw input_error("casestudy-box: max_items must be >= 1");
    if (!(study.item_force > 0.0)) throw input_error("casestudy-box: item_force must be > 0");
    const auto classes = static_cast<std::size_t>(study.max_items + 1);
    ClassificationReport rep;
    for (std::size_t k = 0; k < classes; ++k) rep.class_forces.push_back(study.item_force * static_cast<double>(k));
    rep.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
    rep.trials = study.trials;

    EstimateOptions options;
    options.extrapolation_margin_deg = 5.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < study.trials; ++i) {
        const std::size_t truth = i % classes;
        const auto r = run_step_trial(base, study.protocol, calibration, rep.class_forces[truth], mix_seed(seed, i), options);
        std::size_t predicted = 0;
        if (r.estimate) {
            const double f = r.estimate->force_n;
            rep.estimates.push_back(f);
            for (std::size_t k = 1; k < classes; ++k) {
                if (std::abs(f - rep.class_forces[k]) < std::abs(f - rep.class_forces[predicted])) predicted = k;
            }
        } else {
            rep.estimates.push_back(std::numeric_limits<double>::quiet_NaN());
            predicted = truth == 0 ? classes - 1 : 0;  // count a failed estimate as wrong
        }
        ++rep.confusion[truth][predicted];
        if (predicted == truth) ++correct;
    }
    rep.accuracy = static_cast<double>(correct) / static_cast<double>(study.trials);
    return rep;
}

inline nlohmann::json to_json(const ClassificationReport& r) {
    return {{"class_forces_n", r.class_forces},
            {"confusion_matrix", r.confusion},
            {"accuracy", r.accuracy},
            {"trials", r.trials}};
}

// ---------------------------------------------------------------------------
// Staircase study: hold 0 N, then step up through `levels`, each held for
// `hold` seconds. With a preload the whole profile rides on that constant
// force and the reported values are absolute (preload included).

struct StaircaseStudy {
    std::vector<double> levels{1.0, 3.0, 5.0};
    double hold = 20.0;
    double preload = 0.0;
    double guard = 1.0;  // seconds trimmed on each side of a detected step
    StepDetectorOptions detector{2.0, 90, 10, default_jump_threshold_deg};
};

struct PlateauEstimate {
    double start;
    double end;
    double true_force;
    ForceEstimate estimate;
};

struct StaircaseResult {
    std::vector<DetectedStep> steps;
    std::vector<PlateauEstimate> plateaus;
    bool ok = false;
    std::string diagnostic;
};

inline ForceTimeline staircase_timeline(const StaircaseStudy& study) {
    std::vector<ForceBreakpoint> pts{{0.0, study.preload}};
    for (std::size_t i = 0; i < study.levels.size(); ++i) {
        pts.push_back({study.hold * static_cast<double>(i + 1), study.preload + study.levels[i]});
    }
    return ForceTimeline(std::move(pts));
}

inline StaircaseResult casestudy_step(const ScenarioConfig& base, const CalibrationModel& calibration,
                                      const StaircaseStudy& study, std::uint64_t seed) {
    ScenarioConfig c = base;
    c.timeline = staircase_timeline(study);
    c.duration = study.hold * static_cast<double>(study.levels.size() + 1);
    const auto records = c.simulate(seed);

    StaircaseResult res;
    res.steps = detect_steps(records, c.reader.epc, study.detector);
    if (res.steps.size() != study.levels.size()) {
        res.diagnostic = "step detector found " + std::to_string(res.steps.size()) + " steps, expected " +
                         std::to_string(study.levels.size());
        return res;
    }

    // Phase change from zero force to the preload, so that jumps measured
    // against the preloaded baseline can be expressed from zero.
    const double preload_phase = study.preload > 0.0 ? calibration.phase_for_force(study.preload) : 0.0;

    const TimeWindow baseline{0.0, res.steps.front().time - study.guard};
    EstimateOptions options;
    options.extrapolation_margin_deg = 5.0;
    for (std::size_t i = 0; i < res.steps.size(); ++i) {
        const double start = res.steps[i].time + study.guard;
        const double end = (i + 1 < res.steps.size() ? res.steps[i + 1].time : c.duration) - study.guard;
        if (!(end > start) || !(baseline.end > baseline.start)) {
            res.diagnostic = "plateau " + std::to_string(i) + " too short after guard trimming";
            return res;
        }
        ForceEstimate e = estimate_force(records, c.reader.epc, calibration, baseline, {start, end}, options);
        const double absolute_jump = e.phase_jump_deg + preload_phase;
        e.phase_jump_deg = absolute_jump;
        e.force_n = calibration.force(absolute_jump);
        e.resolution_n = std::abs(calibration.slope(absolute_jump)) * e.phase_jump_std_deg /
                         std::sqrt(static_cast<double>(e.channels_used));
        res.plateaus.push_back({start, end, study.preload + study.levels[i], e});
    }
    res.ok = true;
    return res;
}

inline nlohmann::json to_json(const StaircaseResult& r) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : r.steps) steps.push_back({{"time_s", s.time}, {"jump_deg", s.jump_deg}});
    nlohmann::json plateaus = nlohmann::json::array();
    for (const auto& p : r.plateaus) {
        nlohmann::json e = to_json(p.estimate);
        e["start_s"] = p.start;
        e["end_s"] = p.end;
        e["applied_force_n"] = p.true_force;
        plateaus.push_back(e);
    }
    nlohmann::json j{{"steps", steps}, {"plateaus", plateaus}, {"ok", r.ok}};
    if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
    return j;
}

}  // namespace rfforce
