#pragma once

// Reader-side force estimation from hopping phase reports:
//
//   group_by_channel -> deflip_180 -> per_channel_diff -> average_across_channels
//                    -> CalibrationModel (phase change -> force)
//
// Each channel carries an unknown constant offset after every hop, so only
// differences taken on the same channel are meaningful. The sensor shifts all
// channels by (nearly) the same amount while dynamic multipath perturbs each
// channel independently; averaging across channels keeps the former.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "rfforce/angles.hpp"
#include "rfforce/errors.hpp"
#include "rfforce/format.hpp"
#include "rfforce/link_sim.hpp"

namespace rfforce {

struct PhaseSample {
    double timestamp;
    double phase_deg;
    bool operator==(const PhaseSample&) const = default;
};

struct ChannelSeries {
    int channel_index = 0;
    std::vector<PhaseSample> samples;
    bool operator==(const ChannelSeries&) const = default;
};

/// Half-open time interval [start, end).
struct TimeWindow {
    double start;
    double end;

    bool contains(double t) const { return t >= start && t < end; }
    void validate(const char* what) const {
        if (!(end > start)) throw input_error(std::string(what) + " window must have end > start");
    }
};

/// One series per channel index present, ascending by channel, reads in input order.
inline std::vector<ChannelSeries> group_by_channel(std::span<const TagReadRecord> records, const std::string& epc) {
    std::map<int, ChannelSeries> by_channel;
    for (const auto& r : records) {
        if (r.epc != epc) continue;
        auto& s = by_channel[r.channel_index];
        s.channel_index = r.channel_index;
        if (!s.samples.empty() && !(r.timestamp > s.samples.back().timestamp)) {
            throw model_error("channel " + std::to_string(r.channel_index) + ": timestamps not strictly increasing at t=" +
                              format_double(r.timestamp));
        }
        s.samples.push_back({r.timestamp, r.phase_deg});
    }
    std::vector<ChannelSeries> out;
    out.reserve(by_channel.size());
    for (auto& [ch, s] : by_channel) out.push_back(std::move(s));
    return out;
}

inline constexpr double default_jump_threshold_deg = 170.0;

/// Removes latched 180 degree reader artifacts. A consecutive circular jump
/// larger than `threshold` toggles a half-turn correction applied to the rest
/// of the series. The threshold must exceed any force-induced jump.
inline ChannelSeries deflip_180(const ChannelSeries& series, double threshold = default_jump_threshold_deg) {
    if (!(threshold > 20.0 && threshold < 180.0)) throw input_error("deflip_180: threshold must be in (20, 180) degrees");
    ChannelSeries out{series.channel_index, {}};
    out.samples.reserve(series.samples.size());
    double correction = 0.0;
    for (const auto& s : series.samples) {
        double phase = wrap360(s.phase_deg - correction);
        if (!out.samples.empty() && std::abs(wrap180(phase - out.samples.back().phase_deg)) > threshold) {
            correction = correction == 0.0 ? 180.0 : 0.0;
            phase = wrap360(s.phase_deg - correction);
        }
        out.samples.push_back({s.timestamp, phase});
    }
    return out;
}

namespace detail {

struct WindowMean {
    double reference;  // first phase in the window
    double offset;     // mean deviation from the reference
    std::size_t count;
};

// Mean of the window's phases, unwrapped around the window's first read.
// Expressed as reference + offset so that adding a grid-aligned constant to
// every phase changes only the reference, and that change cancels exactly in
// a difference of two windows.
inline std::optional<WindowMean> window_mean(const ChannelSeries& series, const TimeWindow& w) {
    std::optional<double> ref;
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : series.samples) {
        if (!w.contains(s.timestamp)) continue;
        if (!ref) ref = s.phase_deg;
        sum += wrap180(s.phase_deg - *ref);
        ++n;
    }
    if (!ref) return std::nullopt;
    return WindowMean{*ref, sum / static_cast<double>(n), n};
}

}  // namespace detail

struct DiffOptions {
    // Identify differences that are a half turn apart. Sensor jumps stay far
    // below 90 degrees, so this absorbs a 180 degree artifact that coincides
    // with a force step and is therefore invisible to deflip_180.
    bool fold_half_turn = true;
};

/// Phase change of one channel from the baseline window to the event window,
/// in (-180, 180] (or (-90, 90] when folding). nullopt means the channel has no
/// reads in one of the windows and must be skipped.
inline std::optional<double> per_channel_diff(const ChannelSeries& series, const TimeWindow& baseline,
                                              const TimeWindow& event, const DiffOptions& options = {}) {
    const auto b = detail::window_mean(series, baseline);
    const auto e = detail::window_mean(series, event);
    if (!b || !e) return std::nullopt;
    const double d = wrap180(wrap180(e->reference - b->reference) + (e->offset - b->offset));
    return options.fold_half_turn ? fold90(d) : d;
}

struct ChannelAverage {
    double mean;
    double std;  // sample standard deviation
    std::size_t count;
};

enum class channel_statistic { mean, median };

/// Circular-aware average of per-channel differences: values are unwrapped
/// around the first one before the arithmetic mean (or median) is taken.
inline ChannelAverage average_across_channels(std::span<const double> diffs,
                                              channel_statistic stat = channel_statistic::mean) {
    if (diffs.empty()) throw estimation_error("no usable channels");
    const double ref = diffs.front();
    std::vector<double> dev;
    dev.reserve(diffs.size());
    for (double d : diffs) dev.push_back(wrap180(d - ref));

    double sum = 0.0;
    for (double v : dev) sum += v;
    const double n = static_cast<double>(dev.size());
    const double mean_dev = sum / n;

    double center = mean_dev;
    if (stat == channel_statistic::median) {
        std::vector<double> sorted = dev;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t m = sorted.size() / 2;
        center = sorted.size() % 2 ? sorted[m] : 0.5 * (sorted[m - 1] + sorted[m]);
    }

    double ss = 0.0;
    for (double v : dev) ss += (v - mean_dev) * (v - mean_dev);
    const double std = dev.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return {wrap180(ref + center), std, dev.size()};
}

// ---------------------------------------------------------------------------
// Calibration

struct CalibrationModel {
    int degree = 2;
    std::vector<double> coefficients;  // ascending powers of the phase change
    double domain_lo = 0.0;            // degrees
    double domain_hi = 0.0;
    double residual_rms = 0.0;         // N
    bool monotone = true;

    double force(double phase_change) const {
        double acc = 0.0;
        for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * phase_change + *it;
        return acc;
    }

    double slope(double phase_change) const {
        double acc = 0.0;
        for (std::size_t i = coefficients.size(); i-- > 1;) acc = acc * phase_change + static_cast<double>(i) * coefficients[i];
        return acc;
    }

    bool covers(double phase_change, double margin = 0.0) const {
        return phase_change >= domain_lo - margin && phase_change <= domain_hi + margin;
    }

    /// Phase change that maps to `target` force; bisection over the fit domain.
    double phase_for_force(double target) const {
        double lo = domain_lo, hi = domain_hi;
        double flo = force(lo) - target, fhi = force(hi) - target;
        if (flo == 0.0) return lo;
        if (fhi == 0.0) return hi;
        if ((flo > 0.0) == (fhi > 0.0)) throw calibration_error("force " + format_double(target) + " N not reachable within the fit domain");
        for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
            const double mid = 0.5 * (lo + hi);
            const double fm = force(mid) - target;
            if ((fm > 0.0) == (flo > 0.0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    }
};

namespace detail {
// Sign of p' is constant over [lo, hi] iff it does not change sign at the ends
// or at any interior root. For degree <= 3, p' has degree <= 2.
inline bool monotone_on(const CalibrationModel& m, double lo, double hi) {
    std::vector<double> probes{lo, hi};
    if (m.degree == 2 && m.coefficients.size() == 3 && m.coefficients[2] != 0.0) {
        const double vertex = -m.coefficients[1] / (2.0 * m.coefficients[2]);
        if (vertex > lo && vertex < hi) return false;
    } else if (m.degree > 2) {
        for (int i = 1; i < 256; ++i) probes.push_back(lo + (hi - lo) * i / 256.0);
    }
    bool pos = false, neg = false;
    for (double x : probes) {
        const double s = m.slope(x);
        if (s > 0.0) pos = true;
        if (s < 0.0) neg = true;
    }
    return !(pos && neg);
}
}  // namespace detail

/// Least-squares polynomial force = p(phase change).
inline CalibrationModel fit_calibration(std::span<const double> phase_samples, std::span<const double> force_samples,
                                        int degree = 2) {
    if (degree < 1) throw fit_error("calibration degree must be >= 1");
    if (phase_samples.size() != force_samples.size()) throw fit_error("phase and force samples differ in length");
    const auto n = static_cast<Eigen::Index>(phase_samples.size());
    if (n < degree + 1) {
        throw fit_error("need at least " + std::to_string(degree + 1) + " samples for a degree-" +
                        std::to_string(degree) + " fit");
    }

    std::vector<double> distinct(phase_samples.begin(), phase_samples.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (static_cast<int>(distinct.size()) < degree + 1) throw fit_error("rank-deficient design: too few distinct phases");

    // Scale the abscissa to [-1, 1] for conditioning, then expand back.
    const double lo = distinct.front(), hi = distinct.back();
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    Eigen::MatrixXd a(n, degree + 1);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double u = (phase_samples[static_cast<std::size_t>(i)] - mid) / half;
        double p = 1.0;
        for (int k = 0; k <= degree; ++k, p *= u) a(i, k) = p;
        b(i) = force_samples[static_cast<std::size_t>(i)];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < degree + 1) throw fit_error("rank-deficient design");
    const Eigen::VectorXd c_scaled = qr.solve(b);

    // p(x) = sum_k c_k ((x - mid) / half)^k, expanded by the binomial theorem.
    std::vector<double> coeffs(static_cast<std::size_t>(degree + 1), 0.0);
    for (int k = 0; k <= degree; ++k) {
        const double ck = c_scaled(k) / std::pow(half, k);
        double binom = 1.0;
        for (int j = 0; j <= k; ++j) {
            // binom = C(k, j); term x^j * (-mid)^(k-j)
            coeffs[static_cast<std::size_t>(j)] += ck * binom * std::pow(-mid, k - j);
            binom = binom * (k - j) / (j + 1);
        }
    }

    CalibrationModel model;
    model.degree = degree;
    model.coefficients = std::move(coeffs);
    model.domain_lo = lo;
    model.domain_hi = hi;
    double ss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double r = model.force(phase_samples[static_cast<std::size_t>(i)]) - b(i);
        ss += r * r;
    }
    model.residual_rms = std::sqrt(ss / static_cast<double>(n));
    model.monotone = detail::monotone_on(model, lo, hi);
    return model;
}

/// Phase change (event minus baseline) that the forward model predicts for a
/// zero -> `force` step, averaged over the plan's channels.
inline double forward_phase_change(const ForceCapacitanceCurve& curve, const LineSpec& line, const ChannelPlan& plan,
                                   double force) {
    const double c0 = curve.at(0.0);
    const double cf = curve.at(force);
    double sum = 0.0;
    for (double f : plan.center_frequencies()) {
        const LineSpec l{line.characteristic_impedance, f};
        sum += reflect_phase(cf, l) - reflect_phase(c0, l);
    }
    return sum / static_cast<double>(plan.channel_count());
}

/// Calibration fitted to the noiseless forward model on a uniform force grid.
inline CalibrationModel forward_calibration(const ForceCapacitanceCurve& curve, const LineSpec& line,
                                            const ChannelPlan& plan, int degree = 2, std::size_t points = 25) {
    std::vector<double> phases, forces;
    for (double f : uniform_force_grid(curve.max_force(), points)) {
        phases.push_back(forward_phase_change(curve, line, plan, f));
        forces.push_back(f);
    }
    return fit_calibration(phases, forces, degree);
}

inline nlohmann::json to_json(const CalibrationModel& m) {
    return {{"degree", m.degree},
            {"coefficients", m.coefficients},
            {"fit_domain_deg", {m.domain_lo, m.domain_hi}},
            {"residual_rms_n", m.residual_rms}};
}

inline CalibrationModel calibration_from_json(const nlohmann::json& j) {
    try {
        for (auto it = j.begin(); it != j.end(); ++it) {
            const auto& k = it.key();
            if (k != "degree" && k != "coefficients" && k != "fit_domain_deg" && k != "residual_rms_n") {
                throw config_error(k, "unknown key");
            }
        }
        CalibrationModel m;
        m.degree = j.at("degree").get<int>();
        m.coefficients = j.at("coefficients").get<std::vector<double>>();
        const auto dom = j.at("fit_domain_deg").get<std::vector<double>>();
        m.residual_rms = j.at("residual_rms_n").get<double>();
        if (m.degree < 1 || m.coefficients.size() != static_cast<std::size_t>(m.degree + 1)) {
            throw config_error("coefficients", "expected degree + 1 coefficients");
        }
        if (dom.size() != 2 || !(dom[1] >= dom[0])) throw config_error("fit_domain_deg", "expected [lo, hi] with hi >= lo");
        m.domain_lo = dom[0];
        m.domain_hi = dom[1];
        m.monotone = detail::monotone_on(m, m.domain_lo, m.domain_hi);
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw config_error("calibration", e.what());
    }
}

// ---------------------------------------------------------------------------
// End-to-end estimate

struct ForceEstimate {
    double phase_jump_deg;
    double phase_jump_std_deg;
    std::size_t channels_used;
    double force_n;
    double resolution_n;
};

struct EstimateOptions {
    double jump_threshold_deg = default_jump_threshold_deg;
    channel_statistic statistic = channel_statistic::mean;
    DiffOptions diff{};
    // Jumps this far outside the calibration domain are still evaluated; noise
    // pushes zero-force and full-scale measurements slightly past the ends.
    double extrapolation_margin_deg = 3.0;
};

/// Per-channel phase changes after de-flipping, skipping channels without
/// reads in both windows.
inline std::vector<double> channel_diffs(std::span<const TagReadRecord> trace, const std::string& epc,
                                         const TimeWindow& baseline, const TimeWindow& event,
                                         const EstimateOptions& options = {}) {
    baseline.validate("baseline");
    event.validate("event");
    std::vector<double> diffs;
    for (const auto& series : group_by_channel(trace, epc)) {
        if (auto d = per_channel_diff(deflip_180(series, options.jump_threshold_deg), baseline, event, options.diff)) {
            diffs.push_back(*d);
        }
    }
    return diffs;
}

inline ForceEstimate estimate_force(std::span<const TagReadRecord> trace, const std::string& epc,
                                    const CalibrationModel& calibration, const TimeWindow& baseline,
                                    const TimeWindow& event, const EstimateOptions& options = {}) {
    const auto diffs = channel_diffs(trace, epc, baseline, event, options);
    const auto avg = average_across_channels(diffs, options.statistic);
    if (!calibration.covers(avg.mean, options.extrapolation_margin_deg)) {
        throw extrapolation_error("phase jump " + format_double(avg.mean) + " deg outside calibration domain [" +
                                  format_double(calibration.domain_lo) + ", " + format_double(calibration.domain_hi) +
                                  "] deg");
    }
    ForceEstimate est;
    est.phase_jump_deg = avg.mean;
    est.phase_jump_std_deg = avg.std;
    est.channels_used = avg.count;
    est.force_n = calibration.force(avg.mean);
    est.resolution_n =
        std::abs(calibration.slope(avg.mean)) * avg.std / std::sqrt(static_cast<double>(avg.count));
    return est;
}

/// Force resolution implied by a phase accuracy, assuming `span_force` newtons
/// spread linearly over `span_deg` degrees.
inline double resolution_from_phase_accuracy(double phase_accuracy, double span_deg = 15.0, double span_force = 6.0) {
    if (!(span_deg > 0.0) || !(span_force > 0.0)) throw input_error("resolution: spans must be > 0");
    return span_force / span_deg * phase_accuracy;
}

inline nlohmann::json to_json(const ForceEstimate& e) {
    return {{"phase_jump_deg", e.phase_jump_deg},
            {"phase_jump_std_deg", e.phase_jump_std_deg},
            {"channels_used", e.channels_used},
            {"force_n", e.force_n},
            {"resolution_n", e.resolution_n}};
}

inline std::string summary_line(const ForceEstimate& e) {
    return "force " + format_fixed(e.force_n, 3) + " N (resolution " + format_fixed(e.resolution_n, 3) +
           " N) from phase jump " + format_fixed(e.phase_jump_deg, 3) + " deg +/- " +
           format_fixed(e.phase_jump_std_deg, 3) + " deg over " + std::to_string(e.channels_used) + " channels";
}

}  // namespace rfforce
