#pragma once

// Synthetic reader traces. A force timeline drives the sensor capacitance; the
// reader hops across channels, each with its own fixed phase offset, and
// reports one phase/RSSI record per tag read.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "rfforce/angles.hpp"
#include "rfforce/errors.hpp"
#include "rfforce/format.hpp"
#include "rfforce/sensor.hpp"
#include "rfforce/transduction.hpp"

namespace rfforce {

inline constexpr const char* default_epc = "E2801160600002054E0A6C3F";

/// splitmix64 finalizer; used to derive independent RNG streams from one seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

enum class hop_order { sequential, shuffled_table, shuffled_per_cycle };

inline std::string to_string(hop_order h) {
    switch (h) {
        case hop_order::sequential: return "sequential";
        case hop_order::shuffled_table: return "shuffled-table";
        case hop_order::shuffled_per_cycle: return "shuffled-per-cycle";
    }
    return "unknown";
}

inline hop_order parse_hop_order(const std::string& s) {
    if (s == "sequential") return hop_order::sequential;
    if (s == "shuffled-table") return hop_order::shuffled_table;
    if (s == "shuffled-per-cycle") return hop_order::shuffled_per_cycle;
    throw input_error("unknown hop order '" + s + "'");
}

namespace detail {
inline std::vector<int> shuffled_indices(int n, std::uint64_t seed) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    for (int i = n - 1; i > 0; --i) {
        std::uniform_int_distribution<int> pick(0, i);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
    }
    return idx;
}
}  // namespace detail

class ChannelPlan {
public:
    ChannelPlan(std::vector<double> center_frequencies, double hop_interval, hop_order order, std::uint64_t seed)
        : frequencies_(std::move(center_frequencies)), hop_interval_(hop_interval), order_(order), seed_(seed) {
        if (frequencies_.empty()) throw input_error("channel plan: need at least one channel");
        for (std::size_t i = 0; i < frequencies_.size(); ++i) {
            if (!(frequencies_[i] > 0.0)) throw input_error("channel plan: frequencies must be > 0");
            if (i > 0 && !(frequencies_[i] > frequencies_[i - 1])) {
                throw input_error("channel plan: frequencies must be strictly increasing");
            }
        }
        if (!(hop_interval_ > 0.0)) throw input_error("channel plan: hop_interval must be > 0");
        if (order_ == hop_order::sequential) {
            table_.resize(frequencies_.size());
            std::iota(table_.begin(), table_.end(), 0);
        } else {
            table_ = detail::shuffled_indices(channel_count(), mix_seed(seed_, 100));
        }
    }

    int channel_count() const { return static_cast<int>(frequencies_.size()); }
    const std::vector<double>& center_frequencies() const { return frequencies_; }
    double frequency(int channel) const { return frequencies_.at(static_cast<std::size_t>(channel)); }
    double hop_interval() const { return hop_interval_; }
    hop_order order() const { return order_; }
    std::uint64_t seed() const { return seed_; }

    /// The hop table repeated every channel_count hops (shuffled-table, sequential).
    const std::vector<int>& hop_table() const { return table_; }

    std::int64_t hop_index(double t) const { return static_cast<std::int64_t>(std::floor(t / hop_interval_)); }

    int channel_for_hop(std::int64_t hop) const {
        const std::int64_t n = channel_count();
        const std::int64_t slot = ((hop % n) + n) % n;
        if (order_ != hop_order::shuffled_per_cycle) return table_[static_cast<std::size_t>(slot)];
        const std::int64_t cycle = hop >= 0 ? hop / n : (hop - n + 1) / n;
        if (cycle == 0) return table_[static_cast<std::size_t>(slot)];
        return detail::shuffled_indices(channel_count(), mix_seed(seed_, 1000 + static_cast<std::uint64_t>(cycle)))
            [static_cast<std::size_t>(slot)];
    }

    int channel_at(double t) const { return channel_for_hop(hop_index(t)); }

    bool operator==(const ChannelPlan& o) const {
        return frequencies_ == o.frequencies_ && hop_interval_ == o.hop_interval_ && order_ == o.order_ &&
               seed_ == o.seed_ && table_ == o.table_;
    }

private:
    std::vector<double> frequencies_;
    double hop_interval_;
    hop_order order_;
    std::uint64_t seed_;
    std::vector<int> table_;
};

inline std::vector<double> channel_grid(int count, double first_hz, double spacing_hz) {
    if (count < 1) throw input_error("channel grid: count must be >= 1");
    std::vector<double> f(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) f[static_cast<std::size_t>(k)] = first_hz + k * spacing_hz;
    return f;
}

/// 50 channels at 902.25 MHz + k * 0.5 MHz, hopping every 200 ms through a
/// seeded pseudo-random hop table.
inline ChannelPlan default_channel_plan(std::uint64_t seed = 0) {
    return ChannelPlan(channel_grid(50, 902.25e6, 0.5e6), 0.2, hop_order::shuffled_table, seed);
}

/// Per-channel constant offset added by the reader at each hop.
struct OffsetSpec {
    enum class kind { uniform, fixed };
    kind mode = kind::uniform;
    double low_deg = 0.0;
    double high_deg = 360.0;
    std::vector<double> values;  // fixed mode, one per channel

    static OffsetSpec zero() { return {kind::fixed, 0.0, 0.0, {}}; }
    static OffsetSpec fixed_values(std::vector<double> v) { return {kind::fixed, 0.0, 0.0, std::move(v)}; }
};

struct ReaderProfile {
    double reads_per_second = 90.0;
    OffsetSpec per_channel_offset{};
    double flip_probability = 0.05;  // per hop boundary
    double phase_noise_sigma = 2.0;  // degrees
    double rssi_base = -55.0;        // dBm
    double rssi_force_dip = 1.0;     // dB at max force
    double rssi_noise_sigma = 0.2;   // dB
    std::string epc = default_epc;

    void validate() const {
        if (!(reads_per_second > 0.0)) throw input_error("reader: reads_per_second must be > 0");
        if (!(flip_probability >= 0.0 && flip_probability <= 1.0)) {
            throw input_error("reader: flip_probability must be in [0, 1]");
        }
        if (!(phase_noise_sigma >= 0.0)) throw input_error("reader: phase_noise_sigma must be >= 0");
        if (!(rssi_noise_sigma >= 0.0)) throw input_error("reader: rssi_noise_sigma must be >= 0");
        if (!(rssi_force_dip >= 0.0)) throw input_error("reader: rssi_force_dip must be >= 0");
        if (per_channel_offset.mode == OffsetSpec::kind::uniform &&
            !(per_channel_offset.high_deg >= per_channel_offset.low_deg)) {
            throw input_error("reader: offset range must have high >= low");
        }
        if (epc.empty()) throw input_error("reader: epc must not be empty");
    }

    /// Every noise and artifact source off; offsets zero.
    static ReaderProfile ideal() {
        ReaderProfile p;
        p.per_channel_offset = OffsetSpec::zero();
        p.flip_probability = 0.0;
        p.phase_noise_sigma = 0.0;
        p.rssi_noise_sigma = 0.0;
        return p;
    }
};

struct MultipathModel {
    double static_sigma_deg = 0.0;     // per-channel offsets drawn once per run
    std::vector<double> static_offsets;  // explicit per-channel offsets; overrides the draw when non-empty
    double dynamic_sigma = 0.0;        // degrees, i.i.d. per read
    bool dynamic_enabled = false;

    void validate() const {
        if (!(dynamic_sigma >= 0.0)) throw input_error("multipath: dynamic_sigma must be >= 0");
        if (!(static_sigma_deg >= 0.0)) throw input_error("multipath: static_sigma_deg must be >= 0");
    }
};

struct ForceBreakpoint {
    double time;   // s
    double force;  // N
    bool operator==(const ForceBreakpoint&) const = default;
};

/// Step-hold force profile: the force of the last breakpoint at or before t.
class ForceTimeline {
public:
    ForceTimeline() : points_{{0.0, 0.0}} {}
    explicit ForceTimeline(std::vector<ForceBreakpoint> points) : points_(std::move(points)) {
        if (points_.empty()) throw input_error("timeline: need at least one breakpoint");
        for (std::size_t i = 1; i < points_.size(); ++i) {
            if (!(points_[i].time > points_[i - 1].time)) throw input_error("timeline: times must be strictly increasing");
        }
    }

    static ForceTimeline constant(double force) { return ForceTimeline({{0.0, force}}); }
    static ForceTimeline step(double before, double after, double at) {
        return ForceTimeline({{0.0, before}, {at, after}});
    }

    double force_at(double t) const {
        auto it = std::upper_bound(points_.begin(), points_.end(), t,
                                   [](double v, const ForceBreakpoint& b) { return v < b.time; });
        if (it == points_.begin()) {
            throw simulation_error("timeline: no force defined at t=" + format_double(t) + " s", t);
        }
        return std::prev(it)->force;
    }

    double start() const { return points_.front().time; }
    const std::vector<ForceBreakpoint>& breakpoints() const { return points_; }
    bool operator==(const ForceTimeline&) const = default;

private:
    std::vector<ForceBreakpoint> points_;
};

struct TagReadRecord {
    double timestamp;     // s
    std::string epc;
    int channel_index;
    double frequency;     // Hz
    double phase_deg;     // [0, 360)
    double rssi_dbm;
    bool operator==(const TagReadRecord&) const = default;
};

/// Per-run hidden state of the simulated link, exposed for tests.
struct LinkRealization {
    std::vector<double> channel_offsets;   // degrees, grid-quantized
    std::vector<double> static_multipath;  // degrees
};

namespace detail {

enum stream : std::uint64_t { arrivals = 1, offsets = 2, static_mp = 3, flips = 4, dynamic_mp = 5, read_noise = 6, rssi = 7 };

inline LinkRealization realize_link(const ChannelPlan& plan, const ReaderProfile& profile,
                                    const MultipathModel& multipath, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(plan.channel_count());
    LinkRealization link;
    link.channel_offsets.resize(n);
    link.static_multipath.assign(n, 0.0);

    const auto& spec = profile.per_channel_offset;
    if (spec.mode == OffsetSpec::kind::fixed) {
        if (!spec.values.empty() && spec.values.size() != n) {
            throw input_error("reader: fixed offsets need one value per channel");
        }
        for (std::size_t k = 0; k < n; ++k) link.channel_offsets[k] = spec.values.empty() ? 0.0 : spec.values[k];
    } else {
        std::mt19937_64 rng(mix_seed(seed, offsets));
        std::uniform_real_distribution<double> u(spec.low_deg, spec.high_deg);
        for (auto& o : link.channel_offsets) o = u(rng);
    }

    if (!multipath.static_offsets.empty()) {
        if (multipath.static_offsets.size() != n) throw input_error("multipath: static_offsets needs one value per channel");
        link.static_multipath = multipath.static_offsets;
    } else if (multipath.static_sigma_deg > 0.0) {
        std::mt19937_64 rng(mix_seed(seed, static_mp));
        std::normal_distribution<double> g(0.0, multipath.static_sigma_deg);
        for (auto& s : link.static_multipath) s = g(rng);
    }
    return link;
}

}  // namespace detail

inline LinkRealization realize_link(const ChannelPlan& plan, const ReaderProfile& profile,
                                    const MultipathModel& multipath, std::uint64_t seed) {
    return detail::realize_link(plan, profile, multipath, seed);
}

/// Every source of randomness draws from its own stream derived from `seed`, so
/// switching one source on or off leaves the others' draws untouched.
///
/// Phase of a read on channel k at time t:
///   wrap360(q(phi(C(F(t)), f_k) + dyn + noise) + q(offset_k + static_k) + 180 * flip)
/// where q() snaps to the reader phase grid. Both terms are grid values, so
/// per-channel differences are exactly independent of the offsets.
inline std::vector<TagReadRecord> simulate_trace(const ForceCapacitanceCurve& curve, const LineSpec& line,
                                                 const ChannelPlan& plan, const ReaderProfile& profile,
                                                 const MultipathModel& multipath, const ForceTimeline& timeline,
                                                 double duration, std::uint64_t seed) {
    line.validate();
    profile.validate();
    multipath.validate();
    if (!(duration >= 0.0)) throw input_error("simulate: duration must be >= 0");
    if (timeline.start() > 0.0) {
        throw simulation_error("timeline starts at t=" + format_double(timeline.start()) + " s, after 0", 0.0);
    }
    for (const auto& b : timeline.breakpoints()) {
        if (b.time < duration && (b.force < 0.0 || b.force > curve.max_force())) {
            throw simulation_error("force " + format_double(b.force) + " N at t=" + format_double(b.time) +
                                       " s is outside the curve domain [0, " + format_double(curve.max_force()) + "] N",
                                   b.time);
        }
    }

    std::vector<TagReadRecord> out;
    if (duration == 0.0) return out;

    const LinkRealization link = detail::realize_link(plan, profile, multipath, seed);
    std::vector<double> channel_term(link.channel_offsets.size());
    for (std::size_t k = 0; k < channel_term.size(); ++k) {
        channel_term[k] = quantize_phase(wrap360(link.channel_offsets[k] + link.static_multipath[k]));
    }

    std::mt19937_64 arrivals(mix_seed(seed, detail::arrivals));
    std::mt19937_64 flips(mix_seed(seed, detail::flips));
    std::mt19937_64 dynamic(mix_seed(seed, detail::dynamic_mp));
    std::mt19937_64 noise(mix_seed(seed, detail::read_noise));
    std::mt19937_64 rssi_rng(mix_seed(seed, detail::rssi));
    std::exponential_distribution<double> gap(profile.reads_per_second);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    // One distribution per engine: normal_distribution caches a spare draw,
    // so sharing it would leak values between streams.
    std::normal_distribution<double> dynamic_unit(0.0, 1.0), noise_unit(0.0, 1.0), rssi_unit(0.0, 1.0);

    const bool use_dynamic = multipath.dynamic_enabled && multipath.dynamic_sigma > 0.0;
    const double max_force = curve.max_force();

    // Latched 180 degree artifact: may toggle at each hop boundary.
    bool flipped = false;
    std::int64_t flip_hop = 0;

    out.reserve(static_cast<std::size_t>(profile.reads_per_second * duration * 1.1) + 16);
    double t = 0.0;
    while (true) {
        t += gap(arrivals);
        if (t >= duration) break;

        const std::int64_t hop = plan.hop_index(t);
        for (; flip_hop < hop; ++flip_hop) {
            if (coin(flips) < profile.flip_probability) flipped = !flipped;
        }

        const int ch = plan.channel_for_hop(hop);
        const double f_hz = plan.frequency(ch);
        const double force = timeline.force_at(t);
        const LineSpec channel_line{line.characteristic_impedance, f_hz};

        double sensor = reflect_phase(curve.at(force), channel_line);
        if (use_dynamic) sensor += multipath.dynamic_sigma * dynamic_unit(dynamic);
        if (profile.phase_noise_sigma > 0.0) sensor += profile.phase_noise_sigma * noise_unit(noise);

        double phase = quantize_phase(sensor) + channel_term[static_cast<std::size_t>(ch)];
        if (flipped) phase += 180.0;

        double rssi = profile.rssi_base - profile.rssi_force_dip * force / max_force;
        if (profile.rssi_noise_sigma > 0.0) rssi += profile.rssi_noise_sigma * rssi_unit(rssi_rng);

        out.push_back({t, profile.epc, ch, f_hz, wrap360(phase), rssi});
    }
    return out;
}

}  // namespace rfforce
