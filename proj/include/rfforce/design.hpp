#pragma once

// Sensor sizing. Nominal capacitance sets where on the arctan the sensor sits;
// the phase span is largest for C0 of a few pF at 900 MHz.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "rfforce/errors.hpp"
#include "rfforce/format.hpp"
#include "rfforce/sensor.hpp"
#include "rfforce/transduction.hpp"

namespace rfforce {

struct DesignCandidate {
    SensorGeometry geometry;
    MaterialSpec material;
    double c0 = 0.0;             // F
    double c_max = 0.0;          // F
    double delta_phi_deg = 0.0;
    double f_max = 0.0;          // N
    bool flagged = false;        // c0 outside the accepted band
};

struct CapacitanceBand {
    double lo = 0.5e-12;
    double hi = 20e-12;

    static CapacitanceBand relaxed() { return {}; }
    static CapacitanceBand strict() { return {1e-12, 10e-12}; }
    bool contains(double c) const { return c >= lo && c <= hi; }
};

/// Phase span of a neo-Hookean sensor between 0 and f_max.
inline DesignCandidate evaluate_design(const SensorGeometry& geometry, const MaterialSpec& material, double f_max,
                                       const LineSpec& line, const CapacitanceBand& band = {}) {
    if (!(f_max >= 0.0)) throw input_error("evaluate_design: f_max must be >= 0");
    DesignCandidate d{geometry, material, 0.0, 0.0, 0.0, f_max, false};
    d.c0 = nominal_capacitance(geometry, material);
    d.c_max = d.c0 / solve_compression(f_max, geometry, material);
    d.delta_phi_deg = delta_phi(d.c0, d.c_max, line);
    d.flagged = !band.contains(d.c0);
    return d;
}

/// Ranked by delta_phi descending; ties broken by (length, width, thickness,
/// permittivity, modulus) ascending so the order is reproducible.
inline std::vector<DesignCandidate> sweep_designs(const std::vector<SensorGeometry>& geometry_grid,
                                                  const std::vector<MaterialSpec>& material_set, double f_max,
                                                  const LineSpec& line, const CapacitanceBand& band = {}) {
    if (geometry_grid.empty() || material_set.empty()) throw input_error("sweep_designs: empty grid");
    std::vector<DesignCandidate> out;
    out.reserve(geometry_grid.size() * material_set.size());
    for (const auto& g : geometry_grid) {
        for (const auto& m : material_set) out.push_back(evaluate_design(g, m, f_max, line, band));
    }
    auto key = [](const DesignCandidate& c) {
        return std::make_tuple(c.geometry.length, c.geometry.width, c.geometry.dielectric_thickness,
                               c.material.relative_permittivity, c.material.shear_modulus);
    };
    std::stable_sort(out.begin(), out.end(), [&](const DesignCandidate& a, const DesignCandidate& b) {
        if (a.delta_phi_deg != b.delta_phi_deg) return a.delta_phi_deg > b.delta_phi_deg;
        return key(a) < key(b);
    });
    return out;
}

/// Shear modulus at which C(f_max) / C(0) equals target_ratio. Bisection in
/// log(mu): the ratio falls monotonically as the layer stiffens.
inline double calibrate_modulus(const SensorGeometry& geometry, const MaterialSpec& material, double f_max,
                                double target_ratio = 1.65) {
    if (!(target_ratio > 1.0)) throw calibration_error("calibrate_modulus: target_ratio must be > 1");
    if (!(f_max > 0.0)) throw calibration_error("calibrate_modulus: f_max must be > 0");
    geometry.validate();

    auto ratio_at = [&](double mu) {
        MaterialSpec m = material;
        m.shear_modulus = mu;
        return 1.0 / solve_compression(f_max, geometry, m);
    };

    double lo = 1e-3, hi = 1e15;  // Pa; lo -> soft (large ratio), hi -> stiff (ratio -> 1)
    double r_lo = 0.0;
    try {
        r_lo = ratio_at(lo);
    } catch (const model_error&) {
        r_lo = std::numeric_limits<double>::infinity();  // collapses: softer than needed
    }
    const double r_hi = ratio_at(hi);
    if (!(r_lo > target_ratio) || !(r_hi < target_ratio)) {
        throw calibration_error("calibrate_modulus: target ratio " + format_double(target_ratio) +
                                " not bracketed by modulus range");
    }
    for (int i = 0; i < 300; ++i) {
        const double mid = std::sqrt(lo * hi);
        double r = 0.0;
        try {
            r = ratio_at(mid);
        } catch (const model_error&) {
            r = std::numeric_limits<double>::infinity();
        }
        if (std::abs(r / target_ratio - 1.0) < 1e-9) return mid;
        if (r > target_ratio) lo = mid;
        else hi = mid;
        if (hi / lo - 1.0 < 1e-15) break;
    }
    const double mu = std::sqrt(lo * hi);
    if (std::abs(ratio_at(mu) / target_ratio - 1.0) > 1e-6) throw calibration_error("calibrate_modulus: did not converge");
    return mu;
}

/// Capacitance ratio C_max / C0 that yields the requested phase span at c0.
inline double ratio_for_span(double c0, double target_delta_phi, const LineSpec& line) {
    const double phi0 = reflect_phase(c0, line);
    if (!(target_delta_phi > 0.0) || !(target_delta_phi < phi0)) {
        throw calibration_error("ratio_for_span: span must be in (0, " + format_double(phi0) + ") degrees at this C0");
    }
    double lo = 1.0, hi = 2.0;
    while (delta_phi(c0, hi * c0, line) < target_delta_phi) {
        hi *= 2.0;
        if (hi > 1e12) throw calibration_error("ratio_for_span: span unreachable");
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (delta_phi(c0, mid * c0, line) < target_delta_phi) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

struct DesignPreset {
    std::string name;
    SensorGeometry geometry;
    MaterialSpec material;  // shear modulus is replaced by the calibrated value
    double f_max;
    double target_delta_phi_deg;  // 0 -> use target_ratio instead
    double target_ratio;
};

// Qualitative reproductions of sensors tuned to other force ranges. The
// neoprene permittivity (6.7) is a typical handbook value.
inline std::vector<DesignPreset> design_presets() {
    return {
        {"default", SensorGeometry{4e-3, 2e-3, 0.2e-3, 35e-6}, MaterialSpec{2.8, 354.3e3, "ecoflex-00-30"}, 6.0, 0.0, 1.65},
        {"low-force", SensorGeometry{1e-3, 1e-3, 0.1e-3, 35e-6}, MaterialSpec{2.8, 100e3, "soft-silicone"}, 2.0, 15.0, 0.0},
        {"high-force", SensorGeometry{5e-3, 5e-3, 0.5e-3, 35e-6}, MaterialSpec{6.7, 1e6, "neoprene"}, 60.0, 15.0, 0.0},
    };
}

inline DesignPreset find_preset(const std::string& name) {
    for (auto& p : design_presets()) {
        if (p.name == name) return p;
    }
    throw input_error("unknown design preset '" + name + "'");
}

/// Calibrates the preset's modulus and evaluates it.
inline DesignCandidate evaluate_preset(const DesignPreset& preset, const LineSpec& line) {
    MaterialSpec m = preset.material;
    double ratio = preset.target_ratio;
    if (preset.target_delta_phi_deg > 0.0) {
        ratio = ratio_for_span(nominal_capacitance(preset.geometry, m), preset.target_delta_phi_deg, line);
    }
    m.shear_modulus = calibrate_modulus(preset.geometry, m, preset.f_max, ratio);
    return evaluate_design(preset.geometry, m, preset.f_max, line);
}

inline void write_design_csv(std::ostream& out, const std::vector<DesignCandidate>& designs) {
    out << "len_mm,wid_mm,d_mm,eps_r,mu_kpa,c0_pf,cmax_pf,delta_phi_deg,flag\n";
    for (const auto& d : designs) {
        out << format_double(d.geometry.length * 1e3) << ',' << format_double(d.geometry.width * 1e3) << ','
            << format_double(d.geometry.dielectric_thickness * 1e3) << ','
            << format_double(d.material.relative_permittivity) << ',' << format_double(d.material.shear_modulus / 1e3)
            << ',' << format_double(d.c0 * 1e12) << ',' << format_double(d.c_max * 1e12) << ','
            << format_double(d.delta_phi_deg) << ',' << (d.flagged ? "out-of-band" : "ok") << '\n';
    }
}

}  // namespace rfforce
