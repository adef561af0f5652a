#pragma once

// Capacitance -> RF phase. A capacitive termination on a matched line reflects
// with unit magnitude and a phase lag of 2 atan(1 / (Z0 w C)).

#include <cmath>
#include <complex>
#include <numbers>
#include <ostream>
#include <vector>

#include "rfforce/angles.hpp"
#include "rfforce/errors.hpp"
#include "rfforce/format.hpp"

namespace rfforce {

struct LineSpec {
    double characteristic_impedance = 50.0;  // ohm
    double frequency = 900e6;                // Hz

    double omega() const { return 2.0 * std::numbers::pi * frequency; }

    void validate() const {
        if (!(characteristic_impedance > 0.0)) throw input_error("line: characteristic impedance must be > 0");
        if (!(frequency > 0.0)) throw input_error("line: frequency must be > 0");
    }
};

struct ReflectionResult {
    double gamma_real;
    double gamma_imag;
    double magnitude;
    double phase_deg;  // positive lag, (-180, 180]
};

namespace detail {
inline void check_capacitance(double c) {
    if (!(c > 0.0)) throw input_error("capacitance must be > 0");
}
}  // namespace detail

/// Gamma = (Z_L - Z0) / (Z_L + Z0) with Z_L = 1 / (j w C). The phase is
/// referenced to a short circuit (the C -> inf limit), i.e. arg(-Gamma), which
/// makes it the positive quantity 2 atan(1 / (Z0 w C)) returned by reflect_phase().
inline ReflectionResult reflection_coefficient(double capacitance, const LineSpec& line) {
    detail::check_capacitance(capacitance);
    line.validate();
    const std::complex<double> z_load(0.0, -1.0 / (line.omega() * capacitance));
    const std::complex<double> z0(line.characteristic_impedance, 0.0);
    const std::complex<double> gamma = (z_load - z0) / (z_load + z0);
    const double lag = wrap180(std::arg(-gamma) * rad_to_deg);
    return {gamma.real(), gamma.imag(), std::abs(gamma), lag};
}

/// Phase lag of the reflected wave, degrees in (0, 180); strictly decreasing in C.
inline double reflect_phase(double capacitance, const LineSpec& line) {
    detail::check_capacitance(capacitance);
    line.validate();
    return 2.0 * std::atan(1.0 / (line.characteristic_impedance * line.omega() * capacitance)) * rad_to_deg;
}

/// One-way (S21) phase through the sensor: half the reflect phase.
inline double thru_phase(double capacitance, const LineSpec& line) { return 0.5 * reflect_phase(capacitance, line); }

/// Phase span between the unloaded and fully loaded sensor.
inline double delta_phi(double c0, double c_max, const LineSpec& line) {
    detail::check_capacitance(c0);
    if (!(c_max >= c0)) throw input_error("delta_phi: c_max must be >= c0");
    if (c_max == c0) return 0.0;
    return reflect_phase(c0, line) - reflect_phase(c_max, line);
}

struct DeltaPhiPoint {
    double c0;         // F
    double delta_phi;  // degrees
};

inline std::vector<DeltaPhiPoint> delta_phi_sweep(const std::vector<double>& c0_grid, double ratio,
                                                  const LineSpec& line) {
    if (c0_grid.empty()) throw input_error("delta_phi_sweep: empty grid");
    if (!(ratio > 1.0)) throw input_error("delta_phi_sweep: ratio must be > 1");
    for (std::size_t i = 0; i < c0_grid.size(); ++i) {
        if (!(c0_grid[i] > 0.0)) throw input_error("delta_phi_sweep: grid values must be > 0");
        if (i > 0 && !(c0_grid[i] > c0_grid[i - 1])) throw input_error("delta_phi_sweep: grid must be ascending");
    }
    std::vector<DeltaPhiPoint> out;
    out.reserve(c0_grid.size());
    for (double c0 : c0_grid) out.push_back({c0, delta_phi(c0, ratio * c0, line)});
    return out;
}

/// `points` log-spaced values from lo to hi inclusive.
inline std::vector<double> log_grid(double lo, double hi, std::size_t points) {
    if (!(lo > 0.0) || !(hi > lo) || points < 2) throw input_error("log_grid: need 0 < lo < hi and >= 2 points");
    std::vector<double> g(points);
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (std::size_t i = 0; i < points; ++i) {
        g[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
    }
    g.front() = lo;
    g.back() = hi;
    return g;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<DeltaPhiPoint>& sweep) {
    out << "c0_pf,delta_phi_deg\n";
    for (const auto& p : sweep) out << format_double(p.c0 * 1e12) << ',' << format_double(p.delta_phi) << '\n';
}

}  // namespace rfforce
