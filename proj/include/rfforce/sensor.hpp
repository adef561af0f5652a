#pragma once

// Mechanical side of the sensor: force compresses the dielectric layer of a
// parallel-plate capacitor, raising its capacitance.

#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rfforce/errors.hpp"
#include "rfforce/format.hpp"
#include "rfforce/interp.hpp"

namespace rfforce {

/// Vacuum permittivity, F/m.
inline constexpr double epsilon0 = 8.85e-12;

struct MaterialSpec {
    double relative_permittivity = 2.8;
    double shear_modulus = 354.3e3;  // Pa
    std::string name = "ecoflex-00-30";

    void validate() const {
        if (!(relative_permittivity >= 1.0)) throw input_error("material: relative_permittivity must be >= 1");
        if (!(shear_modulus > 0.0)) throw input_error("material: shear_modulus must be > 0");
    }
};

struct SensorGeometry {
    double length = 4e-3;                // m
    double width = 2e-3;                 // m
    double dielectric_thickness = 0.2e-3;  // m
    double electrode_thickness = 35e-6;  // m, informational only

    double area() const { return length * width; }

    void validate() const {
        if (!(length > 0.0) || !(width > 0.0) || !(dielectric_thickness > 0.0) || !(electrode_thickness > 0.0)) {
            throw input_error("geometry: all dimensions must be > 0");
        }
    }
};

/// Parallel-plate capacitance A * eps_r * eps0 / d at zero load.
inline double nominal_capacitance(const SensorGeometry& geometry, const MaterialSpec& material) {
    geometry.validate();
    material.validate();
    return geometry.area() * material.relative_permittivity * epsilon0 / geometry.dielectric_thickness;
}

/// Axial force needed to compress an incompressible neo-Hookean layer to stretch lambda.
inline double neo_hookean_force(double stretch, double shear_modulus, double area) {
    return shear_modulus * area * (1.0 / (stretch * stretch) - stretch);
}

inline constexpr double min_stretch = 1e-6;

/// Stretch lambda in (0, 1] at which the compressed layer carries `force`.
/// Bisection on the monotone law F = mu * A * (lambda^-2 - lambda).
inline double solve_compression(double force, const SensorGeometry& geometry, const MaterialSpec& material) {
    geometry.validate();
    material.validate();
    if (!(force >= 0.0)) throw input_error("solve_compression: force must be >= 0");
    if (force == 0.0) return 1.0;

    const double mu = material.shear_modulus;
    const double area = geometry.area();
    const double tol = 1e-9 * std::max(force, 1.0);
    if (neo_hookean_force(min_stretch, mu, area) < force) {
        throw model_error("solve_compression: force exceeds the bracket (layer would collapse)");
    }

    double lo = min_stretch;  // residual > 0
    double hi = 1.0;          // residual < 0
    for (int iter = 0; iter < 400; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) return mid;  // lambda resolved to machine precision
        const double residual = neo_hookean_force(mid, mu, area) - force;
        if (std::abs(residual) < tol) return mid;
        if (residual > 0.0) lo = mid;
        else hi = mid;
    }
    const double mid = 0.5 * (lo + hi);
    if (std::abs(neo_hookean_force(mid, mu, area) - force) < tol) return mid;
    throw model_error("solve_compression: bisection did not converge");
}

enum class curve_source { anchored_interpolation, hyperelastic, user_table };

inline std::string to_string(curve_source s) {
    switch (s) {
        case curve_source::anchored_interpolation: return "anchored-interpolation";
        case curve_source::hyperelastic: return "hyperelastic";
        case curve_source::user_table: return "user-table";
    }
    return "unknown";
}

inline curve_source parse_curve_source(const std::string& s) {
    if (s == "anchored-interpolation" || s == "anchored") return curve_source::anchored_interpolation;
    if (s == "hyperelastic") return curve_source::hyperelastic;
    if (s == "user-table") return curve_source::user_table;
    throw input_error("unknown curve mode '" + s + "'");
}

struct CurveSample {
    double force;        // N
    double capacitance;  // F
    bool operator==(const CurveSample&) const = default;
};

/// Monotone force -> capacitance map. Immutable once built.
class ForceCapacitanceCurve {
public:
    ForceCapacitanceCurve(std::vector<CurveSample> samples, curve_source source,
                          interpolation kind = interpolation::monotone_cubic)
        : samples_(std::move(samples)), source_(source) {
        if (samples_.size() < 2) throw input_error("curve: need at least two samples");
        if (samples_.front().force != 0.0) throw input_error("curve: forces must start at 0 N");
        std::vector<double> f, c;
        f.reserve(samples_.size());
        c.reserve(samples_.size());
        for (std::size_t i = 0; i < samples_.size(); ++i) {
            if (!(samples_[i].capacitance > 0.0)) throw input_error("curve: capacitances must be > 0");
            if (i > 0) {
                if (!(samples_[i].force > samples_[i - 1].force)) {
                    throw input_error("curve: forces must be strictly increasing");
                }
                if (!(samples_[i].capacitance > samples_[i - 1].capacitance)) {
                    throw input_error("curve: capacitances must be strictly increasing");
                }
            }
            f.push_back(samples_[i].force);
            c.push_back(samples_[i].capacitance);
        }
        interp_ = monotone_interpolant(f, c, kind);
    }

    const std::vector<CurveSample>& samples() const { return samples_; }
    curve_source source() const { return source_; }
    double max_force() const { return samples_.back().force; }
    double c0() const { return samples_.front().capacitance; }

    /// Throws range_error outside [0, max_force]; no extrapolation.
    double at(double force) const {
        if (!(force >= 0.0) || force > max_force()) {
            throw range_error("capacitance_at: force " + format_double(force) + " N outside curve domain [0, " +
                              format_double(max_force()) + "] N");
        }
        return interp_(force);
    }

private:
    std::vector<CurveSample> samples_;
    curve_source source_;
    monotone_interpolant interp_;
};

inline double capacitance_at(const ForceCapacitanceCurve& curve, double force) { return curve.at(force); }

/// Anchors that reproduce the published 0-6 N endpoint capacitances.
inline std::vector<CurveSample> default_anchors() { return {{0.0, 1.0e-12}, {6.0, 1.65e-12}}; }

inline std::vector<double> uniform_force_grid(double max_force, std::size_t points) {
    if (points < 2) throw input_error("force grid needs at least two points");
    if (!(max_force > 0.0)) throw input_error("force grid: max force must be > 0");
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i) {
        grid[i] = max_force * static_cast<double>(i) / static_cast<double>(points - 1);
    }
    grid.back() = max_force;
    return grid;
}

struct CurveRequest {
    curve_source mode = curve_source::anchored_interpolation;
    std::vector<CurveSample> anchors = default_anchors();  // anchored mode; the table itself in user-table mode
    interpolation kind = interpolation::monotone_cubic;
};

inline ForceCapacitanceCurve build_capacitance_curve(const SensorGeometry& geometry, const MaterialSpec& material,
                                                     const CurveRequest& request,
                                                     const std::vector<double>& force_grid) {
    const double c_nominal = nominal_capacitance(geometry, material);
    auto check_nominal = [&](double c_zero) {
        if (std::abs(c_zero - c_nominal) > 0.01 * c_nominal) {
            throw input_error("curve: C(0) = " + format_double(c_zero * 1e12) +
                              " pF differs from the geometry's nominal capacitance " +
                              format_double(c_nominal * 1e12) + " pF by more than 1%");
        }
    };

    switch (request.mode) {
        case curve_source::user_table: {
            return ForceCapacitanceCurve(request.anchors, curve_source::user_table, request.kind);
        }
        case curve_source::anchored_interpolation: {
            // Validates monotonicity of the anchors.
            ForceCapacitanceCurve through_anchors(request.anchors, curve_source::anchored_interpolation,
                                                  request.kind);
            check_nominal(through_anchors.c0());
            std::vector<CurveSample> samples;
            samples.reserve(force_grid.size());
            for (double f : force_grid) samples.push_back({f, through_anchors.at(f)});
            return ForceCapacitanceCurve(std::move(samples), curve_source::anchored_interpolation, request.kind);
        }
        case curve_source::hyperelastic: {
            std::vector<CurveSample> samples;
            samples.reserve(force_grid.size());
            for (double f : force_grid) {
                samples.push_back({f, c_nominal / solve_compression(f, geometry, material)});
            }
            return ForceCapacitanceCurve(std::move(samples), curve_source::hyperelastic, request.kind);
        }
    }
    throw input_error("curve: unknown mode");
}

inline ForceCapacitanceCurve default_curve() {
    return build_capacitance_curve(SensorGeometry{}, MaterialSpec{}, CurveRequest{}, uniform_force_grid(6.0, 61));
}

// CSV: force_n,capacitance_pf

inline void write_curve_csv(std::ostream& out, const ForceCapacitanceCurve& curve) {
    out << "force_n,capacitance_pf\n";
    for (const auto& s : curve.samples()) out << format_double(s.force) << ',' << format_double(s.capacitance * 1e12) << '\n';
}

inline std::vector<CurveSample> read_curve_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw import_error("empty curve file", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "force_n,capacitance_pf") throw import_error("expected header 'force_n,capacitance_pf'", 1);
    std::vector<CurveSample> samples;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw import_error("expected two columns", lineno);
        auto f = parse_double(line.substr(0, comma));
        auto c = parse_double(line.substr(comma + 1));
        if (!f || !c) throw import_error("malformed number", lineno);
        samples.push_back({*f, *c * 1e-12});
    }
    return samples;
}

}  // namespace rfforce
