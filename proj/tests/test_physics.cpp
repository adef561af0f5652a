// Angles, formatting, interpolation, sensor model, transduction and design tools.
//
// Reference values marked "oracle" were evaluated independently with mpmath at
// 50 significant digits and are frozen here.

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "rfforce/rfforce.hpp"

using namespace rfforce;

namespace {
const LineSpec line900{};
constexpr double pF = 1e-12;
}  // namespace

// ---------------------------------------------------------------------------
// angles / format

TEST(Angles, WrapRanges) {
    EXPECT_DOUBLE_EQ(wrap360(-10.0), 350.0);
    EXPECT_DOUBLE_EQ(wrap360(720.0), 0.0);
    EXPECT_DOUBLE_EQ(wrap180(180.0), 180.0);
    EXPECT_DOUBLE_EQ(wrap180(-180.0), 180.0);
    EXPECT_DOUBLE_EQ(wrap180(190.0), -170.0);
    EXPECT_DOUBLE_EQ(fold90(90.0), 90.0);
    EXPECT_DOUBLE_EQ(fold90(-90.0), 90.0);
    EXPECT_DOUBLE_EQ(fold90(170.0), -10.0);
    EXPECT_DOUBLE_EQ(fold90(-100.0), 80.0);
}

TEST(Angles, WrapPropertiesOnRandomInputs) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-5000.0, 5000.0);
    for (int i = 0; i < 10000; ++i) {
        const double a = u(rng);
        const double w = wrap360(a);
        ASSERT_GE(w, 0.0);
        ASSERT_LT(w, 360.0);
        const double h = wrap180(a);
        ASSERT_GT(h, -180.0);
        ASSERT_LE(h, 180.0);
        const double f = fold90(a);
        ASSERT_GT(f, -90.0);
        ASSERT_LE(f, 90.0);
        ASSERT_NEAR(std::remainder(h - a, 360.0), 0.0, 1e-9);
        ASSERT_NEAR(std::remainder(f - a, 180.0), 0.0, 1e-9);
    }
}

TEST(Angles, QuantizedSumsAreExact) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 360.0);
    for (int i = 0; i < 1000; ++i) {
        const double a = quantize_phase(u(rng));
        const double b = quantize_phase(u(rng));
        ASSERT_EQ((a + b) - b, a);
    }
}

TEST(Format, ShortestRoundTrip) {
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(148.0), "148");
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng);
        ASSERT_EQ(*parse_double(format_double(v)), v);
    }
    EXPECT_FALSE(parse_double("1.5x"));
    EXPECT_FALSE(parse_double(""));
    EXPECT_EQ(*parse_double("  2.5 "), 2.5);
    EXPECT_EQ(*parse_int("42"), 42);
    EXPECT_FALSE(parse_int("4.2"));
}

// ---------------------------------------------------------------------------
// interpolation

TEST(Interp, RejectsBadKnots) {
    std::vector<double> x{0, 1, 1}, y{0, 1, 2};
    EXPECT_THROW(monotone_interpolant(x, y), input_error);
    std::vector<double> x1{0}, y1{0};
    EXPECT_THROW(monotone_interpolant(x1, y1), input_error);
    std::vector<double> x2{0, 1}, y2{0, 1, 2};
    EXPECT_THROW(monotone_interpolant(x2, y2), input_error);
}

TEST(Interp, OutOfRangeThrows) {
    std::vector<double> x{0, 1}, y{0, 1};
    monotone_interpolant f(x, y);
    EXPECT_THROW(f(-1e-9), range_error);
    EXPECT_THROW(f(1.0 + 1e-9), range_error);
    EXPECT_DOUBLE_EQ(f(1.0), 1.0);
}

TEST(Interp, LinearIsExactOnLines) {
    std::vector<double> x{0, 1, 3, 7}, y{1, 3, 7, 15};
    monotone_interpolant f(x, y, interpolation::linear);
    monotone_interpolant g(x, y);
    for (double q = 0; q <= 7; q += 0.25) {
        EXPECT_NEAR(f(q), 2 * q + 1, 1e-12);
        EXPECT_NEAR(g(q), 2 * q + 1, 1e-12);  // slopes reduce to the secant on collinear data
    }
}

TEST(Interp, MonotoneNoOvershootProperty) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> step(0.01, 2.0);
    std::uniform_real_distribution<double> rise(0.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> x{0.0}, y{0.0};
        for (int k = 0; k < 8; ++k) {
            x.push_back(x.back() + step(rng));
            y.push_back(y.back() + (k % 3 == 0 ? 0.0 : rise(rng)));  // includes flat runs
        }
        monotone_interpolant f(x, y);
        double prev = f(x.front());
        for (std::size_t k = 0; k + 1 < x.size(); ++k) {
            ASSERT_DOUBLE_EQ(f(x[k]), y[k]);
            for (int s = 1; s <= 20; ++s) {
                const double q = x[k] + (x[k + 1] - x[k]) * s / 20.0;
                const double v = f(q);
                ASSERT_GE(v, prev - 1e-12);
                ASSERT_GE(v, y[k] - 1e-12);
                ASSERT_LE(v, y[k + 1] + 1e-12);
                prev = v;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// sensor

TEST(Sensor, NominalCapacitanceOracle) {
    EXPECT_NEAR(nominal_capacitance(SensorGeometry{}, MaterialSpec{}) / pF, 0.99120, 1e-5);  // oracle
    EXPECT_NEAR(nominal_capacitance({1e-3, 1e-3, 0.1e-3, 35e-6}, MaterialSpec{}) / pF, 0.24780, 1e-5);
}

TEST(Sensor, GeometryValidation) {
    EXPECT_THROW(nominal_capacitance({0.0, 2e-3, 0.2e-3, 35e-6}, MaterialSpec{}), input_error);
    EXPECT_THROW(nominal_capacitance({4e-3, 2e-3, -1e-3, 35e-6}, MaterialSpec{}), input_error);
    MaterialSpec m;
    m.relative_permittivity = 0.5;
    EXPECT_THROW(nominal_capacitance(SensorGeometry{}, m), input_error);
    m = MaterialSpec{};
    m.shear_modulus = 0.0;
    EXPECT_THROW(solve_compression(1.0, SensorGeometry{}, m), input_error);
}

TEST(Sensor, CompressionOracle) {
    const double lambda = solve_compression(6.0, SensorGeometry{}, MaterialSpec{});
    EXPECT_NEAR(lambda, 0.6060195, 1e-6);  // oracle
    EXPECT_NEAR(1.0 / lambda, 1.65011, 1e-4);
    EXPECT_DOUBLE_EQ(solve_compression(0.0, SensorGeometry{}, MaterialSpec{}), 1.0);
    EXPECT_THROW(solve_compression(-1.0, SensorGeometry{}, MaterialSpec{}), input_error);
}

TEST(Sensor, CompressionResidualAndMonotoneProperty) {
    const SensorGeometry g{};
    const MaterialSpec m{};
    double prev = 1.0;
    for (double f = 0.25; f <= 50.0; f += 0.25) {
        const double l = solve_compression(f, g, m);
        ASSERT_LT(l, prev);
        ASSERT_NEAR(neo_hookean_force(l, m.shear_modulus, g.area()), f, 1e-8 * std::max(f, 1.0));
        prev = l;
    }
}

TEST(Sensor, CompressionBracketExceeded) {
    MaterialSpec soft;
    soft.shear_modulus = 1e-9;  // collapses under any appreciable load
    EXPECT_THROW(solve_compression(1e3, SensorGeometry{}, soft), model_error);
}

TEST(Sensor, DefaultCurveEndpoints) {
    const auto curve = default_curve();
    EXPECT_DOUBLE_EQ(curve.at(0.0), 1.0 * pF);
    EXPECT_DOUBLE_EQ(curve.at(6.0), 1.65 * pF);
    EXPECT_THROW(curve.at(6.0001), range_error);
    EXPECT_THROW(curve.at(-0.1), range_error);
    double prev = 0.0;
    for (double f = 0.0; f <= 6.0; f += 0.01) {
        ASSERT_GT(curve.at(f), prev);
        prev = curve.at(f);
    }
}

TEST(Sensor, HyperelasticCurve) {
    CurveRequest req;
    req.mode = curve_source::hyperelastic;
    const auto curve = build_capacitance_curve(SensorGeometry{}, MaterialSpec{}, req, uniform_force_grid(6.0, 61));
    EXPECT_EQ(curve.source(), curve_source::hyperelastic);
    EXPECT_NEAR(curve.at(6.0) / pF, 1.63559, 1e-4);  // oracle
    const double ratio = curve.at(6.0) / curve.at(0.0);
    EXPECT_GE(ratio, 1.60);
    EXPECT_LE(ratio, 1.70);
}

TEST(Sensor, CurveRejectsBadSamples) {
    using S = std::vector<CurveSample>;
    EXPECT_THROW(ForceCapacitanceCurve(S{{0, 1e-12}}, curve_source::user_table), input_error);
    EXPECT_THROW(ForceCapacitanceCurve(S{{1, 1e-12}, {2, 2e-12}}, curve_source::user_table), input_error);
    EXPECT_THROW(ForceCapacitanceCurve(S{{0, 2e-12}, {2, 1e-12}}, curve_source::user_table), input_error);
    EXPECT_THROW(ForceCapacitanceCurve(S{{0, 1e-12}, {0, 2e-12}}, curve_source::user_table), input_error);
    EXPECT_THROW(ForceCapacitanceCurve(S{{0, 0.0}, {1, 2e-12}}, curve_source::user_table), input_error);
}

TEST(Sensor, AnchorsMustMatchGeometry) {
    CurveRequest req;
    req.anchors = {{0.0, 2.0 * pF}, {6.0, 3.0 * pF}};
    EXPECT_THROW(build_capacitance_curve(SensorGeometry{}, MaterialSpec{}, req, uniform_force_grid(6.0, 11)),
                 input_error);
}

TEST(Sensor, CurveCsvRoundTrip) {
    const auto curve = default_curve();
    std::stringstream ss;
    write_curve_csv(ss, curve);
    const auto back = read_curve_csv(ss);
    ASSERT_EQ(back.size(), curve.samples().size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_DOUBLE_EQ(back[i].force, curve.samples()[i].force);
        EXPECT_NEAR(back[i].capacitance, curve.samples()[i].capacitance, 1e-27);
    }
    std::stringstream bad("force_n,capacitance_pf\n0,1\n1,x\n");
    try {
        read_curve_csv(bad);
        FAIL();
    } catch (const import_error& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
}

// ---------------------------------------------------------------------------
// transduction

TEST(Transduction, ReflectPhaseOracle) {
    EXPECT_NEAR(reflect_phase(1.0 * pF, line900), 148.4242, 1e-4);   // oracle
    EXPECT_NEAR(reflect_phase(1.65 * pF, line900), 129.9794, 1e-4);  // oracle
    EXPECT_NEAR(reflect_phase(10.0 * pF, line900), 38.9551, 1e-4);   // oracle
    EXPECT_NEAR(delta_phi(1.0 * pF, 1.65 * pF, line900), 18.4448, 1e-4);
}

TEST(Transduction, GammaIsUnitMagnitudeAndMatchesReflectPhase) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> logc(-15.0, -8.0);
    for (int i = 0; i < 1000; ++i) {
        const double c = std::pow(10.0, logc(rng));
        const auto r = reflection_coefficient(c, line900);
        ASSERT_NEAR(r.magnitude, 1.0, 1e-12);
        ASSERT_NEAR(r.phase_deg, reflect_phase(c, line900), 1e-9);
    }
}

TEST(Transduction, LimitsAndErrors) {
    EXPECT_NEAR(reflect_phase(1e-3, line900), 0.0, 1e-6);    // short
    EXPECT_NEAR(reflect_phase(1e-20, line900), 180.0, 1e-6);  // open
    EXPECT_THROW(reflect_phase(0.0, line900), input_error);
    EXPECT_THROW(reflect_phase(-1e-12, line900), input_error);
    EXPECT_THROW(reflect_phase(1e-12, LineSpec{0.0, 900e6}), input_error);
    EXPECT_THROW(reflect_phase(1e-12, LineSpec{50.0, -1.0}), input_error);
    EXPECT_THROW(delta_phi(2e-12, 1e-12, line900), input_error);
    EXPECT_EQ(delta_phi(1e-12, 1e-12, line900), 0.0);
}

TEST(Transduction, ThruDoublesToReflectProperty) {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> logc(-14.0, -9.0);
    double prev_c = 0.0, prev_phi = 181.0;
    std::vector<double> cs;
    for (int i = 0; i < 500; ++i) cs.push_back(std::pow(10.0, logc(rng)));
    std::sort(cs.begin(), cs.end());
    for (double c : cs) {
        ASSERT_LE(std::abs(2.0 * thru_phase(c, line900) - reflect_phase(c, line900)), 1e-9);
        const double phi = reflect_phase(c, line900);
        if (c > prev_c) {
            ASSERT_LT(phi, prev_phi);
        }
        prev_c = c;
        prev_phi = phi;
    }
}

TEST(Transduction, SweepOracleAndShape) {
    const auto sweep = delta_phi_sweep({0.1 * pF, 1 * pF, 10 * pF, 100 * pF}, 1.75, line900);
    EXPECT_NEAR(sweep[0].delta_phi, 2.42624, 1e-4);  // oracle
    EXPECT_NEAR(sweep[1].delta_phi, 21.07669, 1e-4);
    EXPECT_NEAR(sweep[2].delta_phi, 16.10377, 1e-4);
    EXPECT_NEAR(sweep[3].delta_phi, 1.73556, 1e-4);

    const auto fine = delta_phi_sweep(log_grid(0.01 * pF, 1000 * pF, 201), 1.75, line900);
    auto peak = std::max_element(fine.begin(), fine.end(),
                                 [](auto& a, auto& b) { return a.delta_phi < b.delta_phi; });
    EXPECT_GT(peak->c0, 1 * pF);
    EXPECT_LT(peak->c0, 10 * pF);
    EXPECT_LT(fine.front().delta_phi, 5.0);
    EXPECT_LT(fine.back().delta_phi, 5.0);

    EXPECT_THROW(delta_phi_sweep({}, 1.75, line900), input_error);
    EXPECT_THROW(delta_phi_sweep({1 * pF}, 1.0, line900), input_error);
    EXPECT_THROW(delta_phi_sweep({2 * pF, 1 * pF}, 1.5, line900), input_error);
    EXPECT_THROW(log_grid(0.0, 1.0, 5), input_error);
}

TEST(Transduction, SweepCsv) {
    std::stringstream ss;
    write_sweep_csv(ss, delta_phi_sweep({1 * pF}, 1.75, line900));
    std::string header, row;
    std::getline(ss, header);
    std::getline(ss, row);
    EXPECT_EQ(header, "c0_pf,delta_phi_deg");
    EXPECT_EQ(row.substr(0, 2), "1,");
}

TEST(Transduction, PerChannelSpanAcrossBand) {
    // The span grows with frequency across 902-928 MHz; the spread is a few
    // tenths of a degree and is computed, not assumed.
    const double lo = delta_phi(1 * pF, 1.65 * pF, LineSpec{50, 902.25e6});
    const double hi = delta_phi(1 * pF, 1.65 * pF, LineSpec{50, 926.75e6});
    EXPECT_NEAR(lo, 18.4795, 1e-4);  // oracle
    EXPECT_NEAR(hi, 18.8530, 1e-4);  // oracle
    EXPECT_NEAR(hi - lo, 0.3735, 2e-4);
}

// ---------------------------------------------------------------------------
// design

TEST(Design, CalibratedModulusReproducesRatio) {
    const double mu = calibrate_modulus(SensorGeometry{}, MaterialSpec{}, 6.0, 1.65);
    EXPECT_NEAR(mu, 354368.76, 0.05);  // oracle
    MaterialSpec m;
    m.shear_modulus = mu;
    EXPECT_NEAR(1.0 / solve_compression(6.0, SensorGeometry{}, m), 1.65, 1e-8);
    EXPECT_THROW(calibrate_modulus(SensorGeometry{}, MaterialSpec{}, 6.0, 1.0), calibration_error);
    EXPECT_THROW(calibrate_modulus(SensorGeometry{}, MaterialSpec{}, 0.0, 1.5), calibration_error);
}

TEST(Design, SweepRankingAndFlags) {
    std::vector<SensorGeometry> grid;
    for (double d : {0.05e-3, 0.2e-3, 2e-3}) grid.push_back({4e-3, 2e-3, d, 35e-6});
    const auto out = sweep_designs(grid, {MaterialSpec{}}, 6.0, line900, CapacitanceBand::strict());
    ASSERT_EQ(out.size(), 3u);
    for (std::size_t i = 1; i < out.size(); ++i) EXPECT_GE(out[i - 1].delta_phi_deg, out[i].delta_phi_deg);
    for (const auto& d : out) EXPECT_EQ(d.flagged, !CapacitanceBand::strict().contains(d.c0));
    EXPECT_THROW(sweep_designs({}, {MaterialSpec{}}, 6.0, line900), input_error);
}

TEST(Design, TiesBreakLexicographically) {
    const SensorGeometry a{4e-3, 2e-3, 0.2e-3, 35e-6}, b{2e-3, 4e-3, 0.2e-3, 35e-6};  // same area
    const auto out = sweep_designs({a, b}, {MaterialSpec{}}, 6.0, line900);
    ASSERT_EQ(out[0].delta_phi_deg, out[1].delta_phi_deg);
    EXPECT_EQ(out[0].geometry.length, 2e-3);
}

TEST(Design, Presets) {
    for (const auto& p : design_presets()) {
        const auto d = evaluate_preset(p, line900);
        if (p.target_delta_phi_deg > 0.0) {
            EXPECT_NEAR(d.delta_phi_deg, p.target_delta_phi_deg, 1e-6) << p.name;
        } else {
            EXPECT_NEAR(d.c_max / d.c0, p.target_ratio, 1e-8) << p.name;
        }
    }
    EXPECT_THROW(find_preset("nope"), input_error);
}

TEST(Design, CsvHeader) {
    std::stringstream ss;
    write_design_csv(ss, {evaluate_design(SensorGeometry{}, MaterialSpec{}, 6.0, line900)});
    std::string header, row;
    std::getline(ss, header);
    std::getline(ss, row);
    EXPECT_EQ(header, "len_mm,wid_mm,d_mm,eps_r,mu_kpa,c0_pf,cmax_pf,delta_phi_deg,flag");
    EXPECT_EQ(row.substr(row.size() - 3), ",ok");
}

TEST(Design, ResolutionArithmetic) {
    EXPECT_EQ(resolution_from_phase_accuracy(0.5), 0.2);
    EXPECT_EQ(resolution_from_phase_accuracy(1.0), 0.4);
    EXPECT_THROW(resolution_from_phase_accuracy(1.0, 0.0), input_error);
}
