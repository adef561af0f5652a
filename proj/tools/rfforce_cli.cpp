// rfforce: command-line front end for the simulator, estimator and design tools.
//
//   rfforce simulate       --config scenario.json --seed 7 --out trace.jsonl
//   rfforce estimate       --trace trace.jsonl --calibration cal.json --baseline 0,2 --event 10,12
//   rfforce calibrate      --samples pairs.csv --out cal.json      (or --from-model)
//   rfforce sweep          --c0-min 0.01 --c0-max 1000 --points 61 --ratio 1.75
//   rfforce casestudy-box  --seed 7
//   rfforce casestudy-step --seed 7 [--preload-n 1]
//   rfforce import         --input reader.csv --units raw4096 --out trace.jsonl
//
// Exit codes: 0 success, 2 usage/config, 3 data/import, 4 estimation failure.

#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rfforce/rfforce.hpp"

namespace {

using namespace rfforce;

std::vector<double> parse_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (trim(item).empty()) continue;
        auto v = parse_double(item);
        if (!v) throw input_error(what + ": '" + item + "' is not a number");
        out.push_back(*v);
    }
    return out;
}

TimeWindow parse_window(const std::string& text, const std::string& what) {
    const auto v = parse_list(text, what);
    if (v.size() != 2) throw input_error(what + ": expected start,end");
    TimeWindow w{v[0], v[1]};
    if (!(w.end > w.start)) throw input_error(what + ": end must be > start");
    return w;
}

// Writes to a file, or stdout when the path is empty or "-".
class output {
public:
    explicit output(const std::string& path) {
        if (path.empty() || path == "-") return;
        file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
        if (!*file_) throw input_error("cannot open '" + path + "' for writing");
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw import_error("cannot open '" + path + "'", 0);
    return in;
}

trace_format format_for(const std::string& flag, const std::string& path) {
    if (!flag.empty()) return parse_trace_format(flag);
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") return trace_format::csv;
    return trace_format::jsonl;
}

ScenarioConfig scenario_or_default(const std::string& path) { return path.empty() ? ScenarioConfig{} : load_scenario(path); }

void make_noiseless(ScenarioConfig& c) {
    c.reader.phase_noise_sigma = 0.0;
    c.reader.flip_probability = 0.0;
    c.reader.rssi_noise_sigma = 0.0;
    c.multipath.dynamic_enabled = false;
    c.multipath.dynamic_sigma = 0.0;
}

CalibrationModel model_calibration(const ScenarioConfig& c) {
    return forward_calibration(c.build_curve(), c.build_line(), c.build_plan());
}

std::size_t channels_covered(const std::vector<TagReadRecord>& records) {
    std::set<int> seen;
    for (const auto& r : records) seen.insert(r.channel_index);
    return seen.size();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RF phase force-sensor laboratory: simulate reader traces, estimate force, size sensors"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Simulate a reader trace from a scenario config");
    std::string sim_config, sim_out, sim_format;
    std::uint64_t sim_seed = 0;
    double sim_duration = -1.0;
    sim->add_option("--config", sim_config, "Scenario JSON (defaults apply when omitted)");
    sim->add_option("--out", sim_out, "Output trace path ('-' for stdout)");
    sim->add_option("--seed", sim_seed, "RNG seed")->required();
    sim->add_option("--format", sim_format, "jsonl or csv (default from --out extension)");
    sim->add_option("--duration", sim_duration, "Override the scenario duration, seconds");

    // estimate
    auto* est = app.add_subcommand("estimate", "Estimate applied force from a trace");
    std::string est_trace, est_cal, est_baseline, est_event, est_epc = default_epc;
    double est_threshold = default_jump_threshold_deg, est_margin = 3.0;
    bool est_median = false, est_no_fold = false;
    est->add_option("--trace", est_trace, "Trace file (jsonl or csv)")->required();
    est->add_option("--calibration", est_cal, "Calibration model JSON")->required();
    est->add_option("--baseline", est_baseline, "Baseline window start,end (s)")->required();
    est->add_option("--event", est_event, "Event window start,end (s)")->required();
    est->add_option("--epc", est_epc, "Tag EPC to use");
    est->add_option("--threshold", est_threshold, "180-degree artifact jump threshold (deg)");
    est->add_option("--margin", est_margin, "Accepted distance outside the calibration domain (deg)");
    est->add_flag("--median", est_median, "Median instead of mean across channels");
    est->add_flag("--no-fold", est_no_fold, "Do not identify per-channel changes a half turn apart");

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "Fit a phase-change -> force polynomial");
    std::string cal_samples, cal_out, cal_config;
    int cal_degree = 2;
    bool cal_from_model = false;
    cal->add_option("--samples", cal_samples, "CSV with header phase_deg,force_n");
    cal->add_option("--degree", cal_degree, "Polynomial degree");
    cal->add_option("--out", cal_out, "Output model JSON ('-' for stdout)");
    cal->add_flag("--from-model", cal_from_model, "Fit to the noiseless forward model of --config");
    cal->add_option("--config", cal_config, "Scenario JSON for --from-model");

    // sweep
    auto* swp = app.add_subcommand("sweep", "Phase-span sweep over C0, or a sensor design sweep");
    std::string swp_c0, swp_out, swp_preset, swp_lengths = "4", swp_widths = "2", swp_thick = "0.2", swp_eps = "2.8",
                                             swp_mu = "354.3";
    double swp_min = 0.0, swp_max = 0.0, swp_ratio = 1.75, swp_freq = 900.0, swp_z0 = 50.0, swp_fmax = 6.0;
    std::size_t swp_points = 0;
    bool swp_designs = false, swp_strict = false;
    swp->add_option("--c0-pf", swp_c0, "Comma-separated C0 values in pF");
    swp->add_option("--c0-min", swp_min, "Log grid start, pF");
    swp->add_option("--c0-max", swp_max, "Log grid end, pF");
    swp->add_option("--points", swp_points, "Log grid points");
    swp->add_option("--ratio", swp_ratio, "C_max / C0");
    swp->add_option("--frequency-mhz", swp_freq, "Carrier frequency, MHz");
    swp->add_option("--z0", swp_z0, "Line impedance, ohm");
    swp->add_option("--out", swp_out, "Output CSV ('-' for stdout)");
    swp->add_flag("--designs", swp_designs, "Sweep sensor geometry/material instead of C0");
    swp->add_option("--lengths-mm", swp_lengths, "Design sweep: plate lengths, mm");
    swp->add_option("--widths-mm", swp_widths, "Design sweep: plate widths, mm");
    swp->add_option("--thickness-mm", swp_thick, "Design sweep: dielectric thicknesses, mm");
    swp->add_option("--eps-r", swp_eps, "Design sweep: relative permittivities");
    swp->add_option("--mu-kpa", swp_mu, "Design sweep: shear moduli, kPa");
    swp->add_option("--f-max", swp_fmax, "Design sweep: rated force, N");
    swp->add_flag("--strict", swp_strict, "Flag C0 outside 1-10 pF instead of 0.5-20 pF");
    swp->add_option("--preset", swp_preset, "Evaluate a calibrated preset: default, low-force, high-force");

    // casestudy-box
    auto* box = app.add_subcommand("casestudy-box", "Classify item counts on the sensor");
    std::string box_config;
    std::uint64_t box_seed = 0;
    BoxStudy box_study;
    bool box_noiseless = false;
    box->add_option("--seed", box_seed, "RNG seed")->required();
    box->add_option("--config", box_config, "Scenario JSON for the reader/sensor profile");
    box->add_option("--trials", box_study.trials, "Number of placements");
    box->add_option("--item-force", box_study.item_force, "Force per item, N");
    box->add_option("--max-items", box_study.max_items, "Largest item count");
    box->add_flag("--noiseless", box_noiseless, "Disable noise, flips and dynamic multipath");

    // casestudy-step
    auto* stp = app.add_subcommand("casestudy-step", "Detect and estimate a 1/3/5 N staircase");
    std::string stp_config;
    std::uint64_t stp_seed = 0;
    StaircaseStudy stp_study;
    bool stp_noiseless = false;
    stp->add_option("--seed", stp_seed, "RNG seed")->required();
    stp->add_option("--config", stp_config, "Scenario JSON for the reader/sensor profile");
    stp->add_option("--preload-n", stp_study.preload, "Constant preload under the staircase, N (e.g. 1)");
    stp->add_option("--hold", stp_study.hold, "Seconds per level");
    stp->add_flag("--noiseless", stp_noiseless, "Disable noise, flips and dynamic multipath");

    // import
    auto* imp = app.add_subcommand("import", "Convert a reader CSV export into a trace file");
    std::string imp_in, imp_units = "deg", imp_out, imp_format;
    imp->add_option("--input", imp_in, "Reader CSV (timestamp, epc, channel, phase, rssi)")->required();
    imp->add_option("--units", imp_units,
                    "Phase units: deg, or raw4096 (reader counts, v * 360 / 4096 degrees; an assumed convention)");
    imp->add_option("--out", imp_out, "Output trace path ('-' for stdout)");
    imp->add_option("--format", imp_format, "jsonl or csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_codes::usage;
    }

    try {
        if (*sim) {
            ScenarioConfig c = scenario_or_default(sim_config);
            if (sim_duration >= 0.0) c.duration = sim_duration;
            c.seed = sim_seed;
            const auto records = c.simulate(sim_seed);
            output out(sim_out);
            write_trace(out.stream(), records, format_for(sim_format, sim_out));
            std::cerr << records.size() << " reads, " << channels_covered(records) << " channels covered\n";
        } else if (*est) {
            auto trace_in = open_input(est_trace);
            const auto records = read_trace(trace_in);
            auto cal_in = open_input(est_cal);
            nlohmann::json cal_json;
            try {
                cal_json = nlohmann::json::parse(cal_in);
            } catch (const nlohmann::json::exception& e) {
                throw config_error(est_cal, e.what());
            }
            const auto model = calibration_from_json(cal_json);
            EstimateOptions opt;
            opt.jump_threshold_deg = est_threshold;
            opt.extrapolation_margin_deg = est_margin;
            opt.statistic = est_median ? channel_statistic::median : channel_statistic::mean;
            opt.diff.fold_half_turn = !est_no_fold;
            const auto e = estimate_force(records, est_epc, model, parse_window(est_baseline, "--baseline"),
                                          parse_window(est_event, "--event"), opt);
            std::cout << to_json(e).dump() << '\n';
            std::cerr << summary_line(e) << '\n';
        } else if (*cal) {
            CalibrationModel model;
            if (cal_from_model) {
                const auto c = scenario_or_default(cal_config);
                model = forward_calibration(c.build_curve(), c.build_line(), c.build_plan(), cal_degree);
            } else {
                if (cal_samples.empty()) throw input_error("calibrate: --samples or --from-model is required");
                auto in = open_input(cal_samples);
                std::string line;
                std::getline(in, line);
                if (trim(line) != "phase_deg,force_n") throw import_error("expected header 'phase_deg,force_n'", 1);
                std::vector<double> phases, forces;
                std::size_t lineno = 1;
                while (std::getline(in, line)) {
                    ++lineno;
                    if (trim(line).empty()) continue;
                    const auto v = parse_list(line, "line " + std::to_string(lineno));
                    if (v.size() != 2) throw import_error("expected phase_deg,force_n", lineno);
                    phases.push_back(v[0]);
                    forces.push_back(v[1]);
                }
                model = fit_calibration(phases, forces, cal_degree);
            }
            output out(cal_out);
            out.stream() << to_json(model).dump(2) << '\n';
            if (!model.monotone) std::cerr << "warning: fitted polynomial is not monotone over its domain\n";
        } else if (*swp) {
            const LineSpec line{swp_z0, swp_freq * 1e6};
            output out(swp_out);
            if (!swp_preset.empty()) {
                write_design_csv(out.stream(), {evaluate_preset(find_preset(swp_preset), line)});
            } else if (swp_designs) {
                std::vector<SensorGeometry> geoms;
                for (double l : parse_list(swp_lengths, "--lengths-mm"))
                    for (double w : parse_list(swp_widths, "--widths-mm"))
                        for (double d : parse_list(swp_thick, "--thickness-mm"))
                            geoms.push_back({l * 1e-3, w * 1e-3, d * 1e-3, 35e-6});
                std::vector<MaterialSpec> mats;
                for (double e : parse_list(swp_eps, "--eps-r"))
                    for (double mu : parse_list(swp_mu, "--mu-kpa")) mats.push_back({e, mu * 1e3, "sweep"});
                if (geoms.empty() || mats.empty()) throw input_error("sweep: empty design grid");
                write_design_csv(out.stream(), sweep_designs(geoms, mats, swp_fmax, line,
                                                             swp_strict ? CapacitanceBand::strict() : CapacitanceBand{}));
            } else {
                std::vector<double> grid;
                if (!swp_c0.empty()) {
                    for (double v : parse_list(swp_c0, "--c0-pf")) grid.push_back(v * 1e-12);
                } else if (swp_points > 0) {
                    grid = log_grid(swp_min * 1e-12, swp_max * 1e-12, swp_points);
                }
                if (grid.empty()) throw input_error("sweep: empty C0 grid (use --c0-pf or --c0-min/--c0-max/--points)");
                write_sweep_csv(out.stream(), delta_phi_sweep(grid, swp_ratio, line));
            }
        } else if (*box) {
            ScenarioConfig c = scenario_or_default(box_config);
            if (box_noiseless) make_noiseless(c);
            const auto rep = casestudy_box(c, model_calibration(c), box_study, box_seed);
            std::cout << to_json(rep).dump(2) << '\n';
        } else if (*stp) {
            ScenarioConfig c = scenario_or_default(stp_config);
            if (stp_noiseless) make_noiseless(c);
            const auto res = casestudy_step(c, model_calibration(c), stp_study, stp_seed);
            std::cout << to_json(res).dump(2) << '\n';
            if (!res.ok) {
                std::cerr << res.diagnostic << '\n';
                return exit_codes::estimation;
            }
        } else if (*imp) {
            auto in = open_input(imp_in);
            const auto records = import_reader_trace(in, parse_phase_units(imp_units));
            output out(imp_out);
            write_trace(out.stream(), records, format_for(imp_format, imp_out));
            std::cerr << records.size() << " reads imported\n";
        }
    } catch (const rfforce::error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_codes::data;
    }
    return exit_codes::ok;
}
