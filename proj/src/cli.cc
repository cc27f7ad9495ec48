// Copyright 2026 The trapsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "trapsim/cli_io.h"
#include "trapsim/raman_dynamics.h"

namespace trapsim::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json vec_json(const trap::Vec3 &v) {
    return json::array({v.x(), v.y(), v.z()});
}

std::vector<double> parse_list(const std::string &text, const std::string &flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(cell, &used));
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception &) {
            throw UsageError(flag + ": not a number: '" + cell + "'");
        }
    }
    if (out.empty()) throw UsageError(flag + ": empty list");
    return out;
}

std::optional<std::int64_t> parse_shots(const std::string &text) {
    if (text == "inf") return std::nullopt;
    try {
        std::size_t used = 0;
        long long v = std::stoll(text, &used);
        if (used != text.size() || v < 1) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception &) {
        throw UsageError("--shots: expected a positive integer or 'inf', got '" + text + "'");
    }
}

// start:stop:step in volts.
void parse_grid(const std::string &text, ScanConfig &scan) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ':')) {
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(cell, &used));
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception &) {
            throw UsageError("--grid: expected start:stop:step, got '" + text + "'");
        }
    }
    if (parts.size() != 3 || !(parts[2] > 0) || parts[1] < parts[0]) {
        throw UsageError("--grid: expected start:stop:step with step > 0 and stop >= start, got '" + text + "'");
    }
    scan.grid_start = parts[0];
    scan.grid_stop = parts[1];
    scan.grid_step = parts[2];
}

// Writes to the file when given, stdout otherwise.
void emit(const std::optional<fs::path> &path, const std::function<void(std::ostream &)> &write) {
    if (path && !path->empty() && *path != "-") {
        std::ofstream out(*path, std::ios::binary);
        if (!out) throw ConfigError("cannot write " + path->string());
        write(out);
        if (!out) throw ConfigError("write failed: " + path->string());
    } else {
        write(std::cout);
    }
}

void emit_json(const std::optional<fs::path> &path, const json &doc) {
    emit(path, [&](std::ostream &out) { out << doc.dump(2) << '\n'; });
}

std::string error_kind(const std::exception &e) {
    if (dynamic_cast<const ConfigError *>(&e)) return "config";
    if (dynamic_cast<const TruncationError *>(&e)) return "truncation";
    if (dynamic_cast<const fitkit::FitError *>(&e)) return "fit";
    if (dynamic_cast<const IntegrationError *>(&e)) return "integration";
    if (dynamic_cast<const trap::SearchError *>(&e)) return "search";
    if (dynamic_cast<const trap::InstabilityError *>(&e)) return "instability";
    if (dynamic_cast<const DomainError *>(&e)) return "domain";
    if (dynamic_cast<const json::exception *>(&e)) return "config";
    if (dynamic_cast<const Error *>(&e)) return "error";
    return "internal";
}

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string shots;
};

ExperimentConfig base_config(const Options &o) {
    ExperimentConfig c = o.config.empty() ? default_config() : load_config(o.config);
    if (!o.out.empty()) {
        c.output_csv = o.out;
        c.output_json = o.out;
    }
    c.seed = effective_seed(c);
    if (o.seed) c.seed = *o.seed;
    if (!o.shots.empty()) c.shots = parse_shots(o.shots);
    return c;
}

json operating_point_json(const trap::TrapOperatingPoint &op, const trap::CompensationGain &gain) {
    json j;
    j["rf_drive_frequency_hz"] = op.rf_drive_frequency;
    j["rf_amplitude_v"] = op.rf_amplitude;
    j["dc_voltages_v"] = op.dc_voltages;
    j["rf_null_m"] = vec_json(op.rf_null);
    j["ion_position_m"] = vec_json(op.ion_position);
    j["ion_height_m"] = op.ion_height;
    j["secular_frequencies_hz"] = op.secular_frequencies;
    j["radial_frequencies_hz"] = op.radial_frequencies;
    j["axial_frequency_hz"] = op.axial_frequency;
    j["mathieu_q"] = op.mathieu_q;
    j["normal_frequency_hz"] = op.normal_frequency();
    j["normal_mathieu_q"] = op.normal_mathieu_q();
    json axes = json::array();
    for (const auto &a : op.principal_axes) axes.push_back(vec_json(a));
    j["principal_axes"] = axes;
    j["compensation_gain"] = {{"field_per_volt_v_per_m", vec_json(gain.field_per_volt)},
                              {"magnitude_v_per_m", gain.magnitude}};
    return j;
}

int cmd_trap(const Options &o, const std::string &layout_file, const std::string &emit_layout) {
    ExperimentConfig c = base_config(o);
    if (!layout_file.empty()) c.layout_path = layout_file;
    trap::ElectrodeLayout layout = c.layout();
    if (!emit_layout.empty()) emit(fs::path(emit_layout), [&](std::ostream &out) { write_layout(out, layout); });
    auto op = trap::rf_null_and_frequencies(layout, c.species);
    auto idc = layout.indices(trap::ElectrodeRole::IDC);
    auto gain = trap::compensation_gain(layout, idc, op.ion_position);
    emit_json(c.output_json, operating_point_json(op, gain));
    return 0;
}

struct ScanFlags {
    std::optional<double> stray;
    std::string grid;
    std::string times;
    std::optional<double> rabi;
    std::optional<double> gain;
};

int cmd_dc_scan(const Options &o, const ScanFlags &f) {
    ExperimentConfig c = base_config(o);
    if (f.stray) {
        c.scan.stray = *f.stray;
        c.scan.charging.reset();
    }
    if (!f.grid.empty()) parse_grid(f.grid, c.scan);
    if (!f.times.empty()) c.scan.timestamps = parse_list(f.times, "--times");
    if (f.gain) c.scan.gain = *f.gain;
    double rabi = f.rabi ? *f.rabi : c.drive.rabi;
    auto setup = micromotion_setup(c);
    double duration = c.drive.duration > 0 ? c.drive.duration : setup.pi_time(rabi);
    DriveParams pulse(rabi, duration);
    double gain = compensation_gain(c);
    std::vector<double> grid = c.scan.grid();

    std::vector<double> ts = c.scan.timestamps;
    double t_lo = *std::min_element(ts.begin(), ts.end());
    double t_hi = *std::max_element(ts.begin(), ts.end());
    auto trajectory = c.scan.charging
                          ? micromotion::StrayFieldTrajectory::charging(c.scan.charging->e0, c.scan.charging->step,
                                                                        c.scan.charging->e_inf, c.scan.charging->t_on,
                                                                        c.scan.charging->tau, t_lo, std::max(t_hi, t_lo + 1e-9))
                          : micromotion::StrayFieldTrajectory::constant(c.scan.stray);
    auto records = micromotion::simulate_scan(trajectory, ts, grid, gain, pulse, setup, c.shots, c.seed);
    emit(c.output_csv, [&](std::ostream &out) { write_csv(out, scan_records_to_csv(records)); });
    return 0;
}

int cmd_fit_scan(const Options &o, const std::string &in, std::optional<double> gain_flag, std::optional<double> t_on,
                 double tau_guess) {
    ExperimentConfig c = base_config(o);
    if (gain_flag) c.scan.gain = *gain_flag;
    double gain = compensation_gain(c);
    auto table = read_csv(in, {"timestamp_s", "delta_v_V", "p1", "shots"});
    auto records = scan_records_from_csv(table, gain);
    auto series = micromotion::monitor_series(records);
    json rows = json::array();
    for (const auto &s : series) {
        json r = {{"t", s.timestamp}};
        if (s.error) {
            r["error"] = *s.error;
        } else {
            r["e_y_estimate"] = s.e_y_estimate;
            r["sigma"] = s.sigma;
            r["chi2red"] = s.chi2_reduced;
        }
        rows.push_back(r);
    }
    if (!t_on) {
        emit_json(c.output_json, rows);
        return 0;
    }
    auto fit = micromotion::fit_charging(series, *t_on, tau_guess);
    json doc = {{"series", rows},
                {"charging",
                 {{"e0_v_per_m", fit.e0},
                  {"e0_error", fit.e0_error},
                  {"step_v_per_m", fit.step},
                  {"step_error", fit.step_error},
                  {"e_inf_v_per_m", fit.e_inf},
                  {"e_inf_error", fit.e_inf_error},
                  {"tau_s", fit.tau},
                  {"tau_error", fit.tau_error},
                  {"chi2red", fit.chi2_reduced}}}};
    emit_json(c.output_json, doc);
    return 0;
}

int cmd_rabi(const Options &o) {
    ExperimentConfig c = base_config(o);
    auto modes = c.mode_specs();
    auto phonons = c.phonons();
    auto times = c.times.values();
    auto p1 = raman::rabi_curve(times, c.drive, c.geometry, modes, phonons);
    CsvTable table{{"t_us", "p1"}, {}};
    fitkit::Rng rng(fitkit::derive_seed(c.seed, 0));
    for (std::size_t i = 0; i < times.size(); i++) {
        double p = p1[i];
        if (c.shots) p = static_cast<double>(fitkit::sample_binomial(rng, *c.shots, p)) / static_cast<double>(*c.shots);
        table.rows.push_back({times[i] * 1e6, p});
    }
    emit(c.output_csv, [&](std::ostream &out) { write_csv(out, table); });
    return 0;
}

int cmd_fit_rabi(const Options &o, const std::string &in, const std::string &nbar_guess) {
    ExperimentConfig c = base_config(o);
    auto table = read_csv(in, {"t_us", "p1"});
    raman::RabiMeasurement m;
    for (const auto &row : table.rows) {
        m.times.push_back(row[0] * 1e-6);
        m.p1.push_back(row[1]);
        if (c.shots) m.shots.push_back(static_cast<double>(*c.shots));
    }
    json doc;
    if (c.geometry.configuration == BeamConfiguration::co_propagating) {
        auto fit = raman::fit_carrier_contrast(m, c.drive.rabi);
        doc = {{"model", "sinusoid"}, {"contrast", fit.contrast}, {"rabi_hz", fit.rabi}, {"chi2red", fit.chi2_reduced}};
    } else {
        auto modes = c.mode_specs();
        std::vector<double> guess;
        if (!nbar_guess.empty()) guess = parse_list(nbar_guess, "--nbar-guess");
        auto fit = raman::fit_nbar(m, c.drive, c.geometry, modes, guess);
        doc = {{"model", "thermal"},
               {"rabi_hz", fit.rabi},
               {"rabi_error_hz", fit.rabi_error},
               {"nbar", fit.nbar},
               {"nbar_error", fit.nbar_error},
               {"nbar_sum", fit.nbar_sum},
               {"nbar_sum_error", fit.nbar_sum_error},
               {"chi2red", fit.chi2_reduced},
               {"warnings", fit.warnings}};
    }
    emit_json(c.output_json, doc);
    return 0;
}

int cmd_sbc(const Options &o, const std::string &schedule_file) {
    ExperimentConfig c = base_config(o);
    fs::path path = schedule_file.empty() ? c.schedule_path.value_or(fs::path()) : fs::path(schedule_file);
    if (path.empty()) throw UsageError("sbc: --schedule FILE is required");
    ScheduleFile sched = load_schedule(path, c);
    ExperimentConfig with_modes = c;
    with_modes.modes = sched.modes;
    auto specs = with_modes.mode_specs();
    auto phonons = with_modes.phonons();
    std::map<ModeId, PhononDistribution> initial;
    std::map<ModeId, double> etas;
    for (std::size_t i = 0; i < specs.size(); i++) {
        initial.emplace(specs[i].mode_id, phonons[i]);
        etas[specs[i].mode_id] = specs[i].lamb_dicke;
    }
    auto trace = cooling::run_schedule(initial, sched.schedule, etas, sched.heating);
    CsvTable table{{"pulse", "t_s"}, {}};
    for (ModeId m : trace.modes) table.columns.push_back("nbar_" + to_string(m));
    double t = 0;
    for (std::size_t i = 0; i < trace.nbar.size(); i++) {
        if (i > 0) t += sched.schedule.pulses[i - 1].duration;
        std::vector<double> row = {static_cast<double>(i), t};
        row.insert(row.end(), trace.nbar[i].begin(), trace.nbar[i].end());
        table.rows.push_back(std::move(row));
    }
    emit(c.output_csv, [&](std::ostream &out) { write_csv(out, table); });
    return 0;
}

int cmd_heating(const Options &o, std::optional<double> rate, std::optional<double> nbar0, const std::string &times) {
    ExperimentConfig c = base_config(o);
    if (rate) c.heating.rate = *rate;
    if (nbar0) c.heating.nbar0 = *nbar0;
    if (!times.empty()) c.heating.times = parse_list(times, "--times");
    PhononDistribution start = c.heating.nbar0 == 0 ? PhononDistribution::ground() : thermal_pmf(c.heating.nbar0);
    cooling::HeatingRate hr(c.heating.rate, ModeId::r2);
    CsvTable table{{"t_s", "nbar"}, {}};
    for (double t : c.heating.times) {
        table.rows.push_back({t, cooling::evolve_heating(start, hr, t).mean()});
    }
    emit(c.output_csv, [&](std::ostream &out) { write_csv(out, table); });
    return 0;
}

int cmd_ms_gate(const Options &o) {
    ExperimentConfig c = base_config(o);
    auto times = c.ms_gate.times();
    auto curve = ms::apply_confusion(ms::propagate(c.ms_gate.params, times), c.ms_gate.confusion);
    for (const auto &w : curve.warnings) std::cerr << "warning: " << w << '\n';
    CsvTable table{{"t_us", "p00", "p01", "p10", "p11"}, {}};
    if (c.shots) {
        auto data = ms::sample_curve(curve, *c.shots, fitkit::derive_seed(c.seed, 0));
        for (std::size_t i = 0; i < data.times.size(); i++) {
            const auto &p = data.populations[i];
            table.rows.push_back({data.times[i] * 1e6, p[0], p[1], p[2], p[3]});
        }
    } else {
        for (std::size_t i = 0; i < curve.size(); i++) {
            auto p = curve.at(i);
            table.rows.push_back({curve.times[i] * 1e6, p[0], p[1], p[2], p[3]});
        }
    }
    emit(c.output_csv, [&](std::ostream &out) { write_csv(out, table); });
    return 0;
}

int cmd_fit_ms(const Options &o, const std::string &in) {
    ExperimentConfig c = base_config(o);
    auto table = read_csv(in, {"t_us", "p00", "p01", "p10", "p11"});
    ms::MSMeasurement data;
    for (const auto &row : table.rows) {
        data.times.push_back(row[0] * 1e-6);
        data.populations.push_back({row[1], row[2], row[3], row[4]});
    }
    if (c.shots) data.shots = static_cast<double>(*c.shots);
    ms::ConfusionMatrix cm_guess = c.ms_gate.confusion;
    if (cm_guess.p10 == 0 && cm_guess.p01 == 0) cm_guess = ms::ConfusionMatrix(0.02, 0.02);
    auto fit = ms::fit_ms(data, c.ms_gate.params, cm_guess);
    json doc = {{"rabi_hz", fit.params.rabi},
                {"rabi_error_hz", fit.errors[0]},
                {"detuning_hz", fit.params.detuning},
                {"detuning_error_hz", fit.errors[1]},
                {"initial_nbar", fit.params.initial_nbar},
                {"initial_nbar_error", fit.errors[2]},
                {"p10", fit.confusion.p10},
                {"p10_error", fit.errors[3]},
                {"p01", fit.confusion.p01},
                {"p01_error", fit.errors[4]},
                {"heating_rate_quanta_per_s", fit.params.heating_rate},
                {"lamb_dicke", fit.params.mode.lamb_dicke},
                {"n_max", fit.params.n_max},
                {"parameters", fit.names},
                {"covariance", fit.covariance},
                {"chi2red", fit.chi2_reduced},
                {"warnings", fit.warnings}};
    emit_json(c.output_json, doc);
    return 0;
}

}  // namespace

int run_subcommand(int argc, char **argv) {
    CLI::App app{"trapsim: surface-trap ion simulator and estimation toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "trapsim 0.1.0");

    Options o;
    auto common = [&](CLI::App *sub, bool shots) {
        sub->add_option("--config", o.config, "experiment config (JSON)")->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "output file (default stdout)");
        sub->add_option("--seed", o.seed, "master seed (overrides config and TRAPSIM_SEED)");
        if (shots) sub->add_option("--shots", o.shots, "shots per point, or 'inf' for expected values");
    };

    std::string layout_file, emit_layout;
    auto *trap_cmd = app.add_subcommand("trap", "RF null, secular frequencies and Mathieu q of a layout");
    common(trap_cmd, false);
    trap_cmd->add_option("--layout", layout_file, "electrode layout (JSON)")->check(CLI::ExistingFile);
    trap_cmd->add_option("--emit-layout", emit_layout, "also write the layout in use as JSON");

    ScanFlags scan;
    auto *scan_cmd = app.add_subcommand("dc-scan", "simulate DC scans of the compensation voltage");
    common(scan_cmd, true);
    scan_cmd->add_option("--stray", scan.stray, "constant stray field E_y (V/m)");
    scan_cmd->add_option("--grid", scan.grid, "voltage grid start:stop:step (V)");
    scan_cmd->add_option("--times", scan.times, "scan timestamps t1,t2,... (s)");
    scan_cmd->add_option("--rabi", scan.rabi, "carrier Rabi frequency (Hz)");
    scan_cmd->add_option("--gain", scan.gain, "compensation gain (V/m per V)");

    std::string scan_in;
    std::optional<double> fit_gain, t_on;
    double tau_guess = 5.0;
    auto *fit_scan_cmd = app.add_subcommand("fit-scan", "fit the offset of every scan in a scan CSV");
    common(fit_scan_cmd, false);
    fit_scan_cmd->add_option("--in", scan_in, "scan CSV")->required()->check(CLI::ExistingFile);
    fit_scan_cmd->add_option("--gain", fit_gain, "compensation gain (V/m per V)");
    fit_scan_cmd->add_option("--t-on", t_on, "also fit the charging model with this turn-on time (s)");
    fit_scan_cmd->add_option("--tau-guess", tau_guess, "initial charging time constant (s)");

    auto *rabi_cmd = app.add_subcommand("rabi", "thermal carrier Rabi flops");
    common(rabi_cmd, true);

    std::string rabi_in, nbar_guess;
    auto *fit_rabi_cmd = app.add_subcommand("fit-rabi", "fit mean phonon numbers to carrier flops");
    common(fit_rabi_cmd, true);
    fit_rabi_cmd->add_option("--in", rabi_in, "Rabi CSV")->required()->check(CLI::ExistingFile);
    fit_rabi_cmd->add_option("--nbar-guess", nbar_guess, "initial n1,n2");

    std::string schedule_file;
    auto *sbc_cmd = app.add_subcommand("sbc", "pulsed sideband cooling schedule");
    common(sbc_cmd, false);
    sbc_cmd->add_option("--schedule", schedule_file, "schedule (JSON)")->check(CLI::ExistingFile);

    std::optional<double> rate, nbar0;
    std::string heat_times;
    auto *heat_cmd = app.add_subcommand("heating", "mean phonon number under diffusive heating");
    common(heat_cmd, false);
    heat_cmd->add_option("--rate", rate, "heating rate (quanta/s)");
    heat_cmd->add_option("--nbar0", nbar0, "initial thermal n̄");
    heat_cmd->add_option("--times", heat_times, "delay times t1,t2,... (s)");

    auto *ms_cmd = app.add_subcommand("ms-gate", "two-ion Mølmer–Sørensen population curves");
    common(ms_cmd, true);
    ms_cmd->add_option("--params", o.config, "gate parameters (JSON config)")->check(CLI::ExistingFile);

    std::string ms_in;
    auto *fit_ms_cmd = app.add_subcommand("fit-ms", "fit MS gate parameters and readout errors");
    common(fit_ms_cmd, true);
    fit_ms_cmd->add_option("--in", ms_in, "population CSV")->required()->check(CLI::ExistingFile);
    fit_ms_cmd->add_option("--params", o.config, "initial guess (JSON config)")->check(CLI::ExistingFile);

    auto *self_cmd = app.add_subcommand("selftest", "run the built-in oracle checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        if (trap_cmd->parsed()) return cmd_trap(o, layout_file, emit_layout);
        if (scan_cmd->parsed()) return cmd_dc_scan(o, scan);
        if (fit_scan_cmd->parsed()) return cmd_fit_scan(o, scan_in, fit_gain, t_on, tau_guess);
        if (rabi_cmd->parsed()) return cmd_rabi(o);
        if (fit_rabi_cmd->parsed()) return cmd_fit_rabi(o, rabi_in, nbar_guess);
        if (sbc_cmd->parsed()) return cmd_sbc(o, schedule_file);
        if (heat_cmd->parsed()) return cmd_heating(o, rate, nbar0, heat_times);
        if (ms_cmd->parsed()) return cmd_ms_gate(o);
        if (fit_ms_cmd->parsed()) return cmd_fit_ms(o, ms_in);
        if (self_cmd->parsed()) return run_selftest(std::cout) == 0 ? 0 : 1;
    } catch (const UsageError &e) {
        std::cerr << "usage error: " << e.what() << "\nRun with --help for more information.\n";
        return 2;
    } catch (const std::exception &e) {
        json err = {{"kind", error_kind(e)}, {"message", e.what()}};
        if (auto *t = dynamic_cast<const TruncationError *>(&e)) err["suggested_n_max"] = t->suggested_n_max;
        std::cerr << json{{"error", err}}.dump() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace trapsim::io
