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

#ifndef TRAPSIM_CLI_IO_H
#define TRAPSIM_CLI_IO_H

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trapsim/cool_heat.h"
#include "trapsim/core_types.h"
#include "trapsim/micromotion_scan.h"
#include "trapsim/ms_gate.h"
#include "trapsim/trap_field.h"

namespace trapsim::io {

/// Schema violation or unreadable input file.
struct ConfigError : Error {
    using Error::Error;
};

struct ModeConfig {
    ModeId mode;
    double frequency;                  // Hz
    std::optional<double> lamb_dicke;  // derived from geometry when absent
    double nbar = 0.0;
};

struct TimeGrid {
    double start = 0.0;  // s
    double stop = 20e-6;
    int points = 101;

    std::vector<double> values() const;
};

struct ChargingConfig {
    double e0 = 0.0;  // V/m
    double step = 0.0;
    double e_inf = 0.0;
    double t_on = 0.0;  // s
    double tau = 1.0;
};

struct ScanConfig {
    double stray = 0.0;  // V/m, constant trajectory
    std::optional<ChargingConfig> charging;
    double grid_start = -3.0;  // V
    double grid_stop = 3.0;
    double grid_step = 0.01;
    std::vector<double> timestamps = {0.0};  // s
    std::optional<double> gain;              // V/m per V

    std::vector<double> grid() const;
};

struct HeatingConfig {
    double rate = 0.0;  // quanta / s
    double nbar0 = 0.0;
    std::vector<double> times = {0.0};  // s
};

struct MSConfig {
    ms::MSGateParams params{49.9e3, -9.4e3};
    ms::ConfusionMatrix confusion;
    int points = 61;

    std::vector<double> times() const;
};

struct OperatingOverrides {
    std::optional<double> mathieu_q;
    std::optional<double> normal_frequency;  // Hz
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    IonSpecies species = IonSpecies::yb171();
    RamanGeometry geometry = RamanGeometry::counter_355nm();
    std::optional<std::filesystem::path> layout_path;
    OperatingOverrides operating_point;
    DriveParams drive{545e3, 0.0};  // duration 0 = π time of the drive
    std::vector<ModeConfig> modes;
    TimeGrid times;
    std::optional<std::int64_t> shots;  // empty = expected values
    ScanConfig scan;
    std::optional<std::filesystem::path> schedule_path;
    HeatingConfig heating;
    MSConfig ms_gate;
    std::optional<std::filesystem::path> output_csv;
    std::optional<std::filesystem::path> output_json;

    /// Radial modes with Lamb–Dicke parameters resolved against the geometry.
    std::vector<ModeSpec> mode_specs() const;
    std::vector<PhononDistribution> phonons() const;
    trap::ElectrodeLayout layout() const;
};

/// Defaults used when no config file is given: 171Yb+, 355 nm
/// counter-propagating beams, radial modes 1.84 / 2.11 MHz in the ground
/// state, Ω/2π = 545 kHz.
ExperimentConfig default_config();

/// Strict JSON parse: unknown keys, wrong types and out-of-range values are
/// rejected with the offending key path (and line/column for syntax errors).
/// Referenced files are resolved relative to the config file and must exist.
ExperimentConfig load_config(const std::filesystem::path &path);
ExperimentConfig parse_config(const std::string &text, const std::filesystem::path &base_dir,
                              const std::string &source = "<config>");

/// Layout file: {"rf_drive_frequency_hz", "patches": [{role, x1, x2, z1, z2, voltage, name}]}.
trap::ElectrodeLayout load_layout(const std::filesystem::path &path);
void write_layout(std::ostream &out, const trap::ElectrodeLayout &layout);

struct ScheduleFile {
    cooling::PulseSchedule schedule;
    std::vector<ModeConfig> modes;
    std::map<ModeId, double> heating;  // quanta / s
};

/// Either a bare JSON list of pulses or an object with "pulses" or
/// "default" plus optional "modes", "heating_rates" and "repump_after_each".
ScheduleFile load_schedule(const std::filesystem::path &path, const ExperimentConfig &config);

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

/// Reads a CSV with exactly the given header. Blank lines and lines
/// starting with '#' are skipped.
CsvTable read_csv(const std::filesystem::path &path, const std::vector<std::string> &columns);
void write_csv(std::ostream &out, const CsvTable &table);
std::string format_number(double value);

std::vector<micromotion::ScanRecord> scan_records_from_csv(const CsvTable &table, double gain);
CsvTable scan_records_to_csv(const std::vector<micromotion::ScanRecord> &records);

/// Micromotion forward model for a config: default or loaded layout, then
/// overrides.
micromotion::MicromotionSetup micromotion_setup(const ExperimentConfig &config);
/// Normal-direction field per volt on the IDC pair of the config's layout.
double compensation_gain(const ExperimentConfig &config);

/// Master seed after the TRAPSIM_SEED environment override.
std::uint64_t effective_seed(const ExperimentConfig &config);

/// Runs the oracle checks of `trapsim selftest`; prints one PASS/FAIL line
/// per check and returns the number of failures.
int run_selftest(std::ostream &out);

/// Full command-line entry point. Returns the process exit code: 0 success,
/// 1 physics/fit/config error (JSON report on stderr), 2 usage error.
int run_subcommand(int argc, char **argv);

}  // namespace trapsim::io

#endif
