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

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <json.hpp>
#include <numbers>
#include <set>
#include <sstream>

#include "trapsim/cli_io.h"

namespace trapsim::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json(const std::string &text, const std::string &source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error &e) {
        std::size_t line = 1, column = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); i++) {
            if (text[i] == '\n') {
                line++;
                column = 1;
            } else {
                column++;
            }
        }
        throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": invalid JSON (" +
                          e.what() + ")");
    }
}

// Object view that remembers which keys were consumed so leftovers can be
// reported as unknown.
class Node {
   public:
    Node(const json &j, std::string path, std::string source) : j_(j), path_(std::move(path)), source_(std::move(source)) {
        if (!j_.is_object()) fail("expected an object");
    }

    [[noreturn]] void fail(const std::string &what) const { throw ConfigError(source_ + ": " + where() + what); }
    [[noreturn]] void fail(const std::string &key, const std::string &what) const {
        throw ConfigError(source_ + ": key '" + join(key) + "': " + what);
    }

    bool has(const std::string &key) {
        seen_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }

    void require(std::initializer_list<const char *> keys) {
        for (const char *key : keys) {
            if (!j_.contains(key) || j_.at(key).is_null()) fail(key, "required");
        }
    }

    const json &raw(const std::string &key) {
        seen_.insert(key);
        return j_.at(key);
    }

    double number(const std::string &key, double fallback) {
        if (!has(key)) return fallback;
        const json &v = j_.at(key);
        if (!v.is_number()) fail(key, "expected a number");
        double x = v.get<double>();
        if (!std::isfinite(x)) fail(key, "expected a finite number");
        return x;
    }

    double positive(const std::string &key, double fallback) {
        double x = number(key, fallback);
        if (!(x > 0)) fail(key, "must be > 0, got " + format_number(x));
        return x;
    }

    double non_negative(const std::string &key, double fallback) {
        double x = number(key, fallback);
        if (!(x >= 0)) fail(key, "must be >= 0, got " + format_number(x));
        return x;
    }

    double probability(const std::string &key, double fallback) {
        double x = number(key, fallback);
        if (!(x >= 0 && x <= 1)) fail(key, "must lie in [0, 1], got " + format_number(x));
        return x;
    }

    std::int64_t integer(const std::string &key, std::int64_t fallback) {
        if (!has(key)) return fallback;
        const json &v = j_.at(key);
        if (!v.is_number_integer()) fail(key, "expected an integer");
        return v.get<std::int64_t>();
    }

    bool boolean(const std::string &key, bool fallback) {
        if (!has(key)) return fallback;
        const json &v = j_.at(key);
        if (!v.is_boolean()) fail(key, "expected true or false");
        return v.get<bool>();
    }

    std::string string(const std::string &key, const std::string &fallback) {
        if (!has(key)) return fallback;
        const json &v = j_.at(key);
        if (!v.is_string()) fail(key, "expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string &key, std::vector<double> fallback) {
        if (!has(key)) return fallback;
        const json &v = j_.at(key);
        if (!v.is_array()) fail(key, "expected a list of numbers");
        std::vector<double> out;
        for (const json &x : v) {
            if (!x.is_number()) fail(key, "expected a list of numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }

    Node child(const std::string &key) {
        seen_.insert(key);
        return Node(j_.at(key), join(key), source_);
    }

    std::vector<Node> children(const std::string &key) {
        const json &v = raw(key);
        if (!v.is_array()) fail(key, "expected a list of objects");
        std::vector<Node> out;
        for (std::size_t i = 0; i < v.size(); i++) out.emplace_back(v[i], join(key) + "[" + std::to_string(i) + "]", source_);
        return out;
    }

    /// Rejects keys that were never looked at.
    void done() const {
        for (const auto &[key, value] : j_.items()) {
            if (!seen_.contains(key) && key != "_comment" && key != "_source") {
                throw ConfigError(source_ + ": unknown key '" + join(key) + "'");
            }
        }
    }

   private:
    std::string join(const std::string &key) const { return path_.empty() ? key : path_ + "." + key; }
    std::string where() const { return path_.empty() ? "" : "at '" + path_ + "': "; }

    const json &j_;
    std::string path_;
    std::string source_;
    std::set<std::string> seen_;
};

template <typename F>
auto translate(Node &node, const std::string &key, F &&f) {
    try {
        return f();
    } catch (const ConfigError &) {
        throw;
    } catch (const Error &e) {
        node.fail(key, e.what());
    }
}

fs::path existing_file(Node &node, const std::string &key, const fs::path &base) {
    fs::path p = node.string(key, "");
    if (p.empty()) node.fail(key, "expected a file path");
    if (p.is_relative()) p = base / p;
    if (!fs::exists(p)) node.fail(key, "file not found: " + p.string());
    return p;
}

ModeConfig parse_mode(Node &m) {
    m.require({"mode", "frequency_hz"});
    ModeConfig mode{translate(m, "mode", [&] { return mode_id_from_string(m.string("mode", "")); }),
                    m.positive("frequency_hz", 1.0), std::nullopt, m.non_negative("nbar", 0.0)};
    if (m.has("lamb_dicke")) mode.lamb_dicke = m.non_negative("lamb_dicke", 0.0);
    m.done();
    return mode;
}

std::vector<ModeConfig> default_modes() {
    return {ModeConfig{ModeId::r1, 1.84e6, std::nullopt, 0.0}, ModeConfig{ModeId::r2, 2.11e6, std::nullopt, 0.0}};
}

}  // namespace

std::string format_number(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    return buf;
}

std::vector<double> TimeGrid::values() const {
    if (points < 1) throw DomainError("time grid needs at least one point");
    std::vector<double> out;
    for (int i = 0; i < points; i++) {
        out.push_back(points == 1 ? start : start + (stop - start) * i / (points - 1));
    }
    return out;
}

std::vector<double> ScanConfig::grid() const {
    if (!(grid_step > 0) || grid_stop < grid_start) {
        throw DomainError("scan grid needs step > 0 and stop >= start");
    }
    std::vector<double> out;
    auto n = static_cast<long>(std::floor((grid_stop - grid_start) / grid_step + 1e-9));
    for (long i = 0; i <= n; i++) out.push_back(grid_start + static_cast<double>(i) * grid_step);
    return out;
}

std::vector<double> MSConfig::times() const {
    if (points < 2) throw DomainError("MS gate curve needs at least two points");
    if (!(params.gate_duration > 0)) throw DomainError("MS gate curve needs gate_duration_s > 0");
    return TimeGrid{0.0, params.gate_duration, points}.values();
}

std::vector<ModeSpec> ExperimentConfig::mode_specs() const {
    std::vector<ModeSpec> out;
    for (std::size_t i = 0; i < modes.size(); i++) {
        const ModeConfig &m = modes[i];
        double angle = i < geometry.projection_angles.size() ? geometry.projection_angles[i] : std::numbers::pi / 4;
        double eta = m.lamb_dicke ? *m.lamb_dicke : lamb_dicke(species, geometry, m.frequency, angle);
        out.emplace_back(m.frequency, m.mode, eta);
    }
    return out;
}

std::vector<PhononDistribution> ExperimentConfig::phonons() const {
    std::vector<PhononDistribution> out;
    for (const ModeConfig &m : modes) out.push_back(m.nbar == 0 ? PhononDistribution::ground() : thermal_pmf(m.nbar));
    return out;
}

trap::ElectrodeLayout ExperimentConfig::layout() const {
    return layout_path ? load_layout(*layout_path) : trap::default_layout();
}

ExperimentConfig default_config() {
    ExperimentConfig config;
    config.modes = default_modes();
    return config;
}

ExperimentConfig parse_config(const std::string &text, const fs::path &base_dir, const std::string &source) {
    json doc = parse_json(text, source);
    Node root(doc, "", source);
    ExperimentConfig c = default_config();

    if (root.has("seed")) {
        std::int64_t seed = root.integer("seed", 1);
        if (seed < 0) root.fail("seed", "must be >= 0");
        c.seed = static_cast<std::uint64_t>(seed);
    }
    if (root.has("species")) {
        Node s = root.child("species");
        s.require({"mass_u"});
        double charge = s.number("charge_e", 1.0);
        // Atomic mass minus the removed electrons.
        double mass = s.positive("mass_u", 1.0) * constants::atomic_mass_unit - charge * constants::electron_mass;
        std::string label = s.string("label", "custom");
        c.species = translate(s, "mass_u", [&] { return IonSpecies(mass, charge * constants::elementary_charge, label); });
        s.done();
    }
    if (root.has("geometry")) {
        Node g = root.child("geometry");
        double wavelength = g.positive("wavelength_nm", 355.0) * 1e-9;
        std::string conf = g.string("configuration", "counter");
        BeamConfiguration bc;
        if (conf == "counter") {
            bc = BeamConfiguration::counter_propagating;
        } else if (conf == "co") {
            bc = BeamConfiguration::co_propagating;
        } else {
            g.fail("configuration", "expected \"counter\" or \"co\", got \"" + conf + "\"");
        }
        std::vector<double> angles = g.numbers("projection_angles_deg", {45.0, 45.0});
        for (double &a : angles) a *= std::numbers::pi / 180;
        double normal = g.number("normal_angle_deg", 0.0) * std::numbers::pi / 180;
        c.geometry = translate(g, "projection_angles_deg", [&] { return RamanGeometry(wavelength, bc, angles, normal); });
        g.done();
    }
    if (root.has("layout")) {
        c.layout_path = existing_file(root, "layout", base_dir);
    }
    if (root.has("operating_point")) {
        Node o = root.child("operating_point");
        if (o.has("mathieu_q")) c.operating_point.mathieu_q = o.non_negative("mathieu_q", 0.0);
        if (o.has("normal_frequency_hz")) c.operating_point.normal_frequency = o.positive("normal_frequency_hz", 1.0);
        o.done();
    }
    if (root.has("drive")) {
        Node d = root.child("drive");
        double rabi = d.positive("rabi_hz", c.drive.rabi);
        double duration = d.non_negative("duration_s", 0.0);
        double detuning = d.number("detuning_hz", 0.0);
        c.drive = DriveParams(rabi, duration, detuning);
        d.done();
    }
    if (root.has("modes")) {
        c.modes.clear();
        for (Node &m : root.children("modes")) c.modes.push_back(parse_mode(m));
        if (c.modes.empty() || c.modes.size() > 2) root.fail("modes", "expected one or two modes");
    }
    if (root.has("times")) {
        Node t = root.child("times");
        c.times.start = t.non_negative("start_s", 0.0);
        c.times.stop = t.non_negative("stop_s", c.times.stop);
        std::int64_t points = t.integer("points", c.times.points);
        if (points < 2 || points > 1000000) t.fail("points", "must lie in [2, 1000000]");
        c.times.points = static_cast<int>(points);
        if (c.times.stop <= c.times.start) t.fail("stop_s", "must exceed start_s");
        t.done();
    }
    if (root.has("shots")) {
        const json &v = root.raw("shots");
        if (v.is_string() && v.get<std::string>() == "inf") {
            c.shots.reset();
        } else {
            std::int64_t shots = root.integer("shots", 0);
            if (shots < 1) root.fail("shots", "must be >= 1 or \"inf\"");
            c.shots = shots;
        }
    }
    if (root.has("scan")) {
        Node s = root.child("scan");
        c.scan.stray = s.number("stray_v_per_m", 0.0);
        if (s.has("charging")) {
            Node ch = s.child("charging");
            c.scan.charging = ChargingConfig{ch.number("e0_v_per_m", 0.0), ch.number("step_v_per_m", 0.0),
                                             ch.number("e_inf_v_per_m", 0.0), ch.number("t_on_s", 0.0),
                                             ch.positive("tau_s", 1.0)};
            ch.done();
        }
        if (s.has("grid")) {
            Node g = s.child("grid");
            c.scan.grid_start = g.number("start_v", c.scan.grid_start);
            c.scan.grid_stop = g.number("stop_v", c.scan.grid_stop);
            c.scan.grid_step = g.positive("step_v", c.scan.grid_step);
            if (c.scan.grid_stop < c.scan.grid_start) g.fail("stop_v", "must be >= start_v");
            g.done();
        }
        c.scan.timestamps = s.numbers("timestamps_s", c.scan.timestamps);
        if (c.scan.timestamps.empty()) s.fail("timestamps_s", "must not be empty");
        if (s.has("gain_v_per_m_per_v")) c.scan.gain = s.number("gain_v_per_m_per_v", 0.0);
        s.done();
    }
    if (root.has("schedule")) {
        c.schedule_path = existing_file(root, "schedule", base_dir);
    }
    if (root.has("heating")) {
        Node h = root.child("heating");
        c.heating.rate = h.non_negative("rate_quanta_per_s", 0.0);
        c.heating.nbar0 = h.non_negative("nbar0", 0.0);
        c.heating.times = h.numbers("times_s", c.heating.times);
        for (double t : c.heating.times) {
            if (!(t >= 0)) h.fail("times_s", "delay times must be >= 0");
        }
        h.done();
    }
    if (root.has("ms_gate")) {
        Node m = root.child("ms_gate");
        ms::MSGateParams &p = c.ms_gate.params;
        p.rabi = m.non_negative("rabi_hz", p.rabi);
        p.detuning = m.number("detuning_hz", p.detuning);
        p.initial_nbar = m.non_negative("initial_nbar", p.initial_nbar);
        p.heating_rate = m.non_negative("heating_rate_quanta_per_s", p.heating_rate);
        p.gate_duration = m.non_negative("gate_duration_s", p.gate_duration);
        std::int64_t n_max = m.integer("n_max", 0);
        if (n_max < 0) m.fail("n_max", "must be >= 0 (0 = automatic)");
        p.n_max = static_cast<std::size_t>(n_max);
        std::int64_t points = m.integer("points", c.ms_gate.points);
        if (points < 2 || points > 100000) m.fail("points", "must lie in [2, 100000]");
        c.ms_gate.points = static_cast<int>(points);
        if (m.has("mode")) {
            Node mode = m.child("mode");
            double f = mode.positive("frequency_hz", p.mode.frequency);
            double eta = mode.has("lamb_dicke") ? mode.non_negative("lamb_dicke", 0.0) : p.mode.lamb_dicke;
            ModeId id = translate(mode, "mode", [&] { return mode_id_from_string(mode.string("mode", "tilt")); });
            p.mode = ModeSpec(f, id, eta);
            mode.done();
        }
        if (m.has("confusion")) {
            Node cm = m.child("confusion");
            c.ms_gate.confusion = ms::ConfusionMatrix(cm.probability("p10", 0.0), cm.probability("p01", 0.0));
            cm.done();
        }
        translate(m, "n_max", [&] {
            p.validate();
            return 0;
        });
        m.done();
    }
    if (root.has("output")) {
        Node o = root.child("output");
        if (o.has("csv")) c.output_csv = base_dir / fs::path(o.string("csv", ""));
        if (o.has("json")) c.output_json = base_dir / fs::path(o.string("json", ""));
        o.done();
    }
    root.done();
    return c;
}

ExperimentConfig load_config(const fs::path &path) {
    fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    return parse_config(read_file(path), base, path.string());
}

trap::ElectrodeLayout load_layout(const fs::path &path) {
    std::string source = path.string();
    json doc = parse_json(read_file(path), source);
    Node root(doc, "", source);
    trap::ElectrodeLayout layout;
    layout.rf_drive_frequency = root.positive("rf_drive_frequency_hz", layout.rf_drive_frequency);
    if (!root.has("patches")) root.fail("patches", "required");
    for (Node &p : root.children("patches")) {
        p.require({"role", "x1", "x2", "z1", "z2"});
        auto role = translate(p, "role", [&] { return trap::electrode_role_from_string(p.string("role", "")); });
        double x1 = p.number("x1", 0), x2 = p.number("x2", 0), z1 = p.number("z1", 0), z2 = p.number("z2", 0);
        double v = p.number("voltage", 0.0);
        std::string name = p.string("name", "");
        layout.patches.push_back(translate(p, "x1", [&] { return trap::ElectrodePatch(role, x1, x2, z1, z2, v, name); }));
        p.done();
    }
    root.done();
    return layout;
}

void write_layout(std::ostream &out, const trap::ElectrodeLayout &layout) {
    json patches = json::array();
    for (const auto &p : layout.patches) {
        patches.push_back({{"name", p.name},
                           {"role", trap::to_string(p.role)},
                           {"x1", p.x1},
                           {"x2", p.x2},
                           {"z1", p.z1},
                           {"z2", p.z2},
                           {"voltage", p.voltage}});
    }
    json doc = {{"rf_drive_frequency_hz", layout.rf_drive_frequency}, {"patches", patches}};
    out << doc.dump(2) << '\n';
}

ScheduleFile load_schedule(const fs::path &path, const ExperimentConfig &config) {
    std::string source = path.string();
    json doc = parse_json(read_file(path), source);
    ScheduleFile out;
    out.modes = config.modes;

    auto parse_pulses = [&](const json &list, const std::string &where) {
        if (!list.is_array()) throw ConfigError(source + ": '" + where + "' must be a list of pulses");
        for (std::size_t i = 0; i < list.size(); i++) {
            Node p(list[i], where + "[" + std::to_string(i) + "]", source);
            p.require({"mode", "duration_s"});
            ModeId mode = translate(p, "mode", [&] { return mode_id_from_string(p.string("mode", "")); });
            auto sb = translate(p, "sideband", [&] { return cooling::sideband_from_string(p.string("sideband", "rsb")); });
            double duration = p.number("duration_s", 0.0);
            double rabi = p.number("rabi_hz", config.drive.rabi);
            out.schedule.pulses.push_back(translate(p, "duration_s", [&] { return cooling::CoolingPulse(mode, sb, duration, rabi); }));
            p.done();
        }
    };

    if (doc.is_array()) {
        parse_pulses(doc, "pulses");
        return out;
    }
    Node root(doc, "", source);
    if (root.has("modes")) {
        out.modes.clear();
        for (Node &m : root.children("modes")) out.modes.push_back(parse_mode(m));
    }
    if (root.has("pulses") == root.has("default")) {
        root.fail("expected exactly one of 'pulses' or 'default'");
    }
    if (root.has("pulses")) {
        parse_pulses(root.raw("pulses"), "pulses");
    } else {
        Node d = root.child("default");
        double rabi = d.positive("rabi_hz", config.drive.rabi);
        std::int64_t rounds = d.integer("rounds", 50);
        std::int64_t cycle = d.integer("cycle", 6);
        if (rounds < 1 || rounds > 100000) d.fail("rounds", "must lie in [1, 100000]");
        if (cycle < 1 || cycle > 1000) d.fail("cycle", "must lie in [1, 1000]");
        d.done();
        ExperimentConfig with_modes = config;
        with_modes.modes = out.modes;
        auto specs = with_modes.mode_specs();
        out.schedule = cooling::default_schedule(specs, rabi, static_cast<int>(rounds), static_cast<int>(cycle));
    }
    out.schedule.repump_after_each = root.boolean("repump_after_each", true);
    if (root.has("heating_rates")) {
        Node h = root.child("heating_rates");
        for (const ModeConfig &m : out.modes) {
            std::string key = to_string(m.mode);
            if (h.has(key)) out.heating[m.mode] = h.non_negative(key, 0.0);
        }
        h.done();
    }
    root.done();
    return out;
}

micromotion::MicromotionSetup micromotion_setup(const ExperimentConfig &config) {
    micromotion::MicromotionSetup setup = micromotion::MicromotionSetup::standard();
    setup.species = config.species;
    setup.geometry = config.geometry;
    auto specs = config.mode_specs();
    setup.etas.clear();
    for (const ModeSpec &m : specs) setup.etas.push_back(m.lamb_dicke);
    setup.phonons = config.phonons();
    // Normal mode: the configured mode closest to the layout's normal frequency.
    double normal_frequency = specs.back().frequency;
    if (config.layout_path) {
        auto op = trap::rf_null_and_frequencies(config.layout(), config.species);
        setup.mathieu_q = op.normal_mathieu_q();
        normal_frequency = op.normal_frequency();
    }
    if (config.operating_point.mathieu_q) setup.mathieu_q = *config.operating_point.mathieu_q;
    if (config.operating_point.normal_frequency) normal_frequency = *config.operating_point.normal_frequency;
    setup.normal_mode = ModeSpec(normal_frequency, ModeId::r2, specs.back().lamb_dicke);
    return setup;
}

double compensation_gain(const ExperimentConfig &config) {
    if (config.scan.gain) return *config.scan.gain;
    auto compute = [&] {
        trap::ElectrodeLayout layout = config.layout();
        auto op = trap::rf_null_and_frequencies(layout, config.species);
        auto idc = layout.indices(trap::ElectrodeRole::IDC);
        return trap::compensation_gain(layout, idc, op.ion_position).field_per_volt.y();
    };
    if (config.layout_path) return compute();
    static const double standard = compute();
    return standard;
}

std::uint64_t effective_seed(const ExperimentConfig &config) {
    const char *env = std::getenv("TRAPSIM_SEED");
    if (env == nullptr || *env == '\0') return config.seed;
    char *end = nullptr;
    errno = 0;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (errno != 0 || end == env || *end != '\0' || env[0] == '-') {
        throw ConfigError(std::string("TRAPSIM_SEED must be a non-negative integer, got '") + env + "'");
    }
    return static_cast<std::uint64_t>(v);
}

}  // namespace trapsim::io
