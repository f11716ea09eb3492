#pragma once

// Run configuration (key = value text with optional [sections]), the figure
// manifest and the subcommand dispatcher used by the lzsm executable.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lzsm/dynamics.hpp"
#include "lzsm/error.hpp"
#include "lzsm/io.hpp"
#include "lzsm/model.hpp"
#include "lzsm/spectrum.hpp"
#include "lzsm/sweep.hpp"
#include "lzsm/weakcoupling.hpp"

namespace lzsm {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitPartialSweep = 4 };

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"spectrum", "region", "trajectory", "bloch",
                                                "trapping", "weak",   "sweep",      "figure"};
    return names;
}

struct RunConfig {
    std::string subcommand;
    std::string name;    ///< output file stem
    std::string figure;  ///< manifest id when produced from the manifest
    ModelParams model{};
    IntegratorOptions integrator{};
    std::string out_dir = "out";
    std::set<std::string> formats{"csv", "json", "ppm"};
    double t0 = 0.0;
    double t1 = 10.0;
    std::size_t samples = 1001;
    BiorthState init{};
    Axis x_axis{"eps0/Delta", -6.0, 6.0, 41};
    Axis y_axis{"omega/Delta", 0.5, 5.0, 41};
    Observable observable = Observable::RawPopA1;
    double horizon = 50.0;
    std::size_t samples_per_period = 200;
    std::optional<double> window_start;
    std::optional<double> window_end;
    bool strict_branches = false;

    bool operator==(const RunConfig&) const = default;
};

namespace config {

struct Entry {
    std::string value;
    int line = 0;
};

struct Section {
    std::string name;
    int line = 0;
    std::map<std::string, Entry> entries;
};

[[noreturn]] inline void fail(const std::string& source, int line, const std::string& msg) {
    std::string where = source;
    if (line > 0) where += ":" + std::to_string(line);
    throw Error(ErrorCode::ConfigInvalid, where + ": " + msg);
}

inline std::string trim(std::string s) {
    auto ns = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), ns));
    s.erase(std::find_if(s.rbegin(), s.rend(), ns).base(), s.end());
    return s;
}

/// Splits text into sections. Keys before the first header form a preamble
/// section with an empty name.
inline std::vector<Section> split_sections(const std::string& text, const std::string& source) {
    std::vector<Section> out(1);
    std::istringstream is(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(source, lineno, "malformed section header '" + line + "'");
            Section s;
            s.name = trim(line.substr(1, line.size() - 2));
            s.line = lineno;
            if (s.name.empty()) fail(source, lineno, "empty section name");
            for (const auto& o : out)
                if (o.name == s.name) fail(source, lineno, "duplicate section '" + s.name + "'");
            out.push_back(std::move(s));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(source, lineno, "expected key = value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail(source, lineno, "missing key");
        auto& entries = out.back().entries;
        if (entries.count(key)) fail(source, lineno, "duplicate key '" + key + "'");
        entries[key] = {value, lineno};
    }
    return out;
}

inline double parse_double(const Entry& e, const std::string& key, const std::string& source) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        fail(source, e.line, "key '" + key + "': '" + e.value + "' is not a number");
    }
}

inline std::size_t parse_count(const Entry& e, const std::string& key, const std::string& source) {
    const double v = parse_double(e, key, source);
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e12)
        fail(source, e.line, "key '" + key + "': '" + e.value + "' is not a non-negative integer");
    return static_cast<std::size_t>(v);
}

inline bool parse_bool(const Entry& e, const std::string& key, const std::string& source) {
    if (e.value == "true" || e.value == "1") return true;
    if (e.value == "false" || e.value == "0") return false;
    fail(source, e.line, "key '" + key + "': expected true or false");
}

inline std::vector<std::string> split_ws(const std::string& s, char extra = ' ') {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (std::isspace(static_cast<unsigned char>(ch)) || ch == extra) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline cplx parse_complex(const Entry& e, const std::string& key, const std::string& source) {
    const auto parts = split_ws(e.value, ',');
    if (parts.size() != 2) fail(source, e.line, "key '" + key + "': expected 're, im'");
    return {parse_double({parts[0], e.line}, key, source), parse_double({parts[1], e.line}, key, source)};
}

inline Axis parse_axis(const Entry& e, const std::string& key, const std::string& source) {
    const auto parts = split_ws(e.value);
    if (parts.size() != 4) fail(source, e.line, "key '" + key + "': expected 'name min max count'");
    Axis a;
    a.name = parts[0];
    a.min = parse_double({parts[1], e.line}, key, source);
    a.max = parse_double({parts[2], e.line}, key, source);
    a.count = parse_count({parts[3], e.line}, key, source);
    return a;
}

inline TunnelingClass parse_tunneling(const Entry& e, const std::string& source) {
    if (e.value == "in_phase" || e.value == "IN_PHASE") return TunnelingClass::InPhase;
    if (e.value == "anti_phase" || e.value == "ANTI_PHASE") return TunnelingClass::AntiPhase;
    fail(source, e.line, "key 'tunneling': expected in_phase or anti_phase");
}

inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "subcommand", "name",     "delta1",   "delta2",   "Delta",   "k",        "tunneling",      "c",
        "amp",        "omega",    "eps0",     "rtol",     "atol",    "h_max",    "max_steps",      "rescale_threshold",
        "singular_cap", "out",    "format",   "t0",       "t1",      "samples",  "alpha1",         "beta1",
        "alpha2",     "beta2",    "x_axis",   "y_axis",   "observable", "horizon", "samples_per_period",
        "window_start", "window_end", "strict_branches", "figure"};
    return keys;
}

inline bool needs_model(const std::string& sub) { return sub != "region"; }

/// Builds one validated RunConfig from merged entries.
inline RunConfig build(const std::map<std::string, Entry>& kv, const std::string& source, int section_line) {
    for (const auto& [k, e] : kv)
        if (!known_keys().count(k)) fail(source, e.line, "unknown key '" + k + "'");

    RunConfig rc;
    auto get = [&](const std::string& k) -> const Entry* {
        auto it = kv.find(k);
        return it == kv.end() ? nullptr : &it->second;
    };
    auto num = [&](const std::string& k, double& dst) {
        if (const Entry* e = get(k)) dst = parse_double(*e, k, source);
    };

    const Entry* sub = get("subcommand");
    if (!sub) fail(source, section_line, "missing key 'subcommand'");
    rc.subcommand = sub->value;
    if (std::find(subcommands().begin(), subcommands().end(), rc.subcommand) == subcommands().end() ||
        rc.subcommand == "figure")
        fail(source, sub->line, "key 'subcommand': unknown or non-runnable subcommand '" + rc.subcommand + "'");
    if (const Entry* e = get("name")) rc.name = e->value;
    if (const Entry* e = get("figure")) rc.figure = e->value;

    // Model: either delta1/delta2 or Delta/k/tunneling.
    const bool explicit_deltas = get("delta1") || get("delta2");
    const bool mean_form = get("Delta") || get("k") || get("tunneling");
    if (explicit_deltas && mean_form)
        fail(source, section_line, "give either delta1/delta2 or Delta/k/tunneling, not both");
    if (needs_model(rc.subcommand)) {
        const std::vector<std::string> req =
            mean_form ? std::vector<std::string>{"Delta", "k", "tunneling", "c", "amp", "omega"}
                      : std::vector<std::string>{"delta1", "delta2", "c", "amp", "omega"};
        for (const auto& k : req)
            if (!get(k)) fail(source, section_line, "missing key '" + k + "'");
    }
    num("c", rc.model.c);
    num("amp", rc.model.amp);
    num("omega", rc.model.omega);
    num("eps0", rc.model.eps0);
    if (mean_form) {
        double delta = 1.0, k = 1.0;
        num("Delta", delta);
        num("k", k);
        const TunnelingClass tc = get("tunneling") ? parse_tunneling(*get("tunneling"), source) : TunnelingClass::InPhase;
        try {
            rc.model = ModelParams::from_mean(delta, k, tc, rc.model.c, rc.model.amp, rc.model.omega, rc.model.eps0);
        } catch (const Error& err) {
            fail(source, section_line, err.what());
        }
    } else {
        num("delta1", rc.model.delta1);
        num("delta2", rc.model.delta2);
    }
    if (needs_model(rc.subcommand)) {
        try {
            rc.model.validate();
        } catch (const Error& err) {
            std::string msg = err.what();
            int line = section_line;
            for (const char* f : {"delta1", "delta2", "omega", "amp", "eps0", "c"})
                if (msg.find(f) != std::string::npos && get(f)) {
                    line = get(f)->line;
                    break;
                }
            fail(source, line, msg);
        }
    }

    num("rtol", rc.integrator.rtol);
    num("atol", rc.integrator.atol);
    num("h_max", rc.integrator.h_max);
    num("rescale_threshold", rc.integrator.rescale_threshold);
    num("singular_cap", rc.integrator.singular_cap);
    if (const Entry* e = get("max_steps")) rc.integrator.max_steps = parse_count(*e, "max_steps", source);
    if (!(rc.integrator.rtol > 0.0) || !(rc.integrator.atol > 0.0))
        fail(source, section_line, "rtol and atol must be positive");

    if (const Entry* e = get("out")) rc.out_dir = e->value;
    if (const Entry* e = get("format")) {
        rc.formats.clear();
        for (const auto& f : split_ws(e->value, ',')) {
            if (f != "csv" && f != "json" && f != "ppm") fail(source, e->line, "key 'format': unknown format '" + f + "'");
            rc.formats.insert(f);
        }
        if (rc.formats.empty()) fail(source, e->line, "key 'format': empty");
    }
    num("t0", rc.t0);
    num("t1", rc.t1);
    if (const Entry* e = get("samples")) rc.samples = parse_count(*e, "samples", source);
    if (rc.samples < 2) fail(source, section_line, "samples must be at least 2");
    if (!(rc.t1 > rc.t0)) fail(source, section_line, "t1 must exceed t0");
    if (const Entry* e = get("alpha1")) rc.init.alpha1 = parse_complex(*e, "alpha1", source);
    if (const Entry* e = get("beta1")) rc.init.beta1 = parse_complex(*e, "beta1", source);
    if (const Entry* e = get("alpha2")) rc.init.alpha2 = parse_complex(*e, "alpha2", source);
    if (const Entry* e = get("beta2")) rc.init.beta2 = parse_complex(*e, "beta2", source);
    if (std::abs(rc.init.biorthogonal_norm() - 1.0) > 1e-12)
        fail(source, section_line, "initial state is not biorthogonally normalised");
    if (const Entry* e = get("x_axis")) rc.x_axis = parse_axis(*e, "x_axis", source);
    if (const Entry* e = get("y_axis")) rc.y_axis = parse_axis(*e, "y_axis", source);
    if (const Entry* e = get("observable")) {
        try {
            rc.observable = observable_from_string(e->value);
        } catch (const Error&) {
            fail(source, e->line, "key 'observable': unknown observable '" + e->value + "'");
        }
    }
    num("horizon", rc.horizon);
    if (const Entry* e = get("samples_per_period")) rc.samples_per_period = parse_count(*e, "samples_per_period", source);
    if (const Entry* e = get("window_start")) rc.window_start = parse_double(*e, "window_start", source);
    if (const Entry* e = get("window_end")) rc.window_end = parse_double(*e, "window_end", source);
    if (const Entry* e = get("strict_branches")) rc.strict_branches = parse_bool(*e, "strict_branches", source);

    if (rc.subcommand == "sweep") {
        SweepSpec s;
        s.x = rc.x_axis;
        s.y = rc.y_axis;
        s.fixed = rc.model;
        s.observable = rc.observable;
        s.horizon = rc.horizon;
        s.samples_per_period = rc.samples_per_period;
        try {
            s.validate();
        } catch (const Error& err) {
            fail(source, section_line, err.what());
        }
    }
    if (rc.subcommand == "region") {
        if (rc.x_axis.count < 2 || rc.y_axis.count < 2) fail(source, section_line, "axis counts must be at least 2");
    }
    if (rc.name.empty()) rc.name = rc.subcommand;
    return rc;
}

}  // namespace config

namespace config {

inline std::map<std::string, Entry> parse_assignments(const std::vector<std::string>& items, const std::string& source) {
    std::map<std::string, Entry> out;
    for (const auto& o : items) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) fail(source, 0, "expected key=value, got '" + o + "'");
        out[trim(o.substr(0, eq))] = {trim(o.substr(eq + 1)), 0};
    }
    return out;
}

}  // namespace config

/// Parses config text. Each [section] is one run; keys before the first
/// section apply to every run. `defaults` sit below everything and
/// `overrides` above everything, both as "key=value".
inline std::vector<RunConfig> parse_config_text(const std::string& text, const std::string& source = "<config>",
                                                const std::vector<std::string>& overrides = {},
                                                const std::vector<std::string>& defaults = {}) {
    auto sections = config::split_sections(text, source);
    const auto over = config::parse_assignments(overrides, "--set");
    const auto base = config::parse_assignments(defaults, source);
    std::vector<RunConfig> runs;
    const auto& pre = sections.front();
    auto merged_for = [&](const config::Section* s) {
        auto m = base;
        for (const auto& [k, e] : pre.entries) m[k] = e;
        if (s)
            for (const auto& [k, e] : s->entries) m[k] = e;
        for (const auto& [k, e] : over) m[k] = e;
        if (s && !m.count("name")) {
            std::string n = s->name;
            std::replace(n.begin(), n.end(), '/', '_');
            m["name"] = {n, s->line};
        }
        return m;
    };
    if (sections.size() == 1) {
        runs.push_back(config::build(merged_for(nullptr), source, 1));
    } else {
        for (std::size_t i = 1; i < sections.size(); ++i)
            runs.push_back(config::build(merged_for(&sections[i]), source, sections[i].line));
    }
    return runs;
}

inline std::vector<RunConfig> parse_config(const std::filesystem::path& path,
                                           const std::vector<std::string>& overrides = {},
                                           const std::vector<std::string>& defaults = {}) {
    std::ifstream f(path);
    if (!f) config::fail(path.string(), 0, "cannot read config file");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str(), path.string(), overrides, defaults);
}

/// Writes every field so that parse_config_text(serialize_config(c)) == c.
inline std::string serialize_config(const RunConfig& c) {
    std::ostringstream os;
    auto d = [](double v) { return io::format_double(v); };
    auto axis = [&](const Axis& a) { return a.name + " " + d(a.min) + " " + d(a.max) + " " + std::to_string(a.count); };
    auto cx = [&](cplx z) { return d(z.real()) + ", " + d(z.imag()); };
    os << "subcommand = " << c.subcommand << "\n";
    os << "name = " << c.name << "\n";
    if (!c.figure.empty()) os << "figure = " << c.figure << "\n";
    os << "delta1 = " << d(c.model.delta1) << "\n";
    os << "delta2 = " << d(c.model.delta2) << "\n";
    os << "c = " << d(c.model.c) << "\n";
    os << "amp = " << d(c.model.amp) << "\n";
    os << "omega = " << d(c.model.omega) << "\n";
    os << "eps0 = " << d(c.model.eps0) << "\n";
    os << "rtol = " << d(c.integrator.rtol) << "\n";
    os << "atol = " << d(c.integrator.atol) << "\n";
    os << "h_max = " << d(c.integrator.h_max) << "\n";
    os << "max_steps = " << c.integrator.max_steps << "\n";
    os << "rescale_threshold = " << d(c.integrator.rescale_threshold) << "\n";
    os << "singular_cap = " << d(c.integrator.singular_cap) << "\n";
    os << "out = " << c.out_dir << "\n";
    std::string fm;
    for (const auto& f : c.formats) fm += (fm.empty() ? "" : ",") + f;
    os << "format = " << fm << "\n";
    os << "t0 = " << d(c.t0) << "\n";
    os << "t1 = " << d(c.t1) << "\n";
    os << "samples = " << c.samples << "\n";
    os << "alpha1 = " << cx(c.init.alpha1) << "\n";
    os << "beta1 = " << cx(c.init.beta1) << "\n";
    os << "alpha2 = " << cx(c.init.alpha2) << "\n";
    os << "beta2 = " << cx(c.init.beta2) << "\n";
    os << "x_axis = " << axis(c.x_axis) << "\n";
    os << "y_axis = " << axis(c.y_axis) << "\n";
    os << "observable = " << to_string(c.observable) << "\n";
    os << "horizon = " << d(c.horizon) << "\n";
    os << "samples_per_period = " << c.samples_per_period << "\n";
    if (c.window_start) os << "window_start = " << d(*c.window_start) << "\n";
    if (c.window_end) os << "window_end = " << d(*c.window_end) << "\n";
    os << "strict_branches = " << (c.strict_branches ? "true" : "false") << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Figure manifest

struct Manifest {
    int version = 0;
    std::vector<RunConfig> runs;  ///< every section, figure id in RunConfig::figure

    std::vector<std::string> figure_ids() const {
        std::vector<std::string> ids;
        for (const auto& r : runs)
            if (std::find(ids.begin(), ids.end(), r.figure) == ids.end()) ids.push_back(r.figure);
        return ids;
    }

    std::vector<RunConfig> figure(const std::string& id) const {
        std::vector<RunConfig> out;
        for (const auto& r : runs)
            if (r.figure == id) out.push_back(r);
        if (out.empty()) throw Error(ErrorCode::ConfigInvalid, "unknown figure id '" + id + "'");
        return out;
    }
};

inline constexpr int kManifestVersion = 1;

/// The [manifest] section carries the version; section names are
/// "<figure id>" or "<figure id>/<run>".
inline Manifest parse_manifest_text(const std::string& text, const std::string& source = "<manifest>") {
    auto sections = config::split_sections(text, source);
    Manifest m;
    bool have_version = false;
    for (const auto& s : sections) {
        if (s.name != "manifest") continue;
        auto it = s.entries.find("version");
        if (it == s.entries.end()) config::fail(source, s.line, "manifest section lacks 'version'");
        m.version = static_cast<int>(config::parse_count(it->second, "version", source));
        have_version = true;
    }
    if (!have_version) config::fail(source, 0, "missing [manifest] version section");
    if (m.version != kManifestVersion)
        config::fail(source, 0, "unsupported manifest version " + std::to_string(m.version));
    if (!sections.front().entries.empty())
        config::fail(source, sections.front().entries.begin()->second.line, "keys outside a section");
    for (std::size_t i = 1; i < sections.size(); ++i) {
        const auto& s = sections[i];
        if (s.name == "manifest") continue;
        auto kv = s.entries;
        const auto slash = s.name.find('/');
        const std::string id = s.name.substr(0, slash);
        if (kv.count("figure")) config::fail(source, kv["figure"].line, "figure id comes from the section name");
        kv["figure"] = {id, s.line};
        if (!kv.count("name")) {
            std::string n = s.name;
            std::replace(n.begin(), n.end(), '/', '_');
            kv["name"] = {n, s.line};
        }
        m.runs.push_back(config::build(kv, source, s.line));
    }
    return m;
}

inline std::filesystem::path default_manifest_path() {
    if (const char* env = std::getenv("LZSM_MANIFEST")) return env;
#ifdef LZSM_DATA_DIR
    return std::filesystem::path(LZSM_DATA_DIR) / "figures.manifest";
#else
    return "data/figures.manifest";
#endif
}

inline Manifest load_manifest(const std::filesystem::path& path = default_manifest_path()) {
    std::ifstream f(path);
    if (!f) config::fail(path.string(), 0, "cannot read manifest");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_manifest_text(ss.str(), path.string());
}

/// Runs of a figure; only the output directory may be changed.
inline std::vector<RunConfig> figure_config(const Manifest& m, const std::string& id,
                                            const std::optional<std::string>& out_dir = std::nullopt) {
    auto runs = m.figure(id);
    if (out_dir)
        for (auto& r : runs) r.out_dir = *out_dir;
    return runs;
}

// ---------------------------------------------------------------------------
// Execution

struct RunResult {
    int exit_code = kExitOk;
    std::vector<std::filesystem::path> files;
    nlohmann::json summary;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<double> uniform_grid(double a, double b, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = i + 1 == n ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
}

inline nlohmann::json config_json(const RunConfig& c) {
    return {{"subcommand", c.subcommand},
            {"name", c.name},
            {"figure", c.figure},
            {"model", io::to_json(c.model)},
            {"integrator", io::to_json(c.integrator)},
            {"t0", c.t0},
            {"t1", c.t1},
            {"samples", c.samples}};
}

inline TrajectoryOptions trajectory_options(const RunConfig& c) {
    TrajectoryOptions o;
    o.integrator = c.integrator;
    o.samples = c.samples;
    return o;
}

inline void emit_table(const RunConfig& c, RunResult& r, const io::Table& t, const std::string& suffix = "") {
    if (!c.formats.count("csv")) return;
    const auto path = std::filesystem::path(c.out_dir) / (c.name + suffix + ".csv");
    t.write_csv(path);
    r.files.push_back(path);
}

inline void emit_grid(const RunConfig& c, RunResult& r, const SweepGrid& g) {
    const auto base = std::filesystem::path(c.out_dir) / c.name;
    if (c.formats.count("csv")) {
        io::write_grid_csv(base.string() + ".csv", g);
        r.files.push_back(base.string() + ".csv");
    }
    if (c.formats.count("ppm")) {
        io::write_grid_ppm(base.string() + ".ppm", g);
        r.files.push_back(base.string() + ".ppm");
    }
}

inline void run_spectrum(const RunConfig& c, RunResult& r) {
    const auto tg = uniform_grid(c.t0, c.t1, c.samples);
    BranchTrackingOptions bo;
    bo.strict = c.strict_branches;
    const auto pts = spectrum_vs_time(c.model, tg, bo);
    io::Table t;
    t.header = {"t", "gamma"};
    for (int b = 0; b < 4; ++b) {
        t.header.push_back("E" + std::to_string(b) + "_re");
        t.header.push_back("E" + std::to_string(b) + "_im");
        t.header.push_back("spurious" + std::to_string(b));
    }
    t.header.insert(t.header.end(), {"diabatic_lo", "diabatic_hi", "diabatic_lo_linear", "diabatic_hi_linear",
                                     "delta", "xi", "ambiguous"});
    t.text_header = {"classification"};
    std::size_t ambiguous = 0;
    for (const auto& p : pts) {
        std::vector<double> row{p.t, p.gamma};
        for (int b = 0; b < 4; ++b) {
            int idx = 0;
            for (int i = 0; i < 4; ++i)
                if (p.branch_ids[i] == b) idx = i;
            row.push_back(p.roots[idx].real());
            row.push_back(p.roots[idx].imag());
            row.push_back(p.spurious[idx] ? 1.0 : 0.0);
        }
        const auto dl = diabatic_levels(c.model.c, p.gamma);
        const auto dl0 = diabatic_levels(0.0, p.gamma);
        row.insert(row.end(), {dl[0], dl[1], dl0[0], dl0[1], p.delta_disc, p.xi, p.ambiguous ? 1.0 : 0.0});
        ambiguous += p.ambiguous ? 1 : 0;
        t.rows.push_back(std::move(row));
        t.text.push_back({to_string(p.classification)});
    }
    emit_table(c, r, t);
    r.summary["points"] = pts.size();
    r.summary["ambiguous_points"] = ambiguous;
}

inline void run_region(const RunConfig& c, RunResult& r) {
    SweepGrid g;
    g.spec.x = c.x_axis;
    g.spec.y = c.y_axis;
    for (std::size_t i = 0; i < c.x_axis.count; ++i) g.xs.push_back(c.x_axis.value(i));
    for (std::size_t i = 0; i < c.y_axis.count; ++i) g.ys.push_back(c.y_axis.value(i));
    g.values.resize(g.xs.size() * g.ys.size());
    g.singular.assign(g.values.size(), 0);
    g.error.assign(g.values.size(), -1);
    std::map<std::string, std::size_t> counts;
    for (std::size_t iy = 0; iy < g.ny(); ++iy)
        for (std::size_t ix = 0; ix < g.nx(); ++ix) {
            const RegionLabel l = region_classify(g.xs[ix], g.ys[iy]);
            g.values[g.index(ix, iy)] = static_cast<double>(static_cast<int>(l) + 1);
            ++counts[to_string(l)];
        }
    emit_grid(c, r, g);
    r.summary["region_counts"] = counts;
    r.summary["encoding"] = {{"REGION_I", 1}, {"REGION_II", 2}, {"REGION_III", 3}};
}

inline void run_trajectory(const RunConfig& c, RunResult& r) {
    const Trajectory tr = integrate_biorthogonal(c.model, c.init, c.t0, c.t1, trajectory_options(c));
    io::Table t;
    t.header = {"t",        "alpha1_re", "alpha1_im", "beta1_re", "beta1_im", "alpha2_re", "alpha2_im",
                "beta2_re", "beta2_im",  "logscale_r", "logscale_l", "theta_r", "phi_r",    "mu_r",
                "nu_r",     "theta_l",   "phi_l",     "z",        "w_re",     "w_im",      "raw_pop_a1"};
    for (std::size_t i = 0; i < tr.samples.size(); ++i) {
        const auto& s = tr.samples[i];
        const auto& pr = tr.right[i];
        const auto& pl = tr.left[i];
        t.rows.push_back({s.t, s.alpha1.real(), s.alpha1.imag(), s.beta1.real(), s.beta1.imag(), s.alpha2.real(),
                          s.alpha2.imag(), s.beta2.real(), s.beta2.imag(), s.logscale_r, s.logscale_l, pr.theta,
                          pr.phi, pr.mu, pr.nu, pl.theta, pl.phi, pr.z(), tr.feedback[i].real(),
                          tr.feedback[i].imag(), s.raw_population_a1()});
    }
    emit_table(c, r, t);
    r.summary["stats"] = io::to_json(tr.stats);
    r.summary["max_norm_error"] = tr.max_norm_error;
    r.summary["singular_time"] = tr.singular_time ? nlohmann::json(*tr.singular_time) : nlohmann::json(nullptr);
    r.summary["final_raw_pop_a1"] = tr.samples.back().raw_population_a1();
    r.summary["final_proj_pop_a"] = tr.right.back().population_a();
}

inline void run_bloch(const RunConfig& c, RunResult& r) {
    BlochOptions bo;
    bo.integrator = c.integrator;
    bo.samples = c.samples;
    const auto pr = project(c.init, Side::Right), pl = project(c.init, Side::Left);
    BlochPair pair;
    if (c.model.c == 0.0) {
        pair.right = integrate_bloch_linear(c.model, pr, c.t0, c.t1, bo);
    } else {
        pair = integrate_bloch_nonlinear(c.model, pr, pl, c.t0, c.t1, bo);
    }
    io::Table t;
    t.header = {"t", "theta", "phi", "x", "y", "z", "mu", "nu"};
    if (!pair.left.empty()) t.header.insert(t.header.end(), {"theta_l", "phi_l", "z_l"});
    for (std::size_t i = 0; i < pair.right.size(); ++i) {
        const auto& s = pair.right[i];
        const auto v = s.bloch_vector();
        std::vector<double> row{s.t, s.theta, s.phi, v[0], v[1], v[2], s.mu, s.nu};
        if (!pair.left.empty()) row.insert(row.end(), {pair.left[i].theta, pair.left[i].phi, pair.left[i].z()});
        t.rows.push_back(std::move(row));
    }
    emit_table(c, r, t);
    double zmin = 1.0;
    for (const auto& s : pair.right) zmin = std::min(zmin, s.z());
    r.summary["circle_z0"] = asymptotic_circle_z(c.model.k());
    r.summary["min_z"] = zmin;
    r.summary["pole_steps"] = pair.pole_steps;
}

inline void run_trapping(const RunConfig& c, RunResult& r) {
    const Trajectory tr = integrate_biorthogonal(c.model, c.init, c.t0, c.t1, trajectory_options(c));
    const TimeWindow w{c.window_start.value_or(c.t0), c.window_end.value_or(c.t1)};
    const TrappingReport rep = trapping_metric(tr.right, c.model.k(), w, c.model.omega);
    io::Table t;
    t.header = {"t", "z", "theta", "phi"};
    for (const auto& s : tr.right) t.rows.push_back({s.t, s.z(), s.theta, s.phi});
    emit_table(c, r, t);
    r.summary["classification"] = to_string(rep.classification);
    r.summary["min_z_over_window"] = rep.min_z_over_window;
    r.summary["boundary_z"] = rep.boundary_z;
    r.summary["window"] = {rep.window.start, rep.window.end};
}

inline void run_weak(const RunConfig& c, RunResult& r) {
    const Trajectory ex = integrate_biorthogonal(c.model, c.init, c.t0, c.t1, trajectory_options(c));
    const DiracTrajectory di = integrate_dirac(DiracParams::from_model(c.model), c.init, c.t0, c.t1, c.samples, c.integrator);
    if (!di.warning.empty()) r.warnings.push_back(di.warning);
    const PhaseCondition pc = interference_condition(c.model);
    io::Table t;
    t.header = {"t", "pop_a_exact", "pop_a_dirac", "w_exact_re", "w_exact_im", "w_dirac_re", "w_dirac_im"};
    double sup = 0.0, drift = 0.0, mx_exact = 0.0, mx_dirac = 0.0;
    for (std::size_t i = 0; i < ex.right.size(); ++i) {
        const double pe = ex.right[i].population_a(), pd = di.samples[i].pop_a;
        sup = std::max(sup, std::abs(pe - pd));
        mx_exact = std::max(mx_exact, pe);
        mx_dirac = std::max(mx_dirac, pd);
        drift = std::max(drift, std::abs(ex.feedback[i] - ex.feedback.front()));
        t.rows.push_back({ex.samples[i].t, pe, pd, ex.feedback[i].real(), ex.feedback[i].imag(),
                          di.samples[i].feedback.real(), di.samples[i].feedback.imag()});
    }
    emit_table(c, r, t);
    r.summary["verdict"] = to_string(pc.verdict);
    r.summary["nearest_d"] = pc.nearest_d;
    r.summary["residue"] = pc.residue;
    r.summary["max_pop_a_exact"] = mx_exact;
    r.summary["max_pop_a_dirac"] = mx_dirac;
    r.summary["sup_difference"] = sup;
    r.summary["feedback_drift_exact"] = drift;
    r.summary["feedback_drift_dirac"] = di.max_feedback_drift;
    if (!di.warning.empty()) r.summary["warning"] = di.warning;
}

inline void run_sweep_cmd(const RunConfig& c, RunResult& r, unsigned workers) {
    SweepSpec s;
    s.x = c.x_axis;
    s.y = c.y_axis;
    s.fixed = c.model;
    s.observable = c.observable;
    s.horizon = c.horizon;
    s.initial = c.init;
    s.integrator = c.integrator;
    s.samples_per_period = c.samples_per_period;
    const bool trapping = c.observable == Observable::TrappingClass || c.observable == Observable::MinZ;
    const SweepGrid g = trapping ? run_trapping_sweep(s, workers) : run_sweep(s, workers);
    emit_grid(c, r, g);
    r.summary["grid"] = io::grid_metadata(g);
    if (g.error_count() > 0) r.exit_code = kExitPartialSweep;
}

}  // namespace detail

/// Executes one run and writes its artifacts. Numerical errors propagate as
/// lzsm::Error; a sweep with failed cells returns kExitPartialSweep.
inline RunResult run(const RunConfig& c, unsigned workers = 1) {
    RunResult r;
    r.summary["config"] = detail::config_json(c);
    r.summary["versions"] = {{"lzsm", kLibraryVersion}, {"manifest", kManifestVersion}};
    if (c.subcommand == "spectrum")
        detail::run_spectrum(c, r);
    else if (c.subcommand == "region")
        detail::run_region(c, r);
    else if (c.subcommand == "trajectory")
        detail::run_trajectory(c, r);
    else if (c.subcommand == "bloch")
        detail::run_bloch(c, r);
    else if (c.subcommand == "trapping")
        detail::run_trapping(c, r);
    else if (c.subcommand == "weak")
        detail::run_weak(c, r);
    else if (c.subcommand == "sweep")
        detail::run_sweep_cmd(c, r, workers);
    else
        throw Error(ErrorCode::ConfigInvalid, "cannot run subcommand '" + c.subcommand + "'");
    if (c.formats.count("json")) {
        const auto path = std::filesystem::path(c.out_dir) / (c.name + ".json");
        io::write_json(path, r.summary);
        r.files.push_back(path);
    }
    return r;
}

/// Maps an exception to the exit-code contract.
inline int exit_code_for(const Error& e) noexcept {
    return e.is_numerical() ? kExitNumerical : kExitConfig;
}

}  // namespace lzsm
