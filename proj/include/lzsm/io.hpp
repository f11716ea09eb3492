#pragma once

// Grid and table writers: CSV, JSON sidecar and 8-bit greyscale PPM heatmap.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lzsm/error.hpp"
#include "lzsm/sweep.hpp"

namespace lzsm {

inline constexpr const char* kLibraryVersion = "1.0.0";

namespace io {

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string() + " for writing");
    return f;
}

/// Simple column table written as CSV.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<std::vector<std::string>> text;  ///< optional trailing text columns per row
    std::vector<std::string> text_header;

    void write_csv(std::ostream& os) const {
        bool first = true;
        for (const auto& h : header) {
            os << (first ? "" : ",") << h;
            first = false;
        }
        for (const auto& h : text_header) os << "," << h;
        os << "\n";
        for (std::size_t r = 0; r < rows.size(); ++r) {
            for (std::size_t c = 0; c < rows[r].size(); ++c) os << (c ? "," : "") << format_double(rows[r][c]);
            if (r < text.size())
                for (const auto& s : text[r]) os << "," << s;
            os << "\n";
        }
    }

    void write_csv(const std::filesystem::path& path) const {
        auto f = open_output(path);
        write_csv(f);
    }
};

/// Header row of x coordinates, then one row per y value. Masked cells are
/// written as "nan".
inline void write_grid_csv(std::ostream& os, const SweepGrid& g) {
    os << g.spec.y.name << "\\" << g.spec.x.name;
    for (double x : g.xs) os << "," << format_double(x);
    os << "\n";
    for (std::size_t iy = 0; iy < g.ny(); ++iy) {
        os << format_double(g.ys[iy]);
        for (std::size_t ix = 0; ix < g.nx(); ++ix)
            os << "," << (g.masked(ix, iy) ? std::string("nan") : format_double(g.at(ix, iy)));
        os << "\n";
    }
}

inline void write_grid_csv(const std::filesystem::path& path, const SweepGrid& g) {
    auto f = open_output(path);
    write_grid_csv(f, g);
}

inline nlohmann::json to_json(const ModelParams& p) {
    return {{"delta1", p.delta1}, {"delta2", p.delta2}, {"c", p.c},         {"amp", p.amp},
            {"omega", p.omega},   {"eps0", p.eps0},     {"Delta", p.mean_delta()}, {"k", p.k()},
            {"tunneling", to_string(p.tunneling_class())}};
}

inline nlohmann::json to_json(const IntegratorOptions& o) {
    return {{"rtol", o.rtol},
            {"atol", o.atol},
            {"rescale_threshold", o.rescale_threshold},
            {"singular_cap", o.singular_cap},
            {"max_steps", o.max_steps}};
}

inline nlohmann::json to_json(const IntegratorStats& s) {
    return {{"steps", s.steps}, {"rejected", s.rejected}, {"rescales", s.rescales}, {"rhs_evals", s.rhs_evals}};
}

inline nlohmann::json to_json(const Axis& a) {
    return {{"name", a.name}, {"min", a.min}, {"max", a.max}, {"count", a.count}, {"scale", "linear"}};
}

inline nlohmann::json grid_metadata(const SweepGrid& g) {
    nlohmann::json j;
    j["spec"] = {{"x", to_json(g.spec.x)},
                 {"y", to_json(g.spec.y)},
                 {"fixed", to_json(g.spec.fixed)},
                 {"observable", to_string(g.spec.observable)},
                 {"horizon", g.spec.horizon},
                 {"integrator", to_json(g.spec.integrator)}};
    j["versions"] = {{"lzsm", kLibraryVersion}};
    j["wall_seconds"] = g.wall_seconds;
    j["workers"] = g.workers;
    j["singular_cells"] = g.singular_count();
    j["error_cells"] = g.error_count();
    nlohmann::json errs = nlohmann::json::array();
    for (std::size_t iy = 0; iy < g.ny(); ++iy)
        for (std::size_t ix = 0; ix < g.nx(); ++ix) {
            const auto e = g.error[g.index(ix, iy)];
            if (e >= 0)
                errs.push_back({{"ix", ix}, {"iy", iy}, {"code", to_string(static_cast<ErrorCode>(e))}});
        }
    j["errors"] = errs;
    return j;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    auto f = open_output(path);
    f << j.dump(2) << "\n";
}

/// Binary PPM with equal RGB channels. Values map linearly from black (min)
/// to light grey (max); masked or non-finite cells are white. The top image
/// row is the largest y.
inline void write_grid_ppm(std::ostream& os, const SweepGrid& g) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t iy = 0; iy < g.ny(); ++iy)
        for (std::size_t ix = 0; ix < g.nx(); ++ix) {
            const double v = g.at(ix, iy);
            if (g.masked(ix, iy) || !std::isfinite(v)) continue;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    os << "P6\n" << g.nx() << " " << g.ny() << "\n255\n";
    for (std::size_t r = 0; r < g.ny(); ++r) {
        const std::size_t iy = g.ny() - 1 - r;
        for (std::size_t ix = 0; ix < g.nx(); ++ix) {
            const double v = g.at(ix, iy);
            std::uint8_t px = 255;
            if (!g.masked(ix, iy) && std::isfinite(v)) {
                const double f = hi > lo ? (v - lo) / (hi - lo) : 0.0;
                px = static_cast<std::uint8_t>(std::lround(std::clamp(f, 0.0, 1.0) * 230.0));
            }
            const char rgb[3] = {static_cast<char>(px), static_cast<char>(px), static_cast<char>(px)};
            os.write(rgb, 3);
        }
    }
}

inline void write_grid_ppm(const std::filesystem::path& path, const SweepGrid& g) {
    auto f = open_output(path);
    write_grid_ppm(f, g);
}

}  // namespace io
}  // namespace lzsm
