#pragma once

// Cell-parallel 2D parameter sweeps. Every cell is an independent
// trajectory; results are written by cell index so the grid does not depend
// on the number of workers.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "lzsm/dynamics.hpp"
#include "lzsm/error.hpp"
#include "lzsm/model.hpp"

namespace lzsm {

enum class Observable { RawPopA1, ProjPopA, TrappingClass, MinZ };

inline const char* to_string(Observable o) noexcept {
    switch (o) {
        case Observable::RawPopA1: return "RAW_POP_A1";
        case Observable::ProjPopA: return "PROJ_POP_A";
        case Observable::TrappingClass: return "TRAPPING_CLASS";
        case Observable::MinZ: return "MIN_Z";
    }
    return "?";
}

inline Observable observable_from_string(const std::string& s) {
    for (auto o : {Observable::RawPopA1, Observable::ProjPopA, Observable::TrappingClass, Observable::MinZ})
        if (s == to_string(o)) return o;
    throw Error(ErrorCode::InvalidArgument, "unknown observable '" + s + "'");
}

/// Numeric encoding of trapping classes in a grid.
inline double trapping_code(TrappingClass c) noexcept {
    switch (c) {
        case TrappingClass::Josephson: return 0.0;
        case TrappingClass::Boundary: return 0.5;
        case TrappingClass::SelfTrapped: return 1.0;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

/// A swept parameter. `name` is a ModelParams field (delta1, delta2, c, amp,
/// omega, eps0), a derived quantity (Delta, k) or a ratio such as
/// "eps0/Delta" or "c/omega". Ratios are resolved against the template.
struct Axis {
    std::string name;
    double min = 0.0;
    double max = 1.0;
    std::size_t count = 2;

    bool operator==(const Axis&) const = default;

    double value(std::size_t i) const noexcept {
        if (count < 2) return min;
        if (i + 1 == count) return max;
        return min + (max - min) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
};

namespace detail {

inline void set_mean_delta(ModelParams& p, double delta) {
    const double k = p.k();
    const double sign = p.delta2 < 0.0 ? -1.0 : 1.0;
    p.delta1 = k * delta;
    p.delta2 = sign * delta / k;
}

inline void set_k(ModelParams& p, double k) {
    const double d = p.mean_delta();
    const double sign = p.delta2 < 0.0 ? -1.0 : 1.0;
    p.delta1 = k * d;
    p.delta2 = sign * d / k;
}

inline double* field(ModelParams& p, const std::string& n) {
    if (n == "delta1") return &p.delta1;
    if (n == "delta2") return &p.delta2;
    if (n == "c") return &p.c;
    if (n == "amp" || n == "A") return &p.amp;
    if (n == "omega") return &p.omega;
    if (n == "eps0") return &p.eps0;
    return nullptr;
}

inline double reference(const ModelParams& tmpl, const std::string& n) {
    if (n == "Delta") return tmpl.mean_delta();
    if (n == "omega") return tmpl.omega;
    if (n == "k") return tmpl.k();
    ModelParams copy = tmpl;
    if (double* f = field(copy, n)) return *f;
    throw Error(ErrorCode::InvalidArgument, "unknown axis reference '" + n + "'");
}

}  // namespace detail

/// Assigns an axis value to `p`, resolving ratios against `tmpl`.
inline void apply_axis(ModelParams& p, const ModelParams& tmpl, const std::string& name, double v) {
    std::string target = name, denom;
    if (auto pos = name.find('/'); pos != std::string::npos) {
        target = name.substr(0, pos);
        denom = name.substr(pos + 1);
    }
    const double scale = denom.empty() ? 1.0 : detail::reference(tmpl, denom);
    const double x = v * scale;
    if (target == "Delta") {
        detail::set_mean_delta(p, x);
    } else if (target == "k") {
        detail::set_k(p, x);
    } else if (double* f = detail::field(p, target)) {
        *f = x;
    } else {
        throw Error(ErrorCode::InvalidArgument, "axis '" + name + "' does not name a model parameter");
    }
}

inline bool is_valid_axis_name(const std::string& name) {
    try {
        ModelParams p;
        apply_axis(p, p, name, 1.0);
        return true;
    } catch (const Error&) {
        return false;
    }
}

struct SweepSpec {
    Axis x{"eps0/Delta", -6.0, 6.0, 41};
    Axis y{"omega/Delta", 0.5, 5.0, 41};
    ModelParams fixed{};
    Observable observable = Observable::RawPopA1;
    double horizon = 50.0;  ///< final time, trajectories start at t = 0
    BiorthState initial{};
    IntegratorOptions integrator{};
    std::size_t samples_per_period = 200;  ///< used by MIN_Z and TRAPPING_CLASS

    bool operator==(const SweepSpec&) const = default;

    void validate() const {
        if (x.count < 2 || y.count < 2) throw Error(ErrorCode::InvalidArgument, "axis counts must be at least 2");
        if (x.name == y.name) throw Error(ErrorCode::InvalidArgument, "axis names must be distinct");
        for (const Axis* a : {&x, &y}) {
            if (!is_valid_axis_name(a->name))
                throw Error(ErrorCode::InvalidArgument, "axis '" + a->name + "' does not name a model parameter");
            if (!std::isfinite(a->min) || !std::isfinite(a->max))
                throw Error(ErrorCode::InvalidArgument, "axis '" + a->name + "' bounds are not finite");
        }
        fixed.validate();
        if (!(horizon > 0.0) || !std::isfinite(horizon))
            throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
        if (samples_per_period < 100)
            throw Error(ErrorCode::InvalidArgument, "samples_per_period must be at least 100");
    }

    /// Parameters of cell (ix, iy).
    ModelParams cell_params(std::size_t ix, std::size_t iy) const {
        ModelParams p = fixed;
        apply_axis(p, fixed, x.name, x.value(ix));
        apply_axis(p, fixed, y.name, y.value(iy));
        return p;
    }
};

struct SweepGrid {
    SweepSpec spec;
    std::vector<double> xs, ys;
    std::vector<double> values;          ///< row-major, index iy * nx + ix
    std::vector<std::uint8_t> singular;  ///< raw |alpha1|^2 exceeded the cap before the horizon
    std::vector<std::int16_t> error;     ///< -1 or the ErrorCode of a failed cell
    double wall_seconds = 0.0;
    unsigned workers = 1;

    std::size_t nx() const noexcept { return xs.size(); }
    std::size_t ny() const noexcept { return ys.size(); }
    std::size_t index(std::size_t ix, std::size_t iy) const noexcept { return iy * xs.size() + ix; }
    double at(std::size_t ix, std::size_t iy) const { return values.at(index(ix, iy)); }
    bool masked(std::size_t ix, std::size_t iy) const {
        const auto i = index(ix, iy);
        return singular.at(i) != 0 || error.at(i) >= 0;
    }
    std::size_t singular_count() const noexcept {
        return static_cast<std::size_t>(std::count(singular.begin(), singular.end(), std::uint8_t{1}));
    }
    std::size_t error_count() const noexcept {
        return static_cast<std::size_t>(std::count_if(error.begin(), error.end(), [](std::int16_t e) { return e >= 0; }));
    }
};

struct CellResult {
    double value = std::numeric_limits<double>::quiet_NaN();
    bool singular = false;
};

/// One sweep cell computed exactly as run_sweep does.
inline CellResult evaluate_cell(const SweepSpec& spec, const ModelParams& p) {
    TrajectoryOptions opts;
    opts.integrator = spec.integrator;
    CellResult r;
    const bool needs_path = spec.observable == Observable::MinZ || spec.observable == Observable::TrappingClass;
    const double period = p.drive_period();
    if (needs_path) {
        const double periods = spec.horizon / period;
        opts.samples = static_cast<std::size_t>(std::ceil(periods * static_cast<double>(spec.samples_per_period))) + 1;
    } else {
        opts.samples = 2;
    }
    opts.stop_at_singular = spec.observable == Observable::RawPopA1;
    opts.record_projective = needs_path;
    const Trajectory traj = integrate_biorthogonal(p, spec.initial, 0.0, spec.horizon, opts);
    r.singular = traj.singular_time.has_value() && *traj.singular_time < spec.horizon;
    switch (spec.observable) {
        case Observable::RawPopA1:
            r.value = r.singular ? traj.final_state.raw_population_a1() : traj.samples.back().raw_population_a1();
            break;
        case Observable::ProjPopA:
            r.value = traj.samples.back().projective_population_a();
            break;
        case Observable::MinZ: {
            double m = std::numeric_limits<double>::infinity();
            for (const auto& s : traj.right) m = std::min(m, s.z());
            r.value = m;
            break;
        }
        case Observable::TrappingClass: {
            const TimeWindow w{0.0, spec.horizon};
            r.value = trapping_code(trapping_metric(traj.right, p.k(), w, p.omega).classification);
            break;
        }
    }
    return r;
}

/// Runs every cell; integrator failures are recorded per cell instead of
/// aborting the sweep.
inline SweepGrid run_sweep(const SweepSpec& spec, unsigned workers = 1) {
    spec.validate();
    const auto start = std::chrono::steady_clock::now();
    SweepGrid g;
    g.spec = spec;
    g.workers = std::max(1u, workers);
    for (std::size_t i = 0; i < spec.x.count; ++i) g.xs.push_back(spec.x.value(i));
    for (std::size_t i = 0; i < spec.y.count; ++i) g.ys.push_back(spec.y.value(i));
    const std::size_t n = g.xs.size() * g.ys.size();
    g.values.assign(n, std::numeric_limits<double>::quiet_NaN());
    g.singular.assign(n, 0);
    g.error.assign(n, -1);

    // Parameter errors surface before any work is scheduled.
    for (std::size_t iy = 0; iy < g.ys.size(); ++iy)
        for (std::size_t ix = 0; ix < g.xs.size(); ++ix) spec.cell_params(ix, iy).validate();

    std::atomic<std::size_t> next{0};
    constexpr std::size_t chunk = 8;
    auto work = [&] {
        for (;;) {
            const std::size_t begin = next.fetch_add(chunk);
            if (begin >= n) return;
            const std::size_t end = std::min(n, begin + chunk);
            for (std::size_t i = begin; i < end; ++i) {
                const std::size_t ix = i % g.xs.size(), iy = i / g.xs.size();
                try {
                    const CellResult r = evaluate_cell(spec, spec.cell_params(ix, iy));
                    g.values[i] = r.value;
                    g.singular[i] = r.singular ? 1 : 0;
                } catch (const Error& e) {
                    g.error[i] = static_cast<std::int16_t>(e.code());
                }
            }
        }
    };
    const unsigned nthreads = static_cast<unsigned>(std::min<std::size_t>(g.workers, (n + chunk - 1) / chunk));
    if (nthreads <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    g.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return g;
}

/// Trapping grid over (Delta/omega, c/omega). The horizon defaults to one
/// drive period of the template when left at zero.
inline SweepGrid run_trapping_sweep(SweepSpec spec, unsigned workers = 1) {
    if (spec.observable != Observable::TrappingClass && spec.observable != Observable::MinZ)
        throw Error(ErrorCode::InvalidArgument, "run_trapping_sweep needs TRAPPING_CLASS or MIN_Z");
    if (spec.horizon <= 0.0) spec.horizon = spec.fixed.drive_period();
    if (spec.x.name == "omega" || spec.y.name == "omega")
        throw Error(ErrorCode::InvalidArgument, "trapping sweeps keep omega fixed");
    return run_sweep(spec, workers);
}

/// Worker count from LZSM_WORKERS or the hardware concurrency.
inline unsigned default_workers() {
    if (const char* env = std::getenv("LZSM_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace lzsm
