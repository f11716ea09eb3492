#pragma once

// Time evolution of the coupled right/left states, their projective
// (Bloch-angle) decomposition, trapping classification and the cyclic
// geometric phase.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "lzsm/error.hpp"
#include "lzsm/integrator.hpp"
#include "lzsm/model.hpp"

namespace lzsm {

enum class Side { Right, Left };

/// psi = exp(mu + i nu) * (sin(theta/2) e^{i phi}, cos(theta/2)).
struct ProjectiveState {
    double theta = 0.0;  ///< polar angle in [0, pi]
    double phi = 0.0;    ///< azimuth in (-pi, pi]
    double mu = 0.0;     ///< log of the norm
    double nu = 0.0;     ///< global phase, continued along a trajectory
    double t = 0.0;

    bool operator==(const ProjectiveState&) const = default;

    cplx a_tilde() const noexcept { return std::polar(std::sin(0.5 * theta), phi); }
    double b_tilde() const noexcept { return std::cos(0.5 * theta); }
    /// Population difference |b~|^2 - |a~|^2.
    double z() const noexcept { return std::cos(theta); }
    double population_a() const noexcept {
        const double s = std::sin(0.5 * theta);
        return s * s;
    }
    std::array<double, 3> bloch_vector() const noexcept {
        return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
    }
    /// Unscaled amplitudes exp(mu + i nu)(a~, b~).
    std::array<cplx, 2> amplitudes() const {
        const cplx f = std::exp(cplx(mu, nu));
        return {f * a_tilde(), f * b_tilde()};
    }
};

namespace detail {

inline double wrap_angle(double x) noexcept {
    double r = std::remainder(x, 2.0 * M_PI);
    if (r <= -M_PI) r += 2.0 * M_PI;
    return r;
}

inline double unwrap_against(double previous, double raw) noexcept {
    return previous + std::remainder(raw - previous, 2.0 * M_PI);
}

inline ProjectiveState project_amplitudes(cplx a, cplx b, double logscale, double t,
                                          std::optional<double> previous_nu) {
    const double na = std::abs(a), nb = std::abs(b);
    if (na == 0.0 && nb == 0.0) throw Error(ErrorCode::ZeroState, "cannot project a zero state");
    ProjectiveState ps;
    ps.theta = 2.0 * std::atan2(na, nb);
    ps.phi = wrap_angle(std::arg(a) - std::arg(b));
    ps.mu = std::log(std::hypot(na, nb)) + logscale;
    const double raw_nu = std::arg(b);
    ps.nu = previous_nu ? unwrap_against(*previous_nu, raw_nu) : raw_nu;
    ps.t = t;
    return ps;
}

}  // namespace detail

/// Bloch angles of one side of a biorthogonal state. `previous_nu` continues
/// the global phase from an earlier sample instead of wrapping it.
inline ProjectiveState project(const BiorthState& s, Side side, std::optional<double> previous_nu = std::nullopt) {
    if (side == Side::Right) return detail::project_amplitudes(s.alpha1, s.beta1, s.logscale_r, s.t, previous_nu);
    return detail::project_amplitudes(s.alpha2, s.beta2, s.logscale_l, s.t, previous_nu);
}

/// Projective states along a sampled trajectory with nu unwrapped.
inline std::vector<ProjectiveState> project_sequence(std::span<const BiorthState> samples, Side side) {
    std::vector<ProjectiveState> out;
    out.reserve(samples.size());
    std::optional<double> prev;
    for (const auto& s : samples) {
        out.push_back(project(s, side, prev));
        prev = out.back().nu;
    }
    return out;
}

using AmplitudeVector = std::array<double, 8>;

inline AmplitudeVector pack(const BiorthState& s) noexcept {
    return {s.alpha1.real(), s.alpha1.imag(), s.beta1.real(), s.beta1.imag(),
            s.alpha2.real(), s.alpha2.imag(), s.beta2.real(), s.beta2.imag()};
}

inline void unpack(const AmplitudeVector& y, BiorthState& s) noexcept {
    s.alpha1 = {y[0], y[1]};
    s.beta1 = {y[2], y[3]};
    s.alpha2 = {y[4], y[5]};
    s.beta2 = {y[6], y[7]};
}

/// i d/dt psi_r = H psi_r, i d/dt psi_l = H^dagger psi_l with H built from the
/// current pair. `w_scale` = exp(logscale_r + logscale_l) restores the true
/// feedback from stored amplitudes.
struct BiorthogonalRhs {
    ModelParams p;
    double w_scale = 1.0;

    void operator()(double t, const AmplitudeVector& y, AmplitudeVector& dy) const noexcept {
        const double a1r = y[0], a1i = y[1], b1r = y[2], b1i = y[3];
        const double a2r = y[4], a2i = y[5], b2r = y[6], b2i = y[7];
        // w = b1 conj(b2) - a1 conj(a2)
        const double wr = w_scale * ((b1r * b2r + b1i * b2i) - (a1r * a2r + a1i * a2i));
        const double wi = w_scale * ((b1i * b2r - b1r * b2i) - (a1i * a2r - a1r * a2i));
        const double fr = 0.5 * (p.amp * std::sin(p.omega * t) + p.eps0 + p.c * wr);
        const double fi = 0.5 * p.c * wi;
        const double h12 = 0.5 * p.delta1, h21 = 0.5 * p.delta2;
        // -i (x + i y) = y - i x
        // right: H = [[f, h12], [h21, -f]]
        const double ra_r = fr * a1r - fi * a1i + h12 * b1r, ra_i = fr * a1i + fi * a1r + h12 * b1i;
        const double rb_r = h21 * a1r - (fr * b1r - fi * b1i), rb_i = h21 * a1i - (fr * b1i + fi * b1r);
        // left: H^dagger = [[f*, h21], [h12, -f*]]
        const double la_r = fr * a2r + fi * a2i + h21 * b2r, la_i = fr * a2i - fi * a2r + h21 * b2i;
        const double lb_r = h12 * a2r - (fr * b2r + fi * b2i), lb_i = h12 * a2i - (fr * b2i - fi * b2r);
        dy[0] = ra_i;
        dy[1] = -ra_r;
        dy[2] = rb_i;
        dy[3] = -rb_r;
        dy[4] = la_i;
        dy[5] = -la_r;
        dy[6] = lb_i;
        dy[7] = -lb_r;
    }
};

struct TrajectoryOptions {
    IntegratorOptions integrator{};
    std::size_t samples = 2;         ///< uniformly spaced output samples including both ends
    bool stop_at_singular = false;   ///< end the run once raw |alpha1|^2 exceeds the cap
    bool record_projective = true;
};

struct Trajectory {
    std::vector<BiorthState> samples;
    std::vector<ProjectiveState> right;
    std::vector<ProjectiveState> left;
    std::vector<cplx> feedback;  ///< w at each sample
    IntegratorStats stats;
    std::optional<double> singular_time;  ///< first time raw |alpha1|^2 exceeded the cap
    BiorthState final_state;
    double max_norm_error = 0.0;  ///< max |<psi_l|psi_r> - 1| over the samples

    bool singular() const noexcept { return singular_time.has_value(); }
};

inline cplx true_feedback(const BiorthState& s) noexcept {
    return std::exp(s.logscale_r + s.logscale_l) * nonlinear_feedback(s);
}

inline cplx true_biorthogonal_norm(const BiorthState& s) noexcept {
    return std::exp(s.logscale_r + s.logscale_l) * s.biorthogonal_norm();
}

/// Integrates the closed 8-dimensional nonlinear system from t0 to t1.
inline Trajectory integrate_biorthogonal(const ModelParams& p, const BiorthState& init, double t0, double t1,
                                         const TrajectoryOptions& opts = {}) {
    p.validate();
    if (!(t1 > t0)) throw Error(ErrorCode::InvalidArgument, "integrate_biorthogonal needs t1 > t0");
    if (!init.is_finite()) throw Error(ErrorCode::NonFinite, "initial state is not finite");
    if (std::abs(true_biorthogonal_norm(init) - 1.0) > 1e-12)
        throw Error(ErrorCode::InvalidArgument, "initial state is not biorthogonally normalised");

    const IntegratorOptions& io = opts.integrator;
    BiorthState state = init;
    state.t = t0;
    BiorthogonalRhs rhs{p, std::exp(init.logscale_r + init.logscale_l)};
    auto stepper = make_stepper<8>(rhs, io);
    stepper.reset(t0, pack(state), t1);

    Trajectory traj;
    const std::size_t n_samples = std::max<std::size_t>(opts.samples, 2);
    traj.samples.reserve(n_samples);
    const double dt_sample = (t1 - t0) / static_cast<double>(n_samples - 1);
    std::size_t next_sample = 0;
    auto sample_time = [&](std::size_t j) { return j + 1 == n_samples ? t1 : t0 + dt_sample * static_cast<double>(j); };

    auto emit = [&](double ts, const AmplitudeVector& y) {
        BiorthState s = state;
        unpack(y, s);
        s.t = ts;
        traj.samples.push_back(s);
    };

    emit(t0, stepper.y());
    next_sample = 1;

    auto check_cap = [&](const BiorthState& s) {
        if (!traj.singular_time && s.raw_population_a1() > io.singular_cap) traj.singular_time = s.t;
    };
    check_cap(state);

    while (stepper.t() < t1) {
        stepper.advance(t1);
        const double tc = stepper.t();
        while (next_sample < n_samples && sample_time(next_sample) <= tc) {
            const double ts = sample_time(next_sample);
            emit(ts, ts == tc ? stepper.y() : stepper.dense(ts));
            ++next_sample;
        }
        unpack(stepper.y(), state);
        state.t = tc;
        if (!state.is_finite()) throw Error(ErrorCode::NonFinite, "state left the representable range");

        const double mr = std::max({std::abs(state.alpha1), std::abs(state.beta1)});
        const double ml = std::max({std::abs(state.alpha2), std::abs(state.beta2)});
        if (mr > io.rescale_threshold || ml > io.rescale_threshold) {
            const double s = mr >= ml ? std::hypot(std::abs(state.alpha1), std::abs(state.beta1))
                                      : 1.0 / std::hypot(std::abs(state.alpha2), std::abs(state.beta2));
            state.joint_rescale(s);
            if (!state.is_finite() || s == 0.0)
                throw Error(ErrorCode::NonFinite, "rescaling failed to keep the state representable");
            stepper.replace_state(pack(state));
            ++stepper.stats().rescales;
        }
        check_cap(state);
        if (opts.stop_at_singular && traj.singular_time) break;
    }

    traj.final_state = state;
    traj.stats = stepper.stats();
    traj.feedback.reserve(traj.samples.size());
    for (const auto& s : traj.samples) {
        traj.feedback.push_back(true_feedback(s));
        traj.max_norm_error = std::max(traj.max_norm_error, std::abs(true_biorthogonal_norm(s) - 1.0));
    }
    if (opts.record_projective) {
        traj.right = project_sequence(traj.samples, Side::Right);
        traj.left = project_sequence(traj.samples, Side::Left);
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Angle-space integration

struct BlochOptions {
    IntegratorOptions integrator{};
    std::size_t samples = 2;
    double pole_band = 1e-10;  ///< distance from theta in {0, pi} handled in amplitude space
};

struct BlochPair {
    std::vector<ProjectiveState> right;
    std::vector<ProjectiveState> left;
    IntegratorStats stats;
    std::size_t pole_steps = 0;
};

namespace detail {

struct AngleRates {
    double theta, phi, mu, nu;
};

// One side of the projective system. `g` is the complex diagonal drive
// (gamma + c w) for the right state and its conjugate for the left one;
// (da, db) are (delta1, delta2) on the right and (delta2, delta1) on the left.
inline AngleRates angle_rates(double theta, double phi, cplx g, double da, double db) noexcept {
    const double h = 0.5 * theta;
    const double sh = std::sin(h), ch = std::cos(h);
    const double sp = std::sin(phi), cp = std::cos(phi);
    const double st = std::sin(theta), ct = std::cos(theta);
    AngleRates r;
    r.theta = g.imag() * st - da * sp * ch * ch - db * sp * sh * sh;
    r.phi = -g.real() - 0.5 * da * (ch / sh) * cp + 0.5 * db * (sh / ch) * cp;
    r.mu = -0.5 * g.imag() * ct + 0.25 * (db - da) * st * sp;
    r.nu = 0.5 * g.real() - 0.5 * db * (sh / ch) * cp;
    return r;
}

inline cplx feedback_from_angles(const double* r, const double* l) noexcept {
    // r, l point at (theta, phi, mu, nu)
    const double sr = std::sin(0.5 * r[0]), cr = std::cos(0.5 * r[0]);
    const double sl = std::sin(0.5 * l[0]), cl = std::cos(0.5 * l[0]);
    const cplx bracket = cr * cl - sr * sl * std::polar(1.0, r[1] - l[1]);
    return std::exp(cplx(r[2] + l[2], r[3] - l[3])) * bracket;
}

inline bool near_pole(double theta, double band) noexcept {
    return theta < band || theta > M_PI - band;
}

// Keeps theta in [0, pi] and phi in (-pi, pi] without changing the state.
inline bool normalize_angles(double& theta, double& phi, double& nu) noexcept {
    bool changed = false;
    if (theta < 0.0) {
        theta = -theta;
        phi += M_PI;
        changed = true;
    } else if (theta > M_PI) {
        theta = 2.0 * M_PI - theta;
        phi += M_PI;
        nu += M_PI;
        changed = true;
    }
    const double w = wrap_angle(phi);
    if (w != phi) {
        phi = w;
        changed = true;
    }
    return changed;
}

template <std::size_t Sides>
struct AngleRhs {
    ModelParams p;
    void operator()(double t, const std::array<double, 4 * Sides>& y, std::array<double, 4 * Sides>& dy) const {
        const double gamma = drive_gamma(t, p);
        cplx g = gamma;
        if constexpr (Sides == 2) {
            if (p.c != 0.0) g += p.c * feedback_from_angles(&y[0], &y[4]);
        }
        const auto r = angle_rates(y[0], y[1], g, p.delta1, p.delta2);
        dy[0] = r.theta;
        dy[1] = r.phi;
        dy[2] = r.mu;
        dy[3] = r.nu;
        if constexpr (Sides == 2) {
            const auto l = angle_rates(y[4], y[5], std::conj(g), p.delta2, p.delta1);
            dy[4] = l.theta;
            dy[5] = l.phi;
            dy[6] = l.mu;
            dy[7] = l.nu;
        }
    }
};

template <std::size_t Sides>
BlochPair integrate_angles(const ModelParams& p, const std::array<ProjectiveState, Sides>& init, double t0, double t1,
                           const BlochOptions& opts) {
    using State = std::array<double, 4 * Sides>;
    p.validate();
    if (!(t1 > t0)) throw Error(ErrorCode::InvalidArgument, "angle integration needs t1 > t0");

    State y{};
    for (std::size_t s = 0; s < Sides; ++s) {
        y[4 * s + 0] = init[s].theta;
        y[4 * s + 1] = init[s].phi;
        y[4 * s + 2] = init[s].mu;
        y[4 * s + 3] = init[s].nu;
        normalize_angles(y[4 * s], y[4 * s + 1], y[4 * s + 3]);
    }

    BlochPair out;
    const std::size_t n_samples = std::max<std::size_t>(opts.samples, 2);
    const double dt_sample = (t1 - t0) / static_cast<double>(n_samples - 1);
    auto sample_time = [&](std::size_t j) { return j + 1 == n_samples ? t1 : t0 + dt_sample * static_cast<double>(j); };
    std::size_t next_sample = 0;

    auto emit = [&](double ts, State v) {
        for (std::size_t s = 0; s < Sides; ++s) normalize_angles(v[4 * s], v[4 * s + 1], v[4 * s + 3]);
        auto make = [&](std::size_t s) {
            ProjectiveState ps;
            ps.theta = v[4 * s];
            ps.phi = v[4 * s + 1];
            ps.mu = v[4 * s + 2];
            ps.nu = v[4 * s + 3];
            ps.t = ts;
            return ps;
        };
        out.right.push_back(make(0));
        if constexpr (Sides == 2) out.left.push_back(make(1));
    };

    auto any_pole = [&](const State& v) {
        for (std::size_t s = 0; s < Sides; ++s)
            if (near_pole(v[4 * s], opts.pole_band)) return true;
        return false;
    };

    auto stepper = make_stepper<4 * Sides>(AngleRhs<Sides>{p}, opts.integrator);
    IntegratorStats total;
    auto accumulate = [&](const IntegratorStats& st) {
        total.steps += st.steps;
        total.rejected += st.rejected;
        total.rhs_evals += st.rhs_evals;
        total.rescales += st.rescales;
    };

    double t = t0;
    emit(t0, y);
    next_sample = 1;
    const double pole_span =
        0.01 / std::max({std::abs(p.delta1), std::abs(p.delta2), std::abs(p.amp) + std::abs(p.eps0), 1e-300});

    while (t < t1) {
        if (any_pole(y)) {
            // Amplitude-space step through the coordinate singularity.
            BiorthState bs;
            {
                auto ar = ProjectiveState{y[0], y[1], 0.0, y[3], t}.amplitudes();
                bs.alpha1 = ar[0];
                bs.beta1 = ar[1];
                bs.logscale_r = y[2];
                if constexpr (Sides == 2) {
                    auto al = ProjectiveState{y[4], y[5], 0.0, y[7], t}.amplitudes();
                    bs.alpha2 = al[0];
                    bs.beta2 = al[1];
                    bs.logscale_l = y[6];
                } else {
                    bs.alpha2 = bs.alpha1;
                    bs.beta2 = bs.beta1;
                }
            }
            const double w_scale = Sides == 2 ? std::exp(bs.logscale_r + bs.logscale_l) : 1.0;
            const double t_end = std::min(t1, t + pole_span);
            auto amp = make_stepper<8>(BiorthogonalRhs{p, w_scale}, opts.integrator);
            amp.reset(t, pack(bs), t_end);
            auto to_angles = [&](const AmplitudeVector& v, double tt) {
                BiorthState s = bs;
                unpack(v, s);
                s.t = tt;
                State res{};
                auto r = project(s, Side::Right, y[3]);
                res[0] = r.theta;
                res[1] = r.phi;
                res[2] = r.mu;
                res[3] = r.nu;
                if constexpr (Sides == 2) {
                    auto l = project(s, Side::Left, y[7]);
                    res[4] = l.theta;
                    res[5] = l.phi;
                    res[6] = l.mu;
                    res[7] = l.nu;
                }
                return res;
            };
            while (amp.t() < t_end) {
                amp.advance(t_end);
                while (next_sample < n_samples && sample_time(next_sample) <= amp.t()) {
                    const double ts = sample_time(next_sample);
                    emit(ts, to_angles(ts == amp.t() ? amp.y() : amp.dense(ts), ts));
                    ++next_sample;
                }
            }
            accumulate(amp.stats());
            ++out.pole_steps;
            y = to_angles(amp.y(), t_end);
            t = t_end;
            if (t < t1 && any_pole(y))
                throw Error(ErrorCode::PoleStall, "state remains at a Bloch-sphere pole");
            continue;
        }

        stepper.reset(t, y, t1);
        IntegratorStats before = stepper.stats();
        (void)before;
        while (stepper.t() < t1) {
            stepper.advance(t1);
            const double tc = stepper.t();
            while (next_sample < n_samples && sample_time(next_sample) <= tc) {
                const double ts = sample_time(next_sample);
                emit(ts, ts == tc ? stepper.y() : stepper.dense(ts));
                ++next_sample;
            }
            State v = stepper.y();
            for (const double x : v)
                if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, "angle integration produced a non-finite value");
            bool changed = false;
            for (std::size_t s = 0; s < Sides; ++s) changed |= normalize_angles(v[4 * s], v[4 * s + 1], v[4 * s + 3]);
            if (any_pole(v)) {
                y = v;
                t = tc;
                break;
            }
            if (changed) stepper.replace_state(v);
            y = v;
            t = tc;
        }
        accumulate(stepper.stats());
        stepper = make_stepper<4 * Sides>(AngleRhs<Sides>{p}, opts.integrator);
    }
    out.stats = total;
    return out;
}

}  // namespace detail

/// Linear (c = 0) right-state Bloch dynamics.
inline std::vector<ProjectiveState> integrate_bloch_linear(const ModelParams& p, const ProjectiveState& init, double t0,
                                                           double t1, const BlochOptions& opts = {}) {
    if (p.c != 0.0) throw Error(ErrorCode::InvalidArgument, "integrate_bloch_linear requires c = 0");
    return detail::integrate_angles<1>(p, {init}, t0, t1, opts).right;
}

/// Coupled right/left Bloch dynamics with the nonlinear feedback rebuilt from
/// both projective states (including mu and nu) at every evaluation.
inline BlochPair integrate_bloch_nonlinear(const ModelParams& p, const ProjectiveState& init_r,
                                           const ProjectiveState& init_l, double t0, double t1,
                                           const BlochOptions& opts = {}) {
    return detail::integrate_angles<2>(p, {init_r, init_l}, t0, t1, opts);
}

// ---------------------------------------------------------------------------
// Observables

/// cos(theta0) of the asymptotic circle, with k^2 = tan^2(theta0/2).
inline double asymptotic_circle_z(double k) {
    if (!(k > 0.0)) throw Error(ErrorCode::InvalidArgument, "asymptotic_circle_z needs k > 0");
    const double k2 = k * k;
    return (1.0 - k2) / (1.0 + k2);
}

enum class TrappingClass { Josephson, SelfTrapped, Boundary };

inline const char* to_string(TrappingClass c) noexcept {
    switch (c) {
        case TrappingClass::Josephson: return "JOSEPHSON";
        case TrappingClass::SelfTrapped: return "SELF_TRAPPED";
        case TrappingClass::Boundary: return "BOUNDARY";
    }
    return "?";
}

struct TimeWindow {
    double start = 0.0;
    double end = 0.0;
    double length() const noexcept { return end - start; }
};

struct TrappingReport {
    TrappingClass classification = TrappingClass::Boundary;
    double min_z_over_window = 0.0;
    double boundary_z = 0.0;
    TimeWindow window;
};

inline constexpr double kTrappingTieMargin = 0.01;

/// Compares the minimum of z = cos(theta) over the window with the boundary
/// circle z0 = (1 - k^2)/(1 + k^2).
inline TrappingReport trapping_metric(std::span<const ProjectiveState> traj, double k, TimeWindow window,
                                      double omega) {
    if (!(omega > 0.0)) throw Error(ErrorCode::InvalidArgument, "trapping_metric needs omega > 0");
    const double period = 2.0 * M_PI / omega;
    if (window.length() < period * (1.0 - 1e-12))
        throw Error(ErrorCode::WindowTooShort, "trapping window shorter than one drive period");
    if (traj.empty() || window.start < traj.front().t - 1e-12 || window.end > traj.back().t + 1e-12)
        throw Error(ErrorCode::InvalidArgument, "trapping window outside the trajectory span");
    TrappingReport rep;
    rep.window = window;
    rep.boundary_z = asymptotic_circle_z(k);
    double zmin = std::numeric_limits<double>::infinity();
    std::size_t count = 0;
    for (const auto& s : traj) {
        if (s.t < window.start - 1e-12 || s.t > window.end + 1e-12) continue;
        zmin = std::min(zmin, s.z());
        ++count;
    }
    const double needed = 100.0 * window.length() / period;
    if (static_cast<double>(count) + 1.0 < needed)
        throw Error(ErrorCode::InvalidArgument, "trajectory sampled below 100 points per drive period");
    rep.min_z_over_window = zmin;
    if (zmin > rep.boundary_z + kTrappingTieMargin)
        rep.classification = TrappingClass::SelfTrapped;
    else if (zmin < rep.boundary_z - kTrappingTieMargin)
        rep.classification = TrappingClass::Josephson;
    else
        rep.classification = TrappingClass::Boundary;
    return rep;
}

/// Geometric part of the total phase, the integral of (1 - z)/2 dphi along a
/// closed projective loop, reduced to [0, 2 pi).
inline double geometric_phase(std::span<const ProjectiveState> loop) {
    if (loop.size() < 2) throw Error(ErrorCode::InvalidArgument, "geometric_phase needs at least two samples");
    const auto& a = loop.front();
    const auto& b = loop.back();
    const double dtheta = std::abs(a.theta - b.theta);
    const double dphi = std::abs(detail::wrap_angle(a.phi - b.phi));
    const double at_pole = std::min(std::sin(a.theta), std::sin(b.theta));
    if (dtheta > 1e-6 || (dphi > 1e-6 && at_pole > 1e-6))
        throw Error(ErrorCode::NotClosed, "projective path is not closed");
    double acc = 0.0;
    for (std::size_t i = 1; i < loop.size(); ++i) {
        const double zm = 0.5 * (loop[i - 1].z() + loop[i].z());
        acc += 0.5 * (1.0 - zm) * detail::wrap_angle(loop[i].phi - loop[i - 1].phi);
    }
    double r = std::fmod(acc, 2.0 * M_PI);
    if (r < 0.0) r += 2.0 * M_PI;
    if (r >= 2.0 * M_PI - 1e-12) r = 0.0;
    return r;
}

}  // namespace lzsm
