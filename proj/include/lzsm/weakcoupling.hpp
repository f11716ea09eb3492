#pragma once

// Weak-coupling (Delta << omega) Dirac picture: the drive and the frozen
// nonlinear feedback are gauged into the phase of the off-diagonal term.

#include <cmath>
#include <string>
#include <vector>

#include "lzsm/dynamics.hpp"
#include "lzsm/error.hpp"
#include "lzsm/integrator.hpp"
#include "lzsm/model.hpp"

namespace lzsm {

/// j = 1 for anti-phase (delta2 < 0), j = 2 for in-phase (delta2 > 0).
struct DiracParams {
    ModelParams p;
    int j = 2;

    static DiracParams from_model(const ModelParams& p) {
        return {p, p.delta2 < 0.0 ? 1 : 2};
    }

    void validate() const {
        p.validate();
        if (j != 1 && j != 2) throw Error(ErrorCode::InvalidArgument, "j must be 1 or 2");
        if (!(p.delta1 > 0.0)) throw Error(ErrorCode::InvalidArgument, "Dirac picture assumes delta1 > 0");
        if ((j == 1) != (p.delta2 < 0.0))
            throw Error(ErrorCode::InvalidArgument, "j inconsistent with the sign of delta2");
    }
};

/// Phi(t) = eps0 t - (A/omega) cos(omega t) + c t.
inline double phi_phase(double t, const ModelParams& p) {
    if (!(p.omega > 0.0)) throw Error(ErrorCode::InvalidArgument, "phi_phase needs omega > 0");
    return p.eps0 * t - (p.amp / p.omega) * std::cos(p.omega * t) + p.c * t;
}

/// Phase with the feedback frozen at w0: eps0 t - (A/omega) cos(omega t) + c w0 t.
inline cplx phi_phase_frozen(double t, const ModelParams& p, cplx w0) {
    return cplx(p.eps0 * t - (p.amp / p.omega) * std::cos(p.omega * t), 0.0) + p.c * w0 * t;
}

enum class Interference { Constructive, Destructive, Neither };

inline const char* to_string(Interference v) noexcept {
    switch (v) {
        case Interference::Constructive: return "CONSTRUCTIVE";
        case Interference::Destructive: return "DESTRUCTIVE";
        case Interference::Neither: return "NEITHER";
    }
    return "?";
}

inline constexpr double kConditionTolerance = 0.05;

struct PhaseCondition {
    Interference verdict = Interference::Neither;
    long nearest_d = 0;    ///< nearest integer to (eps0 + c)/omega
    double residue = 0.0;  ///< (eps0 + c)/omega - nearest_d, in [-1/2, 1/2]
};

/// Constructive when (eps0 + c)/omega is within the tolerance of an integer,
/// destructive when within the tolerance of a half-integer.
inline PhaseCondition interference_condition(const ModelParams& p, double tol = kConditionTolerance) {
    if (!(p.omega > 0.0)) throw Error(ErrorCode::InvalidArgument, "interference_condition needs omega > 0");
    const double x = (p.eps0 + p.c) / p.omega;
    PhaseCondition pc;
    pc.nearest_d = std::lround(x);
    pc.residue = x - static_cast<double>(pc.nearest_d);
    if (std::abs(pc.residue) < tol)
        pc.verdict = Interference::Constructive;
    else if (std::abs(std::abs(pc.residue) - 0.5) < tol)
        pc.verdict = Interference::Destructive;
    return pc;
}

struct DiracSample {
    double t = 0.0;
    BiorthState lab;        ///< amplitudes mapped back through the gauge
    double pop_a = 0.0;     ///< right projective |a~|^2
    double pop_a_left = 0.0;
    cplx feedback;          ///< exact w of the approximate state
};

struct DiracTrajectory {
    std::vector<DiracSample> samples;
    cplx w0;
    double max_feedback_drift = 0.0;  ///< max |w(t) - w0|
    IntegratorStats stats;
    std::string warning;  ///< non-empty when Delta/omega exceeds 0.1
};

namespace detail {

// y = (a~1, b~1, a~2, b~2) as re/im pairs.
struct DiracRhs {
    ModelParams p;
    cplx w0;

    void operator()(double t, const std::array<double, 8>& y, std::array<double, 8>& dy) const {
        const cplx phase = phi_phase_frozen(t, p, w0);
        const cplx er = std::exp(cplx(0.0, 1.0) * phase);
        const cplx el = std::exp(cplx(0.0, 1.0) * std::conj(phase));
        const cplx a1(y[0], y[1]), b1(y[2], y[3]), a2(y[4], y[5]), b2(y[6], y[7]);
        const cplx mi(0.0, -1.0);
        const cplx da1 = mi * (0.5 * p.delta1) * er * b1;
        const cplx db1 = mi * (0.5 * p.delta2) / er * a1;
        const cplx da2 = mi * (0.5 * p.delta2) * el * b2;
        const cplx db2 = mi * (0.5 * p.delta1) / el * a2;
        dy = {da1.real(), da1.imag(), db1.real(), db1.imag(), da2.real(), da2.imag(), db2.real(), db2.imag()};
    }
};

}  // namespace detail

/// Integrates the Dirac-picture equations with w frozen at its initial value.
/// Off-diagonals are k Omega and (-1)^j Omega^-/k with Omega = (Delta/2) e^{i Phi}.
inline DiracTrajectory integrate_dirac(const DiracParams& dp, const BiorthState& init, double t0, double t1,
                                       std::size_t samples = 2, const IntegratorOptions& io = {}) {
    dp.validate();
    if (!(t1 > t0)) throw Error(ErrorCode::InvalidArgument, "integrate_dirac needs t1 > t0");
    const ModelParams& p = dp.p;
    DiracTrajectory out;
    if (p.mean_delta() / p.omega > 0.1)
        out.warning = "Delta/omega = " + std::to_string(p.mean_delta() / p.omega) +
                      " exceeds 0.1; weak-coupling approximation may be inaccurate";

    out.w0 = true_feedback(init);
    const double sr = std::exp(init.logscale_r), sl = std::exp(init.logscale_l);
    // Gauge: alpha = e^{-iU} a~, beta = e^{iU} b~ with U = Phi/2; the left
    // state uses U*.
    auto gauge = [&](double t) { return 0.5 * phi_phase_frozen(t, p, out.w0); };
    const cplx I(0.0, 1.0);
    const cplx u0 = gauge(t0);
    const cplx a1 = std::exp(I * u0) * init.alpha1 * sr, b1 = std::exp(-I * u0) * init.beta1 * sr;
    const cplx a2 = std::exp(I * std::conj(u0)) * init.alpha2 * sl, b2 = std::exp(-I * std::conj(u0)) * init.beta2 * sl;
    std::array<double, 8> y{a1.real(), a1.imag(), b1.real(), b1.imag(), a2.real(), a2.imag(), b2.real(), b2.imag()};

    auto stepper = make_stepper<8>(detail::DiracRhs{p, out.w0}, io);
    stepper.reset(t0, y, t1);

    const std::size_t n = std::max<std::size_t>(samples, 2);
    const double dt = (t1 - t0) / static_cast<double>(n - 1);
    auto sample_time = [&](std::size_t j) { return j + 1 == n ? t1 : t0 + dt * static_cast<double>(j); };

    auto emit = [&](double t, const std::array<double, 8>& v) {
        const cplx u = gauge(t);
        DiracSample s;
        s.t = t;
        s.lab.alpha1 = std::exp(-I * u) * cplx(v[0], v[1]);
        s.lab.beta1 = std::exp(I * u) * cplx(v[2], v[3]);
        s.lab.alpha2 = std::exp(-I * std::conj(u)) * cplx(v[4], v[5]);
        s.lab.beta2 = std::exp(I * std::conj(u)) * cplx(v[6], v[7]);
        s.lab.t = t;
        s.pop_a = s.lab.projective_population_a();
        const double na = std::norm(s.lab.alpha2);
        s.pop_a_left = na / (na + std::norm(s.lab.beta2));
        s.feedback = nonlinear_feedback(s.lab);
        out.max_feedback_drift = std::max(out.max_feedback_drift, std::abs(s.feedback - out.w0));
        out.samples.push_back(s);
    };

    emit(t0, y);
    std::size_t next = 1;
    while (stepper.t() < t1) {
        stepper.advance(t1);
        const double tc = stepper.t();
        while (next < n && sample_time(next) <= tc) {
            const double ts = sample_time(next);
            emit(ts, ts == tc ? stepper.y() : stepper.dense(ts));
            ++next;
        }
        for (double v : stepper.y())
            if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "Dirac-picture state is not finite");
    }
    out.stats = stepper.stats();
    return out;
}

}  // namespace lzsm
