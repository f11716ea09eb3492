#pragma once

// Mean-field nonreciprocal two-level model: parameters, periodic drive and
// the instantaneous 2x2 Hamiltonian shared by every other module.

#include <cmath>
#include <complex>
#include <string>

#include "lzsm/error.hpp"

namespace lzsm {

using cplx = std::complex<double>;

enum class TunnelingClass { InPhase, AntiPhase, Degenerate };

inline const char* to_string(TunnelingClass tc) noexcept {
    switch (tc) {
        case TunnelingClass::InPhase: return "IN_PHASE";
        case TunnelingClass::AntiPhase: return "ANTI_PHASE";
        case TunnelingClass::Degenerate: return "DEGENERATE";
    }
    return "?";
}

/// Physical constants of one run. Energies are dimensionless (hbar = 1).
struct ModelParams {
    double delta1 = 1.0;  ///< upper off-diagonal tunneling amplitude
    double delta2 = 1.0;  ///< lower off-diagonal tunneling amplitude
    double c = 0.0;       ///< nonlinearity
    double amp = 0.0;     ///< drive amplitude A
    double omega = 1.0;   ///< drive angular frequency
    double eps0 = 0.0;    ///< drive offset

    bool operator==(const ModelParams&) const = default;

    /// Mean tunneling amplitude sqrt(|delta1 delta2|).
    double mean_delta() const noexcept { return std::sqrt(std::abs(delta1 * delta2)); }

    /// Nonreciprocity sqrt(|delta1/delta2|); requires delta2 != 0.
    double k() const noexcept { return std::sqrt(std::abs(delta1 / delta2)); }

    double tunneling_product() const noexcept { return delta1 * delta2; }

    TunnelingClass tunneling_class() const noexcept {
        const double p = delta1 * delta2;
        if (p > 0.0) return TunnelingClass::InPhase;
        if (p < 0.0) return TunnelingClass::AntiPhase;
        return TunnelingClass::Degenerate;
    }

    double drive_period() const noexcept { return 2.0 * M_PI / omega; }

    /// Throws InvalidArgument naming the first offending field.
    void validate() const {
        auto finite = [](double v, const char* name) {
            if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, std::string(name) + " is not finite");
        };
        finite(delta1, "delta1");
        finite(delta2, "delta2");
        finite(c, "c");
        finite(amp, "amp");
        finite(omega, "omega");
        finite(eps0, "eps0");
        if (delta2 == 0.0)
            throw Error(ErrorCode::InvalidArgument, "delta2 must be nonzero (nonreciprocity k undefined)");
        if (!(omega > 0.0)) throw Error(ErrorCode::InvalidArgument, "omega must be positive");
    }

    /// Builds (delta1, delta2) = (k*Delta, +-Delta/k) with delta1 > 0.
    static ModelParams from_mean(double mean_delta, double k, TunnelingClass tc, double c, double amp,
                                 double omega, double eps0) {
        if (!(mean_delta > 0.0) || !(k > 0.0))
            throw Error(ErrorCode::InvalidArgument, "from_mean needs Delta > 0 and k > 0");
        if (tc == TunnelingClass::Degenerate)
            throw Error(ErrorCode::InvalidArgument, "from_mean needs an in-phase or anti-phase class");
        const double sign = tc == TunnelingClass::InPhase ? 1.0 : -1.0;
        return ModelParams{k * mean_delta, sign * mean_delta / k, c, amp, omega, eps0};
    }
};

/// gamma(t) = A sin(omega t) + eps0.
inline double drive_gamma(double t, const ModelParams& p) noexcept {
    return p.amp * std::sin(p.omega * t) + p.eps0;
}

/// Right (alpha1, beta1) and left (alpha2, beta2) amplitudes. Raw amplitudes
/// are exp(logscale) times the stored ones.
struct BiorthState {
    cplx alpha1{0.0, 0.0};
    cplx beta1{1.0, 0.0};
    cplx alpha2{0.0, 0.0};
    cplx beta2{1.0, 0.0};
    double logscale_r = 0.0;
    double logscale_l = 0.0;
    double t = 0.0;

    bool operator==(const BiorthState&) const = default;

    /// <psi_l|psi_r> = alpha1 alpha2* + beta1 beta2*; invariant under joint rescale.
    cplx biorthogonal_norm() const noexcept {
        return alpha1 * std::conj(alpha2) + beta1 * std::conj(beta2);
    }

    bool is_finite() const noexcept {
        auto f = [](cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); };
        return f(alpha1) && f(beta1) && f(alpha2) && f(beta2) && std::isfinite(logscale_r) &&
               std::isfinite(logscale_l);
    }

    /// psi_r -> psi_r / s, psi_l -> s psi_l; leaves every bilinear unchanged.
    void joint_rescale(double s) noexcept {
        alpha1 /= s;
        beta1 /= s;
        alpha2 *= s;
        beta2 *= s;
        logscale_r += std::log(s);
        logscale_l -= std::log(s);
    }

    /// |alpha1|^2 of the unscaled amplitude.
    double raw_population_a1() const noexcept { return std::norm(alpha1) * std::exp(2.0 * logscale_r); }

    /// Normalised right-state population |a~|^2 = |alpha1|^2 / (|alpha1|^2 + |beta1|^2).
    double projective_population_a() const noexcept {
        const double na = std::norm(alpha1);
        return na / (na + std::norm(beta1));
    }
};

/// w = beta1 beta2* - alpha1 alpha2*. The diagonal of H carries +c w; the
/// quantity written A elsewhere in the literature is c w with the same sign.
inline cplx nonlinear_feedback(const BiorthState& s) noexcept {
    return s.beta1 * std::conj(s.beta2) - s.alpha1 * std::conj(s.alpha2);
}

struct HamiltonianMatrix {
    cplx h11, h12, h21, h22;
    cplx feedback;  ///< w used for the diagonal

    HamiltonianMatrix adjoint() const noexcept {
        return {std::conj(h11), std::conj(h21), std::conj(h12), std::conj(h22), feedback};
    }
};

/// Diagonal entry (gamma + c w)/2 for a given feedback value.
inline HamiltonianMatrix hamiltonian_for_feedback(cplx w, const ModelParams& p, double t) noexcept {
    const cplx f = 0.5 * (drive_gamma(t, p) + p.c * w);
    return {f, cplx(0.5 * p.delta1, 0.0), cplx(0.5 * p.delta2, 0.0), -f, w};
}

/// H = [[(gamma + c w)/2, delta1/2], [delta2/2, -(gamma + c w)/2]].
inline HamiltonianMatrix hamiltonian_at(const BiorthState& state, const ModelParams& p, double t) {
    if (!state.is_finite()) throw Error(ErrorCode::NonFinite, "hamiltonian_at: state has non-finite amplitudes");
    return hamiltonian_for_feedback(nonlinear_feedback(state), p, t);
}

}  // namespace lzsm
