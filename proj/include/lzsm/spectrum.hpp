#pragma once

// Adiabatic spectrum of the nonlinear nonreciprocal two-level model.
//
// Self-consistent eigenvalues solve
//   E^4 + c E^3 + (c^2 - gamma^2 - D12)/4 E^2 - c D12/4 E - D12 c^2/16 = 0,
// with D12 = delta1*delta2. Roots come from Ferrari's closed form followed by
// Newton polishing.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "lzsm/error.hpp"
#include "lzsm/model.hpp"

namespace lzsm {

/// Monic quartic e4 E^4 + e3 E^3 + e2 E^2 + e1 E + e0.
struct QuarticCoeffs {
    double e4 = 1.0, e3 = 0.0, e2 = 0.0, e1 = 0.0, e0 = 0.0;

    bool operator==(const QuarticCoeffs&) const = default;

    cplx operator()(cplx x) const noexcept { return (((e4 * x + e3) * x + e2) * x + e1) * x + e0; }
    cplx derivative(cplx x) const noexcept { return ((4.0 * e4 * x + 3.0 * e3) * x + 2.0 * e2) * x + e1; }

    /// Sum of term magnitudes at x; the rounding floor of a residual evaluation.
    double magnitude(cplx x) const noexcept {
        const double a = std::abs(x);
        return (((std::abs(e4) * a + std::abs(e3)) * a + std::abs(e2)) * a + std::abs(e1)) * a + std::abs(e0);
    }
};

using QuarticRoots = std::array<cplx, 4>;

inline QuarticCoeffs quartic_coeffs(double c, double gamma, double tunneling_product) noexcept {
    const double d = tunneling_product;
    return {1.0, c, 0.25 * (c * c - gamma * gamma - d), -0.25 * c * d, -d * c * c / 16.0};
}

inline QuarticCoeffs quartic_coeffs(const ModelParams& p, double gamma) noexcept {
    return quartic_coeffs(p.c, gamma, p.tunneling_product());
}

namespace detail {

inline cplx principal_cbrt(cplx z) {
    if (z == cplx(0.0)) return 0.0;
    return std::polar(std::cbrt(std::abs(z)), std::arg(z) / 3.0);
}

inline std::array<cplx, 2> solve_quadratic(cplx b, cplx c) {
    // x^2 + b x + c, cancellation-free form.
    const cplx disc = std::sqrt(b * b - 4.0 * c);
    const cplx q = -0.5 * (std::real(std::conj(b) * disc) >= 0.0 ? b + disc : b - disc);
    if (q == cplx(0.0)) return {cplx(0.0), cplx(0.0)};
    return {q, c / q};
}

inline std::array<cplx, 3> solve_cubic(cplx a, cplx b, cplx c) {
    // x^3 + a x^2 + b x + c via the depressed form u^3 + P u + Q.
    const cplx shift = a / 3.0;
    const cplx P = b - a * a / 3.0;
    const cplx Q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    const cplx root = std::sqrt(Q * Q / 4.0 + P * P * P / 27.0);
    const cplx s1 = -Q / 2.0 + root;
    const cplx s2 = -Q / 2.0 - root;
    const cplx C = principal_cbrt(std::abs(s1) >= std::abs(s2) ? s1 : s2);
    std::array<cplx, 3> out;
    if (C == cplx(0.0)) {
        out.fill(-shift);
        return out;
    }
    const cplx w(-0.5, std::sqrt(3.0) / 2.0);
    cplx wk = 1.0;
    for (int k = 0; k < 3; ++k) {
        const cplx Ck = C * wk;
        out[k] = Ck - P / (3.0 * Ck) - shift;
        wk *= w;
    }
    return out;
}

inline QuarticRoots ferrari(const QuarticCoeffs& q) {
    const double b = q.e3, c = q.e2, d = q.e1, e = q.e0;
    // Exact zero roots are split off so that c D12 = 0 gives exact zeros.
    if (e == 0.0) {
        if (d == 0.0) {
            const auto r = solve_quadratic(b, c);
            return {cplx(0.0), cplx(0.0), r[0], r[1]};
        }
        const auto r = solve_cubic(b, c, d);
        return {cplx(0.0), r[0], r[1], r[2]};
    }
    const double b2 = b * b;
    const double p = c - 3.0 * b2 / 8.0;
    const double qq = d - b * c / 2.0 + b2 * b / 8.0;
    const double r = e - b * d / 4.0 + b2 * c / 16.0 - 3.0 * b2 * b2 / 256.0;
    const double shift = -b / 4.0;
    QuarticRoots out;
    const double scale = std::abs(p) * std::sqrt(std::abs(p)) + std::abs(qq) + std::pow(std::abs(r), 0.75) + 1e-300;
    if (std::abs(qq) <= 1e-14 * scale) {
        // Biquadratic y^4 + p y^2 + r.
        const auto s = solve_quadratic(p, r);
        const cplx y1 = std::sqrt(s[0]), y2 = std::sqrt(s[1]);
        out = {y1 + shift, -y1 + shift, y2 + shift, -y2 + shift};
        return out;
    }
    // Resolvent cubic m^3 - (p/2) m^2 - r m + (p r/2 - q^2/8) = 0.
    const auto ms = solve_cubic(-p / 2.0, -r, p * r / 2.0 - qq * qq / 8.0);
    cplx m = ms[0];
    for (const cplx& cand : ms)
        if (std::abs(2.0 * cand - p) > std::abs(2.0 * m - p)) m = cand;
    const cplx s = std::sqrt(2.0 * m - p);
    const cplx t = qq / (2.0 * s);
    const auto r1 = solve_quadratic(-s, m + t);
    const auto r2 = solve_quadratic(s, m - t);
    out = {r1[0] + shift, r1[1] + shift, r2[0] + shift, r2[1] + shift};
    return out;
}

inline double residual_tolerance(cplx x) { return 1e-12 * std::max(1.0, std::pow(std::abs(x), 4)); }

inline bool root_is_acceptable(const QuarticCoeffs& q, cplx x) {
    const double res = std::abs(q(x));
    // Residuals below the rounding floor of the evaluation cannot be improved.
    return res < residual_tolerance(x) || res <= 8.0 * std::numeric_limits<double>::epsilon() * q.magnitude(x);
}

inline cplx newton_polish(const QuarticCoeffs& q, cplx x, int min_steps, int max_steps) {
    double res = std::abs(q(x));
    for (int it = 0; it < max_steps; ++it) {
        if (it >= min_steps && root_is_acceptable(q, x)) break;
        const cplx dq = q.derivative(x);
        if (dq == cplx(0.0)) break;
        const cplx nx = x - q(x) / dq;
        const double nres = std::abs(q(nx));
        // At the rounding floor a step no longer lowers the residual.
        if (!(nres <= res)) break;
        x = nx;
        res = nres;
    }
    return x;
}

// Real coefficients: make the root multiset closed under conjugation.
// A root of a near-double real pair may already sit on the axis while its twin
// does not, so real-looking roots stay candidates and only close partners count.
inline void enforce_conjugate_symmetry(QuarticRoots& roots) {
    std::array<bool, 4> done{};
    std::array<int, 4> order{0, 1, 2, 3};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return roots[a].imag() > roots[b].imag(); });
    for (int i : order) {
        if (done[i] || !(roots[i].imag() > 0.0)) continue;
        int best = -1;
        double best_dist = std::numeric_limits<double>::infinity();
        for (int j = 0; j < 4; ++j) {
            if (j == i || done[j] || roots[j].imag() > 0.0) continue;
            const double dist = std::abs(roots[j] - std::conj(roots[i]));
            if (dist < best_dist) {
                best_dist = dist;
                best = j;
            }
        }
        if (best < 0 || best_dist > 1e-6 * std::max(1.0, std::abs(roots[i]))) continue;
        const double re = 0.5 * (roots[i].real() + roots[best].real());
        const double im = 0.5 * (roots[i].imag() - roots[best].imag());
        roots[i] = {re, im};
        roots[best] = {re, -im};
        done[i] = done[best] = true;
    }
    // Unpaired leftovers can only be real roots carrying rounding noise.
    for (int i = 0; i < 4; ++i)
        if (!done[i]) roots[i].imag(0.0);
}

}  // namespace detail

/// Four roots with multiplicity, sorted by real part then imaginary part.
inline QuarticRoots solve_quartic(const QuarticCoeffs& q) {
    if (q.e4 != 1.0) throw Error(ErrorCode::InvalidArgument, "solve_quartic expects a monic quartic");
    QuarticRoots roots = detail::ferrari(q);
    for (auto& r : roots) {
        if (!std::isfinite(r.real()) || !std::isfinite(r.imag()))
            throw Error(ErrorCode::NonFinite, "closed-form quartic produced a non-finite root");
        r = detail::newton_polish(q, r, 2, 60);
    }
    detail::enforce_conjugate_symmetry(roots);
    for (auto& r : roots) {
        if (!detail::root_is_acceptable(q, r)) {
            r = detail::newton_polish(q, r, 0, 60);
            if (!detail::root_is_acceptable(q, r))
                throw Error(ErrorCode::NoConvergence, "quartic root polishing did not reach the residual bound");
        }
    }
    std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return roots;
}

enum class RootStructure { AllReal, TwoRealOneConjPair, TwoConjPairs, Degenerate };

inline const char* to_string(RootStructure s) noexcept {
    switch (s) {
        case RootStructure::AllReal: return "ALL_REAL";
        case RootStructure::TwoRealOneConjPair: return "TWO_REAL_ONE_CONJ_PAIR";
        case RootStructure::TwoConjPairs: return "TWO_CONJ_PAIRS";
        case RootStructure::Degenerate: return "DEGENERATE";
    }
    return "?";
}

inline constexpr double kRealRootTolerance = 1e-9;
inline constexpr double kMultiplicityRadius = 1e-8;

struct SpectrumPoint {
    QuarticRoots roots{};
    RootStructure classification = RootStructure::Degenerate;
    double delta_disc = 0.0;  ///< -c^2 gamma^2 D12 xi
    double xi = 0.0;          ///< (c^2 - gamma^2 - D12)^3 - 27 c^2 gamma^2 D12
    double gamma = 0.0;
    double t = 0.0;
    std::array<int, 4> branch_ids{0, 1, 2, 3};
    std::array<bool, 4> spurious{};       ///< c = 0 artifact roots at E = 0
    std::array<int, 4> multiplicity{1, 1, 1, 1};
    int real_root_count = 0;
    bool ambiguous = false;  ///< branch pairing was not unique at this point

    /// Root carried by branch b.
    cplx branch(int b) const {
        for (int i = 0; i < 4; ++i)
            if (branch_ids[i] == b) return roots[i];
        return cplx(std::numeric_limits<double>::quiet_NaN());
    }
};

struct DiscriminantInfo {
    double delta;
    double xi;
    bool degenerate;
};

inline DiscriminantInfo discriminant(double c, double gamma, double d) noexcept {
    const double a = c * c - gamma * gamma - d;
    const double b = 27.0 * c * c * gamma * gamma * d;
    const double xi = a * a * a - b;
    const double delta = -c * c * gamma * gamma * d * xi;
    const bool zero_xi = std::abs(xi) <= 1e-12 * (std::abs(a * a * a) + std::abs(b));
    return {delta, xi, c == 0.0 || gamma == 0.0 || d == 0.0 || zero_xi};
}

/// Root structure from the sign analysis of delta alone.
inline RootStructure classify_by_discriminant(double c, double gamma, double d) noexcept {
    const auto info = discriminant(c, gamma, d);
    if (info.degenerate) return RootStructure::Degenerate;
    if (info.delta > 0.0) return RootStructure::TwoRealOneConjPair;
    const double s = d + gamma * gamma;
    if (c * c + 2.0 * s > 0.0 && s * (2.0 * c * c + s) > 0.0) return RootStructure::AllReal;
    return RootStructure::TwoConjPairs;
}

inline int count_real_roots(const QuarticRoots& roots) noexcept {
    int n = 0;
    for (const auto& r : roots)
        if (std::abs(r.imag()) <= kRealRootTolerance * std::max(1.0, std::abs(r))) ++n;
    return n;
}

inline SpectrumPoint classify_point(double c, double gamma, double tunneling_product) {
    SpectrumPoint sp;
    sp.gamma = gamma;
    const auto info = discriminant(c, gamma, tunneling_product);
    sp.delta_disc = info.delta;
    sp.xi = info.xi;
    sp.classification = classify_by_discriminant(c, gamma, tunneling_product);
    sp.roots = solve_quartic(quartic_coeffs(c, gamma, tunneling_product));
    sp.real_root_count = count_real_roots(sp.roots);
    for (int i = 0; i < 4; ++i) {
        int m = 0;
        for (int j = 0; j < 4; ++j)
            if (std::abs(sp.roots[i] - sp.roots[j]) <= kMultiplicityRadius) ++m;
        sp.multiplicity[i] = m;
    }
    if (c == 0.0) {
        // The quartic carries E^2 as a factor when c = 0; the two roots nearest
        // zero are artifacts of eliminating the self-consistent shift.
        std::array<int, 4> idx{0, 1, 2, 3};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return std::abs(sp.roots[a]) < std::abs(sp.roots[b]); });
        sp.spurious[idx[0]] = sp.spurious[idx[1]] = true;
    }
    return sp;
}

inline SpectrumPoint classify_point(const ModelParams& p, double gamma) {
    return classify_point(p.c, gamma, p.tunneling_product());
}

/// Diabatic (zero tunneling) levels (-c -+ gamma)/2.
inline std::array<double, 2> diabatic_levels(double c, double gamma) noexcept {
    return {(-c - gamma) / 2.0, (-c + gamma) / 2.0};
}

enum class RegionLabel { RegionI, RegionII, RegionIII };

inline const char* to_string(RegionLabel r) noexcept {
    switch (r) {
        case RegionLabel::RegionI: return "REGION_I";
        case RegionLabel::RegionII: return "REGION_II";
        case RegionLabel::RegionIII: return "REGION_III";
    }
    return "?";
}

inline double region_function(double x, double y) noexcept {
    const double a = x * x - y * y + 1.0;
    return a * a * a + 27.0 * x * x * y * y;
}

/// Anti-phase reality regions over (c/Delta, gamma/Delta). Ties on f = 0
/// resolve to REGION_I, ties on y^2 = 1 to REGION_II.
inline RegionLabel region_classify(double x, double y) noexcept {
    const double f = region_function(x, y);
    if (f < 0.0 || std::abs(f) < 1e-12) return RegionLabel::RegionI;
    const double y2 = y * y;
    if (y2 > 1.0 || std::abs(y2 - 1.0) < 1e-12) return RegionLabel::RegionII;
    return RegionLabel::RegionIII;
}

namespace detail {

inline std::array<std::array<int, 4>, 24> all_permutations() {
    std::array<std::array<int, 4>, 24> out{};
    std::array<int, 4> p{0, 1, 2, 3};
    int n = 0;
    do {
        out[n++] = p;
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
}

}  // namespace detail

struct BranchTrackingOptions {
    bool strict = true;  ///< throw BRANCH_AMBIGUITY instead of flagging it
    double tie_tolerance = 1e-12;
};

/// Spectrum along a time grid with branch labels carried by nearest-neighbour
/// matching (exhaustive over the 24 pairings).
inline std::vector<SpectrumPoint> spectrum_vs_time(const ModelParams& p, std::span<const double> tgrid,
                                                   BranchTrackingOptions opts = {}) {
    for (std::size_t i = 1; i < tgrid.size(); ++i)
        if (!(tgrid[i] > tgrid[i - 1]))
            throw Error(ErrorCode::InvalidArgument, "spectrum_vs_time: time grid must be strictly increasing");
    static const auto perms = detail::all_permutations();
    std::vector<SpectrumPoint> out;
    out.reserve(tgrid.size());
    std::array<cplx, 4> prev_branch{};
    for (std::size_t n = 0; n < tgrid.size(); ++n) {
        const double t = tgrid[n];
        SpectrumPoint sp = classify_point(p, drive_gamma(t, p));
        sp.t = t;
        if (n == 0) {
            sp.branch_ids = {0, 1, 2, 3};
        } else {
            // perm[b] = index of the new root assigned to branch b
            std::array<double, 24> cost{};
            int best = 0;
            for (int k = 0; k < 24; ++k) {
                double s = 0.0;
                for (int b = 0; b < 4; ++b) s += std::abs(sp.roots[perms[k][b]] - prev_branch[b]);
                cost[k] = s;
                if (s < cost[best]) best = k;
            }
            for (int k = 0; k < 24 && !sp.ambiguous; ++k) {
                if (k == best || cost[k] - cost[best] > opts.tie_tolerance) continue;
                for (int b = 0; b < 4; ++b) {
                    if (std::abs(sp.roots[perms[k][b]] - sp.roots[perms[best][b]]) > opts.tie_tolerance) {
                        sp.ambiguous = true;
                        break;
                    }
                }
            }
            if (sp.ambiguous && opts.strict)
                throw Error(ErrorCode::BranchAmbiguity,
                            "two branch pairings have equal cost at t = " + std::to_string(t));
            for (int b = 0; b < 4; ++b) sp.branch_ids[perms[best][b]] = b;
        }
        for (int i = 0; i < 4; ++i) prev_branch[sp.branch_ids[i]] = sp.roots[i];
        out.push_back(sp);
    }
    return out;
}

/// Right/left eigenvectors of the self-consistent Hamiltonian for one root,
/// normalised so that <left|right> = 1.
struct Eigenpair {
    std::array<cplx, 2> right{};
    std::array<cplx, 2> left{};
    cplx energy{};
    cplx shift{};     ///< F = gamma E / (2E + c)
    cplx feedback{};  ///< w evaluated on the returned pair
};

inline Eigenpair eigenstate_for_root(cplx E, const ModelParams& p, double gamma) {
    const cplx denom = 2.0 * E + p.c;
    if (std::abs(denom) < 1e-12)
        throw Error(ErrorCode::SelfConsistencySingular, "2E + c vanishes; diagonal shift undefined");
    const cplx F = gamma * E / denom;
    const double h12 = 0.5 * p.delta1, h21 = 0.5 * p.delta2;
    // (H - E) r = 0 with H = [[F, h12], [h21, -F]]: two equivalent forms.
    std::array<cplx, 2> r_a{h12, E - F}, r_b{E + F, h21};
    auto n2 = [](const std::array<cplx, 2>& v) { return std::norm(v[0]) + std::norm(v[1]); };
    std::array<cplx, 2> r = n2(r_a) >= n2(r_b) ? r_a : r_b;
    // (H^dagger - E*) l = 0 with H^dagger = [[F*, h21], [h12, -F*]].
    const cplx Fc = std::conj(F), Ec = std::conj(E);
    std::array<cplx, 2> l_a{h21, Ec - Fc}, l_b{Ec + Fc, h12};
    std::array<cplx, 2> l = n2(l_a) >= n2(l_b) ? l_a : l_b;
    if (n2(r) == 0.0 || n2(l) == 0.0)
        throw Error(ErrorCode::SelfOrthogonal, "eigenvector vanished for this root");
    const double rn = std::sqrt(n2(r));
    r[0] /= rn;
    r[1] /= rn;
    const double ln = std::sqrt(n2(l));
    l[0] /= ln;
    l[1] /= ln;
    const cplx overlap = std::conj(l[0]) * r[0] + std::conj(l[1]) * r[1];
    if (std::abs(overlap) < 1e-12)
        throw Error(ErrorCode::SelfOrthogonal, "left and right eigenvectors are orthogonal (exceptional point)");
    const cplx scale = std::conj(overlap);
    l[0] /= scale;
    l[1] /= scale;
    Eigenpair out;
    out.right = r;
    out.left = l;
    out.energy = E;
    out.shift = F;
    out.feedback = r[1] * std::conj(l[1]) - r[0] * std::conj(l[0]);
    return out;
}

}  // namespace lzsm
