#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lzsm/spectrum.hpp"
#include "oracles.hpp"

using namespace lzsm;

namespace {

void expect_coeffs(const QuarticCoeffs& q, double e3, double e2, double e1, double e0) {
    EXPECT_DOUBLE_EQ(q.e4, 1.0);
    EXPECT_NEAR(q.e3, e3, 1e-15);
    EXPECT_NEAR(q.e2, e2, 1e-15);
    EXPECT_NEAR(q.e1, e1, 1e-15);
    EXPECT_NEAR(q.e0, e0, 1e-15);
}

double residual_bound(cplx x) { return 1e-12 * std::max(1.0, std::pow(std::abs(x), 4)); }

}  // namespace

TEST(QuarticCoeffs, Examples) {
    expect_coeffs(quartic_coeffs(0, 0, 1), 0, -0.25, 0, 0);
    expect_coeffs(quartic_coeffs(3, 0, 1), 3, 2, -0.75, -0.5625);
    expect_coeffs(quartic_coeffs(3, 5, -1), 3, (9.0 - 25.0 + 1.0) / 4.0, 0.75, 0.5625);
    const ModelParams p{2, 0.5, 3, 0, 1, 0};
    expect_coeffs(quartic_coeffs(p, 0.0), 3, 2, -0.75, -0.5625);
}

TEST(SolveQuartic, Factorable) {
    const auto r = solve_quartic(quartic_coeffs(0, 0, 1));
    EXPECT_LT(oracle::pairing_distance(r, std::array<cplx, 4>{0.5, -0.5, 0.0, 0.0}), 1e-12);
}

TEST(SolveQuartic, FourfoldZeroAtExceptionalPoint) {
    const auto r = solve_quartic(quartic_coeffs(0, 1, -1));
    for (const auto& x : r) EXPECT_LT(std::abs(x), 1e-12);
}

TEST(SolveQuartic, CompanionOracleExample) {
    const auto r = solve_quartic(quartic_coeffs(3, 2, 1));
    const auto q = oracle::quartic_from_params(3, 2, 1);
    EXPECT_LT(oracle::pairing_distance(r, oracle::companion_roots(q[0], q[1], q[2], q[3])), 1e-9);
}

TEST(SolveQuartic, RejectsNonMonic) {
    QuarticCoeffs q = quartic_coeffs(1, 1, 1);
    q.e4 = 2.0;
    EXPECT_THROW(solve_quartic(q), Error);
}

TEST(SolveQuartic, RandomOracleEquivalenceAndResiduals) {
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> u(-10, 10), dd(-4, 4);
    for (int i = 0; i < 10000; ++i) {
        const double c = u(rng), g = u(rng);
        double d = dd(rng);
        if (d == 0.0) d = 1.0;
        const auto q = quartic_coeffs(c, g, d);
        const auto r = solve_quartic(q);
        const auto o = oracle::quartic_from_params(c, g, d);
        ASSERT_LT(oracle::pairing_distance(r, oracle::companion_roots(o[0], o[1], o[2], o[3])), 1e-9)
            << "c=" << c << " gamma=" << g << " d=" << d;
        for (const auto& x : r) ASSERT_LT(std::abs(q(x)), residual_bound(x));
        // Conjugate closure.
        for (const auto& x : r) {
            double best = 1e300;
            for (const auto& y : r) best = std::min(best, std::abs(std::conj(x) - y));
            ASSERT_LT(best, 1e-9);
        }
    }
}

TEST(SolveQuartic, NearDoubleRealRootKeepsConjugatePairing) {
    // gamma = 0 gives a double root at -c/2; rounding once paired its twin with a distant root.
    const double c = -5.0 + 0.1 * 11, d = -4.0 + 0.1 * 27;
    const auto q = quartic_coeffs(c, 0.0, d);
    const auto r = solve_quartic(q);
    const auto o = oracle::quartic_from_params(c, 0.0, d);
    EXPECT_LT(oracle::pairing_distance(r, oracle::companion_roots(o[0], o[1], o[2], o[3])), 1e-7);
    for (const auto& x : r) EXPECT_LT(std::abs(q(x)), residual_bound(x));
}

TEST(Discriminant, DeltaRelation) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int i = 0; i < 1000; ++i) {
        const double c = u(rng), g = u(rng), d = u(rng);
        const auto info = discriminant(c, g, d);
        const double xi = std::pow(c * c - g * g - d, 3) - 27 * c * c * g * g * d;
        EXPECT_NEAR(info.xi, xi, 1e-9 * (1 + std::abs(xi)));
        EXPECT_NEAR(info.delta, -c * c * g * g * d * xi, 1e-9 * (1 + std::abs(c * c * g * g * d * xi)));
    }
}

TEST(ClassifyPoint, InPhaseAlwaysHasTwoRealRoots) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-10, 10), dd(0.01, 4);
    for (int i = 0; i < 5000; ++i) {
        const auto sp = classify_point(u(rng), u(rng), dd(rng));
        int real = 0;
        for (const auto& x : sp.roots) real += std::abs(x.imag()) < 1e-9;
        EXPECT_GE(real, 2);
    }
}

TEST(ClassifyPoint, ExceptionalPointIsDegenerate) {
    const auto sp = classify_point(0, 1, -1);
    EXPECT_EQ(sp.classification, RootStructure::Degenerate);
    for (const auto& x : sp.roots) EXPECT_LT(std::abs(x), 1e-12);
    EXPECT_EQ(sp.spurious[0] + sp.spurious[1] + sp.spurious[2] + sp.spurious[3], 2);
}

TEST(ClassifyPoint, MatchesExplicitRootsOnRandomDraws) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-10, 10), dd(-4, 4);
    for (int i = 0; i < 5000; ++i) {
        const double c = u(rng), g = u(rng), d = dd(rng);
        const auto sp = classify_point(c, g, d);
        const auto o = oracle::quartic_from_params(c, g, d);
        const auto roots = oracle::companion_roots(o[0], o[1], o[2], o[3]);
        int real = 0;
        for (const auto& x : roots) real += std::abs(x.imag()) < 1e-7;
        switch (sp.classification) {
            case RootStructure::AllReal: EXPECT_EQ(real, 4) << c << " " << g << " " << d; break;
            case RootStructure::TwoRealOneConjPair: EXPECT_EQ(real, 2) << c << " " << g << " " << d; break;
            case RootStructure::TwoConjPairs: EXPECT_EQ(real, 0) << c << " " << g << " " << d; break;
            case RootStructure::Degenerate: break;
        }
    }
    // The anti-phase example point.
    const auto sp = classify_point(3, 5, -1);
    const auto o = oracle::quartic_from_params(3, 5, -1);
    EXPECT_LT(oracle::pairing_distance(sp.roots, oracle::companion_roots(o[0], o[1], o[2], o[3])), 1e-9);
    EXPECT_EQ(sp.classification, classify_by_discriminant(3, 5, -1));
}

TEST(ClassifyPoint, LinearCaseMarksSpuriousZeros) {
    const auto sp = classify_point(0, 2, 1);
    int spurious = 0;
    for (int i = 0; i < 4; ++i) {
        if (sp.spurious[i]) {
            ++spurious;
            EXPECT_LT(std::abs(sp.roots[i]), 1e-12);
        } else {
            EXPECT_NEAR(std::abs(sp.roots[i].real()), 0.5 * std::sqrt(5.0), 1e-12);
        }
    }
    EXPECT_EQ(spurious, 2);
}

TEST(ZeroRootLaw, ZeroRootIffCDeltaProductVanishes) {
    for (int i = 0; i <= 40; ++i)
        for (int j = 0; j <= 40; ++j) {
            const double c = -5 + 0.25 * i, d = -4 + 0.2 * j;
            for (double g : {0.0, 0.7, 3.0}) {
                const auto r = solve_quartic(quartic_coeffs(c, g, d));
                bool zero = false;
                for (const auto& x : r) zero = zero || std::abs(x) < 1e-10;
                EXPECT_EQ(zero, std::abs(c * d) < 1e-10) << c << " " << d << " " << g;
            }
        }
}

TEST(SimilarityInvariance, InPhaseMatchesHermitian) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-5, 5), kk(0.2, 5);
    for (int i = 0; i < 500; ++i) {
        const double k = kk(rng), delta = std::abs(u(rng)) + 0.1;
        ModelParams p = ModelParams::from_mean(delta, k, TunnelingClass::InPhase, u(rng), 0, 1, 0);
        const cplx w(u(rng) / 5, 0.0);
        const double g = u(rng);
        Eigen::Matrix2cd nr = oracle::hamiltonian(p, g, w);
        Eigen::Matrix2cd h = nr;
        h(0, 1) = h(1, 0) = 0.5 * delta;
        Eigen::ComplexEigenSolver<Eigen::Matrix2cd> a(nr), b(h);
        std::array<cplx, 2> ea{a.eigenvalues()[0], a.eigenvalues()[1]}, eb{b.eigenvalues()[0], b.eigenvalues()[1]};
        std::sort(ea.begin(), ea.end(), [](cplx x, cplx y) { return x.real() < y.real(); });
        std::sort(eb.begin(), eb.end(), [](cplx x, cplx y) { return x.real() < y.real(); });
        EXPECT_LT(std::abs(ea[0] - eb[0]), 1e-12 * (1 + std::abs(eb[0])));
        EXPECT_LT(std::abs(ea[1] - eb[1]), 1e-12 * (1 + std::abs(eb[1])));
    }
}

TEST(Region, Examples) {
    EXPECT_EQ(region_classify(0, 2), RegionLabel::RegionI);
    EXPECT_EQ(region_classify(0, 0.5), RegionLabel::RegionIII);
    EXPECT_EQ(region_classify(2, 2), RegionLabel::RegionII);
    EXPECT_DOUBLE_EQ(region_function(0, 2), -27.0);
    EXPECT_DOUBLE_EQ(region_function(2, 2), 433.0);
}

TEST(Region, BoundaryTies) {
    // f = 0 at (0, 1) resolves to region I, y^2 = 1 with f > 0 to region II.
    EXPECT_EQ(region_classify(0, 1), RegionLabel::RegionI);
    EXPECT_EQ(region_classify(1, 1), RegionLabel::RegionII);
    EXPECT_EQ(region_classify(1, -1), RegionLabel::RegionII);
}

TEST(Region, TangentLines) {
    for (int i = -50; i <= 50; ++i) {
        const double x = 0.1 * i;
        EXPECT_NEAR(region_function(x, 1.0), std::pow(x, 6) + 27 * x * x, 1e-9 * (1 + std::pow(x, 6)));
        EXPECT_GE(region_function(x, 1.0), 0.0);
        if (i != 0) EXPECT_GT(region_function(x, -1.0), 0.0);
    }
}

TEST(Region, RegionIImpliesLargeGamma) {
    for (int i = -60; i <= 60; ++i)
        for (int j = -60; j <= 60; ++j) {
            const double x = 0.07 * i, y = 0.07 * j;
            if (region_function(x, y) < 0) EXPECT_GT(y * y, 1.0);
        }
}

TEST(SpectrumVsTime, InPhaseLinearBranches) {
    const auto p = ModelParams::from_mean(1, 1, TunnelingClass::InPhase, 0, 10, 1, 0);
    std::vector<double> tg;
    for (int i = 0; i <= 2000; ++i) tg.push_back(4 * M_PI * i / 2000);
    const auto pts = spectrum_vs_time(p, tg, {false, 1e-12});
    for (const auto& sp : pts) {
        const double e = 0.5 * std::sqrt(sp.gamma * sp.gamma + 1);
        std::vector<double> phys;
        for (int i = 0; i < 4; ++i)
            if (!sp.spurious[i]) phys.push_back(sp.roots[i].real());
        ASSERT_EQ(phys.size(), 2u);
        std::sort(phys.begin(), phys.end());
        EXPECT_NEAR(phys[0], -e, 1e-12);
        EXPECT_NEAR(phys[1], e, 1e-12);
    }
    // Branch continuity: each physical branch keeps its sign.
    for (int b = 0; b < 4; ++b) {
        const double s0 = pts.front().branch(b).real();
        if (std::abs(s0) < 1e-9) continue;
        for (const auto& sp : pts) EXPECT_GT(sp.branch(b).real() * s0, 0.0);
    }
}

TEST(SpectrumVsTime, AntiPhaseLinearTouchesZeroAtExceptionalPoints) {
    const auto p = ModelParams::from_mean(1, 1, TunnelingClass::AntiPhase, 0, 10, 1, 0);
    // gamma = 10 sin t = 1 at t = asin(0.1).
    const double tep = std::asin(0.1);
    std::vector<double> tg{tep - 0.01, tep, tep + 0.01};
    const auto pts = spectrum_vs_time(p, tg, {false, 1e-12});
    for (const auto& x : pts[1].roots) EXPECT_LT(std::abs(x.real()), 1e-6);
    // Away from the EP the physical pair is real on one side and imaginary on the other.
    int real_before = 0, real_after = 0;
    for (const auto& x : pts[0].roots) real_before += std::abs(x.real()) > 1e-6;
    for (const auto& x : pts[2].roots) real_after += std::abs(x.real()) > 1e-6;
    EXPECT_EQ(real_before, 0);
    EXPECT_EQ(real_after, 2);
}

TEST(SpectrumVsTime, NonlinearityRemovesZeroRoots) {
    const auto p = ModelParams::from_mean(1, 1, TunnelingClass::AntiPhase, 3, 10, 1, 0);
    std::vector<double> tg;
    for (int i = 0; i <= 4000; ++i) tg.push_back(4 * M_PI * i / 4000);
    const auto pts = spectrum_vs_time(p, tg, {false, 1e-12});
    for (const auto& sp : pts)
        for (const auto& x : sp.roots) EXPECT_GT(std::abs(x), 1e-10);
}

TEST(SpectrumVsTime, RejectsUnorderedGrid) {
    const ModelParams p{};
    std::vector<double> tg{0.0, 1.0, 1.0};
    EXPECT_THROW(spectrum_vs_time(p, tg), Error);
}

TEST(SpectrumVsTime, StrictModeReportsAmbiguity) {
    // The anti-phase linear spectrum passes through a fourfold zero where
    // pairings tie.
    const auto p = ModelParams::from_mean(1, 1, TunnelingClass::AntiPhase, 0, 10, 1, 0);
    const double tep = std::asin(0.1);
    std::vector<double> tg{tep - 0.01, tep, tep + 0.01};
    const auto pts = spectrum_vs_time(p, tg, {false, 1e-12});
    ASSERT_EQ(pts.size(), 3u);
    bool flagged = false;
    for (const auto& sp : pts) flagged = flagged || sp.ambiguous;
    EXPECT_TRUE(flagged);
    try {
        spectrum_vs_time(p, tg, {true, 1e-12});
        FAIL() << "strict tracking should refuse the tie";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BranchAmbiguity);
    }
}

TEST(Eigenstate, SymmetricLinearCase) {
    const ModelParams p{1, 1, 0, 0, 1, 0};
    const auto ep = eigenstate_for_root(0.5, p, 0.0);
    EXPECT_NEAR(std::abs(ep.right[0] / ep.right[1] - 1.0), 0, 1e-12);
    EXPECT_NEAR(std::abs(ep.left[0] / ep.left[1] - 1.0), 0, 1e-12);
    const cplx ov = std::conj(ep.left[0]) * ep.right[0] + std::conj(ep.left[1]) * ep.right[1];
    EXPECT_NEAR(std::abs(ov - 1.0), 0, 1e-12);
}

TEST(Eigenstate, NonreciprocalRatios) {
    const ModelParams p{2, 0.5, 0, 0, 1, 0};
    const auto ep = eigenstate_for_root(0.5, p, 0.0);
    EXPECT_NEAR(std::abs(ep.right[0] / ep.right[1]), 2.0, 1e-12);
    EXPECT_NEAR(std::abs(ep.left[0] / ep.left[1]), 0.5, 1e-12);
    // Direct 2x2 eigen-decomposition.
    Eigen::ComplexEigenSolver<Eigen::Matrix2cd> es(oracle::hamiltonian(p, 0.0, 0.0));
    for (int i = 0; i < 2; ++i)
        if (std::abs(es.eigenvalues()[i] - 0.5) < 1e-9)
            EXPECT_NEAR(std::abs(es.eigenvectors()(0, i) / es.eigenvectors()(1, i)), 2.0, 1e-12);
}

TEST(Eigenstate, NonlinearResidual) {
    for (double d1 : {1.0, 2.0, 0.5}) {
        const ModelParams p{d1, 1.0 / d1, 3, 0, 1, 0};
        const double g = 2.0;
        const auto sp = classify_point(p, g);
        for (const auto& E : sp.roots) {
            if (std::abs(E.imag()) > 1e-9) continue;
            const auto ep = eigenstate_for_root(E, p, g);
            // H(w) phi = E phi with w taken from the returned pair.
            const auto h = hamiltonian_for_feedback(ep.feedback, p, 0.0);
            const cplx f = 0.5 * (g + p.c * ep.feedback);
            const cplx r0 = f * ep.right[0] + h.h12 * ep.right[1] - E * ep.right[0];
            const cplx r1 = h.h21 * ep.right[0] - f * ep.right[1] - E * ep.right[1];
            EXPECT_LT(std::abs(r0), 1e-9);
            EXPECT_LT(std::abs(r1), 1e-9);
            EXPECT_NEAR(std::abs(ep.shift - g * E / (2.0 * E + p.c)), 0, 1e-12);
            const cplx ov = std::conj(ep.left[0]) * ep.right[0] + std::conj(ep.left[1]) * ep.right[1];
            EXPECT_NEAR(std::abs(ov - 1.0), 0, 1e-12);
        }
    }
}

TEST(Eigenstate, SingularSelfConsistency) {
    const ModelParams p{1, 1, 3, 0, 1, 0};
    try {
        eigenstate_for_root(-1.5, p, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SelfConsistencySingular);
    }
}
