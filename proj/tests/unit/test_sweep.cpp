#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "lzsm/sweep.hpp"
#include "oracles.hpp"

using namespace lzsm;

namespace {

SweepSpec white_region_spec() {
    SweepSpec s;
    s.fixed = ModelParams::from_mean(1.0, 2.0, TunnelingClass::AntiPhase, 0.0, 2.5, 1.0, 0.0);
    s.x = {"eps0/Delta", 0.0, 3.0, 4};
    s.y = {"omega/Delta", 0.5, 3.0, 6};
    s.observable = Observable::RawPopA1;
    s.horizon = 50.0;
    return s;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST(Axis, Values) {
    const Axis a{"c", -1.0, 1.0, 5};
    EXPECT_DOUBLE_EQ(a.value(0), -1.0);
    EXPECT_DOUBLE_EQ(a.value(2), 0.0);
    EXPECT_DOUBLE_EQ(a.value(4), 1.0);
}

TEST(Axis, ApplyResolvesNamesAndRatios) {
    const auto tmpl = ModelParams::from_mean(2.0, 2.0, TunnelingClass::AntiPhase, 1.0, 2.5, 4.0, 0.0);
    ModelParams p = tmpl;
    apply_axis(p, tmpl, "eps0/Delta", 3.0);
    EXPECT_DOUBLE_EQ(p.eps0, 6.0);
    apply_axis(p, tmpl, "omega/Delta", 0.5);
    EXPECT_DOUBLE_EQ(p.omega, 1.0);
    apply_axis(p, tmpl, "c/omega", 2.0);
    EXPECT_DOUBLE_EQ(p.c, 8.0);  // ratio taken against the template omega
    apply_axis(p, tmpl, "Delta/omega", 0.25);
    EXPECT_NEAR(p.mean_delta(), 1.0, 1e-15);
    EXPECT_NEAR(p.k(), 2.0, 1e-15);
    EXPECT_EQ(p.tunneling_class(), TunnelingClass::AntiPhase);
    apply_axis(p, tmpl, "k", 0.5);
    EXPECT_NEAR(p.k(), 0.5, 1e-15);
    EXPECT_NEAR(p.mean_delta(), 1.0, 1e-15);
    apply_axis(p, tmpl, "A", 7.0);
    EXPECT_DOUBLE_EQ(p.amp, 7.0);
    EXPECT_THROW(apply_axis(p, tmpl, "bogus", 1.0), Error);
    EXPECT_THROW(apply_axis(p, tmpl, "c/bogus", 1.0), Error);
    EXPECT_TRUE(is_valid_axis_name("gamma") == false);
    EXPECT_TRUE(is_valid_axis_name("eps0/omega"));
}

TEST(Observable, Names) {
    for (auto o : {Observable::RawPopA1, Observable::ProjPopA, Observable::TrappingClass, Observable::MinZ})
        EXPECT_EQ(observable_from_string(to_string(o)), o);
    EXPECT_THROW(observable_from_string("POP"), Error);
    EXPECT_EQ(trapping_code(TrappingClass::Josephson), 0.0);
    EXPECT_EQ(trapping_code(TrappingClass::Boundary), 0.5);
    EXPECT_EQ(trapping_code(TrappingClass::SelfTrapped), 1.0);
}

TEST(SweepSpec, Validation) {
    SweepSpec s = white_region_spec();
    EXPECT_NO_THROW(s.validate());
    auto bad = s;
    bad.x.count = 1;
    EXPECT_THROW(bad.validate(), Error);
    bad = s;
    bad.y.name = bad.x.name;
    EXPECT_THROW(bad.validate(), Error);
    bad = s;
    bad.x.name = "nonsense";
    EXPECT_THROW(bad.validate(), Error);
    bad = s;
    bad.horizon = 0;
    EXPECT_THROW(bad.validate(), Error);
    bad = s;
    bad.fixed.delta2 = 0;
    EXPECT_THROW(bad.validate(), Error);
    // A cell with omega = 0 is rejected before any integration starts.
    bad = s;
    bad.y = {"omega", 0.0, 1.0, 3};
    EXPECT_THROW(run_sweep(bad), Error);
}

TEST(Sweep, MatchesMatrixExponentialOnUndrivenGrid) {
    for (auto tc : {TunnelingClass::InPhase, TunnelingClass::AntiPhase}) {
        SweepSpec s;
        s.fixed = ModelParams::from_mean(1.0, 2.0, tc, 0.0, 0.0, 1.0, 0.0);
        s.x = {"eps0", -1.5, 1.5, 3};
        s.y = {"k", 0.5, 2.0, 3};
        s.horizon = 10.0;
        s.integrator.rtol = 1e-12;
        s.integrator.atol = 1e-14;
        const auto g = run_sweep(s);
        for (std::size_t iy = 0; iy < 3; ++iy)
            for (std::size_t ix = 0; ix < 3; ++ix) {
                const ModelParams p = s.cell_params(ix, iy);
                const oracle::Vec2 psi =
                    oracle::propagator(oracle::hamiltonian(p, p.eps0, 0.0), s.horizon) * oracle::Vec2(0.0, 1.0);
                const double expect = std::norm(psi(0));
                ASSERT_FALSE(g.masked(ix, iy));
                EXPECT_NEAR(g.at(ix, iy), expect, 1e-8 * std::max(1.0, expect)) << ix << "," << iy;
            }
    }
}

TEST(Sweep, DeterministicAcrossWorkerCounts) {
    SweepSpec s = white_region_spec();
    s.x.count = 7;
    s.y.count = 5;
    s.horizon = 20.0;
    const auto g1 = run_sweep(s, 1);
    for (unsigned w : {4u, 8u}) {
        const auto gw = run_sweep(s, w);
        EXPECT_EQ(gw.workers, w);
        ASSERT_EQ(gw.values.size(), g1.values.size());
        for (std::size_t i = 0; i < g1.values.size(); ++i) {
            EXPECT_TRUE(same_bits(g1.values[i], gw.values[i])) << i;
            EXPECT_EQ(g1.singular[i], gw.singular[i]);
            EXPECT_EQ(g1.error[i], gw.error[i]);
        }
    }
}

TEST(Sweep, MaskAgreesWithStandaloneRuns) {
    const SweepSpec s = white_region_spec();
    const auto g = run_sweep(s, 2);
    EXPECT_GT(g.singular_count(), 0u);
    EXPECT_LT(g.singular_count(), g.values.size());
    EXPECT_EQ(g.error_count(), 0u);
    for (std::size_t iy = 0; iy < g.ny(); ++iy)
        for (std::size_t ix = 0; ix < g.nx(); ++ix) {
            TrajectoryOptions o;
            o.stop_at_singular = true;
            const auto tr = integrate_biorthogonal(s.cell_params(ix, iy), BiorthState{}, 0.0, s.horizon, o);
            EXPECT_EQ(g.masked(ix, iy), tr.singular()) << "eps0=" << g.xs[ix] << " omega=" << g.ys[iy];
            if (!tr.singular()) EXPECT_EQ(g.at(ix, iy), tr.final_state.raw_population_a1());
        }
    // Known white cells.
    EXPECT_TRUE(g.masked(0, 3));   // omega = 2, eps0 = 0
    EXPECT_TRUE(g.masked(0, 5));   // omega = 3, eps0 = 0
    EXPECT_TRUE(g.masked(1, 1));   // omega = 1, eps0 = 1
    EXPECT_FALSE(g.masked(2, 0));  // omega = 0.5
}

TEST(Sweep, LinearDriveSymmetryUnderJointSignFlip) {
    // For c = 0, sigma_z K maps gamma to -gamma: P(A, eps0) = P(-A, -eps0).
    for (auto tc : {TunnelingClass::InPhase, TunnelingClass::AntiPhase}) {
        SweepSpec s;
        s.fixed = ModelParams::from_mean(1.0, 2.0, tc, 0.0, 1.0, 1.5, 0.0);
        s.x = {"eps0", -2.0, 2.0, 5};
        s.y = {"A", -2.0, 2.0, 5};
        s.horizon = 20.0;
        const auto g = run_sweep(s);
        for (std::size_t iy = 0; iy < 5; ++iy)
            for (std::size_t ix = 0; ix < 5; ++ix) {
                const double a = g.at(ix, iy), b = g.at(4 - ix, 4 - iy);
                EXPECT_EQ(g.masked(ix, iy), g.masked(4 - ix, 4 - iy));
                EXPECT_NEAR(a, b, 1e-6 * std::max(1.0, std::abs(a)));
            }
    }
}

TEST(Sweep, ProjectivePopulationStaysInUnitInterval) {
    SweepSpec s = white_region_spec();
    s.observable = Observable::ProjPopA;
    const auto g = run_sweep(s);
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        if (g.error[i] >= 0) continue;
        EXPECT_GE(g.values[i], 0.0);
        EXPECT_LE(g.values[i], 1.0);
    }
}

TEST(Sweep, IntegratorFailuresBecomeErrorCells) {
    SweepSpec s = white_region_spec();
    s.integrator.max_steps = 20;
    const auto g = run_sweep(s, 3);
    EXPECT_EQ(g.error_count(), g.values.size());
    for (auto e : g.error) EXPECT_EQ(e, static_cast<std::int16_t>(ErrorCode::StepUnderflow));
    for (std::size_t iy = 0; iy < g.ny(); ++iy)
        for (std::size_t ix = 0; ix < g.nx(); ++ix) EXPECT_TRUE(g.masked(ix, iy));
}

TEST(TrappingSweep, ClassifiesAcrossTheBoundary) {
    SweepSpec s;
    s.fixed = ModelParams::from_mean(0.2, 2.0, TunnelingClass::InPhase, 0.0, 0.05, 1.0, 0.0);
    s.x = {"Delta/omega", 0.2, 0.2, 2};
    s.y = {"c/omega", 0.38, 0.42, 2};
    s.observable = Observable::TrappingClass;
    s.horizon = 200.0;
    const auto g = run_trapping_sweep(s);
    EXPECT_EQ(g.at(0, 0), 0.0);  // c/Delta = 1.9
    EXPECT_EQ(g.at(0, 1), 1.0);  // c/Delta = 2.1
    s.observable = Observable::MinZ;
    const auto m = run_trapping_sweep(s);
    EXPECT_LT(m.at(0, 0), -0.9);
    EXPECT_GT(m.at(0, 1), -0.6);

    s.y.name = "omega";
    EXPECT_THROW(run_trapping_sweep(s), Error);
    s.y.name = "c/omega";
    s.observable = Observable::RawPopA1;
    EXPECT_THROW(run_trapping_sweep(s), Error);
}

TEST(TrappingSweep, DefaultHorizonIsOnePeriod) {
    SweepSpec s;
    s.fixed = ModelParams::from_mean(0.5, 2.0, TunnelingClass::AntiPhase, 0.0, 0.05, 1.0, 0.0);
    s.x = {"Delta/omega", 0.05, 2.0, 3};
    s.y = {"c/omega", 0.0, 4.0, 3};
    s.observable = Observable::MinZ;
    s.horizon = 0.0;
    const auto g = run_trapping_sweep(s);
    EXPECT_NEAR(g.spec.horizon, 2 * M_PI, 1e-12);
    for (std::size_t i = 0; i < g.values.size(); ++i)
        if (g.error[i] < 0) EXPECT_LE(g.values[i], 1.0 + 1e-12);
}
