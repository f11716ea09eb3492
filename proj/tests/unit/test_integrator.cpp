#include <gtest/gtest.h>

#include <cmath>

#include "lzsm/integrator.hpp"

using namespace lzsm;

namespace {

struct Oscillator {
    void operator()(double, const std::array<double, 2>& y, std::array<double, 2>& d) const {
        d[0] = y[1];
        d[1] = -y[0];
    }
};

template <class S>
void run_to(S& s, double t1) {
    while (s.t() < t1) s.advance(t1);
}

}  // namespace

TEST(DormandPrince, HarmonicOscillator) {
    auto s = make_stepper<2>(Oscillator{}, IntegratorOptions{});
    s.reset(0.0, {1.0, 0.0}, 20.0);
    run_to(s, 20.0);
    EXPECT_EQ(s.t(), 20.0);
    EXPECT_NEAR(s.y()[0], std::cos(20.0), 1e-8);
    EXPECT_NEAR(s.y()[1], -std::sin(20.0), 1e-8);
    EXPECT_GT(s.stats().steps, 10u);
}

TEST(DormandPrince, DenseOutputMatchesSolution) {
    auto s = make_stepper<2>(Oscillator{}, IntegratorOptions{});
    s.reset(0.0, {1.0, 0.0}, 10.0);
    double worst = 0.0;
    while (s.t() < 10.0) {
        s.advance(10.0);
        for (int k = 1; k < 10; ++k) {
            const double t = s.t_prev() + (s.t() - s.t_prev()) * k / 10.0;
            worst = std::max(worst, std::abs(s.dense(t)[0] - std::cos(t)));
        }
    }
    EXPECT_LT(worst, 1e-8);
}

TEST(DormandPrince, ExponentialGrowthRelativeAccuracy) {
    auto rhs = [](double, const std::array<double, 1>& y, std::array<double, 1>& d) { d[0] = y[0]; };
    auto s = make_stepper<1>(rhs, IntegratorOptions{});
    s.reset(0.0, {1.0}, 30.0);
    run_to(s, 30.0);
    EXPECT_NEAR(s.y()[0] / std::exp(30.0), 1.0, 1e-7);
}

TEST(DormandPrince, LandsOnIntermediateLimits) {
    auto s = make_stepper<2>(Oscillator{}, IntegratorOptions{});
    s.reset(0.0, {1.0, 0.0}, 5.0);
    for (double stop : {0.1, 0.7, 2.0, 5.0}) {
        run_to(s, stop);
        EXPECT_EQ(s.t(), stop);
    }
    EXPECT_NEAR(s.y()[0], std::cos(5.0), 1e-8);
}

TEST(DormandPrince, ReplaceStateContinues) {
    auto s = make_stepper<2>(Oscillator{}, IntegratorOptions{});
    s.reset(0.0, {1.0, 0.0}, 4.0);
    run_to(s, 2.0);
    auto y = s.y();
    y[0] *= 0.5;
    y[1] *= 0.5;
    s.replace_state(y);
    run_to(s, 4.0);
    EXPECT_NEAR(s.y()[0], 0.5 * std::cos(4.0), 1e-8);
}

TEST(DormandPrince, StepUnderflowOnBlowUp) {
    // y' = y^2 from y = 1 blows up at t = 1.
    auto rhs = [](double, const std::array<double, 1>& y, std::array<double, 1>& d) { d[0] = y[0] * y[0]; };
    auto s = make_stepper<1>(rhs, IntegratorOptions{});
    s.reset(0.0, {1.0}, 2.0);
    try {
        run_to(s, 2.0);
        FAIL() << "expected step underflow";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::StepUnderflow);
    }
}

TEST(DormandPrince, MaxStepsExceeded) {
    IntegratorOptions o;
    o.max_steps = 5;
    auto s = make_stepper<2>(Oscillator{}, o);
    s.reset(0.0, {1.0, 0.0}, 100.0);
    EXPECT_THROW(run_to(s, 100.0), Error);
}

TEST(DormandPrince, TighterToleranceIsMoreAccurate) {
    IntegratorOptions loose;
    loose.rtol = 1e-5;
    loose.atol = 1e-8;
    auto a = make_stepper<2>(Oscillator{}, loose);
    auto b = make_stepper<2>(Oscillator{}, IntegratorOptions{});
    a.reset(0.0, {1.0, 0.0}, 30.0);
    b.reset(0.0, {1.0, 0.0}, 30.0);
    run_to(a, 30.0);
    run_to(b, 30.0);
    EXPECT_LT(std::abs(b.y()[0] - std::cos(30.0)), std::abs(a.y()[0] - std::cos(30.0)));
    EXPECT_GT(b.stats().steps, a.stats().steps);
}
