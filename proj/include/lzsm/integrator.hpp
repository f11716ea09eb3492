#pragma once

// Adaptive Dormand-Prince 5(4) stepper over fixed-size real state vectors.
// The driver owns the loop so callers can rescale, re-chart or stop between
// accepted steps.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

#include "lzsm/error.hpp"

namespace lzsm {

struct IntegratorOptions {
    double rtol = 1e-10;
    double atol = 1e-13;
    double h_max = std::numeric_limits<double>::infinity();
    double h_init = 0.0;  ///< 0 selects the starting step automatically
    std::size_t max_steps = 50'000'000;
    double rescale_threshold = 1e6;
    double singular_cap = 1e12;

    bool operator==(const IntegratorOptions&) const = default;
};

struct IntegratorStats {
    std::size_t steps = 0;
    std::size_t rejected = 0;
    std::size_t rescales = 0;
    std::size_t rhs_evals = 0;
};

namespace dp5 {
// Butcher tableau.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                        a76 = 11.0 / 84;
// b - b* for the embedded error estimate.
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                        e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous extension (Hairer & Wanner, dopri5 contd5).
inline constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                        d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                        d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
}  // namespace dp5

/// Rhs is any callable `void(double t, const State& y, State& dydt)`.
template <std::size_t N, class Rhs>
class DormandPrince {
public:
    using State = std::array<double, N>;

    DormandPrince(Rhs rhs, IntegratorOptions opts) : rhs_(std::move(rhs)), opts_(opts) {}

    void reset(double t, const State& y, double t_end) {
        t_ = t;
        y_ = y;
        eval(t_, y_, f_);
        t_prev_ = t_;
        y_prev_ = y_;
        span_ref_ = std::abs(t_end - t);
        h_ = opts_.h_init > 0.0 ? opts_.h_init : initial_step(t_end);
        has_dense_ = false;
    }

    /// Replace the current state (e.g. after a rescale). Dense output of the
    /// last step is invalidated.
    void replace_state(const State& y) {
        y_ = y;
        eval(t_, y_, f_);
        has_dense_ = false;
    }

    /// One accepted step that does not pass t_limit. Returns the step size used.
    double advance(double t_limit) {
        const double span = t_limit - t_;
        if (span <= 0.0) return 0.0;
        const double h_floor = 1e-14 * std::max(std::abs(span_ref_), std::abs(span));
        State k2, k3, k4, k5, k6, k7, ytmp, ynew, err;
        for (;;) {
            if (stats_.steps + stats_.rejected > opts_.max_steps)
                throw Error(ErrorCode::StepUnderflow, "maximum number of integrator steps exceeded");
            double h = std::min({h_, opts_.h_max, span});
            bool last = false;
            if (h >= span * (1.0 - 1e-12)) {
                h = span;
                last = true;
            }
            if (h < h_floor) throw Error(ErrorCode::StepUnderflow, "adaptive step fell below 1e-14 of the interval");

            using namespace dp5;
            for (std::size_t i = 0; i < N; ++i) ytmp[i] = y_[i] + h * a21 * f_[i];
            eval(t_ + c2 * h, ytmp, k2);
            for (std::size_t i = 0; i < N; ++i) ytmp[i] = y_[i] + h * (a31 * f_[i] + a32 * k2[i]);
            eval(t_ + c3 * h, ytmp, k3);
            for (std::size_t i = 0; i < N; ++i) ytmp[i] = y_[i] + h * (a41 * f_[i] + a42 * k2[i] + a43 * k3[i]);
            eval(t_ + c4 * h, ytmp, k4);
            for (std::size_t i = 0; i < N; ++i)
                ytmp[i] = y_[i] + h * (a51 * f_[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
            eval(t_ + c5 * h, ytmp, k5);
            for (std::size_t i = 0; i < N; ++i)
                ytmp[i] = y_[i] + h * (a61 * f_[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
            const double t_new = last ? t_limit : t_ + h;
            eval(t_new, ytmp, k6);
            for (std::size_t i = 0; i < N; ++i)
                ynew[i] = y_[i] + h * (a71 * f_[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
            eval(t_new, ynew, k7);

            double sum = 0.0;
            bool finite = true;
            for (std::size_t i = 0; i < N; ++i) {
                err[i] = h * (e1 * f_[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
                const double sc = opts_.atol + opts_.rtol * std::max(std::abs(y_[i]), std::abs(ynew[i]));
                const double r = err[i] / sc;
                sum += r * r;
                finite = finite && std::isfinite(ynew[i]);
            }
            const double enorm = finite ? std::sqrt(sum / static_cast<double>(N)) : std::numeric_limits<double>::infinity();

            if (enorm <= 1.0) {
                // Dense output coefficients for the accepted step.
                for (std::size_t i = 0; i < N; ++i) {
                    const double ydiff = ynew[i] - y_[i];
                    const double bspl = h * f_[i] - ydiff;
                    r1_[i] = y_[i];
                    r2_[i] = ydiff;
                    r3_[i] = bspl;
                    r4_[i] = ydiff - h * k7[i] - bspl;
                    r5_[i] = h * (d1 * f_[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
                }
                has_dense_ = true;
                t_prev_ = t_;
                y_prev_ = y_;
                t_ = t_new;
                y_ = ynew;
                f_ = k7;
                h_step_ = h;
                ++stats_.steps;
                const double fac = enorm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(enorm, -0.2), 0.2, 5.0);
                if (!last || fac < 1.0) h_ = h * fac;
                return h;
            }
            ++stats_.rejected;
            const double fac = std::isfinite(enorm) ? std::clamp(0.9 * std::pow(enorm, -0.2), 0.1, 1.0) : 0.1;
            h_ = h * fac;
        }
    }

    /// Fourth-order continuous extension on [t_prev, t].
    State dense(double t) const {
        State out;
        if (!has_dense_ || h_step_ == 0.0) return y_;
        const double th = (t - t_prev_) / h_step_;
        const double th1 = 1.0 - th;
        for (std::size_t i = 0; i < N; ++i)
            out[i] = r1_[i] + th * (r2_[i] + th1 * (r3_[i] + th * (r4_[i] + th1 * r5_[i])));
        return out;
    }

    void set_reference_span(double span) { span_ref_ = span; }

    double t() const noexcept { return t_; }
    double t_prev() const noexcept { return t_prev_; }
    const State& y() const noexcept { return y_; }
    const State& dydt() const noexcept { return f_; }
    const IntegratorStats& stats() const noexcept { return stats_; }
    IntegratorStats& stats() noexcept { return stats_; }
    double suggested_step() const noexcept { return h_; }

private:
    void eval(double t, const State& y, State& out) {
        rhs_(t, y, out);
        ++stats_.rhs_evals;
    }

    // Hairer-Norsett-Wanner starting step heuristic.
    double initial_step(double t_end) {
        const double span = std::abs(t_end - t_);
        span_ref_ = span;
        if (span == 0.0) return 0.0;
        double d0 = 0, d1 = 0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = opts_.atol + opts_.rtol * std::abs(y_[i]);
            d0 += (y_[i] / sc) * (y_[i] / sc);
            d1 += (f_[i] / sc) * (f_[i] / sc);
        }
        d0 = std::sqrt(d0 / N);
        d1 = std::sqrt(d1 / N);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, span);
        State y1, f1;
        for (std::size_t i = 0; i < N; ++i) y1[i] = y_[i] + h0 * f_[i];
        eval(t_ + h0, y1, f1);
        double d2 = 0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = opts_.atol + opts_.rtol * std::abs(y_[i]);
            const double v = (f1[i] - f_[i]) / sc;
            d2 += v * v;
        }
        d2 = std::sqrt(d2 / N) / h0;
        const double m = std::max(d1, d2);
        const double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
        return std::min({100.0 * h0, h1, span, opts_.h_max});
    }

    Rhs rhs_;
    IntegratorOptions opts_;
    IntegratorStats stats_;
    double t_ = 0.0, t_prev_ = 0.0, h_ = 0.0, h_step_ = 0.0, span_ref_ = 0.0;
    State y_{}, y_prev_{}, f_{};
    State r1_{}, r2_{}, r3_{}, r4_{}, r5_{};
    bool has_dense_ = false;
};

template <std::size_t N, class Rhs>
DormandPrince<N, Rhs> make_stepper(Rhs rhs, IntegratorOptions opts) {
    return DormandPrince<N, Rhs>(std::move(rhs), opts);
}

}  // namespace lzsm
