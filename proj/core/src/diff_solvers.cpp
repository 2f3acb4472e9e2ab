#include <cmath>

#include <fmt/format.h>

#include "vofde/errors.hpp"
#include "vofde/solvers.hpp"

namespace vofde::solve {

namespace {

using ad::Var;

std::size_t history_start(std::size_t n, const SolverConfig& cfg) {
    if (!cfg.memory_window.has_value() || n + 1 <= *cfg.memory_window) {
        return 0;
    }
    return n + 1 - *cfg.memory_window;
}

void check_finite(Var x, std::size_t step) {
    if (!x.value().all_finite()) {
        throw DivergenceError(fmt::format("solver diverged: non-finite state at step {}", step),
                              step);
    }
}

// descending integer bases hi, hi-1, ..., lo
ad::Tensor descending(std::size_t hi, std::size_t lo) {
    std::vector<double> v;
    v.reserve(hi - lo + 1);
    for (std::size_t k = hi + 1; k-- > lo;) {
        v.push_back(static_cast<double>(k));
    }
    return ad::Tensor::vector(std::move(v));
}

std::span<const Var> window(const std::vector<Var>& v, std::size_t first, std::size_t last) {
    return std::span<const Var>(v).subspan(first, last - first + 1);
}

Var l1_step(ad::Tape&, const std::vector<Var>& states, Var fn, Var alpha, double h,
            std::size_t n, std::size_t first) {
    Var beta = 1.0 - alpha;
    Var q = ad::pow_const_base(descending(n + 1, 0), beta);
    Var a = ad::slice(q, 0, 1) - ad::slice(q, 1, 1);
    if (n >= 1) {
        Var mid = ad::scalar_mul(ad::slice(q, 1, n), 2.0) - ad::slice(q, 2, n) - ad::slice(q, 0, n);
        const Var parts[] = {a, mid};
        a = ad::concat(parts);
    }
    if (first > 0) {
        Var dropped = ad::sum(ad::slice(a, 0, first));
        Var head = ad::slice(a, first, 1) + dropped;
        if (n > first) {
            const Var parts[] = {head, ad::slice(a, first + 1, n - first)};
            a = ad::concat(parts);
        } else {
            a = head;
        }
    }
    Var c = ad::gamma_of(2.0 - alpha) * ad::pow_const_base(h, alpha);
    // x_n + sum_{j<n} a_j (x_j - x_n): constants stay exact
    Var next = states[n];
    if (n > first) {
        std::vector<Var> diffs;
        diffs.reserve(n - first);
        for (std::size_t j = first; j < n; ++j) {
            diffs.push_back(states[j] - states[n]);
        }
        next = next + ad::lincomb(ad::slice(a, 0, n - first), diffs);
    }
    return next + c * fn;
}

Var abm_step(const std::vector<Var>& states, const std::vector<Var>& rhs, Var alpha, double h,
             std::size_t n, std::size_t first) {
    Var q = ad::pow_const_base(descending(n + 1, 0), alpha);
    Var b = ad::slice(q, 0, n + 1) - ad::slice(q, 1, n + 1);
    if (first > 0) {
        b = ad::slice(b, first, n + 1 - first);
    }
    Var scale = ad::pow_const_base(h, alpha) * ad::reciprocal(ad::gamma_of(alpha + 1.0));
    return states.front() + scale * ad::lincomb(b, window(rhs, first, n));
}

}  // namespace

TapeTrajectory solve_on_tape(ad::Tape& tape, const TapeRhs& f, const order::OrderModel& order,
                             Var x0, const SolverConfig& cfg) {
    cfg.validate();
    if (x0.value().rank() != 1) {
        throw ShapeError("solve_on_tape: initial state must be rank 1");
    }
    const double h = cfg.step();
    TapeTrajectory traj;
    for (std::size_t n = 0; n <= cfg.steps; ++n) {
        traj.times.push_back(cfg.time(n));
    }
    traj.states.push_back(x0);

    auto eval_f = [&](double t, Var x, std::size_t step) {
        Var out = f(t, x);
        if (out.shape() != x.shape()) {
            throw ShapeError(fmt::format("rhs returned width {} for a state of width {}",
                                         out.size(), x.size()));
        }
        check_finite(out, step);
        return out;
    };

    std::vector<Var> rhs;
    std::vector<Var> predicted_rhs;  // index k holds f(t_k, x_k^P), k >= 1
    rhs.push_back(eval_f(traj.times[0], x0, 0));
    predicted_rhs.push_back(Var());

    for (std::size_t n = 0; n < cfg.steps; ++n) {
        const Var xn = traj.states[n];
        const Var alpha = order.eval(tape, traj.times[n], xn);
        traj.orders.push_back(alpha);
        if (rhs.size() <= n) {
            rhs.push_back(eval_f(traj.times[n], xn, n));
        }
        const std::size_t first = history_start(n, cfg);

        Var next;
        switch (cfg.scheme) {
            case Scheme::L1:
                next = l1_step(tape, traj.states, rhs[n], alpha, h, n, first);
                break;
            case Scheme::AbmPredictor:
                next = abm_step(traj.states, rhs, alpha, h, n, first);
                break;
            case Scheme::AbmPredictorCorrector: {
                const Var alpha_p1 = alpha + 1.0;
                Var left_hist;
                Var right_hist;
                if (n > 0) {
                    Var mp1 = tape.constant(descending(n + 1, 2));
                    const ad::Tensor m_values = descending(n, 1);
                    Var m = tape.constant(m_values);
                    Var dp = ad::pow_const_base(mp1.value(), alpha_p1) -
                             ad::pow_const_base(m_values, alpha_p1);
                    Var dq = ad::pow_const_base(mp1.value(), alpha) -
                             ad::pow_const_base(m_values, alpha);
                    left_hist = alpha * dp - (alpha_p1 * m) * dq;
                    right_hist = (alpha_p1 * mp1) * dq - alpha * dp;
                }
                Var scale =
                    ad::pow_const_base(h, alpha) * ad::reciprocal(ad::gamma_of(alpha_p1 + 1.0));

                Var acc = alpha_p1 * rhs[n];
                if (n > first) {
                    const std::size_t len = n - first;
                    Var left = ad::lincomb(ad::slice(left_hist, first, len), window(rhs, first, n - 1));
                    Var right = ad::lincomb(ad::slice(right_hist, first, len),
                                            window(predicted_rhs, first + 1, n));
                    acc = (left + right) + acc;
                }
                Var predicted = x0 + scale * acc;
                check_finite(predicted, n + 1);
                predicted_rhs.push_back(eval_f(traj.times[n + 1], predicted, n + 1));

                Var left_full = alpha;
                Var right_full = tape.constant(1.0);
                if (n > 0) {
                    const Var lp[] = {left_hist, alpha};
                    const Var rp[] = {right_hist, right_full};
                    left_full = ad::concat(lp);
                    right_full = ad::concat(rp);
                }
                const std::size_t len = n + 1 - first;
                Var left = ad::lincomb(ad::slice(left_full, first, len), window(rhs, first, n));
                Var right = ad::lincomb(ad::slice(right_full, first, len),
                                        window(predicted_rhs, first + 1, n + 1));
                next = x0 + scale * (left + right);
                break;
            }
        }
        check_finite(next, n + 1);
        traj.states.push_back(next);
        if (cfg.scheme == Scheme::AbmPredictorCorrector) {
            rhs.push_back(eval_f(traj.times[n + 1], next, n + 1));
        }
    }
    traj.orders.push_back(order.eval(tape, traj.times.back(), traj.states.back()));
    return traj;
}

}  // namespace vofde::solve
