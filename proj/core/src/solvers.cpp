#include "vofde/solvers.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "vofde/errors.hpp"
#include "vofde/kernels.hpp"

namespace vofde::solve {

std::string to_string(Scheme scheme) {
    switch (scheme) {
        case Scheme::L1:
            return "L1";
        case Scheme::AbmPredictor:
            return "ABM_P";
        case Scheme::AbmPredictorCorrector:
            return "ABM_PC";
    }
    return "unknown";
}

Scheme parse_scheme(const std::string& text) {
    if (text == "L1" || text == "l1") return Scheme::L1;
    if (text == "ABM_P" || text == "abm_p" || text == "abm") return Scheme::AbmPredictor;
    if (text == "ABM_PC" || text == "abm_pc") return Scheme::AbmPredictorCorrector;
    throw FormatError(fmt::format("unknown scheme '{}' (expected L1, ABM_P or ABM_PC)", text));
}

void SolverConfig::validate() const {
    if (!std::isfinite(t0) || !std::isfinite(t1) || !(t1 > t0)) {
        throw DomainError(fmt::format("solver: need t1 > t0, got [{}, {}]", t0, t1));
    }
    if (steps == 0) {
        throw DomainError("solver: steps must be positive");
    }
    if (memory_window.has_value() && (*memory_window == 0 || *memory_window > steps)) {
        throw DomainError(fmt::format("solver: memory window {} must be in [1, {}]",
                                      *memory_window, steps));
    }
}

namespace {

// first history index kept at step n
std::size_t history_start(std::size_t n, const SolverConfig& cfg) {
    if (!cfg.memory_window.has_value() || n + 1 <= *cfg.memory_window) {
        return 0;
    }
    return n + 1 - *cfg.memory_window;
}

void require_scheme(const SolverConfig& cfg, Scheme expected) {
    if (cfg.scheme != expected) {
        throw std::invalid_argument(fmt::format("solver for {} called with scheme {}",
                                                to_string(expected), to_string(cfg.scheme)));
    }
}

void check_finite(const State& x, std::size_t step) {
    for (double v : x) {
        if (!std::isfinite(v)) {
            throw DivergenceError(fmt::format("solver diverged: non-finite state at step {}", step),
                                  step);
        }
    }
}

State eval_rhs(const Rhs& f, double t, const State& x) {
    State out = f(t, x);
    if (out.size() != x.size()) {
        throw ShapeError(fmt::format("rhs returned width {} for a state of width {}", out.size(),
                                     x.size()));
    }
    return out;
}

Trajectory start(const Rhs& f, std::span<const double> x0, const SolverConfig& cfg) {
    cfg.validate();
    if (x0.empty()) {
        throw ShapeError("solver: empty initial state");
    }
    Trajectory traj;
    const std::size_t n_points = cfg.steps + 1;
    traj.times.resize(n_points);
    for (std::size_t n = 0; n < n_points; ++n) {
        traj.times[n] = cfg.time(n);
    }
    traj.states.reserve(n_points);
    traj.states.emplace_back(x0.begin(), x0.end());
    traj.orders.reserve(n_points);
    traj.rhs_evals.reserve(n_points);
    traj.rhs_evals.push_back(eval_rhs(f, traj.times[0], traj.states[0]));
    check_finite(traj.rhs_evals[0], 0);
    return traj;
}

void finish(const Rhs& f, const order::OrderModel& order, Trajectory& traj) {
    const std::size_t last = traj.size() - 1;
    traj.orders.push_back(order.eval(traj.times[last], traj.states[last]));
    if (traj.rhs_evals.size() < traj.size()) {
        traj.rhs_evals.push_back(eval_rhs(f, traj.times[last], traj.states[last]));
    }
}

}  // namespace

Trajectory solve_l1(const Rhs& f, const order::OrderModel& order, std::span<const double> x0,
                    const SolverConfig& cfg) {
    require_scheme(cfg, Scheme::L1);
    Trajectory traj = start(f, x0, cfg);
    const double h = cfg.step();
    const std::size_t d = x0.size();

    for (std::size_t n = 0; n < cfg.steps; ++n) {
        const State& xn = traj.states[n];
        const double alpha = order.eval(traj.times[n], xn);
        traj.orders.push_back(alpha);
        if (n > 0) {
            traj.rhs_evals.push_back(eval_rhs(f, traj.times[n], xn));
        }
        frac::WeightRow row = frac::l1_weights(n, alpha, h);
        const std::size_t first = history_start(n, cfg);
        if (first > 0) {
            double dropped = 0.0;
            for (std::size_t j = 0; j < first; ++j) {
                dropped += row.weights[j];
            }
            row.weights[first] += dropped;
        }
        const State& fn = traj.rhs_evals[n];
        State next(d);
        for (std::size_t i = 0; i < d; ++i) {
            // x_n + sum_{j<n} a_j (x_j - x_n): constants stay exact
            double acc = 0.0;
            for (std::size_t j = first; j < n; ++j) {
                acc += row.weights[j] * (traj.states[j][i] - xn[i]);
            }
            next[i] = (n > first ? xn[i] + acc : xn[i]) + row.scale * fn[i];
        }
        check_finite(next, n + 1);
        traj.states.push_back(std::move(next));
    }
    finish(f, order, traj);
    return traj;
}

Trajectory solve_abm_predictor(const Rhs& f, const order::OrderModel& order,
                               std::span<const double> x0, const SolverConfig& cfg) {
    require_scheme(cfg, Scheme::AbmPredictor);
    Trajectory traj = start(f, x0, cfg);
    const double h = cfg.step();
    const std::size_t d = x0.size();

    for (std::size_t n = 0; n < cfg.steps; ++n) {
        const State& xn = traj.states[n];
        const double alpha = order.eval(traj.times[n], xn);
        traj.orders.push_back(alpha);
        if (n > 0) {
            traj.rhs_evals.push_back(eval_rhs(f, traj.times[n], xn));
            check_finite(traj.rhs_evals[n], n);
        }
        const frac::WeightRow row = frac::abm_weights(n, alpha, h);
        const std::size_t first = history_start(n, cfg);
        State next(d);
        for (std::size_t i = 0; i < d; ++i) {
            double acc = 0.0;
            for (std::size_t j = first; j <= n; ++j) {
                acc += row.weights[j] * traj.rhs_evals[j][i];
            }
            next[i] = traj.states[0][i] + row.scale * acc;
        }
        check_finite(next, n + 1);
        traj.states.push_back(std::move(next));
    }
    finish(f, order, traj);
    return traj;
}

Trajectory solve_abm_pc(const Rhs& f, const order::OrderModel& order,
                        std::span<const double> x0, const SolverConfig& cfg) {
    require_scheme(cfg, Scheme::AbmPredictorCorrector);
    Trajectory traj = start(f, x0, cfg);
    const double h = cfg.step();
    const std::size_t d = x0.size();
    traj.predictor_evals.reserve(cfg.steps + 1);
    traj.predictor_evals.emplace_back();  // no predicted value at t_0

    for (std::size_t n = 0; n < cfg.steps; ++n) {
        const State& xn = traj.states[n];
        const double alpha = order.eval(traj.times[n], xn);
        traj.orders.push_back(alpha);
        const frac::SplitWeights w = frac::corrector_split_weights(n, alpha, h);
        const std::size_t first = history_start(n, cfg);
        const double alpha_p1 = alpha + 1.0;
        const State& fn = traj.rhs_evals[n];

        // predictor: trapezoid history over closed intervals, rectangle on the last one
        State predicted(d);
        for (std::size_t i = 0; i < d; ++i) {
            double left = 0.0;
            double right = 0.0;
            for (std::size_t k = first; k < n; ++k) {
                left += w.left[k] * traj.rhs_evals[k][i];
            }
            for (std::size_t k = first; k < n; ++k) {
                right += w.right[k] * traj.predictor_evals[k + 1][i];
            }
            const double acc = (left + right) + alpha_p1 * fn[i];
            predicted[i] = traj.states[0][i] + w.scale * acc;
        }
        check_finite(predicted, n + 1);
        State f_pred = eval_rhs(f, traj.times[n + 1], predicted);
        check_finite(f_pred, n + 1);
        traj.predictor_evals.push_back(std::move(f_pred));

        State next(d);
        for (std::size_t i = 0; i < d; ++i) {
            double left = 0.0;
            double right = 0.0;
            for (std::size_t k = first; k <= n; ++k) {
                left += w.left[k] * traj.rhs_evals[k][i];
            }
            for (std::size_t k = first; k <= n; ++k) {
                right += w.right[k] * traj.predictor_evals[k + 1][i];
            }
            next[i] = traj.states[0][i] + w.scale * (left + right);
        }
        check_finite(next, n + 1);
        traj.states.push_back(std::move(next));
        traj.rhs_evals.push_back(eval_rhs(f, traj.times[n + 1], traj.states[n + 1]));
        check_finite(traj.rhs_evals[n + 1], n + 1);
    }
    finish(f, order, traj);
    return traj;
}

Trajectory solve(const Rhs& f, const order::OrderModel& order, std::span<const double> x0,
                 const SolverConfig& cfg) {
    switch (cfg.scheme) {
        case Scheme::L1:
            return solve_l1(f, order, x0, cfg);
        case Scheme::AbmPredictor:
            return solve_abm_predictor(f, order, x0, cfg);
        case Scheme::AbmPredictorCorrector:
            return solve_abm_pc(f, order, x0, cfg);
    }
    throw std::invalid_argument("solve: unknown scheme");
}

order::OrderTrace order_trace(const order::OrderModel& order, const Trajectory& trajectory) {
    order::OrderTrace trace;
    trace.reserve(trajectory.size());
    for (std::size_t n = 0; n < trajectory.size(); ++n) {
        trace.emplace_back(trajectory.times[n],
                           order.eval(trajectory.times[n], trajectory.states[n]));
    }
    return trace;
}

std::vector<ProbePoint> convergence_probe(const Rhs& f, const order::OrderModel& order,
                                          std::span<const double> x0, double t1,
                                          std::vector<std::size_t> steps_list, Scheme scheme,
                                          const std::function<State(double)>& exact) {
    std::sort(steps_list.begin(), steps_list.end());
    std::vector<ProbePoint> out;
    for (std::size_t steps : steps_list) {
        SolverConfig cfg;
        cfg.t0 = 0.0;
        cfg.t1 = t1;
        cfg.steps = steps;
        cfg.scheme = scheme;
        const Trajectory traj = solve(f, order, x0, cfg);
        double worst = 0.0;
        for (std::size_t n = 0; n < traj.size(); ++n) {
            const State ref = exact(traj.times[n]);
            for (std::size_t i = 0; i < ref.size(); ++i) {
                worst = std::max(worst, std::abs(ref[i] - traj.states[n][i]));
            }
        }
        out.push_back(ProbePoint{steps, worst});
    }
    return out;
}

}  // namespace vofde::solve
