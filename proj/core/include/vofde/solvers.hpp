#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vofde/order_model.hpp"
#include "vofde/tape.hpp"

namespace vofde::solve {

enum class Scheme { L1, AbmPredictor, AbmPredictorCorrector };

std::string to_string(Scheme scheme);
Scheme parse_scheme(const std::string& text);

struct SolverConfig {
    double t0 = 0.0;
    double t1 = 1.0;
    std::size_t steps = 100;
    Scheme scheme = Scheme::AbmPredictor;
    // Only the most recent `memory_window` history terms are kept when set.
    std::optional<std::size_t> memory_window;

    double step() const { return (t1 - t0) / static_cast<double>(steps); }
    double time(std::size_t n) const { return t0 + step() * static_cast<double>(n); }
    // Throws DomainError on an empty interval, zero steps or a bad window.
    void validate() const;
};

using State = std::vector<double>;
using Rhs = std::function<State(double t, std::span<const double> x)>;

struct Trajectory {
    std::vector<double> times;
    std::vector<State> states;
    // orders[n] is the alpha frozen for the step n -> n+1; the last entry is
    // alpha at the final grid point.
    std::vector<double> orders;
    // f(t_j, x_j) for j = 0..N
    std::vector<State> rhs_evals;
    // f(t_j, x_j^P) for j = 1..N (predictor-corrector only; entry 0 unused)
    std::vector<State> predictor_evals;

    std::size_t size() const noexcept { return times.size(); }
    std::size_t width() const noexcept { return states.empty() ? 0 : states.front().size(); }
};

// x_{n+1} = sum_j a_j x_j + c f(t_n, x_n), alpha frozen at (t_n, x_n). Since the
// a_j sum to 1 this is evaluated as x_n + sum_{j<n} a_j (x_j - x_n) + c f.
Trajectory solve_l1(const Rhs& f, const order::OrderModel& order, std::span<const double> x0,
                    const SolverConfig& cfg);

// x_{n+1} = x_0 + h^a / Gamma(1+a) sum_j b_j f(t_j, x_j). O(N^2) overall.
Trajectory solve_abm_predictor(const Rhs& f, const order::OrderModel& order,
                               std::span<const double> x0, const SolverConfig& cfg);

// One predictor pass and one corrector pass per step (split product
// trapezoid; reduces to Heun's method for alpha = 1).
Trajectory solve_abm_pc(const Rhs& f, const order::OrderModel& order,
                        std::span<const double> x0, const SolverConfig& cfg);

// Dispatches on cfg.scheme.
Trajectory solve(const Rhs& f, const order::OrderModel& order, std::span<const double> x0,
                 const SolverConfig& cfg);

// alpha at every grid point of the trajectory.
order::OrderTrace order_trace(const order::OrderModel& order, const Trajectory& trajectory);

struct ProbePoint {
    std::size_t steps = 0;
    double max_error = 0.0;
};

// Solves on [0, t1] for each N and records the max abs error against the
// exact solution over the grid. The result is sorted by N.
std::vector<ProbePoint> convergence_probe(const Rhs& f, const order::OrderModel& order,
                                          std::span<const double> x0, double t1,
                                          std::vector<std::size_t> steps_list, Scheme scheme,
                                          const std::function<State(double)>& exact);

// ---- differentiable path --------------------------------------------------

using TapeRhs = std::function<ad::Var(double t, ad::Var x)>;

struct TapeTrajectory {
    std::vector<double> times;
    std::vector<ad::Var> states;
    std::vector<ad::Var> orders;
};

// The same three schemes recorded on a tape so losses can be
// differentiated through the unrolled recursion. States are rank-1.
TapeTrajectory solve_on_tape(ad::Tape& tape, const TapeRhs& f, const order::OrderModel& order,
                             ad::Var x0, const SolverConfig& cfg);

// ---- export ---------------------------------------------------------------

// Header `t,alpha,x_0,...,x_{d-1}`, 17 significant digits.
std::string trajectory_to_csv(const Trajectory& trajectory);
void write_trajectory_csv(const std::string& path, const Trajectory& trajectory);

// Header `t,alpha`.
std::string order_trace_to_csv(const order::OrderTrace& trace);
void write_order_trace_csv(const std::string& path, const order::OrderTrace& trace);

// Parses a trajectory CSV back (times, orders, states only).
Trajectory trajectory_from_csv(const std::string& text);

}  // namespace vofde::solve
