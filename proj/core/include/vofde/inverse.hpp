#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vofde/errors.hpp"
#include "vofde/nn.hpp"
#include "vofde/order_model.hpp"
#include "vofde/solvers.hpp"
#include "vofde/tape.hpp"

namespace vofde::inverse {

// u(t) = u0 + sum_{i=0}^{r} a_i t^i with r = 5. The coefficients live in
// params() under "series.coeffs".
class PowerSeriesModel {
public:
    static constexpr std::size_t kDegree = 5;

    explicit PowerSeriesModel(double u0, std::vector<double> coeffs = {});

    double u0() const noexcept { return u0_; }
    std::span<const double> coeffs() const;
    ad::ParamStore& params() noexcept { return params_; }
    const ad::ParamStore& params() const noexcept { return params_; }

    double value(double t) const;
    ad::Var value(ad::Tape& tape, double t) const;

private:
    double u0_;
    ad::ParamStore params_;
};

// sum_k Q_k(t) D^{alpha_k(t)} u(t) = h(t, u(t)), k = 0..m
struct MultiTermProblem {
    using Coefficient = std::function<double(double t)>;
    using Forcing = std::function<ad::Var(double t, ad::Var u)>;

    std::vector<Coefficient> q;
    std::vector<order::OrderModel> alphas;
    Forcing h;
    std::vector<double> grid;

    std::size_t m() const noexcept { return q.empty() ? 0 : q.size() - 1; }
    // Throws ShapeError on mismatched lists and DomainError on a bad grid.
    void validate() const;
};

// Caputo derivative of the series at order alpha(t, u(t)); the constant
// term contributes nothing. Throws DomainError for t <= 0.
double zeta(const PowerSeriesModel& series, const order::OrderModel& alpha, double t);
ad::Var zeta(ad::Tape& tape, const PowerSeriesModel& series, const order::OrderModel& alpha,
             double t);

// sum_j (sum_k Q_k(t_j) zeta_k(t_j) - h(t_j, u(t_j)))^2 over the grid.
// Throws NumericError if the residual is not finite.
double equation_residual(const MultiTermProblem& problem, const PowerSeriesModel& series);
ad::Var equation_residual(ad::Tape& tape, const MultiTermProblem& problem,
                          const PowerSeriesModel& series);

// Adam on the series coefficients and every learnable alpha_k. Returns the
// residual after each iteration.
std::vector<double> fit_series(MultiTermProblem& problem, PowerSeriesModel& series,
                               std::size_t iterations, double lr = 0.01);

// ---- Verhulst-Pearl ---------------------------------------------------------

inline constexpr double kVpInitial = 0.1;
inline constexpr std::size_t kVpCheckpoints[] = {200, 500, 1000, 1500, 2000};

// 0.3 u (1 - u)
double vp_rhs(double u);
ad::Var vp_rhs(ad::Var u);

struct LossReport {
    double l_eqn = 0.0;
    double l_ini = 0.0;
    double l_total = 0.0;
    std::size_t iteration = 0;
    order::OrderTrace learned_alpha_trace;
};

struct LossTerms {
    ad::Var l_eqn;
    ad::Var l_ini;
    ad::Var l_total;
};

// u_hat holds the network output at every grid point t_0..t_N of cfg.
//   l_eqn = sum_{n=1..N} (u_hat_n - u_solver_n)^2
//   l_ini = N (u_hat_0 - 0.1)^2
// where u_solver is the ABM predictor solution of u' = vp_rhs(u), u(0) = 0.1
// recorded on the same tape.
LossTerms vp_network_residual(ad::Tape& tape, ad::Var u_hat, const order::OrderModel& order,
                              const solve::SolverConfig& cfg, double lambda1 = 1.0,
                              double lambda2 = 1.0);
LossReport vp_network_residual(std::span<const double> u_hat, const order::OrderModel& order,
                               const solve::SolverConfig& cfg, double lambda1 = 1.0,
                               double lambda2 = 1.0);

struct VpConfig {
    std::size_t iterations = 2000;
    std::size_t j_points = 40;
    double lr = 0.01;
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    std::uint64_t seed = 0;
    order::OrderKind order_kind = order::OrderKind::GridInterp;
    double order_init = 0.8;

    // Throws DomainError on iterations == 0, j_points == 0, lr <= 0 or
    // non-positive weights.
    void validate() const;
};

// Network 1 -> 30 -> 30 -> 1 (tanh) mapping t to u_hat, and the order model.
struct VpModel {
    ad::Mlp net;
    ad::ParamStore net_params;
    order::OrderModel order;

    static VpModel create(const VpConfig& cfg);
    std::vector<double> predict(std::span<const double> times) const;
    ad::Var predict(ad::Tape& tape, std::span<const double> times) const;
};

solve::SolverConfig vp_grid(std::size_t j_points);

// Training loss of the model on the uniform j-point grid.
LossTerms vp_train_loss(ad::Tape& tape, const VpModel& model, const VpConfig& cfg);

// Test loss at arbitrary times in [0, 1]; the solver reference is the
// j-point trajectory, linearly interpolated.
LossReport vp_test_loss(const VpModel& model, const VpConfig& cfg,
                        std::span<const double> test_times);

struct VpResult {
    std::vector<LossReport> history;      // test loss after every iteration
    std::vector<LossReport> checkpoints;  // reports at kVpCheckpoints reached, with traces
    LossReport final_report;              // last iteration, with trace
    order::OrderTrace initial_trace;
    VpModel model;
};

class VpTrainingError : public TrainingError {
public:
    VpTrainingError(const std::string& what, LossReport last)
        : TrainingError(what), last_(std::move(last)) {}
    const LossReport& last_report() const noexcept { return last_; }

private:
    LossReport last_;
};

// Trains the network and the order jointly with Adam. Throws
// VpTrainingError (carrying the last finite report) if the optimisation
// diverges.
VpResult train_vp(const VpConfig& cfg);

// Header `iter,l_eqn,l_ini,l_total`.
std::string loss_history_to_csv(std::span<const LossReport> history);

}  // namespace vofde::inverse
