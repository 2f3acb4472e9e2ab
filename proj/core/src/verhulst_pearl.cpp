#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "vofde/adam.hpp"
#include "vofde/csv.hpp"
#include "vofde/errors.hpp"
#include "vofde/inverse.hpp"

namespace vofde::inverse {

namespace {

constexpr std::size_t kHidden = 30;

bool is_checkpoint(std::size_t iteration) {
    return std::find(std::begin(kVpCheckpoints), std::end(kVpCheckpoints), iteration) !=
           std::end(kVpCheckpoints);
}

bool finite_report(const LossReport& r) {
    return std::isfinite(r.l_eqn) && std::isfinite(r.l_ini) && std::isfinite(r.l_total);
}

solve::State vp_rhs_state(double, std::span<const double> x) {
    solve::State out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = vp_rhs(x[i]);
    }
    return out;
}

order::OrderTrace trace_of(const solve::TapeTrajectory& traj) {
    order::OrderTrace trace;
    trace.reserve(traj.times.size());
    for (std::size_t n = 0; n < traj.times.size(); ++n) {
        trace.emplace_back(traj.times[n], traj.orders[n].item());
    }
    return trace;
}

struct ResidualParts {
    LossTerms terms;
    order::OrderTrace trace;
};

ResidualParts residual_parts(ad::Tape& tape, ad::Var u_hat, const order::OrderModel& order,
                             const solve::SolverConfig& cfg, double lambda1, double lambda2) {
    cfg.validate();
    const std::size_t n = cfg.steps;
    if (u_hat.size() != n + 1) {
        throw ShapeError(fmt::format("vp residual: {} network values for {} grid points",
                                     u_hat.size(), n + 1));
    }
    u_hat = ad::reshape(u_hat, {n + 1});
    if (!u_hat.value().all_finite()) {
        throw NumericError("vp residual: network output is not finite");
    }
    const auto rhs = [](double, ad::Var x) { return vp_rhs(x); };
    const solve::TapeTrajectory traj =
        solve::solve_on_tape(tape, rhs, order, tape.constant(kVpInitial), cfg);
    const std::vector<ad::Var> solver_states(traj.states.begin() + 1, traj.states.end());
    ad::Var diff = ad::slice(u_hat, 1, n) - ad::concat(solver_states);
    LossTerms terms;
    terms.l_eqn = ad::sum(ad::square(diff));
    terms.l_ini = ad::scalar_mul(ad::square(ad::slice(u_hat, 0, 1) - kVpInitial),
                                 static_cast<double>(n));
    terms.l_total = ad::scalar_mul(terms.l_eqn, lambda1) + ad::scalar_mul(terms.l_ini, lambda2);
    return {terms, trace_of(traj)};
}

double interpolate(const solve::Trajectory& traj, double t) {
    const auto& ts = traj.times;
    if (t <= ts.front()) {
        return traj.states.front()[0];
    }
    if (t >= ts.back()) {
        return traj.states.back()[0];
    }
    const auto upper = std::upper_bound(ts.begin(), ts.end(), t);
    const std::size_t k = static_cast<std::size_t>(upper - ts.begin()) - 1;
    const double w = (t - ts[k]) / (ts[k + 1] - ts[k]);
    return traj.states[k][0] * (1.0 - w) + traj.states[k + 1][0] * w;
}

}  // namespace

double vp_rhs(double u) { return 0.3 * u * (1.0 - u); }

ad::Var vp_rhs(ad::Var u) { return ad::scalar_mul(u, 0.3) * (1.0 - u); }

LossTerms vp_network_residual(ad::Tape& tape, ad::Var u_hat, const order::OrderModel& order,
                              const solve::SolverConfig& cfg, double lambda1, double lambda2) {
    return residual_parts(tape, u_hat, order, cfg, lambda1, lambda2).terms;
}

LossReport vp_network_residual(std::span<const double> u_hat, const order::OrderModel& order,
                               const solve::SolverConfig& cfg, double lambda1, double lambda2) {
    ad::Tape tape;
    ad::Var values =
        tape.constant(ad::Tensor::vector(std::vector<double>(u_hat.begin(), u_hat.end())));
    auto parts = residual_parts(tape, values, order, cfg, lambda1, lambda2);
    LossReport report;
    report.l_eqn = parts.terms.l_eqn.item();
    report.l_ini = parts.terms.l_ini.item();
    report.l_total = parts.terms.l_total.item();
    report.learned_alpha_trace = std::move(parts.trace);
    return report;
}

void VpConfig::validate() const {
    if (iterations == 0) {
        throw DomainError("vp training: iterations must be at least 1");
    }
    if (j_points == 0) {
        throw DomainError("vp training: j_points must be at least 1");
    }
    if (!(lr > 0.0) || !std::isfinite(lr)) {
        throw DomainError(fmt::format("vp training: lr must be positive, got {}", lr));
    }
    if (!(lambda1 > 0.0) || !(lambda2 > 0.0) || !std::isfinite(lambda1) ||
        !std::isfinite(lambda2)) {
        throw DomainError("vp training: lambda1 and lambda2 must be positive");
    }
}

VpModel VpModel::create(const VpConfig& cfg) {
    std::mt19937_64 rng(cfg.seed);
    ad::Mlp net("net", {1, kHidden, kHidden, 1}, ad::Activation::Tanh);
    ad::ParamStore params;
    net.initialize(params, rng);
    order::NetOptions opts;
    opts.init = cfg.order_init;
    opts.seed = cfg.seed + 1;
    switch (cfg.order_kind) {
        case order::OrderKind::Constant:
            return {net, params, order::OrderModel::constant(cfg.order_init)};
        case order::OrderKind::GridInterp:
            return {net, params, order::OrderModel::grid(0.0, 1.0, 11, cfg.order_init)};
        case order::OrderKind::TimeNet:
            return {net, params, order::OrderModel::time_net(0.0, 1.0, opts)};
        case order::OrderKind::StateNet:
            return {net, params, order::OrderModel::state_net(1, 0.0, 1.0, opts)};
    }
    throw std::invalid_argument("unknown order kind");
}

ad::Var VpModel::predict(ad::Tape& tape, std::span<const double> times) const {
    const std::size_t m = times.size();
    ad::Var input = tape.constant(
        ad::Tensor::matrix(m, 1, std::vector<double>(times.begin(), times.end())));
    return ad::reshape(net.forward(tape, net_params, input), {m});
}

std::vector<double> VpModel::predict(std::span<const double> times) const {
    ad::Tape tape;
    return predict(tape, times).value().values();
}

solve::SolverConfig vp_grid(std::size_t j_points) {
    solve::SolverConfig cfg;
    cfg.t0 = 0.0;
    cfg.t1 = 1.0;
    cfg.steps = j_points;
    cfg.scheme = solve::Scheme::AbmPredictor;
    return cfg;
}

LossTerms vp_train_loss(ad::Tape& tape, const VpModel& model, const VpConfig& cfg) {
    const solve::SolverConfig grid = vp_grid(cfg.j_points);
    std::vector<double> times(grid.steps + 1);
    for (std::size_t n = 0; n <= grid.steps; ++n) {
        times[n] = grid.time(n);
    }
    return vp_network_residual(tape, model.predict(tape, times), model.order, grid, cfg.lambda1,
                               cfg.lambda2);
}

LossReport vp_test_loss(const VpModel& model, const VpConfig& cfg,
                        std::span<const double> test_times) {
    const solve::SolverConfig grid = vp_grid(cfg.j_points);
    const double x0 = kVpInitial;
    const solve::Trajectory traj =
        solve::solve(vp_rhs_state, model.order, std::span<const double>(&x0, 1), grid);
    const std::vector<double> u_hat = model.predict(test_times);
    const double zero = 0.0;
    const double u_hat0 = model.predict(std::span<const double>(&zero, 1))[0];

    LossReport report;
    for (std::size_t i = 0; i < test_times.size(); ++i) {
        const double d = u_hat[i] - interpolate(traj, test_times[i]);
        report.l_eqn += d * d;
    }
    const double d0 = u_hat0 - kVpInitial;
    report.l_ini = static_cast<double>(test_times.size()) * (d0 * d0);
    report.l_total = cfg.lambda1 * report.l_eqn + cfg.lambda2 * report.l_ini;
    report.learned_alpha_trace = solve::order_trace(model.order, traj);
    return report;
}

VpResult train_vp(const VpConfig& cfg) {
    cfg.validate();
    VpModel model = VpModel::create(cfg);

    std::mt19937_64 test_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> test_times(cfg.j_points);
    for (double& t : test_times) {
        t = unit(test_rng);
    }
    std::sort(test_times.begin(), test_times.end());

    LossReport last = vp_test_loss(model, cfg, test_times);
    const order::OrderTrace initial_trace = last.learned_alpha_trace;

    const ad::AdamOptions opts{cfg.lr};
    ad::AdamState net_state(opts);
    ad::AdamState order_state(opts);
    std::vector<LossReport> history;
    std::vector<LossReport> checkpoints;
    history.reserve(cfg.iterations);

    for (std::size_t it = 1; it <= cfg.iterations; ++it) {
        LossReport report;
        try {
            ad::Tape tape;
            const LossTerms terms = vp_train_loss(tape, model, cfg);
            if (!std::isfinite(terms.l_total.item())) {
                throw NumericError("training loss is not finite");
            }
            tape.backward(terms.l_total);
            ad::adam_step(model.net_params, tape.gradients(model.net_params), net_state);
            if (model.order.learnable()) {
                ad::adam_step(model.order.params(), tape.gradients(model.order.params()),
                              order_state);
            }
            report = vp_test_loss(model, cfg, test_times);
        } catch (const NumericError& e) {
            throw VpTrainingError(fmt::format("vp training diverged at iteration {}: {}", it,
                                              e.what()),
                                  last);
        } catch (const OptimizerError& e) {
            throw VpTrainingError(fmt::format("vp training diverged at iteration {}: {}", it,
                                              e.what()),
                                  last);
        }
        report.iteration = it;
        if (!finite_report(report)) {
            throw VpTrainingError(fmt::format("vp training diverged at iteration {}", it), last);
        }
        if (is_checkpoint(it)) {
            checkpoints.push_back(report);
        }
        last = report;
        report.learned_alpha_trace.clear();
        history.push_back(std::move(report));
    }
    return VpResult{std::move(history), std::move(checkpoints), std::move(last), initial_trace,
                    std::move(model)};
}

std::string loss_history_to_csv(std::span<const LossReport> history) {
    std::string out = "iter,l_eqn,l_ini,l_total\n";
    for (const auto& r : history) {
        out += fmt::format("{},{},{},{}\n", r.iteration, csv::format_real(r.l_eqn),
                           csv::format_real(r.l_ini), csv::format_real(r.l_total));
    }
    return out;
}

}  // namespace vofde::inverse
