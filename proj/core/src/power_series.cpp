#include <cmath>

#include <fmt/format.h>

#include "vofde/adam.hpp"
#include "vofde/errors.hpp"
#include "vofde/inverse.hpp"
#include "vofde/special.hpp"

namespace vofde::inverse {

namespace {

constexpr const char* kCoeffsName = "series.coeffs";

void check_time(double t) {
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw DomainError(fmt::format("zeta: t must be positive, got {}", t));
    }
}

}  // namespace

PowerSeriesModel::PowerSeriesModel(double u0, std::vector<double> coeffs) : u0_(u0) {
    if (coeffs.empty()) {
        coeffs.assign(kDegree + 1, 0.0);
    }
    if (coeffs.size() != kDegree + 1) {
        throw ShapeError(fmt::format("power series needs {} coefficients, got {}", kDegree + 1,
                                     coeffs.size()));
    }
    params_.set(kCoeffsName, ad::Tensor::vector(std::move(coeffs)));
}

std::span<const double> PowerSeriesModel::coeffs() const { return params_.at(kCoeffsName).data(); }

double PowerSeriesModel::value(double t) const {
    const auto a = coeffs();
    double acc = 0.0;
    double p = 1.0;
    for (std::size_t i = 0; i <= kDegree; ++i) {
        acc += a[i] * p;
        p *= t;
    }
    return u0_ + acc;
}

ad::Var PowerSeriesModel::value(ad::Tape& tape, double t) const {
    std::vector<double> powers(kDegree + 1);
    double p = 1.0;
    for (auto& v : powers) {
        v = p;
        p *= t;
    }
    ad::Var a = tape.param(params_, kCoeffsName);
    return ad::sum(ad::hadamard(a, tape.constant(ad::Tensor::vector(std::move(powers))))) + u0_;
}

void MultiTermProblem::validate() const {
    if (q.empty()) {
        throw ShapeError("multi-term problem needs at least one term");
    }
    if (alphas.size() != q.size()) {
        throw ShapeError(fmt::format("multi-term problem: {} coefficients but {} orders", q.size(),
                                     alphas.size()));
    }
    if (!h) {
        throw ShapeError("multi-term problem: missing right-hand side");
    }
    if (grid.empty()) {
        throw DomainError("multi-term problem: empty grid");
    }
    for (std::size_t j = 0; j < grid.size(); ++j) {
        if (!(grid[j] > 0.0) || (j > 0 && !(grid[j] > grid[j - 1]))) {
            throw DomainError("multi-term problem: grid must be positive and strictly increasing");
        }
    }
}

double zeta(const PowerSeriesModel& series, const order::OrderModel& alpha, double t) {
    check_time(t);
    const double u = series.value(t);
    const double a_t = alpha.eval(t, std::span<const double>(&u, 1));
    const auto a = series.coeffs();
    double acc = 0.0;
    for (std::size_t i = 1; i <= PowerSeriesModel::kDegree; ++i) {
        acc += a[i] * frac::caputo_power_term(i, a_t, t);
    }
    return acc;
}

ad::Var zeta(ad::Tape& tape, const PowerSeriesModel& series, const order::OrderModel& alpha,
             double t) {
    check_time(t);
    const std::size_t r = PowerSeriesModel::kDegree;
    ad::Var u = series.value(tape, t);
    ad::Var a_t = alpha.eval(tape, t, u);
    std::vector<ad::Var> terms;
    terms.reserve(r);
    for (std::size_t i = 1; i <= r; ++i) {
        const double di = static_cast<double>(i);
        ad::Var power = ad::pow_const_base(t, di - a_t);
        ad::Var ratio = power * ad::reciprocal(ad::gamma_of((di + 1.0) - a_t));
        terms.push_back(ad::scalar_mul(ratio, frac::gamma(di + 1.0)));
    }
    ad::Var a = ad::slice(tape.param(series.params(), kCoeffsName), 1, r);
    return ad::sum(ad::hadamard(a, ad::concat(terms)));
}

ad::Var equation_residual(ad::Tape& tape, const MultiTermProblem& problem,
                          const PowerSeriesModel& series) {
    problem.validate();
    std::vector<ad::Var> residuals;
    residuals.reserve(problem.grid.size());
    for (double t : problem.grid) {
        ad::Var lhs = tape.constant(0.0);
        for (std::size_t k = 0; k < problem.q.size(); ++k) {
            lhs = lhs + ad::scalar_mul(zeta(tape, series, problem.alphas[k], t), problem.q[k](t));
        }
        residuals.push_back(lhs - problem.h(t, series.value(tape, t)));
    }
    ad::Var loss = ad::sum(ad::square(ad::concat(residuals)));
    if (!std::isfinite(loss.item())) {
        throw NumericError("equation residual is not finite");
    }
    return loss;
}

double equation_residual(const MultiTermProblem& problem, const PowerSeriesModel& series) {
    ad::Tape tape;
    return equation_residual(tape, problem, series).item();
}

std::vector<double> fit_series(MultiTermProblem& problem, PowerSeriesModel& series,
                               std::size_t iterations, double lr) {
    const ad::AdamOptions opts{lr};
    ad::AdamState series_state(opts);
    std::vector<ad::AdamState> order_states(problem.alphas.size(), ad::AdamState(opts));
    std::vector<double> history;
    history.reserve(iterations);
    for (std::size_t it = 0; it < iterations; ++it) {
        ad::Tape tape;
        ad::Var loss = equation_residual(tape, problem, series);
        tape.backward(loss);
        ad::adam_step(series.params(), tape.gradients(series.params()), series_state);
        for (std::size_t k = 0; k < problem.alphas.size(); ++k) {
            auto& model = problem.alphas[k];
            if (model.learnable()) {
                ad::adam_step(model.params(), tape.gradients(model.params()), order_states[k]);
            }
        }
        history.push_back(equation_residual(problem, series));
    }
    return history;
}

}  // namespace vofde::inverse
