#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include "vofde/errors.hpp"
#include "vofde/inverse.hpp"

using namespace vofde;
using namespace vofde::inverse;
using ad::Tape;
using ad::Var;
using order::OrderModel;

namespace {

std::vector<double> uniform_grid(std::size_t n) {
    std::vector<double> g;
    for (std::size_t i = 1; i <= n; ++i) {
        g.push_back(static_cast<double>(i) / static_cast<double>(n));
    }
    return g;
}

MultiTermProblem single_term(double alpha, MultiTermProblem::Forcing h, std::size_t n = 10) {
    MultiTermProblem p;
    p.q = {[](double) { return 1.0; }};
    p.alphas = {OrderModel::constant(alpha)};
    p.h = std::move(h);
    p.grid = uniform_grid(n);
    return p;
}

}  // namespace

TEST(PowerSeries, ValueMatchesPolynomial) {
    const PowerSeriesModel s(0.5, {0.0, 1.0, -2.0, 0.0, 0.0, 0.25});
    const double t = 0.7;
    EXPECT_NEAR(s.value(t), 0.5 + t - 2 * t * t + 0.25 * std::pow(t, 5), 1e-15);
    Tape tape;
    EXPECT_EQ(s.value(tape, t).item(), s.value(t));
    EXPECT_THROW(PowerSeriesModel(0.0, {1.0, 2.0}), ShapeError);
}

TEST(Zeta, Examples) {
    EXPECT_EQ(zeta(PowerSeriesModel(1.0), OrderModel::constant(0.4), 0.5), 0.0);
    const PowerSeriesModel linear(0.0, {0.0, 1.0, 0.0, 0.0, 0.0, 0.0});
    for (double t : {0.1, 0.9, 2.0}) {
        EXPECT_NEAR(zeta(linear, OrderModel::constant(1.0), t), 1.0, 1e-14);
    }
    const PowerSeriesModel quad(0.0, {0.0, 0.0, 1.0, 0.0, 0.0, 0.0});
    const double ref = 2.0 / boost::math::tgamma(2.5);
    EXPECT_NEAR(zeta(quad, OrderModel::constant(0.5), 1.0), ref, 1e-13);
    EXPECT_NEAR(zeta(quad, OrderModel::constant(0.5), 1.0), 1.5045055561, 1e-10);
    EXPECT_THROW(zeta(quad, OrderModel::constant(0.5), 0.0), DomainError);
}

TEST(Zeta, ConstantTermAtIntegerOrderOne) {
    // a_0 t^0 is a constant: no contribution at any order
    const PowerSeriesModel s(0.0, {3.0, 0.0, 0.0, 0.0, 0.0, 0.0});
    EXPECT_EQ(zeta(s, OrderModel::constant(0.6), 0.5), 0.0);
}

TEST(Residual, TrivialSolutions) {
    auto zero_h = [](double, Var u) { return 0.0 * u; };
    EXPECT_EQ(equation_residual(single_term(0.7, zero_h), PowerSeriesModel(0.0)), 0.0);

    const double c = 1.7;
    auto const_h = [c](double, Var u) { return 0.0 * u + c; };
    const PowerSeriesModel s(0.2, {0.0, c, 0.0, 0.0, 0.0, 0.0});
    EXPECT_NEAR(equation_residual(single_term(1.0, const_h), s), 0.0, 1e-24);
}

TEST(Residual, ManufacturedSolution) {
    auto h = [](double t, Var u) { return 0.0 * u + 2.0 / std::sqrt(std::numbers::pi) * std::sqrt(t); };
    const PowerSeriesModel s(0.0, {0.0, 1.0, 0.0, 0.0, 0.0, 0.0});
    EXPECT_LE(equation_residual(single_term(0.5, h), s), 1e-12);
    Tape tape;
    EXPECT_LE(equation_residual(tape, single_term(0.5, h), s).item(), 1e-12);
}

TEST(Residual, Validation) {
    MultiTermProblem p = single_term(0.5, [](double, Var u) { return u; });
    p.alphas.push_back(OrderModel::constant(0.3));
    EXPECT_THROW(p.validate(), ShapeError);
    MultiTermProblem q = single_term(0.5, [](double, Var u) { return u; });
    q.grid = {0.0, 0.5};
    EXPECT_THROW(q.validate(), DomainError);
}

TEST(FitSeries, RecoversManufacturedSolution) {
    auto h = [](double t, Var u) { return 0.0 * u + 2.0 / std::sqrt(std::numbers::pi) * std::sqrt(t); };
    MultiTermProblem p = single_term(0.5, h);
    PowerSeriesModel s(0.0);
    const double start = equation_residual(p, s);
    const auto history = fit_series(p, s, 300, 0.02);
    ASSERT_EQ(history.size(), 300u);
    EXPECT_LT(history.back(), 1e-2 * start);
}

TEST(VerhulstPearl, Rhs) {
    EXPECT_EQ(vp_rhs(0.0), 0.0);
    EXPECT_EQ(vp_rhs(1.0), 0.0);
    EXPECT_NEAR(vp_rhs(0.1), 0.027, 1e-15);
}

TEST(VerhulstPearl, PerfectFitIsZero) {
    const solve::SolverConfig cfg = vp_grid(10);
    const OrderModel ord = OrderModel::constant(0.8);
    const std::vector<double> x0{kVpInitial};
    const solve::Trajectory tr = solve::solve(
        [](double, std::span<const double> x) { return solve::State{vp_rhs(x[0])}; }, ord, x0, cfg);
    std::vector<double> u_hat;
    for (const auto& x : tr.states) {
        u_hat.push_back(x[0]);
    }
    const LossReport r = vp_network_residual(u_hat, ord, cfg);
    EXPECT_EQ(r.l_eqn, 0.0);
    EXPECT_EQ(r.l_ini, 0.0);
}

TEST(VerhulstPearl, EulerHandRecursion) {
    const solve::SolverConfig cfg = vp_grid(10);
    const std::vector<double> u_hat(11, 0.1);
    const LossReport r = vp_network_residual(u_hat, OrderModel::constant(1.0), cfg, 2.0, 3.0);
    double x = 0.1;
    double l_eqn = 0.0;
    for (int n = 1; n <= 10; ++n) {
        x = x + 0.1 * (0.3 * x - 0.3 * x * x);
        l_eqn += (0.1 - x) * (0.1 - x);
    }
    EXPECT_NEAR(r.l_eqn, l_eqn, 1e-15);
    EXPECT_EQ(r.l_ini, 0.0);
    EXPECT_EQ(r.l_total, 2.0 * r.l_eqn + 3.0 * r.l_ini);

    std::vector<double> off = u_hat;
    off[0] = 0.3;
    const LossReport q = vp_network_residual(off, OrderModel::constant(1.0), cfg, 0.5, 4.0);
    EXPECT_NEAR(q.l_ini, 10 * 0.2 * 0.2, 1e-15);
    EXPECT_EQ(q.l_total, 0.5 * q.l_eqn + 4.0 * q.l_ini);
}

TEST(VerhulstPearl, TapeResidualMatchesPlain) {
    const solve::SolverConfig cfg = vp_grid(12);
    const OrderModel ord = OrderModel::grid(0.0, 1.0, 4, 0.7);
    std::vector<double> u_hat;
    for (int i = 0; i <= 12; ++i) {
        u_hat.push_back(0.1 + 0.01 * i * i / 12.0);
    }
    const LossReport plain = vp_network_residual(u_hat, ord, cfg);
    Tape tape;
    const LossTerms terms =
        vp_network_residual(tape, tape.constant(ad::Tensor::vector(u_hat)), ord, cfg);
    EXPECT_EQ(terms.l_eqn.item(), plain.l_eqn);
    EXPECT_EQ(terms.l_total.item(), plain.l_total);
}

TEST(VerhulstPearl, ShortTrainingIsDeterministicAndImproves) {
    VpConfig cfg;
    cfg.iterations = 200;
    cfg.j_points = 10;
    cfg.seed = 1;
    const VpResult a = train_vp(cfg);
    const VpResult b = train_vp(cfg);
    ASSERT_EQ(a.history.size(), 200u);
    EXPECT_EQ(a.final_report.l_total, b.final_report.l_total);
    EXPECT_LT(a.history.back().l_total, a.history.front().l_total);
    EXPECT_LE(a.final_report.l_total, 1e-2);
    ASSERT_EQ(a.checkpoints.size(), 1u);
    EXPECT_EQ(a.checkpoints[0].iteration, 200u);
    EXPECT_NEAR(a.initial_trace.front().second, 0.8, 1e-9);

    const std::string csv = loss_history_to_csv(a.history);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "iter,l_eqn,l_ini,l_total");
}

TEST(VerhulstPearl, ConfigValidation) {
    VpConfig cfg;
    cfg.iterations = 0;
    EXPECT_THROW(cfg.validate(), DomainError);
    cfg = VpConfig{};
    cfg.lr = -1.0;
    EXPECT_THROW(train_vp(cfg), DomainError);
}
