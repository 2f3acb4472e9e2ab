#include "vofde/grad_suite.hpp"

#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "vofde/graph.hpp"
#include "vofde/inverse.hpp"
#include "vofde/nn.hpp"
#include "vofde/order_model.hpp"
#include "vofde/solvers.hpp"

namespace vofde::check {

namespace {

using ad::ParamStore;
using ad::Tape;
using ad::Tensor;
using ad::Var;

Tensor uniform(std::vector<std::size_t> shape, double lo, double hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Tensor t(std::move(shape));
    for (double& v : t.data()) {
        v = dist(rng);
    }
    return t;
}

// y = x^2 recorded with the adjoint 3x instead of 2x
Var faulty_square(Var x) {
    Tensor out = x.value();
    for (double& v : out.data()) {
        v = v * v;
    }
    const Var in[] = {x};
    return x.tape().record(std::move(out), in, [x](Tape& t, const Tensor& g) {
        Tensor gx = t.value(x);
        for (std::size_t i = 0; i < gx.size(); ++i) {
            gx[i] = 3.0 * gx[i] * g[i];
        }
        t.accumulate(x, gx);
    });
}

Var maybe_fault(Var loss, Var probe, bool inject) {
    return inject ? loss + ad::sum(faulty_square(probe)) : loss;
}

ad::GradCheckReport check(const ad::LossBuilder& loss, std::vector<ParamStore*> stores,
                          double tol) {
    return ad::grad_check(loss, stores, tol);
}

ad::GradCheckReport primitives(double tol, bool fault) {
    std::mt19937_64 rng(11);
    ParamStore p;
    p.set("a", uniform({2, 3}, -1.0, 1.0, rng));
    p.set("b", uniform({3, 2}, -1.0, 1.0, rng));
    p.set("bias", uniform({2}, -0.5, 0.5, rng));
    p.set("pos", uniform({3}, 0.5, 2.0, rng));
    p.set("order", Tensor::scalar(0.7));
    const Tensor mask = Tensor::matrix(2, 2, {1.0, 0.0, 1.0, 1.0});
    const std::vector<int> labels = {1, 0};
    const std::vector<bool> label_mask = {true, true};

    auto loss = [&](Tape& t) {
        Var a = t.param(p, "a");
        Var b = t.param(p, "b");
        Var bias = t.param(p, "bias");
        Var pos = t.param(p, "pos");
        Var alpha = t.param(p, "order");

        Var m = ad::add_row(ad::matmul(a, b), bias);  // [2,2]
        Var acts = ad::sigmoid(m) + ad::tanh(m) * 0.5 - ad::transpose(m);
        Var r = ad::relu(ad::add_scalar(ad::scalar_mul(m, 2.0), 3.0));
        Var sm = ad::row_softmax(acts) + ad::masked_row_softmax(r, mask);
        Var pooled = ad::mean_rows(sm);  // [2]
        Var flat = ad::reshape(ad::hadamard(acts, r), {4});
        const Var parts[] = {pooled, flat};
        Var cat = ad::concat(parts);  // [6]
        Var s1 = ad::mean(ad::square(cat)) + ad::sum(ad::exp(ad::scalar_mul(ad::slice(cat, 1, 3), 0.3)));

        Var logs = ad::sum(ad::log(pos)) + ad::sum(ad::reciprocal(pos)) +
                   ad::sum(ad::pow_var_base(pos, 1.7));
        Var powers = ad::sum(ad::pow_const_base(Tensor::vector({0.0, 1.0, 2.0, 3.5}), alpha)) +
                     ad::pow_const_base(1.3, alpha * 2.0);
        Var gam = ad::gamma_of(2.0 - alpha) + ad::gamma_of(pos);
        const Var terms[] = {ad::slice(pos, 0, 1), ad::slice(pos, 1, 1), ad::slice(pos, 2, 1)};
        Var lc = ad::lincomb(ad::sigmoid(ad::slice(cat, 0, 3)), terms);
        Var ce = ad::softmax_cross_entropy(m, labels, label_mask);
        Var total = s1 + logs * 0.1 + powers * 0.1 + ad::sum(gam) * 0.1 + lc + ce - (-alpha);
        return maybe_fault(total, bias, fault);
    };
    return check(loss, {&p}, tol);
}

ad::GradCheckReport mlp(double tol, bool fault) {
    std::mt19937_64 rng(12);
    ParamStore p;
    ad::Mlp net("mlp", {3, 5, 4}, ad::Activation::Tanh, ad::Activation::Sigmoid);
    ad::Mlp head("head", {4, 3}, ad::Activation::Linear);
    net.initialize(p, rng);
    head.initialize(p, rng);
    for (auto& [name, value] : p) {
        if (name.find(".b") != std::string::npos) {
            value = uniform(value.shape(), -0.3, 0.3, rng);
        }
    }
    const Tensor x = uniform({4, 3}, -1.0, 1.0, rng);
    const std::vector<int> labels = {0, 2, 1, 2};
    const std::vector<bool> mask = {true, true, false, true};
    ad::Mlp relu_net("relu", {3, 4}, ad::Activation::Relu);
    relu_net.initialize(p, rng);
    p.at("relu.b0") = Tensor::vector({0.9, 0.8, 0.7, 0.6});

    auto loss = [&](Tape& t) {
        Var in = t.constant(x);
        Var logits = head.forward(t, p, net.forward(t, p, in));
        Var ce = ad::softmax_cross_entropy(logits, labels, mask);
        Var r = ad::mean(relu_net.forward(t, p, in));
        return maybe_fault(ce + r, t.param(p, "head.b0"), fault);
    };
    return check(loss, {&p}, tol);
}

ad::GradCheckReport solver(double tol, bool fault) {
    order::NetOptions opts;
    opts.init = 0.7;
    opts.seed = 5;
    order::OrderModel alpha = order::OrderModel::state_net(2, 0.0, 1.0, opts);
    // move the head off its zero initialisation so every layer carries gradient
    std::mt19937_64 rng(13);
    for (auto& [name, value] : alpha.params()) {
        for (double& v : value.data()) {
            v += std::uniform_real_distribution<double>(-0.2, 0.2)(rng);
        }
    }
    ParamStore p;
    p.set("x0", Tensor::vector({0.8, -0.4}));
    p.set("k", Tensor::scalar(0.6));

    auto loss = [&](Tape& t) {
        Var k = t.param(p, "k");
        auto rhs = [k](double time, Var x) {
            Var decay = ad::hadamard(ad::neg(k), x);
            return decay + ad::tanh(ad::scalar_mul(x, 0.5)) * std::cos(time);
        };
        Var total = t.constant(0.0);
        for (auto scheme : {solve::Scheme::L1, solve::Scheme::AbmPredictor,
                            solve::Scheme::AbmPredictorCorrector}) {
            solve::SolverConfig cfg;
            cfg.t1 = 1.0;
            cfg.steps = 20;
            cfg.scheme = scheme;
            const auto traj = solve::solve_on_tape(t, rhs, alpha, t.param(p, "x0"), cfg);
            total = total + ad::sum(ad::square(traj.states.back())) +
                    ad::mean(ad::square(traj.states[10]));
        }
        return maybe_fault(total, k, fault);
    };
    return check(loss, {&p, &alpha.params()}, tol);
}

ad::GradCheckReport vp(double tol, bool fault) {
    inverse::VpConfig cfg;
    cfg.j_points = 12;
    cfg.seed = 3;
    inverse::VpModel model = inverse::VpModel::create(cfg);
    std::mt19937_64 rng(14);
    auto& knots = model.order.params().at("order.knots");
    for (double& v : knots.data()) {
        v += std::uniform_real_distribution<double>(-0.3, 0.3)(rng);
    }
    auto loss = [&](Tape& t) {
        const auto terms = inverse::vp_train_loss(t, model, cfg);
        return maybe_fault(terms.l_total, t.param(model.net_params, "net.w2"), fault);
    };
    return check(loss, {&model.net_params, &model.order.params()}, tol);
}

ad::GradCheckReport series(double tol, bool fault) {
    order::NetOptions opts;
    opts.init = 0.6;
    opts.seed = 8;
    inverse::MultiTermProblem problem;
    problem.q = {[](double) { return 1.0; }, [](double t) { return 0.5 + t; }};
    problem.alphas = {order::OrderModel::time_net(0.0, 1.0, opts),
                      order::OrderModel::grid(0.0, 1.0, 5, 0.4)};
    std::mt19937_64 rng(15);
    for (auto& model : problem.alphas) {
        for (auto& [name, value] : model.params()) {
            for (double& v : value.data()) {
                v += std::uniform_real_distribution<double>(-0.2, 0.2)(rng);
            }
        }
    }
    problem.h = [](double t, Var u) { return ad::scalar_mul(u, -0.5) + t; };
    problem.grid = {0.15, 0.4, 0.65, 0.9};
    inverse::PowerSeriesModel s(1.0, {0.1, -0.3, 0.2, 0.05, -0.1, 0.02});

    auto loss = [&](Tape& t) {
        Var r = inverse::equation_residual(t, problem, s);
        return maybe_fault(r, t.param(s.params(), "series.coeffs"), fault);
    };
    return check(loss, {&s.params(), &problem.alphas[0].params(), &problem.alphas[1].params()},
                 tol);
}

ad::GradCheckReport graph_attention(double tol, bool fault) {
    graph::SbmOptions o;
    o.n = 6;
    o.p_in = 0.8;
    o.p_out = 0.2;
    o.dim = 2;
    o.seed = 4;
    const graph::GraphSpec g = graph::generate_sbm(o);
    const Tensor support = graph::edge_support(g);
    std::mt19937_64 rng(16);
    ParamStore p;
    p.set("wk", uniform({2, 2}, -1.0, 1.0, rng));
    p.set("wq", uniform({2, 2}, -1.0, 1.0, rng));
    p.set("y0", uniform({6, 2}, -1.0, 1.0, rng));
    order::OrderModel alpha = order::OrderModel::grid(0.0, 1.0, 4, 0.75);

    auto loss = [&](Tape& t) {
        Var wk = t.param(p, "wk");
        Var wq = t.param(p, "wq");
        auto rhs = [&support, wk, wq](double, Var x) {
            return ad::reshape(graph::grand_nl_rhs(support, ad::reshape(x, {6, 2}), wk, wq),
                               {12});
        };
        solve::SolverConfig cfg;
        cfg.steps = 6;
        const auto traj =
            solve::solve_on_tape(t, rhs, alpha, ad::reshape(t.param(p, "y0"), {12}), cfg);
        Var y = ad::reshape(traj.states.back(), {6, 2});
        Var out = ad::sum(ad::square(y)) + ad::sum(ad::hadamard(y, t.param(p, "y0")));
        return maybe_fault(out, wk, fault);
    };
    return check(loss, {&p, &alpha.params()}, tol);
}

}  // namespace

std::vector<std::string> suite_names() {
    return {"primitives", "mlp", "solver", "vp", "series", "graph"};
}

SuiteResult run_suite_case(const std::string& name, double rel_tol, bool inject_fault) {
    if (name == "primitives") return {name, primitives(rel_tol, inject_fault)};
    if (name == "mlp") return {name, mlp(rel_tol, inject_fault)};
    if (name == "solver") return {name, solver(rel_tol, inject_fault)};
    if (name == "vp") return {name, vp(rel_tol, inject_fault)};
    if (name == "series") return {name, series(rel_tol, inject_fault)};
    if (name == "graph") return {name, graph_attention(rel_tol, inject_fault)};
    throw std::invalid_argument(fmt::format("unknown grad-check case '{}'", name));
}

}  // namespace vofde::check
