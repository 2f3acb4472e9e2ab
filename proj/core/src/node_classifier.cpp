#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include <fmt/format.h>

#include "vofde/adam.hpp"
#include "vofde/errors.hpp"
#include "vofde/graph.hpp"
#include "vofde/nn.hpp"

namespace vofde::graph {

namespace {

constexpr const char* kKeyName = "attn.wk";
constexpr const char* kQueryName = "attn.wq";

ad::Mlp encoder(const GraphSpec& g, const NodeClassifierConfig& cfg) {
    return ad::Mlp("enc", {g.feature_dim(), cfg.hidden}, ad::Activation::Linear);
}

ad::Mlp decoder(const GraphSpec& g, const NodeClassifierConfig& cfg) {
    return ad::Mlp("dec", {cfg.hidden, g.num_classes()}, ad::Activation::Linear);
}

double accuracy(const ad::Tensor& logits, const std::vector<int>& labels,
                const std::vector<bool>& mask) {
    const std::size_t c = logits.cols();
    std::size_t total = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!mask[i]) {
            continue;
        }
        std::size_t best = 0;
        for (std::size_t j = 1; j < c; ++j) {
            if (logits.at(i, j) > logits.at(i, best)) {
                best = j;
            }
        }
        ++total;
        correct += static_cast<int>(best) == labels[i] ? 1 : 0;
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace

std::string to_string(Dynamics dynamics) {
    return dynamics == Dynamics::Linear ? "linear" : "attention";
}

Dynamics parse_dynamics(const std::string& text) {
    if (text == "linear" || text == "grand_l" || text == "l") return Dynamics::Linear;
    if (text == "attention" || text == "grand_nl" || text == "nl") return Dynamics::Attention;
    throw FormatError(fmt::format("unknown dynamics '{}' (expected linear or attention)", text));
}

void NodeClassifierConfig::validate() const {
    if (!(t_end > 0.0) || !std::isfinite(t_end)) {
        throw DomainError(fmt::format("node classifier: T must be positive, got {}", t_end));
    }
    if (steps == 0 || hidden == 0 || max_epochs == 0) {
        throw DomainError("node classifier: steps, hidden and epochs must be positive");
    }
    if (!(lr > 0.0) || !std::isfinite(lr)) {
        throw DomainError(fmt::format("node classifier: lr must be positive, got {}", lr));
    }
}

ad::Var classifier_logits(ad::Tape& tape, const GraphSpec& g, const ad::Tensor& L,
                          const ad::Tensor& support, const ad::ParamStore& params,
                          const order::OrderModel& order, const NodeClassifierConfig& cfg,
                          order::OrderTrace* trace) {
    const std::size_t n = g.n_nodes;
    const std::size_t h = cfg.hidden;
    ad::Var x = tape.constant(g.features);
    ad::Var y0 = encoder(g, cfg).forward(tape, params, x);

    solve::TapeRhs rhs;
    if (cfg.dynamics == Dynamics::Linear) {
        ad::Var op = tape.constant(L);
        rhs = [op, n, h](double, ad::Var state) {
            return ad::reshape(grand_l_rhs(op, ad::reshape(state, {n, h})), {n * h});
        };
    } else {
        ad::Var wk = tape.param(params, kKeyName);
        ad::Var wq = tape.param(params, kQueryName);
        rhs = [&support, wk, wq, n, h](double, ad::Var state) {
            return ad::reshape(grand_nl_rhs(support, ad::reshape(state, {n, h}), wk, wq),
                               {n * h});
        };
    }
    solve::SolverConfig sc;
    sc.t0 = 0.0;
    sc.t1 = cfg.t_end;
    sc.steps = cfg.steps;
    sc.scheme = cfg.scheme;
    const solve::TapeTrajectory traj =
        solve::solve_on_tape(tape, rhs, order, ad::reshape(y0, {n * h}), sc);
    if (trace != nullptr) {
        trace->clear();
        for (std::size_t k = 0; k < traj.times.size(); ++k) {
            trace->emplace_back(traj.times[k], traj.orders[k].item());
        }
    }
    ad::Var y_end = ad::reshape(traj.states.back(), {n, h});
    return decoder(g, cfg).forward(tape, params, y_end);
}

NodeClassifierResult train_node_classifier(const GraphSpec& g, order::OrderModel order,
                                           const NodeClassifierConfig& cfg) {
    cfg.validate();
    g.validate();
    if (order.kind() == order::OrderKind::StateNet && order.state_width() != cfg.hidden) {
        throw ShapeError(fmt::format("state-dependent order built for width {}, hidden is {}",
                                     order.state_width(), cfg.hidden));
    }
    const auto train_mask = g.mask(Split::Train);
    const auto val_mask = g.mask(Split::Val);
    const auto test_mask = g.mask(Split::Test);
    if (std::find(train_mask.begin(), train_mask.end(), true) == train_mask.end()) {
        throw DomainError("node classifier: empty training split");
    }

    const bool has_val = std::find(val_mask.begin(), val_mask.end(), true) != val_mask.end();

    std::mt19937_64 rng(cfg.seed);
    ad::ParamStore params;
    encoder(g, cfg).initialize(params, rng);
    decoder(g, cfg).initialize(params, rng);
    ad::Tensor L;
    ad::Tensor support;
    if (cfg.dynamics == Dynamics::Linear) {
        L = laplacian(g);
    } else {
        support = edge_support(g);
        const double bound = std::sqrt(3.0 / static_cast<double>(cfg.hidden));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (const char* name : {kKeyName, kQueryName}) {
            ad::Tensor w({cfg.hidden, cfg.hidden});
            for (double& v : w.data()) {
                v = dist(rng);
            }
            params.set(name, std::move(w));
        }
    }

    const ad::AdamOptions opts{cfg.lr};
    ad::AdamState param_state(opts);
    ad::AdamState order_state(opts);

    NodeClassifierResult result;
    result.order = order;
    double best_val = -1.0;
    double best_val_loss = 0.0;
    std::size_t since_best = 0;
    order::OrderTrace trace;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        try {
            ad::Tape tape;
            ad::Var logits = classifier_logits(tape, g, L, support, params, order, cfg, &trace);
            if (epoch == 1) {
                result.initial_trace = trace;
            }
            ad::Var loss = ad::softmax_cross_entropy(logits, g.labels, train_mask);
            if (!std::isfinite(loss.item()) || !logits.value().all_finite()) {
                throw NumericError("loss is not finite");
            }
            const double val = accuracy(logits.value(), g.labels, val_mask);
            const double val_loss =
                has_val ? ad::softmax_cross_entropy(logits, g.labels, val_mask).item() : 0.0;
            result.epochs_run = epoch;
            if (val > best_val || (val == best_val && val_loss < best_val_loss)) {
                best_val = val;
                best_val_loss = val_loss;
                since_best = 0;
                result.best_epoch = epoch;
                result.train_accuracy = accuracy(logits.value(), g.labels, train_mask);
                result.val_accuracy = val;
                result.test_accuracy = accuracy(logits.value(), g.labels, test_mask);
                result.order_trace = trace;
                result.params = params;
                result.order = order;
            } else if (++since_best > cfg.patience) {
                break;
            }
            tape.backward(loss);
            ad::adam_step(params, tape.gradients(params), param_state);
            if (order.learnable()) {
                ad::adam_step(order.params(), tape.gradients(order.params()), order_state);
            }
        } catch (const NumericError& e) {
            throw TrainingError(fmt::format("node classifier diverged at epoch {}: {}", epoch,
                                            e.what()));
        } catch (const OptimizerError& e) {
            throw TrainingError(fmt::format("node classifier diverged at epoch {}: {}", epoch,
                                            e.what()));
        }
    }
    return result;
}

}  // namespace vofde::graph
