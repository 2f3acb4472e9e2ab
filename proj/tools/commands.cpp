#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <optional>
#include <thread>

#include <fmt/format.h>

#include "vofde/checkpoint.hpp"
#include "vofde/csv.hpp"
#include "vofde/errors.hpp"
#include "vofde/grad_suite.hpp"
#include "vofde/graph.hpp"
#include "vofde/inverse.hpp"
#include "vofde/kernels.hpp"
#include "vofde/solvers.hpp"

namespace vofde::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct OrderSpec {
    order::OrderKind kind = order::OrderKind::GridInterp;
    double value = 0.8;
    std::string text;
};

OrderSpec parse_order_spec(const std::string& spec, double fallback_value) {
    OrderSpec out;
    out.text = spec;
    const auto colon = spec.find(':');
    out.kind = order::parse_order_kind(spec.substr(0, colon));
    out.value = fallback_value;
    if (colon != std::string::npos) {
        try {
            out.value = csv::parse_real(spec.substr(colon + 1));
        } catch (const FormatError&) {
            throw ConfigError(fmt::format("order '{}': expected kind[:value]", spec));
        }
    }
    return out;
}

order::OrderModel make_order(const OrderSpec& spec, double t0, double t1,
                             std::size_t state_width, std::size_t knots, std::uint64_t seed) {
    order::NetOptions opts;
    opts.init = spec.value;
    opts.seed = seed;
    switch (spec.kind) {
        case order::OrderKind::Constant:
            return order::OrderModel::constant(spec.value);
        case order::OrderKind::GridInterp:
            return order::OrderModel::grid(t0, t1, knots, spec.value);
        case order::OrderKind::TimeNet:
            return order::OrderModel::time_net(t0, t1, opts);
        case order::OrderKind::StateNet:
            return order::OrderModel::state_net(state_width, t0, t1, opts);
    }
    throw ConfigError("unknown order kind");
}

solve::Rhs make_rhs(const std::string& name, double lambda) {
    if (name == "linear") {
        return [lambda](double, std::span<const double> x) {
            solve::State out(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) {
                out[i] = lambda * x[i];
            }
            return out;
        };
    }
    if (name == "logistic") {
        return [](double, std::span<const double> x) {
            solve::State out(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) {
                out[i] = inverse::vp_rhs(x[i]);
            }
            return out;
        };
    }
    if (name == "zero") {
        return [](double, std::span<const double> x) { return solve::State(x.size(), 0.0); };
    }
    throw ConfigError(fmt::format("unknown rhs '{}' (expected linear, logistic or zero)", name));
}

fs::path prepare_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw ConfigError(fmt::format("cannot create output directory '{}': {}", dir.string(),
                                      ec.message()));
    }
    return dir;
}

json trace_json(const order::OrderTrace& trace) {
    json out = json::array();
    for (const auto& [t, a] : trace) {
        out.push_back({t, a});
    }
    return out;
}

// Runs task(0..count-1) on up to `jobs` threads; rethrows the first failure by index.
template <class Task>
void run_parallel(std::size_t count, std::size_t jobs, Task&& task) {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next++;
            if (i >= count) {
                return;
            }
            try {
                task(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, count));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t k = 0; k < threads; ++k) {
            pool.emplace_back(worker);
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace

int cmd_solve(RunConfig& cfg, const Context& ctx) {
    solve::SolverConfig sc;
    sc.scheme = solve::parse_scheme(cfg.text("scheme", "ABM_P"));
    sc.t0 = cfg.real("t0", 0.0);
    sc.t1 = cfg.real("t1", 1.0);
    sc.steps = cfg.count("steps", 100);
    const std::size_t window = cfg.count("memory_window", 0);
    if (window > 0) {
        sc.memory_window = window;
    }
    const std::vector<double> x0 = cfg.reals("x0", {1.0});
    const std::string rhs_name = cfg.text("rhs", "linear");
    const double lambda = cfg.real("lambda", -1.0);
    const OrderSpec spec = parse_order_spec(cfg.text("order", "const"), cfg.real("alpha", 0.8));
    const std::size_t knots = cfg.count("knots", 11);
    const std::uint64_t seed = cfg.count("seed", 0);
    cfg.finish();
    sc.validate();

    const order::OrderModel order = make_order(spec, sc.t0, sc.t1, x0.size(), knots, seed);
    const solve::Trajectory traj = solve::solve(make_rhs(rhs_name, lambda), order, x0, sc);

    const fs::path dir = prepare_dir(ctx.out_dir);
    solve::write_trajectory_csv((dir / "trajectory.csv").string(), traj);
    solve::write_order_trace_csv((dir / "alpha_trace.csv").string(),
                                 solve::order_trace(order, traj));
    std::string line = fmt::format("t={}", csv::format_real(traj.times.back()));
    for (std::size_t i = 0; i < traj.width(); ++i) {
        line += fmt::format(" x_{}={}", i, csv::format_real(traj.states.back()[i]));
    }
    fmt::print("{}\n", line);
    return kExitOk;
}

int cmd_weights(std::size_t n, double alpha, const std::string& scheme_name) {
    const solve::Scheme scheme = solve::parse_scheme(scheme_name);
    frac::WeightRow row;
    double expected = 0.0;
    const double np1 = static_cast<double>(n + 1);
    switch (scheme) {
        case solve::Scheme::L1:
            row = frac::l1_weights(n, alpha, 1.0);
            expected = 1.0;
            break;
        case solve::Scheme::AbmPredictor:
            row = frac::abm_weights(n, alpha, 1.0);
            expected = std::pow(np1, alpha);
            break;
        case solve::Scheme::AbmPredictorCorrector:
            row = frac::corrector_weights(n, alpha, 1.0);
            row.weights.push_back(row.implicit_weight);
            expected = (alpha + 1.0) * std::pow(np1, alpha);
            break;
    }
    std::string line;
    double sum = 0.0;
    for (std::size_t j = 0; j < row.weights.size(); ++j) {
        line += (j == 0 ? "" : ",") + csv::format_real(row.weights[j]);
        sum += row.weights[j];
    }
    fmt::print("{}\n", line);
    fmt::print("scale,{}\n", csv::format_real(row.scale));
    fmt::print("sum,{},expected,{}\n", csv::format_real(sum), csv::format_real(expected));
    if (std::abs(sum - expected) > 1e-10 * std::max(1.0, std::abs(expected))) {
        fmt::print(stderr, "vofde: weight sum {} does not match {}\n", sum, expected);
        return kExitCheckFailed;
    }
    return kExitOk;
}

int cmd_vp_train(RunConfig& cfg, const Context& ctx) {
    const auto iterations = cfg.counts("iterations", {2000});
    const auto j_points = cfg.counts("j_points", {40});
    const auto seeds = cfg.counts("seed", {0});
    inverse::VpConfig base;
    base.lr = cfg.real("lr", base.lr);
    base.lambda1 = cfg.real("lambda1", base.lambda1);
    base.lambda2 = cfg.real("lambda2", base.lambda2);
    base.order_kind = order::parse_order_kind(cfg.text("order_kind", "grid"));
    base.order_init = cfg.real("order_init", base.order_init);
    cfg.finish();

    std::vector<inverse::VpConfig> cells;
    for (std::size_t it : iterations) {
        for (std::size_t j : j_points) {
            for (std::size_t s : seeds) {
                inverse::VpConfig c = base;
                c.iterations = it;
                c.j_points = j;
                c.seed = s;
                c.validate();
                cells.push_back(c);
            }
        }
    }
    if (cells.empty()) {
        throw ConfigError("vp-train: empty sweep");
    }
    const fs::path root = prepare_dir(ctx.out_dir);
    const bool sweep = cells.size() > 1;
    std::vector<inverse::LossReport> finals(cells.size());

    run_parallel(cells.size(), ctx.jobs, [&](std::size_t i) {
        const inverse::VpConfig& c = cells[i];
        const fs::path dir =
            sweep ? prepare_dir(root / fmt::format("iter{}_j{}_seed{}", c.iterations, c.j_points,
                                                   c.seed))
                  : root;
        const inverse::VpResult result = inverse::train_vp(c);
        csv::write_file((dir / "loss_history.csv").string(),
                        inverse::loss_history_to_csv(result.history));
        solve::write_order_trace_csv((dir / "alpha_trace.csv").string(),
                                     result.final_report.learned_alpha_trace);
        solve::write_order_trace_csv((dir / "alpha_trace_initial.csv").string(),
                                     result.initial_trace);
        json checkpoints = json::array();
        for (const auto& r : result.checkpoints) {
            checkpoints.push_back({{"iteration", r.iteration},
                                   {"l_eqn", r.l_eqn},
                                   {"l_ini", r.l_ini},
                                   {"l_total", r.l_total}});
        }
        const json ckpt = {
            {"iterations", c.iterations},
            {"j_points", c.j_points},
            {"seed", c.seed},
            {"lr", c.lr},
            {"lambda1", c.lambda1},
            {"lambda2", c.lambda2},
            {"final_test_loss", result.final_report.l_total},
            {"checkpoints", checkpoints},
            {"net", json::parse(io::params_to_json(result.model.net_params))},
            {"order", json::parse(io::order_model_to_json(result.model.order))},
        };
        csv::write_file((dir / "checkpoint.json").string(), ckpt.dump(2) + "\n");
        finals[i] = result.final_report;
    });

    std::string summary = "iterations,j_points,seed,l_eqn,l_ini,l_total\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        const auto& r = finals[i];
        summary += fmt::format("{},{},{},{},{},{}\n", c.iterations, c.j_points, c.seed,
                               csv::format_real(r.l_eqn), csv::format_real(r.l_ini),
                               csv::format_real(r.l_total));
        fmt::print("iterations={} j_points={} seed={} final_test_loss={:.6e}\n", c.iterations,
                   c.j_points, c.seed, r.l_total);
    }
    if (sweep) {
        csv::write_file((root / "summary.csv").string(), summary);
    }
    return kExitOk;
}

namespace {

struct GnnRun {
    std::uint64_t seed = 0;
    graph::NodeClassifierResult result;
};

json runs_json(const std::vector<GnnRun>& runs) {
    json out = json::array();
    for (const auto& r : runs) {
        out.push_back({{"seed", r.seed},
                       {"train", r.result.train_accuracy},
                       {"val", r.result.val_accuracy},
                       {"test", r.result.test_accuracy},
                       {"best_epoch", r.result.best_epoch},
                       {"epochs", r.result.epochs_run}});
    }
    return out;
}

json mean_json(const std::vector<GnnRun>& runs) {
    double tr = 0.0;
    double va = 0.0;
    double te = 0.0;
    for (const auto& r : runs) {
        tr += r.result.train_accuracy;
        va += r.result.val_accuracy;
        te += r.result.test_accuracy;
    }
    const double n = static_cast<double>(runs.size());
    return {{"train", tr / n}, {"val", va / n}, {"test", te / n}};
}

}  // namespace

int cmd_gnn_train(RunConfig& cfg, const Context& ctx) {
    const std::string dataset = cfg.text("dataset", "sbm");
    const OrderSpec spec = parse_order_spec(cfg.text("order", "grid"), cfg.real("order_init", 0.8));
    const std::size_t knots = cfg.count("knots", 11);
    graph::NodeClassifierConfig nc;
    nc.dynamics = graph::parse_dynamics(cfg.text("dynamics", "linear"));
    nc.t_end = cfg.real("t_end", nc.t_end);
    nc.steps = cfg.count("steps", nc.steps);
    nc.hidden = cfg.count("hidden", nc.hidden);
    nc.max_epochs = cfg.count("epochs", nc.max_epochs);
    nc.patience = cfg.count("patience", nc.patience);
    nc.lr = cfg.real("lr", nc.lr);
    nc.scheme = solve::parse_scheme(cfg.text("scheme", "ABM_P"));
    const std::uint64_t first_seed = cfg.count("seed", 0);
    const std::size_t n_seeds = cfg.count("seeds", 1);
    const bool baseline = cfg.flag("baseline", false);
    graph::SbmOptions sbm;
    sbm.n = cfg.count("sbm_n", sbm.n);
    sbm.classes = cfg.count("sbm_classes", sbm.classes);
    sbm.p_in = cfg.real("sbm_p_in", sbm.p_in);
    sbm.p_out = cfg.real("sbm_p_out", sbm.p_out);
    sbm.dim = cfg.count("sbm_dim", sbm.dim);
    sbm.signal = cfg.real("sbm_signal", sbm.signal);
    cfg.finish();
    nc.validate();
    if (n_seeds == 0) {
        throw ConfigError("gnn-train: seeds must be at least 1");
    }

    std::optional<graph::GraphSpec> shared;
    if (dataset.rfind("csv:", 0) == 0) {
        shared = graph::load_graph_dir(dataset.substr(4));
    } else if (dataset == "sbm") {
        sbm.validate();
    } else {
        throw ConfigError(fmt::format("unknown dataset '{}' (expected sbm or csv:<dir>)", dataset));
    }

    auto run_all = [&](const OrderSpec& os) {
        std::vector<GnnRun> runs(n_seeds);
        run_parallel(n_seeds, ctx.jobs, [&](std::size_t i) {
            const std::uint64_t seed = first_seed + i;
            graph::NodeClassifierConfig c = nc;
            c.seed = seed;
            graph::GraphSpec g;
            if (shared) {
                g = *shared;
            } else {
                graph::SbmOptions o = sbm;
                o.seed = seed;
                g = graph::generate_sbm(o);
            }
            auto model = make_order(os, 0.0, c.t_end, c.hidden, knots, seed);
            runs[i] = {seed, graph::train_node_classifier(g, std::move(model), c)};
        });
        return runs;
    };

    const std::vector<GnnRun> runs = run_all(spec);
    json metrics = {
        {"dataset", dataset},
        {"order", spec.text},
        {"dynamics", graph::to_string(nc.dynamics)},
        {"t_end", nc.t_end},
        {"steps", nc.steps},
        {"runs", runs_json(runs)},
        {"accuracy", mean_json(runs)},
        {"order_trace", trace_json(runs.front().result.order_trace)},
    };
    const double mean_test = metrics["accuracy"]["test"].get<double>();
    fmt::print("order={} test_accuracy={:.4f} ({} seed{})\n", spec.text, mean_test, n_seeds,
               n_seeds == 1 ? "" : "s");
    if (baseline) {
        const OrderSpec base_spec = parse_order_spec("const:1.0", 1.0);
        const std::vector<GnnRun> base_runs = run_all(base_spec);
        metrics["baseline"] = {{"order", base_spec.text},
                               {"runs", runs_json(base_runs)},
                               {"accuracy", mean_json(base_runs)}};
        fmt::print("order={} test_accuracy={:.4f} ({} seed{})\n", base_spec.text,
                   metrics["baseline"]["accuracy"]["test"].get<double>(), n_seeds,
                   n_seeds == 1 ? "" : "s");
    }

    const fs::path dir = prepare_dir(ctx.out_dir);
    csv::write_file((dir / "metrics.json").string(), metrics.dump(2) + "\n");
    solve::write_order_trace_csv((dir / "alpha_trace.csv").string(),
                                 runs.front().result.order_trace);
    return kExitOk;
}

int cmd_sbm_gen(RunConfig& cfg, const Context& ctx) {
    graph::SbmOptions o;
    o.n = cfg.count("n", o.n);
    o.classes = cfg.count("classes", o.classes);
    o.p_in = cfg.real("p_in", o.p_in);
    o.p_out = cfg.real("p_out", o.p_out);
    o.dim = cfg.count("dim", o.dim);
    o.signal = cfg.real("signal", o.signal);
    o.seed = cfg.count("seed", o.seed);
    cfg.finish();
    const graph::GraphSpec g = graph::generate_sbm(o);
    graph::write_graph_csv(prepare_dir(ctx.out_dir).string(), g);
    fmt::print("nodes={} edges={} homophily={:.4f} connected={}\n", g.n_nodes,
               g.undirected_edge_count(), graph::homophily(g), graph::is_connected(g));
    return kExitOk;
}

int cmd_grad_check(RunConfig& cfg, bool inject_fault) {
    const auto names = cfg.texts("suite", check::suite_names());
    const double tol = cfg.real("tolerance", 1e-4);
    cfg.finish();
    for (const auto& name : names) {
        const auto all = check::suite_names();
        if (std::find(all.begin(), all.end(), name) == all.end()) {
            throw ConfigError(fmt::format("unknown grad-check case '{}'", name));
        }
    }
    std::size_t checked = 0;
    std::vector<check::SuiteResult> failures;
    for (const auto& name : names) {
        const check::SuiteResult r = check::run_suite_case(name, tol, inject_fault);
        checked += r.report.parameters_checked;
        fmt::print("{:<11} {:>5} parameters  max rel error {:.3e}  {}\n", r.name,
                   r.report.parameters_checked, r.report.max_rel_error,
                   r.report.passed() ? "ok" : "FAIL");
        if (!r.report.passed()) {
            failures.push_back(r);
        }
    }
    fmt::print("{} parameters checked\n", checked);
    for (const auto& f : failures) {
        fmt::print("FAIL {}: worst parameter {}[{}] autodiff {:.9e} numeric {:.9e} rel {:.3e}\n",
                   f.name, f.report.worst_param, f.report.worst_index, f.report.worst_autodiff,
                   f.report.worst_numeric, f.report.max_rel_error);
    }
    return failures.empty() ? kExitOk : kExitCheckFailed;
}

}  // namespace vofde::cli
