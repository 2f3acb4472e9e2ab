#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "commands.hpp"
#include "vofde/errors.hpp"

namespace {

using namespace vofde::cli;

int fail(int code, const std::string& message) {
    fmt::print(stderr, "vofde: error: {}\n", message);
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Variable-order fractional differential equation toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    std::size_t jobs = 1;
    std::optional<std::size_t> seed;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "JSON config file");
        sub->add_option("--set", overrides, "override a config key (key=value)");
        sub->add_option("-o,--out", out_dir, "output directory (default: $VOFDE_OUT or .)");
        sub->add_option("--seed", seed, "random seed");
    };

    auto* solve = app.add_subcommand("solve", "integrate a built-in right-hand side");
    add_common(solve);

    std::size_t n = 0;
    double alpha = 1.0;
    std::string scheme = "ABM_P";
    auto* weights = app.add_subcommand("weights", "print one coefficient row");
    weights->add_option("-n", n, "step index")->required();
    weights->add_option("-a,--alpha", alpha, "fractional order in (0, 1]")->required();
    weights->add_option("-s,--scheme", scheme, "L1, ABM_P or ABM_PC");

    auto* vp = app.add_subcommand("vp-train", "train the Verhulst-Pearl network and order");
    add_common(vp);
    vp->add_option("-j,--jobs", jobs, "parallel sweep cells")->check(CLI::PositiveNumber);

    std::string dataset;
    std::string order;
    bool baseline = false;
    std::optional<std::size_t> seeds;
    auto* gnn = app.add_subcommand("gnn-train", "node classification with fractional diffusion");
    add_common(gnn);
    gnn->add_option("--dataset", dataset, "sbm or csv:<dir>");
    gnn->add_option("--order", order, "const[:v], grid[:init], timenet[:init], statenet[:init]");
    gnn->add_flag("--baseline", baseline, "also run the Constant(1.0) baseline");
    gnn->add_option("--seeds", seeds, "number of seeds");
    gnn->add_option("-j,--jobs", jobs, "parallel seeds")->check(CLI::PositiveNumber);

    auto* sbm = app.add_subcommand("sbm-gen", "write a stochastic block model graph as CSV");
    add_common(sbm);

    bool inject_fault = false;
    auto* grad = app.add_subcommand("grad-check", "finite-difference check of the autodiff stack");
    add_common(grad);
    grad->add_flag("--inject-fault", inject_fault, "add a node with a wrong adjoint");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (weights->parsed()) {
            return cmd_weights(n, alpha, scheme);
        }
        if (seed) {
            overrides.push_back(fmt::format("seed={}", *seed));
        }
        if (!dataset.empty()) {
            overrides.push_back("dataset=" + nlohmann::json(dataset).dump());
        }
        if (!order.empty()) {
            overrides.push_back("order=" + nlohmann::json(order).dump());
        }
        if (baseline) {
            overrides.push_back("baseline=true");
        }
        if (seeds) {
            overrides.push_back(fmt::format("seeds={}", *seeds));
        }
        RunConfig cfg = RunConfig::load(config_path, overrides);
        Context ctx;
        ctx.jobs = jobs;
        if (!out_dir.empty()) {
            ctx.out_dir = out_dir;
        } else if (const char* env = std::getenv("VOFDE_OUT"); env != nullptr && *env != '\0') {
            ctx.out_dir = env;
        } else {
            ctx.out_dir = ".";
        }
        if (solve->parsed()) return cmd_solve(cfg, ctx);
        if (vp->parsed()) return cmd_vp_train(cfg, ctx);
        if (gnn->parsed()) return cmd_gnn_train(cfg, ctx);
        if (sbm->parsed()) return cmd_sbm_gen(cfg, ctx);
        if (grad->parsed()) return cmd_grad_check(cfg, inject_fault);
    } catch (const ConfigError& e) {
        return fail(kExitConfig, e.what());
    } catch (const vofde::DivergenceError& e) {
        return fail(kExitDivergence, e.what());
    } catch (const vofde::TrainingError& e) {
        return fail(kExitDivergence, e.what());
    } catch (const vofde::NumericError& e) {
        return fail(kExitDivergence, e.what());
    } catch (const vofde::OptimizerError& e) {
        return fail(kExitDivergence, e.what());
    } catch (const vofde::DomainError& e) {
        return fail(kExitConfig, e.what());
    } catch (const vofde::FormatError& e) {
        return fail(kExitConfig, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(kExitConfig, e.what());
    } catch (const std::exception& e) {
        return fail(1, e.what());
    }
    return 1;
}
