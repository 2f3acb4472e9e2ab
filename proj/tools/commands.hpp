#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace vofde::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDivergence = 3;
inline constexpr int kExitCheckFailed = 4;

struct Context {
    std::string out_dir;
    std::size_t jobs = 1;
};

int cmd_solve(RunConfig& cfg, const Context& ctx);
int cmd_weights(std::size_t n, double alpha, const std::string& scheme);
int cmd_vp_train(RunConfig& cfg, const Context& ctx);
int cmd_gnn_train(RunConfig& cfg, const Context& ctx);
int cmd_sbm_gen(RunConfig& cfg, const Context& ctx);
int cmd_grad_check(RunConfig& cfg, bool inject_fault);

}  // namespace vofde::cli
