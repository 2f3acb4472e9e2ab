#pragma once

#include <string>
#include <vector>

#include "vofde/grad_check.hpp"

namespace vofde::check {

// Named gradient checks over the autodiff stack:
//   primitives  every tape primitive in one scalar loss
//   mlp         tanh / sigmoid / relu MLP with a cross-entropy head
//   solver      20-step L1, ABM_P and ABM_PC unrolls with a StateNet order
//   vp          Verhulst-Pearl network residual (N = 12, grid order)
//   series      multi-term power-series residual with a TimeNet order
//   graph       attention dynamics through the ABM predictor
std::vector<std::string> suite_names();

struct SuiteResult {
    std::string name;
    ad::GradCheckReport report;
};

// Runs one named case. inject_fault adds a node whose adjoint is wrong by
// design (negative control). Throws std::invalid_argument for unknown names.
SuiteResult run_suite_case(const std::string& name, double rel_tol = 1e-4,
                           bool inject_fault = false);

}  // namespace vofde::check
