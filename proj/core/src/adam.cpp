#include "vofde/adam.hpp"

#include <cmath>

#include <fmt/format.h>

#include "vofde/errors.hpp"

namespace vofde::ad {

void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state) {
    for (const auto& [name, value] : params) {
        if (!grads.contains(name)) {
            throw OptimizerError(fmt::format("adam: missing gradient for '{}'", name));
        }
        const Tensor& g = grads.at(name);
        if (g.shape() != value.shape()) {
            throw OptimizerError(fmt::format("adam: gradient shape mismatch for '{}'", name));
        }
        if (!g.all_finite()) {
            throw OptimizerError(fmt::format("adam: non-finite gradient for '{}'", name));
        }
    }

    const AdamOptions& o = state.options;
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(o.beta1, t);
    const double correction2 = 1.0 - std::pow(o.beta2, t);

    for (auto& [name, value] : params) {
        if (!state.first_moment.contains(name)) {
            state.first_moment.set(name, Tensor::zeros_like(value));
            state.second_moment.set(name, Tensor::zeros_like(value));
        }
        Tensor& m = state.first_moment.at(name);
        Tensor& v = state.second_moment.at(name);
        const Tensor& g = grads.at(name);
        for (std::size_t i = 0; i < value.size(); ++i) {
            m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
            v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            value[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
        }
    }
}

}  // namespace vofde::ad
