#include "vofde/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "vofde/errors.hpp"

namespace vofde::ad {

namespace {

double evaluate(const LossBuilder& loss) {
    Tape tape;
    return loss(tape).item();
}

}  // namespace

GradCheckReport grad_check(const LossBuilder& loss, std::span<ParamStore* const> stores,
                           double rel_tol, double step) {
    GradCheckReport report;
    report.tolerance = rel_tol;

    std::vector<ParamStore> analytic;
    {
        Tape tape;
        Var l = loss(tape);
        tape.backward(l);
        for (ParamStore* store : stores) {
            analytic.push_back(tape.gradients(*store));
        }
    }

    for (std::size_t s = 0; s < stores.size(); ++s) {
        ParamStore& store = *stores[s];
        for (auto& [name, value] : store) {
            for (std::size_t i = 0; i < value.size(); ++i) {
                const double original = value[i];
                const double h = step * std::max(1.0, std::abs(original));
                auto at = [&](double offset) {
                    value[i] = original + offset;
                    return evaluate(loss);
                };
                const double f_p1 = at(h);
                const double f_m1 = at(-h);
                const double f_p2 = at(2.0 * h);
                const double f_m2 = at(-2.0 * h);
                value[i] = original;

                const double numeric = (8.0 * (f_p1 - f_m1) - (f_p2 - f_m2)) / (12.0 * h);
                const double autodiff = analytic[s].at(name)[i];
                const double rel =
                    std::abs(autodiff - numeric) / std::max(1e-8, std::abs(numeric));
                report.parameters_checked += 1;
                if (!(rel <= report.max_rel_error)) {
                    report.max_rel_error = std::isnan(rel) ? INFINITY : rel;
                    report.worst_param = name;
                    report.worst_index = i;
                    report.worst_autodiff = autodiff;
                    report.worst_numeric = numeric;
                }
            }
        }
    }
    return report;
}

}  // namespace vofde::ad
