#include <fmt/format.h>

#include "vofde/csv.hpp"
#include "vofde/errors.hpp"
#include "vofde/solvers.hpp"

namespace vofde::solve {

std::string trajectory_to_csv(const Trajectory& trajectory) {
    std::string out = "t,alpha";
    for (std::size_t i = 0; i < trajectory.width(); ++i) {
        out += fmt::format(",x_{}", i);
    }
    out += '\n';
    for (std::size_t n = 0; n < trajectory.size(); ++n) {
        out += csv::format_real(trajectory.times[n]);
        out += ',';
        out += csv::format_real(trajectory.orders[n]);
        for (double v : trajectory.states[n]) {
            out += ',';
            out += csv::format_real(v);
        }
        out += '\n';
    }
    return out;
}

void write_trajectory_csv(const std::string& path, const Trajectory& trajectory) {
    csv::write_file(path, trajectory_to_csv(trajectory));
}

std::string order_trace_to_csv(const order::OrderTrace& trace) {
    std::string out = "t,alpha\n";
    for (const auto& [t, alpha] : trace) {
        out += csv::format_real(t);
        out += ',';
        out += csv::format_real(alpha);
        out += '\n';
    }
    return out;
}

void write_order_trace_csv(const std::string& path, const order::OrderTrace& trace) {
    csv::write_file(path, order_trace_to_csv(trace));
}

Trajectory trajectory_from_csv(const std::string& text) {
    const auto rows = csv::parse(text);
    if (rows.empty() || rows.front().size() < 3 || rows.front()[0] != "t" ||
        rows.front()[1] != "alpha") {
        throw FormatError("trajectory csv: expected header t,alpha,x_0,...");
    }
    const std::size_t width = rows.front().size() - 2;
    Trajectory traj;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != width + 2) {
            throw FormatError(fmt::format("trajectory csv: row {} has {} fields, expected {}", r,
                                          row.size(), width + 2));
        }
        traj.times.push_back(csv::parse_real(row[0]));
        traj.orders.push_back(csv::parse_real(row[1]));
        State x(width);
        for (std::size_t i = 0; i < width; ++i) {
            x[i] = csv::parse_real(row[i + 2]);
        }
        traj.states.push_back(std::move(x));
    }
    return traj;
}

}  // namespace vofde::solve
