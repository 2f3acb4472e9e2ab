#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vofde/nn.hpp"
#include "vofde/tape.hpp"

namespace vofde::order {

enum class OrderKind { Constant, GridInterp, TimeNet, StateNet };

std::string to_string(OrderKind kind);
OrderKind parse_order_kind(const std::string& text);

inline constexpr double kDefaultFloor = 1e-3;

// eps + (1 - eps) * sigmoid(raw)
double squash(double raw, double floor = kDefaultFloor);
// inverse of squash for a target order in (floor, 1)
double unsquash(double alpha, double floor = kDefaultFloor);

// [sin(t/w_0), cos(t/w_0), sin(t/w_1), ...] with w_k = t_max^(2k/dim).
std::vector<double> sinusoidal_embed(double t, std::size_t dim, double t_max);

struct NetOptions {
    std::size_t embed_dim = 4;
    std::size_t hidden = 30;
    double t_max = 100.0;
    double init = 0.8;  // order at initialisation (head weights start at zero)
    std::uint64_t seed = 0;
};

// A fractional order alpha(t, x) with values in [floor, 1].
//
// Constant returns its stored value unchanged and has no parameters. The
// other kinds pass a learnable raw value through squash():
//   GridInterp  piecewise-linear interpolation of raw knot values in t
//   TimeNet     tanh MLP over the sinusoidal embedding of t
//   StateNet    tanh MLP over [embedding of t, x]
// A StateNet built for width d accepts a state of width d, or a row-major
// k x d matrix state which is reduced to its row mean.
class OrderModel {
public:
    static OrderModel constant(double value);
    static OrderModel grid(double t0, double t1, std::size_t knots = 11, double init = 0.8);
    static OrderModel grid(std::vector<double> knot_times, std::vector<double> raw_values);
    static OrderModel time_net(double t0, double t1, const NetOptions& options = {});
    static OrderModel state_net(std::size_t state_width, double t0, double t1,
                                const NetOptions& options = {});

    OrderKind kind() const noexcept { return kind_; }
    double floor() const noexcept { return floor_; }
    double constant_value() const noexcept { return value_; }
    const std::vector<double>& knot_times() const noexcept { return knot_times_; }
    std::size_t state_width() const noexcept { return state_width_; }
    std::size_t embed_dim() const noexcept { return embed_dim_; }
    std::size_t hidden() const noexcept { return hidden_; }
    double t_max() const noexcept { return t_max_; }
    bool learnable() const noexcept { return kind_ != OrderKind::Constant; }

    ad::ParamStore& params() noexcept { return params_; }
    const ad::ParamStore& params() const noexcept { return params_; }

    double eval(double t, std::span<const double> x = {}) const;

    // Same value as eval(), recorded on the tape with the model's parameters
    // as leaves. x may be omitted for models that ignore the state.
    ad::Var eval(ad::Tape& tape, double t, std::optional<ad::Var> x = std::nullopt) const;

    // Used by deserialisation; validates the parameter layout for the kind.
    static OrderModel from_parts(OrderKind kind, double floor, double value,
                                 std::vector<double> knot_times, std::size_t state_width,
                                 std::size_t embed_dim, std::size_t hidden, double t_max,
                                 ad::ParamStore params);

private:
    OrderModel() = default;

    ad::Mlp network() const;
    std::size_t input_width() const;

    OrderKind kind_ = OrderKind::Constant;
    double floor_ = kDefaultFloor;
    double value_ = 1.0;
    std::vector<double> knot_times_;
    std::size_t state_width_ = 0;
    std::size_t embed_dim_ = 0;
    std::size_t hidden_ = 0;
    double t_max_ = 100.0;
    ad::ParamStore params_;
};

// (t, alpha) pairs
using OrderTrace = std::vector<std::pair<double, double>>;

}  // namespace vofde::order
