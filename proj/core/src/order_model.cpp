#include "vofde/order_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "vofde/errors.hpp"

namespace vofde::order {

namespace {

constexpr const char* kKnotsName = "order.knots";
constexpr const char* kNetPrefix = "order";

ad::Var squash_on_tape(ad::Var raw, double floor) {
    return ad::add_scalar(ad::scalar_mul(ad::sigmoid(raw), 1.0 - floor), floor);
}

void check_init(double init, double floor) {
    if (!(init > floor && init < 1.0)) {
        throw DomainError(fmt::format(
            "initial order {} must lie strictly inside ({}, 1) for a learnable model", init,
            floor));
    }
}

// interpolation weights over the knots for time t (clamped to the knot range)
std::vector<double> hat_weights(const std::vector<double>& knots, double t) {
    std::vector<double> w(knots.size(), 0.0);
    if (t <= knots.front()) {
        w.front() = 1.0;
        return w;
    }
    if (t >= knots.back()) {
        w.back() = 1.0;
        return w;
    }
    const auto upper = std::upper_bound(knots.begin(), knots.end(), t);
    const std::size_t k = static_cast<std::size_t>(upper - knots.begin()) - 1;
    const double frac = (t - knots[k]) / (knots[k + 1] - knots[k]);
    w[k] = 1.0 - frac;
    w[k + 1] = frac;
    return w;
}

}  // namespace

std::string to_string(OrderKind kind) {
    switch (kind) {
        case OrderKind::Constant:
            return "const";
        case OrderKind::GridInterp:
            return "grid";
        case OrderKind::TimeNet:
            return "timenet";
        case OrderKind::StateNet:
            return "statenet";
    }
    return "unknown";
}

OrderKind parse_order_kind(const std::string& text) {
    if (text == "const" || text == "constant") return OrderKind::Constant;
    if (text == "grid") return OrderKind::GridInterp;
    if (text == "timenet") return OrderKind::TimeNet;
    if (text == "statenet") return OrderKind::StateNet;
    throw FormatError(fmt::format("unknown order kind '{}'", text));
}

double squash(double raw, double floor) {
    const double s = 1.0 / (1.0 + std::exp(-raw));
    return s * (1.0 - floor) + floor;
}

double unsquash(double alpha, double floor) {
    const double p = (alpha - floor) / (1.0 - floor);
    return std::log(p / (1.0 - p));
}

std::vector<double> sinusoidal_embed(double t, std::size_t dim, double t_max) {
    if (dim == 0 || dim % 2 != 0) {
        throw ShapeError(fmt::format("sinusoidal_embed: dim {} must be even and positive", dim));
    }
    if (!(t_max > 0.0)) {
        throw DomainError(fmt::format("sinusoidal_embed: t_max {} must be positive", t_max));
    }
    std::vector<double> out(dim);
    for (std::size_t k = 0; k < dim / 2; ++k) {
        const double omega =
            std::pow(t_max, 2.0 * static_cast<double>(k) / static_cast<double>(dim));
        out[2 * k] = std::sin(t / omega);
        out[2 * k + 1] = std::cos(t / omega);
    }
    return out;
}

OrderModel OrderModel::constant(double value) {
    if (!(value > 0.0 && value <= 1.0)) {
        throw DomainError(fmt::format("constant order {} outside (0, 1]", value));
    }
    OrderModel m;
    m.kind_ = OrderKind::Constant;
    m.value_ = value;
    return m;
}

OrderModel OrderModel::grid(double t0, double t1, std::size_t knots, double init) {
    if (knots < 2) {
        throw ShapeError("grid order model needs at least two knots");
    }
    if (!(t1 > t0)) {
        throw DomainError(fmt::format("grid order model: empty interval [{}, {}]", t0, t1));
    }
    check_init(init, kDefaultFloor);
    std::vector<double> times(knots);
    for (std::size_t k = 0; k < knots; ++k) {
        times[k] = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(knots - 1);
    }
    return grid(std::move(times), std::vector<double>(knots, unsquash(init)));
}

OrderModel OrderModel::grid(std::vector<double> knot_times, std::vector<double> raw_values) {
    if (knot_times.size() < 2 || knot_times.size() != raw_values.size()) {
        throw ShapeError("grid order model: need matching knot times and values (>= 2)");
    }
    for (std::size_t k = 1; k < knot_times.size(); ++k) {
        if (!(knot_times[k] > knot_times[k - 1])) {
            throw DomainError("grid order model: knot times must be strictly increasing");
        }
    }
    OrderModel m;
    m.kind_ = OrderKind::GridInterp;
    m.knot_times_ = std::move(knot_times);
    m.params_.set(kKnotsName, ad::Tensor::vector(std::move(raw_values)));
    return m;
}

OrderModel OrderModel::time_net(double t0, double t1, const NetOptions& options) {
    return state_net(0, t0, t1, options);
}

OrderModel OrderModel::state_net(std::size_t state_width, double t0, double t1,
                                 const NetOptions& options) {
    if (!(t1 > t0)) {
        throw DomainError(fmt::format("order network: empty interval [{}, {}]", t0, t1));
    }
    if (options.embed_dim == 0 || options.embed_dim % 2 != 0) {
        throw ShapeError(fmt::format("order network: embed_dim {} must be even and positive",
                                     options.embed_dim));
    }
    if (options.hidden == 0) {
        throw ShapeError("order network: hidden width must be positive");
    }
    check_init(options.init, kDefaultFloor);

    OrderModel m;
    m.kind_ = state_width == 0 ? OrderKind::TimeNet : OrderKind::StateNet;
    m.state_width_ = state_width;
    m.embed_dim_ = options.embed_dim;
    m.hidden_ = options.hidden;
    m.t_max_ = options.t_max;

    std::mt19937_64 rng(options.seed);
    const ad::Mlp net = m.network();
    net.initialize(m.params_, rng);
    // zero head so the initial order is exactly `init` everywhere
    auto& head = m.params_.at(net.weight_name(1));
    std::fill(head.data().begin(), head.data().end(), 0.0);
    m.params_.at(net.bias_name(1))[0] = unsquash(options.init);
    return m;
}

OrderModel OrderModel::from_parts(OrderKind kind, double floor, double value,
                                  std::vector<double> knot_times, std::size_t state_width,
                                  std::size_t embed_dim, std::size_t hidden, double t_max,
                                  ad::ParamStore params) {
    if (!(floor > 0.0 && floor < 1.0)) {
        throw FormatError(fmt::format("order model: floor {} outside (0, 1)", floor));
    }
    OrderModel m;
    switch (kind) {
        case OrderKind::Constant:
            m = constant(value);
            break;
        case OrderKind::GridInterp: {
            if (!params.contains(kKnotsName)) {
                throw FormatError("grid order model: missing knot values");
            }
            const auto& raw = params.at(kKnotsName).values();
            m = grid(std::move(knot_times), raw);
            break;
        }
        case OrderKind::TimeNet:
        case OrderKind::StateNet: {
            if ((kind == OrderKind::StateNet) != (state_width > 0)) {
                throw FormatError("order network: state width does not match kind");
            }
            m.kind_ = kind;
            m.state_width_ = state_width;
            m.embed_dim_ = embed_dim;
            m.hidden_ = hidden;
            m.t_max_ = t_max;
            const ad::Mlp net = m.network();
            ad::ParamStore reference;
            std::mt19937_64 rng(0);
            net.initialize(reference, rng);
            for (const auto& [name, tensor] : reference) {
                if (!params.contains(name) || params.at(name).shape() != tensor.shape()) {
                    throw FormatError(
                        fmt::format("order network: parameter '{}' missing or misshapen", name));
                }
            }
            m.params_ = std::move(params);
            break;
        }
    }
    m.floor_ = floor;
    return m;
}

ad::Mlp OrderModel::network() const {
    return ad::Mlp(kNetPrefix, {input_width(), hidden_, 1}, ad::Activation::Tanh,
                   ad::Activation::Linear);
}

std::size_t OrderModel::input_width() const { return embed_dim_ + state_width_; }

double OrderModel::eval(double t, std::span<const double> x) const {
    switch (kind_) {
        case OrderKind::Constant:
            return value_;
        case OrderKind::GridInterp: {
            const auto w = hat_weights(knot_times_, t);
            const auto& raw = params_.at(kKnotsName);
            double acc = 0.0;
            for (std::size_t k = 0; k < w.size(); ++k) {
                acc += raw[k] * w[k];
            }
            return squash(acc, floor_);
        }
        case OrderKind::TimeNet: {
            ad::Tape tape;
            return eval(tape, t).item();
        }
        case OrderKind::StateNet: {
            ad::Tape tape;
            const std::vector<double> state(x.begin(), x.end());
            return eval(tape, t, tape.constant(ad::Tensor::vector(state))).item();
        }
    }
    return value_;
}

ad::Var OrderModel::eval(ad::Tape& tape, double t, std::optional<ad::Var> x) const {
    switch (kind_) {
        case OrderKind::Constant:
            return tape.constant(value_);
        case OrderKind::GridInterp: {
            ad::Var raw = tape.param(params_, kKnotsName);
            ad::Var w = tape.constant(ad::Tensor::vector(hat_weights(knot_times_, t)));
            return squash_on_tape(ad::sum(ad::hadamard(raw, w)), floor_);
        }
        case OrderKind::TimeNet:
        case OrderKind::StateNet: {
            ad::Var features = tape.constant(ad::Tensor::vector(sinusoidal_embed(t, embed_dim_, t_max_)));
            if (kind_ == OrderKind::StateNet) {
                if (!x.has_value()) {
                    throw ShapeError("state-dependent order model evaluated without a state");
                }
                const std::size_t n = x->size();
                if (n == 0 || n % state_width_ != 0) {
                    throw ShapeError(fmt::format(
                        "state-dependent order model expects width {} (or a multiple), got {}",
                        state_width_, n));
                }
                ad::Var pooled = *x;
                if (n != state_width_) {
                    pooled = ad::mean_rows(ad::reshape(*x, {n / state_width_, state_width_}));
                }
                const ad::Var parts[] = {features, ad::reshape(pooled, {state_width_})};
                features = ad::concat(parts);
            }
            ad::Var input = ad::reshape(features, {1, input_width()});
            ad::Var out = network().forward(tape, params_, input);
            return squash_on_tape(ad::reshape(out, {1}), floor_);
        }
    }
    return tape.constant(value_);
}

}  // namespace vofde::order
