#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <random>

#include <fmt/format.h>

#include "vofde/errors.hpp"
#include "vofde/graph.hpp"

namespace vofde::graph {

std::string to_string(Split split) {
    switch (split) {
        case Split::None:
            return "none";
        case Split::Train:
            return "train";
        case Split::Val:
            return "val";
        case Split::Test:
            return "test";
    }
    return "none";
}

Split parse_split(const std::string& text) {
    if (text == "train") return Split::Train;
    if (text == "val" || text == "valid" || text == "validation") return Split::Val;
    if (text == "test") return Split::Test;
    if (text == "none" || text.empty()) return Split::None;
    throw FormatError(fmt::format("unknown split '{}' (expected train, val or test)", text));
}

std::size_t GraphSpec::num_classes() const {
    int hi = -1;
    for (int y : labels) {
        hi = std::max(hi, y);
    }
    return static_cast<std::size_t>(hi + 1);
}

std::vector<bool> GraphSpec::mask(Split which) const {
    std::vector<bool> out(split.size());
    for (std::size_t i = 0; i < split.size(); ++i) {
        out[i] = split[i] == which;
    }
    return out;
}

void GraphSpec::validate() const {
    if (n_nodes == 0) {
        throw FormatError("graph has no nodes");
    }
    if (features.rank() != 2 || features.rows() != n_nodes) {
        throw FormatError(fmt::format("graph: features must be {} x d", n_nodes));
    }
    if (labels.size() != n_nodes || split.size() != n_nodes) {
        throw FormatError(fmt::format("graph: {} nodes but {} labels and {} split entries",
                                      n_nodes, labels.size(), split.size()));
    }
    for (int y : labels) {
        if (y < 0) {
            throw FormatError(fmt::format("graph: negative class label {}", y));
        }
    }
    std::map<std::pair<std::size_t, std::size_t>, double> weights;
    for (const Edge& e : edges) {
        if (e.src >= n_nodes || e.dst >= n_nodes) {
            throw FormatError(fmt::format("graph: edge ({}, {}) out of range for {} nodes", e.src,
                                          e.dst, n_nodes));
        }
        if (e.src == e.dst) {
            throw FormatError(fmt::format("graph: self-loop on node {}", e.src));
        }
        if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
            throw FormatError(fmt::format("graph: edge ({}, {}) has weight {}", e.src, e.dst,
                                          e.weight));
        }
        if (!weights.emplace(std::pair{e.src, e.dst}, e.weight).second) {
            throw FormatError(fmt::format("graph: duplicate edge ({}, {})", e.src, e.dst));
        }
    }
    for (const auto& [key, w] : weights) {
        const auto it = weights.find({key.second, key.first});
        if (it == weights.end() || it->second != w) {
            throw FormatError(
                fmt::format("graph: edge ({}, {}) is not symmetric", key.first, key.second));
        }
    }
}

void add_undirected_edge(GraphSpec& g, std::size_t i, std::size_t j, double weight) {
    if (i == j) {
        return;
    }
    for (const Edge& e : g.edges) {
        if (e.src == i && e.dst == j) {
            if (e.weight != weight) {
                throw FormatError(fmt::format("edge ({}, {}) given weights {} and {}", i, j,
                                              e.weight, weight));
            }
            return;
        }
    }
    g.edges.push_back({i, j, weight});
    g.edges.push_back({j, i, weight});
}

void SbmOptions::validate() const {
    if (classes < 2 || n < classes) {
        throw DomainError(fmt::format("sbm: need 2 <= classes <= n, got {} classes, {} nodes",
                                      classes, n));
    }
    if (!(p_out >= 0.0) || !(p_in <= 1.0) || !(p_out <= p_in)) {
        throw DomainError(
            fmt::format("sbm: need 0 <= p_out <= p_in <= 1, got p_in={} p_out={}", p_in, p_out));
    }
    if (dim < (classes + 1) / 2) {
        throw DomainError(fmt::format("sbm: {} classes need at least {} feature dimensions",
                                      classes, (classes + 1) / 2));
    }
    if (!std::isfinite(signal)) {
        throw DomainError("sbm: signal must be finite");
    }
}

namespace {

GraphSpec draw_sbm(const SbmOptions& o, std::mt19937_64& rng) {
    GraphSpec g;
    g.n_nodes = o.n;
    g.labels.resize(o.n);
    for (std::size_t i = 0; i < o.n; ++i) {
        g.labels[i] = static_cast<int>(i * o.classes / o.n);
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < o.n; ++i) {
        for (std::size_t j = i + 1; j < o.n; ++j) {
            const double p = g.labels[i] == g.labels[j] ? o.p_in : o.p_out;
            if (unit(rng) < p) {
                g.edges.push_back({i, j, 1.0});
                g.edges.push_back({j, i, 1.0});
            }
        }
    }
    std::sort(g.edges.begin(), g.edges.end(), [](const Edge& a, const Edge& b) {
        return std::pair{a.src, a.dst} < std::pair{b.src, b.dst};
    });

    std::normal_distribution<double> noise(0.0, 1.0);
    g.features = ad::Tensor({o.n, o.dim});
    for (std::size_t i = 0; i < o.n; ++i) {
        for (std::size_t k = 0; k < o.dim; ++k) {
            g.features.at(i, k) = noise(rng);
        }
        const auto c = static_cast<std::size_t>(g.labels[i]);
        g.features.at(i, c / 2) += (c % 2 == 0) ? o.signal : -o.signal;
    }

    std::vector<std::size_t> order(o.n);
    for (std::size_t i = 0; i < o.n; ++i) {
        order[i] = i;
    }
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t n_train = o.n * 6 / 10;
    const std::size_t n_val = o.n * 2 / 10;
    g.split.assign(o.n, Split::Test);
    for (std::size_t r = 0; r < o.n; ++r) {
        if (r < n_train) {
            g.split[order[r]] = Split::Train;
        } else if (r < n_train + n_val) {
            g.split[order[r]] = Split::Val;
        }
    }
    return g;
}

}  // namespace

GraphSpec generate_sbm(const SbmOptions& options) {
    options.validate();
    constexpr int kAttempts = 10;
    std::mt19937_64 rng(options.seed);
    GraphSpec g;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
        g = draw_sbm(options, rng);
        if (is_connected(g)) {
            return g;
        }
    }
    fmt::print(stderr, "warning: sbm graph still disconnected after {} attempts (seed {})\n",
               kAttempts, options.seed);
    return g;
}

bool is_connected(const GraphSpec& g) {
    if (g.n_nodes == 0) {
        return true;
    }
    std::vector<std::vector<std::size_t>> adj(g.n_nodes);
    for (const Edge& e : g.edges) {
        adj[e.src].push_back(e.dst);
    }
    std::vector<bool> seen(g.n_nodes, false);
    std::queue<std::size_t> frontier;
    frontier.push(0);
    seen[0] = true;
    std::size_t count = 1;
    while (!frontier.empty()) {
        const std::size_t u = frontier.front();
        frontier.pop();
        for (std::size_t v : adj[u]) {
            if (!seen[v]) {
                seen[v] = true;
                ++count;
                frontier.push(v);
            }
        }
    }
    return count == g.n_nodes;
}

double homophily(const GraphSpec& g) {
    if (g.edges.empty()) {
        return 0.0;
    }
    std::size_t same = 0;
    for (const Edge& e : g.edges) {
        same += g.labels[e.src] == g.labels[e.dst] ? 1 : 0;
    }
    return static_cast<double>(same) / static_cast<double>(g.edges.size());
}

}  // namespace vofde::graph
