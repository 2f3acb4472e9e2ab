#include <filesystem>
#include <map>

#include <fmt/format.h>

#include "vofde/csv.hpp"
#include "vofde/errors.hpp"
#include "vofde/graph.hpp"

namespace vofde::graph {

namespace {

using Rows = std::vector<std::vector<std::string>>;

Rows read_rows(const std::string& path) {
    Rows rows = csv::parse(csv::read_file(path));
    if (!rows.empty() && !rows.front().empty()) {
        try {
            csv::parse_int(rows.front().front());
        } catch (const FormatError&) {
            rows.erase(rows.begin());
        }
    }
    return rows;
}

std::size_t node_index(const std::string& field, std::size_t n, const std::string& path) {
    const long long v = csv::parse_int(field);
    if (v < 0 || static_cast<std::size_t>(v) >= n) {
        throw FormatError(fmt::format("{}: node {} out of range [0, {})", path, v, n));
    }
    return static_cast<std::size_t>(v);
}

void require_width(const std::vector<std::string>& row, std::size_t width,
                   const std::string& path) {
    if (row.size() != width) {
        throw FormatError(
            fmt::format("{}: expected {} fields, got {}", path, width, row.size()));
    }
}

}  // namespace

GraphSpec load_graph_csv(const std::string& edges_path, const std::string& features_path,
                         const std::string& labels_path, const std::string& masks_path) {
    GraphSpec g;

    const Rows feature_rows = read_rows(features_path);
    if (feature_rows.empty()) {
        throw FormatError(fmt::format("{}: no feature rows", features_path));
    }
    const std::size_t n = feature_rows.size();
    const std::size_t d = feature_rows.front().size() - 1;
    if (d == 0) {
        throw FormatError(fmt::format("{}: no feature columns", features_path));
    }
    g.n_nodes = n;
    g.features = ad::Tensor({n, d});
    std::vector<bool> seen(n, false);
    for (const auto& row : feature_rows) {
        require_width(row, d + 1, features_path);
        const std::size_t i = node_index(row[0], n, features_path);
        if (seen[i]) {
            throw FormatError(fmt::format("{}: node {} listed twice", features_path, i));
        }
        seen[i] = true;
        for (std::size_t k = 0; k < d; ++k) {
            g.features.at(i, k) = csv::parse_real(row[k + 1]);
        }
    }

    g.labels.assign(n, -1);
    for (const auto& row : read_rows(labels_path)) {
        require_width(row, 2, labels_path);
        const std::size_t i = node_index(row[0], n, labels_path);
        const long long y = csv::parse_int(row[1]);
        if (y < 0) {
            throw FormatError(fmt::format("{}: negative class {}", labels_path, y));
        }
        g.labels[i] = static_cast<int>(y);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (g.labels[i] < 0) {
            throw FormatError(fmt::format("{}: node {} has no label", labels_path, i));
        }
    }

    g.split.assign(n, Split::None);
    for (const auto& row : read_rows(masks_path)) {
        require_width(row, 2, masks_path);
        g.split[node_index(row[0], n, masks_path)] = parse_split(row[1]);
    }

    std::map<std::pair<std::size_t, std::size_t>, double> weights;
    for (const auto& row : read_rows(edges_path)) {
        if (row.size() != 2 && row.size() != 3) {
            throw FormatError(fmt::format("{}: expected src,dst,weight", edges_path));
        }
        const std::size_t i = node_index(row[0], n, edges_path);
        const std::size_t j = node_index(row[1], n, edges_path);
        const double w = row.size() == 3 ? csv::parse_real(row[2]) : 1.0;
        if (i == j) {
            continue;
        }
        const auto key = std::pair{std::min(i, j), std::max(i, j)};
        const auto [it, inserted] = weights.emplace(key, w);
        if (!inserted && it->second != w) {
            throw FormatError(fmt::format("{}: edge ({}, {}) given weights {} and {}", edges_path,
                                          i, j, it->second, w));
        }
    }
    std::map<std::pair<std::size_t, std::size_t>, double> directed;
    for (const auto& [key, w] : weights) {
        directed.emplace(key, w);
        directed.emplace(std::pair{key.second, key.first}, w);
    }
    g.edges.reserve(directed.size());
    for (const auto& [key, w] : directed) {
        g.edges.push_back({key.first, key.second, w});
    }
    g.validate();
    return g;
}

GraphSpec load_graph_dir(const std::string& dir) {
    const std::filesystem::path p(dir);
    return load_graph_csv((p / "edges.csv").string(), (p / "features.csv").string(),
                          (p / "labels.csv").string(), (p / "masks.csv").string());
}

void write_graph_csv(const std::string& dir, const GraphSpec& g) {
    g.validate();
    const std::filesystem::path p(dir);
    std::filesystem::create_directories(p);

    std::string edges = "src,dst,weight\n";
    for (const Edge& e : g.edges) {
        if (e.src < e.dst) {
            edges += fmt::format("{},{},{}\n", e.src, e.dst, csv::format_real(e.weight));
        }
    }
    csv::write_file((p / "edges.csv").string(), edges);

    std::string features = "node";
    for (std::size_t k = 0; k < g.feature_dim(); ++k) {
        features += fmt::format(",f{}", k);
    }
    features += '\n';
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
        features += fmt::format("{}", i);
        for (std::size_t k = 0; k < g.feature_dim(); ++k) {
            features += ',';
            features += csv::format_real(g.features.at(i, k));
        }
        features += '\n';
    }
    csv::write_file((p / "features.csv").string(), features);

    std::string labels = "node,class\n";
    std::string masks = "node,split\n";
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
        labels += fmt::format("{},{}\n", i, g.labels[i]);
        if (g.split[i] != Split::None) {
            masks += fmt::format("{},{}\n", i, to_string(g.split[i]));
        }
    }
    csv::write_file((p / "labels.csv").string(), labels);
    csv::write_file((p / "masks.csv").string(), masks);
}

}  // namespace vofde::graph
