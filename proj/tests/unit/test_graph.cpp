#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "vofde/csv.hpp"
#include "vofde/errors.hpp"
#include "vofde/graph.hpp"

using namespace vofde;
using namespace vofde::graph;
using ad::Tensor;

namespace {

GraphSpec tiny(std::size_t n) {
    GraphSpec g;
    g.n_nodes = n;
    g.features = Tensor({n, 1}, 0.0);
    g.labels.assign(n, 0);
    g.split.assign(n, Split::Train);
    return g;
}

GraphSpec two_nodes() {
    GraphSpec g = tiny(2);
    add_undirected_edge(g, 0, 1, 1.0);
    return g;
}

std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("vofde_graph_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST(Graph, IsolatedNodeOperator) {
    const GraphSpec g = tiny(1);
    EXPECT_EQ(normalized_operator(g), Tensor::matrix(1, 1, {1.0}));
    EXPECT_EQ(laplacian(g), Tensor::matrix(1, 1, {0.0}));
}

TEST(Graph, TwoNodeOperator) {
    const GraphSpec g = two_nodes();
    const Tensor a = normalized_operator(g);
    for (double v : a.data()) {
        EXPECT_NEAR(v, 0.5, 1e-15);
    }
    // L = [[.5,-.5],[-.5,.5]] has eigenvalues 0 and 1
    const Tensor L = laplacian(g);
    const double tr = L[0] + L[3];
    const double det = L[0] * L[3] - L[1] * L[2];
    EXPECT_NEAR(tr, 1.0, 1e-15);
    EXPECT_NEAR(det, 0.0, 1e-15);

    const Tensor out = grand_l_rhs(L, Tensor::matrix(2, 1, {1.0, 0.0}));
    EXPECT_NEAR(out[0], -0.5, 1e-15);
    EXPECT_NEAR(out[1], 0.5, 1e-15);
}

TEST(Graph, SpectralFixedPoint) {
    const GraphSpec g = generate_sbm({.n = 40, .p_in = 0.3, .p_out = 0.05, .seed = 2});
    const Tensor a = normalized_operator(g);
    const std::size_t n = g.n_nodes;
    std::vector<double> sqrt_deg(n, 1.0);
    for (const Edge& e : g.edges) {
        sqrt_deg[e.src] += e.weight;
    }
    for (double& d : sqrt_deg) {
        d = std::sqrt(d);
    }
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += a.at(i, j) * sqrt_deg[j];
            EXPECT_EQ(a.at(i, j), a.at(j, i));
        }
        EXPECT_NEAR(acc, sqrt_deg[i], 1e-12);
    }
}

TEST(Graph, GrandLKernelAndZeroOperator) {
    const GraphSpec g = generate_sbm({.n = 30, .p_in = 0.3, .p_out = 0.1, .seed = 4});
    // constant vectors are in the kernel only for the unnormalised form;
    // with symmetric normalisation D^{1/2} 1 is the kernel direction
    const Tensor L = laplacian(g);
    Tensor y({g.n_nodes, 2});
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
        double d = 1.0;
        for (const Edge& e : g.edges) {
            if (e.src == i) d += e.weight;
        }
        y.at(i, 0) = std::sqrt(d);
        y.at(i, 1) = -2.0 * std::sqrt(d);
    }
    const Tensor out1 = grand_l_rhs(L, y);
    for (double v : out1.data()) {
        EXPECT_NEAR(v, 0.0, 1e-12);
    }
    const Tensor zero({g.n_nodes, g.n_nodes}, 0.0);
    const Tensor out2 = grand_l_rhs(zero, y);
    for (double v : out2.data()) {
        EXPECT_EQ(v, 0.0);
    }
    EXPECT_THROW(grand_l_rhs(L, Tensor({g.n_nodes + 1, 2}, 1.0)), ShapeError);
}

TEST(Graph, RegularGraphConstantKernel) {
    // on a regular graph D^{1/2} 1 is constant, so identical rows are fixed
    GraphSpec g = tiny(4);
    for (std::size_t i = 0; i < 4; ++i) {
        add_undirected_edge(g, i, (i + 1) % 4, 1.0);
    }
    const Tensor y = Tensor::matrix(4, 2, {0.3, -1, 0.3, -1, 0.3, -1, 0.3, -1});
    const Tensor out3 = grand_l_rhs(laplacian(g), y);
    for (double v : out3.data()) {
        EXPECT_NEAR(v, 0.0, 1e-15);
    }
}

TEST(Graph, AttentionUniformAndStochastic) {
    const GraphSpec g = two_nodes();
    const Tensor support = edge_support(g);
    const AttentionParams zero{Tensor({1, 1}, 0.0), Tensor({1, 1}, 0.0)};
    const Tensor y = Tensor::matrix(2, 1, {1.0, 0.0});
    const Tensor a = attention_matrix(support, y, zero);
    for (double v : a.data()) {
        EXPECT_DOUBLE_EQ(v, 0.5);
    }
    const Tensor r = grand_nl_rhs(support, y, zero);
    EXPECT_DOUBLE_EQ(r[0], -0.5);
    EXPECT_DOUBLE_EQ(r[1], 0.5);

    const GraphSpec one = tiny(1);
    EXPECT_EQ(attention_matrix(edge_support(one), Tensor::matrix(1, 1, {3.0}), zero),
              Tensor::matrix(1, 1, {1.0}));
}

TEST(Graph, AttentionRowsSumToOne) {
    const GraphSpec g = generate_sbm({.n = 24, .p_in = 0.4, .p_out = 0.1, .seed = 6});
    const Tensor support = edge_support(g);
    std::mt19937_64 rng(12);
    std::normal_distribution<double> n(0.0, 2.0);
    auto random = [&](std::size_t r, std::size_t c) {
        Tensor t({r, c});
        for (double& v : t.data()) v = n(rng);
        return t;
    };
    for (int trial = 0; trial < 1000; ++trial) {
        const Tensor y = random(g.n_nodes, 3);
        const AttentionParams p{random(3, 3), random(3, 3)};
        const Tensor a = attention_matrix(support, y, p);
        for (std::size_t i = 0; i < g.n_nodes; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < g.n_nodes; ++j) {
                if (support.at(i, j) == 0.0) {
                    EXPECT_EQ(a.at(i, j), 0.0);
                }
                s += a.at(i, j);
            }
            ASSERT_NEAR(s, 1.0, 1e-12);
        }
        if (trial == 0) {
            Tensor same = y;
            for (std::size_t i = 0; i < g.n_nodes; ++i) {
                for (std::size_t c = 0; c < 3; ++c) same.at(i, c) = y.at(0, c);
            }
            const Tensor out4 = grand_nl_rhs(support, same, p);
            for (double v : out4.data()) {
                EXPECT_NEAR(v, 0.0, 1e-12);
            }
        }
    }
}

TEST(Graph, TapeDynamicsMatchPlain) {
    const GraphSpec g = generate_sbm({.n = 12, .p_in = 0.5, .p_out = 0.1, .seed = 3});
    const Tensor support = edge_support(g);
    const Tensor L = laplacian(g);
    Tensor y({g.n_nodes, 2});
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::sin(static_cast<double>(i));
    const AttentionParams p{Tensor::matrix(2, 2, {0.5, -0.2, 0.1, 0.3}),
                            Tensor::matrix(2, 2, {-0.4, 0.2, 0.7, 0.1})};
    ad::Tape tape;
    const ad::Var yv = tape.constant(y);
    EXPECT_EQ(grand_l_rhs(tape.constant(L), yv).value(), grand_l_rhs(L, y));
    EXPECT_EQ(grand_nl_rhs(support, yv, tape.constant(p.w_k), tape.constant(p.w_q)).value(),
              grand_nl_rhs(support, y, p));
}

TEST(Graph, Symmetrization) {
    GraphSpec g = tiny(3);
    add_undirected_edge(g, 0, 1, 1.0);
    EXPECT_EQ(g.edges.size(), 2u);
    EXPECT_EQ(g.undirected_edge_count(), 1u);
    add_undirected_edge(g, 1, 0, 1.0);
    EXPECT_EQ(g.edges.size(), 2u);
    add_undirected_edge(g, 2, 2, 1.0);
    EXPECT_EQ(g.edges.size(), 2u);
    EXPECT_THROW(add_undirected_edge(g, 1, 0, 2.0), FormatError);
    EXPECT_NO_THROW(g.validate());
    g.edges.push_back({1, 2, 1.0});
    EXPECT_THROW(g.validate(), FormatError);
}

TEST(Graph, LoaderSingleEdgeAndEmpty) {
    const auto dir = scratch_dir("loader");
    csv::write_file((dir / "edges.csv").string(), "src,dst,weight\n0,1,1.0\n");
    csv::write_file((dir / "features.csv").string(), "node,f0,f1\n0,1,2\n1,3,4\n2,5,6\n");
    csv::write_file((dir / "labels.csv").string(), "node,class\n0,0\n1,1\n2,0\n");
    csv::write_file((dir / "masks.csv").string(), "node,split\n0,train\n1,val\n2,test\n");
    const GraphSpec g = load_graph_dir(dir.string());
    EXPECT_EQ(g.n_nodes, 3u);
    EXPECT_EQ(g.edges.size(), 2u);
    EXPECT_NE(std::find(g.edges.begin(), g.edges.end(), Edge{0, 1, 1.0}), g.edges.end());
    EXPECT_NE(std::find(g.edges.begin(), g.edges.end(), Edge{1, 0, 1.0}), g.edges.end());
    EXPECT_EQ(g.feature_dim(), 2u);
    EXPECT_EQ(g.split[1], Split::Val);
    EXPECT_EQ(g.mask(Split::Test), (std::vector<bool>{false, false, true}));

    csv::write_file((dir / "edges.csv").string(), "");
    const GraphSpec empty = load_graph_dir(dir.string());
    EXPECT_TRUE(empty.edges.empty());
    const Tensor a = normalized_operator(empty);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            EXPECT_EQ(a.at(i, j), i == j ? 1.0 : 0.0);
        }
    }

    csv::write_file((dir / "edges.csv").string(), "0,1,1.0\n1,0,2.0\n");
    EXPECT_THROW(load_graph_dir(dir.string()), FormatError);
    csv::write_file((dir / "edges.csv").string(), "0,7,1.0\n");
    EXPECT_THROW(load_graph_dir(dir.string()), FormatError);
    std::filesystem::remove_all(dir);
}

TEST(Graph, CsvRoundTrip) {
    const GraphSpec g = generate_sbm({.n = 50, .seed = 9});
    const auto dir = scratch_dir("roundtrip");
    write_graph_csv(dir.string(), g);
    const GraphSpec back = load_graph_dir(dir.string());
    EXPECT_EQ(back.n_nodes, g.n_nodes);
    EXPECT_EQ(back.edges, g.edges);
    EXPECT_EQ(back.features, g.features);
    EXPECT_EQ(back.labels, g.labels);
    EXPECT_EQ(back.split, g.split);
    std::filesystem::remove_all(dir);
}

TEST(Sbm, NoCrossEdgesWhenPOutZero) {
    const GraphSpec g = generate_sbm({.n = 100, .p_in = 0.2, .p_out = 0.0, .seed = 1});
    for (const Edge& e : g.edges) {
        EXPECT_EQ(g.labels[e.src], g.labels[e.dst]);
    }
    EXPECT_EQ(homophily(g), 1.0);
}

TEST(Sbm, UniformDensityHomophily) {
    double acc = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        acc += homophily(generate_sbm({.n = 200, .p_in = 0.05, .p_out = 0.05, .seed = seed}));
    }
    EXPECT_NEAR(acc / 20.0, 0.5, 0.05);
}

TEST(Sbm, ExpectedDegrees) {
    double intra = 0.0;
    double inter = 0.0;
    const int seeds = 20;
    for (int seed = 0; seed < seeds; ++seed) {
        const GraphSpec g = generate_sbm({.seed = static_cast<std::uint64_t>(seed)});
        for (const Edge& e : g.edges) {
            (g.labels[e.src] == g.labels[e.dst] ? intra : inter) += 1.0;
        }
    }
    // n_c p with n_c = 99 same-class and 100 other-class candidates
    EXPECT_NEAR(intra / (200.0 * seeds), 9.9, 0.3);
    EXPECT_NEAR(inter / (200.0 * seeds), 1.0, 0.1);
}

TEST(Sbm, SplitAndDeterminism) {
    const GraphSpec a = generate_sbm({.seed = 5});
    const GraphSpec b = generate_sbm({.seed = 5});
    EXPECT_EQ(a.edges, b.edges);
    EXPECT_EQ(a.features, b.features);
    std::size_t train = 0;
    for (bool m : a.mask(Split::Train)) train += m;
    EXPECT_EQ(train, 120u);
    EXPECT_TRUE(is_connected(a));
    EXPECT_NO_THROW(a.validate());
    EXPECT_THROW(generate_sbm({.p_in = 1.5}), DomainError);
}

TEST(NodeClassifier, SignalSeparatesAndNoiseIsChance) {
    NodeClassifierConfig cfg;
    cfg.max_epochs = 100;
    const GraphSpec strong = generate_sbm({.seed = 0});
    const auto r = train_node_classifier(strong, order::OrderModel::grid(0.0, 3.0, 11, 0.8), cfg);
    EXPECT_GE(r.test_accuracy, 0.85);
    EXPECT_EQ(r.order_trace.size(), cfg.steps + 1);
    EXPECT_NEAR(r.initial_trace.front().second, 0.8, 1e-9);

    // with p_in > p_out the graph itself carries the classes, so chance level
    // needs both uninformative features and uninformative structure
    double acc = 0.0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const GraphSpec noise =
            generate_sbm({.p_in = 0.05, .p_out = 0.05, .signal = 0.0, .seed = seed});
        cfg.seed = seed;
        acc += train_node_classifier(noise, order::OrderModel::constant(1.0), cfg).test_accuracy;
    }
    EXPECT_NEAR(acc / 3.0, 0.5, 0.1);
}

TEST(NodeClassifier, Deterministic) {
    NodeClassifierConfig cfg;
    cfg.max_epochs = 20;
    cfg.dynamics = Dynamics::Attention;
    const GraphSpec g = generate_sbm({.n = 60, .p_in = 0.2, .p_out = 0.02, .seed = 3});
    const auto a = train_node_classifier(g, order::OrderModel::grid(0.0, 3.0, 5, 0.8), cfg);
    const auto b = train_node_classifier(g, order::OrderModel::grid(0.0, 3.0, 5, 0.8), cfg);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.order_trace, b.order_trace);
    EXPECT_EQ(a.test_accuracy, b.test_accuracy);
}

TEST(NodeClassifier, ConstantOrderEulerLimit) {
    // Constant(1) with ABM_P is explicit Euler of Y' = -L Y
    const GraphSpec g = generate_sbm({.n = 20, .p_in = 0.4, .p_out = 0.1, .seed = 8});
    const Tensor L = laplacian(g);
    Tensor y({g.n_nodes, 2});
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::cos(0.3 * static_cast<double>(i));
    const std::size_t steps = 1000;
    const double h = 3.0 / steps;
    solve::SolverConfig cfg{.t0 = 0.0, .t1 = 3.0, .steps = steps};
    ad::Tape tape;
    const auto tt = solve::solve_on_tape(
        tape,
        [&](double, ad::Var x) {
            return ad::reshape(grand_l_rhs(tape.constant(L), ad::reshape(x, {g.n_nodes, 2})),
                               {g.n_nodes * 2});
        },
        order::OrderModel::constant(1.0), tape.constant(y.reshaped({y.size()})), cfg);
    Tensor e = y;
    for (std::size_t n = 0; n < steps; ++n) {
        const Tensor d = grand_l_rhs(L, e);
        for (std::size_t i = 0; i < e.size(); ++i) e[i] += h * d[i];
    }
    const Tensor& last = tt.states.back().value();
    for (std::size_t i = 0; i < e.size(); ++i) {
        EXPECT_NEAR(last[i], e[i], 1e-10);
    }
}
