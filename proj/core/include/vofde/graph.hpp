#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "vofde/order_model.hpp"
#include "vofde/solvers.hpp"
#include "vofde/tape.hpp"

namespace vofde::graph {

struct Edge {
    std::size_t src = 0;
    std::size_t dst = 0;
    double weight = 1.0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

enum class Split { None, Train, Val, Test };

std::string to_string(Split split);
Split parse_split(const std::string& text);

// Undirected weighted graph with node features, labels and a split.
// Every edge is stored in both directions; self-loops are not stored.
struct GraphSpec {
    std::size_t n_nodes = 0;
    std::vector<Edge> edges;
    ad::Tensor features;  // [n_nodes, d]
    std::vector<int> labels;
    std::vector<Split> split;

    std::size_t feature_dim() const noexcept { return features.cols(); }
    std::size_t num_classes() const;
    std::size_t undirected_edge_count() const noexcept { return edges.size() / 2; }
    std::vector<bool> mask(Split which) const;
    // Throws FormatError on asymmetric weights, bad indices or shapes.
    void validate() const;
};

// Inserts (i, j, w) and (j, i, w). Self-loops are ignored. A repeated pair
// with the same weight is a no-op; a different weight throws FormatError.
void add_undirected_edge(GraphSpec& g, std::size_t i, std::size_t j, double weight);

struct SbmOptions {
    std::size_t n = 200;
    std::size_t classes = 2;
    double p_in = 0.1;
    double p_out = 0.01;
    std::size_t dim = 8;
    double signal = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

// Balanced stochastic block model. Class c has mean +-signal on coordinate
// c / 2 (sign + for even c) plus unit Gaussian noise; 60/20/20 split.
// Disconnected draws are regenerated up to 10 times, then kept with a
// warning on stderr.
GraphSpec generate_sbm(const SbmOptions& options);

bool is_connected(const GraphSpec& g);
// Fraction of edges joining nodes of the same class.
double homophily(const GraphSpec& g);

// Formats: edges `src,dst,weight`; features `node,f0,...`; labels
// `node,class`; masks `node,split` with split in {train, val, test}.
// A non-numeric first row is treated as a header and skipped.
GraphSpec load_graph_csv(const std::string& edges_path, const std::string& features_path,
                         const std::string& labels_path, const std::string& masks_path);
// edges.csv, features.csv, labels.csv, masks.csv inside dir.
GraphSpec load_graph_dir(const std::string& dir);
void write_graph_csv(const std::string& dir, const GraphSpec& g);

// ---- dynamics ---------------------------------------------------------------

// A_hat = D^{-1/2} (W + I) D^{-1/2}, D the degree matrix of W + I.
ad::Tensor normalized_operator(const GraphSpec& g);
// L = I - A_hat
ad::Tensor laplacian(const GraphSpec& g);
// 1 on edges and on the diagonal, 0 elsewhere.
ad::Tensor edge_support(const GraphSpec& g);

// -L Y
ad::Tensor grand_l_rhs(const ad::Tensor& L, const ad::Tensor& Y);
ad::Var grand_l_rhs(ad::Var L, ad::Var Y);

struct AttentionParams {
    ad::Tensor w_k;  // [d, d_k]
    ad::Tensor w_q;  // [d, d_k]
    std::size_t d_k() const noexcept { return w_k.cols(); }
};

// Row-stochastic a_ij = softmax_j((Y W_K)_i . (Y W_Q)_j / d_k) over the support.
ad::Tensor attention_matrix(const ad::Tensor& support, const ad::Tensor& Y,
                            const AttentionParams& params);
ad::Var attention_matrix(const ad::Tensor& support, ad::Var Y, ad::Var w_k, ad::Var w_q);

// (A(Y) - I) Y
ad::Tensor grand_nl_rhs(const ad::Tensor& support, const ad::Tensor& Y,
                        const AttentionParams& params);
ad::Var grand_nl_rhs(const ad::Tensor& support, ad::Var Y, ad::Var w_k, ad::Var w_q);

// ---- node classification ----------------------------------------------------

enum class Dynamics { Linear, Attention };

std::string to_string(Dynamics dynamics);
Dynamics parse_dynamics(const std::string& text);

struct NodeClassifierConfig {
    Dynamics dynamics = Dynamics::Linear;
    double t_end = 3.0;
    std::size_t steps = 8;
    std::size_t hidden = 16;
    std::size_t max_epochs = 200;
    std::size_t patience = 50;
    double lr = 0.01;
    std::uint64_t seed = 0;
    solve::Scheme scheme = solve::Scheme::AbmPredictor;

    void validate() const;
};

struct NodeClassifierResult {
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
    order::OrderTrace initial_trace;
    order::OrderTrace order_trace;  // alpha(t_n) at the best epoch
    ad::ParamStore params;          // encoder, decoder and attention weights at the best epoch
    order::OrderModel order = order::OrderModel::constant(1.0);  // at the best epoch
};

// Affine encoder d -> hidden, fractional diffusion of the hidden state to
// t_end, affine decoder hidden -> classes; softmax cross-entropy on the train
// mask, Adam, early stopping on validation accuracy. A StateNet order must be
// built for width `hidden`; it sees the row mean of Y. Throws TrainingError
// if the solver or the optimiser diverges.
NodeClassifierResult train_node_classifier(const GraphSpec& g, order::OrderModel order,
                                           const NodeClassifierConfig& cfg);

// Logits for every node under the given parameters.
ad::Var classifier_logits(ad::Tape& tape, const GraphSpec& g, const ad::Tensor& L,
                          const ad::Tensor& support, const ad::ParamStore& params,
                          const order::OrderModel& order, const NodeClassifierConfig& cfg,
                          order::OrderTrace* trace = nullptr);

}  // namespace vofde::graph
