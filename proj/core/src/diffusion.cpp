#include <cmath>

#include <fmt/format.h>

#include "vofde/errors.hpp"
#include "vofde/graph.hpp"

namespace vofde::graph {

namespace {

void require_square_match(const ad::Tensor& m, const ad::Tensor& y, const char* what) {
    if (m.rank() != 2 || y.rank() != 2 || m.rows() != m.cols() || m.cols() != y.rows()) {
        throw ShapeError(fmt::format("{}: operator and state shapes do not conform", what));
    }
}

}  // namespace

ad::Tensor normalized_operator(const GraphSpec& g) {
    const std::size_t n = g.n_nodes;
    ad::Tensor a({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        a.at(i, i) = 1.0;
    }
    for (const Edge& e : g.edges) {
        a.at(e.src, e.dst) = e.weight;
    }
    std::vector<double> inv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            deg += a.at(i, j);
        }
        inv_sqrt[i] = 1.0 / std::sqrt(deg);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            a.at(i, j) *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    return a;
}

ad::Tensor laplacian(const GraphSpec& g) {
    ad::Tensor l = normalized_operator(g);
    for (double& v : l.data()) {
        v = -v;
    }
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
        l.at(i, i) += 1.0;
    }
    return l;
}

ad::Tensor edge_support(const GraphSpec& g) {
    const std::size_t n = g.n_nodes;
    ad::Tensor s({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        s.at(i, i) = 1.0;
    }
    for (const Edge& e : g.edges) {
        s.at(e.src, e.dst) = 1.0;
    }
    return s;
}

ad::Tensor grand_l_rhs(const ad::Tensor& L, const ad::Tensor& Y) {
    require_square_match(L, Y, "grand_l_rhs");
    ad::Tape tape;
    return grand_l_rhs(tape.constant(L), tape.constant(Y)).value();
}

ad::Var grand_l_rhs(ad::Var L, ad::Var Y) {
    require_square_match(L.value(), Y.value(), "grand_l_rhs");
    return ad::neg(ad::matmul(L, Y));
}

ad::Var attention_matrix(const ad::Tensor& support, ad::Var Y, ad::Var w_k, ad::Var w_q) {
    require_square_match(support, Y.value(), "attention_matrix");
    const ad::Tensor& wk = w_k.value();
    const ad::Tensor& wq = w_q.value();
    if (wk.rank() != 2 || wk.shape() != wq.shape() || wk.rows() != Y.value().cols()) {
        throw ShapeError(fmt::format("attention_matrix: W_K and W_Q must both be {} x d_k",
                                     Y.value().cols()));
    }
    const double d_k = static_cast<double>(wk.cols());
    ad::Var keys = ad::matmul(Y, w_k);
    ad::Var queries = ad::matmul(Y, w_q);
    ad::Var logits = ad::scalar_mul(ad::matmul(keys, ad::transpose(queries)), 1.0 / d_k);
    return ad::masked_row_softmax(logits, support);
}

ad::Tensor attention_matrix(const ad::Tensor& support, const ad::Tensor& Y,
                            const AttentionParams& params) {
    ad::Tape tape;
    return attention_matrix(support, tape.constant(Y), tape.constant(params.w_k),
                            tape.constant(params.w_q))
        .value();
}

ad::Var grand_nl_rhs(const ad::Tensor& support, ad::Var Y, ad::Var w_k, ad::Var w_q) {
    return ad::matmul(attention_matrix(support, Y, w_k, w_q), Y) - Y;
}

ad::Tensor grand_nl_rhs(const ad::Tensor& support, const ad::Tensor& Y,
                        const AttentionParams& params) {
    ad::Tape tape;
    return grand_nl_rhs(support, tape.constant(Y), tape.constant(params.w_k),
                        tape.constant(params.w_q))
        .value();
}

}  // namespace vofde::graph
