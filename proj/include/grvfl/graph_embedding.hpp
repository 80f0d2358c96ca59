#pragma once

#include "grvfl/common.hpp"

#include <filesystem>
#include <span>
#include <string_view>

namespace grvfl {

/// Intrinsic and penalty weight matrices of the LFDA graphs over one view.
struct LfdaGraphs {
    Matrix intrinsic;  ///< l x l, >= 0, zero across classes
    Matrix penalty;    ///< l x l, 1/N across classes, may be negative within a class
    double sigma = 1.0;
};

/// L = D - intrinsic and U = D^p - penalty, D and D^p the row-sum diagonals.
struct GraphLaplacians {
    Matrix intrinsic;
    Matrix penalty;
};

/// Symmetrized solution of (Z^t U Z + r I) G = Z^t L Z.
struct EmbeddingMatrix {
    Matrix g;
    double ridge_used = 0.0;
};

/// exp(-|z_k - z_l|^2 / (2 sigma^2)) for every pair of rows. The diagonal is
/// exactly 1 and the result is exactly symmetric.
Matrix pairwise_affinity(const Matrix& z, double sigma);

/// LFDA weighting on top of pairwise_affinity. With N = l and N_c the size of
/// a sample's class, a same-class pair gets intrinsic lambda/N_c and penalty
/// lambda (1/N - 1/N_c); a cross-class pair gets intrinsic 0 and penalty 1/N.
/// The diagonal follows the same-class rule.
LfdaGraphs lfda_weights(const Matrix& z, std::span<const int> labels, double sigma);

/// D - W with D_kk = sum_l W_kl.
Matrix graph_laplacian(const Matrix& weights);

GraphLaplacians laplacians(const LfdaGraphs& graphs);

/// G = sym((Z^t U Z + r I)^{-1} Z^t L Z).
///
/// The first attempt uses r = `ridge`. If that system is numerically singular
/// (reciprocal condition estimate below 1e-12, or a non-finite answer) the
/// ridge is raised to max(ridge, eps) with eps = 1e-8 * tr|Z^t U Z| / d and
/// multiplied by ten per retry up to 1e-2 * tr|Z^t U Z| / d. Beyond that a
/// NumericalError naming `view` is thrown.
EmbeddingMatrix embedding_matrix(const Matrix& z, const GraphLaplacians& lap, double ridge,
                                 std::string_view view = "view");

/// Weights, Laplacians and G of one view, kept together for inspection.
struct ViewGraph {
    LfdaGraphs graphs;
    GraphLaplacians laplacians;
    EmbeddingMatrix embedding;
};

ViewGraph build_view_graph(const Matrix& z, std::span<const int> labels, double sigma, double ridge,
                           std::string_view view);

/// Writes `m` as plain CSV with 17 significant digits (debug dumps).
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

}  // namespace grvfl
