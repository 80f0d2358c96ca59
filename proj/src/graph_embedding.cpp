#include "grvfl/graph_embedding.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>

namespace grvfl {

namespace {

constexpr double kMinReciprocalCondition = 1e-12;

std::optional<Matrix> try_solve(const Matrix& lhs, const Matrix& rhs) {
    Eigen::PartialPivLU<Matrix> lu(lhs);
    const double rc = lu.rcond();
    if (!(rc >= kMinReciprocalCondition)) {
        return std::nullopt;
    }
    Matrix x = lu.solve(rhs);
    if (!x.allFinite()) {
        return std::nullopt;
    }
    return x;
}

}  // namespace

Matrix pairwise_affinity(const Matrix& z, double sigma) {
    if (!(sigma > 0.0)) {
        throw InvalidArgument("kernel scale sigma must be positive");
    }
    const Index l = z.rows();
    const Matrix zt = z.transpose();  // samples as contiguous columns
    const double denom = 2.0 * sigma * sigma;
    Matrix out(l, l);
    for (Index k = 0; k < l; ++k) {
        out(k, k) = 1.0;
        for (Index j = k + 1; j < l; ++j) {
            const double v = std::exp(-(zt.col(k) - zt.col(j)).squaredNorm() / denom);
            out(k, j) = v;
            out(j, k) = v;
        }
    }
    return out;
}

LfdaGraphs lfda_weights(const Matrix& z, std::span<const int> labels, double sigma) {
    if (static_cast<Index>(labels.size()) != z.rows()) {
        throw DimensionError("LFDA weights: " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(z.rows()) + " samples");
    }
    std::map<int, double> class_size;
    for (int c : labels) {
        class_size[c] += 1.0;
    }
    const Index l = z.rows();
    const double n = static_cast<double>(l);
    const Matrix affinity = pairwise_affinity(z, sigma);

    LfdaGraphs g;
    g.sigma = sigma;
    g.intrinsic.resize(l, l);
    g.penalty.resize(l, l);
    for (Index k = 0; k < l; ++k) {
        const double nc = class_size[labels[static_cast<std::size_t>(k)]];
        for (Index j = 0; j < l; ++j) {
            if (labels[static_cast<std::size_t>(k)] == labels[static_cast<std::size_t>(j)]) {
                g.intrinsic(k, j) = affinity(k, j) / nc;
                g.penalty(k, j) = affinity(k, j) * (1.0 / n - 1.0 / nc);
            } else {
                g.intrinsic(k, j) = 0.0;
                g.penalty(k, j) = 1.0 / n;
            }
        }
    }
    return g;
}

Matrix graph_laplacian(const Matrix& weights) {
    if (weights.rows() != weights.cols()) {
        throw DimensionError("graph weight matrix must be square");
    }
    Matrix lap = -weights;
    lap.diagonal() += weights.rowwise().sum();
    return lap;
}

GraphLaplacians laplacians(const LfdaGraphs& graphs) {
    return {graph_laplacian(graphs.intrinsic), graph_laplacian(graphs.penalty)};
}

EmbeddingMatrix embedding_matrix(const Matrix& z, const GraphLaplacians& lap, double ridge,
                                 std::string_view view) {
    if (lap.intrinsic.rows() != z.rows() || lap.penalty.rows() != z.rows()) {
        throw DimensionError(std::string(view) + ": Laplacian size does not match the sample count");
    }
    if (!(ridge >= 0.0)) {
        throw InvalidArgument("ridge must be nonnegative");
    }
    const Index d = z.cols();
    Matrix g_int = z.transpose() * (lap.intrinsic * z);
    Matrix g_pen = z.transpose() * (lap.penalty * z);
    g_int = (g_int + g_int.transpose()) * 0.5;
    g_pen = (g_pen + g_pen.transpose()) * 0.5;

    auto attempt = [&](double r) -> std::optional<Matrix> {
        Matrix lhs = g_pen;
        lhs.diagonal().array() += r;
        return try_solve(lhs, g_int);
    };

    double used = ridge;
    std::optional<Matrix> raw = attempt(ridge);
    if (!raw) {
        const double base = g_pen.diagonal().cwiseAbs().sum() / static_cast<double>(d);
        for (double eps = 1e-8 * base; base > 0.0 && eps <= 1e-2 * base * (1.0 + 1e-9); eps *= 10.0) {
            used = std::max(ridge, eps);
            raw = attempt(used);
            if (raw) {
                break;
            }
        }
    }
    if (!raw) {
        throw NumericalError(std::string(view) +
                             ": penalty Gram matrix Z^t U Z is singular even after ridge escalation");
    }
    EmbeddingMatrix out;
    out.g = (*raw + raw->transpose()) * 0.5;
    out.ridge_used = used;
    return out;
}

ViewGraph build_view_graph(const Matrix& z, std::span<const int> labels, double sigma, double ridge,
                           std::string_view view) {
    ViewGraph vg;
    vg.graphs = lfda_weights(z, labels, sigma);
    vg.laplacians = laplacians(vg.graphs);
    vg.embedding = embedding_matrix(z, vg.laplacians, ridge, view);
    return vg;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    out << std::setprecision(17);
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            out << (c ? "," : "") << m(r, c);
        }
        out << '\n';
    }
}

}  // namespace grvfl
