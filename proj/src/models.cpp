#include "grvfl/models.hpp"

#include "grvfl/graph_embedding.hpp"
#include "grvfl/rng.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace grvfl {

namespace {

constexpr double kMaxCondition = 1e12;

Matrix spd_solve(const Matrix& lhs, const Matrix& rhs, const char* what) {
    Eigen::LLT<Matrix> llt(lhs);
    if (llt.info() != Eigen::Success) {
        throw NumericalError(std::string(what) + ": system is not positive definite (non-finite input?)");
    }
    Matrix x = llt.solve(rhs);
    if (!x.allFinite()) {
        throw NumericalError(std::string(what) + ": solution is not finite");
    }
    return x;
}

void check_c(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) {
        throw InvalidArgument("regularization c must be a positive finite number");
    }
}

}  // namespace

Prediction argmax_prediction(Matrix scores, const ClassOrder& order) {
    if (scores.cols() != 2) {
        throw DimensionError("score matrix must have two columns");
    }
    Prediction p;
    p.labels.reserve(static_cast<std::size_t>(scores.rows()));
    p.class_index.reserve(static_cast<std::size_t>(scores.rows()));
    for (Index i = 0; i < scores.rows(); ++i) {
        const int k = scores(i, 1) > scores(i, 0) ? 1 : 0;
        p.class_index.push_back(k);
        p.labels.push_back(order[static_cast<std::size_t>(k)]);
    }
    p.scores = std::move(scores);
    return p;
}

// ---------------------------------------------------------------------------

Matrix rvfl_design_matrix(const Matrix& x, const FeatureMapParams& map, bool direct_links) {
    if (direct_links) {
        return enhance(x, map).z;
    }
    return hidden_layer(x, map);
}

Matrix solve_ridge_primal(const Matrix& design, const Matrix& targets, double c) {
    check_c(c);
    Matrix lhs = design.transpose() * design;
    lhs.diagonal().array() += 1.0 / c;
    return spd_solve(lhs, design.transpose() * targets, "ridge (primal)");
}

Matrix solve_ridge_dual(const Matrix& design, const Matrix& targets, double c) {
    check_c(c);
    Matrix lhs = design * design.transpose();
    lhs.diagonal().array() += 1.0 / c;
    return design.transpose() * spd_solve(lhs, targets, "ridge (dual)");
}

Matrix solve_ridge(const Matrix& design, const Matrix& targets, double c) {
    if (design.rows() != targets.rows()) {
        throw DimensionError("design and target row counts differ");
    }
    return design.cols() <= design.rows() ? solve_ridge_primal(design, targets, c)
                                          : solve_ridge_dual(design, targets, c);
}

RvflModel train_rvfl(const Matrix& x, const OneHotTargets& y, double c, FeatureMapParams map, bool direct_links) {
    if (x.rows() != y.y.rows()) {
        throw DimensionError("RVFL: " + std::to_string(x.rows()) + " samples but " + std::to_string(y.y.rows()) +
                             " targets");
    }
    RvflModel model;
    model.output_weights = solve_ridge(rvfl_design_matrix(x, map, direct_links), y.y, c);
    model.feature_map = std::move(map);
    model.c = c;
    model.direct_links = direct_links;
    model.class_order = y.class_order;
    return model;
}

Prediction predict_rvfl(const RvflModel& model, const Matrix& x) {
    return argmax_prediction(rvfl_design_matrix(x, model.feature_map, model.direct_links) * model.output_weights,
                             model.class_order);
}

// ---------------------------------------------------------------------------

void HyperParams::validate() const {
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(c1) || !positive(c2) || !positive(c3)) {
        throw InvalidArgument("c1, c2 and c3 must be positive");
    }
    if (!(theta1 >= 0.0) || !(theta2 >= 0.0) || !std::isfinite(theta1) || !std::isfinite(theta2)) {
        throw InvalidArgument("theta1 and theta2 must be nonnegative");
    }
    if (!std::isfinite(rho)) {
        throw InvalidArgument("rho must be finite");
    }
    if (h_a < 1 || h_b < 1) {
        throw InvalidArgument("hidden widths must be at least 1");
    }
    if (!positive(sigma)) {
        throw InvalidArgument("sigma must be positive");
    }
    if (!(ridge >= 0.0)) {
        throw InvalidArgument("ridge must be nonnegative");
    }
}

std::uint64_t view_seed(std::uint64_t model_seed, int view) {
    return derive_seed(model_seed, view == 0 ? 0xA11CEULL : 0xB0BULL);
}

CoupledProblem build_coupled_problem(Matrix z1, Matrix z2, Matrix g1, Matrix g2, Matrix y) {
    if (z1.rows() != z2.rows() || z1.rows() != y.rows()) {
        throw DimensionError("coupled problem: views and targets disagree on the sample count");
    }
    if (g1.rows() != z1.cols() || g1.cols() != z1.cols() || g2.rows() != z2.cols() || g2.cols() != z2.cols()) {
        throw DimensionError("coupled problem: embedding matrices do not match the view widths");
    }
    CoupledProblem p;
    p.z1tz1 = z1.transpose() * z1;
    p.z1tz2 = z1.transpose() * z2;
    p.z2tz2 = z2.transpose() * z2;
    p.z1ty = z1.transpose() * y;
    p.z2ty = z2.transpose() * y;
    p.z1 = std::move(z1);
    p.z2 = std::move(z2);
    p.g1 = std::move(g1);
    p.g2 = std::move(g2);
    p.y = std::move(y);
    return p;
}

CoupledProblem build_coupled_problem(Matrix z1, Matrix z2, const OneHotTargets& y, double sigma, double ridge) {
    if (static_cast<std::size_t>(z1.rows()) != y.class_index.size()) {
        throw DimensionError("coupled problem: label count does not match the sample count");
    }
    EmbeddingMatrix e1 = build_view_graph(z1, y.class_index, sigma, ridge, "view A").embedding;
    EmbeddingMatrix e2 = build_view_graph(z2, y.class_index, sigma, ridge, "view B").embedding;
    CoupledProblem p =
        build_coupled_problem(std::move(z1), std::move(z2), std::move(e1.g), std::move(e2.g), y.y);
    p.ridge_a = e1.ridge_used;
    p.ridge_b = e2.ridge_used;
    return p;
}

CoupledSolution solve_coupled(const CoupledProblem& p, const HyperParams& hyper) {
    const Index d1 = p.z1.cols();
    const Index d2 = p.z2.cols();
    const Index dim = d1 + d2;

    Matrix a(dim, dim);
    a.topLeftCorner(d1, d1) = hyper.c1 * p.z1tz1 + hyper.theta1 * p.g1;
    a.topLeftCorner(d1, d1).diagonal().array() += hyper.c3;
    a.topRightCorner(d1, d2) = hyper.rho * p.z1tz2;
    a.bottomLeftCorner(d2, d1) = hyper.rho * p.z1tz2.transpose();
    a.bottomRightCorner(d2, d2) = hyper.c2 * p.z2tz2 + hyper.theta2 * p.g2;
    a.bottomRightCorner(d2, d2).diagonal().array() += 1.0;

    Matrix b(dim, p.y.cols());
    b.topRows(d1) = (hyper.c1 + hyper.rho) * p.z1ty;
    b.bottomRows(d2) = (hyper.c2 + hyper.rho) * p.z2ty;

    CoupledSolution sol;
    Eigen::PartialPivLU<Matrix> lu(a);
    double rc = lu.rcond();
    sol.diagnostics.condition_estimate = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
    if (!(rc * kMaxCondition >= 1.0)) {
        const double shift = 1e-6 * std::abs(a.trace()) / static_cast<double>(dim);
        a.diagonal().array() += shift;
        lu.compute(a);
        rc = lu.rcond();
        sol.diagnostics.inflated = true;
        sol.diagnostics.inflation = shift;
    }
    Matrix x = lu.solve(b);
    if (!(rc > std::numeric_limits<double>::epsilon()) || !x.allFinite()) {
        std::ostringstream msg;
        msg << "coupled system is singular (condition estimate " << sol.diagnostics.condition_estimate
            << "); lower |rho| or raise c3";
        throw NumericalError(msg.str());
    }
    const double bnorm = b.norm();
    const double rnorm = (a * x - b).norm();
    sol.diagnostics.residual = bnorm > 0.0 ? rnorm / bnorm : rnorm;
    sol.diagnostics.ridge_a = p.ridge_a;
    sol.diagnostics.ridge_b = p.ridge_b;
    sol.beta1 = x.topRows(d1);
    sol.beta2 = x.bottomRows(d2);
    return sol;
}

GrvflMvModel train_grvflmv(const MultiViewDataset& train, const OneHotTargets& y, const HyperParams& hyper,
                           std::uint64_t seed) {
    return train_grvflmv(
        train, y, hyper,
        init_feature_map(train.view_a.cols(), hyper.h_a, hyper.activation, view_seed(seed, 0)),
        init_feature_map(train.view_b.cols(), hyper.h_b, hyper.activation, view_seed(seed, 1)));
}

GrvflMvModel train_grvflmv(const MultiViewDataset& train, const OneHotTargets& y, const HyperParams& hyper,
                           FeatureMapParams map_a, FeatureMapParams map_b) {
    hyper.validate();
    train.validate();
    if (train.rows() < 2) {
        throw InvalidArgument("GRVFL-MV needs at least two training samples");
    }
    if (y.y.rows() != train.rows()) {
        throw DimensionError("GRVFL-MV: target rows do not match the training set");
    }
    const CoupledProblem problem = build_coupled_problem(enhance(train.view_a, map_a).z,
                                                         enhance(train.view_b, map_b).z, y, hyper.sigma,
                                                         hyper.ridge);
    CoupledSolution sol = solve_coupled(problem, hyper);

    GrvflMvModel model;
    model.beta1 = std::move(sol.beta1);
    model.beta2 = std::move(sol.beta2);
    model.map_a = std::move(map_a);
    model.map_b = std::move(map_b);
    model.hyper = hyper;
    model.class_order = y.class_order;
    model.diagnostics = sol.diagnostics;
    return model;
}

Matrix decision_scores(const GrvflMvModel& model, const Matrix& xa, const Matrix& xb) {
    if (xa.rows() != xb.rows()) {
        throw DimensionError("views have different sample counts");
    }
    if (xa.cols() != model.map_a.inputs()) {
        throw DimensionError("view A: expected " + std::to_string(model.map_a.inputs()) + " columns, found " +
                             std::to_string(xa.cols()));
    }
    if (xb.cols() != model.map_b.inputs()) {
        throw DimensionError("view B: expected " + std::to_string(model.map_b.inputs()) + " columns, found " +
                             std::to_string(xb.cols()));
    }
    return 0.5 * (enhance(xa, model.map_a).z * model.beta1 + enhance(xb, model.map_b).z * model.beta2);
}

Prediction predict(const GrvflMvModel& model, const Matrix& xa, const Matrix& xb) {
    return argmax_prediction(decision_scores(model, xa, xb), model.class_order);
}

Objective objective_and_gradient(const Matrix& z1, const Matrix& z2, const Matrix& g1, const Matrix& g2,
                                 const Matrix& y, const HyperParams& hyper, const Matrix& beta1,
                                 const Matrix& beta2) {
    if (z1.cols() != beta1.rows() || z2.cols() != beta2.rows() || g1.rows() != beta1.rows() ||
        g2.rows() != beta2.rows() || z1.rows() != y.rows() || z2.rows() != y.rows() ||
        beta1.cols() != y.cols() || beta2.cols() != y.cols()) {
        throw DimensionError("objective: inconsistent shapes");
    }
    const Matrix r1 = z1 * beta1 - y;
    const Matrix r2 = z2 * beta2 - y;
    const Matrix g1b1 = g1 * beta1;
    const Matrix g2b2 = g2 * beta2;

    Objective out;
    out.value = 0.5 * hyper.c1 * r1.squaredNorm() + 0.5 * hyper.c2 * r2.squaredNorm() +
                0.5 * hyper.c3 * beta1.squaredNorm() + 0.5 * beta2.squaredNorm() +
                0.5 * hyper.theta1 * beta1.cwiseProduct(g1b1).sum() +
                0.5 * hyper.theta2 * beta2.cwiseProduct(g2b2).sum() + hyper.rho * r1.cwiseProduct(r2).sum();

    const Matrix grad1 = hyper.c1 * z1.transpose() * r1 + hyper.c3 * beta1 + hyper.theta1 * g1b1 +
                         hyper.rho * z1.transpose() * r2;
    const Matrix grad2 = hyper.c2 * z2.transpose() * r2 + beta2 + hyper.theta2 * g2b2 +
                         hyper.rho * z2.transpose() * r1;
    out.gradient.resize(grad1.size() + grad2.size());
    out.gradient.head(grad1.size()) = Eigen::Map<const Vector>(grad1.data(), grad1.size());
    out.gradient.tail(grad2.size()) = Eigen::Map<const Vector>(grad2.data(), grad2.size());
    return out;
}

}  // namespace grvfl
