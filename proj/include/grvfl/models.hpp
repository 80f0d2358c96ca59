#pragma once

#include "grvfl/common.hpp"
#include "grvfl/dataset.hpp"
#include "grvfl/feature_map.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace grvfl {

/// Class scores and the labels they imply. Ties go to column 0.
struct Prediction {
    Matrix scores;  ///< l x 2
    std::vector<std::string> labels;
    std::vector<int> class_index;
};

Prediction argmax_prediction(Matrix scores, const ClassOrder& order);

// ---------------------------------------------------------------------------
// Single-view RVFL / RVFL without direct links

struct RvflModel {
    Matrix output_weights;  ///< (p+h) x 2, or h x 2 without direct links
    FeatureMapParams feature_map;
    double c = 1.0;
    bool direct_links = true;
    ClassOrder class_order;
};

/// [X | H] with direct links, H otherwise.
Matrix rvfl_design_matrix(const Matrix& x, const FeatureMapParams& map, bool direct_links);

/// (D^t D + I/c)^{-1} D^t Y
Matrix solve_ridge_primal(const Matrix& design, const Matrix& targets, double c);
/// D^t (D D^t + I/c)^{-1} Y
Matrix solve_ridge_dual(const Matrix& design, const Matrix& targets, double c);
/// Primal when the feature count does not exceed the sample count, dual otherwise.
Matrix solve_ridge(const Matrix& design, const Matrix& targets, double c);

RvflModel train_rvfl(const Matrix& x, const OneHotTargets& y, double c, FeatureMapParams map, bool direct_links);
Prediction predict_rvfl(const RvflModel& model, const Matrix& x);

// ---------------------------------------------------------------------------
// Two-view GRVFL-MV

struct HyperParams {
    double c1 = 1.0;
    double c2 = 1.0;
    double c3 = 1.0;
    double theta1 = 0.0;
    double theta2 = 0.0;
    double rho = 0.0;  ///< coupling weight of the cross-view residual product
    Index h_a = 103;
    Index h_b = 103;
    double sigma = 1.0;  ///< LFDA kernel scale
    Activation activation = Activation::sigmoid;
    double ridge = 0.0;  ///< initial ridge on Z^t U Z

    void validate() const;
    bool operator==(const HyperParams&) const = default;
};

struct SolveDiagnostics {
    double ridge_a = 0.0;
    double ridge_b = 0.0;
    double residual = 0.0;            ///< |A x - b|_F / |b|_F of the solved system
    double condition_estimate = 0.0;  ///< 1 / rcond of the first factorization
    bool inflated = false;
    double inflation = 0.0;  ///< diagonal shift added to both identity blocks on retry
};

struct GrvflMvModel {
    Matrix beta1;  ///< (n + h_a) x 2
    Matrix beta2;  ///< (m + h_b) x 2
    FeatureMapParams map_a;
    FeatureMapParams map_b;
    HyperParams hyper;
    ClassOrder class_order;
    SolveDiagnostics diagnostics;
};

/// Seed of the view-A (view = 0) or view-B (view = 1) feature map.
std::uint64_t view_seed(std::uint64_t model_seed, int view);

/// Everything in the coupled system that does not depend on c, theta or rho.
/// Grid search reuses one problem across all of those values.
struct CoupledProblem {
    Matrix z1, z2;  ///< enhanced views
    Matrix g1, g2;  ///< symmetric embedding matrices
    Matrix y;       ///< one-hot targets
    Matrix z1tz1, z1tz2, z2tz2, z1ty, z2ty;
    double ridge_a = 0.0;
    double ridge_b = 0.0;
};

/// Builds G1, G2 from LFDA graphs over z1 and z2.
CoupledProblem build_coupled_problem(Matrix z1, Matrix z2, const OneHotTargets& y, double sigma, double ridge);
/// Uses caller-supplied embedding matrices.
CoupledProblem build_coupled_problem(Matrix z1, Matrix z2, Matrix g1, Matrix g2, Matrix y);

struct CoupledSolution {
    Matrix beta1;
    Matrix beta2;
    SolveDiagnostics diagnostics;
};

/// Solves
///   [c3 I + th1 G1 + c1 Z1'Z1   rho Z1'Z2             ] [b1]   [(c1+rho) Z1'Y]
///   [rho Z2'Z1                  I + th2 G2 + c2 Z2'Z2 ] [b2] = [(c2+rho) Z2'Y]
/// by one LU factorization with partial pivoting. If the condition estimate
/// exceeds 1e12 the two identity blocks are shifted once by
/// 1e-6 * |tr A| / dim and the system is refactored.
CoupledSolution solve_coupled(const CoupledProblem& problem, const HyperParams& hyper);

GrvflMvModel train_grvflmv(const MultiViewDataset& train, const OneHotTargets& y, const HyperParams& hyper,
                           std::uint64_t seed);
GrvflMvModel train_grvflmv(const MultiViewDataset& train, const OneHotTargets& y, const HyperParams& hyper,
                           FeatureMapParams map_a, FeatureMapParams map_b);

/// (Z_A beta1 + Z_B beta2) / 2 with each view enhanced by its stored map.
Matrix decision_scores(const GrvflMvModel& model, const Matrix& xa, const Matrix& xb);
Prediction predict(const GrvflMvModel& model, const Matrix& xa, const Matrix& xb);

/// Objective with the slacks eliminated:
///   J = c1/2 |R1|^2 + c2/2 |R2|^2 + c3/2 |b1|^2 + 1/2 |b2|^2
///     + th1/2 tr(b1' G1 b1) + th2/2 tr(b2' G2 b2) + rho tr(R1' R2),
/// R_i = Z_i b_i - Y, Frobenius norms throughout. The gradient is vec(dJ/db1)
/// followed by vec(dJ/db2), both column-major, and assumes symmetric G.
struct Objective {
    double value = 0.0;
    Vector gradient;
};

Objective objective_and_gradient(const Matrix& z1, const Matrix& z2, const Matrix& g1, const Matrix& g2,
                                 const Matrix& y, const HyperParams& hyper, const Matrix& beta1,
                                 const Matrix& beta2);

}  // namespace grvfl
