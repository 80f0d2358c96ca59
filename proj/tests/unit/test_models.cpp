#include "doctest.h"

#include "grvfl/graph_embedding.hpp"
#include "grvfl/model_io.hpp"
#include "grvfl/models.hpp"
#include "test_util.hpp"

#include <Eigen/Dense>

using namespace grvfl;
using testutil::rel_diff;

namespace {

OneHotTargets targets_for(const std::vector<std::string>& labels) { return one_hot(labels); }

Matrix random_targets(Index rows, Rng& rng) {
    std::vector<std::string> labels;
    for (Index i = 0; i < rows; ++i) {
        labels.push_back(i < 2 ? std::to_string(i) : std::to_string(rng.below(2)));
    }
    return one_hot(labels).y;
}

// Central finite differences of J over every coordinate of (beta1, beta2),
// in the same column-major order as the analytic gradient.
Vector fd_gradient(const Matrix& z1, const Matrix& z2, const Matrix& g1, const Matrix& g2, const Matrix& y,
                   const HyperParams& h, const Matrix& b1, const Matrix& b2, double step) {
    Vector out(b1.size() + b2.size());
    Index k = 0;
    auto probe = [&](Matrix& target, Index i, Index j, const Matrix& other, bool first) {
        const double keep = target(i, j);
        target(i, j) = keep + step;
        const double plus = first ? objective_and_gradient(z1, z2, g1, g2, y, h, target, other).value
                                  : objective_and_gradient(z1, z2, g1, g2, y, h, other, target).value;
        target(i, j) = keep - step;
        const double minus = first ? objective_and_gradient(z1, z2, g1, g2, y, h, target, other).value
                                   : objective_and_gradient(z1, z2, g1, g2, y, h, other, target).value;
        target(i, j) = keep;
        return (plus - minus) / (2.0 * step);
    };
    Matrix m1 = b1;
    Matrix m2 = b2;
    for (Index j = 0; j < m1.cols(); ++j)
        for (Index i = 0; i < m1.rows(); ++i) out(k++) = probe(m1, i, j, m2, true);
    for (Index j = 0; j < m2.cols(); ++j)
        for (Index i = 0; i < m2.rows(); ++i) out(k++) = probe(m2, i, j, m1, false);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// RVFL

TEST_CASE("ridge hand examples") {
    const Matrix d = Matrix::Identity(2, 2);
    CHECK(rel_diff(solve_ridge(d, Matrix::Identity(2, 2), 1.0), 0.5 * Matrix::Identity(2, 2)) <= 1e-15);
    CHECK(solve_ridge(d, Matrix::Zero(2, 2), 1.0).isZero(0.0));
}

TEST_CASE("primal and dual ridge agree") {
    Rng rng(31);
    const Matrix d = testutil::normal_matrix(5, 3, rng);
    const Matrix y = testutil::normal_matrix(5, 2, rng);
    const Matrix p = solve_ridge_primal(d, y, 10.0);
    const Matrix q = solve_ridge_dual(d, y, 10.0);
    CHECK(rel_diff(p, q) <= 1e-8);
    // Independent normal-equation oracle.
    const Matrix ref = (d.transpose() * d + Matrix::Identity(3, 3) / 10.0).inverse() * d.transpose() * y;
    CHECK(rel_diff(p, ref) <= 1e-12);
}

TEST_CASE("solve_ridge picks the branch by shape") {
    Rng rng(32);
    const Matrix tall = testutil::normal_matrix(6, 4, rng);
    const Matrix wide = testutil::normal_matrix(4, 6, rng);
    const Matrix y6 = testutil::normal_matrix(6, 2, rng);
    const Matrix y4 = testutil::normal_matrix(4, 2, rng);
    CHECK(solve_ridge(tall, y6, 2.0) == solve_ridge_primal(tall, y6, 2.0));
    CHECK(solve_ridge(wide, y4, 2.0) == solve_ridge_dual(wide, y4, 2.0));
    CHECK_THROWS_AS(solve_ridge(tall, y6, 0.0), InvalidArgument);
}

TEST_CASE("rvfl output shapes follow the direct-link flag") {
    Rng rng(33);
    const Matrix x = testutil::normal_matrix(10, 3, rng);
    const auto y = targets_for({"a", "b", "a", "b", "a", "b", "a", "b", "a", "b"});
    const auto with = train_rvfl(x, y, 1.0, init_feature_map(3, 4, Activation::sigmoid, 1), true);
    const auto without = train_rvfl(x, y, 1.0, init_feature_map(3, 4, Activation::sigmoid, 1), false);
    CHECK(with.output_weights.rows() == 7);
    CHECK(without.output_weights.rows() == 4);
    CHECK(rvfl_design_matrix(x, with.feature_map, false) == hidden_layer(x, with.feature_map));
}

TEST_CASE("rvfl prediction rules") {
    RvflModel m;
    m.feature_map = init_feature_map(2, 3, Activation::sigmoid, 4);
    m.output_weights = Matrix::Zero(5, 2);
    m.class_order = {"lo", "hi"};
    const auto p = predict_rvfl(m, Matrix::Ones(3, 2));
    CHECK(p.scores.isZero(0.0));
    CHECK(p.labels == std::vector<std::string>{"lo", "lo", "lo"});
    CHECK_THROWS_AS(predict_rvfl(m, Matrix::Ones(3, 3)), DimensionError);

    Matrix s(1, 2);
    s << 0.2, 0.9;
    CHECK(argmax_prediction(s, {"a", "b"}).labels[0] == "b");
}

TEST_CASE("rvfl interpolates a single point with large c") {
    Matrix x(1, 2);
    x << 0.3, -0.7;
    OneHotTargets y;
    y.y = Matrix(1, 2);
    y.y << 0, 1;
    y.class_order = {"a", "b"};
    y.class_index = {1};
    const auto m = train_rvfl(x, y, 1e6, init_feature_map(2, 5, Activation::sigmoid, 9), true);
    const auto p = predict_rvfl(m, x);
    CHECK(p.labels[0] == "b");
    CHECK(p.scores(0, 1) == doctest::Approx(1.0).epsilon(1e-4));
}

// ---------------------------------------------------------------------------
// Objective

TEST_CASE("objective vanishes at zero weights and zero targets") {
    Rng rng(40);
    const Matrix z1 = testutil::normal_matrix(6, 3, rng);
    const Matrix z2 = testutil::normal_matrix(6, 2, rng);
    HyperParams h;
    h.theta1 = h.theta2 = 0.3;
    h.rho = 0.1;
    const auto o = objective_and_gradient(z1, z2, Matrix::Identity(3, 3), Matrix::Identity(2, 2),
                                          Matrix::Zero(6, 2), h, Matrix::Zero(3, 2), Matrix::Zero(2, 2));
    CHECK(o.value == 0.0);
    CHECK(o.gradient.isZero(0.0));
}

TEST_CASE("objective splits into two ridge terms when uncoupled") {
    Rng rng(41);
    const Matrix z1 = testutil::normal_matrix(7, 3, rng);
    const Matrix z2 = testutil::normal_matrix(7, 4, rng);
    const Matrix y = random_targets(7, rng);
    const Matrix b1 = testutil::normal_matrix(3, 2, rng);
    const Matrix b2 = testutil::normal_matrix(4, 2, rng);
    HyperParams h;
    h.c1 = 2.0;
    h.c2 = 0.5;
    h.c3 = 3.0;
    const auto o = objective_and_gradient(z1, z2, Matrix::Zero(3, 3), Matrix::Zero(4, 4), y, h, b1, b2);
    const double part1 = 1.0 * (z1 * b1 - y).squaredNorm() + 1.5 * b1.squaredNorm();
    const double part2 = 0.25 * (z2 * b2 - y).squaredNorm() + 0.5 * b2.squaredNorm();
    CHECK(o.value == doctest::Approx(part1 + part2).epsilon(1e-13));
}

TEST_CASE("analytic gradient matches finite differences") {
    Rng rng(42);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix z1 = testutil::normal_matrix(9, 4, rng);
        const Matrix z2 = testutil::normal_matrix(9, 3, rng);
        const Matrix g1a = testutil::normal_matrix(4, 4, rng);
        const Matrix g2a = testutil::normal_matrix(3, 3, rng);
        const Matrix y = random_targets(9, rng);
        HyperParams h;
        h.c1 = 0.5 + rng.uniform01();
        h.c2 = 0.5 + rng.uniform01();
        h.c3 = 0.5 + rng.uniform01();
        h.theta1 = rng.uniform01();
        h.theta2 = rng.uniform01();
        h.rho = rng.uniform(-0.3, 0.3);
        const Matrix b1 = testutil::normal_matrix(4, 2, rng);
        const Matrix b2 = testutil::normal_matrix(3, 2, rng);
        const Matrix g1 = g1a + g1a.transpose();
        const Matrix g2 = g2a + g2a.transpose();
        const auto o = objective_and_gradient(z1, z2, g1, g2, y, h, b1, b2);
        const Vector fd = fd_gradient(z1, z2, g1, g2, y, h, b1, b2, 1e-5);
        CHECK((o.gradient - fd).cwiseAbs().maxCoeff() <= 1e-6 * (1.0 + o.gradient.cwiseAbs().maxCoeff()));
    }
}

// ---------------------------------------------------------------------------
// Coupled solve

TEST_CASE("returned weights are a stationary point of the objective") {
    Rng rng(50);
    const Index l = 12;
    MultiViewDataset ds;
    ds.view_a = testutil::normal_matrix(l, 3, rng);
    ds.view_b = testutil::normal_matrix(l, 2, rng);
    for (Index i = 0; i < l; ++i) ds.labels.push_back(i % 3 == 0 ? "x" : "y");
    const auto y = one_hot(ds.labels);
    HyperParams h;
    h.theta1 = h.theta2 = 0.1;
    h.rho = 0.01;
    h.h_a = h.h_b = 5;
    const auto model = train_grvflmv(ds, y, h, 77);
    const Matrix z1 = enhance(ds.view_a, model.map_a).z;
    const Matrix z2 = enhance(ds.view_b, model.map_b).z;
    const Matrix g1 = build_view_graph(z1, y.class_index, h.sigma, h.ridge, "A").embedding.g;
    const Matrix g2 = build_view_graph(z2, y.class_index, h.sigma, h.ridge, "B").embedding.g;
    const auto o = objective_and_gradient(z1, z2, g1, g2, y.y, h, model.beta1, model.beta2);
    const Vector fd = fd_gradient(z1, z2, g1, g2, y.y, h, model.beta1, model.beta2, 1e-5);
    CHECK(fd.cwiseAbs().maxCoeff() <= 1e-6 * (1.0 + std::abs(o.value)));
    CHECK(o.gradient.cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + std::abs(o.value)));
    CHECK(model.diagnostics.residual < 1e-12);
}

TEST_CASE("uncoupled system matches two standalone ridge solves") {
    Rng rng(51);
    for (int trial = 0; trial < 5; ++trial) {
        const Index l = 15;
        const Matrix z1 = testutil::normal_matrix(l, 6, rng);
        const Matrix z2 = testutil::normal_matrix(l, 4, rng);
        const Matrix y = random_targets(l, rng);
        HyperParams h;
        h.c1 = 3.0;
        h.c2 = 0.7;
        h.c3 = 2.0;
        const auto p = build_coupled_problem(z1, z2, Matrix::Zero(6, 6), Matrix::Zero(4, 4), y);
        const auto s = solve_coupled(p, h);
        const Matrix ref1 = (h.c3 * Matrix::Identity(6, 6) + h.c1 * z1.transpose() * z1)
                                .colPivHouseholderQr()
                                .solve(h.c1 * z1.transpose() * y);
        const Matrix ref2 = (Matrix::Identity(4, 4) + h.c2 * z2.transpose() * z2)
                                .colPivHouseholderQr()
                                .solve(h.c2 * z2.transpose() * y);
        CHECK(rel_diff(s.beta1, ref1) <= 1e-10);
        CHECK(rel_diff(s.beta2, ref2) <= 1e-10);
        CHECK(rel_diff(s.beta1, solve_ridge_primal(z1, y, h.c1 / h.c3)) <= 1e-10);
        CHECK(rel_diff(s.beta2, solve_ridge_primal(z2, y, h.c2)) <= 1e-10);
    }
}

TEST_CASE("identical views give identical weights") {
    const auto ds0 = testutil::blobs(20, 3, 3, 5);
    MultiViewDataset ds = ds0;
    ds.view_b = ds.view_a;
    const auto y = one_hot(ds.labels);
    HyperParams h;
    h.c1 = h.c2 = 2.0;
    h.c3 = 1.0;
    h.theta1 = h.theta2 = 0.5;
    h.rho = 0.3;
    h.h_a = h.h_b = 6;
    const auto map = init_feature_map(3, 6, Activation::sigmoid, 12);
    const auto m = train_grvflmv(ds, y, h, map, map);
    CHECK(rel_diff(m.beta1, m.beta2) <= 1e-9);
}

TEST_CASE("swapping views with mirrored hyperparameters gives the same scores") {
    const auto ds = testutil::blobs(24, 3, 2, 6);
    MultiViewDataset swapped = ds;
    std::swap(swapped.view_a, swapped.view_b);
    const auto y = one_hot(ds.labels);
    HyperParams h;
    h.c1 = 2.0;
    h.c2 = 0.5;
    h.c3 = 1.0;
    h.theta1 = 0.2;
    h.theta2 = 0.7;
    h.rho = 0.1;
    h.h_a = 5;
    h.h_b = 4;
    HyperParams mirrored = h;
    std::swap(mirrored.c1, mirrored.c2);
    std::swap(mirrored.theta1, mirrored.theta2);
    std::swap(mirrored.h_a, mirrored.h_b);
    const auto ma = init_feature_map(3, 5, Activation::sigmoid, 1);
    const auto mb = init_feature_map(2, 4, Activation::sigmoid, 2);
    const auto m1 = train_grvflmv(ds, y, h, ma, mb);
    const auto m2 = train_grvflmv(swapped, y, mirrored, mb, ma);
    CHECK(rel_diff(decision_scores(m1, ds.view_a, ds.view_b), decision_scores(m2, ds.view_b, ds.view_a)) <= 1e-9);
}

TEST_CASE("decision scores average the two views") {
    const auto ds = testutil::blobs(16, 2, 3, 7);
    const auto y = one_hot(ds.labels);
    HyperParams h;
    h.theta1 = h.theta2 = 0.1;
    h.rho = 0.05;
    h.h_a = h.h_b = 4;
    auto m = train_grvflmv(ds, y, h, 3);
    const Matrix z1 = enhance(ds.view_a, m.map_a).z;
    const Matrix z2 = enhance(ds.view_b, m.map_b).z;
    CHECK(decision_scores(m, ds.view_a, ds.view_b) == 0.5 * (z1 * m.beta1 + z2 * m.beta2));

    m.beta2.setZero();
    CHECK(decision_scores(m, ds.view_a, ds.view_b) == 0.5 * (z1 * m.beta1));
}

TEST_CASE("argmax ties go to the first class") {
    Matrix s(2, 2);
    s << 0.7, 0.7, -0.1, 0.4;
    const auto p = argmax_prediction(s, {"first", "second"});
    CHECK(p.labels == std::vector<std::string>{"first", "second"});
    CHECK(p.class_index == std::vector<int>{0, 1});
}

TEST_CASE("separable blobs are learned") {
    const auto ds = testutil::blobs(60, 4, 3, 8);
    const auto y = one_hot(ds.labels);
    HyperParams h;
    h.theta1 = h.theta2 = 0.1;
    h.rho = 0.1;
    h.h_a = h.h_b = 20;
    const auto m = train_grvflmv(ds, y, h, 99);
    const auto p = predict(m, ds.view_a, ds.view_b);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < p.labels.size(); ++i) hit += p.labels[i] == ds.labels[i];
    CHECK(static_cast<double>(hit) / 60.0 >= 0.95);
}

TEST_CASE("training is bitwise deterministic") {
    const auto ds = testutil::blobs(30, 3, 2, 9);
    const auto y = one_hot(ds.labels);
    HyperParams h;
    h.theta1 = h.theta2 = 1.0;
    h.rho = -0.2;
    h.h_a = h.h_b = 7;
    const auto a = train_grvflmv(ds, y, h, 5);
    const auto b = train_grvflmv(ds, y, h, 5);
    CHECK(a.beta1 == b.beta1);
    CHECK(a.beta2 == b.beta2);
    CHECK(train_grvflmv(ds, y, h, 6).beta1 != a.beta1);
}

TEST_CASE("scaling the target encoding scales weights but not labels") {
    const auto ds = testutil::blobs(30, 3, 2, 10);
    const auto y = one_hot(ds.labels);
    HyperParams h;
    h.theta1 = h.theta2 = 0.5;
    h.rho = 0.2;
    h.h_a = h.h_b = 6;
    const auto ma = init_feature_map(3, 6, Activation::sigmoid, 1);
    const auto mb = init_feature_map(2, 6, Activation::sigmoid, 2);
    const Matrix z1 = enhance(ds.view_a, ma).z;
    const Matrix z2 = enhance(ds.view_b, mb).z;
    const auto base = build_coupled_problem(z1, z2, y, h.sigma, h.ridge);
    const auto doubled = build_coupled_problem(z1, z2, base.g1, base.g2, 2.0 * y.y);
    const auto s1 = solve_coupled(base, h);
    const auto s2 = solve_coupled(doubled, h);
    CHECK(rel_diff(s2.beta1, 2.0 * s1.beta1) <= 1e-12);
    const Matrix sc1 = 0.5 * (z1 * s1.beta1 + z2 * s1.beta2);
    const Matrix sc2 = 0.5 * (z1 * s2.beta1 + z2 * s2.beta2);
    CHECK(argmax_prediction(sc1, y.class_order).labels == argmax_prediction(sc2, y.class_order).labels);
}

TEST_CASE("uncoupled model predicts like two averaged ridge models") {
    const auto ds = testutil::blobs(40, 3, 3, 11);
    const auto y = one_hot(ds.labels);
    HyperParams h;
    h.c1 = 4.0;
    h.c2 = 0.25;
    h.c3 = 2.0;
    h.h_a = h.h_b = 8;
    const auto ma = init_feature_map(3, 8, Activation::sigmoid, 3);
    const auto mb = init_feature_map(3, 8, Activation::sigmoid, 4);
    const auto m = train_grvflmv(ds, y, h, ma, mb);
    const auto ra = train_rvfl(ds.view_a, y, h.c1 / h.c3, ma, true);
    const auto rb = train_rvfl(ds.view_b, y, h.c2, mb, true);
    const Matrix avg = 0.5 * (predict_rvfl(ra, ds.view_a).scores + predict_rvfl(rb, ds.view_b).scores);
    CHECK(rel_diff(avg, decision_scores(m, ds.view_a, ds.view_b)) <= 1e-10);
    CHECK(argmax_prediction(avg, y.class_order).labels == predict(m, ds.view_a, ds.view_b).labels);
}

TEST_CASE("ill-conditioned systems are inflated once, singular ones rejected") {
    const Matrix z = Matrix::Zero(4, 2);
    Matrix y = Matrix::Zero(4, 2);
    y.col(0).setOnes();
    HyperParams h;
    h.theta1 = h.theta2 = 1.0;
    Matrix g1 = -Matrix::Identity(2, 2);
    g1(0, 0) += 1e-14;
    const auto s = solve_coupled(build_coupled_problem(z, z, g1, Matrix::Zero(2, 2), y), h);
    CHECK(s.diagnostics.inflated);
    CHECK(s.diagnostics.inflation > 0.0);
    CHECK(s.diagnostics.condition_estimate > 1e12);

    const Matrix neg = -Matrix::Identity(2, 2);
    CHECK_THROWS_WITH_AS(solve_coupled(build_coupled_problem(z, z, neg, neg, y), h),
                         doctest::Contains("condition estimate"), NumericalError);
}

TEST_CASE("scores reject views of the wrong width") {
    const auto ds = testutil::blobs(12, 3, 2, 12);
    HyperParams h;
    h.h_a = h.h_b = 3;
    const auto m = train_grvflmv(ds, one_hot(ds.labels), h, 1);
    CHECK_THROWS_WITH_AS(decision_scores(m, Matrix::Zero(2, 4), Matrix::Zero(2, 2)),
                         doctest::Contains("expected 3 columns, found 4"), DimensionError);
}

TEST_CASE("hyperparameter validation") {
    HyperParams h;
    CHECK_NOTHROW(h.validate());
    h.c3 = 0.0;
    CHECK_THROWS_AS(h.validate(), InvalidArgument);
    h = HyperParams{};
    h.theta2 = -1.0;
    CHECK_THROWS_AS(h.validate(), InvalidArgument);
    h = HyperParams{};
    h.h_b = 0;
    CHECK_THROWS_AS(h.validate(), InvalidArgument);
    h = HyperParams{};
    h.rho = -5.0;
    CHECK_NOTHROW(h.validate());
}

// ---------------------------------------------------------------------------
// Serialization

TEST_CASE("serialized models reproduce predictions bitwise") {
    const auto ds = testutil::blobs(25, 3, 2, 13);
    const auto y = one_hot(ds.labels);
    HyperParams h;
    h.theta1 = 0.3;
    h.theta2 = 0.2;
    h.rho = 0.05;
    h.h_a = 5;
    h.h_b = 6;
    h.activation = Activation::tanh;
    const auto m = train_grvflmv(ds, y, h, 21);
    const auto back = grvflmv_from_json(nlohmann::json::parse(to_json(m).dump()));
    CHECK(back.beta1 == m.beta1);
    CHECK(back.beta2 == m.beta2);
    CHECK(back.hyper == m.hyper);
    CHECK(decision_scores(back, ds.view_a, ds.view_b) == decision_scores(m, ds.view_a, ds.view_b));

    const auto r = train_rvfl(ds.view_a, y, 3.0, init_feature_map(3, 4, Activation::relu, 8), false);
    const auto rb = rvfl_from_json(nlohmann::json::parse(to_json(r).dump()));
    CHECK(predict_rvfl(rb, ds.view_a).scores == predict_rvfl(r, ds.view_a).scores);
}

TEST_CASE("model files with a wrong header are schema errors") {
    const auto ds = testutil::blobs(12, 2, 2, 14);
    HyperParams h;
    h.h_a = h.h_b = 3;
    auto j = to_json(train_grvflmv(ds, one_hot(ds.labels), h, 1));
    auto bad = j;
    bad["version"] = 99;
    CHECK_THROWS_WITH_AS(grvflmv_from_json(bad), doctest::Contains("version"), SchemaError);
    bad = j;
    bad["version"] = "one";
    CHECK_THROWS_AS(grvflmv_from_json(bad), SchemaError);
    bad = j;
    bad.erase("beta1");
    CHECK_THROWS_AS(grvflmv_from_json(bad), SchemaError);
    bad = j;
    bad["beta2"]["rows"] = 1;
    CHECK_THROWS_AS(grvflmv_from_json(bad), SchemaError);
    CHECK_THROWS_AS(rvfl_from_json(j), SchemaError);
    CHECK_THROWS_AS(grvflmv_from_json(nlohmann::json::array()), SchemaError);
}
