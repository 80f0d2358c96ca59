#include "grvfl/evaluation.hpp"

#include "grvfl/model_io.hpp"
#include "grvfl/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <thread>

namespace grvfl {

namespace {

constexpr std::uint64_t kFoldTag = 0xF01D5ULL;

bool is_multiview(ModelKind kind) { return kind == ModelKind::grvflmv; }
bool uses_view_b(ModelKind kind) { return kind == ModelKind::rvfl2 || kind == ModelKind::rvflwodl2; }
bool has_direct_links(ModelKind kind) { return kind == ModelKind::rvfl || kind == ModelKind::rvfl2; }

std::vector<double> decades() {
    std::vector<double> v;
    for (int e = -5; e <= 5; ++e) {
        v.push_back(std::pow(10.0, e));
    }
    return v;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. fn must not throw.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    const auto workers = static_cast<std::size_t>(std::max(1, jobs));
    if (workers == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                fn(i);
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
}

double index_accuracy(const Matrix& scores, const std::vector<int>& truth) {
    std::size_t hits = 0;
    for (Index i = 0; i < scores.rows(); ++i) {
        const int k = scores(i, 1) > scores(i, 0) ? 1 : 0;
        hits += (k == truth[static_cast<std::size_t>(i)]) ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(scores.rows());
}

struct FoldData {
    MultiViewDataset train;
    MultiViewDataset validation;
    OneHotTargets y_train;
    std::vector<int> y_validation;
};

// Per-fold state that depends on the hidden widths but not on c, theta, rho.
struct FoldModelInput {
    CoupledProblem problem;  // GRVFL-MV
    Matrix z_val_a, z_val_b;
    Matrix design_train, design_val;  // RVFL variants
};

FoldModelInput prepare_fold(ModelKind kind, const FoldData& fold, const HyperParams& h, std::uint64_t model_seed) {
    FoldModelInput in;
    if (is_multiview(kind)) {
        const auto map_a = init_feature_map(fold.train.view_a.cols(), h.h_a, h.activation, view_seed(model_seed, 0));
        const auto map_b = init_feature_map(fold.train.view_b.cols(), h.h_b, h.activation, view_seed(model_seed, 1));
        in.problem = build_coupled_problem(enhance(fold.train.view_a, map_a).z, enhance(fold.train.view_b, map_b).z,
                                           fold.y_train, h.sigma, h.ridge);
        in.z_val_a = enhance(fold.validation.view_a, map_a).z;
        in.z_val_b = enhance(fold.validation.view_b, map_b).z;
    } else {
        const bool b = uses_view_b(kind);
        const Matrix& xt = b ? fold.train.view_b : fold.train.view_a;
        const Matrix& xv = b ? fold.validation.view_b : fold.validation.view_a;
        const auto map = init_feature_map(xt.cols(), b ? h.h_b : h.h_a, h.activation, view_seed(model_seed, b ? 1 : 0));
        in.design_train = rvfl_design_matrix(xt, map, has_direct_links(kind));
        in.design_val = rvfl_design_matrix(xv, map, has_direct_links(kind));
    }
    return in;
}

double score_fold(ModelKind kind, const FoldModelInput& in, const FoldData& fold, const HyperParams& h) {
    if (is_multiview(kind)) {
        const CoupledSolution sol = solve_coupled(in.problem, h);
        return index_accuracy(0.5 * (in.z_val_a * sol.beta1 + in.z_val_b * sol.beta2), fold.y_validation);
    }
    const Matrix w = solve_ridge(in.design_train, fold.y_train.y, h.c1);
    return index_accuracy(in.design_val * w, fold.y_validation);
}

}  // namespace

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::grvflmv: return "grvflmv";
        case ModelKind::rvfl: return "rvfl";
        case ModelKind::rvfl2: return "rvfl2";
        case ModelKind::rvflwodl: return "rvflwodl";
        case ModelKind::rvflwodl2: return "rvflwodl2";
    }
    return "grvflmv";
}

ModelKind parse_model_kind(std::string_view name) {
    for (auto k : {ModelKind::grvflmv, ModelKind::rvfl, ModelKind::rvfl2, ModelKind::rvflwodl, ModelKind::rvflwodl2}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw InvalidArgument("unknown model '" + std::string(name) + "' (expected grvflmv, rvfl, rvfl2, rvflwodl, rvflwodl2)");
}

HyperGrid HyperGrid::full() {
    HyperGrid g;
    g.c_values = decades();
    g.theta_values = decades();
    g.rho_values = decades();
    for (Index h = 3; h <= 203; h += 20) {
        g.h_values.push_back(h);
    }
    return g;
}

HyperGrid HyperGrid::fast() {
    HyperGrid g;
    g.c_values = {1e-2, 1.0, 1e2};
    g.theta_values = {1e-2, 1.0, 1e2};
    g.rho_values = {1e-2, 1.0, 1e2};
    g.h_values = {3, 103, 203};
    return g;
}

void HyperGrid::validate() const {
    if (c_values.empty() || theta_values.empty() || rho_values.empty() || h_values.empty()) {
        throw InvalidArgument("every grid axis needs at least one value");
    }
    for (double c : c_values) {
        if (!(c > 0.0)) throw InvalidArgument("grid c values must be positive");
    }
    for (double t : theta_values) {
        if (!(t >= 0.0)) throw InvalidArgument("grid theta values must be nonnegative");
    }
    for (Index h : h_values) {
        if (h < 1) throw InvalidArgument("grid hidden widths must be at least 1");
    }
}

std::vector<HyperParams> enumerate_grid(const HyperGrid& grid, ModelKind kind, const TrainingOptions& opts) {
    grid.validate();
    HyperParams base;
    base.sigma = opts.sigma;
    base.activation = opts.activation;
    base.ridge = opts.ridge;

    std::vector<HyperParams> out;
    if (!is_multiview(kind)) {
        for (double c : grid.c_values) {
            for (Index h : grid.h_values) {
                HyperParams p = base;
                p.c1 = p.c2 = p.c3 = c;
                p.h_a = p.h_b = h;
                out.push_back(p);
            }
        }
        return out;
    }

    using Triple = std::array<double, 3>;
    std::vector<Triple> cs;
    for (double a : grid.c_values) {
        if (grid.tie_c) {
            cs.push_back({a, a, a});
            continue;
        }
        for (double b : grid.c_values) {
            for (double c : grid.c_values) {
                cs.push_back({a, b, c});
            }
        }
    }
    std::vector<std::pair<double, double>> thetas;
    for (double a : grid.theta_values) {
        if (grid.tie_theta) {
            thetas.emplace_back(a, a);
            continue;
        }
        for (double b : grid.theta_values) {
            thetas.emplace_back(a, b);
        }
    }
    std::vector<std::pair<Index, Index>> widths;
    for (Index a : grid.h_values) {
        if (grid.tie_h) {
            widths.emplace_back(a, a);
            continue;
        }
        for (Index b : grid.h_values) {
            widths.emplace_back(a, b);
        }
    }
    for (const auto& c : cs) {
        for (const auto& t : thetas) {
            for (double rho : grid.rho_values) {
                for (const auto& w : widths) {
                    HyperParams p = base;
                    p.c1 = c[0];
                    p.c2 = c[1];
                    p.c3 = c[2];
                    p.theta1 = t.first;
                    p.theta2 = t.second;
                    p.rho = rho;
                    p.h_a = w.first;
                    p.h_b = w.second;
                    out.push_back(p);
                }
            }
        }
    }
    return out;
}

std::uint64_t width_seed(std::uint64_t master, Index h_a, Index h_b) {
    return derive_seed(derive_seed(master, static_cast<std::uint64_t>(h_a)), static_cast<std::uint64_t>(h_b));
}

ViewScalers standardize_views(MultiViewDataset& train, MultiViewDataset& test) {
    ViewScalers s{fit_scaler(train.view_a), fit_scaler(train.view_b)};
    train.view_a = s.a.apply(train.view_a);
    train.view_b = s.b.apply(train.view_b);
    test.view_a = s.a.apply(test.view_a);
    test.view_b = s.b.apply(test.view_b);
    return s;
}

GridSearchResult grid_search(const MultiViewDataset& train, ModelKind kind, const HyperGrid& grid,
                             const TrainingOptions& opts, std::uint64_t seed) {
    train.validate();
    const std::vector<HyperParams> combos = enumerate_grid(grid, kind, opts);
    const ClassOrder order = binary_class_order(train.labels);
    const std::vector<Fold> folds = kfold(train, opts.folds, derive_seed(seed, kFoldTag));

    std::vector<FoldData> fold_data;
    fold_data.reserve(folds.size());
    for (const auto& f : folds) {
        FoldData fd{subset(train, f.train), subset(train, f.validation), {}, {}};
        if (opts.standardize) {
            standardize_views(fd.train, fd.validation);
        }
        fd.y_train = one_hot(fd.train.labels, order);
        fd.y_validation = one_hot(fd.validation.labels, order).class_index;
        fold_data.push_back(std::move(fd));
    }

    // Group combos by hidden widths, keeping first-appearance order.
    std::vector<std::pair<Index, Index>> width_order;
    std::map<std::pair<Index, Index>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < combos.size(); ++i) {
        const auto key = std::make_pair(combos[i].h_a, combos[i].h_b);
        auto& members = groups[key];
        if (members.empty()) {
            width_order.push_back(key);
        }
        members.push_back(i);
    }

    GridSearchResult result;
    result.table.resize(combos.size());
    for (std::size_t i = 0; i < combos.size(); ++i) {
        result.table[i].index = i;
        result.table[i].hyper = combos[i];
    }

    for (const auto& key : width_order) {
        const auto& members = groups[key];
        const std::uint64_t model_seed = width_seed(seed, key.first, key.second);
        std::vector<FoldModelInput> inputs(fold_data.size());
        std::string prep_error;
        try {
            std::vector<std::string> errors(fold_data.size());
            parallel_for(fold_data.size(), opts.jobs, [&](std::size_t f) {
                try {
                    inputs[f] = prepare_fold(kind, fold_data[f], combos[members.front()], model_seed);
                } catch (const std::exception& e) {
                    errors[f] = e.what();
                }
            });
            for (const auto& e : errors) {
                if (!e.empty()) {
                    prep_error = e;
                    break;
                }
            }
        } catch (const std::exception& e) {
            prep_error = e.what();
        }
        if (!prep_error.empty()) {
            for (auto i : members) {
                result.table[i].error = prep_error;
                result.table[i].mean_accuracy = -1.0;
            }
            continue;
        }
        parallel_for(members.size(), opts.jobs, [&](std::size_t m) {
            CvEntry& entry = result.table[members[m]];
            try {
                double sum = 0.0;
                for (std::size_t f = 0; f < fold_data.size(); ++f) {
                    const double acc = score_fold(kind, inputs[f], fold_data[f], entry.hyper);
                    entry.fold_accuracy.push_back(acc);
                    sum += acc;
                }
                entry.mean_accuracy = sum / static_cast<double>(fold_data.size());
            } catch (const std::exception& e) {
                entry.error = e.what();
                entry.mean_accuracy = -1.0;
                entry.fold_accuracy.clear();
            }
        });
    }

    std::optional<std::size_t> best;
    for (const auto& entry : result.table) {
        if (!entry.error.empty()) {
            continue;
        }
        if (!best || entry.mean_accuracy > result.table[*best].mean_accuracy) {
            best = entry.index;
        }
    }
    if (!best) {
        throw NumericalError("grid search: every combination failed (first error: " + result.table.front().error + ")");
    }
    result.best_index = *best;
    result.best = combos[*best];
    result.model_seed = width_seed(seed, result.best.h_a, result.best.h_b);
    return result;
}

// ---------------------------------------------------------------------------

Prediction TrainedModel::predict(const Matrix& xa, const Matrix& xb) const {
    if (kind == ModelKind::grvflmv) {
        return grvfl::predict(*grvflmv, xa, xb);
    }
    return predict_rvfl(*rvfl, uses_view_b(kind) ? xb : xa);
}

nlohmann::json TrainedModel::to_json() const {
    nlohmann::json j = kind == ModelKind::grvflmv ? grvfl::to_json(*grvflmv) : grvfl::to_json(*rvfl);
    j["model"] = std::string(grvfl::to_string(kind));
    return j;
}

TrainedModel TrainedModel::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("model") || !j.at("model").is_string()) {
        throw SchemaError("model file lacks a 'model' name");
    }
    TrainedModel m;
    m.kind = parse_model_kind(j.at("model").get<std::string>());
    if (m.kind == ModelKind::grvflmv) {
        m.grvflmv = grvflmv_from_json(j);
    } else {
        m.rvfl = rvfl_from_json(j);
        if (m.rvfl->direct_links != has_direct_links(m.kind)) {
            throw SchemaError("direct-link flag contradicts the model name");
        }
    }
    return m;
}

TrainedModel fit_model(ModelKind kind, const MultiViewDataset& train, const ClassOrder& order,
                       const HyperParams& hyper, std::uint64_t model_seed) {
    const OneHotTargets y = one_hot(train.labels, order);
    TrainedModel m;
    m.kind = kind;
    if (is_multiview(kind)) {
        m.grvflmv = train_grvflmv(train, y, hyper, model_seed);
        return m;
    }
    hyper.validate();
    const bool b = uses_view_b(kind);
    const Matrix& x = b ? train.view_b : train.view_a;
    auto map = init_feature_map(x.cols(), b ? hyper.h_b : hyper.h_a, hyper.activation, view_seed(model_seed, b ? 1 : 0));
    m.rvfl = train_rvfl(x, y, hyper.c1, std::move(map), has_direct_links(kind));
    return m;
}

double fit_and_score(ModelKind kind, const MultiViewDataset& train, const MultiViewDataset& test,
                     const HyperParams& hyper, std::uint64_t model_seed, const TrainingOptions& opts) {
    MultiViewDataset tr = train;
    MultiViewDataset te = test;
    if (opts.standardize) {
        standardize_views(tr, te);
    }
    const TrainedModel model = fit_model(kind, tr, binary_class_order(tr.labels), hyper, model_seed);
    return accuracy(model.predict(te.view_a, te.view_b).labels, te.labels);
}

}  // namespace grvfl
