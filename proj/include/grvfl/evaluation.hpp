#pragma once

#include "grvfl/common.hpp"
#include "grvfl/dataset.hpp"
#include "grvfl/models.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace grvfl {

/// Models the harness can train. The "2" variants run on view B.
enum class ModelKind { grvflmv, rvfl, rvfl2, rvflwodl, rvflwodl2 };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

// ---------------------------------------------------------------------------
// Hyperparameter search

/// Value lists searched per axis. With the tie flags set (the default) c1 =
/// c2 = c3, theta1 = theta2 and h_a = h_b. RVFL variants search (c, h) only.
struct HyperGrid {
    std::vector<double> c_values;
    std::vector<double> theta_values;
    std::vector<double> rho_values;
    std::vector<Index> h_values;
    bool tie_c = true;
    bool tie_theta = true;
    bool tie_h = true;

    /// 10^-5 .. 10^5 for c, theta and rho; h = 3, 23, ..., 203.
    static HyperGrid full();
    /// Three values per axis: {1e-2, 1, 1e2} and h in {3, 103, 203}.
    /// A smoke-test profile, not the published protocol.
    static HyperGrid fast();

    void validate() const;
};

/// Settings shared by every model trained in a search or benchmark.
struct TrainingOptions {
    double sigma = 1.0;
    Activation activation = Activation::sigmoid;
    double ridge = 0.0;
    bool standardize = true;
    int folds = 5;
    int jobs = 1;
};

/// Every combination of the grid for `kind`, in lexicographic (c, theta,
/// rho, h) order with each list in its declared order.
std::vector<HyperParams> enumerate_grid(const HyperGrid& grid, ModelKind kind, const TrainingOptions& opts);

/// Seed of the feature maps used for hidden widths (h_a, h_b). All combos
/// sharing the widths share the random layer, so their scores differ only
/// through c, theta and rho.
std::uint64_t width_seed(std::uint64_t master, Index h_a, Index h_b);

struct CvEntry {
    std::size_t index = 0;
    HyperParams hyper;
    double mean_accuracy = 0.0;
    std::vector<double> fold_accuracy;
    std::string error;  ///< non-empty when training failed for this combo
};

struct GridSearchResult {
    HyperParams best;
    std::size_t best_index = 0;
    std::uint64_t model_seed = 0;  ///< seed to retrain the winner with
    std::vector<CvEntry> table;
};

/// Exhaustive k-fold search. The winner is the highest mean validation
/// accuracy; ties go to the earliest combo in enumeration order. Results do
/// not depend on opts.jobs.
GridSearchResult grid_search(const MultiViewDataset& train, ModelKind kind, const HyperGrid& grid,
                             const TrainingOptions& opts, std::uint64_t seed);

/// A trained model of any kind.
struct TrainedModel {
    ModelKind kind = ModelKind::grvflmv;
    std::optional<GrvflMvModel> grvflmv;
    std::optional<RvflModel> rvfl;

    Prediction predict(const Matrix& xa, const Matrix& xb) const;
    nlohmann::json to_json() const;
    static TrainedModel from_json(const nlohmann::json& j);
};

/// Trains on already-preprocessed views. Feature-map seeds come from
/// view_seed(model_seed, view).
TrainedModel fit_model(ModelKind kind, const MultiViewDataset& train, const ClassOrder& order,
                       const HyperParams& hyper, std::uint64_t model_seed);

/// Standardizes (optionally) with train statistics, fits, and scores `test`.
double fit_and_score(ModelKind kind, const MultiViewDataset& train, const MultiViewDataset& test,
                     const HyperParams& hyper, std::uint64_t model_seed, const TrainingOptions& opts);

/// Per-view scalers fitted on `train`, applied to train and test in place.
struct ViewScalers {
    Scaler a;
    Scaler b;
};
ViewScalers standardize_views(MultiViewDataset& train, MultiViewDataset& test);

// ---------------------------------------------------------------------------
// Accuracy bookkeeping and rank statistics

/// Fraction of positions where the two sequences agree.
double accuracy(std::span<const std::string> predicted, std::span<const std::string> truth);
double accuracy(std::span<const int> predicted, std::span<const int> truth);

struct AccuracyTable {
    std::vector<std::string> models;
    std::vector<std::string> datasets;
    Matrix acc;  ///< models x datasets, entries in [0, 1]

    void validate() const;
};

/// Rank of each model on each dataset (models x datasets). Rank 1 is the best
/// accuracy; accuracies within 1e-12 share the mean of the ranks they cover.
Matrix dataset_ranks(const AccuracyTable& table);

/// Mean of dataset_ranks over datasets.
Vector rank_models(const AccuracyTable& table);

struct FriedmanResult {
    double chi2 = 0.0;
    double ff = 0.0;
};

/// chi2_F = 12N / (k(k+1)) [sum R^2 - k(k+1)^2 / 4] and
/// F_F = (N-1) chi2_F / (N(k-1) - chi2_F) with k = lambda models.
FriedmanResult friedman(std::span<const double> avg_ranks, int datasets, int models);

/// q * sqrt(k(k+1) / (6N)).
double nemenyi_cd(int models, int datasets, double q_alpha);

/// Two-tailed Nemenyi critical values q_0.05 for k = 2..10 models
/// (studentized range / sqrt 2, as tabulated by Demsar 2006, Table 5a).
double nemenyi_q_alpha_005(int models);

struct WinTieLoss {
    int wins = 0;
    int ties = 0;
    int losses = 0;

    bool operator==(const WinTieLoss&) const = default;
};

/// Wins credited for a sign test: ties are split evenly, one is dropped first
/// when their count is odd.
int effective_wins(const WinTieLoss& w);

/// N/2 + 1.96 sqrt(N)/2.
double win_threshold(int datasets);

struct WinTieLossTable {
    std::vector<std::vector<WinTieLoss>> counts;  ///< counts[i][j]: model i against model j
    double threshold = 0.0;
};

WinTieLossTable win_tie_loss(const AccuracyTable& table);

/// Everything reported for a table. Statistics that are undefined for the
/// table's shape are left empty with a note.
struct RankStats {
    Vector avg_ranks;
    std::optional<double> chi2;
    std::optional<double> ff;
    std::optional<double> q_alpha;
    std::optional<double> cd;
    WinTieLossTable wtl;
    std::vector<std::string> notes;
};

RankStats compute_rank_stats(const AccuracyTable& table);
nlohmann::json to_json(const RankStats& stats, const AccuracyTable& table);

/// Dataset rows, model columns, accuracies in percent, followed by
/// "Average ACC" and "Average Rank" rows.
void write_accuracy_csv(const std::filesystem::path& path, const AccuracyTable& table);

/// Reads the layout above (summary rows are skipped). Values above 1 mark the
/// table as percentages and every cell is divided by 100.
AccuracyTable read_accuracy_csv(const std::filesystem::path& path);

}  // namespace grvfl
