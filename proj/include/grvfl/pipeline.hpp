#pragma once

#include "grvfl/evaluation.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace grvfl {

inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr int kPipelineSchemaVersion = 1;

enum class ViewMode { pca, two_file };

std::string_view to_string(ViewMode mode);
ViewMode parse_view_mode(std::string_view name);

/// Everything a subcommand needs. Built from defaults, then a key=value
/// config file, then GRVFL_OUTPUT_DIR, then command-line flags.
struct RunConfig {
    /// One entry per dataset. In two-file mode an entry is "a.csv,b.csv".
    std::vector<std::string> data;
    std::string data_dir;
    ViewMode views = ViewMode::pca;
    double variance = 0.95;
    bool header = true;
    std::optional<std::uint64_t> seed;
    int repeats = 1;
    std::filesystem::path out = "grvfl-out";
    std::vector<ModelKind> models{ModelKind::grvflmv, ModelKind::rvfl};
    double train_fraction = 0.7;
    TrainingOptions training;

    bool fast = false;
    std::optional<std::vector<double>> c_values;
    std::optional<std::vector<double>> theta_values;
    std::optional<std::vector<double>> rho_values;
    std::optional<std::vector<Index>> h_values;
    std::optional<bool> tie_c;
    std::optional<bool> tie_theta;
    std::optional<bool> tie_h;

    // train / predict
    ModelKind model = ModelKind::grvflmv;
    HyperParams hyper;
    bool tune = false;
    std::string dump_graphs;
    std::string model_file;
    std::string predictions;
    bool labels = true;  ///< prediction input carries a label column

    /// Base grid (full or fast) with any per-axis overrides applied.
    HyperGrid grid() const;
    /// Model hyperparameters with the sigma/activation/ridge training options.
    HyperParams effective_hyper() const;
};

using Settings = std::vector<std::pair<std::string, std::string>>;

/// key = value lines; '#' starts a comment; blank lines are ignored.
/// Throws ParseError naming the line.
Settings parse_settings(std::string_view text, std::string_view source = "config");
Settings read_settings_file(const std::filesystem::path& path);

/// Throws InvalidArgument for unknown keys or malformed values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

/// Defaults < file < env output dir < flags. `env_out` may be null.
RunConfig resolve_config(const Settings& file, const Settings& flags, const char* env_out);

/// Dataset entries after expanding data_dir. Each has a name unique within
/// the run.
struct DatasetSource {
    std::string name;
    std::filesystem::path view_a;
    std::filesystem::path view_b;  ///< empty in pca mode
};
std::vector<DatasetSource> dataset_sources(const RunConfig& cfg);

/// Loads one source into two views. In pca mode view B is the projection of
/// view A onto the leading components, fitted on the whole table.
struct LoadedViews {
    MultiViewDataset data;
    std::optional<PcaTransform> pca;
};
LoadedViews load_views(const DatasetSource& src, const RunConfig& cfg);

/// Reproducibility record: seed, grid, protocol settings, versions, and an
/// FNV-1a hash over all of it. Contains no paths to the output directory and
/// no timestamps.
nlohmann::json manifest(const RunConfig& cfg);
std::string fnv1a_hex(std::string_view bytes);

enum ExitCode : int { kExitOk = 0, kExitPartial = 1, kExitFailure = 2 };

int run_bench(const RunConfig& cfg, std::ostream& log);
int run_train(const RunConfig& cfg, std::ostream& log);
int run_predict(const RunConfig& cfg, std::ostream& log);
int run_stats(const std::filesystem::path& table_csv, const std::string& json_out, std::ostream& out);

}  // namespace grvfl
