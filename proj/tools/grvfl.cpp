#include "grvfl/pipeline.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

// Options that map one-to-one onto config keys. Values are collected as text
// and applied after the config file so that flags win.
struct FlagSet {
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    std::vector<std::string> data;
    CLI::Option* data_opt = nullptr;

    CLI::Option* add(CLI::App* app, const std::string& key, const std::string& help) {
        return options[key] = app->add_option("--" + key, values[key], help);
    }

    void add_switch(CLI::App* app, const std::string& flag, const std::string& key, const std::string& value,
                    const std::string& help) {
        auto* opt = app->add_flag("--" + flag, help);
        switches.push_back({opt, key, value});
    }

    grvfl::Settings collect() const {
        grvfl::Settings out;
        if (data_opt != nullptr && data_opt->count() > 0) {
            std::string joined;
            for (const auto& d : data) {
                joined += (joined.empty() ? "" : ";") + d;
            }
            out.emplace_back("data", joined);
        }
        for (const auto& [key, opt] : options) {
            if (opt->count() > 0) {
                out.emplace_back(key, values.at(key));
            }
        }
        for (const auto& s : switches) {
            if (s.opt->count() > 0) {
                out.emplace_back(s.key, s.value);
            }
        }
        return out;
    }

    struct Switch {
        CLI::Option* opt;
        std::string key;
        std::string value;
    };
    std::vector<Switch> switches;
};

void add_data_options(CLI::App* app, FlagSet& f) {
    f.data_opt = app->add_option("--data", f.data, "dataset CSV (label in the last column); two-file mode: a.csv,b.csv");
    f.add(app, "views", "pca (view B = PCA of view A) or two-file");
    f.add(app, "variance", "explained-variance fraction kept by the PCA view (default 0.95)");
    f.add_switch(app, "no-header", "header", "false", "CSV files have no header row");
}

void add_training_options(CLI::App* app, FlagSet& f) {
    f.add(app, "seed", "master seed (required)");
    f.add(app, "sigma", "LFDA kernel width (default 1)");
    f.add(app, "activation", "sigmoid, relu or tanh (default sigmoid)");
    f.add(app, "ridge", "initial ridge on the penalty scatter (default 0)");
    f.add(app, "folds", "cross-validation folds (default 5)");
    f.add(app, "jobs", "worker threads for the grid search (default 1)");
    f.add_switch(app, "no-standardize", "standardize", "false", "skip per-view z-scoring");
}

void add_grid_options(CLI::App* app, FlagSet& f) {
    f.add_switch(app, "fast", "fast", "true", "3 values per axis; a smoke-test grid, not the published one");
    f.add(app, "c-values", "comma list overriding the c axis");
    f.add(app, "theta-values", "comma list overriding the theta axis");
    f.add(app, "rho-values", "comma list overriding the rho axis");
    f.add(app, "h-values", "comma list overriding the hidden widths");
    f.add(app, "tie-c", "search c1 = c2 = c3 (default true)");
    f.add(app, "tie-theta", "search theta1 = theta2 (default true)");
    f.add(app, "tie-h", "search h_a = h_b (default true)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-view graph-embedded random vector functional link classifier"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    app.add_option("--config", config_path, "key = value settings file; flags override it");

    FlagSet bench_flags;
    auto* bench = app.add_subcommand("bench", "tune, train and test every model on every dataset");
    add_data_options(bench, bench_flags);
    add_training_options(bench, bench_flags);
    add_grid_options(bench, bench_flags);
    bench_flags.add(bench, "data-dir", "directory of dataset CSVs (two-file: <name>_a.csv and <name>_b.csv)");
    bench_flags.add(bench, "models", "comma list of grvflmv, rvfl, rvfl2, rvflwodl, rvflwodl2");
    bench_flags.add(bench, "repeats", "independent splits per dataset, accuracies averaged (default 1)");
    bench_flags.add(bench, "train-fraction", "training share of each split (default 0.7)");
    bench_flags.add(bench, "out", "output directory (also GRVFL_OUTPUT_DIR)");

    FlagSet train_flags;
    auto* train = app.add_subcommand("train", "fit one model on a dataset and save it");
    add_data_options(train, train_flags);
    add_training_options(train, train_flags);
    add_grid_options(train, train_flags);
    train_flags.add(train, "model", "grvflmv, rvfl, rvfl2, rvflwodl or rvflwodl2");
    for (const char* k : {"c", "c1", "c2", "c3", "theta", "theta1", "theta2", "rho", "hidden", "hidden-a", "hidden-b"}) {
        train_flags.add(train, k, std::string("hyperparameter ") + k + " (ignored with --tune)");
    }
    train_flags.add_switch(train, "tune", "tune", "true", "pick hyperparameters by cross-validated grid search");
    train_flags.add(train, "model-file", "where to write the model (default <out>/model.json)");
    train_flags.add(train, "dump-graphs", "directory for the graph weight, Laplacian and embedding matrices");
    train_flags.add(train, "out", "output directory (also GRVFL_OUTPUT_DIR)");

    FlagSet predict_flags;
    auto* predict = app.add_subcommand("predict", "label a dataset with a saved model");
    predict_flags.data_opt = predict->add_option("--data", predict_flags.data, "CSV to label (a.csv,b.csv for two-file models)");
    predict_flags.add(predict, "model-file", "model written by train")->required();
    predict_flags.add(predict, "predictions", "output CSV (default <out>/predictions.csv)");
    predict_flags.add_switch(predict, "no-labels", "labels", "false", "the CSV has no label column");
    predict_flags.add(predict, "out", "output directory (also GRVFL_OUTPUT_DIR)");

    std::string table_path;
    std::string stats_json;
    auto* stats = app.add_subcommand("stats", "rank statistics for an accuracy table");
    stats->add_option("table", table_path, "CSV with a dataset column followed by one column per model")->required();
    stats->add_option("--json", stats_json, "also write the statistics as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : grvfl::kExitFailure;
    }

    try {
        if (stats->parsed()) {
            return grvfl::run_stats(table_path, stats_json, std::cout);
        }
        const grvfl::Settings file = config_path.empty() ? grvfl::Settings{} : grvfl::read_settings_file(config_path);
        const char* env_out = std::getenv("GRVFL_OUTPUT_DIR");
        if (bench->parsed()) {
            return grvfl::run_bench(grvfl::resolve_config(file, bench_flags.collect(), env_out), std::cerr);
        }
        if (train->parsed()) {
            return grvfl::run_train(grvfl::resolve_config(file, train_flags.collect(), env_out), std::cerr);
        }
        return grvfl::run_predict(grvfl::resolve_config(file, predict_flags.collect(), env_out), std::cerr);
    } catch (const grvfl::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
    } catch (const grvfl::DimensionError& e) {
        std::cerr << "dimension error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
    }
    return grvfl::kExitFailure;
}
