#include "grvfl/pipeline.hpp"

#include "grvfl/graph_embedding.hpp"
#include "grvfl/model_io.hpp"
#include "grvfl/rng.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace grvfl {

namespace {

constexpr std::uint64_t kSplitTag = 0x5B117;

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_on(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) {
            return out;
        }
        start = pos + 1;
    }
}

std::string bad_value(std::string_view key, std::string_view value) {
    return "invalid value '" + std::string(value) + "' for '" + std::string(key) + "'";
}

double to_double(std::string_view key, std::string_view v) {
    v = trim(v);
    if (!v.empty() && v.front() == '+') {
        v.remove_prefix(1);
    }
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) {
        throw InvalidArgument(bad_value(key, v));
    }
    return out;
}

template <typename Int>
Int to_int(std::string_view key, std::string_view v) {
    v = trim(v);
    Int out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size()) {
        throw InvalidArgument(bad_value(key, v));
    }
    return out;
}

bool to_bool(std::string_view key, std::string_view v) {
    v = trim(v);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw InvalidArgument(bad_value(key, v));
}

std::vector<double> to_doubles(std::string_view key, std::string_view v) {
    std::vector<double> out;
    for (auto part : split_on(v, ',')) {
        out.push_back(to_double(key, part));
    }
    return out;
}

std::vector<Index> to_widths(std::string_view key, std::string_view v) {
    std::vector<Index> out;
    for (auto part : split_on(v, ',')) {
        out.push_back(to_int<Index>(key, part));
    }
    return out;
}

bool multiview(ModelKind k) { return k == ModelKind::grvflmv; }

nlohmann::json grid_json(const HyperGrid& g) {
    return {{"c_values", g.c_values},   {"theta_values", g.theta_values}, {"rho_values", g.rho_values},
            {"h_values", g.h_values},   {"tie_c", g.tie_c},               {"tie_theta", g.tie_theta},
            {"tie_h", g.tie_h}};
}

std::string sanitize(std::string_view name) {
    std::string out;
    for (char ch : name) {
        const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.';
        out.push_back(ok ? ch : '_');
    }
    return out.empty() ? "dataset" : out;
}

void write_sweep_csv(const std::filesystem::path& path, const GridSearchResult& gs) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    out << std::setprecision(17);
    const std::size_t folds = gs.table.empty() ? 0 : gs.table.front().fold_accuracy.size();
    out << "index,c1,c2,c3,theta1,theta2,rho,h_a,h_b,mean_accuracy";
    for (std::size_t f = 0; f < folds; ++f) {
        out << ",fold" << f + 1;
    }
    out << ",error\n";
    for (const auto& e : gs.table) {
        const auto& h = e.hyper;
        out << e.index << ',' << h.c1 << ',' << h.c2 << ',' << h.c3 << ',' << h.theta1 << ',' << h.theta2 << ','
            << h.rho << ',' << h.h_a << ',' << h.h_b << ',' << e.mean_accuracy;
        for (std::size_t f = 0; f < folds; ++f) {
            out << ',';
            if (f < e.fold_accuracy.size()) {
                out << e.fold_accuracy[f];
            }
        }
        std::string err = e.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out << ',' << err << '\n';
    }
}

Matrix read_features(const std::filesystem::path& path, const RunConfig& cfg, std::vector<std::string>& labels) {
    CsvTable t = read_csv_table(path, cfg.header, cfg.labels);
    labels = std::move(t.labels);
    return std::move(t.features);
}

}  // namespace

std::string_view to_string(ViewMode mode) { return mode == ViewMode::pca ? "pca" : "two-file"; }

ViewMode parse_view_mode(std::string_view name) {
    if (name == "pca") return ViewMode::pca;
    if (name == "two-file") return ViewMode::two_file;
    throw InvalidArgument("unknown view mode '" + std::string(name) + "' (expected pca or two-file)");
}

HyperGrid RunConfig::grid() const {
    HyperGrid g = fast ? HyperGrid::fast() : HyperGrid::full();
    if (c_values) g.c_values = *c_values;
    if (theta_values) g.theta_values = *theta_values;
    if (rho_values) g.rho_values = *rho_values;
    if (h_values) g.h_values = *h_values;
    if (tie_c) g.tie_c = *tie_c;
    if (tie_theta) g.tie_theta = *tie_theta;
    if (tie_h) g.tie_h = *tie_h;
    return g;
}

HyperParams RunConfig::effective_hyper() const {
    HyperParams h = hyper;
    h.sigma = training.sigma;
    h.activation = training.activation;
    h.ridge = training.ridge;
    return h;
}

// ---------------------------------------------------------------------------
// Configuration

Settings parse_settings(std::string_view text, std::string_view source) {
    Settings out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = text.find('\n', start);
        std::string_view line = text.substr(start, end == std::string_view::npos ? end : end - start);
        start = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos || trim(line.substr(0, eq)).empty()) {
            throw ParseError(std::string(source) + ":" + std::to_string(line_no) + ": expected key = value");
        }
        out.emplace_back(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
    }
    return out;
}

Settings read_settings_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open config '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_settings(ss.str(), path.string());
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
    value = trim(value);
    if (key == "data") {
        cfg.data.clear();
        for (auto part : split_on(value, ';')) {
            if (!part.empty()) cfg.data.emplace_back(part);
        }
    } else if (key == "data-dir") {
        cfg.data_dir = std::string(value);
    } else if (key == "views") {
        cfg.views = parse_view_mode(value);
    } else if (key == "variance") {
        cfg.variance = to_double(key, value);
        if (!(cfg.variance > 0.0 && cfg.variance <= 1.0)) throw InvalidArgument("variance must lie in (0, 1]");
    } else if (key == "header") {
        cfg.header = to_bool(key, value);
    } else if (key == "seed") {
        cfg.seed = to_int<std::uint64_t>(key, value);
    } else if (key == "repeats") {
        cfg.repeats = to_int<int>(key, value);
        if (cfg.repeats < 1) throw InvalidArgument("repeats must be at least 1");
    } else if (key == "out") {
        cfg.out = std::string(value);
    } else if (key == "models") {
        cfg.models.clear();
        for (auto part : split_on(value, ',')) {
            const ModelKind k = parse_model_kind(part);
            if (std::find(cfg.models.begin(), cfg.models.end(), k) == cfg.models.end()) {
                cfg.models.push_back(k);
            }
        }
    } else if (key == "train-fraction") {
        cfg.train_fraction = to_double(key, value);
        if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
            throw InvalidArgument("train-fraction must lie in (0, 1)");
        }
    } else if (key == "folds") {
        cfg.training.folds = to_int<int>(key, value);
        if (cfg.training.folds < 2) throw InvalidArgument("folds must be at least 2");
    } else if (key == "jobs") {
        cfg.training.jobs = to_int<int>(key, value);
        if (cfg.training.jobs < 1) throw InvalidArgument("jobs must be at least 1");
    } else if (key == "sigma") {
        cfg.training.sigma = to_double(key, value);
        if (!(cfg.training.sigma > 0.0)) throw InvalidArgument("sigma must be positive");
    } else if (key == "activation") {
        cfg.training.activation = parse_activation(value);
    } else if (key == "ridge") {
        cfg.training.ridge = to_double(key, value);
        if (cfg.training.ridge < 0.0) throw InvalidArgument("ridge must be nonnegative");
    } else if (key == "standardize") {
        cfg.training.standardize = to_bool(key, value);
    } else if (key == "fast") {
        cfg.fast = to_bool(key, value);
    } else if (key == "c-values") {
        cfg.c_values = to_doubles(key, value);
    } else if (key == "theta-values") {
        cfg.theta_values = to_doubles(key, value);
    } else if (key == "rho-values") {
        cfg.rho_values = to_doubles(key, value);
    } else if (key == "h-values") {
        cfg.h_values = to_widths(key, value);
    } else if (key == "tie-c") {
        cfg.tie_c = to_bool(key, value);
    } else if (key == "tie-theta") {
        cfg.tie_theta = to_bool(key, value);
    } else if (key == "tie-h") {
        cfg.tie_h = to_bool(key, value);
    } else if (key == "model") {
        cfg.model = parse_model_kind(value);
    } else if (key == "c") {
        cfg.hyper.c1 = cfg.hyper.c2 = cfg.hyper.c3 = to_double(key, value);
    } else if (key == "c1") {
        cfg.hyper.c1 = to_double(key, value);
    } else if (key == "c2") {
        cfg.hyper.c2 = to_double(key, value);
    } else if (key == "c3") {
        cfg.hyper.c3 = to_double(key, value);
    } else if (key == "theta") {
        cfg.hyper.theta1 = cfg.hyper.theta2 = to_double(key, value);
    } else if (key == "theta1") {
        cfg.hyper.theta1 = to_double(key, value);
    } else if (key == "theta2") {
        cfg.hyper.theta2 = to_double(key, value);
    } else if (key == "rho") {
        cfg.hyper.rho = to_double(key, value);
    } else if (key == "hidden") {
        cfg.hyper.h_a = cfg.hyper.h_b = to_int<Index>(key, value);
    } else if (key == "hidden-a") {
        cfg.hyper.h_a = to_int<Index>(key, value);
    } else if (key == "hidden-b") {
        cfg.hyper.h_b = to_int<Index>(key, value);
    } else if (key == "tune") {
        cfg.tune = to_bool(key, value);
    } else if (key == "dump-graphs") {
        cfg.dump_graphs = std::string(value);
    } else if (key == "model-file") {
        cfg.model_file = std::string(value);
    } else if (key == "predictions") {
        cfg.predictions = std::string(value);
    } else if (key == "labels") {
        cfg.labels = to_bool(key, value);
    } else {
        throw InvalidArgument("unknown setting '" + std::string(key) + "'");
    }
}

RunConfig resolve_config(const Settings& file, const Settings& flags, const char* env_out) {
    RunConfig cfg;
    for (const auto& [k, v] : file) {
        apply_setting(cfg, k, v);
    }
    if (env_out != nullptr && *env_out != '\0') {
        cfg.out = env_out;
    }
    for (const auto& [k, v] : flags) {
        apply_setting(cfg, k, v);
    }
    if (cfg.models.empty()) {
        throw InvalidArgument("at least one model must be selected");
    }
    return cfg;
}

std::vector<DatasetSource> dataset_sources(const RunConfig& cfg) {
    std::vector<DatasetSource> out;
    for (const auto& entry : cfg.data) {
        DatasetSource s;
        if (cfg.views == ViewMode::two_file) {
            const auto parts = split_on(entry, ',');
            if (parts.size() != 2 || parts[0].empty() || parts[1].empty()) {
                throw InvalidArgument("two-file datasets are given as 'a.csv,b.csv', got '" + entry + "'");
            }
            s.view_a = std::string(parts[0]);
            s.view_b = std::string(parts[1]);
        } else {
            if (entry.find(',') != std::string::npos) {
                throw InvalidArgument("'" + entry + "' names two files but the view mode is pca");
            }
            s.view_a = entry;
        }
        s.name = s.view_a.stem().string();
        out.push_back(std::move(s));
    }
    if (!cfg.data_dir.empty()) {
        std::error_code ec;
        std::vector<std::filesystem::path> files;
        for (const auto& e : std::filesystem::directory_iterator(cfg.data_dir, ec)) {
            if (e.is_regular_file() && e.path().extension() == ".csv") {
                files.push_back(e.path());
            }
        }
        if (ec) {
            throw ParseError("cannot list '" + cfg.data_dir + "': " + ec.message());
        }
        std::sort(files.begin(), files.end());
        if (cfg.views == ViewMode::pca) {
            for (const auto& f : files) {
                out.push_back({f.stem().string(), f, {}});
            }
        } else {
            // Pairs are <name>_a.csv / <name>_b.csv.
            for (const auto& f : files) {
                const std::string stem = f.stem().string();
                if (stem.size() < 3 || stem.substr(stem.size() - 2) != "_a") {
                    continue;
                }
                const std::string base = stem.substr(0, stem.size() - 2);
                out.push_back({base, f, f.parent_path() / (base + "_b.csv")});
            }
        }
    }
    std::map<std::string, int> seen;
    for (auto& s : out) {
        const int n = ++seen[s.name];
        if (n > 1) {
            s.name += "_" + std::to_string(n);
        }
    }
    return out;
}

LoadedViews load_views(const DatasetSource& src, const RunConfig& cfg) {
    LoadedViews out;
    LabeledDataset a = load_csv(src.view_a, cfg.header);
    out.data.name = src.name;
    out.data.labels = std::move(a.labels);
    out.data.view_a = std::move(a.features);
    if (cfg.views == ViewMode::pca) {
        out.pca = fit_pca(out.data.view_a, cfg.variance);
        out.data.view_b = out.pca->project(out.data.view_a);
    } else {
        LabeledDataset b = load_csv(src.view_b, cfg.header);
        if (b.labels != out.data.labels) {
            throw DimensionError("'" + src.view_a.string() + "' and '" + src.view_b.string() +
                                 "' disagree on labels or row count");
        }
        out.data.view_b = std::move(b.features);
    }
    out.data.validate();
    return out;
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << h;
    return ss.str();
}

nlohmann::json manifest(const RunConfig& cfg) {
    nlohmann::json models = nlohmann::json::array();
    for (auto k : cfg.models) {
        models.push_back(std::string(to_string(k)));
    }
    nlohmann::json datasets = nlohmann::json::array();
    for (const auto& s : dataset_sources(cfg)) {
        nlohmann::json d{{"name", s.name}, {"view_a", s.view_a.string()}};
        if (!s.view_b.empty()) {
            d["view_b"] = s.view_b.string();
        }
        datasets.push_back(std::move(d));
    }
    const bool custom = cfg.c_values || cfg.theta_values || cfg.rho_values || cfg.h_values || cfg.tie_c ||
                        cfg.tie_theta || cfg.tie_h;
    nlohmann::json m{
        {"tool", "grvfl"},
        {"version", std::string(kToolVersion)},
        {"versions",
         {{"grvfl", std::string(kToolVersion)},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"model_schema", kModelSchemaVersion},
          {"pipeline_schema", kPipelineSchemaVersion}}},
        {"seed", cfg.seed.value_or(0)},
        {"repeats", cfg.repeats},
        {"repeat_aggregation", cfg.repeats == 1 ? "single split" : "mean over repeated splits"},
        {"train_fraction", cfg.train_fraction},
        {"folds", cfg.training.folds},
        {"views", std::string(to_string(cfg.views))},
        {"header", cfg.header},
        {"standardize", cfg.training.standardize},
        {"sigma", cfg.training.sigma},
        {"activation", std::string(to_string(cfg.training.activation))},
        {"ridge", cfg.training.ridge},
        {"models", models},
        {"grid_profile", custom ? "custom" : (cfg.fast ? "fast (not the published grid)" : "full")},
        {"grid", grid_json(cfg.grid())},
        {"datasets", datasets},
    };
    if (cfg.views == ViewMode::pca) {
        m["variance_fraction"] = cfg.variance;
    }
    m["config_hash"] = fnv1a_hex(m.dump());
    return m;
}

// ---------------------------------------------------------------------------
// bench

int run_bench(const RunConfig& cfg, std::ostream& log) {
    if (!cfg.seed) {
        throw InvalidArgument("a seed is required (--seed)");
    }
    const HyperGrid grid = cfg.grid();
    grid.validate();
    const auto sources = dataset_sources(cfg);
    if (sources.empty()) {
        throw InvalidArgument("no datasets given (--data or --data-dir)");
    }
    const nlohmann::json man = manifest(cfg);

    std::filesystem::create_directories(cfg.out / "datasets");
    std::filesystem::create_directories(cfg.out / "sweeps");
    write_json_file(cfg.out / "manifest.json", man);

    nlohmann::json dataset_reports = nlohmann::json::array();
    AccuracyTable table;
    for (auto k : cfg.models) {
        table.models.emplace_back(to_string(k));
    }
    std::vector<std::vector<double>> columns;
    std::size_t failures = 0;

    for (const auto& src : sources) {
        log << "[" << src.name << "] ";
        nlohmann::json rep{{"name", src.name}};
        try {
            const LoadedViews views = load_views(src, cfg);
            const MultiViewDataset& ds = views.data;
            rep["samples"] = ds.rows();
            rep["features_a"] = ds.view_a.cols();
            rep["features_b"] = ds.view_b.cols();
            if (views.pca) {
                rep["pca"] = {{"components", views.pca->dims()}, {"explained", views.pca->explained}};
            }
            const ClassOrder order = binary_class_order(ds.labels);
            rep["class_order"] = {order[0], order[1]};

            nlohmann::json model_reports = nlohmann::json::object();
            std::vector<double> column;
            for (auto kind : cfg.models) {
                const std::string mname(to_string(kind));
                nlohmann::json runs = nlohmann::json::array();
                double sum = 0.0;
                for (int r = 0; r < cfg.repeats; ++r) {
                    const std::uint64_t rseed = derive_seed(*cfg.seed, static_cast<std::uint64_t>(r));
                    const std::uint64_t split_seed = derive_seed(rseed, kSplitTag);
                    const TrainTestSplit split = split_train_test(ds, cfg.train_fraction, split_seed);
                    const GridSearchResult gs = grid_search(split.train, kind, grid, cfg.training, rseed);
                    const double acc =
                        fit_and_score(kind, split.train, split.test, gs.best, gs.model_seed, cfg.training);
                    std::size_t failed = 0;
                    for (const auto& e : gs.table) {
                        failed += e.error.empty() ? 0 : 1;
                    }
                    nlohmann::json best = to_json(gs.best);
                    if (!multiview(kind)) {
                        best = {{"c", gs.best.c1},
                                {"h", (kind == ModelKind::rvfl2 || kind == ModelKind::rvflwodl2) ? gs.best.h_b
                                                                                               : gs.best.h_a},
                                {"activation", std::string(to_string(gs.best.activation))}};
                    }
                    runs.push_back({{"repeat", r},
                                    {"split_seed", split_seed},
                                    {"train_size", split.train.rows()},
                                    {"test_size", split.test.rows()},
                                    {"best", best},
                                    {"best_index", gs.best_index},
                                    {"cv_accuracy", gs.table[gs.best_index].mean_accuracy},
                                    {"combos", gs.table.size()},
                                    {"failed_combos", failed},
                                    {"test_accuracy", acc}});
                    write_sweep_csv(cfg.out / "sweeps" /
                                        (sanitize(src.name) + "__" + mname + "__r" + std::to_string(r) + ".csv"),
                                    gs);
                    sum += acc;
                }
                const double mean = sum / cfg.repeats;
                column.push_back(mean);
                model_reports[mname] = {{"test_accuracy", mean}, {"runs", runs}};
                log << mname << "=" << std::fixed << std::setprecision(4) << mean << std::defaultfloat << " ";
            }
            rep["status"] = "ok";
            rep["models"] = model_reports;
            table.datasets.push_back(src.name);
            columns.push_back(std::move(column));
            log << "\n";
        } catch (const std::exception& e) {
            ++failures;
            rep["status"] = "error";
            rep["error"] = e.what();
            log << "failed: " << e.what() << "\n";
        }
        write_json_file(cfg.out / "datasets" / (sanitize(src.name) + ".json"), rep);
        dataset_reports.push_back(std::move(rep));
    }

    nlohmann::json report{{"manifest", man}, {"datasets", dataset_reports}};
    if (!columns.empty()) {
        table.acc.resize(static_cast<Index>(table.models.size()), static_cast<Index>(columns.size()));
        for (std::size_t d = 0; d < columns.size(); ++d) {
            for (std::size_t m = 0; m < columns[d].size(); ++m) {
                table.acc(static_cast<Index>(m), static_cast<Index>(d)) = columns[d][m];
            }
        }
        write_accuracy_csv(cfg.out / "accuracy_table.csv", table);
        if (table.models.size() >= 2) {
            report["statistics"] = to_json(compute_rank_stats(table), table);
        } else {
            report["statistics"] = {{"notes", {"rank statistics need at least two models"}}};
        }
    }
    write_json_file(cfg.out / "report.json", report);

    if (failures == sources.size()) {
        return kExitFailure;
    }
    return failures > 0 ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------------------
// train / predict

int run_train(const RunConfig& cfg, std::ostream& log) {
    if (!cfg.seed) {
        throw InvalidArgument("a seed is required (--seed)");
    }
    const auto sources = dataset_sources(cfg);
    if (sources.size() != 1) {
        throw InvalidArgument("train takes exactly one dataset");
    }
    LoadedViews views = load_views(sources.front(), cfg);
    MultiViewDataset ds = views.data;
    const Index raw_a = ds.view_a.cols();
    const Index raw_b = ds.view_b.cols();

    std::optional<ViewScalers> scalers;
    if (cfg.training.standardize) {
        ViewScalers s{fit_scaler(ds.view_a), fit_scaler(ds.view_b)};
        ds.view_a = s.a.apply(ds.view_a);
        ds.view_b = s.b.apply(ds.view_b);
        scalers = std::move(s);
    }

    HyperParams hyper = cfg.effective_hyper();
    std::uint64_t model_seed = width_seed(*cfg.seed, hyper.h_a, hyper.h_b);
    nlohmann::json tuning = nullptr;
    if (cfg.tune) {
        // Tuning standardizes per fold itself, so it sees the unscaled views.
        const GridSearchResult gs = grid_search(views.data, cfg.model, cfg.grid(), cfg.training, *cfg.seed);
        hyper = gs.best;
        model_seed = gs.model_seed;
        tuning = {{"best_index", gs.best_index},
                  {"cv_accuracy", gs.table[gs.best_index].mean_accuracy},
                  {"combos", gs.table.size()}};
        log << "tuned: cv accuracy " << gs.table[gs.best_index].mean_accuracy << "\n";
    }

    const ClassOrder order = binary_class_order(ds.labels);
    const TrainedModel model = fit_model(cfg.model, ds, order, hyper, model_seed);
    const double train_acc = accuracy(model.predict(ds.view_a, ds.view_b).labels, ds.labels);

    nlohmann::json pipeline{
        {"format", "grvfl-pipeline"},
        {"version", kPipelineSchemaVersion},
        {"views", std::string(to_string(cfg.views))},
        {"header", cfg.header},
        {"inputs", {{"view_a", raw_a}, {"view_b", raw_b}}},
        {"pca", views.pca ? to_json(*views.pca) : nlohmann::json(nullptr)},
        {"scalers", scalers ? nlohmann::json{{"view_a", to_json(scalers->a)}, {"view_b", to_json(scalers->b)}}
                            : nlohmann::json(nullptr)},
        {"seed", *cfg.seed},
        {"tuning", tuning},
        {"training_accuracy", train_acc},
        {"model", model.to_json()},
    };
    const std::filesystem::path path = cfg.model_file.empty() ? cfg.out / "model.json" : std::filesystem::path(cfg.model_file);
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    write_json_file(path, pipeline);
    log << "training accuracy " << std::setprecision(17) << train_acc << "\n";
    log << "model written to " << path.string() << "\n";

    if (!cfg.dump_graphs.empty()) {
        if (!model.grvflmv) {
            throw InvalidArgument("graph dumps are only available for grvflmv");
        }
        const std::filesystem::path dir = cfg.dump_graphs;
        std::filesystem::create_directories(dir);
        const OneHotTargets y = one_hot(ds.labels, order);
        const auto& gm = *model.grvflmv;
        const std::pair<const char*, const Matrix*> views_in[] = {{"a", &ds.view_a}, {"b", &ds.view_b}};
        for (const auto& [tag, x] : views_in) {
            const auto& map = tag[0] == 'a' ? gm.map_a : gm.map_b;
            const Matrix z = enhance(*x, map).z;
            const ViewGraph g =
                build_view_graph(z, y.class_index, hyper.sigma, hyper.ridge, std::string("view ") + tag);
            const std::string t(tag);
            write_matrix_csv(dir / ("intrinsic_weights_" + t + ".csv"), g.graphs.intrinsic);
            write_matrix_csv(dir / ("penalty_weights_" + t + ".csv"), g.graphs.penalty);
            write_matrix_csv(dir / ("laplacian_intrinsic_" + t + ".csv"), g.laplacians.intrinsic);
            write_matrix_csv(dir / ("laplacian_penalty_" + t + ".csv"), g.laplacians.penalty);
            write_matrix_csv(dir / ("embedding_" + t + ".csv"), g.embedding.g);
        }
        log << "graphs written to " << dir.string() << "\n";
    }
    return kExitOk;
}

int run_predict(const RunConfig& cfg, std::ostream& log) {
    if (cfg.model_file.empty()) {
        throw InvalidArgument("predict needs --model-file");
    }
    if (cfg.data.size() != 1) {
        throw InvalidArgument("predict takes exactly one dataset");
    }
    const nlohmann::json j = read_json_file(cfg.model_file);
    if (!j.is_object() || !j.contains("format") || j.at("format") != "grvfl-pipeline") {
        throw SchemaError("'" + cfg.model_file + "' is not a grvfl model file");
    }
    if (!j.contains("version") || j.at("version") != kPipelineSchemaVersion) {
        throw SchemaError("unsupported model file version " + (j.contains("version") ? j.at("version").dump() : "?") +
                          " (expected " + std::to_string(kPipelineSchemaVersion) + ")");
    }

    ViewMode mode;
    Index want_a = 0;
    Index want_b = 0;
    bool header = true;
    std::optional<PcaTransform> pca;
    std::optional<ViewScalers> scalers;
    TrainedModel model;
    try {
        mode = parse_view_mode(j.at("views").get<std::string>());
        header = j.at("header").get<bool>();
        want_a = j.at("inputs").at("view_a").get<Index>();
        want_b = j.at("inputs").at("view_b").get<Index>();
        if (!j.at("pca").is_null()) pca = pca_from_json(j.at("pca"));
        if (!j.at("scalers").is_null()) {
            scalers = ViewScalers{scaler_from_json(j.at("scalers").at("view_a")),
                                  scaler_from_json(j.at("scalers").at("view_b"))};
        }
        model = TrainedModel::from_json(j.at("model"));
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed model file: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw SchemaError(std::string("malformed model file: ") + e.what());
    }
    if (mode == ViewMode::pca && !pca) {
        throw SchemaError("model file uses pca views but stores no PCA transform");
    }

    RunConfig read_cfg = cfg;
    read_cfg.views = mode;
    read_cfg.header = header;
    const auto sources = dataset_sources(read_cfg);
    const auto& src = sources.front();

    std::vector<std::string> labels;
    Matrix xa = read_features(src.view_a, read_cfg, labels);
    if (xa.cols() != want_a) {
        throw DimensionError("view A: expected " + std::to_string(want_a) + " feature columns, found " +
                             std::to_string(xa.cols()));
    }
    Matrix xb;
    if (mode == ViewMode::pca) {
        xb = pca->project(xa);
    } else {
        std::vector<std::string> labels_b;
        xb = read_features(src.view_b, read_cfg, labels_b);
        if (xb.cols() != want_b) {
            throw DimensionError("view B: expected " + std::to_string(want_b) + " feature columns, found " +
                                 std::to_string(xb.cols()));
        }
        if (xb.rows() != xa.rows()) {
            throw DimensionError("view A has " + std::to_string(xa.rows()) + " rows, view B " +
                                 std::to_string(xb.rows()));
        }
    }
    if (scalers) {
        xa = scalers->a.apply(xa);
        xb = scalers->b.apply(xb);
    }
    const Prediction p = model.predict(xa, xb);

    const std::filesystem::path out_path =
        cfg.predictions.empty() ? cfg.out / "predictions.csv" : std::filesystem::path(cfg.predictions);
    if (out_path.has_parent_path()) {
        std::filesystem::create_directories(out_path.parent_path());
    }
    std::ofstream out(out_path);
    if (!out) {
        throw Error("cannot write '" + out_path.string() + "'");
    }
    out << "label\n";
    for (const auto& l : p.labels) {
        out << l << '\n';
    }
    log << p.labels.size() << " predictions written to " << out_path.string() << "\n";
    if (!labels.empty()) {
        log << "accuracy " << std::setprecision(17) << accuracy(p.labels, labels) << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// stats

int run_stats(const std::filesystem::path& table_csv, const std::string& json_out, std::ostream& out) {
    const AccuracyTable table = read_accuracy_csv(table_csv);
    const RankStats s = compute_rank_stats(table);
    const int n = static_cast<int>(table.datasets.size());

    out << "models " << table.models.size() << ", datasets " << n << "\n\n";
    out << std::left << std::setw(16) << "model" << std::right << std::setw(12) << "avg acc" << std::setw(12)
        << "avg rank" << "\n";
    for (std::size_t m = 0; m < table.models.size(); ++m) {
        out << std::left << std::setw(16) << table.models[m] << std::right << std::fixed << std::setprecision(2)
            << std::setw(12) << 100.0 * table.acc.row(static_cast<Index>(m)).mean() << std::setw(12)
            << s.avg_ranks(static_cast<Index>(m)) << "\n";
    }
    out << std::defaultfloat << std::setprecision(6) << "\n";
    if (s.chi2) out << "Friedman chi2_F = " << *s.chi2 << "\n";
    if (s.ff) out << "Iman-Davenport F_F = " << *s.ff << "\n";
    if (s.cd) out << "Nemenyi CD (alpha 0.05, q = " << *s.q_alpha << ") = " << *s.cd << "\n";
    for (const auto& note : s.notes) {
        out << "note: " << note << "\n";
    }
    out << "\nwin-tie-loss (row vs column), significance threshold " << s.wtl.threshold << " wins\n";
    out << std::left << std::setw(16) << "";
    for (const auto& name : table.models) {
        out << std::setw(12) << name;
    }
    out << "\n";
    for (std::size_t i = 0; i < table.models.size(); ++i) {
        out << std::setw(16) << table.models[i];
        for (std::size_t k = 0; k < table.models.size(); ++k) {
            if (i == k) {
                out << std::setw(12) << "-";
                continue;
            }
            const auto& w = s.wtl.counts[i][k];
            out << std::setw(12)
                << (std::to_string(w.wins) + "/" + std::to_string(w.ties) + "/" + std::to_string(w.losses));
        }
        out << "\n";
    }
    out << std::right;
    if (!json_out.empty()) {
        write_json_file(json_out, to_json(s, table));
        out << "\nwritten to " << json_out << "\n";
    }
    return kExitOk;
}

}  // namespace grvfl
