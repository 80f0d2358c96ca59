#include "doctest.h"

#include "grvfl/model_io.hpp"
#include "grvfl/pipeline.hpp"
#include "test_util.hpp"

#include <sstream>

using namespace grvfl;
using testutil::TempDir;

namespace {

RunConfig small_config(const TempDir& dir) {
    RunConfig cfg;
    cfg.seed = 17;
    cfg.out = dir / "out";
    cfg.c_values = std::vector<double>{0.1, 10.0};
    cfg.theta_values = std::vector<double>{0.0};
    cfg.rho_values = std::vector<double>{0.0};
    cfg.h_values = std::vector<Index>{5};
    cfg.training.folds = 3;
    return cfg;
}

std::filesystem::path write_blobs(const TempDir& dir, const std::string& name, Index rows, std::uint64_t seed) {
    const auto ds = testutil::blobs(rows, 4, 2, seed);
    const auto p = dir / name;
    testutil::write_view_csv(p, ds.view_a, ds.labels);
    return p;
}

nlohmann::json read_json(const std::filesystem::path& p) {
    return nlohmann::json::parse(testutil::read_file(p));
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

TEST_CASE("settings text parsing") {
    const auto s = parse_settings("# comment\nseed = 5\n\n  out=  results  # trailing\nmodels = rvfl, grvflmv\n");
    REQUIRE(s.size() == 3);
    CHECK(s[0] == std::pair<std::string, std::string>{"seed", "5"});
    CHECK(s[1] == std::pair<std::string, std::string>{"out", "results"});
    CHECK_THROWS_WITH_AS(parse_settings("seed 5\n", "cfg.ini"), doctest::Contains("cfg.ini:1"), ParseError);
}

TEST_CASE("config precedence: defaults, file, environment, flags") {
    const Settings file{{"seed", "1"}, {"out", "from-file"}, {"repeats", "3"}};
    const Settings flags{{"seed", "2"}};
    const auto a = resolve_config(file, flags, "from-env");
    CHECK(*a.seed == 2);
    CHECK(a.out == "from-env");
    CHECK(a.repeats == 3);

    const auto b = resolve_config(file, Settings{{"out", "from-flag"}}, "from-env");
    CHECK(b.out == "from-flag");
    CHECK(*b.seed == 1);

    const auto c = resolve_config({}, {}, nullptr);
    CHECK_FALSE(c.seed.has_value());
    CHECK(c.out == "grvfl-out");
    CHECK(c.variance == 0.95);
    CHECK(c.train_fraction == 0.7);
    CHECK(c.training.folds == 5);
}

TEST_CASE("settings values") {
    RunConfig cfg;
    apply_setting(cfg, "models", "rvfl,grvflmv,rvfl");
    CHECK(cfg.models == std::vector<ModelKind>{ModelKind::rvfl, ModelKind::grvflmv});
    apply_setting(cfg, "c-values", "0.5,2");
    apply_setting(cfg, "h-values", "3,9");
    apply_setting(cfg, "fast", "true");
    const auto g = cfg.grid();
    CHECK(g.c_values == std::vector<double>{0.5, 2.0});
    CHECK(g.h_values == std::vector<Index>{3, 9});
    CHECK(g.theta_values == HyperGrid::fast().theta_values);
    apply_setting(cfg, "theta", "0.25");
    CHECK(cfg.hyper.theta1 == 0.25);
    CHECK(cfg.hyper.theta2 == 0.25);
    apply_setting(cfg, "hidden-b", "12");
    CHECK(cfg.hyper.h_b == 12);
    apply_setting(cfg, "views", "two-file");
    CHECK(cfg.views == ViewMode::two_file);

    CHECK_THROWS_AS(apply_setting(cfg, "colour", "blue"), InvalidArgument);
    CHECK_THROWS_AS(apply_setting(cfg, "seed", "abc"), InvalidArgument);
    CHECK_THROWS_AS(apply_setting(cfg, "train-fraction", "1.5"), InvalidArgument);
    CHECK_THROWS_AS(apply_setting(cfg, "models", "svm"), InvalidArgument);
}

TEST_CASE("bench needs a seed") {
    TempDir dir("pipe");
    auto cfg = small_config(dir);
    cfg.seed.reset();
    cfg.data = {write_blobs(dir, "a.csv", 30, 1).string()};
    std::ostringstream log;
    CHECK_THROWS_WITH_AS(run_bench(cfg, log), doctest::Contains("seed"), InvalidArgument);
}

TEST_CASE("manifest hash tracks the configuration") {
    TempDir dir("pipe");
    auto cfg = small_config(dir);
    const auto m1 = manifest(cfg);
    CHECK(m1.at("config_hash") == manifest(cfg).at("config_hash"));
    cfg.out = dir / "elsewhere";
    CHECK(m1.at("config_hash") == manifest(cfg).at("config_hash"));
    cfg.seed = 18;
    CHECK(m1.at("config_hash") != manifest(cfg).at("config_hash"));
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

// ---------------------------------------------------------------------------
// Dataset sources

TEST_CASE("data directory expansion") {
    TempDir dir("pipe");
    write_blobs(dir, "beta.csv", 20, 1);
    write_blobs(dir, "alpha.csv", 20, 2);
    dir.write("notes.txt", "ignored");
    RunConfig cfg;
    cfg.data_dir = dir.path().string();
    const auto s = dataset_sources(cfg);
    REQUIRE(s.size() == 2);
    CHECK(s[0].name == "alpha");
    CHECK(s[1].name == "beta");
}

TEST_CASE("two-file views") {
    TempDir dir("pipe");
    const auto ds = testutil::blobs(40, 3, 2, 6);
    testutil::write_view_csv(dir / "toy_a.csv", ds.view_a, ds.labels);
    testutil::write_view_csv(dir / "toy_b.csv", ds.view_b, ds.labels);
    RunConfig cfg;
    cfg.views = ViewMode::two_file;
    cfg.data_dir = dir.path().string();
    const auto s = dataset_sources(cfg);
    REQUIRE(s.size() == 1);
    CHECK(s[0].name == "toy");
    const auto lv = load_views(s[0], cfg);
    CHECK_FALSE(lv.pca.has_value());
    CHECK(lv.data.view_a.cols() == 3);
    CHECK(lv.data.view_b.cols() == 2);
    CHECK((lv.data.view_b - ds.view_b).cwiseAbs().maxCoeff() <= 1e-12);

    auto flipped = ds.labels;
    std::swap(flipped[0], flipped[1]);
    testutil::write_view_csv(dir / "bad_b.csv", ds.view_b, flipped);
    const DatasetSource bad{"bad", dir / "toy_a.csv", dir / "bad_b.csv"};
    CHECK_THROWS_AS(load_views(bad, cfg), DimensionError);
}

TEST_CASE("pca views") {
    TempDir dir("pipe");
    RunConfig cfg;
    const DatasetSource src{"blob", write_blobs(dir, "blob.csv", 40, 3), {}};
    const auto lv = load_views(src, cfg);
    REQUIRE(lv.pca.has_value());
    CHECK(lv.data.view_a.cols() == 4);
    CHECK(lv.data.view_b.cols() == lv.pca->dims());
    CHECK(lv.data.view_b.cols() >= 1);
}

// ---------------------------------------------------------------------------
// Bench

TEST_CASE("bench on two toy datasets") {
    TempDir dir("pipe");
    auto cfg = small_config(dir);
    cfg.data = {write_blobs(dir, "one.csv", 40, 1).string(), write_blobs(dir, "two.csv", 40, 2).string()};
    std::ostringstream log;
    REQUIRE(run_bench(cfg, log) == kExitOk);

    const auto table = read_accuracy_csv(cfg.out / "accuracy_table.csv");
    CHECK(table.models == std::vector<std::string>{"grvflmv", "rvfl"});
    CHECK(table.datasets == std::vector<std::string>{"one", "two"});
    CHECK(table.acc.rows() == 2);
    CHECK(table.acc.cols() == 2);

    const auto report = read_json(cfg.out / "report.json");
    const auto& stats = report.at("statistics");
    CHECK(stats.at("avg_ranks").size() == 2);
    CHECK(stats.contains("wtl"));
    CHECK(std::filesystem::exists(cfg.out / "manifest.json"));
    CHECK(std::filesystem::exists(cfg.out / "datasets" / "one.json"));
    CHECK(std::filesystem::exists(cfg.out / "sweeps" / "two__rvfl__r0.csv"));
    CHECK(read_json(cfg.out / "datasets" / "two.json").at("status") == "ok");
}

TEST_CASE("bench reruns are byte-identical") {
    TempDir dir("pipe");
    auto cfg = small_config(dir);
    cfg.data = {write_blobs(dir, "one.csv", 36, 4).string()};
    cfg.repeats = 2;
    std::ostringstream log;
    cfg.out = dir / "run1";
    REQUIRE(run_bench(cfg, log) == kExitOk);
    cfg.out = dir / "run2";
    REQUIRE(run_bench(cfg, log) == kExitOk);
    for (const char* f : {"report.json", "manifest.json", "accuracy_table.csv", "sweeps/one__grvflmv__r1.csv"}) {
        CAPTURE(f);
        CHECK(testutil::read_file(dir / "run1" / f) == testutil::read_file(dir / "run2" / f));
    }
}

TEST_CASE("bench exit codes on missing inputs") {
    TempDir dir("pipe");
    auto cfg = small_config(dir);
    cfg.data = {write_blobs(dir, "one.csv", 30, 5).string(), (dir / "absent.csv").string()};
    std::ostringstream log;
    CHECK(run_bench(cfg, log) == kExitPartial);
    CHECK(read_json(cfg.out / "datasets" / "absent.json").at("status") == "error");

    cfg.data = {(dir / "absent.csv").string()};
    cfg.out = dir / "out2";
    CHECK(run_bench(cfg, log) == kExitFailure);
}

// ---------------------------------------------------------------------------
// Train and predict

TEST_CASE("train then predict reproduces the training accuracy") {
    TempDir dir("pipe");
    RunConfig cfg;
    cfg.seed = 3;
    cfg.out = dir / "out";
    cfg.data = {write_blobs(dir, "toy.csv", 50, 7).string()};
    cfg.hyper.h_a = cfg.hyper.h_b = 6;
    std::ostringstream log;
    REQUIRE(run_train(cfg, log) == kExitOk);
    const auto model_path = cfg.out / "model.json";
    REQUIRE(std::filesystem::exists(model_path));
    const auto doc = read_json(model_path);
    CHECK(doc.at("format") == "grvfl-pipeline");
    const double train_acc = doc.at("training_accuracy").get<double>();

    RunConfig pc;
    pc.model_file = model_path.string();
    pc.data = cfg.data;
    pc.predictions = (dir / "pred.csv").string();
    std::ostringstream plog;
    REQUIRE(run_predict(pc, plog) == kExitOk);
    const std::string pred = testutil::read_file(dir / "pred.csv");
    CHECK(pred.rfind("label\n", 0) == 0);
    std::ostringstream expect;
    expect.precision(17);
    expect << "accuracy " << train_acc;
    CHECK(plog.str().find(expect.str()) != std::string::npos);
}

TEST_CASE("predict rejects inputs that do not match the model") {
    TempDir dir("pipe");
    RunConfig cfg;
    cfg.seed = 3;
    cfg.out = dir / "out";
    cfg.data = {write_blobs(dir, "toy.csv", 30, 8).string()};
    cfg.hyper.h_a = cfg.hyper.h_b = 4;
    std::ostringstream log;
    REQUIRE(run_train(cfg, log) == kExitOk);

    RunConfig pc;
    pc.model_file = (cfg.out / "model.json").string();
    const auto wide = testutil::blobs(10, 5, 2, 1);
    testutil::write_view_csv(dir / "wide.csv", wide.view_a, wide.labels);
    pc.data = {(dir / "wide.csv").string()};
    pc.predictions = (dir / "p.csv").string();
    CHECK_THROWS_WITH_AS(run_predict(pc, log), doctest::Contains("expected 4 feature columns, found 5"),
                         DimensionError);

    auto doc = read_json(cfg.out / "model.json");
    doc["version"] = 99;
    dir.write("v99.json", doc.dump());
    pc.model_file = (dir / "v99.json").string();
    pc.data = cfg.data;
    CHECK_THROWS_AS(run_predict(pc, log), SchemaError);

    dir.write("junk.json", "{\"format\": \"grvfl-pipeline\"");
    pc.model_file = (dir / "junk.json").string();
    CHECK_THROWS_AS(run_predict(pc, log), SchemaError);
}

TEST_CASE("train dumps graph matrices on request") {
    TempDir dir("pipe");
    RunConfig cfg;
    cfg.seed = 4;
    cfg.out = dir / "out";
    cfg.data = {write_blobs(dir, "toy.csv", 24, 9).string()};
    cfg.hyper.h_a = cfg.hyper.h_b = 3;
    cfg.dump_graphs = (dir / "graphs").string();
    std::ostringstream log;
    REQUIRE(run_train(cfg, log) == kExitOk);
    for (const char* f : {"intrinsic_weights_a.csv", "penalty_weights_b.csv", "laplacian_intrinsic_a.csv",
                          "embedding_b.csv"}) {
        CAPTURE(f);
        CHECK(std::filesystem::exists(dir / "graphs" / f));
    }
}

// ---------------------------------------------------------------------------
// Stats

TEST_CASE("stats on a table file") {
    TempDir dir("pipe");
    const auto p = dir.write("t.csv", "dataset,a,b,c\nd1,90,80,70\nd2,85,88,60\nd3,70,71,72\n");
    std::ostringstream out;
    CHECK(run_stats(p, (dir / "s.json").string(), out) == kExitOk);
    CHECK(out.str().find("Friedman") != std::string::npos);
    const auto j = read_json(dir / "s.json");
    CHECK(j.at("avg_ranks").size() == 3);

    const auto solo = dir.write("solo.csv", "dataset,a\nd1,90\nd2,80\n");
    CHECK_THROWS_WITH_AS(run_stats(solo, "", out), doctest::Contains("need >= 2 models"), InvalidArgument);
}
