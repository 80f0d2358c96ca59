#include "grvfl/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace grvfl {

namespace {

constexpr double kTieTolerance = 1e-12;

std::string trim_copy(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {};
    }
    return s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cells.push_back(trim_copy(cell));
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

double friedman_chi2(std::span<const double> avg_ranks, double n, double k) {
    double sum_sq = 0.0;
    for (double r : avg_ranks) {
        sum_sq += r * r;
    }
    return 12.0 * n / (k * (k + 1.0)) * (sum_sq - k * (k + 1.0) * (k + 1.0) / 4.0);
}

}  // namespace

double accuracy(std::span<const std::string> predicted, std::span<const std::string> truth) {
    if (predicted.size() != truth.size() || truth.empty()) {
        throw DimensionError("accuracy needs two non-empty sequences of equal length");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        hits += predicted[i] == truth[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size() || truth.empty()) {
        throw DimensionError("accuracy needs two non-empty sequences of equal length");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        hits += predicted[i] == truth[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

void AccuracyTable::validate() const {
    if (acc.rows() != static_cast<Index>(models.size()) || acc.cols() != static_cast<Index>(datasets.size())) {
        throw DimensionError("accuracy table shape does not match its model/dataset names");
    }
    if (models.empty() || datasets.empty()) {
        throw InvalidArgument("accuracy table is empty");
    }
    for (Index i = 0; i < acc.size(); ++i) {
        const double v = acc.data()[i];
        if (!(v >= 0.0 && v <= 1.0)) {
            throw InvalidArgument("accuracy table entries must lie in [0, 1]");
        }
    }
}

Matrix dataset_ranks(const AccuracyTable& table) {
    table.validate();
    const Index k = table.acc.rows();
    Matrix ranks(k, table.acc.cols());
    std::vector<Index> order(static_cast<std::size_t>(k));
    for (Index d = 0; d < table.acc.cols(); ++d) {
        std::iota(order.begin(), order.end(), Index{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](Index a, Index b) { return table.acc(a, d) > table.acc(b, d); });
        std::size_t start = 0;
        while (start < order.size()) {
            std::size_t end = start + 1;
            while (end < order.size() &&
                   std::abs(table.acc(order[end], d) - table.acc(order[end - 1], d)) <= kTieTolerance) {
                ++end;
            }
            // positions start..end-1 (0-based) cover ranks start+1..end
            const double shared = 0.5 * static_cast<double>(start + 1 + end);
            for (std::size_t i = start; i < end; ++i) {
                ranks(order[i], d) = shared;
            }
            start = end;
        }
    }
    return ranks;
}

Vector rank_models(const AccuracyTable& table) { return dataset_ranks(table).rowwise().mean(); }

FriedmanResult friedman(std::span<const double> avg_ranks, int datasets, int models) {
    if (models < 2 || datasets < 2) {
        throw InvalidArgument("Friedman test needs at least two models and two datasets");
    }
    if (avg_ranks.size() != static_cast<std::size_t>(models)) {
        throw DimensionError("Friedman test: rank vector length differs from the model count");
    }
    const double n = datasets;
    const double k = models;
    FriedmanResult out;
    out.chi2 = friedman_chi2(avg_ranks, n, k);
    const double denom = n * (k - 1.0) - out.chi2;
    if (std::abs(denom) <= 1e-12 * n * k) {
        throw NumericalError("Friedman F statistic undefined: N(k-1) equals chi2_F");
    }
    out.ff = (n - 1.0) * out.chi2 / denom;
    return out;
}

double nemenyi_cd(int models, int datasets, double q_alpha) {
    if (models < 1 || datasets < 1 || !(q_alpha >= 0.0)) {
        throw InvalidArgument("critical difference needs positive model/dataset counts and q >= 0");
    }
    const double k = models;
    return q_alpha * std::sqrt(k * (k + 1.0) / (6.0 * datasets));
}

double nemenyi_q_alpha_005(int models) {
    static constexpr double kTable[] = {1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164};
    if (models < 2 || models > 10) {
        throw InvalidArgument("no tabulated q_0.05 for " + std::to_string(models) + " models (2..10 available)");
    }
    return kTable[models - 2];
}

int effective_wins(const WinTieLoss& w) { return w.wins + (w.ties - w.ties % 2) / 2; }

double win_threshold(int datasets) {
    const double n = datasets;
    return n / 2.0 + 1.96 * std::sqrt(n) / 2.0;
}

WinTieLossTable win_tie_loss(const AccuracyTable& table) {
    table.validate();
    const auto k = static_cast<std::size_t>(table.acc.rows());
    WinTieLossTable out;
    out.threshold = win_threshold(static_cast<int>(table.acc.cols()));
    out.counts.assign(k, std::vector<WinTieLoss>(k));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) {
                continue;
            }
            auto& w = out.counts[i][j];
            for (Index d = 0; d < table.acc.cols(); ++d) {
                const double diff = table.acc(static_cast<Index>(i), d) - table.acc(static_cast<Index>(j), d);
                if (std::abs(diff) <= kTieTolerance) {
                    ++w.ties;
                } else if (diff > 0.0) {
                    ++w.wins;
                } else {
                    ++w.losses;
                }
            }
        }
    }
    return out;
}

RankStats compute_rank_stats(const AccuracyTable& table) {
    table.validate();
    const int k = static_cast<int>(table.models.size());
    const int n = static_cast<int>(table.datasets.size());
    if (k < 2) {
        throw InvalidArgument("need >= 2 models to compare");
    }
    RankStats s;
    s.avg_ranks = rank_models(table);
    if (n >= 2) {
        const std::span<const double> ranks(s.avg_ranks.data(), static_cast<std::size_t>(s.avg_ranks.size()));
        s.chi2 = friedman_chi2(ranks, n, k);
        try {
            s.ff = friedman(ranks, n, k).ff;
        } catch (const NumericalError& e) {
            s.notes.emplace_back(e.what());
        }
    } else {
        s.notes.emplace_back("Friedman test needs at least two datasets");
    }
    if (k <= 10) {
        s.q_alpha = nemenyi_q_alpha_005(k);
        s.cd = nemenyi_cd(k, n, *s.q_alpha);
    } else {
        s.notes.emplace_back("no tabulated Nemenyi q for more than 10 models");
    }
    s.wtl = win_tie_loss(table);
    return s;
}

nlohmann::json to_json(const RankStats& s, const AccuracyTable& table) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    nlohmann::json ranks = nlohmann::json::array();
    for (std::size_t i = 0; i < table.models.size(); ++i) {
        ranks.push_back({{"model", table.models[i]}, {"avg_rank", s.avg_ranks(static_cast<Index>(i))}});
    }
    nlohmann::json wtl = nlohmann::json::array();
    for (std::size_t i = 0; i < table.models.size(); ++i) {
        for (std::size_t j = 0; j < table.models.size(); ++j) {
            if (i == j) {
                continue;
            }
            const auto& w = s.wtl.counts[i][j];
            wtl.push_back({{"model", table.models[i]},
                           {"versus", table.models[j]},
                           {"wins", w.wins},
                           {"ties", w.ties},
                           {"losses", w.losses},
                           {"effective_wins", effective_wins(w)},
                           {"significant", effective_wins(w) >= s.wtl.threshold}});
        }
    }
    return {{"models", table.models},
            {"datasets", table.datasets},
            {"avg_ranks", ranks},
            {"chi2_F", opt(s.chi2)},
            {"F_F", opt(s.ff)},
            {"q_alpha", opt(s.q_alpha)},
            {"alpha", 0.05},
            {"CD", opt(s.cd)},
            {"win_threshold", s.wtl.threshold},
            {"wtl", wtl},
            {"notes", s.notes}};
}

void write_accuracy_csv(const std::filesystem::path& path, const AccuracyTable& table) {
    table.validate();
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    out << "dataset";
    for (const auto& m : table.models) {
        out << ',' << m;
    }
    out << '\n' << std::fixed << std::setprecision(4);
    for (std::size_t d = 0; d < table.datasets.size(); ++d) {
        out << table.datasets[d];
        for (std::size_t m = 0; m < table.models.size(); ++m) {
            out << ',' << 100.0 * table.acc(static_cast<Index>(m), static_cast<Index>(d));
        }
        out << '\n';
    }
    out << "Average ACC";
    const Vector mean = table.acc.rowwise().mean();
    for (Index m = 0; m < mean.size(); ++m) {
        out << ',' << 100.0 * mean(m);
    }
    out << '\n';
    if (table.models.size() >= 2) {
        out << "Average Rank";
        const Vector ranks = rank_models(table);
        for (Index m = 0; m < ranks.size(); ++m) {
            out << ',' << ranks(m);
        }
        out << '\n';
    }
}

AccuracyTable read_accuracy_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open '" + path.string() + "'");
    }
    AccuracyTable t;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim_copy(line).empty()) {
            continue;
        }
        const auto cells = split_line(line);
        if (header) {
            header = false;
            t.models.assign(cells.begin() + 1, cells.end());
            continue;
        }
        if (cells.front().rfind("Average", 0) == 0) {
            continue;
        }
        if (cells.size() != t.models.size() + 1) {
            throw ParseError(path.string() + ": row " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size() - 1) + " values for " + std::to_string(t.models.size()) +
                             " models (missing cell?)");
        }
        std::vector<double> values;
        for (std::size_t c = 1; c < cells.size(); ++c) {
            double v = 0.0;
            const auto& s = cells[c];
            const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
                throw ParseError(path.string() + ": row " + std::to_string(line_no) + ", column " +
                                 std::to_string(c + 1) + ": missing or invalid accuracy '" + s + "'");
            }
            values.push_back(v);
        }
        t.datasets.push_back(cells.front());
        rows.push_back(std::move(values));
    }
    if (t.models.empty() || rows.empty()) {
        throw ParseError(path.string() + ": accuracy table has no models or no datasets");
    }
    bool percent = false;
    for (const auto& r : rows) {
        percent = percent || std::any_of(r.begin(), r.end(), [](double v) { return v > 1.0; });
    }
    t.acc.resize(static_cast<Index>(t.models.size()), static_cast<Index>(rows.size()));
    for (std::size_t d = 0; d < rows.size(); ++d) {
        for (std::size_t m = 0; m < t.models.size(); ++m) {
            t.acc(static_cast<Index>(m), static_cast<Index>(d)) = percent ? rows[d][m] / 100.0 : rows[d][m];
        }
    }
    t.validate();
    return t;
}

}  // namespace grvfl
