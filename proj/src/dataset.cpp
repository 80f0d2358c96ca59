#include "grvfl/dataset.hpp"

#include "grvfl/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

namespace grvfl {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    if (s.empty()) {
        return std::nullopt;
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return value;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace

void MultiViewDataset::validate() const {
    if (view_a.rows() != view_b.rows() || static_cast<std::size_t>(view_a.rows()) != labels.size()) {
        std::ostringstream msg;
        msg << "multi-view dataset '" << name << "': row counts disagree (view A " << view_a.rows()
            << ", view B " << view_b.rows() << ", labels " << labels.size() << ")";
        throw DimensionError(msg.str());
    }
    if (view_a.cols() < 1 || view_b.cols() < 1) {
        throw DimensionError("multi-view dataset '" + name + "': both views need at least one column");
    }
}

std::string canonical_label(std::string_view raw) {
    const auto text = trim(raw);
    if (const auto value = parse_double(text); value && std::isfinite(*value)) {
        char buf[64];
        const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), *value);
        if (ec == std::errc{}) {
            return std::string(buf, ptr);
        }
    }
    return std::string(text);
}

ClassOrder binary_class_order(std::span<const std::string> labels) {
    std::set<std::string> distinct(labels.begin(), labels.end());
    if (distinct.size() != 2) {
        throw InvalidArgument("labels are not binary: found " + std::to_string(distinct.size()) +
                              " distinct value(s)");
    }
    ClassOrder order{*distinct.begin(), *std::next(distinct.begin())};
    const auto a = parse_double(order[0]);
    const auto b = parse_double(order[1]);
    if (a && b && *b < *a) {
        std::swap(order[0], order[1]);
    }
    return order;
}

CsvTable read_csv_table(const std::filesystem::path& path, bool has_header, bool has_labels) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open '" + path.string() + "'");
    }
    const std::size_t min_columns = has_labels ? 2 : 1;
    std::vector<std::vector<double>> rows;
    CsvTable table;
    std::size_t columns = 0;
    std::size_t line_no = 0;
    bool header_pending = has_header;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        if (header_pending) {
            header_pending = false;
            continue;
        }
        const auto cells = split_commas(line);
        if (columns == 0) {
            columns = cells.size();
            if (columns < min_columns) {
                throw ParseError(path.string() + ": row " + std::to_string(line_no) + " has too few columns");
            }
        } else if (cells.size() != columns) {
            throw ParseError(path.string() + ": row " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size()) + " columns, expected " + std::to_string(columns));
        }
        const std::size_t n_features = has_labels ? columns - 1 : columns;
        std::vector<double> values(n_features);
        for (std::size_t c = 0; c < n_features; ++c) {
            const auto v = parse_double(cells[c]);
            if (!v || !std::isfinite(*v)) {
                throw ParseError(path.string() + ": row " + std::to_string(line_no) + ", column " +
                                 std::to_string(c + 1) + ": '" + std::string(trim(cells[c])) +
                                 "' is not a finite number");
            }
            values[c] = *v;
        }
        rows.push_back(std::move(values));
        if (has_labels) {
            table.labels.push_back(canonical_label(cells.back()));
        }
    }
    if (rows.empty()) {
        throw ParseError(path.string() + ": no data rows");
    }
    const std::size_t n_features = rows.front().size();
    table.features.resize(static_cast<Index>(rows.size()), static_cast<Index>(n_features));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < n_features; ++c) {
            table.features(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
        }
    }
    return table;
}

LabeledDataset load_csv(const std::filesystem::path& path, bool has_header) {
    CsvTable table = read_csv_table(path, has_header, true);
    try {
        binary_class_order(table.labels);
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(path.string() + ": " + e.what());
    }
    return {std::move(table.features), std::move(table.labels), path.stem().string()};
}

// ---------------------------------------------------------------------------

Matrix Scaler::apply(const Matrix& x) const {
    if (x.cols() != mean.size()) {
        throw DimensionError("scaler fitted on " + std::to_string(mean.size()) + " columns, got " +
                             std::to_string(x.cols()));
    }
    Matrix out = x.rowwise() - mean.transpose();
    out.array().rowwise() /= scale.transpose().array();
    return out;
}

Scaler fit_scaler(const Matrix& train) {
    if (train.rows() == 0 || train.cols() == 0) {
        throw InvalidArgument("cannot standardize an empty matrix");
    }
    Scaler s;
    s.mean = train.colwise().mean().transpose();
    s.scale.resize(train.cols());
    for (Index c = 0; c < train.cols(); ++c) {
        const double var = (train.col(c).array() - s.mean(c)).square().mean();
        const double sd = std::sqrt(var);
        // Columns that are constant up to rounding of the mean stay unscaled.
        s.scale(c) = sd > 1e-12 * std::max(1.0, std::abs(s.mean(c))) ? sd : 1.0;
    }
    return s;
}

Standardized standardize(const Matrix& train, std::span<const Matrix> apply_to) {
    Standardized out;
    out.scaler = fit_scaler(train);
    out.train = out.scaler.apply(train);
    out.others.reserve(apply_to.size());
    for (const auto& m : apply_to) {
        out.others.push_back(out.scaler.apply(m));
    }
    return out;
}

// ---------------------------------------------------------------------------

Matrix PcaTransform::project(const Matrix& x) const {
    if (x.cols() != mean.size()) {
        throw DimensionError("PCA fitted on " + std::to_string(mean.size()) + " columns, got " +
                             std::to_string(x.cols()));
    }
    return (x.rowwise() - mean.transpose()) * components;
}

PcaTransform fit_pca(const Matrix& x, double variance_fraction) {
    if (!(variance_fraction > 0.0 && variance_fraction <= 1.0)) {
        throw InvalidArgument("variance fraction must lie in (0, 1]");
    }
    if (x.rows() < 2 || x.cols() < 1) {
        throw InvalidArgument("PCA needs at least two rows and one column");
    }
    if (!x.allFinite()) {
        throw InvalidArgument("PCA input contains non-finite values");
    }
    PcaTransform pca;
    pca.mean = x.colwise().mean().transpose();
    const Matrix centered = x.rowwise() - pca.mean.transpose();
    const Matrix cov = (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);

    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    if (eig.info() != Eigen::Success) {
        throw NumericalError("PCA eigendecomposition failed");
    }
    const Index p = x.cols();
    pca.eigenvalues = eig.eigenvalues().reverse().cwiseMax(0.0);
    const Matrix vectors = eig.eigenvectors().rowwise().reverse();

    const double total = pca.eigenvalues.sum();
    const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
    if (!(total > 1e-20 * scale * scale)) {
        throw InvalidArgument("degenerate data, no principal components");
    }
    Index keep = 0;
    double cumulative = 0.0;
    while (keep < p) {
        cumulative += pca.eigenvalues(keep);
        ++keep;
        if (cumulative / total >= variance_fraction * (1.0 - 1e-12)) {
            break;
        }
    }
    pca.explained = cumulative / total;
    pca.components = vectors.leftCols(keep);
    for (Index j = 0; j < keep; ++j) {
        Index arg = 0;
        pca.components.col(j).cwiseAbs().maxCoeff(&arg);
        if (pca.components(arg, j) < 0.0) {
            pca.components.col(j) *= -1.0;
        }
    }
    return pca;
}

Matrix pca_view(const Matrix& x, double variance_fraction) {
    return fit_pca(x, variance_fraction).project(x);
}

// ---------------------------------------------------------------------------

MultiViewDataset subset(const MultiViewDataset& ds, std::span<const std::size_t> rows) {
    MultiViewDataset out;
    out.name = ds.name;
    out.view_a.resize(static_cast<Index>(rows.size()), ds.view_a.cols());
    out.view_b.resize(static_cast<Index>(rows.size()), ds.view_b.cols());
    out.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= ds.labels.size()) {
            throw DimensionError("row index " + std::to_string(rows[i]) + " out of range");
        }
        const auto r = static_cast<Index>(rows[i]);
        out.view_a.row(static_cast<Index>(i)) = ds.view_a.row(r);
        out.view_b.row(static_cast<Index>(i)) = ds.view_b.row(r);
        out.labels.push_back(ds.labels[rows[i]]);
    }
    return out;
}

SplitIndices split_indices(std::span<const std::string> labels, double train_fraction,
                           std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw InvalidArgument("train fraction must lie in (0, 1)");
    }
    const std::size_t l = labels.size();
    if (l < 2) {
        throw InvalidArgument("need at least two samples to split");
    }
    auto n_train = static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(l) - 1e-9));
    n_train = std::max<std::size_t>(n_train, 1);
    if (n_train >= l) {
        throw InvalidArgument("dataset of " + std::to_string(l) + " samples leaves an empty test set");
    }
    constexpr int kMaxAttempts = 100;
    Rng rng(seed);
    std::vector<std::size_t> perm(l);
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        shuffle(perm, rng);
        const std::string& first = labels[perm[0]];
        const bool both = std::any_of(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                                      [&](std::size_t i) { return labels[i] != first; });
        if (!both) {
            continue;
        }
        SplitIndices out;
        out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
        out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
        std::sort(out.train.begin(), out.train.end());
        std::sort(out.test.begin(), out.test.end());
        return out;
    }
    throw InvalidArgument("could not place both classes in the training split after " +
                          std::to_string(kMaxAttempts) + " shuffles");
}

TrainTestSplit split_train_test(const MultiViewDataset& ds, double train_fraction, std::uint64_t seed) {
    ds.validate();
    TrainTestSplit out;
    out.indices = split_indices(ds.labels, train_fraction, seed);
    out.train = subset(ds, out.indices.train);
    out.test = subset(ds, out.indices.test);
    return out;
}

std::vector<Fold> kfold(std::size_t rows, int k, std::uint64_t seed) {
    if (k < 2 || static_cast<std::size_t>(k) > rows) {
        throw InvalidArgument("k-fold needs 2 <= k <= l (k = " + std::to_string(k) + ", l = " +
                              std::to_string(rows) + ")");
    }
    std::vector<std::size_t> perm(rows);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    shuffle(perm, rng);

    const std::size_t kk = static_cast<std::size_t>(k);
    const std::size_t base = rows / kk;
    const std::size_t extra = rows % kk;
    std::vector<Fold> folds(kk);
    std::vector<int> owner(rows);
    std::size_t pos = 0;
    for (std::size_t f = 0; f < kk; ++f) {
        const std::size_t size = base + (f < extra ? 1 : 0);
        folds[f].validation.assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                                   perm.begin() + static_cast<std::ptrdiff_t>(pos + size));
        std::sort(folds[f].validation.begin(), folds[f].validation.end());
        for (auto i : folds[f].validation) {
            owner[i] = static_cast<int>(f);
        }
        pos += size;
    }
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t f = 0; f < kk; ++f) {
            if (owner[i] != static_cast<int>(f)) {
                folds[f].train.push_back(i);
            }
        }
    }
    return folds;
}

std::vector<Fold> kfold(const MultiViewDataset& ds, int k, std::uint64_t seed) {
    return kfold(ds.labels.size(), k, seed);
}

// ---------------------------------------------------------------------------

OneHotTargets one_hot(std::span<const std::string> labels) {
    return one_hot(labels, binary_class_order(labels));
}

OneHotTargets one_hot(std::span<const std::string> labels, const ClassOrder& order) {
    OneHotTargets t;
    t.class_order = order;
    t.y = Matrix::Zero(static_cast<Index>(labels.size()), 2);
    t.class_index.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        int col = -1;
        if (labels[i] == order[0]) {
            col = 0;
        } else if (labels[i] == order[1]) {
            col = 1;
        } else {
            throw InvalidArgument("label '" + labels[i] + "' is not one of the two classes");
        }
        t.class_index[i] = col;
        t.y(static_cast<Index>(i), col) = 1.0;
    }
    return t;
}

// ---------------------------------------------------------------------------

nlohmann::json matrix_to_json(const Matrix& m) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            data.push_back(m(r, c));
        }
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
    try {
        const auto rows = j.at("rows").get<Index>();
        const auto cols = j.at("cols").get<Index>();
        const auto& data = j.at("data");
        if (rows < 0 || cols < 0 || !data.is_array() || static_cast<Index>(data.size()) != rows * cols) {
            throw SchemaError("matrix payload does not match its declared shape");
        }
        Matrix m(rows, cols);
        std::size_t k = 0;
        for (Index r = 0; r < rows; ++r) {
            for (Index c = 0; c < cols; ++c) {
                m(r, c) = data[k++].get<double>();
            }
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed matrix: ") + e.what());
    }
}

nlohmann::json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const nlohmann::json& j) {
    try {
        const auto values = j.get<std::vector<double>>();
        return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed vector: ") + e.what());
    }
}

nlohmann::json to_json(const Scaler& scaler) {
    return {{"mean", vector_to_json(scaler.mean)}, {"scale", vector_to_json(scaler.scale)}};
}

Scaler scaler_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("mean") || !j.contains("scale")) {
        throw SchemaError("scaler record needs 'mean' and 'scale'");
    }
    Scaler s{vector_from_json(j.at("mean")), vector_from_json(j.at("scale"))};
    if (s.mean.size() != s.scale.size()) {
        throw SchemaError("scaler mean/scale lengths differ");
    }
    return s;
}

nlohmann::json to_json(const PcaTransform& pca) {
    return {{"mean", vector_to_json(pca.mean)},
            {"components", matrix_to_json(pca.components)},
            {"eigenvalues", vector_to_json(pca.eigenvalues)},
            {"explained", pca.explained}};
}

PcaTransform pca_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("mean") || !j.contains("components")) {
        throw SchemaError("PCA record needs 'mean' and 'components'");
    }
    PcaTransform pca;
    pca.mean = vector_from_json(j.at("mean"));
    pca.components = matrix_from_json(j.at("components"));
    if (j.contains("eigenvalues")) {
        pca.eigenvalues = vector_from_json(j.at("eigenvalues"));
    }
    pca.explained = j.value("explained", 0.0);
    if (pca.components.rows() != pca.mean.size()) {
        throw SchemaError("PCA components do not match the mean length");
    }
    return pca;
}

nlohmann::json to_json(const SplitIndices& split) { return {{"train", split.train}, {"test", split.test}}; }

SplitIndices split_from_json(const nlohmann::json& j) {
    try {
        return {j.at("train").get<std::vector<std::size_t>>(), j.at("test").get<std::vector<std::size_t>>()};
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed split record: ") + e.what());
    }
}

}  // namespace grvfl
