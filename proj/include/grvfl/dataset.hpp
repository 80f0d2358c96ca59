#pragma once

#include "grvfl/common.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace grvfl {

/// Single-view labeled table as read from disk.
struct LabeledDataset {
    Matrix features;                  ///< l x p
    std::vector<std::string> labels;  ///< length l, exactly two distinct values
    std::string name;

    Index rows() const { return features.rows(); }
};

/// Paired views of the same samples with shared labels.
struct MultiViewDataset {
    Matrix view_a;  ///< l x n
    Matrix view_b;  ///< l x m
    std::vector<std::string> labels;
    std::string name;

    Index rows() const { return view_a.rows(); }

    /// Throws DimensionError unless both views and the labels agree on l and
    /// both views have at least one column.
    void validate() const;
};

/// l x 2 indicator matrix; column j holds class_order[j].
struct OneHotTargets {
    Matrix y;
    ClassOrder class_order;
    std::vector<int> class_index;  ///< 0 or 1 per sample
};

/// Trims surrounding whitespace; numeric labels are rewritten in shortest
/// round-trip form so that "1", "1.0" and "+1" name the same class.
std::string canonical_label(std::string_view raw);

/// Ascending order of the two distinct labels. Numeric labels compare by
/// value, anything else lexicographically. Throws InvalidArgument
/// ("not binary") for any other count.
ClassOrder binary_class_order(std::span<const std::string> labels);

/// Raw numeric table, optionally with a trailing label column.
struct CsvTable {
    Matrix features;
    std::vector<std::string> labels;  ///< empty when read without labels
};

CsvTable read_csv_table(const std::filesystem::path& path, bool has_header, bool has_labels);

/// Reads a comma-separated table whose last column is the label.
/// Throws ParseError with the 1-based row and column of the offending cell.
LabeledDataset load_csv(const std::filesystem::path& path, bool has_header);

// ---------------------------------------------------------------------------
// Standardization

/// Per-column z-score statistics. Zero-variance columns keep scale 1.
struct Scaler {
    Vector mean;
    Vector scale;

    Matrix apply(const Matrix& x) const;
};

Scaler fit_scaler(const Matrix& train);

struct Standardized {
    Matrix train;
    std::vector<Matrix> others;
    Scaler scaler;
};

/// Centers and scales `train` by its own population statistics and applies
/// the same transform to every matrix in `apply_to`.
Standardized standardize(const Matrix& train, std::span<const Matrix> apply_to = {});

// ---------------------------------------------------------------------------
// PCA second view

struct PcaTransform {
    Vector mean;         ///< column means of the fitted data
    Matrix components;   ///< p x m, unit columns, descending eigenvalue
    Vector eigenvalues;  ///< all p covariance eigenvalues, descending
    double explained = 0.0;

    Index dims() const { return components.cols(); }
    Matrix project(const Matrix& x) const;
};

/// Keeps the smallest leading set of components whose cumulative explained
/// variance reaches `variance_fraction`. Each component is signed so that its
/// largest-magnitude loading is positive.
PcaTransform fit_pca(const Matrix& x, double variance_fraction);

/// fit_pca followed by projection of the same data.
Matrix pca_view(const Matrix& x, double variance_fraction);

// ---------------------------------------------------------------------------
// Splits

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

struct TrainTestSplit {
    MultiViewDataset train;
    MultiViewDataset test;
    SplitIndices indices;
};

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

MultiViewDataset subset(const MultiViewDataset& ds, std::span<const std::size_t> rows);

/// ceil(train_fraction * l) rows drawn by a seeded shuffle. Reshuffles (up to
/// 100 times) until the training part contains both classes.
SplitIndices split_indices(std::span<const std::string> labels, double train_fraction,
                           std::uint64_t seed);
TrainTestSplit split_train_test(const MultiViewDataset& ds, double train_fraction,
                                std::uint64_t seed);

/// k folds over a seeded permutation; the first l mod k folds get one extra
/// sample.
std::vector<Fold> kfold(std::size_t rows, int k, std::uint64_t seed);
std::vector<Fold> kfold(const MultiViewDataset& ds, int k, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Targets

OneHotTargets one_hot(std::span<const std::string> labels);

/// Encodes against a fixed class order. Every label must be one of the two.
OneHotTargets one_hot(std::span<const std::string> labels, const ClassOrder& order);

// ---------------------------------------------------------------------------
// JSON sidecars

nlohmann::json to_json(const Scaler& scaler);
Scaler scaler_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PcaTransform& pca);
PcaTransform pca_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SplitIndices& split);
SplitIndices split_from_json(const nlohmann::json& j);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

}  // namespace grvfl
