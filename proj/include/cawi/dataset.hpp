#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace cawi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexList = std::vector<std::size_t>;

struct Dataset {
    std::string name;
    Matrix features;                 // m x d
    std::vector<int> labels;         // length m, dense in [0, n_class)
    std::vector<std::string> feature_names;
    std::vector<std::string> class_names;  // first-appearance order
    int n_class = 0;

    std::size_t rows() const { return static_cast<std::size_t>(features.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(features.cols()); }
};

/// Checks the Dataset invariants (shape, label range, every class present).
void validate(const Dataset& data);

/// Label column chosen by header name or zero-based index; an empty name
/// selects the last column.
using LabelColumn = std::variant<std::string, std::size_t>;

/// Reads a headed, comma-separated file. Labels are re-indexed in order of
/// first appearance. Throws std::runtime_error naming row and column on bad cells.
Dataset load_csv(const std::filesystem::path& path, const LabelColumn& label_column);

/// Same as load_csv but from an in-memory string; `name` is used in messages.
Dataset parse_csv(const std::string& text, const LabelColumn& label_column,
                  const std::string& name = "<memory>");

enum class StdDenominator { population, sample };

struct ScalerParams {
    Vector means;
    Vector stddevs;                // 1 for constant columns
    std::vector<bool> constant;
};

ScalerParams fit_standardizer(const Matrix& features, const IndexList& rows,
                              StdDenominator denom = StdDenominator::population);
inline ScalerParams fit_standardizer(const Dataset& data, const IndexList& rows,
                                     StdDenominator denom = StdDenominator::population) {
    return fit_standardizer(data.features, rows, denom);
}

Matrix apply_standardizer(const ScalerParams& params, const Matrix& features);

Matrix one_hot(const std::vector<int>& labels, int n_class);

struct FoldSplit {
    std::size_t fold_index = 0;
    IndexList train_rows;
    IndexList test_rows;
};

/// Per-class shuffle followed by a round-robin fold assignment whose counter
/// carries across classes, so fold sizes differ by at most one.
std::vector<FoldSplit> stratified_kfold(const Dataset& data, std::size_t k, std::uint64_t seed);

/// True when some class has fewer than k members (its folds cannot all see it).
bool has_undersized_class(const Dataset& data, std::size_t k);

/// Rows of `m` selected by `rows`, in the given order.
Matrix select_rows(const Matrix& m, const IndexList& rows);
std::vector<int> select_labels(const std::vector<int>& labels, const IndexList& rows);

}  // namespace cawi
