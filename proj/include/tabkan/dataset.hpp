#pragma once

#include "tabkan/common.hpp"

#include <optional>
#include <string>

namespace tabkan::data {

enum class ColumnKind { numerical, categorical, binary, label };

struct ColumnSchema {
    std::string name;
    ColumnKind kind = ColumnKind::numerical;
    std::vector<std::string> categories;  // categorical/binary; label optional
};

using Schema = std::vector<ColumnSchema>;

Schema load_schema(const std::string& path);
void validate_schema(const Schema& schema);

// Parsed table prior to encoding. Numeric cells carry a value, discrete
// cells a category index; either can be missing.
struct RawTable {
    struct Cell {
        double num = 0.0;
        int cat = -1;
        bool missing = false;
    };
    Schema schema;
    std::vector<std::vector<Cell>> rows;          // rows x columns (label excluded)
    std::vector<std::string> raw_labels;          // label string per row
    std::vector<int> data_columns;                // schema indices of non-label columns
    std::size_t missing_count() const;
};

RawTable load_csv(const std::string& path, const Schema& schema,
                  const std::string& missing_sentinel = "?");

// Class-conditional imputation: iterated per-column mean for numerical
// cells, same-class KNN mode for categorical cells.
void impute(RawTable& table, int knn_k = 5);

struct Dataset {
    Matrix x;
    std::vector<int> y;
    std::vector<std::string> feature_names;
    std::vector<std::string> class_names;
    int n_classes = 0;
};

Dataset one_hot_encode(const RawTable& table);

Dataset subset(const Dataset& ds, const std::vector<int>& indices);

// SMOTE-style minority oversampling until class counts are equal.
Dataset balance_smote(const Dataset& ds, std::uint64_t seed, int knn_k = 5);

enum class ScaleMode { raw, standard, quantile };
ScaleMode scale_mode_from_name(const std::string& name);
std::string scale_mode_name(ScaleMode mode);

struct ScalerState {
    ScaleMode mode = ScaleMode::raw;
    Vector mean, stddev;                          // standard
    std::vector<std::vector<double>> references;  // quantile, sorted per column
};

ScalerState fit_scaler(const Matrix& x_train, ScaleMode mode);
Matrix apply_scaler(const ScalerState& state, const Matrix& x);
// Inverse transform of a single column value (interpret curve exports).
double unscale_value(const ScalerState& state, int column, double v);

struct SplitPlan {
    std::vector<int> train, val, test;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

SplitPlan split_70_10_20(const std::vector<int>& y, std::uint64_t seed);

struct Fold {
    std::vector<int> train, val;
};
std::vector<Fold> stratified_kfold(const std::vector<int>& y, int k, std::uint64_t seed);

}  // namespace tabkan::data
