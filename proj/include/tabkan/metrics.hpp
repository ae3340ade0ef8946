#pragma once

#include "tabkan/common.hpp"

#include <optional>

namespace tabkan::metrics {

struct MetricReport {
    std::optional<double> auc;  // binary only
    double f1 = 0.0;
    double macro_f1 = 0.0;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    std::vector<std::vector<long>> confusion;
};

// Mann-Whitney AUC with midrank tie handling. Returns nullopt when only
// one class is present.
std::optional<double> roc_auc(const std::vector<double>& scores,
                              const std::vector<int>& labels);

double f1(const std::vector<int>& preds, const std::vector<int>& labels, int positive = 1);
double macro_f1(const std::vector<int>& preds, const std::vector<int>& labels, int n_classes);
double accuracy(const std::vector<int>& preds, const std::vector<int>& labels);

// preds via argmax; scores for AUC = probability of class 1 (binary only).
MetricReport evaluate(const Matrix& logits, const std::vector<int>& labels, int n_classes);

std::vector<int> argmax_rows(const Matrix& logits);
Matrix softmax_rows(const Matrix& logits);

}  // namespace tabkan::metrics
