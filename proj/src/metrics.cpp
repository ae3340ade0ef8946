#include "tabkan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tabkan {

double normal_quantile(double p) {
    if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("normal_quantile: p outside (0,1)");
    // Acklam's approximation
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= phigh) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // one Halley refinement step
    double e = normal_cdf(x) - p;
    double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

}  // namespace tabkan

namespace tabkan::metrics {

std::optional<double> roc_auc(const std::vector<double>& scores,
                              const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("roc_auc: length mismatch");
    std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += (y == 1);
    std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return scores[i] < scores[j]; });

    // midrank sum over positives
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) rank_sum_pos += midrank;
        }
        i = j;
    }
    double auc = (rank_sum_pos - 0.5 * n_pos * (n_pos + 1)) /
                 (static_cast<double>(n_pos) * static_cast<double>(n_neg));
    return auc;
}

double f1(const std::vector<int>& preds, const std::vector<int>& labels, int positive) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        bool p = preds[i] == positive, t = labels[i] == positive;
        tp += (p && t);
        fp += (p && !t);
        fn += (!p && t);
    }
    double denom = 2.0 * tp + fp + fn;
    return denom == 0.0 ? 0.0 : 2.0 * tp / denom;
}

double macro_f1(const std::vector<int>& preds, const std::vector<int>& labels, int n_classes) {
    double total = 0.0;
    for (int c = 0; c < n_classes; ++c) total += f1(preds, labels, c);
    return total / n_classes;
}

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
    if (preds.empty()) throw std::invalid_argument("accuracy: empty input");
    long hit = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) hit += (preds[i] == labels[i]);
    return static_cast<double>(hit) / preds.size();
}

std::vector<int> argmax_rows(const Matrix& logits) {
    std::vector<int> out(logits.rows());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        Eigen::Index idx;
        logits.row(r).maxCoeff(&idx);
        out[r] = static_cast<int>(idx);
    }
    return out;
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix p(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        Eigen::VectorXd row = logits.row(r);
        double m = row.maxCoeff();
        Eigen::VectorXd e = (row.array() - m).exp();
        p.row(r) = e / e.sum();
    }
    return p;
}

MetricReport evaluate(const Matrix& logits, const std::vector<int>& labels, int n_classes) {
    MetricReport rep;
    auto preds = argmax_rows(logits);
    rep.accuracy = accuracy(preds, labels);
    rep.f1 = f1(preds, labels, 1);
    rep.macro_f1 = macro_f1(preds, labels, n_classes);
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        bool p = preds[i] == 1, t = labels[i] == 1;
        tp += (p && t);
        fp += (p && !t);
        fn += (!p && t);
    }
    rep.precision = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
    rep.recall = (tp + fn) == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
    rep.confusion.assign(n_classes, std::vector<long>(n_classes, 0));
    for (std::size_t i = 0; i < preds.size(); ++i) rep.confusion[labels[i]][preds[i]]++;
    if (n_classes == 2) {
        Matrix prob = softmax_rows(logits);
        std::vector<double> scores(prob.rows());
        for (Eigen::Index r = 0; r < prob.rows(); ++r) scores[r] = prob(r, 1);
        rep.auc = roc_auc(scores, labels);
    }
    return rep;
}

}  // namespace tabkan::metrics
