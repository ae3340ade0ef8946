#pragma once

#include "tabkan/dataset.hpp"
#include "tabkan/metrics.hpp"
#include "tabkan/network.hpp"
#include "tabkan/optim.hpp"

#include <string>

namespace tabkan::interpret {

// Univariate function carried by one edge of a cheby/fourier/pade layer.
// Coefficients are copies; the domain is the family's normalized range
// (cheby [-1,1], fourier [-pi,pi], pade [0,1] before the 2u-1 shift).
struct EdgeFunction {
    layers::Variant family;
    int layer = 0;
    int feature = 0;  // input index within the layer
    int output = 0;
    double lo = 0.0, hi = 0.0;
    std::vector<double> coeffs;    // cheby
    std::vector<double> cos_c;     // fourier a_k, k = 1..g
    std::vector<double> sin_c;     // fourier b_k
    std::vector<double> num;       // pade
    std::vector<double> den;
};

EdgeFunction extract_edge_function(const network::Model& model, int layer, int i, int o);

double edge_value(const EdgeFunction& edge, double x);

std::vector<std::pair<double, double>> sample_curve(const EdgeFunction& edge, int n_points);

// First-layer coefficient-magnitude scores, one per input feature.
std::vector<double> feature_importance(const network::Model& model);

struct EdgeEnergy {
    int layer = 0, feature = 0, output = 0;
    double energy = 0.0;
    bool defined = false;
};

struct EnergyReport {
    std::vector<EdgeEnergy> edges;
    double aggregate = 0.0;  // total high-order squared mass / total squared mass
    bool defined = false;
    double lambda = 0.0;
};

// Fraction of squared coefficient mass at orders/frequencies >= 3,
// over every edge of every layer. Cheby or fourier models only.
EnergyReport high_order_energy(const network::Model& model);

struct RetrainRow {
    double fraction = 1.0;
    int n_features = 0;
    std::vector<int> kept;  // original feature indices, importance order
    metrics::MetricReport metrics;
};

struct RetrainConfig {
    optim::TrainConfig train;
    network::PenaltySpec penalty;
    std::uint64_t seed = 0;
};

// Train the full model, rank features by importance, then retrain on each
// top fraction of features with the identical protocol. x_* are already
// scaled; rows report test metrics.
std::vector<RetrainRow> top_k_retrain(const Matrix& x_train, const std::vector<int>& y_train,
                                      const Matrix& x_test, const std::vector<int>& y_test,
                                      int n_classes, const network::NetworkSpec& spec,
                                      const std::vector<double>& fractions,
                                      const RetrainConfig& cfg);

// Artifact writers used by the CLI.
void write_curve_csv(const std::string& path, const EdgeFunction& edge, int n_points,
                     const data::ScalerState* scaler = nullptr);
void write_curve_svg(const std::string& path, const EdgeFunction& edge, int n_points);
void write_importance_csv(const std::string& path, const std::vector<double>& scores,
                          const std::vector<std::string>& feature_names);

}  // namespace tabkan::interpret
