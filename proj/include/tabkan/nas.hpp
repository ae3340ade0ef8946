#pragma once

#include "tabkan/dataset.hpp"
#include "tabkan/network.hpp"
#include "tabkan/optim.hpp"

#include <functional>

namespace tabkan::nas {

struct IntRange {
    int lo = 0, hi = 0, step = 1;
    int span() const { return (hi - lo) / step; }
    bool contains(int v) const {
        return v >= lo && v <= hi && (v - lo) % step == 0;
    }
};

struct SearchSpace {
    layers::Variant variant;
    IntRange depth;
    IntRange width;
    // present depending on variant
    std::optional<IntRange> order;
    std::optional<IntRange> grid;
    std::optional<IntRange> pade_q;
    std::optional<IntRange> pade_k;
    int dims() const;
};

SearchSpace space_for(layers::Variant variant);

std::vector<double> encode(const network::NetworkSpec& spec, const SearchSpace& space);
// Decoded spec has empty input/output widths filled from (n_features, n_classes).
network::NetworkSpec decode(const std::vector<double>& point, const SearchSpace& space,
                            int n_features, int n_classes);

struct GpSurrogate {
    Matrix x;          // observed points, rows in the unit cube
    Vector y_std;      // standardized values
    double y_mean = 0.0, y_scale = 1.0;
    double length_scale = 1.0;
    double signal_var = 1.0;
    double jitter = 1e-6;
    Eigen::LLT<Matrix> chol;
    Vector alpha;      // K^{-1} y_std
};

GpSurrogate gp_fit(const Matrix& points, const Vector& values, double jitter = 1e-6);
// posterior mean/std on the original value scale
std::pair<double, double> gp_posterior(const GpSurrogate& gp, const Vector& point);

double expected_improvement(double mu, double sigma, double y_best, double xi);

struct AcquisitionConfig {
    double xi = 0.01;
    int pool_size = 2048;
    int n_initial = 10;
    int n_trials = 100;
};

std::vector<double> propose_next(const GpSurrogate& gp, const SearchSpace& space,
                                 const AcquisitionConfig& cfg, double y_best, Rng& rng);

struct Trial {
    int index = 0;
    std::vector<double> point;
    network::NetworkSpec spec;
    double objective = -std::numeric_limits<double>::infinity();  // validation F1
    bool failed = false;
    optim::TrainReport report;
};

struct SearchResult {
    network::NetworkSpec best_spec;
    double best_objective = 0.0;
    std::vector<Trial> trials;
};

// Objective evaluated per decoded spec; returns validation F1.
using TrialObjective = std::function<double(network::NetworkSpec&, optim::TrainReport&)>;

SearchResult run_search(layers::Variant variant, int n_features, int n_classes,
                        const AcquisitionConfig& cfg, std::uint64_t seed,
                        const TrialObjective& objective, int workers = 1);

// Standard trial objective: train on train split, score validation F1
// (macro for multi-class). `penalty` forwarded to training.
TrialObjective make_supervised_objective(const Matrix& x_train, const std::vector<int>& y_train,
                                         const Matrix& x_val, const std::vector<int>& y_val,
                                         int n_classes, const optim::TrainConfig& train_cfg,
                                         const network::PenaltySpec& penalty = {});

}  // namespace tabkan::nas
