#pragma once

#include "tabkan/dataset.hpp"
#include "tabkan/metrics.hpp"
#include "tabkan/network.hpp"
#include "tabkan/optim.hpp"

namespace tabkan::transfer {

struct OverlapSplit {
    std::vector<int> shared_features;
    std::vector<int> set1_only;
    std::vector<int> set2_only;
    std::vector<int> set1_rows;
    std::vector<int> set2_rows;
    std::uint64_t seed = 0;
};

// Half the features shared, the rest split evenly; rows split 50/50.
OverlapSplit make_overlap_split(int n_features, int n_rows, std::uint64_t seed);

// Copies rows into the union-width feature space, zero-filling columns
// the given set does not own.
Matrix project_rows(const Matrix& x, const std::vector<int>& rows,
                    const std::vector<int>& own_features, int union_width);

struct GrpoConfig {
    int group_size = 8;     // G
    double beta = 0.0;      // KL weight
    double learning_rate = 1e-2;
    int steps = 200;
    std::uint64_t seed = 0;
};

struct GrpoReport {
    int steps = 0;
    double final_loss = 0.0;
    double mean_kl = 0.0;  // vs reference, at the end, over the training inputs
};

// Policy-gradient fine-tuning with group-centered 0/1 rewards and a KL
// penalty toward the frozen starting policy. Only unfrozen parameters
// move.
GrpoReport grpo_finetune(network::Model& model, const Matrix& x, const std::vector<int>& y,
                         const GrpoConfig& cfg);

// Deterministic GRPO loss+grad for one sampled group assignment
// (exposed for gradient checking).
std::pair<double, Vector> grpo_loss_and_grad(network::Model& model, const Matrix& x,
                                             const std::vector<int>& y,
                                             const std::vector<std::vector<int>>& samples,
                                             const Matrix& ref_prob, double beta);

// Mean KL(pi_theta || pi_ref) over rows.
double mean_kl(const Matrix& prob, const Matrix& ref_prob);

enum class FinetuneMode { standard, grpo };

struct DirectionResult {
    metrics::MetricReport zero_shot;   // frozen pretrained model on target test
    metrics::MetricReport fine_tuned;  // after head fine-tuning
    optim::TrainReport pretrain_report;
};

struct TransferResult {
    OverlapSplit split;
    DirectionResult dir12;  // pretrain Set1, fine-tune Set2
    DirectionResult dir21;
};

struct TransferConfig {
    FinetuneMode mode = FinetuneMode::standard;
    optim::TrainConfig train;
    GrpoConfig grpo;
    std::uint64_t seed = 0;
};

TransferResult pretrain_then_finetune(const data::Dataset& ds,
                                      const network::NetworkSpec& base_spec,
                                      const TransferConfig& cfg);

}  // namespace tabkan::transfer
