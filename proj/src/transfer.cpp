#include "tabkan/transfer.hpp"

#include <cmath>
#include <numeric>

namespace tabkan::transfer {

OverlapSplit make_overlap_split(int n_features, int n_rows, std::uint64_t seed) {
    if (n_features < 4) throw std::invalid_argument("overlap split: need >= 4 features");
    OverlapSplit split;
    split.seed = seed;
    std::vector<int> features(n_features);
    std::iota(features.begin(), features.end(), 0);
    Rng rng(derive_seed(seed, 0x6f766c70ULL));
    std::shuffle(features.begin(), features.end(), rng);
    int n_shared = n_features / 2;
    int rest = n_features - n_shared;
    int n1 = (rest + 1) / 2;
    split.shared_features.assign(features.begin(), features.begin() + n_shared);
    split.set1_only.assign(features.begin() + n_shared, features.begin() + n_shared + n1);
    split.set2_only.assign(features.begin() + n_shared + n1, features.end());
    std::sort(split.shared_features.begin(), split.shared_features.end());
    std::sort(split.set1_only.begin(), split.set1_only.end());
    std::sort(split.set2_only.begin(), split.set2_only.end());

    std::vector<int> rows(n_rows);
    std::iota(rows.begin(), rows.end(), 0);
    std::shuffle(rows.begin(), rows.end(), rng);
    int half = n_rows / 2;
    split.set1_rows.assign(rows.begin(), rows.begin() + half);
    split.set2_rows.assign(rows.begin() + half, rows.end());
    std::sort(split.set1_rows.begin(), split.set1_rows.end());
    std::sort(split.set2_rows.begin(), split.set2_rows.end());
    return split;
}

Matrix project_rows(const Matrix& x, const std::vector<int>& rows,
                    const std::vector<int>& own_features, int union_width) {
    Matrix out = Matrix::Zero(rows.size(), union_width);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (int f : own_features) out(r, f) = x(rows[r], f);
    return out;
}

double mean_kl(const Matrix& prob, const Matrix& ref_prob) {
    double total = 0.0;
    for (Eigen::Index r = 0; r < prob.rows(); ++r)
        for (Eigen::Index c = 0; c < prob.cols(); ++c) {
            double p = std::max(prob(r, c), 1e-12);
            double q = std::max(ref_prob(r, c), 1e-12);
            total += p * std::log(p / q);
        }
    return total / static_cast<double>(prob.rows());
}

std::pair<double, Vector> grpo_loss_and_grad(network::Model& model, const Matrix& x,
                                             const std::vector<int>& y,
                                             const std::vector<std::vector<int>>& samples,
                                             const Matrix& ref_prob, double beta) {
    if (beta < 0.0) throw std::invalid_argument("grpo: beta < 0");
    Eigen::Index b = x.rows();
    Matrix logits = model.predict_logits(x);
    Matrix prob = metrics::softmax_rows(logits);
    int g = static_cast<int>(samples.empty() ? 0 : samples[0].size());
    if (g < 2) throw std::invalid_argument("grpo: group size must be >= 2");

    double pg_loss = 0.0;
    Matrix dlogits = Matrix::Zero(b, logits.cols());
    for (Eigen::Index r = 0; r < b; ++r) {
        double mean_reward = 0.0;
        for (int i = 0; i < g; ++i) mean_reward += (samples[r][i] == y[r]);
        mean_reward /= g;
        for (int i = 0; i < g; ++i) {
            int o = samples[r][i];
            double adv = (o == y[r] ? 1.0 : 0.0) - mean_reward;
            double logp = std::log(std::max(prob(r, o), 1e-300));
            pg_loss -= logp * adv;
            // score-function gradient of -log pi(o) * adv
            double scale = -adv / (static_cast<double>(b) * g);
            for (Eigen::Index c = 0; c < logits.cols(); ++c)
                dlogits(r, c) += scale * ((c == o ? 1.0 : 0.0) - prob(r, c));
        }
    }
    pg_loss /= static_cast<double>(b) * g;

    double kl = 0.0;
    if (beta > 0.0) {
        for (Eigen::Index r = 0; r < b; ++r) {
            double kl_r = 0.0;
            for (Eigen::Index c = 0; c < logits.cols(); ++c) {
                double p = std::max(prob(r, c), 1e-12);
                double q = std::max(ref_prob(r, c), 1e-12);
                kl_r += p * std::log(p / q);
            }
            kl += kl_r;
            double scale = beta / static_cast<double>(b);
            for (Eigen::Index c = 0; c < logits.cols(); ++c) {
                double p = std::max(prob(r, c), 1e-12);
                double q = std::max(ref_prob(r, c), 1e-12);
                dlogits(r, c) += scale * p * (std::log(p / q) - kl_r);
            }
        }
        kl /= static_cast<double>(b);
    }
    double loss = pg_loss + beta * kl;
    Vector grad = model.grad_from_logit_grad(x, dlogits);
    return {loss, grad};
}

GrpoReport grpo_finetune(network::Model& model, const Matrix& x, const std::vector<int>& y,
                         const GrpoConfig& cfg) {
    if (cfg.group_size < 2) throw std::invalid_argument("grpo: group size must be >= 2");
    if (cfg.beta < 0.0) throw std::invalid_argument("grpo: beta < 0");
    Matrix ref_prob = metrics::softmax_rows(model.predict_logits(x));
    Rng rng(derive_seed(cfg.seed, 0x6772706fULL));
    Vector params = model.flatten();
    GrpoReport rep;
    int m = static_cast<int>(ref_prob.cols());
    for (int step = 0; step < cfg.steps; ++step) {
        Matrix prob = metrics::softmax_rows(model.predict_logits(x));
        std::vector<std::vector<int>> samples(x.rows(), std::vector<int>(cfg.group_size));
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            std::discrete_distribution<int> dist(prob.row(r).data(),
                                                 prob.row(r).data() + m);
            for (int i = 0; i < cfg.group_size; ++i) samples[r][i] = dist(rng);
        }
        auto [loss, grad] = grpo_loss_and_grad(model, x, y, samples, ref_prob, cfg.beta);
        optim::sgd_step(params, grad, cfg.learning_rate, &model.freeze_mask());
        model.unflatten(params);
        rep.final_loss = loss;
        ++rep.steps;
    }
    Matrix prob = metrics::softmax_rows(model.predict_logits(x));
    rep.mean_kl = mean_kl(prob, ref_prob);
    return rep;
}

namespace {

DirectionResult run_direction(const data::Dataset& ds, const network::NetworkSpec& spec,
                              const TransferConfig& cfg, const std::vector<int>& src_rows,
                              const std::vector<int>& src_features,
                              const std::vector<int>& tgt_rows,
                              const std::vector<int>& tgt_features, std::uint64_t stage) {
    int width = static_cast<int>(ds.x.cols());
    DirectionResult out;

    network::NetworkSpec dir_spec = spec;
    dir_spec.widths.front() = width;
    dir_spec.seed = derive_seed(cfg.seed, stage);
    network::Model model(dir_spec);

    // pretrain on the source rows
    Matrix x_src = project_rows(ds.x, src_rows, src_features, width);
    std::vector<int> y_src;
    for (int r : src_rows) y_src.push_back(ds.y[r]);
    out.pretrain_report = optim::train(model, x_src, y_src, cfg.train);

    // target rows get their own split; head fine-tunes on target train
    std::vector<int> y_tgt_all;
    for (int r : tgt_rows) y_tgt_all.push_back(ds.y[r]);
    data::SplitPlan plan = data::split_70_10_20(y_tgt_all, derive_seed(cfg.seed, stage + 1));
    auto local_to_global = [&](const std::vector<int>& local) {
        std::vector<int> rows;
        for (int i : local) rows.push_back(tgt_rows[i]);
        return rows;
    };
    std::vector<int> tgt_train = local_to_global(plan.train);
    std::vector<int> tgt_test = local_to_global(plan.test);
    Matrix x_tgt_train = project_rows(ds.x, tgt_train, tgt_features, width);
    Matrix x_tgt_test = project_rows(ds.x, tgt_test, tgt_features, width);
    std::vector<int> y_tgt_train, y_tgt_test;
    for (int r : tgt_train) y_tgt_train.push_back(ds.y[r]);
    for (int r : tgt_test) y_tgt_test.push_back(ds.y[r]);

    out.zero_shot =
        metrics::evaluate(model.predict_logits(x_tgt_test), y_tgt_test, ds.n_classes);

    model.set_freeze(network::Model::FreezePolicy::all_but_head);
    if (cfg.mode == FinetuneMode::standard) {
        optim::train(model, x_tgt_train, y_tgt_train, cfg.train);
    } else {
        GrpoConfig gc = cfg.grpo;
        gc.seed = derive_seed(cfg.seed, stage + 2);
        grpo_finetune(model, x_tgt_train, y_tgt_train, gc);
    }
    out.fine_tuned =
        metrics::evaluate(model.predict_logits(x_tgt_test), y_tgt_test, ds.n_classes);
    return out;
}

}  // namespace

TransferResult pretrain_then_finetune(const data::Dataset& ds,
                                      const network::NetworkSpec& base_spec,
                                      const TransferConfig& cfg) {
    TransferResult result;
    result.split = make_overlap_split(static_cast<int>(ds.x.cols()),
                                      static_cast<int>(ds.x.rows()), cfg.seed);
    auto with_shared = [&](const std::vector<int>& only) {
        std::vector<int> f = result.split.shared_features;
        f.insert(f.end(), only.begin(), only.end());
        std::sort(f.begin(), f.end());
        return f;
    };
    std::vector<int> f1 = with_shared(result.split.set1_only);
    std::vector<int> f2 = with_shared(result.split.set2_only);
    result.dir12 = run_direction(ds, base_spec, cfg, result.split.set1_rows, f1,
                                 result.split.set2_rows, f2, 0x7431ULL);
    result.dir21 = run_direction(ds, base_spec, cfg, result.split.set2_rows, f2,
                                 result.split.set1_rows, f1, 0x7432ULL);
    return result;
}

}  // namespace tabkan::transfer
