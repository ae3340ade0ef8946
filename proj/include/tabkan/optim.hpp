#pragma once

#include "tabkan/common.hpp"
#include "tabkan/network.hpp"

#include <deque>
#include <functional>

namespace tabkan::optim {

struct TrainConfig {
    int max_iters = 500;
    double grad_tol = 1e-6;  // inf-norm
    double c1 = 1e-4;
    double c2 = 0.9;
    int max_ls_steps = 20;
    int history = 10;
};

struct TrainReport {
    int iterations = 0;
    double final_loss = 0.0;
    double grad_norm = 0.0;
    double seconds = 0.0;
    std::string stop_reason;
};

// f(x) with gradient output; returns the objective value.
using Objective = std::function<double(const Vector&, Vector&)>;

class LbfgsState {
public:
    explicit LbfgsState(int capacity = 10) : capacity_(capacity) {}

    // Stores the pair only when s'y > 1e-10 * |s||y|.
    void push(const Vector& s, const Vector& y);
    Vector direction(const Vector& grad) const;
    std::size_t size() const { return pairs_.size(); }
    void clear() { pairs_.clear(); }

private:
    struct Pair {
        Vector s, y;
        double rho;
    };
    int capacity_;
    std::deque<Pair> pairs_;
};

struct LineSearchResult {
    double alpha = 0.0;
    bool ok = false;
    int evals = 0;
};

// Strong Wolfe search along a descent direction. On success x/f/g hold
// the accepted point. Falls back to the best Armijo point when the
// bracket budget runs out; ok=false when no Armijo point was found.
LineSearchResult wolfe_line_search(const Objective& obj, Vector& x, double& f, Vector& g,
                                   const Vector& dir, const TrainConfig& cfg);

TrainReport minimize(const Objective& obj, Vector& x, const TrainConfig& cfg);

TrainReport train(network::Model& model, const Matrix& x, const std::vector<int>& y,
                  const TrainConfig& cfg, const network::PenaltySpec& penalty = {});

// theta <- theta - lr*grad, skipping frozen indices.
void sgd_step(Vector& params, const Vector& grad, double lr,
              const std::vector<bool>* freeze = nullptr);

}  // namespace tabkan::optim
