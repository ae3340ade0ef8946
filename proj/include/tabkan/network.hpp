#pragma once

#include "tabkan/layers.hpp"

namespace tabkan::network {

struct NetworkSpec {
    layers::Variant variant = layers::Variant::cheby;
    std::vector<int> widths;  // [n_0 .. n_L]
    layers::Hyper hyper;
    std::uint64_t seed = 0;
};

// Frequency-weighted l2 penalty on cheby/fourier coefficient stacks.
struct PenaltySpec {
    double lambda = 0.0;
};

class Model {
public:
    explicit Model(const NetworkSpec& spec);

    const NetworkSpec& spec() const { return spec_; }
    const std::vector<std::unique_ptr<layers::Layer>>& layer_stack() const { return layers_; }
    layers::Layer& layer(std::size_t i) { return *layers_[i]; }
    std::size_t depth() const { return layers_.size(); }

    long param_count() const { return n_params_; }
    Vector flatten() const;
    void unflatten(const Vector& params);

    Matrix predict_logits(const Matrix& x);

    // Mean cross-entropy over the batch plus optional smoothness
    // penalty. Gradient is zeroed at frozen positions.
    std::pair<double, Vector> loss_and_grad(const Matrix& x, const std::vector<int>& y,
                                            const PenaltySpec& penalty = {});

    // Gradient of an arbitrary per-logit loss already expressed as
    // dL/dlogits (used by GRPO). Penalty not applied.
    Vector grad_from_logit_grad(const Matrix& x, const Matrix& dlogits);

    enum class FreezePolicy { none, all_but_head };
    void set_freeze(FreezePolicy policy);
    const std::vector<bool>& freeze_mask() const { return freeze_mask_; }

    // smoothness penalty value at current parameters (lambda excluded)
    double penalty_term() const;

private:
    void apply_freeze(Vector& grad) const;
    void add_penalty_grad(double lambda, Vector& grad) const;

    NetworkSpec spec_;
    std::vector<std::unique_ptr<layers::Layer>> layers_;
    std::vector<long> offsets_;
    long n_params_ = 0;
    std::vector<bool> freeze_mask_;
};

}  // namespace tabkan::network
