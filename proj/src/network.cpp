#include "tabkan/network.hpp"

#include "tabkan/metrics.hpp"

#include <cmath>

namespace tabkan::network {

Model::Model(const NetworkSpec& spec) : spec_(spec) {
    if (spec.widths.size() < 2) throw std::invalid_argument("spec: need at least one layer");
    for (int w : spec.widths)
        if (w < 1) throw std::invalid_argument("spec: widths must be positive");
    Rng rng(derive_seed(spec.seed, 0x6d6f64656cULL));
    for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
        auto layer = layers::make_layer(spec.variant, spec.widths[l], spec.widths[l + 1],
                                        spec.hyper);
        layer->init(rng);
        offsets_.push_back(n_params_);
        n_params_ += layer->param_count();
        layers_.push_back(std::move(layer));
    }
    freeze_mask_.assign(n_params_, false);
}

Vector Model::flatten() const {
    Vector v(n_params_);
    for (std::size_t l = 0; l < layers_.size(); ++l)
        layers_[l]->flatten_into(v.data() + offsets_[l]);
    return v;
}

void Model::unflatten(const Vector& params) {
    if (params.size() != n_params_) throw std::invalid_argument("unflatten: length mismatch");
    for (std::size_t l = 0; l < layers_.size(); ++l)
        layers_[l]->unflatten_from(params.data() + offsets_[l]);
}

Matrix Model::predict_logits(const Matrix& x) {
    if (x.cols() != spec_.widths.front())
        throw std::invalid_argument("predict: input width mismatch");
    Matrix h = x;
    for (auto& layer : layers_) h = layer->forward(h);
    return h;
}

std::pair<double, Vector> Model::loss_and_grad(const Matrix& x, const std::vector<int>& y,
                                               const PenaltySpec& penalty) {
    int m = spec_.widths.back();
    for (int label : y)
        if (label < 0 || label >= m) throw std::invalid_argument("loss: label out of range");
    if (static_cast<Eigen::Index>(y.size()) != x.rows())
        throw std::invalid_argument("loss: row/label count mismatch");
    Matrix logits = predict_logits(x);
    Matrix prob = metrics::softmax_rows(logits);
    double loss = 0.0;
    Eigen::Index b = x.rows();
    for (Eigen::Index r = 0; r < b; ++r) loss -= std::log(std::max(prob(r, y[r]), 1e-300));
    loss /= static_cast<double>(b);
    if (!std::isfinite(loss)) throw std::runtime_error("loss: non-finite at output layer");

    Matrix dlogits = prob;
    for (Eigen::Index r = 0; r < b; ++r) dlogits(r, y[r]) -= 1.0;
    dlogits /= static_cast<double>(b);

    Vector grad = Vector::Zero(n_params_);
    Matrix dh = dlogits;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        dh = layers_[l]->backward(dh, grad.data() + offsets_[l]);
        if (!dh.allFinite())
            throw std::runtime_error("loss: non-finite gradient at layer " + std::to_string(l));
    }

    if (penalty.lambda != 0.0) {
        if (penalty.lambda < 0.0) throw std::invalid_argument("penalty: lambda < 0");
        loss += penalty.lambda * penalty_term();
        add_penalty_grad(penalty.lambda, grad);
    }
    apply_freeze(grad);
    return {loss, grad};
}

Vector Model::grad_from_logit_grad(const Matrix& x, const Matrix& dlogits) {
    predict_logits(x);  // refresh caches
    Vector grad = Vector::Zero(n_params_);
    Matrix dh = dlogits;
    for (std::size_t l = layers_.size(); l-- > 0;)
        dh = layers_[l]->backward(dh, grad.data() + offsets_[l]);
    apply_freeze(grad);
    return grad;
}

double Model::penalty_term() const {
    using layers::Variant;
    Variant v = spec_.variant;
    if (v != Variant::cheby && v != Variant::fourier)
        throw std::invalid_argument("smoothness penalty: only cheby/fourier");
    double total = 0.0;
    if (v == Variant::cheby) {
        for (const auto& layer : layers_) {
            const auto& theta = layers::cheby_coeffs(*layer);
            for (std::size_t k = 0; k < theta.size(); ++k)
                total += static_cast<double>(k) * k * theta[k].squaredNorm();
        }
    } else {
        for (const auto& layer : layers_) {
            const auto& wc = layers::fourier_cos(*layer);
            const auto& ws = layers::fourier_sin(*layer);
            for (std::size_t k = 0; k < wc.size(); ++k) {
                double w = static_cast<double>(k + 1) * (k + 1);
                total += w * (wc[k].squaredNorm() + ws[k].squaredNorm());
            }
        }
    }
    return total;
}

void Model::add_penalty_grad(double lambda, Vector& grad) const {
    using layers::Variant;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        long base = offsets_[l];
        long block = static_cast<long>(layers_[l]->n_in()) * layers_[l]->n_out();
        if (spec_.variant == Variant::cheby) {
            const auto& theta = layers::cheby_coeffs(*layers_[l]);
            for (std::size_t k = 0; k < theta.size(); ++k) {
                double w = 2.0 * lambda * k * k;
                const Matrix& t = theta[k];
                long off = base + static_cast<long>(k) * block;
                for (Eigen::Index i = 0; i < t.rows(); ++i)
                    for (Eigen::Index j = 0; j < t.cols(); ++j)
                        grad(off + i * t.cols() + j) += w * t(i, j);
            }
        } else {
            const auto& wc = layers::fourier_cos(*layers_[l]);
            const auto& ws = layers::fourier_sin(*layers_[l]);
            std::size_t g = wc.size();
            for (std::size_t k = 0; k < g; ++k) {
                double w = 2.0 * lambda * (k + 1) * (k + 1);
                long off_c = base + static_cast<long>(k) * block;
                long off_s = base + static_cast<long>(g + k) * block;
                for (Eigen::Index i = 0; i < wc[k].rows(); ++i)
                    for (Eigen::Index j = 0; j < wc[k].cols(); ++j) {
                        grad(off_c + i * wc[k].cols() + j) += w * wc[k](i, j);
                        grad(off_s + i * ws[k].cols() + j) += w * ws[k](i, j);
                    }
            }
        }
    }
}

void Model::set_freeze(FreezePolicy policy) {
    if (policy == FreezePolicy::none) {
        freeze_mask_.assign(n_params_, false);
        return;
    }
    freeze_mask_.assign(n_params_, true);
    long head_start = offsets_.back();
    for (long i = head_start; i < n_params_; ++i) freeze_mask_[i] = false;
}

void Model::apply_freeze(Vector& grad) const {
    for (long i = 0; i < n_params_; ++i)
        if (freeze_mask_[i]) grad(i) = 0.0;
}

}  // namespace tabkan::network
