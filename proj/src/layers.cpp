#include "tabkan/layers.hpp"

#include <atomic>
#include <cmath>

namespace tabkan::layers {

namespace {

constexpr double kJacobiAlpha = 1.0;
constexpr double kJacobiBeta = 1.0;

std::atomic<std::uint64_t> g_pade_floors{0};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void fill_normal(Matrix& m, double stddev, Rng& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
}

// Row-major copy helpers keep the flat layout stable regardless of
// Eigen's internal storage order.
void copy_out(const Matrix& m, double*& dst) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) *dst++ = m(i, j);
}

void copy_in(Matrix& m, const double*& src) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = *src++;
}

void check_input(const Matrix& x, int n_in, const char* who) {
    if (x.cols() != n_in) throw std::invalid_argument(std::string(who) + ": input width mismatch");
    if (!x.allFinite()) throw std::invalid_argument(std::string(who) + ": non-finite input");
}

// ---------------------------------------------------------------- Cheby

class ChebyLayer final : public Layer {
public:
    ChebyLayer(int n_in, int n_out, const Hyper& h) : Layer(n_in, n_out, h) {
        theta_.assign(h.order + 1, Matrix::Zero(n_in, n_out));
    }
    Variant variant() const override { return Variant::cheby; }
    long param_count() const override {
        return static_cast<long>(n_in_) * n_out_ * (hyper_.order + 1);
    }
    void init(Rng& rng) override {
        double s = 1.0 / std::sqrt(static_cast<double>(n_in_) * (hyper_.order + 1));
        for (auto& t : theta_) fill_normal(t, s, rng);
    }
    void flatten_into(double* dst) const override {
        for (const auto& t : theta_) copy_out(t, dst);
    }
    void unflatten_from(const double* src) override {
        for (auto& t : theta_) copy_in(t, src);
    }
    std::vector<TensorInfo> tensor_layout() const override {
        long block = static_cast<long>(n_in_) * n_out_;
        std::vector<TensorInfo> out;
        for (int k = 0; k <= hyper_.order; ++k)
            out.push_back({"theta" + std::to_string(k), k * block, block});
        return out;
    }

    Matrix forward(const Matrix& x) override {
        check_input(x, n_in_, "cheby");
        int d = hyper_.order;
        u_ = x.array().tanh();
        t_.assign(d + 1, Matrix());
        t_[0] = Matrix::Ones(x.rows(), n_in_);
        if (d >= 1) t_[1] = u_;
        for (int k = 2; k <= d; ++k)
            t_[k] = 2.0 * u_.cwiseProduct(t_[k - 1]) - t_[k - 2];
        Matrix y = Matrix::Zero(x.rows(), n_out_);
        for (int k = 0; k <= d; ++k) y.noalias() += t_[k] * theta_[k];
        return y;
    }

    Matrix backward(const Matrix& dy, double* grad) override {
        int d = hyper_.order;
        if (dy.cols() != n_out_ || dy.rows() != u_.rows())
            throw std::invalid_argument("cheby: stale cache");
        long block = static_cast<long>(n_in_) * n_out_;
        for (int k = 0; k <= d; ++k) {
            Matrix dtheta = t_[k].transpose() * dy;
            double* g = grad + k * block;
            copy_out(dtheta, g);
        }
        // dT_k/du via the derivative recurrence, then chain through tanh
        Matrix du = Matrix::Zero(u_.rows(), n_in_);
        Matrix tp_prev2 = Matrix::Zero(u_.rows(), n_in_);  // T'_{k-2}
        Matrix tp_prev = tp_prev2;                         // T'_{k-1}
        for (int k = 1; k <= d; ++k) {
            Matrix tp;
            if (k == 1) tp = Matrix::Ones(u_.rows(), n_in_);
            else tp = 2.0 * t_[k - 1] + 2.0 * u_.cwiseProduct(tp_prev) - tp_prev2;
            du += (dy * theta_[k].transpose()).cwiseProduct(tp);
            tp_prev2 = tp_prev;
            tp_prev = tp;
        }
        return du.cwiseProduct((1.0 - u_.array().square()).matrix());
    }

    const std::vector<Matrix>& coeffs() const { return theta_; }

private:
    std::vector<Matrix> theta_;
    Matrix u_;
    std::vector<Matrix> t_;
};

// -------------------------------------------------------------- Fourier

class FourierLayer final : public Layer {
public:
    FourierLayer(int n_in, int n_out, const Hyper& h) : Layer(n_in, n_out, h) {
        if (h.grid < 1) throw std::invalid_argument("fourier: grid < 1");
        wc_.assign(h.grid, Matrix::Zero(n_in, n_out));
        ws_.assign(h.grid, Matrix::Zero(n_in, n_out));
        bias_ = Vector::Zero(n_out);
    }
    Variant variant() const override { return Variant::fourier; }
    long param_count() const override {
        return 2L * n_in_ * n_out_ * hyper_.grid + n_out_;
    }
    void init(Rng& rng) override {
        double s = 1.0 / std::sqrt(static_cast<double>(n_in_) * hyper_.grid);
        for (auto& w : wc_) fill_normal(w, s, rng);
        for (auto& w : ws_) fill_normal(w, s, rng);
        bias_.setZero();
    }
    void flatten_into(double* dst) const override {
        for (const auto& w : wc_) copy_out(w, dst);
        for (const auto& w : ws_) copy_out(w, dst);
        for (Eigen::Index i = 0; i < bias_.size(); ++i) *dst++ = bias_(i);
    }
    void unflatten_from(const double* src) override {
        for (auto& w : wc_) copy_in(w, src);
        for (auto& w : ws_) copy_in(w, src);
        for (Eigen::Index i = 0; i < bias_.size(); ++i) bias_(i) = *src++;
    }
    std::vector<TensorInfo> tensor_layout() const override {
        long block = static_cast<long>(n_in_) * n_out_;
        std::vector<TensorInfo> out;
        long off = 0;
        for (int k = 0; k < hyper_.grid; ++k, off += block)
            out.push_back({"w_cos" + std::to_string(k + 1), off, block});
        for (int k = 0; k < hyper_.grid; ++k, off += block)
            out.push_back({"w_sin" + std::to_string(k + 1), off, block});
        out.push_back({"bias", off, n_out_});
        return out;
    }

    Matrix forward(const Matrix& x) override {
        check_input(x, n_in_, "fourier");
        int g = hyper_.grid;
        x_ = x;
        cos_.assign(g, Matrix());
        sin_.assign(g, Matrix());
        Matrix y = Matrix::Zero(x.rows(), n_out_);
        for (int k = 1; k <= g; ++k) {
            cos_[k - 1] = (k * x.array()).cos();
            sin_[k - 1] = (k * x.array()).sin();
            y.noalias() += cos_[k - 1] * wc_[k - 1] + sin_[k - 1] * ws_[k - 1];
        }
        y.rowwise() += bias_.transpose();
        return y;
    }

    Matrix backward(const Matrix& dy, double* grad) override {
        if (dy.cols() != n_out_ || dy.rows() != x_.rows())
            throw std::invalid_argument("fourier: stale cache");
        int g = hyper_.grid;
        long block = static_cast<long>(n_in_) * n_out_;
        Matrix dx = Matrix::Zero(x_.rows(), n_in_);
        for (int k = 1; k <= g; ++k) {
            Matrix dwc = cos_[k - 1].transpose() * dy;
            Matrix dws = sin_[k - 1].transpose() * dy;
            double* gc = grad + (k - 1) * block;
            copy_out(dwc, gc);
            double* gs = grad + (g + k - 1) * block;
            copy_out(dws, gs);
            dx += (dy * wc_[k - 1].transpose()).cwiseProduct((-static_cast<double>(k)) * sin_[k - 1]) +
                  (dy * ws_[k - 1].transpose()).cwiseProduct(static_cast<double>(k) * cos_[k - 1]);
        }
        Vector db = dy.colwise().sum();
        double* gb = grad + 2L * g * block;
        for (Eigen::Index i = 0; i < db.size(); ++i) gb[i] += db(i);
        return dx;
    }

    const std::vector<Matrix>& cos_weights() const { return wc_; }
    const std::vector<Matrix>& sin_weights() const { return ws_; }

private:
    std::vector<Matrix> wc_, ws_;
    Vector bias_;
    Matrix x_;
    std::vector<Matrix> cos_, sin_;
};

// ----------------------------------------------------------------- Fast

class FastLayer final : public Layer {
public:
    static constexpr int kCenters = 8;
    static constexpr double kEps = 1e-5;

    FastLayer(int n_in, int n_out, const Hyper& h) : Layer(n_in, n_out, h) {
        // uniform centers on [-2, 2]; bandwidth = grid spacing
        for (int j = 0; j < kCenters; ++j)
            centers_[j] = -2.0 + 4.0 * j / (kCenters - 1);
        h_ = 4.0 / (kCenters - 1);
        gain_ = Vector::Ones(n_in);
        shift_ = Vector::Zero(n_in);
        w_.assign(kCenters, Matrix::Zero(n_in, n_out));
    }
    Variant variant() const override { return Variant::fast; }
    long param_count() const override {
        return 2L * n_in_ + static_cast<long>(kCenters) * n_in_ * n_out_;
    }
    void init(Rng& rng) override {
        gain_.setOnes();
        shift_.setZero();
        double s = 1.0 / std::sqrt(static_cast<double>(n_in_) * kCenters);
        for (auto& w : w_) fill_normal(w, s, rng);
    }
    void flatten_into(double* dst) const override {
        for (Eigen::Index i = 0; i < n_in_; ++i) *dst++ = gain_(i);
        for (Eigen::Index i = 0; i < n_in_; ++i) *dst++ = shift_(i);
        for (const auto& w : w_) copy_out(w, dst);
    }
    void unflatten_from(const double* src) override {
        for (Eigen::Index i = 0; i < n_in_; ++i) gain_(i) = *src++;
        for (Eigen::Index i = 0; i < n_in_; ++i) shift_(i) = *src++;
        for (auto& w : w_) copy_in(w, src);
    }
    std::vector<TensorInfo> tensor_layout() const override {
        std::vector<TensorInfo> out;
        out.push_back({"ln_gain", 0, n_in_});
        out.push_back({"ln_shift", n_in_, n_in_});
        long block = static_cast<long>(n_in_) * n_out_;
        for (int j = 0; j < kCenters; ++j)
            out.push_back({"w_rbf" + std::to_string(j), 2L * n_in_ + j * block, block});
        return out;
    }

    Matrix forward(const Matrix& x) override {
        check_input(x, n_in_, "fast");
        Eigen::Index b = x.rows();
        norm_.resize(b, n_in_);
        inv_std_.resize(b);
        for (Eigen::Index r = 0; r < b; ++r) {
            double mean = x.row(r).mean();
            double var = (x.row(r).array() - mean).square().mean();
            inv_std_(r) = 1.0 / std::sqrt(var + kEps);
            norm_.row(r) = (x.row(r).array() - mean) * inv_std_(r);
        }
        z_ = (norm_.array().rowwise() * gain_.transpose().array()).rowwise() +
             shift_.transpose().array();
        phi_.assign(kCenters, Matrix());
        Matrix y = Matrix::Zero(b, n_out_);
        for (int j = 0; j < kCenters; ++j) {
            phi_[j] = (-(z_.array() - centers_[j]).square() / (2.0 * h_ * h_)).exp();
            y.noalias() += phi_[j] * w_[j];
        }
        return y;
    }

    Matrix backward(const Matrix& dy, double* grad) override {
        if (dy.cols() != n_out_ || dy.rows() != z_.rows())
            throw std::invalid_argument("fast: stale cache");
        Eigen::Index b = z_.rows();
        long block = static_cast<long>(n_in_) * n_out_;
        Matrix dz = Matrix::Zero(b, n_in_);
        for (int j = 0; j < kCenters; ++j) {
            Matrix dw = phi_[j].transpose() * dy;
            double* g = grad + 2L * n_in_ + j * block;
            copy_out(dw, g);
            Matrix dphi_dz = -((z_.array() - centers_[j]) / (h_ * h_)) * phi_[j].array();
            dz += (dy * w_[j].transpose()).cwiseProduct(dphi_dz);
        }
        Vector dgain = (dz.cwiseProduct(norm_)).colwise().sum();
        Vector dshift = dz.colwise().sum();
        for (Eigen::Index i = 0; i < n_in_; ++i) grad[i] += dgain(i);
        for (Eigen::Index i = 0; i < n_in_; ++i) grad[n_in_ + i] += dshift(i);
        // layer-norm input gradient
        Matrix dn = dz.array().rowwise() * gain_.transpose().array();
        Matrix dx(b, n_in_);
        for (Eigen::Index r = 0; r < b; ++r) {
            double m1 = dn.row(r).mean();
            double m2 = dn.row(r).cwiseProduct(norm_.row(r)).mean();
            dx.row(r) = inv_std_(r) *
                        (dn.row(r).array() - m1 - norm_.row(r).array() * m2);
        }
        return dx;
    }

private:
    double centers_[kCenters];
    double h_;
    Vector gain_, shift_;
    std::vector<Matrix> w_;
    Matrix norm_, z_;
    Vector inv_std_;
    std::vector<Matrix> phi_;
};

// ----------------------------------------------------------------- Pade

class PadeLayer final : public Layer {
public:
    PadeLayer(int n_in, int n_out, const Hyper& h) : Layer(n_in, n_out, h) {
        num_.assign(h.pade_q + 1, Matrix::Zero(n_in, n_out));
        den_.assign(h.pade_k + 1, Matrix::Zero(n_in, n_out));
    }
    Variant variant() const override { return Variant::pade; }
    long param_count() const override {
        return static_cast<long>(n_in_) * n_out_ * (hyper_.pade_q + hyper_.pade_k + 2);
    }
    void init(Rng& rng) override {
        double s = 1.0 / std::sqrt(static_cast<double>(n_in_) * (hyper_.pade_q + 1));
        for (auto& t : num_) fill_normal(t, s, rng);
        // denominator anchored near 1 so evaluations start off the floor
        fill_normal(den_[0], 0.05, rng);
        den_[0].array() += 1.0;
        for (std::size_t j = 1; j < den_.size(); ++j) fill_normal(den_[j], 0.05, rng);
    }
    void flatten_into(double* dst) const override {
        for (const auto& t : num_) copy_out(t, dst);
        for (const auto& t : den_) copy_out(t, dst);
    }
    void unflatten_from(const double* src) override {
        for (auto& t : num_) copy_in(t, src);
        for (auto& t : den_) copy_in(t, src);
    }
    std::vector<TensorInfo> tensor_layout() const override {
        long block = static_cast<long>(n_in_) * n_out_;
        std::vector<TensorInfo> out;
        long off = 0;
        for (int a = 0; a <= hyper_.pade_q; ++a, off += block)
            out.push_back({"num" + std::to_string(a), off, block});
        for (int a = 0; a <= hyper_.pade_k; ++a, off += block)
            out.push_back({"den" + std::to_string(a), off, block});
        return out;
    }

    Matrix forward(const Matrix& x) override {
        check_input(x, n_in_, "pade");
        t_ = (2.0 / (1.0 + (-x.array()).exp()) - 1.0).matrix();  // 2*sigmoid(x)-1
        x_ = x;
        return eval(nullptr, Matrix());
    }

    Matrix backward(const Matrix& dy, double* grad) override {
        if (dy.cols() != n_out_ || dy.rows() != t_.rows())
            throw std::invalid_argument("pade: stale cache");
        Matrix dx;
        eval(&dx, dy, grad);
        return dx;
    }

    const std::vector<Matrix>& num() const { return num_; }
    const std::vector<Matrix>& den() const { return den_; }

private:
    // Shared forward/backward walk over (batch, edge) pairs. When dx is
    // null only the output is produced.
    Matrix eval(Matrix* dx, const Matrix& dy, double* grad = nullptr) {
        int q = hyper_.pade_q, k = hyper_.pade_k;
        int deg = std::max(q, k);
        Eigen::Index b = t_.rows();
        Matrix y = Matrix::Zero(b, n_out_);
        if (dx) *dx = Matrix::Zero(b, n_in_);
        long block = static_cast<long>(n_in_) * n_out_;
        for (Eigen::Index r = 0; r < b; ++r) {
            for (int i = 0; i < n_in_; ++i) {
                auto e = basis::jacobi_eval_all(deg, kJacobiAlpha, kJacobiBeta, t_(r, i));
                double dt = 0.0;
                for (int o = 0; o < n_out_; ++o) {
                    double p = 0.0, pq = 0.0;
                    for (int a = 0; a <= q; ++a) p += num_[a](i, o) * e.values[a];
                    for (int a = 0; a <= k; ++a) pq += den_[a](i, o) * e.values[a];
                    double floored = pq;
                    bool on_floor = std::abs(pq) < kPadeFloor;
                    if (on_floor) {
                        floored = (pq >= 0.0 ? kPadeFloor : -kPadeFloor);
                        g_pade_floors.fetch_add(1, std::memory_order_relaxed);
                    }
                    y(r, o) += p / floored;
                    if (dx) {
                        double g_out = dy(r, o);
                        double dnum = g_out / floored;
                        double dden = on_floor ? 0.0 : -g_out * p / (floored * floored);
                        double dp_dt = 0.0, dq_dt = 0.0;
                        for (int a = 0; a <= q; ++a) {
                            grad[a * block + static_cast<long>(i) * n_out_ + o] +=
                                dnum * e.values[a];
                            dp_dt += num_[a](i, o) * e.derivs[a];
                        }
                        for (int a = 0; a <= k; ++a) {
                            grad[(q + 1 + a) * block + static_cast<long>(i) * n_out_ + o] +=
                                dden * e.values[a];
                            dq_dt += den_[a](i, o) * e.derivs[a];
                        }
                        dt += dnum * dp_dt + dden * dq_dt;
                    }
                }
                if (dx) {
                    // t = 2*sigmoid(x)-1, dt/dx = (1 - t^2) / 2 * 2 = 2 s (1-s)
                    double s = 0.5 * (t_(r, i) + 1.0);
                    (*dx)(r, i) = dt * 2.0 * s * (1.0 - s);
                }
            }
        }
        return y;
    }

    std::vector<Matrix> num_, den_;
    Matrix t_, x_;
};

// -------------------------------------------------------------- JacobiR

class JacobiRLayer final : public Layer {
public:
    JacobiRLayer(int n_in, int n_out, const Hyper& h) : Layer(n_in, n_out, h) {
        theta_.assign(h.order + 1, Matrix::Zero(n_in, n_out));
        log_L_ = 0.0;
    }
    Variant variant() const override { return Variant::jacobi_r; }
    long param_count() const override {
        return static_cast<long>(n_in_) * n_out_ * (hyper_.order + 1) + 1;
    }
    void init(Rng& rng) override {
        double s = 1.0 / std::sqrt(static_cast<double>(n_in_) * (hyper_.order + 1));
        for (auto& t : theta_) fill_normal(t, s, rng);
        log_L_ = 0.0;
    }
    void flatten_into(double* dst) const override {
        for (const auto& t : theta_) copy_out(t, dst);
        *dst = log_L_;
    }
    void unflatten_from(const double* src) override {
        for (auto& t : theta_) copy_in(t, src);
        log_L_ = *src;
    }
    std::vector<TensorInfo> tensor_layout() const override {
        long block = static_cast<long>(n_in_) * n_out_;
        std::vector<TensorInfo> out;
        for (int a = 0; a <= hyper_.order; ++a)
            out.push_back({"theta" + std::to_string(a), a * block, block});
        out.push_back({"log_L", (hyper_.order + 1) * block, 1});
        return out;
    }

    Matrix forward(const Matrix& x) override {
        check_input(x, n_in_, "jacobi_r");
        int n = hyper_.order;
        double L = std::exp(log_L_);
        Eigen::Index b = x.rows();
        phi_.resize(b, n_in_);
        dphi_dx_.resize(b, n_in_);
        dphi_dL_.resize(b, n_in_);
        for (Eigen::Index r = 0; r < b; ++r)
            for (int i = 0; i < n_in_; ++i) {
                auto m = basis::rational_map(x(r, i), L);
                phi_(r, i) = m.value;
                dphi_dx_(r, i) = m.dx;
                dphi_dL_(r, i) = m.dL;
            }
        p_.assign(n + 1, Matrix());
        dp_.assign(n + 1, Matrix());
        for (int a = 0; a <= n; ++a) {
            p_[a].resize(b, n_in_);
            dp_[a].resize(b, n_in_);
        }
        for (Eigen::Index r = 0; r < b; ++r)
            for (int i = 0; i < n_in_; ++i) {
                auto e = basis::jacobi_eval_all(n, kJacobiAlpha, kJacobiBeta, phi_(r, i));
                for (int a = 0; a <= n; ++a) {
                    p_[a](r, i) = e.values[a];
                    dp_[a](r, i) = e.derivs[a];
                }
            }
        Matrix y = Matrix::Zero(b, n_out_);
        for (int a = 0; a <= n; ++a) y.noalias() += p_[a] * theta_[a];
        return y;
    }

    Matrix backward(const Matrix& dy, double* grad) override {
        if (dy.cols() != n_out_ || dy.rows() != phi_.rows())
            throw std::invalid_argument("jacobi_r: stale cache");
        int n = hyper_.order;
        long block = static_cast<long>(n_in_) * n_out_;
        Matrix dphi = Matrix::Zero(phi_.rows(), n_in_);
        for (int a = 0; a <= n; ++a) {
            Matrix dtheta = p_[a].transpose() * dy;
            double* g = grad + a * block;
            copy_out(dtheta, g);
            dphi += (dy * theta_[a].transpose()).cwiseProduct(dp_[a]);
        }
        double dL = dphi.cwiseProduct(dphi_dL_).sum();
        grad[(n + 1) * block] += dL * std::exp(log_L_);
        return dphi.cwiseProduct(dphi_dx_);
    }

private:
    std::vector<Matrix> theta_;
    double log_L_;
    Matrix phi_, dphi_dx_, dphi_dL_;
    std::vector<Matrix> p_, dp_;
};

// ----------------------------------------------------------------- fKAN

class FkanLayer final : public Layer {
public:
    FkanLayer(int n_in, int n_out, const Hyper& h) : Layer(n_in, n_out, h) {
        w_ = Matrix::Zero(n_in, n_out);
        bias_ = Vector::Zero(n_out);
        mix_ = Matrix::Zero(n_out, h.order + 1);
        log_nu_ = 0.0;
    }
    Variant variant() const override { return Variant::fkan; }
    long param_count() const override {
        return static_cast<long>(n_in_) * n_out_ + n_out_ +
               static_cast<long>(n_out_) * (hyper_.order + 1) + 1;
    }
    void init(Rng& rng) override {
        fill_normal(w_, 1.0 / std::sqrt(static_cast<double>(n_in_)), rng);
        bias_.setZero();
        fill_normal(mix_, 1.0 / std::sqrt(static_cast<double>(hyper_.order + 1)), rng);
        log_nu_ = 0.0;
    }
    void flatten_into(double* dst) const override {
        copy_out(w_, dst);
        for (Eigen::Index i = 0; i < bias_.size(); ++i) *dst++ = bias_(i);
        copy_out(mix_, dst);
        *dst = log_nu_;
    }
    void unflatten_from(const double* src) override {
        copy_in(w_, src);
        for (Eigen::Index i = 0; i < bias_.size(); ++i) bias_(i) = *src++;
        copy_in(mix_, src);
        log_nu_ = *src;
    }
    std::vector<TensorInfo> tensor_layout() const override {
        long wsz = static_cast<long>(n_in_) * n_out_;
        long msz = static_cast<long>(n_out_) * (hyper_.order + 1);
        return {{"weight", 0, wsz},
                {"bias", wsz, n_out_},
                {"mix", wsz + n_out_, msz},
                {"log_nu", wsz + n_out_ + msz, 1}};
    }

    Matrix forward(const Matrix& x) override {
        check_input(x, n_in_, "fkan");
        int n = hyper_.order;
        double nu = std::exp(log_nu_);
        x_ = x;
        z_ = x * w_;
        z_.rowwise() += bias_.transpose();
        Eigen::Index b = x.rows();
        s_ = z_.unaryExpr([](double v) { return sigmoid(v); });
        jv_.assign(n + 1, Matrix());
        jd_.assign(n + 1, Matrix());
        for (int a = 0; a <= n; ++a) {
            jv_[a].resize(b, n_out_);
            jd_[a].resize(b, n_out_);
        }
        t_arg_.resize(b, n_out_);
        Matrix y = Matrix::Zero(b, n_out_);
        for (Eigen::Index r = 0; r < b; ++r)
            for (int o = 0; o < n_out_; ++o) {
                double sn = std::pow(s_(r, o), nu);
                double t = 2.0 * sn - 1.0;
                t_arg_(r, o) = t;
                auto e = basis::jacobi_eval_all(n, kJacobiAlpha, kJacobiBeta, t);
                for (int a = 0; a <= n; ++a) {
                    jv_[a](r, o) = e.values[a];
                    jd_[a](r, o) = e.derivs[a];
                    y(r, o) += mix_(o, a) * e.values[a];
                }
            }
        return y;
    }

    Matrix backward(const Matrix& dy, double* grad) override {
        if (dy.cols() != n_out_ || dy.rows() != z_.rows())
            throw std::invalid_argument("fkan: stale cache");
        int n = hyper_.order;
        double nu = std::exp(log_nu_);
        Eigen::Index b = z_.rows();
        long wsz = static_cast<long>(n_in_) * n_out_;
        long msz = static_cast<long>(n_out_) * (n + 1);
        Matrix dz(b, n_out_);
        double dnu = 0.0;
        for (Eigen::Index r = 0; r < b; ++r)
            for (int o = 0; o < n_out_; ++o) {
                double dt = 0.0;
                for (int a = 0; a <= n; ++a) {
                    grad[wsz + n_out_ + static_cast<long>(o) * (n + 1) + a] +=
                        dy(r, o) * jv_[a](r, o);
                    dt += dy(r, o) * mix_(o, a) * jd_[a](r, o);
                }
                double s = s_(r, o);
                double sn = 0.5 * (t_arg_(r, o) + 1.0);  // s^nu
                dnu += dt * 2.0 * sn * std::log(s);
                double ds = dt * 2.0 * nu * std::pow(s, nu - 1.0);
                dz(r, o) = ds * s * (1.0 - s);
            }
        Matrix dw = x_.transpose() * dz;
        double* g = grad;
        copy_out(dw, g);
        Vector db = dz.colwise().sum();
        for (Eigen::Index i = 0; i < db.size(); ++i) grad[wsz + i] += db(i);
        grad[wsz + n_out_ + msz] += dnu * nu;
        return dz * w_.transpose();
    }

private:
    Matrix w_, mix_;
    Vector bias_;
    double log_nu_;
    Matrix x_, z_, s_, t_arg_;
    std::vector<Matrix> jv_, jd_;
};

// --------------------------------------------------------------- Spline

class SplineLayer final : public Layer {
public:
    static constexpr int kOrder = 3;

    SplineLayer(int n_in, int n_out, const Hyper& h)
        : Layer(n_in, n_out, h), basis_(h.grid, kOrder) {
        coeff_.assign(basis_.count(), Matrix::Zero(n_in, n_out));
        base_w_ = Matrix::Zero(n_in, n_out);
    }
    Variant variant() const override { return Variant::spline; }
    long param_count() const override {
        return static_cast<long>(n_in_) * n_out_ * (basis_.count() + 1);
    }
    void init(Rng& rng) override {
        for (auto& c : coeff_) fill_normal(c, 0.1, rng);
        base_w_.setOnes();
    }
    void flatten_into(double* dst) const override {
        for (const auto& c : coeff_) copy_out(c, dst);
        copy_out(base_w_, dst);
    }
    void unflatten_from(const double* src) override {
        for (auto& c : coeff_) copy_in(c, src);
        copy_in(base_w_, src);
    }
    std::vector<TensorInfo> tensor_layout() const override {
        long block = static_cast<long>(n_in_) * n_out_;
        std::vector<TensorInfo> out;
        for (int m = 0; m < basis_.count(); ++m)
            out.push_back({"spline" + std::to_string(m), m * block, block});
        out.push_back({"base_w", static_cast<long>(basis_.count()) * block, block});
        return out;
    }

    Matrix forward(const Matrix& x) override {
        check_input(x, n_in_, "spline");
        Eigen::Index b = x.rows();
        x_ = x;
        int nb = basis_.count();
        bv_.assign(nb, Matrix(b, n_in_));
        bd_.assign(nb, Matrix(b, n_in_));
        for (Eigen::Index r = 0; r < b; ++r)
            for (int i = 0; i < n_in_; ++i) {
                auto e = basis_.eval_all(x(r, i));
                for (int m = 0; m < nb; ++m) {
                    bv_[m](r, i) = e.values[m];
                    bd_[m](r, i) = e.derivs[m];
                }
            }
        silu_ = x.unaryExpr([](double v) { return v * sigmoid(v); });
        Matrix y = silu_ * base_w_;
        for (int m = 0; m < nb; ++m) y.noalias() += bv_[m] * coeff_[m];
        return y;
    }

    Matrix backward(const Matrix& dy, double* grad) override {
        if (dy.cols() != n_out_ || dy.rows() != x_.rows())
            throw std::invalid_argument("spline: stale cache");
        int nb = basis_.count();
        long block = static_cast<long>(n_in_) * n_out_;
        Matrix dx = Matrix::Zero(x_.rows(), n_in_);
        for (int m = 0; m < nb; ++m) {
            Matrix dc = bv_[m].transpose() * dy;
            double* g = grad + m * block;
            copy_out(dc, g);
            dx += (dy * coeff_[m].transpose()).cwiseProduct(bd_[m]);
        }
        Matrix dbw = silu_.transpose() * dy;
        double* g = grad + static_cast<long>(nb) * block;
        copy_out(dbw, g);
        Matrix dsilu = x_.unaryExpr([](double v) {
            double s = sigmoid(v);
            return s * (1.0 + v * (1.0 - s));
        });
        dx += (dy * base_w_.transpose()).cwiseProduct(dsilu);
        return dx;
    }

private:
    basis::BSplineBasis basis_;
    std::vector<Matrix> coeff_;
    Matrix base_w_;
    Matrix x_, silu_;
    std::vector<Matrix> bv_, bd_;
};

}  // namespace

std::uint64_t pade_floor_count() { return g_pade_floors.load(); }

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::spline: return "spline";
        case Variant::cheby: return "cheby";
        case Variant::fast: return "fast";
        case Variant::pade: return "pade";
        case Variant::jacobi_r: return "jacobi_r";
        case Variant::fourier: return "fourier";
        case Variant::fkan: return "fkan";
    }
    throw std::logic_error("bad variant");
}

Variant variant_from_name(const std::string& name) {
    if (name == "spline") return Variant::spline;
    if (name == "cheby") return Variant::cheby;
    if (name == "fast") return Variant::fast;
    if (name == "pade") return Variant::pade;
    if (name == "jacobi_r") return Variant::jacobi_r;
    if (name == "fourier") return Variant::fourier;
    if (name == "fkan") return Variant::fkan;
    throw std::invalid_argument("unknown variant: " + name);
}

std::unique_ptr<Layer> make_layer(Variant v, int n_in, int n_out, const Hyper& h) {
    if (n_in < 1 || n_out < 1) throw std::invalid_argument("make_layer: bad shape");
    switch (v) {
        case Variant::spline: return std::make_unique<SplineLayer>(n_in, n_out, h);
        case Variant::cheby: return std::make_unique<ChebyLayer>(n_in, n_out, h);
        case Variant::fast: return std::make_unique<FastLayer>(n_in, n_out, h);
        case Variant::pade: return std::make_unique<PadeLayer>(n_in, n_out, h);
        case Variant::jacobi_r: return std::make_unique<JacobiRLayer>(n_in, n_out, h);
        case Variant::fourier: return std::make_unique<FourierLayer>(n_in, n_out, h);
        case Variant::fkan: return std::make_unique<FkanLayer>(n_in, n_out, h);
    }
    throw std::logic_error("bad variant");
}

const std::vector<Matrix>& cheby_coeffs(const Layer& layer) {
    auto* p = dynamic_cast<const ChebyLayer*>(&layer);
    if (!p) throw std::invalid_argument("not a cheby layer");
    return p->coeffs();
}

const std::vector<Matrix>& fourier_cos(const Layer& layer) {
    auto* p = dynamic_cast<const FourierLayer*>(&layer);
    if (!p) throw std::invalid_argument("not a fourier layer");
    return p->cos_weights();
}

const std::vector<Matrix>& fourier_sin(const Layer& layer) {
    auto* p = dynamic_cast<const FourierLayer*>(&layer);
    if (!p) throw std::invalid_argument("not a fourier layer");
    return p->sin_weights();
}

const std::vector<Matrix>& pade_num(const Layer& layer) {
    auto* p = dynamic_cast<const PadeLayer*>(&layer);
    if (!p) throw std::invalid_argument("not a pade layer");
    return p->num();
}

const std::vector<Matrix>& pade_den(const Layer& layer) {
    auto* p = dynamic_cast<const PadeLayer*>(&layer);
    if (!p) throw std::invalid_argument("not a pade layer");
    return p->den();
}

}  // namespace tabkan::layers
