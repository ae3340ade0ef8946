#include "tabkan/optim.hpp"

#include <chrono>
#include <cmath>

namespace tabkan::optim {

void LbfgsState::push(const Vector& s, const Vector& y) {
    double sy = s.dot(y);
    // scale-invariant curvature condition: keeps H positive definite without
    // starving the history of well-curved but tiny steps near convergence
    if (sy <= 1e-10 * s.norm() * y.norm()) return;
    pairs_.push_back({s, y, 1.0 / sy});
    if (static_cast<int>(pairs_.size()) > capacity_) pairs_.pop_front();
}

Vector LbfgsState::direction(const Vector& grad) const {
    if (!grad.allFinite()) throw std::invalid_argument("lbfgs: non-finite gradient");
    Vector q = grad;
    std::vector<double> alpha(pairs_.size());
    for (std::size_t i = pairs_.size(); i-- > 0;) {
        alpha[i] = pairs_[i].rho * pairs_[i].s.dot(q);
        q -= alpha[i] * pairs_[i].y;
    }
    if (!pairs_.empty()) {
        const Pair& last = pairs_.back();
        double gamma = last.s.dot(last.y) / last.y.dot(last.y);
        q *= gamma;
    }
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
        double beta = pairs_[i].rho * pairs_[i].y.dot(q);
        q += (alpha[i] - beta) * pairs_[i].s;
    }
    return -q;
}

namespace {

struct Eval1d {
    double f;
    double g;  // directional derivative
};

}  // namespace

LineSearchResult wolfe_line_search(const Objective& obj, Vector& x, double& f, Vector& g,
                                   const Vector& dir, const TrainConfig& cfg) {
    LineSearchResult res;
    const double f0 = f;
    const double g0 = g.dot(dir);
    if (g0 >= 0.0) return res;  // not a descent direction

    Vector xt(x.size()), gt(x.size());
    auto eval = [&](double a) -> Eval1d {
        xt = x + a * dir;
        double fv = obj(xt, gt);
        ++res.evals;
        return {fv, gt.dot(dir)};
    };
    auto armijo = [&](double a, double fv) { return fv <= f0 + cfg.c1 * a * g0; };
    auto curvature = [&](double gv) { return std::abs(gv) <= -cfg.c2 * g0; };
    // approximate Wolfe (Hager-Zhang): near the minimizer the decrease in f
    // drops below double precision, so fall back to derivative-only tests as
    // long as f did not measurably increase
    const double f_eps = 1e-12 * (1.0 + std::abs(f0));
    auto approx_wolfe = [&](double fv, double gv) {
        return fv <= f0 + f_eps && gv <= (2.0 * cfg.c1 - 1.0) * g0 && std::abs(gv) <= -cfg.c2 * g0;
    };

    double best_armijo_a = 0.0, best_armijo_f = f0;
    Vector best_x, best_g;
    auto note = [&](double a, double fv) {
        if (armijo(a, fv) && fv < best_armijo_f) {
            best_armijo_a = a;
            best_armijo_f = fv;
            best_x = xt;
            best_g = gt;
        }
    };
    auto accept = [&](double a, double fv) {
        x = xt;
        f = fv;
        g = gt;
        res.alpha = a;
        res.ok = true;
        return res;
    };

    auto zoom = [&](double lo, double f_lo, double g_lo, double hi, double f_hi) {
        for (int i = 0; i < 30; ++i) {
            // quadratic interpolation, guarded toward bisection
            double a;
            double denom = 2.0 * (f_hi - f_lo - g_lo * (hi - lo));
            if (std::abs(denom) > 1e-300) {
                a = lo - g_lo * (hi - lo) * (hi - lo) / denom;
                double left = std::min(lo, hi), right = std::max(lo, hi);
                double margin = 0.1 * (right - left);
                if (!(a > left + margin && a < right - margin)) a = 0.5 * (lo + hi);
            } else {
                a = 0.5 * (lo + hi);
            }
            Eval1d e = eval(a);
            note(a, e.f);
            if (approx_wolfe(e.f, e.g)) return accept(a, e.f);
            if (!armijo(a, e.f) || e.f >= f_lo) {
                hi = a;
                f_hi = e.f;
            } else {
                if (curvature(e.g)) return accept(a, e.f);
                if (e.g * (hi - lo) >= 0.0) {
                    hi = lo;
                    f_hi = f_lo;
                }
                lo = a;
                f_lo = e.f;
                g_lo = e.g;
            }
            if (std::abs(hi - lo) < 1e-16) break;
        }
        if (best_armijo_a > 0.0) {
            xt = best_x;
            gt = best_g;
            return accept(best_armijo_a, best_armijo_f);
        }
        return res;
    };

    double a_prev = 0.0, f_prev = f0, g_prev = g0;
    double a = 1.0;
    for (int i = 0; i < cfg.max_ls_steps; ++i) {
        Eval1d e = eval(a);
        note(a, e.f);
        if (!armijo(a, e.f) && approx_wolfe(e.f, e.g)) return accept(a, e.f);
        if (!armijo(a, e.f) || (i > 0 && e.f >= f_prev)) {
            return zoom(a_prev, f_prev, g_prev, a, e.f);
        }
        if (curvature(e.g)) return accept(a, e.f);
        if (e.g >= 0.0) {
            return zoom(a, e.f, e.g, a_prev, f_prev);
        }
        a_prev = a;
        f_prev = e.f;
        g_prev = e.g;
        a *= 2.0;
    }
    if (best_armijo_a > 0.0) {
        xt = best_x;
        gt = best_g;
        return accept(best_armijo_a, best_armijo_f);
    }
    return res;
}

TrainReport minimize(const Objective& obj, Vector& x, const TrainConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    TrainReport rep;
    LbfgsState state(cfg.history);
    Vector g(x.size());
    double f = obj(x, g);
    bool retried = false;
    while (rep.iterations < cfg.max_iters) {
        double gnorm = g.lpNorm<Eigen::Infinity>();
        if (gnorm < cfg.grad_tol) {
            rep.stop_reason = "grad_tol";
            break;
        }
        Vector dir = state.direction(g);
        if (dir.dot(g) >= 0.0) {
            state.clear();
            dir = -g;
        }
        Vector x_prev = x;
        Vector g_prev = g;
        LineSearchResult ls = wolfe_line_search(obj, x, f, g, dir, cfg);
        if (!ls.ok) {
            if (!retried) {
                // drop the history once and retry along steepest descent
                retried = true;
                state.clear();
                dir = -g;
                ls = wolfe_line_search(obj, x, f, g, dir, cfg);
            }
            if (!ls.ok) {
                rep.stop_reason = "step_failure";
                break;
            }
        } else {
            retried = false;
        }
        state.push(x - x_prev, g - g_prev);
        ++rep.iterations;
    }
    if (rep.stop_reason.empty()) rep.stop_reason = "max_iters";
    rep.final_loss = f;
    rep.grad_norm = g.lpNorm<Eigen::Infinity>();
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

TrainReport train(network::Model& model, const Matrix& x, const std::vector<int>& y,
                  const TrainConfig& cfg, const network::PenaltySpec& penalty) {
    Vector params = model.flatten();
    Objective obj = [&](const Vector& p, Vector& grad) {
        model.unflatten(p);
        auto [f, g] = model.loss_and_grad(x, y, penalty);
        grad = g;
        return f;
    };
    TrainReport rep = minimize(obj, params, cfg);
    model.unflatten(params);
    return rep;
}

void sgd_step(Vector& params, const Vector& grad, double lr,
              const std::vector<bool>* freeze) {
    if (lr <= 0.0) throw std::invalid_argument("sgd_step: lr <= 0");
    if (params.size() != grad.size()) throw std::invalid_argument("sgd_step: size mismatch");
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        if (freeze && (*freeze)[i]) continue;
        params(i) -= lr * grad(i);
    }
}

}  // namespace tabkan::optim
