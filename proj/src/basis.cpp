#include "tabkan/basis.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace tabkan::basis {

namespace {
std::atomic<std::uint64_t> g_cheby_clamps{0};
}

std::uint64_t cheby_clamp_count() { return g_cheby_clamps.load(); }

Eval cheby_eval_all(double x, int degree) {
    if (degree < 0) throw std::invalid_argument("cheby: degree < 0");
    if (x > 1.0 + 1e-12 || x < -1.0 - 1e-12) {
        g_cheby_clamps.fetch_add(1, std::memory_order_relaxed);
    }
    x = std::clamp(x, -1.0, 1.0);
    Eval e;
    e.values.resize(degree + 1);
    e.derivs.resize(degree + 1);
    e.values[0] = 1.0;
    e.derivs[0] = 0.0;
    if (degree >= 1) {
        e.values[1] = x;
        e.derivs[1] = 1.0;
    }
    for (int k = 2; k <= degree; ++k) {
        e.values[k] = 2.0 * x * e.values[k - 1] - e.values[k - 2];
        e.derivs[k] = 2.0 * e.values[k - 1] + 2.0 * x * e.derivs[k - 1] - e.derivs[k - 2];
    }
    return e;
}

double rbf_eval(double r, double h) {
    if (h <= 0.0) throw std::invalid_argument("rbf: h <= 0");
    return std::exp(-r * r / (2.0 * h * h));
}

double rbf_deriv(double r, double h) {
    return -(r / (h * h)) * rbf_eval(r, h);
}

Eval jacobi_eval_all(int n, double a, double b, double x) {
    if (n < 0) throw std::invalid_argument("jacobi: n < 0");
    if (a <= -1.0 || b <= -1.0) throw std::invalid_argument("jacobi: a,b must be > -1");
    Eval e;
    e.values.resize(n + 1);
    e.derivs.resize(n + 1);
    // values at (a, b)
    e.values[0] = 1.0;
    if (n >= 1) e.values[1] = 0.5 * (a + b + 2.0) * x + 0.5 * (a - b);
    for (int k = 2; k <= n; ++k) {
        double k2ab = 2.0 * k + a + b;
        double c1 = 2.0 * k * (k + a + b) * (k2ab - 2.0);
        double c2 = (k2ab - 1.0) * (a * a - b * b);
        double c3 = (k2ab - 2.0) * (k2ab - 1.0) * k2ab;
        double c4 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * k2ab;
        e.values[k] = ((c2 + c3 * x) * e.values[k - 1] - c4 * e.values[k - 2]) / c1;
    }
    // derivative: d/dx J_n^{(a,b)} = ((n+a+b+1)/2) J_{n-1}^{(a+1,b+1)}
    e.derivs[0] = 0.0;
    if (n >= 1) {
        std::vector<double> shifted(n);  // J_0..J_{n-1} at (a+1, b+1)
        double as = a + 1.0, bs = b + 1.0;
        shifted[0] = 1.0;
        if (n >= 2) shifted[1] = 0.5 * (as + bs + 2.0) * x + 0.5 * (as - bs);
        for (int k = 2; k < n; ++k) {
            double k2ab = 2.0 * k + as + bs;
            double c1 = 2.0 * k * (k + as + bs) * (k2ab - 2.0);
            double c2 = (k2ab - 1.0) * (as * as - bs * bs);
            double c3 = (k2ab - 2.0) * (k2ab - 1.0) * k2ab;
            double c4 = 2.0 * (k + as - 1.0) * (k + bs - 1.0) * k2ab;
            shifted[k] = ((c2 + c3 * x) * shifted[k - 1] - c4 * shifted[k - 2]) / c1;
        }
        for (int k = 1; k <= n; ++k) {
            e.derivs[k] = 0.5 * (k + a + b + 1.0) * shifted[k - 1];
        }
    }
    return e;
}

double jacobi_eval(int n, double a, double b, double x) {
    return jacobi_eval_all(n, a, b, x).values[n];
}

double jacobi_deriv(int n, double a, double b, double x) {
    return jacobi_eval_all(n, a, b, x).derivs[n];
}

double jacobi_eval_sum(int n, double a, double b, double x) {
    if (n == 0) return 1.0;
    // J_n^{(a,b)}(x) = sum_s C(n+a, n-s) C(n+b, s) ((x-1)/2)^s ((x+1)/2)^{n-s}
    auto binom = [](double z, int k) {
        double p = 1.0;
        for (int i = 1; i <= k; ++i) p *= (z - (k - i)) / i;
        return p;
    };
    double sum = 0.0;
    for (int s = 0; s <= n; ++s)
        sum += binom(n + a, n - s) * binom(n + b, s) * std::pow(0.5 * (x - 1.0), s) *
               std::pow(0.5 * (x + 1.0), n - s);
    return sum;
}

FracJacobiEval frac_jacobi_eval(int n, double a, double b, double nu, double x) {
    if (nu <= 0.0) throw std::invalid_argument("frac_jacobi: nu <= 0");
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("frac_jacobi: x outside [0,1]");
    double xn = std::pow(x, nu);
    double t = 2.0 * xn - 1.0;
    Eval e = jacobi_eval_all(n, a, b, t);
    FracJacobiEval out;
    out.value = e.values[n];
    double dJ = e.derivs[n];
    out.dx = (x > 0.0) ? dJ * 2.0 * nu * std::pow(x, nu - 1.0) : 0.0;
    out.dnu = (x > 0.0) ? dJ * 2.0 * xn * std::log(x) : 0.0;
    return out;
}

RationalMapEval rational_map(double x, double L) {
    if (L <= 0.0) throw std::invalid_argument("rational_map: L <= 0");
    double s = x * x + L * L;
    double root = std::sqrt(s);
    RationalMapEval out;
    out.value = x / root;
    out.dx = L * L / (s * root);
    out.dL = -x * L / (s * root);
    return out;
}

BSplineBasis::BSplineBasis(int grid, int order) : grid_(grid), order_(order) {
    if (grid < 1 || order < 0) throw std::invalid_argument("bspline: bad grid/order");
    double h = 2.0 / grid;
    for (int i = -order; i <= grid + order; ++i) {
        knots_.push_back(-1.0 + i * h);
    }
}

Eval BSplineBasis::eval_all(double x) const {
    int n = count();
    int k = order_;
    const auto& t = knots_;
    double lo = t[k], hi = t[t.size() - 1 - k];
    bool clamped = x < lo || x > hi;  // basis is constant outside the knot span
    x = std::clamp(x, lo, hi);
    // Cox-de Boor over all basis functions, degree 0 upward.
    std::vector<double> prev(n + k, 0.0);
    for (int i = 0; i < n + k; ++i) {
        bool last_span = (x >= t[t.size() - 1 - k] && t[i] <= x && x <= t[i + 1] &&
                          t[i + 1] >= t[t.size() - 1 - k]);
        if ((t[i] <= x && x < t[i + 1]) || last_span) prev[i] = 1.0;
    }
    // keep only one indicator active when x sits exactly on a knot at the top
    {
        bool seen = false;
        for (int i = 0; i < n + k; ++i) {
            if (prev[i] == 1.0) {
                if (seen) prev[i] = 0.0;
                seen = true;
            }
        }
    }
    std::vector<double> cur(n + k, 0.0), lower;
    for (int d = 1; d <= k; ++d) {
        if (d == k) lower = prev;  // degree k-1 values, needed for derivatives
        for (int i = 0; i + d < static_cast<int>(t.size()) - 1; ++i) {
            double left = 0.0, right = 0.0;
            double den1 = t[i + d] - t[i];
            double den2 = t[i + d + 1] - t[i + 1];
            if (den1 > 0.0) left = (x - t[i]) / den1 * prev[i];
            if (den2 > 0.0) right = (t[i + d + 1] - x) / den2 * prev[i + 1];
            cur[i] = left + right;
        }
        std::swap(prev, cur);
        std::fill(cur.begin(), cur.end(), 0.0);
    }
    Eval e;
    e.values.assign(prev.begin(), prev.begin() + n);
    e.derivs.assign(n, 0.0);
    if (k >= 1 && !clamped) {
        for (int i = 0; i < n; ++i) {
            double d1 = t[i + k] - t[i];
            double d2 = t[i + k + 1] - t[i + 1];
            double v = 0.0;
            if (d1 > 0.0) v += lower[i] / d1;
            if (d2 > 0.0) v -= lower[i + 1] / d2;
            e.derivs[i] = k * v;
        }
    }
    return e;
}

}  // namespace tabkan::basis
