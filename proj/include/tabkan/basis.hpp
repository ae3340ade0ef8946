#pragma once

#include <cstdint>
#include <vector>

namespace tabkan::basis {

struct Eval {
    std::vector<double> values;
    std::vector<double> derivs;
};

// Chebyshev T_0..T_d with derivatives. Input is clamped to [-1,1];
// clamps beyond the 1e-12 slack bump a process-wide counter (inputs
// normally arrive through tanh, so clamping is exceptional).
Eval cheby_eval_all(double x, int degree);
std::uint64_t cheby_clamp_count();

// Gaussian RBF value and d/dr.
double rbf_eval(double r, double h);
double rbf_deriv(double r, double h);

// Jacobi polynomial J_n^{(a,b)} via three-term recurrence; derivative
// through the parameter-shift identity.
double jacobi_eval(int n, double a, double b, double x);
double jacobi_deriv(int n, double a, double b, double x);
// Independent route: explicit binomial-Pochhammer sum.
double jacobi_eval_sum(int n, double a, double b, double x);

// All orders 0..n at once (recurrence), values and derivatives.
Eval jacobi_eval_all(int n, double a, double b, double x);

// Fractional Jacobi J_n^{(a,b)}(2 x^nu - 1) on x in [0,1].
struct FracJacobiEval {
    double value;
    double dx;
    double dnu;
};
FracJacobiEval frac_jacobi_eval(int n, double a, double b, double nu, double x);

// phi(x, L) = x / sqrt(x^2 + L^2), maps R onto (-1, 1).
struct RationalMapEval {
    double value;
    double dx;
    double dL;
};
RationalMapEval rational_map(double x, double L);

// Uniform B-spline basis over [-1,1]: `grid` interior intervals, spline
// order `order` (polynomial degree), knots padded `order` times at each
// end. Yields grid+order basis functions.
class BSplineBasis {
public:
    BSplineBasis(int grid, int order);
    int count() const { return grid_ + order_; }
    int order() const { return order_; }
    // Values and derivatives of all basis functions at x (x clamped to
    // the knot range).
    Eval eval_all(double x) const;

private:
    int grid_;
    int order_;
    std::vector<double> knots_;
};

}  // namespace tabkan::basis
