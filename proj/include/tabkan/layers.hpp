#pragma once

#include "tabkan/basis.hpp"
#include "tabkan/common.hpp"

#include <memory>
#include <string>
#include <tuple>

namespace tabkan::layers {

enum class Variant { spline, cheby, fast, pade, jacobi_r, fourier, fkan };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

// Variant hyperparameters. Only the fields a variant uses are read:
// order (cheby degree d / Jacobi order N / fkan order), grid (fourier g /
// spline G), q+k (pade numerator/denominator degrees).
struct Hyper {
    int order = 3;
    int grid = 5;
    int pade_q = 2;
    int pade_k = 2;
};

struct TensorInfo {
    std::string name;
    long offset;  // in doubles, within the layer's flat block
    long size;
};

class Layer {
public:
    virtual ~Layer() = default;
    virtual Variant variant() const = 0;
    int n_in() const { return n_in_; }
    int n_out() const { return n_out_; }
    virtual long param_count() const = 0;
    virtual void init(Rng& rng) = 0;
    virtual void flatten_into(double* dst) const = 0;
    virtual void unflatten_from(const double* src) = 0;
    virtual std::vector<TensorInfo> tensor_layout() const = 0;

    // forward caches what backward needs; backward must follow the
    // matching forward call.
    virtual Matrix forward(const Matrix& x) = 0;
    // Accumulates parameter gradients into grad (layer-local layout,
    // same ordering as flatten_into) and returns dX.
    virtual Matrix backward(const Matrix& dy, double* grad) = 0;

    const Hyper& hyper() const { return hyper_; }

protected:
    Layer(int n_in, int n_out, const Hyper& h) : n_in_(n_in), n_out_(n_out), hyper_(h) {}
    int n_in_;
    int n_out_;
    Hyper hyper_;
};

std::unique_ptr<Layer> make_layer(Variant v, int n_in, int n_out, const Hyper& h);

// Coefficient-stack accessors used by the interpret module. Valid for
// cheby (T_k coefficients), fourier (cos/sin weights + bias) and pade
// (numerator/denominator) layers; throw otherwise.
const std::vector<Matrix>& cheby_coeffs(const Layer& layer);
const std::vector<Matrix>& fourier_cos(const Layer& layer);
const std::vector<Matrix>& fourier_sin(const Layer& layer);
const std::vector<Matrix>& pade_num(const Layer& layer);
const std::vector<Matrix>& pade_den(const Layer& layer);

// Process-wide count of Pade denominator evaluations that hit the floor.
std::uint64_t pade_floor_count();

constexpr double kPadeFloor = 1e-3;

}  // namespace tabkan::layers
