#pragma once

#include <cstdint>
#include <vector>

#include "pno/grid.hpp"

namespace pno {

/// Pointwise nonlinearity F with F(0) = 0 and the one-sided growth structure
/// |F(u) - F(v)| <= c_F (|u| + |v|)^{p-1} |u - v|.
struct NonlinearitySpec {
    enum class Kind { signed_power, abs_power, polynomial };

    Kind kind = Kind::signed_power;
    double p = 2.0;      ///< growth exponent (top degree for polynomials)
    double scale = 1.0;  ///< leading multiplier for the power kinds
    /// polynomial only: poly[q-1] multiplies z^q (no constant term, so F(0)=0)
    std::vector<double> poly;

    /// Growth constant; 0 selects the derived default (scale * p for the
    /// power kinds, sum |c_q| q for polynomials).
    double c_F = 0.0;

    void validate() const;
    double growth_constant() const;  ///< c_F with the default substituted
};

double f_eval(const NonlinearitySpec& spec, double z);
Field apply_nonlinearity(const NonlinearitySpec& spec, const Field& f);

/// Largest |F''| over [-M, M]; throws when the curvature is unbounded
/// (fractional powers below 2), since the uniform-knot construction needs it.
double curvature_bound(const NonlinearitySpec& spec, double M);

struct AssumptionReport {
    bool f_zero_at_zero = true;
    double worst_ratio = 0.0;  ///< max |F(u)-F(v)| / (c_F (|u|+|v|)^{p-1} |u-v|)
    bool passed = true;
};

/// Samples seeded pairs in [-M, M]^2 (plus structured pairs near the diagonal,
/// the axes, and the antidiagonal) and checks the growth inequality.
AssumptionReport verify_assumption_F(const NonlinearitySpec& spec, double M,
                                     int n_pairs = 2000, std::uint64_t seed = 0);

enum class Activation { relu, requ };

/// relu(z) = max(z, 0); requ(z) = max(z, 0)^2.
double activation_eval(Activation act, double z);

/// y = act(W z + b); the network's last layer is affine (no activation).
struct DenseLayer {
    int in = 0, out = 0;
    std::vector<double> W;  ///< row-major, out x in
    std::vector<double> b;
};

/// Scalar-to-scalar feedforward network. All constructions here keep
/// eval(0) = 0 exactly (every hidden unit either vanishes at 0 or cancels in
/// the outgoing affine map), matching F(0) = 0 without constant terms.
struct ScalarNetwork {
    Activation act = Activation::relu;
    std::vector<DenseLayer> layers;

    int depth() const;  ///< hidden layer count
    int width() const;  ///< widest hidden layer
    double eval(double z) const;
};

/// ReLU approximant of F on [-M, M] with certified uniform error.
struct Fnet {
    ScalarNetwork net;
    std::vector<double> knots;   ///< uniform, symmetric, includes 0
    std::vector<double> values;  ///< F at the knots
    double eps = 0.0;            ///< requested sup-norm budget
    double domain = 0.0;         ///< M
    double spacing = 0.0;        ///< realized knot spacing h
    double error_bound = 0.0;    ///< |F''|_inf h^2 / 8 <= eps
    double measured_error = 0.0; ///< sup over a 10^4-point sweep
};

/// Interpolates F at uniform knots with spacing h <= sqrt(8 eps / |F''|_inf),
/// realizes the interpolant as one hidden ReLU layer (two-sided units, no
/// constant term), and validates the sup error on a dense sweep. Outside
/// [-M, M] the network continues with the boundary slopes.
Fnet build_fnet(const NonlinearitySpec& spec, double eps, double M);

/// Exact ReQU realization for specs whose map is a polynomial (signed powers
/// with odd integer p, absolute powers with even integer p, and explicit
/// polynomials). Exact on [-M, M]; non-polynomial maps such as the signed
/// power z|z| are rejected. Horner-style product chain, depth = top degree - 1.
Fnet build_requ_exact(const NonlinearitySpec& spec, double M);

}  // namespace pno
