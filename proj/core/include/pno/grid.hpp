#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace pno {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Uniform sampling of the space-time cylinder [0,T] x (0,1).
///
/// Time samples include both endpoints: t_i = i*T/(nt-1), i = 0..nt-1.
/// Space samples are interior points only: x_j = (j+1)/(nx+1), j = 0..nx-1.
/// The homogeneous Dirichlet values at x=0 and x=1 are implicit zeros in every
/// quadrature that touches the boundary.
struct SpaceTimeGrid {
    int nt = 2;
    int nx = 2;
    double T = 1.0;

    SpaceTimeGrid() = default;
    SpaceTimeGrid(int nt_, int nx_, double T_);

    double time(int i) const { return T * double(i) / double(nt - 1); }
    double x(int j) const { return double(j + 1) / double(nx + 1); }
    double dt() const { return T / double(nt - 1); }
    /// Spatial quadrature weight of one interior sample (trapezoid with zero
    /// boundary extension collapses to a uniform weight).
    double dx() const { return 1.0 / double(nx + 1); }

    bool operator==(const SpaceTimeGrid&) const = default;
};

/// Scalar samples on a SpaceTimeGrid, time-major: values[i*nx + j] = f(t_i, x_j).
struct Field {
    SpaceTimeGrid grid;
    std::vector<double> values;

    Field() = default;
    explicit Field(const SpaceTimeGrid& g, double fill = 0.0)
        : grid(g), values(std::size_t(g.nt) * std::size_t(g.nx), fill) {}

    double& at(int i, int j) { return values[std::size_t(i) * grid.nx + j]; }
    double at(int i, int j) const { return values[std::size_t(i) * grid.nx + j]; }
};

/// Exponent pair (r,s) for the mixed norm L^r(0,T; L^s(0,1)). Either exponent
/// may be kInf; both must lie in [1, inf].
struct NormSpec {
    double r = 2.0;
    double s = 2.0;
};

/// Holder conjugate q' with 1/q + 1/q' = 1 (conjugate(1) = inf, conjugate(inf) = 1).
double holder_conjugate(double q);

/// Throws std::invalid_argument unless q is in [1, inf].
void validate_exponent(double q, const char* name);

/// Mixed space-time Lebesgue norm by composite trapezoid quadrature.
///
/// Inner spatial L^s norm per time sample uses the zero-extended trapezoid rule
/// on {0, x_0, ..., x_{nx-1}, 1}; the outer temporal L^r norm uses the
/// composite trapezoid rule on [0,T]. An infinite exponent is the maximum over
/// samples. Summation is in ascending index order (deterministic).
/// Rejects non-finite field values.
double mixed_norm(const Field& f, const NormSpec& norm);

/// Spatial L^s norm of one time slice under the same quadrature convention.
double spatial_norm(const Field& f, int time_index, double s);

/// Spatial L^s norm of a bare interior-sample vector.
double spatial_norm(const std::vector<double>& u, double s);

/// Applies a scalar map pointwise. Throws if the map produces a non-finite value.
Field pointwise_apply(const Field& f, const std::function<double(double)>& map);

/// max_{i,j} |f(t_i, x_j)|
double sup_norm(const Field& f);
double sup_norm(const std::vector<double>& u);

/// a - b on a shared grid.
Field field_difference(const Field& a, const Field& b);

/// Constant-in-time extension of spatial data onto a grid (u0 sized nx).
Field extend_constant_in_time(const SpaceTimeGrid& g, const std::vector<double>& u0);

/// Decimal form with 17 significant digits; round trips IEEE doubles exactly,
/// so serialized artifacts are byte-stable across export/import cycles.
std::string format_sig17(double v);

enum class InitialDataKind {
    eigenmode,    ///< R * sin(k pi x), exactly on the sup-norm ball boundary
    random_trig,  ///< seeded low-mode sine combination rescaled to sup-norm R
    bump,         ///< smooth compactly supported bump rescaled to peak R
};

/// Deterministic initial data on the interior spatial grid with sup-norm <= R
/// (= R up to grid resolution). `k` is the eigenmode index for
/// InitialDataKind::eigenmode and is ignored otherwise.
std::vector<double> sample_initial_data(double R, int nx, std::uint64_t seed,
                                        InitialDataKind kind, int k = 1);

}  // namespace pno
