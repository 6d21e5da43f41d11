#pragma once

#include <stdexcept>
#include <vector>

#include "pno/grid.hpp"

namespace pno {

/// Signal for an eigen-series truncation whose certified tail bound exceeds
/// the accuracy floor.
class TruncationError : public std::runtime_error {
  public:
    explicit TruncationError(const std::string& what) : std::runtime_error(what) {}
};

/// Negative Dirichlet Laplacian on (0,1): eigenvalues lambda_k = (k pi)^2 with
/// eigenfunctions sqrt(2) sin(k pi x). `nu` is the smoothing exponent (d/2 in
/// d space dimensions, so 1/2 here) and `c_L` the smoothing constant in
/// ||S(t)||_{q1->q2} <= c_L t^{-nu(1/q1-1/q2)}.
struct OperatorSpec {
    double nu = 0.5;
    double c_L = 1.0;
    int k_eval = 200;

    void validate() const;
};

inline double dirichlet_eigenvalue(int k) {
    const double pi = 3.14159265358979323846;
    return (k * pi) * (k * pi);
}

/// Certified bound on the dropped eigen-series tail sum_{k>K} 2 e^{-k^2 pi^2 t}.
double green_tail_bound(int K, double t);

/// Heat kernel G(t,x,y) = sum_{k<=k_eval} 2 e^{-k^2 pi^2 t} sin(k pi x) sin(k pi y).
///
/// Requires t > 0 and x,y in [0,1]. Throws TruncationError when the certified
/// tail bound at (k_eval, t) exceeds 1e-12.
double green_eval(const OperatorSpec& op, double t, double x, double y);

/// Forward sine coefficients of interior samples: c_k = 2 h sum_j u_j sin(k pi x_j),
/// k = 1..nx. On this grid the map is an exact discrete inverse pair with
/// sine_reconstruct (DST-I orthogonality).
std::vector<double> sine_coefficients(const std::vector<double>& u);

/// u_j = sum_k c_k sin(k pi x_j) on the interior grid with nx points.
std::vector<double> sine_reconstruct(const std::vector<double>& coef, int nx);

/// S(t) u0 on the interior grid: damps each resolvable sine mode by e^{-lambda_k t}.
/// t = 0 returns the sine-series reconstruction of u0 (exact at the samples).
/// Modes are truncated at min(k_eval, nx).
std::vector<double> semigroup_apply(const OperatorSpec& op, double t,
                                    const std::vector<double>& u0);

/// S(t_i) u0 for every grid time, sharing one forward transform.
Field semigroup_trajectory(const OperatorSpec& op, const SpaceTimeGrid& g,
                           const std::vector<double>& u0);

struct SmoothingRow {
    double t = 0.0;
    double estimate = 0.0;  ///< max over dictionary of ||S(t)u||_{q2} / ||u||_{q1}
    double bound = 0.0;     ///< c_L * t^{-nu(1/q1 - 1/q2)}
};

struct SmoothingReport {
    double q1 = 1.0;
    double q2 = kInf;
    std::vector<SmoothingRow> rows;
    bool passed = true;        ///< estimate <= bound at every sampled t
    double worst_excess = 0.0; ///< max over rows of estimate/bound
};

/// Lower-bounds the smoothing operator norm on a fixed deterministic dictionary
/// (eigenmodes, constant, bumps, seeded trig) and compares against the
/// c_L t^{-nu(1/q1-1/q2)} envelope. Discrete norms use the interior grid with
/// nx samples.
SmoothingReport verify_smoothing(const OperatorSpec& op,
                                 const std::vector<double>& t_samples,
                                 double q1, double q2, int nx = 255);

}  // namespace pno
