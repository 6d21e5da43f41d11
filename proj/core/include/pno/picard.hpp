#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pno/expansion.hpp"
#include "pno/grid.hpp"
#include "pno/heat_kernel.hpp"
#include "pno/nonlinearity.hpp"

namespace pno {

/// Problem data for the mild-solution fixed point
///   u(t) = S(t) u0 + int_0^t S(t - tau) F(u(tau)) dtau
/// posed on the ball of radius M in L^r(0,T; L^s).
struct ProblemSetup {
    OperatorSpec op;
    NonlinearitySpec f;
    NormSpec norm;
    double T = 1.0;
    double M = 1.0;        ///< contraction ball radius in the mixed norm
    double M_prime = 1.0;  ///< sup-norm working ball (nonlinearity domain)
    double R = 0.1;        ///< initial-data sup bound
    double domain_measure = 1.0;  ///< |D|; the unit interval gives 1

    void validate() const;
};

/// Exponents and constants of the contraction estimate, plus the feasibility
/// checks that the fixed-point argument needs.
struct ContractionConstants {
    double alpha = 0.0;  ///< -nu (p-1)/s
    double beta = 0.0;   ///< (r - p + 1)/r
    double delta = 0.0;  ///< 2 (alpha/beta + 1)^{-beta} c_L c_F T^{alpha+beta} M^{p-1}
    double rho = 0.0;    ///< c_L |D|^{1/s} T^{1/r} R
    double c1 = 0.0;     ///< |D|^{1/s} R + c_F M^p
    double c2 = 0.0;     ///< 2 c_L |D|^{1/s} T^{1+1/r}
    double c3 = 0.0;     ///< M + (c1 + c2)/(1 - delta)

    bool exponents_ok = false;   ///< r/p >= 1, 0 < beta <= 1, alpha + beta > 0
    bool parameters_ok = false;  ///< horizon/ball system, see derive_constants
    std::string failure;         ///< first violated condition, empty if none

    bool usable() const { return exponents_ok && parameters_ok && delta < 1.0; }
};

/// Computes the contraction data for the given setup. The parameter checks
/// are, in order: T <= 1; rho + (delta/2) M <= M (ball invariance of the
/// exact map); 2 c_L R + 2 c_L T (1 + c_F M'^p) <= M' (sup-norm invariance of
/// the approximate maps); T^{1/r} |D|^{1/s} M' <= M (sup ball embeds in the
/// mixed-norm ball); delta < 1.
ContractionConstants derive_constants(const ProblemSetup& s);

/// Halves T until the constants are usable and delta <= delta_target; throws
/// if the exponent conditions fail (no horizon can fix those) or the step
/// budget runs out.
double select_horizon(ProblemSetup s, double delta_target, int max_steps = 60);

/// ceil(log(1/eps) / log(1/delta)); requires eps, delta in (0,1).
int iteration_count(double eps, double delta);

/// Approximation switches for the fixed-point map: null applicator means the
/// exact eigen-series semigroup/Duhamel path, null fnet means the exact
/// nonlinearity. (applicator != null, fnet == null) realizes the truncated
/// map, (applicator != null, fnet != null) the network map.
struct PicardModes {
    const KernelApplicator* applicator = nullptr;
    const Fnet* fnet = nullptr;
};

/// S(t) u0 sampled on the grid (exact mode shares one forward sine transform).
Field initial_layer(const OperatorSpec& op, const SpaceTimeGrid& grid,
                    const std::vector<double>& u0, const KernelApplicator* applicator);

/// Duhamel integral of a source field w (already F(u)): eigenmode space with
/// per-mode trapezoid in tau. The surrogate path is w -> applicator pairing.
Field duhamel_exact(const OperatorSpec& op, const Field& w);

/// One application of the fixed-point map to the iterate u.
Field phi_step(const ProblemSetup& s, const SpaceTimeGrid& grid,
               const std::vector<double>& u0, const Field& u, const PicardModes& modes);

struct PicardIterate {
    int index = 0;              ///< iterate number, 1-based
    double increment = 0.0;     ///< || u^l - u^{l-1} ||_{r,s}
    double to_final = 0.0;      ///< || u^l - u^J ||_{r,s} against the last iterate
    double apriori = 0.0;       ///< delta^l / (1 - delta) * d1
    double sup = 0.0;           ///< sup norm of the iterate
};

struct PicardResult {
    Field solution;
    std::vector<PicardIterate> iterates;
    double d1 = 0.0;     ///< first increment, seeds the a-priori bounds
    double delta = 0.0;  ///< contraction factor the bounds were computed with
    double worst_ratio = 0.0;  ///< max of increment_{l+1} / increment_l
};

/// Runs iterations of phi_step from u = 0 and records convergence data.
/// `delta` feeds the a-priori column only; it does not alter the iteration.
PicardResult picard_solve(const ProblemSetup& s, const SpaceTimeGrid& grid,
                          const std::vector<double>& u0, int iterations, double delta,
                          const PicardModes& modes);

/// Empirical contraction factor: max over seeded probe pairs u, v inside the
/// mixed-norm ball of ||Phi[u] - Phi[v]|| / ||u - v||.
double measure_contraction(const ProblemSetup& s, const SpaceTimeGrid& grid,
                           const std::vector<double>& u0, int n_probes, std::uint64_t seed,
                           const PicardModes& modes);

}  // namespace pno
