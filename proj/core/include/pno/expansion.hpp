#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "pno/grid.hpp"
#include "pno/heat_kernel.hpp"

namespace pno {

enum class BasisKind { spectral, fourier, haar };

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& s);

/// One separable factor along a single axis.
/// fourier: `a` is the signed trigonometric order (0 constant, +q cosine of
/// order q, -q sine of order q); `b` unused. Time axes have period 3T over the
/// extended box [-T,2T], space axes period 1.
/// haar: `a` is the dyadic level (-1 for the scaling function), `b` the
/// position; functions live on [0,1] and time axes are rescaled by 1/T.
struct AxisFunc {
    int a = 0;
    int b = 0;
    bool operator==(const AxisFunc&) const = default;
};

/// Separable rank-N surrogate of the zero-extended kernel
/// G~(t,tau,x,y) = G(t-tau,x,y) on {0 <= tau < t <= T}, 0 elsewhere:
///
///   G_N(t-tau,x,y) = sum_{n,m} c_{n,m} psi_m(tau,y) phi_n(t,x),
///
/// with the same coefficients reused at the initial-time node tau0 for the
/// semigroup surrogate. Coefficients are built by midpoint quadrature on a
/// grid4^4 lattice; `spectral` keeps the eigen-series diagonal instead of a
/// tensor and serves as the evaluation oracle.
struct KernelExpansion {
    BasisKind kind = BasisKind::haar;
    double T = 1.0;
    int grid4 = 0;      ///< build lattice resolution (0 when unknown, e.g. freshly imported haar)
    double t_min = 0.0; ///< diagonal clamp used for off-lattice kernel evaluation
    double tau0 = 0.0;  ///< initial-layer time node; 0 is equivalent for haar

    std::vector<int> modes;  ///< spectral only, ascending eigenmode indices

    // Tensor form (fourier/haar): coeffs[((n1*|phi_x| + n2)*|psi_t| + m1)*|psi_x| + m2]
    std::vector<AxisFunc> phi_time, phi_space, psi_time, psi_space;
    std::vector<double> coeffs;

    /// Total stored coefficient count |Lambda_N| (the basis's natural pairing).
    std::size_t rank() const;
};

/// Builds a rank-N expansion on [0,T] with a grid4^4 midpoint coefficient
/// lattice (grid4 a power of two, so dyadic levels nest in the lattice).
///
/// spectral: N = mode count (<= op.k_eval).
/// fourier:  per-axis cutoff ceil(N^{1/4}), clamped to the lattice-resolvable
///           orders (3*grid4/2 in time, grid4/2 in space).
/// haar:     full dyadic level J = min{ J : 2^{4J} >= N }, clamped to
///           2^J <= grid4; coefficients are conditional-expectation data.
/// Requested ranks quantize upward; rank() reports the stored cardinality.
KernelExpansion build_expansion(const OperatorSpec& op, BasisKind kind, std::size_t N,
                                double T, int grid4);

/// Evaluates G_N at (t, tau, x, y); requires 0 <= tau < t <= T, x,y in [0,1].
double expansion_eval(const KernelExpansion& exp, double t, double tau, double x, double y);

/// Evaluates the initial-layer surrogate sum c_{n,m} psi_m(tau0, y) phi_n(t, x).
double expansion_initial_eval(const KernelExpansion& exp, double t, double x, double y);

/// grid4^4 midpoint samples of the zero-extended clamped kernel,
/// [i][j][a][b] over (t_i, tau_j, x_a, y_b); zero at tau_j >= t_i.
std::vector<double> kernel_lattice(const OperatorSpec& op, double T, int grid4, double t_min);

/// grid4^3 samples [i][a][b] of the initial-time kernel column (t_i - tau0 on
/// the diagonal convention used by kernel_lattice; zero at i = 0).
std::vector<double> kernel_initial_lattice(const OperatorSpec& op, double T, int grid4,
                                           double t_min);

/// Expansion values on the same lattices.
std::vector<double> expansion_lattice(const KernelExpansion& exp, const OperatorSpec& op,
                                      int grid4);
std::vector<double> expansion_initial_lattice(const KernelExpansion& exp, const OperatorSpec& op,
                                              int grid4);

struct KernelTruncation {
    double c_g = 0.0;        ///< || ||G-G_N||_{L^{r'}_tau(0,t;L^{s'}_y)} ||_{L^r_t L^s_x}
    double c_g_init = 0.0;   ///< same outer norms, inner L^{s'}_y only, initial-time form
    double sliver_bound = 0.0;  ///< c_L * t_min mass bound for the clamped band (reported)
    std::size_t rank = 0;
};

/// Truncation errors of an expansion against the lattice kernel, with the
/// inner time integral cut at tau < t. Norm exponents (r,s) are taken from
/// `norm`; the inner norms use their Holder conjugates.
KernelTruncation truncation_errors(const KernelExpansion& exp, const OperatorSpec& op,
                                   const NormSpec& norm, int grid4);

/// Flat-text serialization: header `basis <kind> <N> <T>`, one line per
/// coefficient `m-index n-index value` with 17 significant digits; fourier and
/// spectral files carry a trailing `tau0 <value>` line. Round trips are
/// byte-stable.
void export_expansion(const KernelExpansion& exp, std::ostream& out);
KernelExpansion import_expansion(std::istream& in);
std::string export_expansion_string(const KernelExpansion& exp);
KernelExpansion import_expansion_string(const std::string& text);

/// Grid-bound pairing engine shared by the Picard step and the operator
/// forward pass, so both execute identical arithmetic.
///
///   duhamel_apply(f)  = sum_{n,m} c_{n,m} <psi_m, f>       phi_n(t_i, x_j)
///   initial_apply(u0) = sum_{n,m} c_{n,m} <psi_m(tau0), u0> phi_n(t_i, x_j)
///
/// Pairings use trapezoid quadrature in time and the zero-extended trapezoid
/// rule in space on the field grid. Rejects spectral expansions (no separable
/// tensor).
class KernelApplicator {
  public:
    KernelApplicator(const KernelExpansion& exp, const SpaceTimeGrid& grid);

    const SpaceTimeGrid& grid() const { return grid_; }
    const KernelExpansion& expansion() const { return exp_; }

    std::vector<double> psi_pairings(const Field& f) const;
    std::vector<double> psi_initial_pairings(const std::vector<double>& u0) const;
    std::vector<double> apply_coefficients(const std::vector<double>& psi_values) const;
    /// Same contraction with a caller-supplied coefficient table (layout as
    /// KernelExpansion::coeffs); lets layered evaluators reuse the cached
    /// axis tables with per-layer weight matrices.
    std::vector<double> apply_coefficients(const std::vector<double>& table,
                                           const std::vector<double>& psi_values) const;
    Field phi_reconstruct(const std::vector<double>& phi_weights) const;

    Field duhamel_apply(const Field& f) const;
    Field initial_apply(const std::vector<double>& u0) const;

  private:
    KernelExpansion exp_;
    SpaceTimeGrid grid_;
    // cached axis evaluations: [func][sample]
    std::vector<double> phi_t_, phi_x_, psi_t_, psi_x_;
    std::vector<double> psi_t_init_;  // psi time factors at tau0
};

}  // namespace pno
