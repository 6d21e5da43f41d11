#include "pno/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace pno {
namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

double fourier_eval(int q, double u, double period) {
    if (q == 0) return 1.0;
    const double w = 2.0 * kPi * std::abs(q) / period;
    return q > 0 ? std::cos(w * u) : std::sin(w * u);
}

/// Haar factor on [0,1]; level -1 is the scaling function. u = 1 belongs to
/// the last dyadic cell.
double haar_eval(int level, int pos, double u) {
    if (level < 0) return 1.0;
    if (u >= 1.0) u = std::nextafter(1.0, 0.0);
    if (u < 0.0) u = 0.0;
    const double cells = std::ldexp(1.0, level);
    const double z = u * cells - double(pos);
    if (z < 0.0 || z >= 1.0) return 0.0;
    const double amp = std::sqrt(cells);
    return z < 0.5 ? amp : -amp;
}

double eval_time_factor(const KernelExpansion& e, const AxisFunc& f, double t) {
    return e.kind == BasisKind::fourier ? fourier_eval(f.a, t, 3.0 * e.T)
                                        : haar_eval(f.a, f.b, t / e.T);
}

double eval_space_factor(const KernelExpansion& e, const AxisFunc& f, double x) {
    return e.kind == BasisKind::fourier ? fourier_eval(f.a, x, 1.0)
                                        : haar_eval(f.a, f.b, x);
}

// ---- generic dense tensor machinery ----

/// out[l,o,r] = sum_d M[o,d] in[l,d,r]; replaces dims[axis] by `rows`.
std::vector<double> contract_axis(const std::vector<double>& in, std::vector<int>& dims,
                                  std::size_t axis, const std::vector<double>& M, int rows) {
    std::size_t left = 1, right = 1;
    for (std::size_t k = 0; k < axis; ++k) left *= std::size_t(dims[k]);
    for (std::size_t k = axis + 1; k < dims.size(); ++k) right *= std::size_t(dims[k]);
    const int d_in = dims[axis];
    std::vector<double> out(left * std::size_t(rows) * right, 0.0);
    for (std::size_t l = 0; l < left; ++l) {
        const double* src = in.data() + l * std::size_t(d_in) * right;
        double* dst = out.data() + l * std::size_t(rows) * right;
        for (int o = 0; o < rows; ++o) {
            const double* mrow = M.data() + std::size_t(o) * d_in;
            double* orow = dst + std::size_t(o) * right;
            for (int d = 0; d < d_in; ++d) {
                const double m = mrow[d];
                if (m == 0.0) continue;  // haar rows are mostly zero
                const double* irow = src + std::size_t(d) * right;
                for (std::size_t r = 0; r < right; ++r) orow[r] += m * irow[r];
            }
        }
    }
    dims[axis] = rows;
    return out;
}

/// (d0,d1,d2,d3) -> (d0,d2,d1,d3) layout swap of the middle axes.
std::vector<double> swap_mid_axes(const std::vector<double>& in, int d0, int d1, int d2, int d3) {
    std::vector<double> out(in.size());
    for (int i0 = 0; i0 < d0; ++i0)
        for (int i1 = 0; i1 < d1; ++i1)
            for (int i2 = 0; i2 < d2; ++i2) {
                const double* src =
                    in.data() + ((std::size_t(i0) * d1 + i1) * d2 + std::size_t(i2)) * d3;
                double* dst =
                    out.data() + ((std::size_t(i0) * d2 + i2) * d1 + std::size_t(i1)) * d3;
                std::copy(src, src + d3, dst);
            }
    return out;
}

// ---- lattice kernels ----

/// Eigen-series spatial matrices, one per positive time separation d*(T/g):
/// out[d-1][a][b] = sum_k 2 exp(-lambda_k max(dT/g, t_min)) sin(k pi x_a) sin(k pi y_b).
std::vector<double> diagonal_matrices(const std::vector<int>& modes, double T, int g,
                                      double t_min) {
    const double dt = T / double(g);
    const int kmax = modes.empty() ? 0 : modes.back();
    std::vector<double> sins(std::size_t(kmax) * g);
    for (int k = 1; k <= kmax; ++k)
        for (int a = 0; a < g; ++a)
            sins[std::size_t(k - 1) * g + a] = std::sin(k * kPi * (a + 0.5) / double(g));
    std::vector<double> out(std::size_t(g - 1) * g * g, 0.0);
    for (int d = 1; d < g; ++d) {
        const double s = std::max(double(d) * dt, t_min);
        double* M = out.data() + std::size_t(d - 1) * g * g;
        for (int k : modes) {
            const double w = 2.0 * std::exp(-dirichlet_eigenvalue(k) * s);
            if (w < 1e-300) break;
            const double* row = sins.data() + std::size_t(k - 1) * g;
            for (int a = 0; a < g; ++a) {
                const double f = w * row[a];
                double* Ma = M + std::size_t(a) * g;
                for (int b = 0; b < g; ++b) Ma[b] += f * row[b];
            }
        }
    }
    return out;
}

std::vector<int> contiguous_modes(int kmax) {
    std::vector<int> m(kmax);
    for (int k = 1; k <= kmax; ++k) m[k - 1] = k;
    return m;
}

void check_lattice_args(double T, int g) {
    if (!(T > 0.0) || !std::isfinite(T))
        throw std::invalid_argument("kernel lattice: horizon T must be positive and finite");
    if (!is_pow2(g) || g < 2)
        throw std::invalid_argument("kernel lattice: grid4 must be a power of two >= 2");
}

/// Midpoint lattice along one axis: g points (i + 1/2) * extent / g.
std::vector<double> midpoints(int g, double extent) {
    std::vector<double> u(g);
    for (int i = 0; i < g; ++i) u[i] = (i + 0.5) * extent / double(g);
    return u;
}

// ---- axis function construction ----

/// Constant, then cos/sin pairs of ascending order up to the lattice-resolvable
/// cutoff. On the midpoint-offset lattice the Nyquist cosine vanishes
/// identically, so the Nyquist member is the sine.
std::vector<AxisFunc> fourier_axis_funcs(int q_request, int period_points) {
    const int cap = period_points / 2;
    const int q_top = std::min(q_request, cap);
    std::vector<AxisFunc> fs;
    fs.push_back({0, 0});
    for (int q = 1; q <= q_top; ++q) {
        if (q < cap) fs.push_back({q, 0});
        fs.push_back({-q, 0});
    }
    return fs;
}

/// Scaling function, then Haar wavelets by ascending level and position.
std::vector<AxisFunc> haar_axis_funcs(int levels) {
    std::vector<AxisFunc> fs;
    fs.push_back({-1, 0});
    for (int l = 0; l < levels; ++l)
        for (int p = 0; p < (1 << l); ++p) fs.push_back({l, p});
    return fs;
}

struct AxisQuadrature {
    std::vector<double> samples;  ///< coordinates of the g box-lattice points
    double weight = 0.0;          ///< quadrature weight of one box sample
    std::vector<double> norm_samples;  ///< full periodic lattice for the norm
    double norm_weight = 0.0;
};

/// Projection matrix W[f][i] = B_f(samples[i]) * weight / ||B_f||^2, with the
/// norm taken over the periodic lattice so the projection is the exact
/// discrete one for the zero-extended kernel.
std::vector<double> weighted_matrix(const KernelExpansion& e, const std::vector<AxisFunc>& fs,
                                    const AxisQuadrature& q, bool time_axis) {
    const int g = int(q.samples.size());
    std::vector<double> W(fs.size() * std::size_t(g), 0.0);
    for (std::size_t f = 0; f < fs.size(); ++f) {
        double norm2 = 0.0;
        for (double u : q.norm_samples) {
            const double v = time_axis ? eval_time_factor(e, fs[f], u)
                                       : eval_space_factor(e, fs[f], u);
            norm2 += v * v * q.norm_weight;
        }
        if (!(norm2 > 1e-14))
            throw std::logic_error("expansion build: degenerate axis function in basis list");
        for (int i = 0; i < g; ++i) {
            const double v = time_axis ? eval_time_factor(e, fs[f], q.samples[i])
                                       : eval_space_factor(e, fs[f], q.samples[i]);
            W[f * g + i] = v * q.weight / norm2;
        }
    }
    return W;
}

/// Plain evaluation matrix E[i][f] = B_f(samples[i]) (rows indexed by sample).
std::vector<double> eval_matrix(const KernelExpansion& e, const std::vector<AxisFunc>& fs,
                                const std::vector<double>& samples, bool time_axis) {
    std::vector<double> E(samples.size() * fs.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        for (std::size_t f = 0; f < fs.size(); ++f)
            E[i * fs.size() + f] = time_axis ? eval_time_factor(e, fs[f], samples[i])
                                             : eval_space_factor(e, fs[f], samples[i]);
    return E;
}

double parse_double(const std::string& tok, const char* what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string("expansion import: bad ") + what);
    }
    if (used != tok.size())
        throw std::invalid_argument(std::string("expansion import: bad ") + what);
    return v;
}

std::vector<int> split_ints(const std::string& tok, const char* what) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos <= tok.size()) {
        const std::size_t comma = tok.find(',', pos);
        const std::string part = tok.substr(pos, comma == std::string::npos ? std::string::npos
                                                                            : comma - pos);
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(part, &used));
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw std::invalid_argument(std::string("expansion import: bad index token in ") +
                                        what);
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::string index_token(BasisKind kind, const AxisFunc& time_f, const AxisFunc& space_f) {
    std::ostringstream os;
    if (kind == BasisKind::fourier) {
        os << time_f.a << ',' << space_f.a;
    } else {
        os << time_f.a << ',' << time_f.b << ',' << space_f.a << ',' << space_f.b;
    }
    return os.str();
}

/// Mixed-norm accumulation over a weighted sample set; q may be infinite.
class NormAccum {
  public:
    explicit NormAccum(double q) : q_(q) {}
    void add(double value, double weight) {
        const double a = std::abs(value);
        if (q_ == kInf) {
            acc_ = std::max(acc_, a);
        } else {
            acc_ += weight * std::pow(a, q_);
        }
    }
    double result() const { return q_ == kInf ? acc_ : std::pow(acc_, 1.0 / q_); }

  private:
    double q_;
    double acc_ = 0.0;
};

}  // namespace

std::string to_string(BasisKind kind) {
    switch (kind) {
        case BasisKind::spectral: return "spectral";
        case BasisKind::fourier: return "fourier";
        case BasisKind::haar: return "haar";
    }
    throw std::logic_error("unknown basis kind");
}

BasisKind basis_kind_from_string(const std::string& s) {
    if (s == "spectral") return BasisKind::spectral;
    if (s == "fourier") return BasisKind::fourier;
    if (s == "haar") return BasisKind::haar;
    throw std::invalid_argument("unknown basis kind: " + s);
}

std::size_t KernelExpansion::rank() const {
    return kind == BasisKind::spectral ? modes.size() : coeffs.size();
}

std::vector<double> kernel_lattice(const OperatorSpec& op, double T, int grid4, double t_min) {
    op.validate();
    check_lattice_args(T, grid4);
    const int g = grid4;
    if (green_tail_bound(op.k_eval, std::max(T / double(g), t_min)) > 1e-12)
        throw TruncationError(
            "kernel lattice: eigen-series tail above 1e-12 at the smallest time "
            "separation; raise k_eval or coarsen the lattice");
    const std::vector<double> diag = diagonal_matrices(contiguous_modes(op.k_eval), T, g, t_min);
    std::vector<double> out(std::size_t(g) * g * g * g, 0.0);
    for (int i = 0; i < g; ++i)
        for (int j = 0; j < i; ++j) {
            const double* M = diag.data() + std::size_t(i - j - 1) * g * g;
            double* dst = out.data() + (std::size_t(i) * g + j) * g * g;
            std::copy(M, M + std::size_t(g) * g, dst);
        }
    return out;
}

std::vector<double> kernel_initial_lattice(const OperatorSpec& op, double T, int grid4,
                                           double t_min) {
    op.validate();
    check_lattice_args(T, grid4);
    const int g = grid4;
    if (green_tail_bound(op.k_eval, std::max(T / double(g), t_min)) > 1e-12)
        throw TruncationError(
            "kernel initial lattice: eigen-series tail above 1e-12; raise k_eval");
    const std::vector<double> diag = diagonal_matrices(contiguous_modes(op.k_eval), T, g, t_min);
    std::vector<double> out(std::size_t(g) * g * g, 0.0);
    for (int i = 1; i < g; ++i)
        std::copy(diag.data() + std::size_t(i - 1) * g * g, diag.data() + std::size_t(i) * g * g,
                  out.data() + std::size_t(i) * g * g);
    return out;
}

KernelExpansion build_expansion(const OperatorSpec& op, BasisKind kind, std::size_t N,
                                double T, int grid4) {
    op.validate();
    check_lattice_args(T, grid4);
    if (N == 0) throw std::invalid_argument("build_expansion: rank request must be positive");
    const int g = grid4;

    KernelExpansion e;
    e.kind = kind;
    e.T = T;
    e.grid4 = g;
    e.t_min = T / (4.0 * g);
    e.tau0 = T / (2.0 * g);

    if (kind == BasisKind::spectral) {
        const int K = int(std::min<std::size_t>(N, std::size_t(op.k_eval)));
        e.modes = contiguous_modes(K);
        return e;
    }

    if (kind == BasisKind::fourier) {
        const int q = int(std::ceil(std::pow(double(N), 0.25)));
        e.phi_time = fourier_axis_funcs(q, 3 * g);
        e.psi_time = e.phi_time;
        e.phi_space = fourier_axis_funcs(q, g);
        e.psi_space = e.phi_space;
    } else {
        int levels = 0;
        while ((1 << (levels + 1)) <= g && levels < 15 &&
               (std::size_t(1) << (4 * levels)) < N)
            ++levels;
        e.phi_time = haar_axis_funcs(levels);
        e.psi_time = e.phi_time;
        e.phi_space = e.phi_time;
        e.psi_space = e.phi_time;
    }

    // Axis quadratures on the box lattice; fourier norms run over the full
    // periodic lattice (time period 3T covers [-T,2T], space period 1).
    const double dt = T / double(g);
    AxisQuadrature qt, qx;
    qt.samples = midpoints(g, T);
    qx.samples = midpoints(g, 1.0);
    if (kind == BasisKind::fourier) {
        qt.weight = dt;
        qt.norm_weight = dt;
        qt.norm_samples.resize(std::size_t(3) * g);
        for (int l = 0; l < 3 * g; ++l) qt.norm_samples[l] = -T + (l + 0.5) * dt;
        qx.weight = 1.0 / double(g);
        qx.norm_weight = 1.0 / double(g);
        qx.norm_samples = qx.samples;
    } else {
        // unit-box convention: time axes are rescaled by 1/T inside the basis
        // functions, so the matching quadrature weight is 1/g, not dt
        qt.weight = 1.0 / double(g);
        qt.norm_weight = 1.0 / double(g);
        qt.norm_samples = qt.samples;
        qx = qt;
        qx.samples = midpoints(g, 1.0);
        qx.norm_samples = qx.samples;
    }

    const std::vector<double> W_phi_t = weighted_matrix(e, e.phi_time, qt, true);
    const std::vector<double> W_psi_t = weighted_matrix(e, e.psi_time, qt, true);
    const std::vector<double> W_phi_x = weighted_matrix(e, e.phi_space, qx, false);
    const std::vector<double> W_psi_x = weighted_matrix(e, e.psi_space, qx, false);

    std::vector<int> dims{g, g, g, g};
    std::vector<double> tensor = kernel_lattice(op, T, g, e.t_min);
    tensor = contract_axis(tensor, dims, 0, W_phi_t, int(e.phi_time.size()));
    tensor = contract_axis(tensor, dims, 1, W_psi_t, int(e.psi_time.size()));
    tensor = contract_axis(tensor, dims, 2, W_phi_x, int(e.phi_space.size()));
    tensor = contract_axis(tensor, dims, 3, W_psi_x, int(e.psi_space.size()));
    // (n1, m1, n2, m2) -> (n1, n2, m1, m2)
    e.coeffs = swap_mid_axes(tensor, dims[0], dims[1], dims[2], dims[3]);
    return e;
}

double expansion_eval(const KernelExpansion& e, double t, double tau, double x, double y) {
    if (!(tau >= 0.0) || !(tau < t) || !(t <= e.T))
        throw std::invalid_argument("expansion_eval: need 0 <= tau < t <= T");
    if (!(x >= 0.0) || !(x <= 1.0) || !(y >= 0.0) || !(y <= 1.0))
        throw std::invalid_argument("expansion_eval: x,y must lie in [0,1]");
    if (e.kind == BasisKind::spectral) {
        const double s = std::max(t - tau, e.t_min);
        double acc = 0.0;
        for (int k : e.modes)
            acc += 2.0 * std::exp(-dirichlet_eigenvalue(k) * s) * std::sin(k * kPi * x) *
                   std::sin(k * kPi * y);
        return acc;
    }
    const std::size_t At = e.phi_time.size(), Ax = e.phi_space.size();
    const std::size_t Bt = e.psi_time.size(), By = e.psi_space.size();
    std::vector<double> psi(Bt * By);
    for (std::size_t m1 = 0; m1 < Bt; ++m1) {
        const double ft = eval_time_factor(e, e.psi_time[m1], tau);
        for (std::size_t m2 = 0; m2 < By; ++m2)
            psi[m1 * By + m2] = ft * eval_space_factor(e, e.psi_space[m2], y);
    }
    double acc = 0.0;
    for (std::size_t n1 = 0; n1 < At; ++n1) {
        const double gt = eval_time_factor(e, e.phi_time[n1], t);
        if (gt == 0.0) continue;
        for (std::size_t n2 = 0; n2 < Ax; ++n2) {
            const double gx = eval_space_factor(e, e.phi_space[n2], x);
            if (gx == 0.0) continue;
            const double* c = e.coeffs.data() + (n1 * Ax + n2) * Bt * By;
            double inner = 0.0;
            for (std::size_t m = 0; m < Bt * By; ++m) inner += c[m] * psi[m];
            acc += gt * gx * inner;
        }
    }
    return acc;
}

double expansion_initial_eval(const KernelExpansion& e, double t, double x, double y) {
    if (!(t > 0.0) || !(t <= e.T))
        throw std::invalid_argument("expansion_initial_eval: need 0 < t <= T");
    if (e.kind == BasisKind::spectral) {
        const double s = std::max(t - e.tau0, e.t_min);
        double acc = 0.0;
        for (int k : e.modes)
            acc += 2.0 * std::exp(-dirichlet_eigenvalue(k) * s) * std::sin(k * kPi * x) *
                   std::sin(k * kPi * y);
        return acc;
    }
    return expansion_eval(e, t, e.tau0, x, y);
}

std::vector<double> expansion_lattice(const KernelExpansion& e, const OperatorSpec& op,
                                      int grid4) {
    check_lattice_args(e.T, grid4);
    const int g = grid4;
    if (e.kind == BasisKind::spectral) {
        const std::vector<double> diag = diagonal_matrices(e.modes, e.T, g, e.t_min);
        std::vector<double> out(std::size_t(g) * g * g * g, 0.0);
        for (int i = 0; i < g; ++i)
            for (int j = 0; j < i; ++j)
                std::copy(diag.data() + std::size_t(i - j - 1) * g * g,
                          diag.data() + std::size_t(i - j) * g * g,
                          out.data() + (std::size_t(i) * g + j) * g * g);
        return out;
    }
    (void)op;
    const std::vector<double> tm = midpoints(g, e.T);
    const std::vector<double> xm = midpoints(g, 1.0);
    const std::vector<double> E_phi_t = eval_matrix(e, e.phi_time, tm, true);
    const std::vector<double> E_psi_t = eval_matrix(e, e.psi_time, tm, true);
    const std::vector<double> E_phi_x = eval_matrix(e, e.phi_space, xm, false);
    const std::vector<double> E_psi_x = eval_matrix(e, e.psi_space, xm, false);
    std::vector<int> dims{int(e.phi_time.size()), int(e.phi_space.size()),
                          int(e.psi_time.size()), int(e.psi_space.size())};
    std::vector<double> tensor = e.coeffs;
    tensor = contract_axis(tensor, dims, 0, E_phi_t, g);
    tensor = contract_axis(tensor, dims, 1, E_phi_x, g);
    tensor = contract_axis(tensor, dims, 2, E_psi_t, g);
    tensor = contract_axis(tensor, dims, 3, E_psi_x, g);
    // (t, x, tau, y) -> (t, tau, x, y)
    return swap_mid_axes(tensor, g, g, g, g);
}

std::vector<double> expansion_initial_lattice(const KernelExpansion& e, const OperatorSpec& op,
                                              int grid4) {
    check_lattice_args(e.T, grid4);
    const int g = grid4;
    if (e.kind == BasisKind::spectral) {
        // same zero-extension convention as the reference column: separation
        // t_i - tau0 = i * (T/g), zero at i = 0
        const std::vector<double> diag = diagonal_matrices(e.modes, e.T, g, e.t_min);
        std::vector<double> out(std::size_t(g) * g * g, 0.0);
        for (int i = 1; i < g; ++i)
            std::copy(diag.data() + std::size_t(i - 1) * g * g,
                      diag.data() + std::size_t(i) * g * g, out.data() + std::size_t(i) * g * g);
        return out;
    }
    (void)op;
    const std::size_t At = e.phi_time.size(), Ax = e.phi_space.size();
    const std::size_t Bt = e.psi_time.size(), By = e.psi_space.size();
    // collapse the psi time axis at tau0
    std::vector<double> collapsed(At * Ax * By, 0.0);
    std::vector<double> wt(Bt);
    for (std::size_t m1 = 0; m1 < Bt; ++m1) wt[m1] = eval_time_factor(e, e.psi_time[m1], e.tau0);
    for (std::size_t n = 0; n < At * Ax; ++n) {
        const double* c = e.coeffs.data() + n * Bt * By;
        double* dst = collapsed.data() + n * By;
        for (std::size_t m1 = 0; m1 < Bt; ++m1) {
            const double w = wt[m1];
            if (w == 0.0) continue;
            for (std::size_t m2 = 0; m2 < By; ++m2) dst[m2] += w * c[m1 * By + m2];
        }
    }
    const std::vector<double> tm = midpoints(g, e.T);
    const std::vector<double> xm = midpoints(g, 1.0);
    std::vector<int> dims{int(At), int(Ax), int(By)};
    std::vector<double> tensor = std::move(collapsed);
    tensor = contract_axis(tensor, dims, 0, eval_matrix(e, e.phi_time, tm, true), g);
    tensor = contract_axis(tensor, dims, 1, eval_matrix(e, e.phi_space, xm, false), g);
    tensor = contract_axis(tensor, dims, 2, eval_matrix(e, e.psi_space, xm, false), g);
    return tensor;  // [i][a][b]
}

KernelTruncation truncation_errors(const KernelExpansion& e, const OperatorSpec& op,
                                   const NormSpec& norm, int grid4) {
    validate_exponent(norm.r, "r");
    validate_exponent(norm.s, "s");
    check_lattice_args(e.T, grid4);
    const int g = grid4;
    const double t_min = e.t_min > 0.0 ? e.t_min : e.T / (4.0 * g);
    const double rc = holder_conjugate(norm.r);
    const double sc = holder_conjugate(norm.s);
    const double wt = e.T / double(g);
    const double wx = 1.0 / double(g);

    const std::vector<double> K = kernel_lattice(op, e.T, g, t_min);
    const std::vector<double> E = expansion_lattice(e, op, g);
    const std::vector<double> K0 = kernel_initial_lattice(op, e.T, g, t_min);
    const std::vector<double> E0 = expansion_initial_lattice(e, op, g);

    NormAccum outer_t(norm.r), outer0_t(norm.r);
    for (int i = 0; i < g; ++i) {
        NormAccum outer_x(norm.s), outer0_x(norm.s);
        for (int a = 0; a < g; ++a) {
            // || ||K - E||_{L^{sc}_y} ||_{L^{rc}_tau(0, t_i)}
            NormAccum inner_tau(rc);
            for (int j = 0; j < i; ++j) {
                NormAccum inner_y(sc);
                const std::size_t base = ((std::size_t(i) * g + j) * g + a) * g;
                for (int b = 0; b < g; ++b) inner_y.add(K[base + b] - E[base + b], wx);
                inner_tau.add(inner_y.result(), wt);
            }
            outer_x.add(inner_tau.result(), wx);

            NormAccum inner0_y(sc);
            const std::size_t base0 = (std::size_t(i) * g + a) * g;
            for (int b = 0; b < g; ++b) inner0_y.add(K0[base0 + b] - E0[base0 + b], wx);
            outer0_x.add(inner0_y.result(), wx);
        }
        outer_t.add(outer_x.result(), wt);
        outer0_t.add(outer0_x.result(), wt);
    }

    KernelTruncation out;
    out.c_g = outer_t.result();
    out.c_g_init = outer0_t.result();
    out.sliver_bound = op.c_L * t_min;
    out.rank = e.rank();
    return out;
}

void export_expansion(const KernelExpansion& e, std::ostream& out) {
    out << "basis " << to_string(e.kind) << ' ' << e.rank() << ' ' << format_sig17(e.T) << '\n';
    if (e.kind == BasisKind::spectral) {
        for (int k : e.modes) out << k << ' ' << k << ' ' << format_sig17(1.0) << '\n';
        out << "tau0 " << format_sig17(e.tau0) << '\n';
        return;
    }
    const std::size_t Ax = e.phi_space.size(), Bt = e.psi_time.size(), By = e.psi_space.size();
    std::size_t flat = 0;
    for (std::size_t n1 = 0; n1 < e.phi_time.size(); ++n1)
        for (std::size_t n2 = 0; n2 < Ax; ++n2)
            for (std::size_t m1 = 0; m1 < Bt; ++m1)
                for (std::size_t m2 = 0; m2 < By; ++m2, ++flat)
                    out << index_token(e.kind, e.psi_time[m1], e.psi_space[m2]) << ' '
                        << index_token(e.kind, e.phi_time[n1], e.phi_space[n2]) << ' '
                        << format_sig17(e.coeffs[flat]) << '\n';
    if (e.kind == BasisKind::fourier) out << "tau0 " << format_sig17(e.tau0) << '\n';
}

KernelExpansion import_expansion(std::istream& in) {
    std::string tag, kind_s, count_s, t_s;
    if (!(in >> tag >> kind_s >> count_s >> t_s) || tag != "basis")
        throw std::invalid_argument("expansion import: missing `basis` header");
    KernelExpansion e;
    e.kind = basis_kind_from_string(kind_s);
    const std::size_t n_lines = std::size_t(std::stoull(count_s));
    e.T = parse_double(t_s, "horizon");
    if (!(e.T > 0.0)) throw std::invalid_argument("expansion import: nonpositive horizon");

    struct Line {
        std::vector<int> m, n;
        double value;
    };
    std::vector<Line> lines;
    lines.reserve(n_lines);
    const char* side_name = e.kind == BasisKind::haar ? "haar index" : "index";
    const std::size_t ints_per_side = e.kind == BasisKind::haar ? 4 : (e.kind == BasisKind::fourier ? 2 : 1);
    for (std::size_t l = 0; l < n_lines; ++l) {
        std::string m_tok, n_tok, v_tok;
        if (!(in >> m_tok >> n_tok >> v_tok))
            throw std::invalid_argument("expansion import: truncated coefficient table");
        Line ln;
        ln.m = split_ints(m_tok, side_name);
        ln.n = split_ints(n_tok, side_name);
        if (ln.m.size() != ints_per_side || ln.n.size() != ints_per_side)
            throw std::invalid_argument("expansion import: index arity mismatch");
        ln.value = parse_double(v_tok, "coefficient");
        lines.push_back(std::move(ln));
    }
    // haar blocks never carry the tau0 trailer, and reading past the table
    // would steal tokens from an enclosing parser (model files embed blocks)
    double tau0 = 0.0;
    bool has_tau0 = false;
    if (e.kind != BasisKind::haar) {
        std::string trailer;
        if (!(in >> trailer) || trailer != "tau0")
            throw std::invalid_argument("expansion import: missing tau0 trailer");
        std::string v_tok;
        if (!(in >> v_tok)) throw std::invalid_argument("expansion import: missing tau0 value");
        tau0 = parse_double(v_tok, "tau0");
        has_tau0 = true;
    }

    if (e.kind == BasisKind::spectral) {
        if (!has_tau0) throw std::invalid_argument("expansion import: spectral file needs tau0");
        for (const Line& ln : lines) {
            if (ln.m[0] != ln.n[0] || ln.m[0] < 1 || ln.value != 1.0)
                throw std::invalid_argument("expansion import: malformed spectral line");
            e.modes.push_back(ln.m[0]);
        }
        if (!std::is_sorted(e.modes.begin(), e.modes.end()))
            throw std::invalid_argument("expansion import: spectral modes must ascend");
        e.tau0 = tau0;
        e.t_min = tau0 / 2.0;
        e.grid4 = int(std::lround(e.T / (2.0 * tau0)));
        return e;
    }
    if (e.kind == BasisKind::fourier && !has_tau0)
        throw std::invalid_argument("expansion import: fourier file needs tau0");

    // axis function lists in first-seen order, per side and axis
    auto func_of = [&](const std::vector<int>& idx, bool space) {
        return e.kind == BasisKind::fourier ? AxisFunc{idx[space ? 1 : 0], 0}
                                            : AxisFunc{idx[space ? 2 : 0], idx[space ? 3 : 1]};
    };
    std::map<std::pair<int, int>, std::size_t> pt, px, qt, qx;
    auto intern = [](std::vector<AxisFunc>& list,
                     std::map<std::pair<int, int>, std::size_t>& seen, AxisFunc f) {
        auto [it, fresh] = seen.try_emplace({f.a, f.b}, list.size());
        if (fresh) list.push_back(f);
        return it->second;
    };
    struct Entry {
        std::size_t n1, n2, m1, m2;
        double value;
    };
    std::vector<Entry> entries;
    entries.reserve(lines.size());
    for (const Line& ln : lines) {
        Entry en;
        en.m1 = intern(e.psi_time, qt, func_of(ln.m, false));
        en.m2 = intern(e.psi_space, qx, func_of(ln.m, true));
        en.n1 = intern(e.phi_time, pt, func_of(ln.n, false));
        en.n2 = intern(e.phi_space, px, func_of(ln.n, true));
        en.value = ln.value;
        entries.push_back(en);
    }
    const std::size_t At = e.phi_time.size(), Ax = e.phi_space.size();
    const std::size_t Bt = e.psi_time.size(), By = e.psi_space.size();
    if (At * Ax * Bt * By != lines.size())
        throw std::invalid_argument("expansion import: coefficient table is not a full tensor");
    e.coeffs.assign(lines.size(), 0.0);
    for (const Entry& en : entries)
        e.coeffs[((en.n1 * Ax + en.n2) * Bt + en.m1) * By + en.m2] = en.value;
    if (has_tau0) {
        e.tau0 = tau0;
        e.t_min = tau0 / 2.0;
        e.grid4 = int(std::lround(e.T / (2.0 * tau0)));
    }
    return e;
}

std::string export_expansion_string(const KernelExpansion& e) {
    std::ostringstream os;
    export_expansion(e, os);
    return os.str();
}

KernelExpansion import_expansion_string(const std::string& text) {
    std::istringstream is(text);
    return import_expansion(is);
}

KernelApplicator::KernelApplicator(const KernelExpansion& exp, const SpaceTimeGrid& grid)
    : exp_(exp), grid_(grid) {
    if (exp_.kind == BasisKind::spectral)
        throw std::invalid_argument(
            "KernelApplicator: spectral expansions are evaluation oracles without a "
            "separable tensor; use fourier or haar");
    const std::size_t nt = std::size_t(grid_.nt), nx = std::size_t(grid_.nx);
    auto fill_time = [&](const std::vector<AxisFunc>& fs, std::vector<double>& table) {
        table.resize(fs.size() * nt);
        for (std::size_t f = 0; f < fs.size(); ++f)
            for (std::size_t i = 0; i < nt; ++i)
                table[f * nt + i] = eval_time_factor(exp_, fs[f], grid_.time(int(i)));
    };
    auto fill_space = [&](const std::vector<AxisFunc>& fs, std::vector<double>& table) {
        table.resize(fs.size() * nx);
        for (std::size_t f = 0; f < fs.size(); ++f)
            for (std::size_t j = 0; j < nx; ++j)
                table[f * nx + j] = eval_space_factor(exp_, fs[f], grid_.x(int(j)));
    };
    fill_time(exp_.phi_time, phi_t_);
    fill_space(exp_.phi_space, phi_x_);
    fill_time(exp_.psi_time, psi_t_);
    fill_space(exp_.psi_space, psi_x_);
    psi_t_init_.resize(exp_.psi_time.size());
    for (std::size_t f = 0; f < exp_.psi_time.size(); ++f)
        psi_t_init_[f] = eval_time_factor(exp_, exp_.psi_time[f], exp_.tau0);
}

std::vector<double> KernelApplicator::psi_pairings(const Field& f) const {
    if (!(f.grid == grid_))
        throw std::invalid_argument("KernelApplicator: field grid mismatch");
    const std::size_t nt = std::size_t(grid_.nt), nx = std::size_t(grid_.nx);
    const std::size_t Bt = exp_.psi_time.size(), By = exp_.psi_space.size();
    const double h = grid_.dx();
    const double dt = grid_.dt();
    // space first: S[m2][i] = h * sum_j psi_x[m2][j] f(i,j)
    std::vector<double> S(By * nt, 0.0);
    for (std::size_t m2 = 0; m2 < By; ++m2) {
        const double* px = psi_x_.data() + m2 * nx;
        for (std::size_t i = 0; i < nt; ++i) {
            const double* row = f.values.data() + i * nx;
            double acc = 0.0;
            for (std::size_t j = 0; j < nx; ++j) acc += px[j] * row[j];
            S[m2 * nt + i] = h * acc;
        }
    }
    // then trapezoid in time
    std::vector<double> P(Bt * By, 0.0);
    for (std::size_t m1 = 0; m1 < Bt; ++m1) {
        const double* ptm = psi_t_.data() + m1 * nt;
        for (std::size_t m2 = 0; m2 < By; ++m2) {
            const double* Si = S.data() + m2 * nt;
            double acc = 0.0;
            for (std::size_t i = 0; i < nt; ++i) {
                const double w = (i == 0 || i + 1 == nt) ? 0.5 * dt : dt;
                acc += w * ptm[i] * Si[i];
            }
            P[m1 * By + m2] = acc;
        }
    }
    return P;
}

std::vector<double> KernelApplicator::psi_initial_pairings(const std::vector<double>& u0) const {
    if (u0.size() != std::size_t(grid_.nx))
        throw std::invalid_argument("KernelApplicator: initial data size mismatch");
    const std::size_t nx = std::size_t(grid_.nx);
    const std::size_t Bt = exp_.psi_time.size(), By = exp_.psi_space.size();
    const double h = grid_.dx();
    std::vector<double> V(By, 0.0);
    for (std::size_t m2 = 0; m2 < By; ++m2) {
        const double* px = psi_x_.data() + m2 * nx;
        double acc = 0.0;
        for (std::size_t j = 0; j < nx; ++j) acc += px[j] * u0[j];
        V[m2] = h * acc;
    }
    std::vector<double> P(Bt * By);
    for (std::size_t m1 = 0; m1 < Bt; ++m1)
        for (std::size_t m2 = 0; m2 < By; ++m2) P[m1 * By + m2] = psi_t_init_[m1] * V[m2];
    return P;
}

std::vector<double> KernelApplicator::apply_coefficients(
    const std::vector<double>& psi_values) const {
    return apply_coefficients(exp_.coeffs, psi_values);
}

std::vector<double> KernelApplicator::apply_coefficients(
    const std::vector<double>& table, const std::vector<double>& psi_values) const {
    const std::size_t An = exp_.phi_time.size() * exp_.phi_space.size();
    const std::size_t Bm = exp_.psi_time.size() * exp_.psi_space.size();
    if (psi_values.size() != Bm)
        throw std::invalid_argument("KernelApplicator: pairing vector size mismatch");
    if (table.size() != An * Bm)
        throw std::invalid_argument("KernelApplicator: coefficient table size mismatch");
    std::vector<double> out(An, 0.0);
    for (std::size_t n = 0; n < An; ++n) {
        const double* c = table.data() + n * Bm;
        double acc = 0.0;
        for (std::size_t m = 0; m < Bm; ++m) acc += c[m] * psi_values[m];
        out[n] = acc;
    }
    return out;
}

Field KernelApplicator::phi_reconstruct(const std::vector<double>& phi_weights) const {
    const std::size_t At = exp_.phi_time.size(), Ax = exp_.phi_space.size();
    if (phi_weights.size() != At * Ax)
        throw std::invalid_argument("KernelApplicator: weight vector size mismatch");
    const std::size_t nt = std::size_t(grid_.nt), nx = std::size_t(grid_.nx);
    std::vector<double> Q(Ax * nt, 0.0);
    for (std::size_t n2 = 0; n2 < Ax; ++n2) {
        double* q = Q.data() + n2 * nt;
        for (std::size_t n1 = 0; n1 < At; ++n1) {
            const double s = phi_weights[n1 * Ax + n2];
            if (s == 0.0) continue;
            const double* pt = phi_t_.data() + n1 * nt;
            for (std::size_t i = 0; i < nt; ++i) q[i] += s * pt[i];
        }
    }
    Field out(grid_);
    for (std::size_t n2 = 0; n2 < Ax; ++n2) {
        const double* q = Q.data() + n2 * nt;
        const double* px = phi_x_.data() + n2 * nx;
        for (std::size_t i = 0; i < nt; ++i) {
            const double qi = q[i];
            if (qi == 0.0) continue;
            double* row = out.values.data() + i * nx;
            for (std::size_t j = 0; j < nx; ++j) row[j] += qi * px[j];
        }
    }
    return out;
}

Field KernelApplicator::duhamel_apply(const Field& f) const {
    return phi_reconstruct(apply_coefficients(psi_pairings(f)));
}

Field KernelApplicator::initial_apply(const std::vector<double>& u0) const {
    return phi_reconstruct(apply_coefficients(psi_initial_pairings(u0)));
}

}  // namespace pno
