#include "pno/picard.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace pno {
namespace {

constexpr double kPi = 3.14159265358979323846;

double inv_or_zero(double q) { return q == kInf ? 0.0 : 1.0 / q; }

}  // namespace

void ProblemSetup::validate() const {
    op.validate();
    f.validate();
    validate_exponent(norm.r, "r");
    validate_exponent(norm.s, "s");
    if (!(T > 0.0) || !std::isfinite(T))
        throw std::invalid_argument("setup: horizon T must be positive and finite");
    if (!(M > 0.0) || !(M_prime > 0.0) || !(R > 0.0))
        throw std::invalid_argument("setup: ball radii M, M', R must be positive");
    if (!(domain_measure > 0.0) || !std::isfinite(domain_measure))
        throw std::invalid_argument("setup: domain measure must be positive and finite");
}

ContractionConstants derive_constants(const ProblemSetup& s) {
    s.validate();
    const double p = s.f.p;
    const double cF = s.f.growth_constant();
    const double cL = s.op.c_L;
    const double inv_r = inv_or_zero(s.norm.r);
    const double inv_s = inv_or_zero(s.norm.s);

    ContractionConstants c;
    c.alpha = -s.op.nu * (p - 1.0) * inv_s;
    c.beta = 1.0 - (p - 1.0) * inv_r;

    const bool r_ge_p = s.norm.r == kInf || s.norm.r >= p;
    const bool beta_ok = c.beta > 0.0 && c.beta <= 1.0;
    const bool sum_ok = c.alpha + c.beta > 0.0;
    c.exponents_ok = r_ge_p && beta_ok && sum_ok;
    if (!r_ge_p)
        c.failure = "exponents: r/p >= 1 fails";
    else if (!beta_ok)
        c.failure = "exponents: beta = (r-p+1)/r outside (0,1]";
    else if (!sum_ok)
        c.failure = "exponents: alpha + beta <= 0";

    const double measure_s = std::pow(s.domain_measure, inv_s);
    c.rho = cL * measure_s * std::pow(s.T, inv_r) * s.R;
    if (c.exponents_ok) {
        c.delta = 2.0 * std::pow(c.alpha / c.beta + 1.0, -c.beta) * cL * cF *
                  std::pow(s.T, c.alpha + c.beta) * std::pow(s.M, p - 1.0);
    } else {
        c.delta = kInf;
    }
    c.c1 = measure_s * s.R + cF * std::pow(s.M, p);
    c.c2 = 2.0 * cL * measure_s * std::pow(s.T, 1.0 + inv_r);
    c.c3 = c.delta < 1.0 ? s.M + (c.c1 + c.c2) / (1.0 - c.delta) : kInf;

    if (c.exponents_ok) {
        if (!(s.T <= 1.0)) {
            c.failure = "parameters: T <= 1 fails";
        } else if (!(c.rho + 0.5 * c.delta * s.M <= s.M)) {
            c.failure = "parameters: rho + (delta/2) M <= M fails";
        } else if (!(2.0 * cL * s.R + 2.0 * cL * s.T * (1.0 + cF * std::pow(s.M_prime, p)) <=
                     s.M_prime)) {
            c.failure = "parameters: sup-norm ball invariance fails";
        } else if (!(std::pow(s.T, inv_r) * measure_s * s.M_prime <= s.M)) {
            c.failure = "parameters: sup ball does not embed in the mixed-norm ball";
        } else if (!(c.delta < 1.0)) {
            c.failure = "parameters: delta >= 1";
        } else {
            c.parameters_ok = true;
        }
    }
    return c;
}

double select_horizon(ProblemSetup s, double delta_target, int max_steps) {
    if (!(delta_target > 0.0) || !(delta_target < 1.0))
        throw std::invalid_argument("select_horizon: delta target must lie in (0,1)");
    if (max_steps < 1) throw std::invalid_argument("select_horizon: need at least one step");
    {
        ContractionConstants probe = derive_constants(s);
        if (!probe.exponents_ok)
            throw std::runtime_error("select_horizon: " + probe.failure +
                                     " (no horizon can repair the exponents)");
        if (2.0 * s.op.c_L * s.R >= s.M_prime)
            throw std::runtime_error(
                "select_horizon: 2 c_L R >= M' leaves no room for the sup-norm ball at any "
                "horizon");
    }
    for (int step = 0; step < max_steps; ++step) {
        const ContractionConstants c = derive_constants(s);
        if (c.parameters_ok && c.delta <= delta_target) return s.T;
        s.T *= 0.5;
    }
    throw std::runtime_error("select_horizon: horizon search exhausted its halving budget");
}

int iteration_count(double eps, double delta) {
    if (!(eps > 0.0) || !(eps < 1.0))
        throw std::invalid_argument("iteration_count: eps must lie in (0,1)");
    if (!(delta > 0.0) || !(delta < 1.0))
        throw std::invalid_argument("iteration_count: delta must lie in (0,1)");
    const double j = std::ceil(std::log(1.0 / eps) / std::log(1.0 / delta));
    return std::max(1, int(j));
}

Field initial_layer(const OperatorSpec& op, const SpaceTimeGrid& grid,
                    const std::vector<double>& u0, const KernelApplicator* applicator) {
    if (applicator != nullptr) return applicator->initial_apply(u0);
    return semigroup_trajectory(op, grid, u0);
}

Field duhamel_exact(const OperatorSpec& op, const Field& w) {
    const SpaceTimeGrid& g = w.grid;
    const int nt = g.nt, nx = g.nx;
    const int K = std::min(op.k_eval, nx);
    const double dt = g.dt();

    // forward transform of every time slice
    std::vector<double> coef(std::size_t(nt) * K);
    std::vector<double> slice(std::size_t(nx), 0.0);
    for (int i = 0; i < nt; ++i) {
        std::copy(w.values.begin() + std::size_t(i) * nx,
                  w.values.begin() + std::size_t(i + 1) * nx, slice.begin());
        const std::vector<double> ck = sine_coefficients(slice);
        for (int k = 0; k < K; ++k) coef[std::size_t(i) * K + k] = ck[std::size_t(k)];
    }

    // I_k(t_i) = int_0^{t_i} exp(-lambda_k (t_i - tau)) c_k(tau) dtau, trapezoid
    std::vector<double> modes(std::size_t(nt) * K, 0.0);
    std::vector<double> damp(std::size_t(nt), 0.0);
    for (int k = 0; k < K; ++k) {
        const double lam = dirichlet_eigenvalue(k + 1);
        const double e1 = std::exp(-lam * dt);
        damp[0] = 1.0;
        for (int d = 1; d < nt; ++d) damp[d] = damp[std::size_t(d - 1)] * e1;
        for (int i = 1; i < nt; ++i) {
            double acc = 0.0;
            for (int l = 0; l <= i; ++l) {
                const double wq = (l == 0 || l == i) ? 0.5 * dt : dt;
                acc += wq * damp[std::size_t(i - l)] * coef[std::size_t(l) * K + k];
            }
            modes[std::size_t(i) * K + k] = acc;
        }
    }

    Field out(g);
    std::vector<double> mk(std::size_t(K), 0.0);
    for (int i = 1; i < nt; ++i) {
        std::copy(modes.begin() + std::size_t(i) * K, modes.begin() + std::size_t(i + 1) * K,
                  mk.begin());
        const std::vector<double> row = sine_reconstruct(mk, nx);
        std::copy(row.begin(), row.end(), out.values.begin() + std::size_t(i) * nx);
    }
    return out;
}

Field phi_step(const ProblemSetup& s, const SpaceTimeGrid& grid,
               const std::vector<double>& u0, const Field& u, const PicardModes& modes) {
    if (!(u.grid == grid)) throw std::invalid_argument("phi_step: iterate grid mismatch");
    Field w = modes.fnet != nullptr
                  ? pointwise_apply(u, [&](double z) { return modes.fnet->net.eval(z); })
                  : apply_nonlinearity(s.f, u);
    Field out = initial_layer(s.op, grid, u0, modes.applicator);
    const Field inc = modes.applicator != nullptr ? modes.applicator->duhamel_apply(w)
                                                  : duhamel_exact(s.op, w);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += inc.values[i];
    return out;
}

PicardResult picard_solve(const ProblemSetup& s, const SpaceTimeGrid& grid,
                          const std::vector<double>& u0, int iterations, double delta,
                          const PicardModes& modes) {
    if (iterations < 1) throw std::invalid_argument("picard_solve: need at least one iteration");
    PicardResult res;
    res.delta = delta;

    std::vector<Field> history;
    history.reserve(std::size_t(iterations) + 1);
    history.emplace_back(grid);  // u^0 = 0
    for (int l = 1; l <= iterations; ++l)
        history.push_back(phi_step(s, grid, u0, history.back(), modes));

    const Field& last = history.back();
    double prev_inc = 0.0;
    for (int l = 1; l <= iterations; ++l) {
        PicardIterate row;
        row.index = l;
        row.increment = mixed_norm(field_difference(history[std::size_t(l)],
                                                    history[std::size_t(l - 1)]),
                                   s.norm);
        row.to_final = mixed_norm(field_difference(history[std::size_t(l)], last), s.norm);
        row.sup = sup_norm(history[std::size_t(l)]);
        if (l == 1) res.d1 = row.increment;
        if (delta > 0.0 && delta < 1.0)
            row.apriori = std::pow(delta, double(l)) / (1.0 - delta) * res.d1;
        else
            row.apriori = kInf;
        if (l > 1 && prev_inc > 1e-300)
            res.worst_ratio = std::max(res.worst_ratio, row.increment / prev_inc);
        prev_inc = row.increment;
        res.iterates.push_back(row);
    }
    res.solution = last;
    return res;
}

double measure_contraction(const ProblemSetup& s, const SpaceTimeGrid& grid,
                           const std::vector<double>& u0, int n_probes, std::uint64_t seed,
                           const PicardModes& modes) {
    if (n_probes < 1) throw std::invalid_argument("measure_contraction: need probes");
    std::mt19937_64 rng(seed ^ 0x6a09e667f3bcc909ull);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);

    // smooth seeded fields: low sine modes in x, affine modulation in t,
    // rescaled into the mixed-norm ball
    auto random_field = [&](double target) {
        Field f(grid);
        const int kmax = 4;
        std::vector<double> a(std::size_t(kmax), 0.0), b(std::size_t(kmax), 0.0);
        for (int k = 0; k < kmax; ++k) {
            a[std::size_t(k)] = unif(rng);
            b[std::size_t(k)] = unif(rng);
        }
        for (int i = 0; i < grid.nt; ++i) {
            const double th = grid.T > 0.0 ? grid.time(i) / grid.T : 0.0;
            for (int j = 0; j < grid.nx; ++j) {
                double v = 0.0;
                for (int k = 0; k < kmax; ++k)
                    v += a[std::size_t(k)] * (1.0 + 0.5 * b[std::size_t(k)] * th) *
                         std::sin((k + 1) * kPi * grid.x(j));
                f.at(i, j) = v;
            }
        }
        const double nrm = mixed_norm(f, s.norm);
        if (nrm > 0.0)
            for (double& v : f.values) v *= target / nrm;
        return f;
    };

    double worst = 0.0;
    const double fractions[3] = {0.3, 0.6, 1.0};
    for (int i = 0; i < n_probes; ++i) {
        const double fu = fractions[i % 3] * s.M;
        Field u = random_field(fu);
        Field v = random_field(fractions[(i + 1) % 3] * s.M);
        if (i % 2 == 0) {
            // near-coincident pair: perturbation on top of u
            for (std::size_t idx = 0; idx < v.values.size(); ++idx)
                v.values[idx] = u.values[idx] + 1e-3 * s.M * (v.values[idx] / s.M);
        }
        const double dist = mixed_norm(field_difference(u, v), s.norm);
        if (dist < 1e-14 * s.M) continue;
        const Field pu = phi_step(s, grid, u0, u, modes);
        const Field pv = phi_step(s, grid, u0, v, modes);
        const double num = mixed_norm(field_difference(pu, pv), s.norm);
        worst = std::max(worst, num / dist);
    }
    return worst;
}

}  // namespace pno
