#include "pno/heat_kernel.hpp"

#include <cmath>
#include <random>

namespace pno {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTailFloor = 1e-12;
}  // namespace

void OperatorSpec::validate() const {
    if (!(nu > 0.0)) throw std::invalid_argument("OperatorSpec: nu must be positive");
    if (!(c_L >= 1.0)) throw std::invalid_argument("OperatorSpec: c_L must be >= 1");
    if (k_eval < 1) throw std::invalid_argument("OperatorSpec: k_eval must be >= 1");
}

double green_tail_bound(int K, double t) {
    if (K < 0 || !(t > 0.0)) throw std::invalid_argument("green_tail_bound: need K >= 0 and t > 0");
    // k^2 grows by at least 2K+3 per index past K, so the tail is dominated by
    // a geometric series with ratio e^{-(2K+3) pi^2 t}.
    const double head = 2.0 * std::exp(-double(K + 1) * double(K + 1) * kPi * kPi * t);
    const double ratio = std::exp(-double(2 * K + 3) * kPi * kPi * t);
    return head / (1.0 - ratio);
}

double green_eval(const OperatorSpec& op, double t, double x, double y) {
    op.validate();
    if (!(t > 0.0)) throw std::invalid_argument("green_eval: t must be positive");
    if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0)
        throw std::invalid_argument("green_eval: x,y must lie in [0,1]");
    const double tail = green_tail_bound(op.k_eval, t);
    if (!(tail <= kTailFloor)) {
        throw TruncationError("green_eval: eigen-series tail bound " + std::to_string(tail) +
                              " exceeds 1e-12 at t=" + std::to_string(t) +
                              "; raise k_eval");
    }
    double acc = 0.0;
    for (int k = 1; k <= op.k_eval; ++k) {
        const double e = std::exp(-dirichlet_eigenvalue(k) * t);
        if (e == 0.0) break;  // further terms vanish in double precision
        acc += 2.0 * e * std::sin(k * kPi * x) * std::sin(k * kPi * y);
    }
    return acc;
}

std::vector<double> sine_coefficients(const std::vector<double>& u) {
    const int nx = int(u.size());
    const double h = 1.0 / double(nx + 1);
    std::vector<double> c(nx, 0.0);
    for (int k = 1; k <= nx; ++k) {
        double acc = 0.0;
        for (int j = 0; j < nx; ++j) acc += u[j] * std::sin(k * kPi * double(j + 1) * h);
        c[k - 1] = 2.0 * h * acc;
    }
    return c;
}

std::vector<double> sine_reconstruct(const std::vector<double>& coef, int nx) {
    const double h = 1.0 / double(nx + 1);
    std::vector<double> u(nx, 0.0);
    for (int j = 0; j < nx; ++j) {
        double acc = 0.0;
        for (int k = 1; k <= int(coef.size()); ++k) acc += coef[k - 1] * std::sin(k * kPi * double(j + 1) * h);
        u[j] = acc;
    }
    return u;
}

std::vector<double> semigroup_apply(const OperatorSpec& op, double t,
                                    const std::vector<double>& u0) {
    op.validate();
    if (!(t >= 0.0)) throw std::invalid_argument("semigroup_apply: t must be >= 0");
    const int nx = int(u0.size());
    const int K = std::min(op.k_eval, nx);
    std::vector<double> c = sine_coefficients(u0);
    c.resize(K);
    for (int k = 1; k <= K; ++k) c[k - 1] *= std::exp(-dirichlet_eigenvalue(k) * t);
    return sine_reconstruct(c, nx);
}

Field semigroup_trajectory(const OperatorSpec& op, const SpaceTimeGrid& g,
                           const std::vector<double>& u0) {
    op.validate();
    if (int(u0.size()) != g.nx) throw std::invalid_argument("semigroup_trajectory: u0 size != nx");
    const int K = std::min(op.k_eval, g.nx);
    std::vector<double> c = sine_coefficients(u0);
    c.resize(K);
    Field out(g);
    std::vector<double> damped(K);
    for (int i = 0; i < g.nt; ++i) {
        const double t = g.time(i);
        for (int k = 1; k <= K; ++k) damped[k - 1] = c[k - 1] * std::exp(-dirichlet_eigenvalue(k) * t);
        const std::vector<double> row = sine_reconstruct(damped, g.nx);
        for (int j = 0; j < g.nx; ++j) out.at(i, j) = row[j];
    }
    return out;
}

namespace {

// Deterministic dictionary used to probe operator norms from below.
std::vector<std::vector<double>> smoothing_dictionary(int nx) {
    std::vector<std::vector<double>> dict;
    for (int k = 1; k <= 4; ++k) dict.push_back(sample_initial_data(1.0, nx, 0, InitialDataKind::eigenmode, k));
    dict.emplace_back(nx, 1.0);  // constant; boundary extension makes it a worst case for L^1 mass
    auto bump = [nx](double center, double width) {
        std::vector<double> u(nx, 0.0);
        for (int j = 0; j < nx; ++j) {
            const double z = (double(j + 1) / double(nx + 1) - center) / width;
            u[j] = std::abs(z) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - z * z)) : 0.0;
        }
        return u;
    };
    dict.push_back(bump(0.5, 0.05));  // near-delta probe for L^1 -> L^inf
    dict.push_back(bump(0.5, 0.25));
    dict.push_back(bump(0.25, 0.1));
    dict.push_back(sample_initial_data(1.0, nx, 11, InitialDataKind::random_trig));
    dict.push_back(sample_initial_data(1.0, nx, 12, InitialDataKind::random_trig));
    return dict;
}

}  // namespace

SmoothingReport verify_smoothing(const OperatorSpec& op,
                                 const std::vector<double>& t_samples,
                                 double q1, double q2, int nx) {
    op.validate();
    validate_exponent(q1, "q1");
    validate_exponent(q2, "q2");
    const auto dict = smoothing_dictionary(nx);
    const double inv_q1 = q1 == kInf ? 0.0 : 1.0 / q1;
    const double inv_q2 = q2 == kInf ? 0.0 : 1.0 / q2;

    SmoothingReport report;
    report.q1 = q1;
    report.q2 = q2;
    for (double t : t_samples) {
        if (!(t > 0.0)) throw std::invalid_argument("verify_smoothing: t samples must be positive");
        double estimate = 0.0;
        for (const auto& u : dict) {
            const double denom = spatial_norm(u, q1);
            if (denom == 0.0) continue;
            const std::vector<double> su = semigroup_apply(op, t, u);
            estimate = std::max(estimate, spatial_norm(su, q2) / denom);
        }
        SmoothingRow row;
        row.t = t;
        row.estimate = estimate;
        row.bound = op.c_L * std::pow(t, -op.nu * (inv_q1 - inv_q2));
        report.rows.push_back(row);
        report.worst_excess = std::max(report.worst_excess, row.estimate / row.bound);
        if (row.estimate > row.bound * (1.0 + 1e-9)) report.passed = false;
    }
    return report;
}

}  // namespace pno
