#include "pno/grid.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>

namespace pno {

SpaceTimeGrid::SpaceTimeGrid(int nt_, int nx_, double T_) : nt(nt_), nx(nx_), T(T_) {
    if (nt < 2) throw std::invalid_argument("SpaceTimeGrid: nt must be >= 2");
    if (nx < 2) throw std::invalid_argument("SpaceTimeGrid: nx must be >= 2");
    if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("SpaceTimeGrid: T must be positive and finite");
}

double holder_conjugate(double q) {
    validate_exponent(q, "exponent");
    if (q == 1.0) return kInf;
    if (q == kInf) return 1.0;
    return q / (q - 1.0);
}

void validate_exponent(double q, const char* name) {
    if (std::isnan(q) || q < 1.0) {
        throw std::invalid_argument(std::string(name) + " must lie in [1, inf], got " + std::to_string(q));
    }
}

namespace {

void require_finite(const Field& f, const char* where) {
    for (double v : f.values) {
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(where) + ": field contains a non-finite value");
    }
}

double power_mean_sum(double acc, double weight, double magnitude, double s) {
    if (s == 1.0) return acc + weight * magnitude;
    if (s == 2.0) return acc + weight * magnitude * magnitude;
    return acc + weight * std::pow(magnitude, s);
}

}  // namespace

double spatial_norm(const Field& f, int time_index, double s) {
    const int nx = f.grid.nx;
    const double wx = f.grid.dx();
    const std::size_t base = std::size_t(time_index) * nx;
    if (s == kInf) {
        double m = 0.0;
        for (int j = 0; j < nx; ++j) m = std::max(m, std::abs(f.values[base + j]));
        return m;
    }
    double acc = 0.0;
    for (int j = 0; j < nx; ++j) acc = power_mean_sum(acc, wx, std::abs(f.values[base + j]), s);
    return s == 1.0 ? acc : std::pow(acc, 1.0 / s);
}

double spatial_norm(const std::vector<double>& u, double s) {
    const double wx = 1.0 / double(u.size() + 1);
    if (s == kInf) return sup_norm(u);
    double acc = 0.0;
    for (double v : u) acc = power_mean_sum(acc, wx, std::abs(v), s);
    return s == 1.0 ? acc : std::pow(acc, 1.0 / s);
}

double mixed_norm(const Field& f, const NormSpec& norm) {
    validate_exponent(norm.r, "NormSpec.r");
    validate_exponent(norm.s, "NormSpec.s");
    require_finite(f, "mixed_norm");

    const int nt = f.grid.nt;
    const double dt = f.grid.dt();
    if (norm.r == kInf) {
        double m = 0.0;
        for (int i = 0; i < nt; ++i) m = std::max(m, spatial_norm(f, i, norm.s));
        return m;
    }
    double acc = 0.0;
    for (int i = 0; i < nt; ++i) {
        const double wt = (i == 0 || i == nt - 1) ? 0.5 * dt : dt;
        acc = power_mean_sum(acc, wt, spatial_norm(f, i, norm.s), norm.r);
    }
    return norm.r == 1.0 ? acc : std::pow(acc, 1.0 / norm.r);
}

Field pointwise_apply(const Field& f, const std::function<double(double)>& map) {
    Field out(f.grid);
    for (std::size_t n = 0; n < f.values.size(); ++n) {
        const double v = map(f.values[n]);
        if (!std::isfinite(v)) throw std::runtime_error("pointwise_apply: map produced a non-finite value");
        out.values[n] = v;
    }
    return out;
}

double sup_norm(const Field& f) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
}

double sup_norm(const std::vector<double>& u) {
    double m = 0.0;
    for (double v : u) m = std::max(m, std::abs(v));
    return m;
}

Field field_difference(const Field& a, const Field& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("field_difference: grids differ");
    Field out(a.grid);
    for (std::size_t n = 0; n < a.values.size(); ++n) out.values[n] = a.values[n] - b.values[n];
    return out;
}

Field extend_constant_in_time(const SpaceTimeGrid& g, const std::vector<double>& u0) {
    if (int(u0.size()) != g.nx) throw std::invalid_argument("extend_constant_in_time: u0 size != nx");
    Field out(g);
    for (int i = 0; i < g.nt; ++i)
        for (int j = 0; j < g.nx; ++j) out.at(i, j) = u0[j];
    return out;
}

std::vector<double> sample_initial_data(double R, int nx, std::uint64_t seed,
                                        InitialDataKind kind, int k) {
    if (!(R >= 0.0) || !std::isfinite(R)) throw std::invalid_argument("sample_initial_data: R must be >= 0");
    if (nx < 2) throw std::invalid_argument("sample_initial_data: nx must be >= 2");
    const double pi = std::acos(-1.0);
    std::vector<double> u(nx, 0.0);
    auto xj = [nx](int j) { return double(j + 1) / double(nx + 1); };

    switch (kind) {
        case InitialDataKind::eigenmode: {
            if (k < 1) throw std::invalid_argument("sample_initial_data: eigenmode index k must be >= 1");
            for (int j = 0; j < nx; ++j) u[j] = R * std::sin(k * pi * xj(j));
            break;
        }
        case InitialDataKind::random_trig: {
            std::mt19937_64 rng(seed);
            std::uniform_real_distribution<double> unif(-1.0, 1.0);
            constexpr int kModes = 6;
            double amp[kModes];
            for (int m = 0; m < kModes; ++m) amp[m] = unif(rng);
            for (int j = 0; j < nx; ++j) {
                double v = 0.0;
                for (int m = 0; m < kModes; ++m) v += amp[m] * std::sin((m + 1) * pi * xj(j));
                u[j] = v;
            }
            const double peak = sup_norm(u);
            if (peak > 0.0) {
                for (double& v : u) v *= R / peak;
            }
            break;
        }
        case InitialDataKind::bump: {
            // Center/width jittered deterministically; profile vanishes to all
            // orders at the support edges, so the zero extension is smooth.
            std::mt19937_64 rng(seed);
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            const double center = 0.35 + 0.3 * unif(rng);
            const double width = 0.2 + 0.15 * unif(rng);
            for (int j = 0; j < nx; ++j) {
                const double z = (xj(j) - center) / width;
                u[j] = std::abs(z) < 1.0 ? R * std::exp(1.0 - 1.0 / (1.0 - z * z)) : 0.0;
            }
            break;
        }
    }
    return u;
}

std::string format_sig17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace pno
