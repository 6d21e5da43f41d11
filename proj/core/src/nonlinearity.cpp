#include "pno/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace pno {
namespace {

bool near_integer(double v) { return std::abs(v - std::rint(v)) < 1e-12; }

double relu(double z) { return z > 0.0 ? z : 0.0; }
double requ(double z) { return z > 0.0 ? z * z : 0.0; }

/// Affine functional over the outputs of the most recently built layer.
struct Wire {
    std::vector<double> w;
    double b = 0.0;

    bool live() const {
        if (b != 0.0) return true;
        return std::any_of(w.begin(), w.end(), [](double v) { return v != 0.0; });
    }
};

Wire scaled(const Wire& a, double s) {
    Wire out = a;
    for (double& v : out.w) v *= s;
    out.b *= s;
    return out;
}

Wire combine(const Wire& a, const Wire& b, double ca, double cb) {
    Wire out;
    out.w.resize(a.w.size(), 0.0);
    for (std::size_t i = 0; i < a.w.size(); ++i) out.w[i] = ca * a.w[i] + cb * b.w[i];
    out.b = ca * a.b + cb * b.b;
    return out;
}

/// Unit picker: wire over n outputs selecting a signed combination of them.
Wire select(std::size_t n, std::initializer_list<std::pair<std::size_t, double>> terms) {
    Wire out;
    out.w.assign(n, 0.0);
    for (auto [i, c] : terms) out.w[i] = c;
    return out;
}

}  // namespace

void NonlinearitySpec::validate() const {
    if (!std::isfinite(p) || p < 1.0)
        throw std::invalid_argument("nonlinearity: exponent p must be finite and >= 1");
    if (!std::isfinite(scale)) throw std::invalid_argument("nonlinearity: scale must be finite");
    if (!std::isfinite(c_F) || c_F < 0.0)
        throw std::invalid_argument("nonlinearity: c_F must be finite and >= 0");
    if (kind == Kind::polynomial) {
        if (poly.empty() || poly.back() == 0.0)
            throw std::invalid_argument(
                "nonlinearity: polynomial needs coefficients with a nonzero top degree");
        for (double c : poly)
            if (!std::isfinite(c))
                throw std::invalid_argument("nonlinearity: polynomial coefficient not finite");
        if (p != double(poly.size()))
            throw std::invalid_argument("nonlinearity: p must equal the polynomial top degree");
    }
    // scale = 0 is allowed for the power kinds: F == 0 is the linear problem
}

double NonlinearitySpec::growth_constant() const {
    if (c_F > 0.0) return c_F;
    if (kind == Kind::polynomial) {
        double acc = 0.0;
        for (std::size_t q = 1; q <= poly.size(); ++q) acc += std::abs(poly[q - 1]) * double(q);
        return acc;
    }
    return std::abs(scale) * p;
}

double f_eval(const NonlinearitySpec& spec, double z) {
    switch (spec.kind) {
        case NonlinearitySpec::Kind::signed_power:
            return z == 0.0 ? 0.0 : spec.scale * std::pow(std::abs(z), spec.p - 1.0) * z;
        case NonlinearitySpec::Kind::abs_power:
            return spec.scale * std::pow(std::abs(z), spec.p);
        case NonlinearitySpec::Kind::polynomial: {
            double acc = 0.0;
            for (std::size_t q = spec.poly.size(); q-- > 0;) acc = acc * z + spec.poly[q];
            return acc * z;  // no constant term
        }
    }
    throw std::logic_error("unknown nonlinearity kind");
}

Field apply_nonlinearity(const NonlinearitySpec& spec, const Field& f) {
    return pointwise_apply(f, [&spec](double z) { return f_eval(spec, z); });
}

double curvature_bound(const NonlinearitySpec& spec, double M) {
    if (!(M > 0.0) || !std::isfinite(M))
        throw std::invalid_argument("curvature_bound: M must be positive and finite");
    if (spec.kind == NonlinearitySpec::Kind::polynomial) {
        double acc = 0.0;
        for (std::size_t q = 2; q <= spec.poly.size(); ++q)
            acc += std::abs(spec.poly[q - 1]) * double(q) * double(q - 1) *
                   std::pow(M, double(q) - 2.0);
        return acc;
    }
    if (spec.p == 1.0) return 0.0;  // linear (or |z|, which the 0-knot renders exactly)
    if (spec.p < 2.0)
        throw std::invalid_argument(
            "curvature_bound: fractional exponents below 2 have unbounded curvature at 0");
    return std::abs(spec.scale) * spec.p * (spec.p - 1.0) * std::pow(M, spec.p - 2.0);
}

AssumptionReport verify_assumption_F(const NonlinearitySpec& spec, double M, int n_pairs,
                                     std::uint64_t seed) {
    spec.validate();
    if (!(M > 0.0)) throw std::invalid_argument("verify_assumption_F: M must be positive");
    if (n_pairs < 1) throw std::invalid_argument("verify_assumption_F: need at least one pair");
    const double cF = spec.growth_constant();

    AssumptionReport rep;
    rep.f_zero_at_zero = f_eval(spec, 0.0) == 0.0;

    auto probe = [&](double u, double v) {
        if (u == v) return;
        const double denom =
            cF * std::pow(std::abs(u) + std::abs(v), spec.p - 1.0) * std::abs(u - v);
        if (denom == 0.0) return;
        const double ratio = std::abs(f_eval(spec, u) - f_eval(spec, v)) / denom;
        rep.worst_ratio = std::max(rep.worst_ratio, ratio);
    };

    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<double> unif(-M, M);
    for (int i = 0; i < n_pairs; ++i) probe(unif(rng), unif(rng));
    // structured anchors: axes, antidiagonal, near-diagonal
    const int anchors = 201;
    for (int i = 0; i < anchors; ++i) {
        const double u = -M + 2.0 * M * double(i) / double(anchors - 1);
        probe(u, 0.0);
        probe(u, -u);
        probe(u, u - 1e-6 * M);
    }
    rep.passed = rep.f_zero_at_zero && rep.worst_ratio <= 1.0 + 1e-9;
    return rep;
}

int ScalarNetwork::depth() const { return int(layers.size()) - 1; }

int ScalarNetwork::width() const {
    int w = 0;
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) w = std::max(w, layers[l].out);
    return w;
}

double activation_eval(Activation act, double z) {
    return act == Activation::relu ? relu(z) : requ(z);
}

double ScalarNetwork::eval(double z) const {
    if (layers.empty()) throw std::logic_error("ScalarNetwork: empty");
    std::vector<double> cur{z}, next;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const DenseLayer& L = layers[l];
        if (cur.size() != std::size_t(L.in)) throw std::logic_error("ScalarNetwork: bad shape");
        next.assign(std::size_t(L.out), 0.0);
        for (int o = 0; o < L.out; ++o) {
            double acc = L.b[std::size_t(o)];
            const double* row = L.W.data() + std::size_t(o) * L.in;
            for (int i = 0; i < L.in; ++i) acc += row[i] * cur[std::size_t(i)];
            if (l + 1 < layers.size()) acc = act == Activation::relu ? relu(acc) : requ(acc);
            next[std::size_t(o)] = acc;
        }
        cur.swap(next);
    }
    if (cur.size() != 1) throw std::logic_error("ScalarNetwork: output must be scalar");
    return cur[0];
}

Fnet build_fnet(const NonlinearitySpec& spec, double eps, double M) {
    spec.validate();
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw std::invalid_argument("build_fnet: eps must be positive and finite");
    if (!(M > 0.0) || !std::isfinite(M))
        throw std::invalid_argument("build_fnet: M must be positive and finite");

    const double kappa = curvature_bound(spec, M);
    int m = 1;
    if (kappa > 0.0) {
        const double h0 = std::sqrt(8.0 * eps / kappa);
        m = std::max(1, int(std::ceil(M / h0)));
    }
    const double h = M / double(m);

    Fnet out;
    out.eps = eps;
    out.domain = M;
    out.spacing = h;
    out.error_bound = kappa * h * h / 8.0;
    out.knots.resize(std::size_t(2 * m + 1));
    out.values.resize(out.knots.size());
    for (int i = 0; i <= 2 * m; ++i) {
        out.knots[std::size_t(i)] = double(i - m) * h;
        out.values[std::size_t(i)] = f_eval(spec, out.knots[std::size_t(i)]);
    }
    std::vector<double> slope(std::size_t(2 * m));
    for (int j = 0; j < 2 * m; ++j)
        slope[std::size_t(j)] = (out.values[std::size_t(j + 1)] - out.values[std::size_t(j)]) / h;

    // Two-sided unit list: a ReLU(z) / ReLU(-z) pair realizes the kink at 0,
    // interior knots carry the slope jumps. All units vanish at z = 0.
    struct Unit {
        double w_in, bias, w_out;
    };
    std::vector<Unit> units;
    units.push_back({1.0, 0.0, slope[std::size_t(m)]});
    units.push_back({-1.0, 0.0, -slope[std::size_t(m - 1)]});
    for (int i = m + 1; i < 2 * m; ++i)
        units.push_back({1.0, -out.knots[std::size_t(i)],
                         slope[std::size_t(i)] - slope[std::size_t(i - 1)]});
    for (int i = 1; i < m; ++i)
        units.push_back({-1.0, out.knots[std::size_t(i)],
                         slope[std::size_t(i)] - slope[std::size_t(i - 1)]});

    out.net.act = Activation::relu;
    DenseLayer hidden;
    hidden.in = 1;
    hidden.out = int(units.size());
    hidden.b.resize(units.size());
    hidden.W.resize(units.size());
    DenseLayer last;
    last.in = hidden.out;
    last.out = 1;
    last.b.assign(1, 0.0);
    last.W.resize(units.size());
    for (std::size_t u = 0; u < units.size(); ++u) {
        hidden.W[u] = units[u].w_in;
        hidden.b[u] = units[u].bias;
        last.W[u] = units[u].w_out;
    }
    out.net.layers = {hidden, last};

    double worst = 0.0;
    const int sweep = 10000;
    for (int i = 0; i < sweep; ++i) {
        const double z = -M + 2.0 * M * double(i) / double(sweep - 1);
        worst = std::max(worst, std::abs(f_eval(spec, z) - out.net.eval(z)));
    }
    out.measured_error = worst;
    if (worst > eps * (1.0 + 1e-9))
        throw std::logic_error("build_fnet: validation sweep exceeded the certified budget");
    return out;
}

Fnet build_requ_exact(const NonlinearitySpec& spec, double M) {
    spec.validate();
    if (!(M > 0.0) || !std::isfinite(M))
        throw std::invalid_argument("build_requ_exact: M must be positive and finite");

    // polynomial gate: the map must literally be a polynomial in z
    std::vector<double> coeff;
    switch (spec.kind) {
        case NonlinearitySpec::Kind::signed_power: {
            if (!near_integer(spec.p) || (std::llround(spec.p) % 2) == 0)
                throw std::invalid_argument(
                    "build_requ_exact: signed power z|z|^{p-1} is a polynomial only for odd "
                    "integer p");
            coeff.assign(std::size_t(std::llround(spec.p)), 0.0);
            coeff.back() = spec.scale;
            break;
        }
        case NonlinearitySpec::Kind::abs_power: {
            if (!near_integer(spec.p) || (std::llround(spec.p) % 2) != 0)
                throw std::invalid_argument(
                    "build_requ_exact: |z|^p is a polynomial only for even integer p");
            coeff.assign(std::size_t(std::llround(spec.p)), 0.0);
            coeff.back() = spec.scale;
            break;
        }
        case NonlinearitySpec::Kind::polynomial:
            coeff = spec.poly;
            break;
    }
    const std::size_t P = coeff.size();

    double acc_cap = 1.0;
    for (std::size_t q = 1; q <= P; ++q) acc_cap += std::abs(coeff[q - 1]) * std::pow(M, double(q));

    Fnet out;
    out.domain = M;
    out.net.act = Activation::requ;

    // Wires over the current layer outputs; the raw input is a width-1 layer.
    Wire z{{1.0}, 0.0};
    Wire y;    // z^k
    Wire acc;  // sum_{q <= k} c_q z^q
    std::size_t k = 0;

    auto push_layer = [&](const std::vector<Wire>& preacts, int in_width) {
        DenseLayer L;
        L.in = in_width;
        L.out = int(preacts.size());
        L.W.resize(preacts.size() * std::size_t(in_width));
        L.b.resize(preacts.size());
        for (std::size_t u = 0; u < preacts.size(); ++u) {
            for (int i = 0; i < in_width; ++i) L.W[u * std::size_t(in_width) + i] = preacts[u].w[std::size_t(i)];
            L.b[u] = preacts[u].b;
        }
        out.net.layers.push_back(L);
    };

    // Layer 1: carry z through the shifted-square pair; square pair gives z^2.
    {
        std::vector<Wire> pre;
        Wire zc = z;
        zc.b += M;
        Wire zm = scaled(z, -1.0);
        zm.b += M;
        pre.push_back(zc);
        pre.push_back(zm);
        if (P >= 2) {
            pre.push_back(z);
            pre.push_back(scaled(z, -1.0));
        }
        push_layer(pre, 1);
        const std::size_t n = pre.size();
        z = combine(select(n, {{0, 1.0}}), select(n, {{1, 1.0}}), 1.0 / (4.0 * M),
                    -1.0 / (4.0 * M));
        if (P >= 2) {
            y = select(n, {{2, 1.0}, {3, 1.0}});
            k = 2;
            acc = combine(scaled(z, coeff[0]), scaled(y, coeff[1]), 1.0, 1.0);
        } else {
            y = z;
            k = 1;
            acc = scaled(z, coeff[0]);
        }
    }

    // Product chain: one layer per additional degree, y_{k+1} = z * y_k.
    while (k < P) {
        const bool acc_live = acc.live();
        std::vector<Wire> pre;
        Wire zc = z;
        zc.b += M;
        Wire zm = scaled(z, -1.0);
        zm.b += M;
        pre.push_back(zc);
        pre.push_back(zm);
        if (acc_live) {
            Wire ap = acc;
            ap.b += acc_cap;
            Wire am = scaled(acc, -1.0);
            am.b += acc_cap;
            pre.push_back(ap);
            pre.push_back(am);
        }
        const std::size_t base = pre.size();
        pre.push_back(combine(z, y, 1.0, 1.0));
        pre.push_back(combine(z, y, -1.0, -1.0));
        pre.push_back(combine(z, y, 1.0, -1.0));
        pre.push_back(combine(z, y, -1.0, 1.0));
        const int in_width = int(z.w.size());
        push_layer(pre, in_width);

        const std::size_t n = pre.size();
        z = combine(select(n, {{0, 1.0}}), select(n, {{1, 1.0}}), 1.0 / (4.0 * M),
                    -1.0 / (4.0 * M));
        Wire acc_new;
        if (acc_live)
            acc_new = combine(select(n, {{2, 1.0}}), select(n, {{3, 1.0}}),
                              1.0 / (4.0 * acc_cap), -1.0 / (4.0 * acc_cap));
        else
            acc_new = select(n, {});
        y = combine(combine(select(n, {{base, 1.0}}), select(n, {{base + 1, 1.0}}), 0.25, 0.25),
                    combine(select(n, {{base + 2, 1.0}}), select(n, {{base + 3, 1.0}}), 0.25,
                            0.25),
                    1.0, -1.0);
        ++k;
        acc = combine(acc_new, scaled(y, coeff[k - 1]), 1.0, 1.0);
    }

    // Final affine readout of the accumulator.
    DenseLayer last;
    last.in = int(acc.w.size());
    last.out = 1;
    last.W = acc.w;
    last.b.assign(1, acc.b);
    out.net.layers.push_back(last);

    double worst = 0.0;
    const int sweep = 10000;
    for (int i = 0; i < sweep; ++i) {
        const double zz = -M + 2.0 * M * double(i) / double(sweep - 1);
        worst = std::max(worst, std::abs(f_eval(spec, zz) - out.net.eval(zz)));
    }
    out.measured_error = worst;
    return out;
}

}  // namespace pno
