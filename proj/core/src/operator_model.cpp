#include "pno/operator_model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace pno {
namespace {

double parse_number(const std::string& tok, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string("model import: bad ") + what + ": " + tok);
    }
}

void expect_tag(std::istream& in, const char* tag) {
    std::string tok;
    if (!(in >> tok) || tok != tag)
        throw std::invalid_argument(std::string("model import: expected `") + tag + "`, got `" +
                                    tok + "`");
}

double read_labeled(std::istream& in, const char* label) {
    expect_tag(in, label);
    std::string tok;
    if (!(in >> tok)) throw std::invalid_argument(std::string("model import: missing ") + label);
    return parse_number(tok, label);
}

}  // namespace

NeuralOperatorModel build_weight_tied(const KernelExpansion& expansion, const Fnet& fnet,
                                      int iterations, double carry_bound) {
    if (iterations < 1)
        throw std::invalid_argument("operator model: iterations must be >= 1");
    if (!(carry_bound > 0.0) || !std::isfinite(carry_bound))
        throw std::invalid_argument("operator model: carry bound must be positive and finite");
    if (fnet.net.layers.size() < 2)
        throw std::invalid_argument("operator model: pointwise network needs a hidden layer");
    if (expansion.rank() == 0)
        throw std::invalid_argument("operator model: empty kernel expansion");
    NeuralOperatorModel m;
    m.expansion = expansion;
    m.fnet = fnet;
    m.iterations = iterations;
    m.carry_bound = carry_bound;
    return m;
}

Field forward(const NeuralOperatorModel& model, const KernelApplicator& app,
              const std::vector<double>& u0) {
    if (model.iterations < 1)
        throw std::invalid_argument("operator model: iterations must be >= 1");
    const KernelExpansion& me = model.expansion;
    const KernelExpansion& ae = app.expansion();
    if (ae.kind != me.kind || ae.rank() != me.rank() || ae.T != me.T)
        throw std::invalid_argument("operator model: applicator wraps a different expansion");

    // Identical arithmetic to iterating the Picard step: same pointwise
    // evaluation, same pairing/reconstruction routines, same addition order.
    const Field u1t = app.initial_apply(u0);
    Field v(app.grid());
    for (int j = 0; j < model.iterations; ++j) {
        const Field w = pointwise_apply(v, [&](double z) { return model.fnet.net.eval(z); });
        Field out = u1t;
        const Field inc = app.duhamel_apply(w);
        for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += inc.values[i];
        v = std::move(out);
    }
    return v;
}

Field forward(const NeuralOperatorModel& model, const SpaceTimeGrid& grid,
              const std::vector<double>& u0) {
    const KernelApplicator app(model.expansion, grid);
    return forward(model, app, u0);
}

double verify_equivalence(const NeuralOperatorModel& model, const ProblemSetup& setup,
                          const SpaceTimeGrid& grid, const std::vector<double>& u0) {
    const KernelApplicator app(model.expansion, grid);
    const Field net_out = forward(model, app, u0);

    PicardModes modes;
    modes.applicator = &app;
    modes.fnet = &model.fnet;
    Field u(grid);
    for (int j = 0; j < model.iterations; ++j) u = phi_step(setup, grid, u0, u, modes);

    double worst = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i)
        worst = std::max(worst, std::abs(u.values[i] - net_out.values[i]));
    return worst;
}

std::vector<LayerInfo> layer_table(const NeuralOperatorModel& model) {
    const ScalarNetwork& net = model.fnet.net;
    if (net.layers.size() < 2)
        throw std::logic_error("operator model: pointwise network needs a hidden layer");
    if (model.iterations < 1)
        throw std::logic_error("operator model: iterations must be >= 1");
    const int L = int(net.layers.size()) - 1;

    std::vector<LayerInfo> rows;
    rows.push_back({"input", 1, 2, false, true});
    for (int j = 0; j < model.iterations; ++j) {
        int prev = 2;
        for (int l = 0; l < L; ++l) {
            const int width = net.layers[std::size_t(l)].out + 2;
            rows.push_back({"pointwise", prev, width, true, true});
            prev = width;
        }
        if (j + 1 < model.iterations)
            rows.push_back({"channel-mix", prev, 2, false, false});
        else
            rows.push_back({"readout", prev, 1, false, true});
    }
    return rows;
}

ComplexityReport complexity(const NeuralOperatorModel& model, double eps) {
    if (!(eps > 0.0) || !(eps < 1.0))
        throw std::invalid_argument("complexity: eps must lie in (0, 1)");
    ComplexityReport r;
    r.iterations = model.iterations;
    r.fnet_depth = model.fnet.net.depth();
    for (std::size_t l = 0; l + 1 < model.fnet.net.layers.size(); ++l)
        r.fnet_width += model.fnet.net.layers[l].out;
    for (const LayerInfo& row : layer_table(model))
        if (row.counted) {
            r.depth += 1;
            r.width += row.d_out;
        }
    r.rank = model.expansion.rank();
    r.eps = eps;
    const double lg = std::log(1.0 / eps);
    r.envelope_constant =
        std::max(double(r.depth) / (lg * lg), double(r.width) * eps / (lg * lg));
    return r;
}

Field generic_forward(const GenericOperatorModel& gm, const SpaceTimeGrid& grid,
                      const std::vector<double>& u0) {
    if (gm.layers.empty()) throw std::invalid_argument("generic model: no layers");
    if (!gm.layers.front().initial || gm.layers.front().d_in != 1)
        throw std::invalid_argument("generic model: first layer must take the initial data");
    if (gm.layers.back().activated || gm.layers.back().d_out != 1)
        throw std::invalid_argument("generic model: output layer must be scalar and unactivated");
    if (u0.size() != std::size_t(grid.nx))
        throw std::invalid_argument("generic model: initial data size mismatch");

    const KernelApplicator app(gm.expansion, grid);
    const std::size_t An = gm.expansion.phi_time.size() * gm.expansion.phi_space.size();

    std::vector<Field> cur;
    bool first = true;
    for (const OperatorLayer& l : gm.layers) {
        if (l.initial != first)
            throw std::invalid_argument("generic model: only the first layer reads initial data");
        if (!first && int(cur.size()) != l.d_in)
            throw std::invalid_argument("generic model: channel width mismatch");
        const std::size_t din = std::size_t(l.d_in), dout = std::size_t(l.d_out);
        if (!l.W.empty() && l.W.size() != dout * din)
            throw std::invalid_argument("generic model: pointwise weight size mismatch");
        if (!l.K.empty() && l.K.size() != dout * din)
            throw std::invalid_argument("generic model: kernel block count mismatch");
        if (!l.bias.empty() && l.bias.size() != dout)
            throw std::invalid_argument("generic model: bias count mismatch");

        // pairings are shared across output channels; compute once per input
        std::vector<std::vector<double>> pair(din);
        std::vector<char> have(din, 0);
        auto pairing_of = [&](std::size_t ci) -> const std::vector<double>& {
            if (!have[ci]) {
                pair[ci] = l.initial ? app.psi_initial_pairings(u0) : app.psi_pairings(cur[ci]);
                have[ci] = 1;
            }
            return pair[ci];
        };

        std::vector<Field> next;
        next.reserve(dout);
        for (std::size_t o = 0; o < dout; ++o) {
            Field acc(grid);
            std::vector<double> phi_w;
            for (std::size_t ci = 0; ci < din; ++ci) {
                const double w = l.W.empty() ? 0.0 : l.W[o * din + ci];
                if (w != 0.0) {
                    if (l.initial) {
                        // pointwise action on the input extends it constant in time
                        for (int i = 0; i < grid.nt; ++i)
                            for (int j = 0; j < grid.nx; ++j) acc.at(i, j) += w * u0[std::size_t(j)];
                    } else {
                        for (std::size_t s = 0; s < acc.values.size(); ++s)
                            acc.values[s] += w * cur[ci].values[s];
                    }
                }
                if (!l.K.empty() && !l.K[o * din + ci].empty()) {
                    const std::vector<double> s = app.apply_coefficients(l.K[o * din + ci],
                                                                         pairing_of(ci));
                    if (phi_w.empty()) phi_w.assign(An, 0.0);
                    for (std::size_t n = 0; n < An; ++n) phi_w[n] += s[n];
                }
            }
            if (!l.bias.empty() && !l.bias[o].empty()) {
                if (l.bias[o].size() != An)
                    throw std::invalid_argument("generic model: bias weight size mismatch");
                if (phi_w.empty()) phi_w.assign(An, 0.0);
                for (std::size_t n = 0; n < An; ++n) phi_w[n] += l.bias[o][n];
            }
            if (!phi_w.empty()) {
                const Field rec = app.phi_reconstruct(phi_w);
                for (std::size_t s = 0; s < acc.values.size(); ++s) acc.values[s] += rec.values[s];
            }
            if (l.activated)
                for (double& v : acc.values) v = activation_eval(gm.act, v);
            next.push_back(std::move(acc));
        }
        cur = std::move(next);
        first = false;
    }
    return cur[0];
}

GenericOperatorModel to_generic(const NeuralOperatorModel& model) {
    const ScalarNetwork& net = model.fnet.net;
    if (net.layers.size() < 2)
        throw std::logic_error("to_generic: pointwise network needs a hidden layer");
    if (model.expansion.kind == BasisKind::spectral)
        throw std::invalid_argument("to_generic: spectral expansions have no separable tensor");
    const int L = int(net.layers.size()) - 1;
    const DenseLayer& ro = net.layers[std::size_t(L)];
    if (ro.out != 1 || ro.b.at(0) != 0.0)
        throw std::logic_error("to_generic: readout must be scalar with zero bias");
    const double c = model.carry_bound;
    if (!(c > 0.0)) throw std::invalid_argument("to_generic: carry bound must be positive");

    const KernelExpansion& e = model.expansion;
    const std::size_t An = e.phi_time.size() * e.phi_space.size();

    // identity through the activation: relu splits exactly, squared units use
    // shifted squares, exact for |x| <= carry_bound
    const bool squared = net.act == Activation::requ;
    const double ra0 = squared ? 1.0 / (4.0 * c) : 1.0;
    const double ra1 = -ra0;
    const double carry_shift = squared ? c : 0.0;

    GenericOperatorModel gm;
    gm.act = net.act;
    gm.expansion = e;

    auto const_bias = [&](double v) {
        std::vector<double> b;
        if (v != 0.0) {
            b.assign(An, 0.0);
            b[0] = v;  // axis lists start with the constant function
        }
        return b;
    };
    auto scaled_table = [&](double s) {
        std::vector<double> t(e.coeffs);
        for (double& v : t) v *= s;
        return t;
    };

    if (model.iterations == 1) {
        // readout of v1 = initial term (the pointwise net vanishes at 0)
        OperatorLayer out;
        out.d_in = 1;
        out.d_out = 1;
        out.activated = false;
        out.initial = true;
        out.K.resize(1);
        out.K[0] = e.coeffs;
        gm.layers.push_back(std::move(out));
        return gm;
    }

    const DenseLayer& h1 = net.layers[0];
    const int H0 = h1.out;

    // input map fused with the first materialized hidden layer (fnet at
    // v1 = the initial term); the two trailing channels carry v1 through
    // the activation
    {
        OperatorLayer l;
        l.d_in = 1;
        l.d_out = H0 + 2;
        l.activated = true;
        l.initial = true;
        l.K.resize(std::size_t(l.d_out));
        l.bias.resize(std::size_t(l.d_out));
        for (int u = 0; u < H0; ++u) {
            l.K[std::size_t(u)] = scaled_table(h1.W[std::size_t(u)]);
            l.bias[std::size_t(u)] = const_bias(h1.b[std::size_t(u)]);
        }
        l.K[std::size_t(H0)] = e.coeffs;
        l.K[std::size_t(H0) + 1] = scaled_table(-1.0);
        l.bias[std::size_t(H0)] = const_bias(carry_shift);
        l.bias[std::size_t(H0) + 1] = const_bias(carry_shift);
        gm.layers.push_back(std::move(l));
    }

    // hidden layer li of the pointwise stack, lifted by the carry pair
    auto middle_layer = [&](int li) {
        const DenseLayer& d = net.layers[std::size_t(li)];
        OperatorLayer l;
        l.d_in = d.in + 2;
        l.d_out = d.out + 2;
        l.activated = true;
        const std::size_t din = std::size_t(l.d_in);
        l.W.assign(std::size_t(l.d_out) * din, 0.0);
        l.bias.resize(std::size_t(l.d_out));
        for (int u = 0; u < d.out; ++u) {
            for (int v = 0; v < d.in; ++v)
                l.W[std::size_t(u) * din + std::size_t(v)] = d.W[std::size_t(u) * d.in + v];
            l.bias[std::size_t(u)] = const_bias(d.b[std::size_t(u)]);
        }
        const std::size_t c0 = din - 2, c1 = din - 1;
        l.W[std::size_t(d.out) * din + c0] = ra0;
        l.W[std::size_t(d.out) * din + c1] = ra1;
        l.W[(std::size_t(d.out) + 1) * din + c0] = -ra0;
        l.W[(std::size_t(d.out) + 1) * din + c1] = -ra1;
        l.bias[std::size_t(d.out)] = const_bias(carry_shift);
        l.bias[std::size_t(d.out) + 1] = const_bias(carry_shift);
        return l;
    };

    // block boundary: readout, kernel application, channel mix, and the next
    // application's first hidden layer fused into one activated layer
    auto boundary_layer = [&]() {
        OperatorLayer l;
        l.d_in = ro.in + 2;
        l.d_out = H0 + 2;
        l.activated = true;
        const std::size_t din = std::size_t(l.d_in);
        const std::size_t c0 = din - 2, c1 = din - 1;
        l.W.assign(std::size_t(l.d_out) * din, 0.0);
        l.K.resize(std::size_t(l.d_out) * din);
        l.bias.resize(std::size_t(l.d_out));
        for (int u = 0; u < H0; ++u) {
            const double w1 = h1.W[std::size_t(u)];
            l.W[std::size_t(u) * din + c0] = w1 * ra0;
            l.W[std::size_t(u) * din + c1] = w1 * ra1;
            for (int v = 0; v < ro.in; ++v)
                l.K[std::size_t(u) * din + std::size_t(v)] =
                    scaled_table(w1 * ro.W[std::size_t(v)]);
            l.bias[std::size_t(u)] = const_bias(h1.b[std::size_t(u)]);
        }
        l.W[std::size_t(H0) * din + c0] = ra0;
        l.W[std::size_t(H0) * din + c1] = ra1;
        l.W[(std::size_t(H0) + 1) * din + c0] = -ra0;
        l.W[(std::size_t(H0) + 1) * din + c1] = -ra1;
        l.bias[std::size_t(H0)] = const_bias(carry_shift);
        l.bias[std::size_t(H0) + 1] = const_bias(carry_shift);
        return l;
    };

    // The first application is constant-folded (fnet(0) = 0 makes v1 the
    // initial term), so J-1 kernel applications remain: J-2 boundary layers,
    // each fusing one kernel readout with the next stack's first hidden
    // layer, and the final kernel application inside the readout below.
    for (int j = 2; j < model.iterations; ++j) {
        for (int li = 1; li < L; ++li) gm.layers.push_back(middle_layer(li));
        gm.layers.push_back(boundary_layer());
    }
    for (int li = 1; li < L; ++li) gm.layers.push_back(middle_layer(li));
    {
        OperatorLayer l;
        l.d_in = ro.in + 2;
        l.d_out = 1;
        l.activated = false;
        const std::size_t din = std::size_t(l.d_in);
        l.W.assign(din, 0.0);
        l.W[din - 2] = ra0;
        l.W[din - 1] = ra1;
        l.K.resize(din);
        for (int v = 0; v < ro.in; ++v)
            l.K[std::size_t(v)] = scaled_table(ro.W[std::size_t(v)]);
        gm.layers.push_back(std::move(l));
    }
    return gm;
}

void export_model(const NeuralOperatorModel& model, std::ostream& out) {
    out << "model J " << model.iterations << " carry " << format_sig17(model.carry_bound)
        << " eps " << format_sig17(model.fnet.eps) << " domain " << format_sig17(model.fnet.domain)
        << " spacing " << format_sig17(model.fnet.spacing) << " bound "
        << format_sig17(model.fnet.error_bound) << " measured "
        << format_sig17(model.fnet.measured_error) << '\n';
    export_expansion(model.expansion, out);
    const ScalarNetwork& net = model.fnet.net;
    out << "network " << (net.act == Activation::relu ? "relu" : "requ") << ' '
        << net.layers.size() << '\n';
    for (const DenseLayer& d : net.layers) {
        out << "layer " << d.in << ' ' << d.out << '\n';
        for (int o = 0; o < d.out; ++o) {
            out << format_sig17(d.b[std::size_t(o)]);
            for (int i = 0; i < d.in; ++i)
                out << ' ' << format_sig17(d.W[std::size_t(o) * d.in + std::size_t(i)]);
            out << '\n';
        }
    }
    out << "end\n";
}

std::string export_model_string(const NeuralOperatorModel& model) {
    std::ostringstream os;
    export_model(model, os);
    return os.str();
}

NeuralOperatorModel import_model(std::istream& in) {
    expect_tag(in, "model");
    NeuralOperatorModel m;
    expect_tag(in, "J");
    std::string tok;
    if (!(in >> tok)) throw std::invalid_argument("model import: missing J");
    m.iterations = int(parse_number(tok, "J"));
    m.carry_bound = read_labeled(in, "carry");
    m.fnet.eps = read_labeled(in, "eps");
    m.fnet.domain = read_labeled(in, "domain");
    m.fnet.spacing = read_labeled(in, "spacing");
    m.fnet.error_bound = read_labeled(in, "bound");
    m.fnet.measured_error = read_labeled(in, "measured");
    if (m.iterations < 1) throw std::invalid_argument("model import: iterations must be >= 1");
    if (!(m.carry_bound > 0.0)) throw std::invalid_argument("model import: carry bound must be positive");

    m.expansion = import_expansion(in);

    expect_tag(in, "network");
    std::string act_s;
    std::size_t n_layers = 0;
    if (!(in >> act_s >> n_layers)) throw std::invalid_argument("model import: bad network header");
    if (act_s == "relu")
        m.fnet.net.act = Activation::relu;
    else if (act_s == "requ")
        m.fnet.net.act = Activation::requ;
    else
        throw std::invalid_argument("model import: unknown activation: " + act_s);
    if (n_layers < 2) throw std::invalid_argument("model import: network needs a hidden layer");

    for (std::size_t li = 0; li < n_layers; ++li) {
        expect_tag(in, "layer");
        DenseLayer d;
        if (!(in >> d.in >> d.out) || d.in < 1 || d.out < 1)
            throw std::invalid_argument("model import: bad layer shape");
        d.b.resize(std::size_t(d.out));
        d.W.resize(std::size_t(d.out) * std::size_t(d.in));
        for (int o = 0; o < d.out; ++o) {
            if (!(in >> tok)) throw std::invalid_argument("model import: truncated layer");
            d.b[std::size_t(o)] = parse_number(tok, "bias");
            for (int i = 0; i < d.in; ++i) {
                if (!(in >> tok)) throw std::invalid_argument("model import: truncated layer");
                d.W[std::size_t(o) * d.in + std::size_t(i)] = parse_number(tok, "weight");
            }
        }
        m.fnet.net.layers.push_back(std::move(d));
    }
    expect_tag(in, "end");
    return m;
}

NeuralOperatorModel import_model_string(const std::string& text) {
    std::istringstream is(text);
    return import_model(is);
}

}  // namespace pno
