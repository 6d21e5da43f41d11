#include "pno/runners.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "pno/expansion.hpp"
#include "pno/heat_kernel.hpp"
#include "pno/nonlinearity.hpp"
#include "pno/operator_model.hpp"
#include "pno/picard.hpp"

namespace pno {
namespace {

const double kPi = 3.14159265358979323846;

std::string now_utc() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[40];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string sanitize(std::string s) {
    for (char& ch : s)
        if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
    return s;
}

std::string cell(double v) { return format_sig17(v); }
std::string cell(int v) { return std::to_string(v); }
std::string cell(long v) { return std::to_string(v); }
std::string cell(std::size_t v) { return std::to_string(v); }
std::string cell(bool v) { return v ? "true" : "false"; }

void check(RunRecord& rec, bool ok, const std::string& what) {
    if (!ok) {
        rec.passed = false;
        if (rec.failure.empty()) rec.failure = what;
    }
}

RunRecord make_record(const char* experiment, const ExperimentConfig& c,
                      std::vector<std::string> columns) {
    RunRecord rec;
    rec.experiment = experiment;
    rec.timestamp = now_utc();
    rec.config_echo = serialize_config(c);
    rec.columns = std::move(columns);
    return rec;
}

std::vector<std::vector<double>> sample_family(const ExperimentConfig& c) {
    std::vector<std::vector<double>> fam;
    fam.reserve(std::size_t(c.u0_count));
    for (int i = 0; i < c.u0_count; ++i) {
        const InitialDataKind kind = c.u0_kinds[std::size_t(i) % c.u0_kinds.size()];
        const int k = 1 + i / int(c.u0_kinds.size());
        fam.push_back(sample_initial_data(c.R, c.nx, c.u0_seed + std::uint64_t(i), kind, k));
    }
    return fam;
}

double inv_or_zero(double q) { return std::isinf(q) ? 0.0 : 1.0 / q; }

/// Contraction rate and budget weight actually used by a run. Certified
/// configs take the derived rate; practical configs fall back to the target
/// rate when the worst-case formula is useless at the requested horizon
/// (delta >= 1), which is the usual case for horizons worth plotting.
struct BudgetConstants {
    double delta = 0.5;
    double c3 = 0.0;
    bool from_formula = false;
};

BudgetConstants budget_constants(const ExperimentConfig& c) {
    const ProblemSetup s = c.setup();
    const ContractionConstants cc = derive_constants(s);
    BudgetConstants b;
    if (cc.exponents_ok && cc.delta > 0.0 && cc.delta < 1.0) {
        b.delta = cc.delta;
        b.from_formula = true;
    } else {
        b.delta = c.delta_target;
    }
    const double pow_d = std::pow(s.domain_measure, inv_or_zero(s.norm.s));
    const double c_f = s.f.growth_constant();
    const double c1 = pow_d * s.R + c_f * std::pow(s.M, s.f.p);
    const double c2 = 2.0 * s.op.c_L * pow_d * std::pow(s.T, 1.0 + inv_or_zero(s.norm.r));
    b.c3 = s.M + (c1 + c2) / (1.0 - b.delta);
    return b;
}

/// u0 on the doubled interior grid (2 nx + 1 nodes); odd nodes coincide with
/// the coarse ones, even nodes interpolate (boundary values are zero).
std::vector<double> refine_u0(const std::vector<double>& u0) {
    const std::size_t nx = u0.size();
    std::vector<double> fine(2 * nx + 1);
    for (std::size_t k = 0; k < fine.size(); ++k) {
        if (k % 2 == 1) {
            fine[k] = u0[(k - 1) / 2];
        } else {
            const double left = k == 0 ? 0.0 : u0[k / 2 - 1];
            const double right = k / 2 < nx ? u0[k / 2] : 0.0;
            fine[k] = 0.5 * (left + right);
        }
    }
    return fine;
}

/// Restriction of a field on {2nt-1, 2nx+1} to the embedded coarse grid.
Field restrict_field(const Field& fine, const SpaceTimeGrid& coarse) {
    if (fine.grid.nt != 2 * coarse.nt - 1 || fine.grid.nx != 2 * coarse.nx + 1 ||
        fine.grid.T != coarse.T)
        throw std::logic_error("restrict_field: grids do not nest");
    Field out(coarse);
    for (int i = 0; i < coarse.nt; ++i)
        for (int j = 0; j < coarse.nx; ++j) out.at(i, j) = fine.at(2 * i, 2 * j + 1);
    return out;
}

struct ExactRun {
    Field solution;
    double tail = 0.0;  ///< last increment; bounds the distance to the limit
    int iterations = 0; ///< steps actually taken
};

/// Picard iteration in the exact eigen-series mode until the increment hits
/// the roundoff floor (or max_iter).
ExactRun solve_exact(const ProblemSetup& s, const SpaceTimeGrid& grid,
                     const std::vector<double>& u0, int max_iter) {
    const PicardModes exact{};
    Field u(grid);
    double inc = kInf;
    int l = 0;
    while (l < max_iter) {
        Field nxt = phi_step(s, grid, u0, u, exact);
        inc = mixed_norm(field_difference(nxt, u), s.norm);
        u = std::move(nxt);
        ++l;
        if (inc <= 1e-13 * std::max(1.0, sup_norm(u))) break;
    }
    return ExactRun{std::move(u), inc, l};
}

/// Refinement budget for the exact solver: solve on the doubled grid and
/// charge twice the restricted difference, plus the iteration tails.
double exact_quadrature_budget(const ProblemSetup& s, const SpaceTimeGrid& grid,
                               const std::vector<double>& u0, int max_iter) {
    const SpaceTimeGrid fine{2 * grid.nt - 1, 2 * grid.nx + 1, grid.T};
    const ExactRun coarse = solve_exact(s, grid, u0, max_iter);
    const ExactRun refined = solve_exact(s, fine, refine_u0(u0), max_iter);
    const Field diff = field_difference(restrict_field(refined.solution, grid), coarse.solution);
    return 2.0 * mixed_norm(diff, s.norm) + coarse.tail + refined.tail;
}

int int_log2(int v) {
    int l = 0;
    while ((1 << (l + 1)) <= v) ++l;
    return l;
}

std::vector<std::size_t> rank_ladder(const ExperimentConfig& c, BasisKind kind) {
    if (!c.n_list.empty()) return c.n_list;
    std::vector<std::size_t> L;
    if (kind == BasisKind::spectral) {
        for (std::size_t k = 1; k <= 16; k *= 2) L.push_back(k);
        return L;
    }
    // 16^j ladder saturates the resolvable per-axis rank at the top
    const int top = int_log2(c.grid4) + (kind == BasisKind::fourier ? 1 : 0);
    std::size_t n = 1;
    for (int j = 0; j <= top; ++j) {
        L.push_back(n);
        n *= 16;
    }
    return L;
}

struct BuiltExpansion {
    KernelExpansion exp;
    KernelTruncation tr;
};

/// Builds the ladder lazily in rank order, deduplicating saturated requests.
class ExpansionLadder {
  public:
    ExpansionLadder(const ExperimentConfig& c, BasisKind kind)
        : c_(c), requests_(rank_ladder(c, kind)), kind_(kind) {}

    /// First ladder entry with both truncation errors <= eps.
    const BuiltExpansion& select(double eps) {
        for (std::size_t i = 0;; ++i) {
            const BuiltExpansion* b = at(i);
            if (b == nullptr) break;
            if (b->tr.c_g <= eps && b->tr.c_g_init <= eps) return *built_[i];
        }
        throw std::runtime_error("rank selection: no rank on the ladder meets eps = " +
                                 format_sig17(eps));
    }

    const BuiltExpansion* at(std::size_t i) {
        while (built_.size() <= i && next_ < requests_.size()) {
            KernelExpansion e =
                build_expansion(c_.op, kind_, requests_[next_], c_.T, c_.grid4);
            ++next_;
            if (!built_.empty() && built_.back()->exp.rank() == e.rank()) continue;
            auto b = std::make_unique<BuiltExpansion>();
            b->tr = truncation_errors(e, c_.op, c_.norm, c_.grid4);
            b->exp = std::move(e);
            built_.push_back(std::move(b));
        }
        return i < built_.size() ? built_[i].get() : nullptr;
    }

  private:
    const ExperimentConfig& c_;
    std::vector<std::size_t> requests_;
    BasisKind kind_;
    std::size_t next_ = 0;
    std::vector<std::unique_ptr<BuiltExpansion>> built_;
};

/// Closed-form initial-column truncation for the spectral basis at r=s=2:
/// spatial norms collapse by eigenfunction orthogonality, leaving
/// sum_{k>K} e^{-2 lambda_k t} sampled on the same clamped lattice times.
double spectral_tail_oracle(const OperatorSpec& op, double T, int grid4, int K) {
    const int g = grid4;
    const double wt = T / double(g);
    double acc = 0.0;
    for (int i = 1; i < g; ++i) {
        const double t = double(i) * T / double(g);  // lattice midpoint minus tau0
        double tail = 0.0;
        for (int k = K + 1; k <= K + 600; ++k) {
            const double term = std::exp(-2.0 * dirichlet_eigenvalue(k) * t);
            tail += term;
            if (term < 1e-300) break;
        }
        acc += wt * tail;
    }
    return std::sqrt(acc);
}

}  // namespace

NeuralOperatorModel build_configured_model(const ExperimentConfig& c, double eps) {
    const BudgetConstants bc = budget_constants(c);
    ExpansionLadder ladder(c, c.basis);
    const Fnet fnet = build_fnet(c.f, eps, c.M_prime);
    const BuiltExpansion& sel = ladder.select(eps);
    return build_weight_tied(sel.exp, fnet, iteration_count(eps, bc.delta), c.M_prime);
}

void emit_csv(const RunRecord& rec, std::ostream& out) {
    out << "# experiment=" << sanitize(rec.experiment) << '\n';
    out << "# timestamp=" << rec.timestamp << '\n';
    out << "# passed=" << (rec.passed ? "true" : "false") << '\n';
    if (!rec.failure.empty()) out << "# failure=" << sanitize(rec.failure) << '\n';
    std::istringstream cfg(rec.config_echo);
    std::string line;
    while (std::getline(cfg, line)) out << "# config " << line << '\n';
    for (std::size_t i = 0; i < rec.columns.size(); ++i)
        out << (i ? "," : "") << sanitize(rec.columns[i]);
    out << '\n';
    for (const std::vector<std::string>& row : rec.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << sanitize(row[i]);
        out << '\n';
    }
}

void emit_csv_file(const RunRecord& rec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_csv: cannot open " + path);
    emit_csv(rec, out);
}

Field oracle_solve(const std::vector<double>& u0, const ExperimentConfig& c, double dt_factor) {
    if (!(dt_factor > 0.0) || !std::isfinite(dt_factor))
        throw std::invalid_argument("oracle_solve: dt_factor must be positive");
    const SpaceTimeGrid grid = c.grid();
    if (u0.size() != std::size_t(grid.nx))
        throw std::invalid_argument("oracle_solve: initial data size mismatch");

    // doubled interior grid keeps the experiment nodes embedded
    const int nx = 2 * grid.nx + 1;
    const double dx = 1.0 / double(nx + 1);
    const int steps = std::max(1, int(std::ceil(grid.T / (dt_factor * dx))));
    const double dt = grid.T / double(steps);
    const double r = dt / (dx * dx);

    std::vector<std::vector<double>> hist;
    hist.reserve(std::size_t(steps) + 1);
    hist.push_back(refine_u0(u0));

    // constant tridiagonal (1 + r) on the diagonal, -r/2 off; precompute the
    // forward-elimination multipliers once
    const double diag = 1.0 + r, off = -0.5 * r;
    std::vector<double> cp(std::size_t(nx), 0.0);
    cp[0] = off / diag;
    for (int j = 1; j < nx; ++j) cp[std::size_t(j)] = off / (diag - off * cp[std::size_t(j - 1)]);

    std::vector<double> rhs(std::size_t(nx), 0.0), dp(std::size_t(nx), 0.0), u(std::size_t(nx), 0.0);
    for (int n = 0; n < steps; ++n) {
        const std::vector<double>& prev = hist.back();
        for (int j = 0; j < nx; ++j) {
            const double left = j > 0 ? prev[std::size_t(j - 1)] : 0.0;
            const double right = j + 1 < nx ? prev[std::size_t(j + 1)] : 0.0;
            const double lap = left - 2.0 * prev[std::size_t(j)] + right;
            rhs[std::size_t(j)] =
                prev[std::size_t(j)] + 0.5 * r * lap + dt * f_eval(c.f, prev[std::size_t(j)]);
        }
        dp[0] = rhs[0] / diag;
        for (int j = 1; j < nx; ++j)
            dp[std::size_t(j)] =
                (rhs[std::size_t(j)] - off * dp[std::size_t(j - 1)]) / (diag - off * cp[std::size_t(j - 1)]);
        u[std::size_t(nx - 1)] = dp[std::size_t(nx - 1)];
        for (int j = nx - 2; j >= 0; --j)
            u[std::size_t(j)] = dp[std::size_t(j)] - cp[std::size_t(j)] * u[std::size_t(j + 1)];
        for (double v : u)
            if (!(std::abs(v) <= 1e6))
                throw std::runtime_error(
                    "oracle_solve: instability (|u| exceeded 1e6); reduce dt_factor");
        hist.push_back(u);
    }

    // sample back: linear interpolation in time, shared nodes in space
    Field out(grid);
    for (int i = 0; i < grid.nt; ++i) {
        const double pos = grid.time(i) / dt;
        int n0 = int(std::floor(pos));
        if (n0 >= steps) n0 = steps - 1;
        const double frac = pos - double(n0);
        const std::vector<double>& a = hist[std::size_t(n0)];
        const std::vector<double>& b = hist[std::size_t(n0) + 1];
        for (int j = 0; j < grid.nx; ++j) {
            const std::size_t k = std::size_t(2 * j + 1);
            out.at(i, j) = (1.0 - frac) * a[k] + frac * b[k];
        }
    }
    return out;
}

RunRecord run_sanity(const ExperimentConfig& c) {
    RunRecord rec = make_record(
        "sanity", c, {"claim", "nt", "nx", "T", "rel_error", "tolerance", "pass"});

    ProblemSetup s = c.setup();
    s.f = NonlinearitySpec{};
    s.f.scale = 0.0;  // linear problem
    s.f.c_F = 0.0;

    const SpaceTimeGrid grid = c.grid();
    const std::vector<double> u0 = sample_initial_data(1.0, c.nx, 0, InitialDataKind::eigenmode, 1);

    const PicardResult res = picard_solve(s, grid, u0, 2, 0.0, PicardModes{});

    Field exact(grid);
    const double lam = dirichlet_eigenvalue(1);
    for (int i = 0; i < grid.nt; ++i) {
        const double decay = std::exp(-lam * grid.time(i));
        for (int j = 0; j < grid.nx; ++j) exact.at(i, j) = decay * std::sin(kPi * grid.x(j));
    }
    const double rel = mixed_norm(field_difference(res.solution, exact), c.norm) /
                       mixed_norm(exact, c.norm);
    const double tol = 1e-3;
    const bool ok = rel <= tol;
    check(rec, ok, "linear eigenmode decay off by " + cell(rel));
    rec.rows.push_back({"linear evolution matches the heat eigenmode decay", cell(c.nt),
                        cell(c.nx), cell(c.T), cell(rel), cell(tol), cell(ok)});
    return rec;
}

RunRecord run_picard_convergence(const ExperimentConfig& c) {
    if (!c.certified)
        throw std::invalid_argument("converge: needs mode=certified (the geometric bound "
                                    "is only meaningful with a certified rate)");
    RunRecord rec = make_record("converge", c,
                                {"claim", "u0", "iter", "increment", "ratio", "to_final",
                                 "apriori", "floor", "pass"});
    const ProblemSetup s = c.setup();
    const ContractionConstants cc = derive_constants(s);
    const SpaceTimeGrid grid = c.grid();
    const std::vector<std::vector<double>> fam = sample_family(c);

    for (std::size_t fi = 0; fi < fam.size(); ++fi) {
        const PicardResult res =
            picard_solve(s, grid, fam[fi], c.iterations, cc.delta, PicardModes{});
        const double floor = 1e-13 * std::max(1.0, sup_norm(res.solution));
        for (std::size_t l = 0; l < res.iterates.size(); ++l) {
            const PicardIterate& it = res.iterates[l];
            const double prev_inc = l == 0 ? kInf : res.iterates[l - 1].increment;
            const bool above = it.increment > floor && prev_inc > floor && l > 0;
            const double ratio = l == 0 ? 0.0 : (prev_inc > 0.0 ? it.increment / prev_inc : 0.0);
            bool ok = true;
            if (above) ok = ratio <= 0.55;
            const bool bound_ok = it.to_final <= it.apriori + floor;
            check(rec, ok, "iterate ratio " + cell(ratio) + " above 0.55 at iter " +
                               cell(int(l) + 1));
            check(rec, bound_ok, "a-priori bound violated at iter " + cell(int(l) + 1));
            const char* claim = above ? "increment ratio stays within the contraction target"
                                : l == 0 ? "first increment seeds the geometric bound"
                                         : "increment below the quadrature floor";
            rec.rows.push_back({claim,
                                cell(fi), cell(it.index), cell(it.increment), cell(ratio),
                                cell(it.to_final), cell(it.apriori), cell(floor),
                                cell(ok && bound_ok)});
        }
    }

    const double probe =
        measure_contraction(s, grid, fam[0], 6, c.u0_seed, PicardModes{});
    const bool probe_ok = probe <= 0.55;
    check(rec, probe_ok, "two-sided contraction probe " + cell(probe) + " above 0.55");
    rec.rows.push_back({"seeded two-sided contraction probe", cell(std::size_t(0)), cell(0),
                        cell(0.0), cell(probe), cell(0.0), cell(cc.delta), cell(0.0),
                        cell(probe_ok)});
    return rec;
}

RunRecord run_rank_study(const ExperimentConfig& c) {
    RunRecord rec = make_record("rank", c,
                                {"claim", "basis", "requested", "rank", "c_g", "c_g_init",
                                 "sliver", "analytic_tail", "tail_ratio", "decay_slope",
                                 "pass"});

    for (BasisKind kind : {BasisKind::fourier, BasisKind::haar}) {
        ExpansionLadder ladder(c, kind);
        double prev_cg = kInf, prev_init = kInf;
        std::vector<double> log_rank, log_cg;
        const BuiltExpansion* last = nullptr;
        for (std::size_t i = 0;; ++i) {
            const BuiltExpansion* b = ladder.at(i);
            if (b == nullptr) break;
            const bool mono =
                b->tr.c_g <= prev_cg + 1e-12 && b->tr.c_g_init <= prev_init + 1e-12;
            check(rec, mono, std::string(to_string(kind)) +
                                 " truncation not monotone at rank " + cell(b->tr.rank));
            rec.rows.push_back({"kernel truncation error is monotone in rank",
                                to_string(kind), cell(i), cell(b->tr.rank), cell(b->tr.c_g),
                                cell(b->tr.c_g_init), cell(b->tr.sliver_bound), "", "",
                                "", cell(mono)});
            if (b->tr.c_g > 0.0 && b->tr.rank > 1) {
                log_rank.push_back(std::log(double(b->tr.rank)));
                log_cg.push_back(std::log(b->tr.c_g));
            }
            prev_cg = b->tr.c_g;
            prev_init = b->tr.c_g_init;
            last = b;
        }
        // full-rank row sits at the declared quadrature floor
        if (last != nullptr) {
            const bool floor_ok = last->tr.c_g <= 1e-3 && last->tr.c_g_init <= 1e-3;
            check(rec, floor_ok, std::string(to_string(kind)) + " full-rank floor above 1e-3");
            rec.rows.push_back({"full-rank truncation sits at the quadrature floor",
                                to_string(kind), "", cell(last->tr.rank), cell(last->tr.c_g),
                                cell(last->tr.c_g_init), cell(last->tr.sliver_bound), "", "",
                                "", cell(floor_ok)});
        }
        // least-squares decay exponent, reported only
        if (log_rank.size() >= 2) {
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (std::size_t i = 0; i < log_rank.size(); ++i) {
                sx += log_rank[i];
                sy += log_cg[i];
                sxx += log_rank[i] * log_rank[i];
                sxy += log_rank[i] * log_cg[i];
            }
            const double n = double(log_rank.size());
            const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
            rec.rows.push_back({"empirical truncation decay exponent", to_string(kind), "",
                                "", "", "", "", "", "", cell(slope), cell(true)});
        }
    }

    // spectral reference against the closed-form eigenvalue tail (r=s=2 only)
    const bool l2 = c.norm.r == 2.0 && c.norm.s == 2.0;
    for (std::size_t K : rank_ladder(c, BasisKind::spectral)) {
        const KernelExpansion e = build_expansion(c.op, BasisKind::spectral, K, c.T, c.grid4);
        const KernelTruncation tr = truncation_errors(e, c.op, c.norm, c.grid4);
        std::string tail_s, ratio_s;
        bool ok = true;
        if (l2) {
            const double tail = spectral_tail_oracle(c.op, c.T, c.grid4, int(e.rank()));
            const double ratio = tail > 0.0 ? tr.c_g_init / tail : 0.0;
            ok = ratio >= 0.5 && ratio <= 2.0;
            check(rec, ok, "spectral tail ratio " + cell(ratio) + " outside [0.5, 2] at K = " +
                               cell(e.rank()));
            tail_s = cell(tail);
            ratio_s = cell(ratio);
        }
        rec.rows.push_back({"initial-slice truncation tracks the analytic spectral tail",
                            "spectral", cell(K), cell(tr.rank), cell(tr.c_g),
                            cell(tr.c_g_init), cell(tr.sliver_bound), tail_s, ratio_s, "",
                            cell(ok)});
    }
    return rec;
}

RunRecord run_end_to_end(const ExperimentConfig& c) {
    RunRecord rec = make_record("e2e", c,
                                {"claim", "eps", "u0", "rank", "c_g", "c_g_init",
                                 "eps_kernel", "J", "depth", "width", "envelope_c", "gap",
                                 "bound", "equivalence", "qbudget", "certified", "pass"});
    const ProblemSetup s = c.setup();
    const BudgetConstants bc = budget_constants(c);
    const SpaceTimeGrid grid = c.grid();
    const std::vector<std::vector<double>> fam = sample_family(c);
    ExpansionLadder ladder(c, c.basis);

    // declared discretization budget for the reference solver (one refinement
    // study; the family shares the grid, so the budget is shared too)
    const double qbudget = exact_quadrature_budget(s, grid, fam[0], 30);
    rec.rows.push_back({"declared reference-solver quadrature budget", "", "", "", "", "",
                        "", "", "", "", "", "", "", "", cell(qbudget), cell(c.certified),
                        cell(true)});

    // reference solutions and the finite-difference cross-check are
    // eps-independent
    std::vector<ExactRun> refs;
    refs.reserve(fam.size());
    for (const std::vector<double>& u0 : fam) refs.push_back(solve_exact(s, grid, u0, 30));

    for (std::size_t fi = 0; fi < fam.size(); ++fi) {
        const Field cn = oracle_solve(fam[fi], c, c.dt_factor);
        const Field cn_fine = oracle_solve(fam[fi], c, 0.5 * c.dt_factor);
        const double cn_budget =
            2.0 * mixed_norm(field_difference(cn, cn_fine), c.norm) + 1e-10;
        const double cross = mixed_norm(field_difference(refs[fi].solution, cn), c.norm);
        const double combined = cn_budget + qbudget + refs[fi].tail;
        const bool ok = cross <= combined;
        check(rec, ok, "cross-oracle gap " + cell(cross) + " above the declared budget " +
                           cell(combined) + " at u0 " + cell(fi));
        rec.rows.push_back({"exact solver agrees with the finite-difference oracle", "",
                            cell(fi), "", "", "", "", "", "", "", "", cell(cross),
                            cell(combined), "", cell(cn_budget), cell(c.certified),
                            cell(ok)});
    }

    // the coefficient lattice interpolates the surrogate, so its own
    // truncation numbers miss the off-lattice evaluation error the experiment
    // grid sees; declare that term from a doubled lattice whose midpoints
    // avoid every coefficient cell center
    std::map<std::size_t, double> kernel_eval;

    double envelope_used = 0.0;
    std::vector<std::pair<double, double>> eps_gap;
    for (double eps : c.eps_list) {
        const Fnet fnet = build_fnet(c.f, eps, c.M_prime);
        const BuiltExpansion& sel = ladder.select(eps);
        const int J = iteration_count(eps, bc.delta);
        const NeuralOperatorModel model =
            build_weight_tied(sel.exp, fnet, J, c.M_prime);
        const KernelApplicator app(model.expansion, grid);
        const ComplexityReport comp = complexity(model, eps);
        envelope_used = std::max(envelope_used, comp.envelope_constant);

        if (kernel_eval.find(sel.tr.rank) == kernel_eval.end()) {
            const KernelTruncation fine =
                truncation_errors(sel.exp, c.op, c.norm, 2 * c.grid4);
            kernel_eval[sel.tr.rank] = std::max(fine.c_g, fine.c_g_init);
        }
        const double eps_k = kernel_eval[sel.tr.rank];

        const bool j_ok = J == iteration_count(eps, bc.delta);
        double gap_max = 0.0, equiv_max = 0.0;
        for (std::size_t fi = 0; fi < fam.size(); ++fi) {
            const Field gamma = forward(model, app, fam[fi]);
            const double gap =
                mixed_norm(field_difference(refs[fi].solution, gamma), c.norm);
            const double equiv = verify_equivalence(model, s, grid, fam[fi]);
            gap_max = std::max(gap_max, gap);
            equiv_max = std::max(equiv_max, equiv);
            const bool equiv_ok = equiv <= 1e-10;
            check(rec, equiv_ok, "operator/iteration equivalence gap " + cell(equiv) +
                                     " above 1e-10 at eps " + cell(eps));
            rec.rows.push_back({"operator output equals the iterated fixed-point map",
                                cell(eps), cell(fi), cell(sel.tr.rank), cell(sel.tr.c_g),
                                cell(sel.tr.c_g_init), cell(eps_k), cell(J), "", "", "",
                                cell(gap), "", cell(equiv), "", cell(c.certified),
                                cell(equiv_ok)});
        }
        const double bound = bc.c3 * (eps + eps_k) + qbudget;
        const bool gap_ok = gap_max <= bound;
        check(rec, gap_ok, "end-to-end gap " + cell(gap_max) + " above the budget " +
                               cell(bound) + " at eps " + cell(eps));
        check(rec, j_ok, "iteration count mismatch");
        rec.rows.push_back({"end-to-end gap within the weighted budget", cell(eps), "",
                            cell(sel.tr.rank), cell(sel.tr.c_g), cell(sel.tr.c_g_init),
                            cell(eps_k), cell(J), cell(comp.depth), cell(comp.width),
                            cell(comp.envelope_constant), cell(gap_max), cell(bound), "",
                            cell(qbudget), cell(c.certified), cell(gap_ok && j_ok)});
        eps_gap.emplace_back(eps, gap_max);
    }

    // gaps shrink with eps (strict, checked on the sorted eps list)
    std::sort(eps_gap.begin(), eps_gap.end());
    for (std::size_t i = 1; i < eps_gap.size(); ++i) {
        const bool ok = eps_gap[i - 1].second < eps_gap[i].second;
        check(rec, ok, "gap at eps " + cell(eps_gap[i - 1].first) +
                           " not smaller than at eps " + cell(eps_gap[i].first));
        rec.rows.push_back({"approximation gap shrinks with eps", cell(eps_gap[i - 1].first),
                            "", "", "", "", "", "", "", "", "", cell(eps_gap[i - 1].second),
                            cell(eps_gap[i].second), "", "", cell(c.certified), cell(ok)});
    }
    rec.rows.push_back({"depth/width fit the log-squared envelopes", "", "", "", "", "", "",
                        "", "", "", cell(envelope_used), "", "", "", "", cell(c.certified),
                        cell(true)});
    return rec;
}

RunRecord run_longtime(const ExperimentConfig& c) {
    RunRecord rec = make_record("longtime", c,
                                {"claim", "window", "window_gap", "endpoint_gap",
                                 "ball_sup", "cum_gap", "bound", "pass"});
    const ProblemSetup s = c.setup();
    const BudgetConstants bc = budget_constants(c);
    const SpaceTimeGrid grid = c.grid();
    const double eps = c.eps_list.front();

    ExpansionLadder ladder(c, c.basis);
    const Fnet fnet = build_fnet(c.f, eps, c.M_prime);
    const BuiltExpansion& sel = ladder.select(eps);
    const int J = iteration_count(eps, bc.delta);
    const NeuralOperatorModel model = build_weight_tied(sel.exp, fnet, J, c.M_prime);
    const KernelApplicator app(model.expansion, grid);

    // off-lattice kernel evaluation term, same convention as the end-to-end
    // budget
    const KernelTruncation fine = truncation_errors(sel.exp, c.op, c.norm, 2 * c.grid4);
    const double eps_k = std::max(fine.c_g, fine.c_g_init);

    const std::vector<std::vector<double>> fam = sample_family(c);
    const double qbudget = exact_quadrature_budget(s, grid, fam[0], 30);

    const double inv_r = inv_or_zero(c.norm.r);
    const double inv_s = inv_or_zero(c.norm.s);
    const double c_dep = c.op.c_L * std::pow(c.domain_measure, inv_s) *
                         std::pow(c.T, inv_r) / (1.0 - bc.delta);

    std::vector<double> a = fam[0], ahat = fam[0];
    double cum_gap = 0.0, eps_tilde = 0.0;
    int completed = 0;
    for (int w = 1; w <= c.kappa; ++w) {
        const ExactRun ex = solve_exact(s, grid, a, 30);
        const Field net = forward(model, app, ahat);
        const double wgap = mixed_norm(field_difference(ex.solution, net), c.norm);
        double egap = 0.0;
        std::vector<double> a_next(std::size_t(c.nx)), ahat_next(std::size_t(c.nx));
        for (int j = 0; j < c.nx; ++j) {
            a_next[std::size_t(j)] = ex.solution.at(c.nt - 1, j);
            ahat_next[std::size_t(j)] = net.at(c.nt - 1, j);
            egap = std::max(egap,
                            std::abs(a_next[std::size_t(j)] - ahat_next[std::size_t(j)]));
        }
        cum_gap += wgap;
        eps_tilde += egap;
        ++completed;
        const double ball = std::max(sup_norm(a_next), sup_norm(ahat_next));
        rec.rows.push_back({"window gap feeds the stitched budget", cell(w), cell(wgap),
                            cell(egap), cell(ball), cell(cum_gap), "", cell(true)});
        if (ball > c.R && w < c.kappa) {
            rec.rows.push_back({"end state left the data ball; maximal window count reached",
                                cell(w), "", "", cell(ball), "", "", cell(true)});
            break;
        }
        a = std::move(a_next);
        ahat = std::move(ahat_next);
    }

    const double big_c = std::max(c_dep, double(completed) * bc.c3);
    const double bound = big_c * (eps + eps_k + eps_tilde) + double(completed) * qbudget;
    const bool ok = cum_gap <= bound;
    check(rec, ok, "stitched gap " + cell(cum_gap) + " above the compounded bound " +
                       cell(bound));
    rec.rows.push_back({"stitched long-time gap within the compounded budget",
                        cell(completed), cell(cum_gap), cell(eps_tilde), cell(big_c),
                        cell(cum_gap), cell(bound), cell(ok)});
    return rec;
}

RunRecord run_positivity(const ExperimentConfig& c) {
    if (c.basis != BasisKind::haar)
        throw std::invalid_argument("positivity: needs basis=haar (nonnegative kernel "
                                    "surrogate requires the full-level piecewise basis)");
    // sign gate: F must vanish at 0 and preserve sign
    for (int i = 0; i <= 1000; ++i) {
        const double z = -c.M_prime + 2.0 * c.M_prime * double(i) / 1000.0;
        const double v = f_eval(c.f, z);
        if ((z >= 0.0 && v < -1e-15) || (z <= 0.0 && v > 1e-15))
            throw std::invalid_argument(
                "positivity: nonlinearity must preserve sign on [-M', M']");
    }

    RunRecord rec = make_record("positivity", c,
                                {"claim", "u0", "min_value", "mirror_max", "kernel_min",
                                 "pass"});
    const BudgetConstants bc = budget_constants(c);
    const SpaceTimeGrid grid = c.grid();
    const double eps = c.eps_list.front();

    // full-level expansion; the builder clamps the request to the resolvable top
    const KernelExpansion exp =
        build_expansion(c.op, BasisKind::haar, std::size_t(1) << 62, c.T, c.grid4);
    double kernel_min = kInf;
    for (double v : expansion_lattice(exp, c.op, c.grid4)) kernel_min = std::min(kernel_min, v);
    for (double v : expansion_initial_lattice(exp, c.op, c.grid4))
        kernel_min = std::min(kernel_min, v);
    if (kernel_min < -1e-12)
        throw std::invalid_argument("positivity: kernel surrogate dips to " +
                                    format_sig17(kernel_min) +
                                    "; configuration does not meet the gate");

    const Fnet fnet = build_requ_exact(c.f, c.M_prime);
    const int J = iteration_count(eps, bc.delta);
    const NeuralOperatorModel model = build_weight_tied(exp, fnet, J, c.M_prime);
    const KernelApplicator app(model.expansion, grid);

    const std::vector<std::vector<double>> fam = sample_family(c);
    for (std::size_t fi = 0; fi < fam.size(); ++fi) {
        std::vector<double> u0 = fam[fi];
        for (double& v : u0) v = std::abs(v);
        const Field out = forward(model, app, u0);
        double mn = kInf;
        for (double v : out.values) mn = std::min(mn, v);

        std::vector<double> neg(u0.size());
        for (std::size_t j = 0; j < u0.size(); ++j) neg[j] = -u0[j];
        const Field mirrored = forward(model, app, neg);
        double mx = -kInf;
        for (double v : mirrored.values) mx = std::max(mx, v);

        const bool ok = mn >= -1e-12 && mx <= 1e-12;
        check(rec, ok, "sign preservation violated at u0 " + cell(fi) + " (min " + cell(mn) +
                           ", mirrored max " + cell(mx) + ")");
        rec.rows.push_back({"nonnegative data yields nonnegative output", cell(fi), cell(mn),
                            cell(mx), cell(kernel_min), cell(ok)});
    }
    return rec;
}

}  // namespace pno
