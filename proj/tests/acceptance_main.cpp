// Acceptance gate for the constructive solver-network pipeline. Runs the
// desk-scale studies with pinned configurations and tolerances, prints one
// [PASS]/[FAIL] line per criterion, and exits nonzero if anything fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pno/runners.hpp"

using namespace pno;

namespace {

int g_failures = 0;
std::vector<std::pair<int, std::string>> g_lines;

void report(int index, bool ok, const std::string& what) {
    g_lines.emplace_back(index, std::string(ok ? "[PASS] " : "[FAIL] ") +
                                    (index < 10 ? "0" : "") + std::to_string(index) + " " + what);
    if (!ok) ++g_failures;
}

void flush_report() {
    std::sort(g_lines.begin(), g_lines.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [idx, line] : g_lines) std::printf("%s\n", line.c_str());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    const auto dt = std::chrono::steady_clock::now() - t0;
    return std::chrono::duration<double>(dt).count();
}

std::vector<std::vector<std::string>> rows_with(const RunRecord& rec, const std::string& claim) {
    std::vector<std::vector<std::string>> out;
    for (const auto& row : rec.rows)
        if (!row.empty() && row.front() == claim) out.push_back(row);
    return out;
}

double num(const std::vector<std::string>& row, std::size_t i) { return std::stod(row.at(i)); }

std::string fmt(double v) { return format_sig17(v); }

constexpr const char* kE2eBase =
    "r=2\n"
    "s=2\n"
    "f_kind=signed_power\n"
    "f_p=2\n"
    "T=0.1\n"
    "nt=129\n"
    "nx=127\n"
    "grid4=16\n"
    "u0_count=8\n";

Field eigenmode_field(const SpaceTimeGrid& g) {
    const double pi = 3.14159265358979323846;
    Field f(g);
    for (int i = 0; i < g.nt; ++i) {
        const double decay = std::exp(-pi * pi * g.time(i));
        for (int j = 0; j < g.nx; ++j) f.at(i, j) = decay * std::sin(pi * g.x(j));
    }
    return f;
}

Field random_field(const SpaceTimeGrid& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Field f(g);
    for (int i = 0; i < g.nt; ++i)
        for (int j = 0; j < g.nx; ++j) f.at(i, j) = dist(rng);
    return f;
}

/// criterion 10: homogeneity, triangle, exponent ordering, refinement order
bool norm_suite(std::string& what) {
    const double pi = 3.14159265358979323846;
    const SpaceTimeGrid g(128, 128, 1.0);
    const Field f = random_field(g, 2024);
    const Field h = random_field(g, 4048);
    const std::vector<NormSpec> specs{{2.0, 2.0}, {kInf, kInf}, {2.0, kInf}, {kInf, 2.0},
                                      {4.0, 2.0}};

    double worst_hom = 0.0, worst_tri = 0.0;
    for (const NormSpec& n : specs) {
        const double base = mixed_norm(f, n);
        const Field scaled = pointwise_apply(f, [](double z) { return -2.75 * z; });
        worst_hom = std::max(worst_hom,
                             std::abs(mixed_norm(scaled, n) - 2.75 * base) / (2.75 * base));
        Field sum(g);
        for (int i = 0; i < g.nt; ++i)
            for (int j = 0; j < g.nx; ++j) sum.at(i, j) = f.at(i, j) + h.at(i, j);
        const double lhs = mixed_norm(sum, n);
        const double rhs = base + mixed_norm(h, n);
        worst_tri = std::max(worst_tri, (lhs - rhs) / rhs);
    }
    const bool hom_ok = worst_hom <= 1e-13;
    const bool tri_ok = worst_tri <= 1e-12;

    // unit space-time measure orders the exponents
    const bool mono_ok =
        mixed_norm(f, {2.0, 2.0}) <= mixed_norm(f, {kInf, kInf}) * (1.0 + 1e-12);

    // quadrature error of the eigenmode norm falls at second order
    const double closed = std::sqrt((1.0 - std::exp(-2.0 * pi * pi)) / (4.0 * pi * pi));
    const NormSpec l22{2.0, 2.0};
    const double err64 =
        std::abs(mixed_norm(eigenmode_field(SpaceTimeGrid(64, 64, 1.0)), l22) - closed);
    const double err128 = std::abs(mixed_norm(eigenmode_field(g), l22) - closed);
    const bool refine_ok = err64 >= 3.0 * err128;

    what = "norm invariants at 128x128: homogeneity " + fmt(worst_hom) +
           " <= 1e-13, triangle slack " + fmt(worst_tri) +
           " <= 1e-12, exponent ordering holds, refinement ratio " +
           fmt(err64 / err128) + " >= 3";
    return hom_ok && tri_ok && mono_ok && refine_ok;
}

}  // namespace

int main() {
    std::printf("acceptance: constructive solver-network pipeline, desk scale\n");

    // 1: linear sanity against the decaying eigenmode
    try {
        const ExperimentConfig c = parse_config_string(
            "r=2\ns=2\nf_kind=signed_power\nf_p=2\nT=0.1\nnt=256\nnx=256\n");
        const auto t0 = std::chrono::steady_clock::now();
        const RunRecord rec = run_sanity(c);
        const double secs = seconds_since(t0);
        const double rel = num(rec.rows.at(0), 4);
        const bool ok = rec.passed && rel <= 1e-3 && secs <= 5.0;
        report(1, ok,
               "linear sanity at 256x256: relative error " + fmt(rel) + " <= 0.001 in " +
                   fmt(secs) + "s <= 5s" + (rec.passed ? "" : "; " + rec.failure));
    } catch (const std::exception& e) {
        report(1, false, std::string("linear sanity: ") + e.what());
    }

    // 2: certified contraction with the worked constants
    try {
        const ExperimentConfig c = parse_config_string(
            "r=2\ns=2\nf_kind=signed_power\nf_p=2\nc_f=2\nT=6.103515625e-05\n"
            "nt=129\nnx=127\nu0_count=4\niterations=8\nmode=certified\n");
        const ContractionConstants cc = derive_constants(c.setup());
        const RunRecord rec = run_picard_convergence(c);
        const bool delta_ok = std::abs(cc.delta - 0.5) <= 1e-15;
        const bool ok = rec.passed && delta_ok;
        report(2, ok,
               "certified contraction: iterate ratios <= 0.55 and the geometric bound "
               "dominates every distance to the fixed point (delta " +
                   fmt(cc.delta) + ")" + (rec.passed ? "" : "; " + rec.failure));
    } catch (const std::exception& e) {
        report(2, false, std::string("certified contraction: ") + e.what());
    }

    // 3, 4, 9 share one practical end-to-end run
    try {
        const ExperimentConfig c =
            parse_config_string(std::string(kE2eBase) + "eps_list=0.1,0.01\n");
        const auto t0 = std::chrono::steady_clock::now();
        const RunRecord rec = run_end_to_end(c);
        const double secs = seconds_since(t0);

        const auto equiv = rows_with(rec, "operator output equals the iterated fixed-point map");
        double equiv_max = 0.0;
        for (const auto& row : equiv) equiv_max = std::max(equiv_max, num(row, 13));
        const bool ok3 = equiv.size() == 16 && equiv_max <= 1e-10;
        report(3, ok3,
               "operator/iteration equivalence over " + std::to_string(equiv.size()) +
                   " (eps, u0) cells: max gap " + fmt(equiv_max) + " <= 1e-10");

        const auto budget = rows_with(rec, "end-to-end gap within the weighted budget");
        const auto shrink = rows_with(rec, "approximation gap shrinks with eps");
        bool ok4 = rec.passed && budget.size() == 2 && shrink.size() == 1 && secs <= 600.0;
        std::string detail;
        for (const auto& row : budget) {
            ok4 = ok4 && num(row, 11) <= num(row, 12);
            detail += " gap(" + row.at(1) + ") " + row.at(11) + " <= " + row.at(12) + ";";
        }
        report(4, ok4,
               "end-to-end budget over 8 sampled u0:" + detail + " strict shrink at smaller eps; " +
                   fmt(secs) + "s <= 600s" + (rec.passed ? "" : "; " + rec.failure));

        const auto cross = rows_with(rec, "exact solver agrees with the finite-difference oracle");
        bool ok9 = cross.size() == 8;
        double worst_ratio = 0.0;
        for (const auto& row : cross) {
            ok9 = ok9 && num(row, 11) <= num(row, 12);
            worst_ratio = std::max(worst_ratio, num(row, 11) / num(row, 12));
        }
        report(9, ok9,
               "cross-oracle agreement on all 8 u0: worst gap/budget ratio " + fmt(worst_ratio) +
                   " <= 1");
    } catch (const std::exception& e) {
        report(3, false, std::string("end-to-end run: ") + e.what());
        report(4, false, std::string("end-to-end run: ") + e.what());
        report(9, false, std::string("end-to-end run: ") + e.what());
    }

    // 5: size envelopes across four decades of eps
    try {
        ExperimentConfig c = parse_config_string(std::string(kE2eBase) +
                                                 "eps_list=0.1,0.01,0.001,0.0001\n");
        c.u0_count = 2;
        const RunRecord rec = run_end_to_end(c);
        const auto budget = rows_with(rec, "end-to-end gap within the weighted budget");
        bool j_ok = budget.size() == 4;
        double fit_c = 0.0;
        for (const auto& row : budget) {
            const double eps = num(row, 1);
            j_ok = j_ok && int(num(row, 7)) == iteration_count(eps, c.delta_target);
            const double lg = std::log(1.0 / eps);
            fit_c = std::max(fit_c, num(row, 8) / (lg * lg));
            fit_c = std::max(fit_c, num(row, 9) * eps / (lg * lg));
        }
        const bool ok = rec.passed && j_ok && fit_c <= 2.0;
        report(5, ok,
               "depth <= C log(1/eps)^2 and width <= C (1/eps) log(1/eps)^2 down to eps 1e-4 "
               "with one constant C = " +
                   fmt(fit_c) + " <= 2, iteration counts exact" +
                   (rec.passed ? "" : "; " + rec.failure));
    } catch (const std::exception& e) {
        report(5, false, std::string("size envelopes: ") + e.what());
    }

    // 6: truncation-error ladders and the spectral tail oracle
    try {
        const ExperimentConfig c = parse_config_string(
            "r=2\ns=2\nf_kind=signed_power\nf_p=2\nT=0.1\nnt=65\nnx=63\ngrid4=32\n");
        const auto t0 = std::chrono::steady_clock::now();
        const RunRecord rec = run_rank_study(c);
        const double secs = seconds_since(t0);
        const bool ok = rec.passed && secs <= 600.0;
        report(6, ok,
               "rank ladders monotone with full-rank floor <= 1e-3 at lattice 32, spectral "
               "tail within factor 2 of the analytic series; " +
                   fmt(secs) + "s <= 600s" + (rec.passed ? "" : "; " + rec.failure));
    } catch (const std::exception& e) {
        report(6, false, std::string("rank study: ") + e.what());
    }

    // 7: positivity in the squared-rectifier mode, plus the sign-gate control
    try {
        const ExperimentConfig c = parse_config_string(
            "r=inf\ns=inf\nf_kind=signed_power\nf_p=3\nT=0.1\nnt=33\nnx=31\n"
            "grid4=16\nu0_count=8\neps_list=0.1\n");
        const RunRecord rec = run_positivity(c);
        bool control_ok = false;
        std::string control;
        try {
            ExperimentConfig bad = c;
            bad.f.kind = NonlinearitySpec::Kind::abs_power;
            bad.f.p = 2.0;
            run_positivity(bad);
            control = "square nonlinearity was not rejected";
        } catch (const std::invalid_argument& e) {
            control_ok = true;
            control = e.what();
        }
        const bool ok = rec.passed && control_ok;
        report(7, ok,
               "positivity preserved on 8 nonnegative u0 (and mirrored nonpositive), "
               "sign-changing control rejected: " +
                   control + (rec.passed ? "" : "; " + rec.failure));
    } catch (const std::exception& e) {
        report(7, false, std::string("positivity: ") + e.what());
    }

    // 8: stitched long-time windows
    try {
        const ExperimentConfig c = parse_config_string(
            "r=2\ns=2\nf_kind=signed_power\nf_p=2\nT=0.1\nnt=65\nnx=63\ngrid4=16\n"
            "R=0.05\nkappa=3\neps_list=0.01\n");
        const RunRecord rec = run_longtime(c);
        const auto windows = rows_with(rec, "window gap feeds the stitched budget");
        const auto summary =
            rows_with(rec, "stitched long-time gap within the compounded budget");
        bool ok = rec.passed && !windows.empty() && summary.size() == 1;
        std::string detail = "no summary row";
        if (!summary.empty()) {
            ok = ok && num(summary[0], 5) <= num(summary[0], 6);
            detail = "cumulative gap " + summary[0].at(5) + " <= bound " + summary[0].at(6) +
                     " over " + std::to_string(windows.size()) + " windows";
        }
        report(8, ok, "long-time stitching: " + detail + (rec.passed ? "" : "; " + rec.failure));
    } catch (const std::exception& e) {
        report(8, false, std::string("long-time stitching: ") + e.what());
    }

    // 10: norm module invariants
    try {
        std::string what;
        const bool ok = norm_suite(what);
        report(10, ok, what);
    } catch (const std::exception& e) {
        report(10, false, std::string("norm invariants: ") + e.what());
    }

    flush_report();
    if (g_failures > 0) {
        std::printf("acceptance: %d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("acceptance: all criteria passed\n");
    return 0;
}
