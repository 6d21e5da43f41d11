#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "pno/expansion.hpp"
#include "pno/heat_kernel.hpp"
#include "pno/picard.hpp"

using namespace pno;

namespace {

const double kPi = 3.14159265358979323846;
const OperatorSpec kOp;
const NormSpec kL2{2.0, 2.0};

}  // namespace

TEST_SUITE("expansion") {

TEST_CASE("full-level bases interpolate the kernel on their own lattice") {
    const int g4 = 16;
    for (BasisKind kind : {BasisKind::haar, BasisKind::fourier}) {
        const KernelExpansion e =
            build_expansion(kOp, kind, std::size_t(1) << 40, 0.1, g4);
        const KernelTruncation tr = truncation_errors(e, kOp, kL2, g4);
        CHECK(tr.c_g <= 1e-9);
        CHECK(tr.c_g_init <= 1e-9);
    }
}

TEST_CASE("rank requests quantize upward and errors shrink with rank") {
    const int g4 = 16;
    double prev_cg = kInf, prev_init = kInf;
    std::size_t prev_rank = 0;
    for (std::size_t req : {std::size_t(1), std::size_t(16), std::size_t(256),
                            std::size_t(4096), std::size_t(65536)}) {
        const KernelExpansion e = build_expansion(kOp, BasisKind::haar, req, 0.1, g4);
        CHECK(e.rank() >= req);
        if (e.rank() == prev_rank) continue;
        const KernelTruncation tr = truncation_errors(e, kOp, kL2, g4);
        CHECK(tr.c_g <= prev_cg + 1e-12);
        CHECK(tr.c_g_init <= prev_init + 1e-12);
        prev_cg = tr.c_g;
        prev_init = tr.c_g_init;
        prev_rank = e.rank();
    }
}

TEST_CASE("haar levels strictly sharpen the initial-slice error") {
    const int g4 = 32;
    double prev = kInf;
    for (int level = 0; level <= 3; ++level) {
        const std::size_t req = std::size_t(1) << (4 * level);
        const KernelExpansion e = build_expansion(kOp, BasisKind::haar, req, 0.1, g4);
        const KernelTruncation tr = truncation_errors(e, kOp, kL2, g4);
        CHECK(tr.c_g_init < prev);
        prev = tr.c_g_init;
    }
}

TEST_CASE("spectral truncation shrinks with the mode cutoff") {
    double prev = kInf;
    for (std::size_t K : {std::size_t(1), std::size_t(2), std::size_t(4), std::size_t(8)}) {
        const KernelExpansion e = build_expansion(kOp, BasisKind::spectral, K, 0.1, 32);
        CHECK(e.rank() == K);
        const KernelTruncation tr = truncation_errors(e, kOp, kL2, 32);
        CHECK(tr.c_g_init < prev);
        prev = tr.c_g_init;
    }
}

TEST_CASE("expansion evaluation respects the causal domain") {
    const KernelExpansion e = build_expansion(kOp, BasisKind::haar, 256, 0.1, 16);
    CHECK_THROWS_AS(expansion_eval(e, 0.05, 0.06, 0.5, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(expansion_eval(e, 0.05, 0.01, 1.5, 0.5), std::invalid_argument);
    CHECK_NOTHROW(expansion_eval(e, 0.05, 0.01, 0.5, 0.5));
    CHECK_NOTHROW(expansion_initial_eval(e, 0.05, 0.5, 0.5));
}

TEST_CASE("export and import round trip bit for bit") {
    for (BasisKind kind : {BasisKind::haar, BasisKind::fourier, BasisKind::spectral}) {
        const KernelExpansion e = build_expansion(kOp, kind, 16, 0.1, 16);
        const std::string text = export_expansion_string(e);
        const KernelExpansion back = import_expansion_string(text);
        CHECK(export_expansion_string(back) == text);
        CHECK(back.rank() == e.rank());
        if (kind != BasisKind::spectral) {
            // identical coefficients give identical evaluations
            CHECK(expansion_eval(back, 0.07, 0.02, 0.3, 0.6) ==
                  expansion_eval(e, 0.07, 0.02, 0.3, 0.6));
        }
    }
    CHECK_THROWS_AS(import_expansion_string("junk 3 0.1\n"), std::invalid_argument);
}

TEST_CASE("applicator rejects the spectral oracle basis") {
    const KernelExpansion e = build_expansion(kOp, BasisKind::spectral, 4, 0.1, 16);
    CHECK_THROWS_AS(KernelApplicator(e, SpaceTimeGrid(9, 15, 0.1)), std::invalid_argument);
}

TEST_CASE("full-rank applicator tracks the exact linear pieces") {
    const SpaceTimeGrid grid(33, 63, 0.1);
    const KernelExpansion e =
        build_expansion(kOp, BasisKind::haar, std::size_t(1) << 40, 0.1, 32);
    const KernelApplicator app(e, grid);

    // initial layer against the exact semigroup trajectory; the causal
    // zero-extension makes the surrogate vanish identically at t = 0, so the
    // comparison starts at the first positive time sample
    const std::vector<double> u0 = sample_initial_data(0.1, grid.nx, 1, InitialDataKind::eigenmode, 1);
    Field exact_init = semigroup_trajectory(kOp, grid, u0);
    const Field approx_init = app.initial_apply(u0);
    for (int j = 0; j < grid.nx; ++j) {
        CHECK(std::abs(approx_init.at(0, j)) <= 1e-14);
        exact_init.at(0, j) = 0.0;
    }
    const double init_gap = mixed_norm(field_difference(exact_init, approx_init), kL2);
    CHECK(init_gap <= 0.05 * mixed_norm(exact_init, kL2));

    // integral term against the exact eigen-series integral
    Field w(grid);
    for (int i = 0; i < grid.nt; ++i)
        for (int j = 0; j < grid.nx; ++j)
            w.at(i, j) = std::sin(kPi * grid.x(j)) * (1.0 + grid.time(i));
    const Field exact_duh = duhamel_exact(kOp, w);
    const Field approx_duh = app.duhamel_apply(w);
    const double duh_gap = mixed_norm(field_difference(exact_duh, approx_duh), kL2);
    CHECK(duh_gap <= 0.055 * mixed_norm(exact_duh, kL2));
}

TEST_CASE("kernel lattice zeroes the acausal half") {
    const int g4 = 8;
    const std::vector<double> lat = kernel_lattice(kOp, 0.1, g4, 0.1 / (4 * g4));
    REQUIRE(lat.size() == std::size_t(g4) * g4 * g4 * g4);
    for (int i = 0; i < g4; ++i)
        for (int j = i; j < g4; ++j)
            for (int a = 0; a < g4; ++a)
                for (int b = 0; b < g4; ++b)
                    CHECK(lat[((std::size_t(i) * g4 + j) * g4 + a) * g4 + b] == 0.0);
}

}  // TEST_SUITE
