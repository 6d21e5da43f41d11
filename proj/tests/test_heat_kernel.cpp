#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "pno/heat_kernel.hpp"

using namespace pno;

namespace {

const double kPi = 3.14159265358979323846;

std::vector<double> parabola(int nx) {
    std::vector<double> u(std::size_t(nx), 0.0);
    for (int j = 0; j < nx; ++j) {
        const double x = double(j + 1) / (nx + 1);
        u[std::size_t(j)] = x * (1.0 - x);
    }
    return u;
}

}  // namespace

TEST_SUITE("heat_kernel") {

TEST_CASE("kernel value at the center matches the dominant mode") {
    const OperatorSpec op;
    // odd modes only survive at x = y = 1/2; the k = 3 term is ~1e-39
    const double expect = 2.0 * std::exp(-kPi * kPi);
    CHECK(green_eval(op, 1.0, 0.5, 0.5) == doctest::Approx(expect).epsilon(1e-12));
    // boundary rows vanish (at y = 1 only up to sin(k pi) rounding)
    CHECK(green_eval(op, 0.5, 0.0, 0.3) == 0.0);
    CHECK(std::abs(green_eval(op, 0.5, 0.3, 1.0)) <= 1e-15);
}

TEST_CASE("kernel symmetry in the spatial arguments") {
    const OperatorSpec op;
    CHECK(green_eval(op, 0.05, 0.3, 0.7) ==
          doctest::Approx(green_eval(op, 0.05, 0.7, 0.3)).epsilon(1e-15));
}

TEST_CASE("tail bound decreases in the cutoff and gates tiny times") {
    const OperatorSpec op;
    CHECK(green_tail_bound(20, 0.01) < green_tail_bound(10, 0.01));
    CHECK_THROWS_AS(green_eval(op, 1e-9, 0.5, 0.5), TruncationError);
    // a larger cutoff changes the value by no more than the declared tails
    OperatorSpec small = op;
    small.k_eval = 100;
    const double a = green_eval(small, 0.01, 0.25, 0.75);
    const double b = green_eval(op, 0.01, 0.25, 0.75);
    CHECK(std::abs(a - b) <= green_tail_bound(100, 0.01) + 1e-15);
}

TEST_CASE("sine transform of the parabola matches the classical coefficients") {
    const int nx = 127;
    const std::vector<double> c = sine_coefficients(parabola(nx));
    REQUIRE(int(c.size()) == nx);
    for (int k = 1; k <= 9; ++k) {
        const double expect = k % 2 == 1 ? 8.0 / (k * k * k * kPi * kPi * kPi) : 0.0;
        CHECK(c[std::size_t(k - 1)] == doctest::Approx(expect).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("sine transform round trips interior samples") {
    const int nx = 64;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<double> u(std::size_t(nx), 0.0);
    for (double& v : u) v = unif(rng);
    const std::vector<double> back = sine_reconstruct(sine_coefficients(u), nx);
    for (int j = 0; j < nx; ++j)
        CHECK(back[std::size_t(j)] == doctest::Approx(u[std::size_t(j)]).epsilon(1e-12));
}

TEST_CASE("semigroup damps eigenmodes exactly and composes") {
    const OperatorSpec op;
    const int nx = 127;
    std::vector<double> mode(std::size_t(nx), 0.0);
    for (int j = 0; j < nx; ++j) mode[std::size_t(j)] = std::sin(3.0 * kPi * (j + 1) / (nx + 1));

    const std::vector<double> evolved = semigroup_apply(op, 0.02, mode);
    const double decay = std::exp(-dirichlet_eigenvalue(3) * 0.02);
    for (int j = 0; j < nx; ++j)
        CHECK(evolved[std::size_t(j)] ==
              doctest::Approx(decay * mode[std::size_t(j)]).epsilon(1e-12).scale(1.0));

    const std::vector<double> u = parabola(nx);
    const std::vector<double> two_step = semigroup_apply(op, 0.03, semigroup_apply(op, 0.04, u));
    const std::vector<double> one_step = semigroup_apply(op, 0.07, u);
    for (int j = 0; j < nx; ++j)
        CHECK(two_step[std::size_t(j)] ==
              doctest::Approx(one_step[std::size_t(j)]).epsilon(1e-12).scale(1.0));

    // t = 0 reproduces the samples (discrete transform pair)
    const std::vector<double> id = semigroup_apply(op, 0.0, u);
    for (int j = 0; j < nx; ++j)
        CHECK(id[std::size_t(j)] == doctest::Approx(u[std::size_t(j)]).epsilon(1e-12));
}

TEST_CASE("semigroup trajectory equals slicewise application") {
    const OperatorSpec op;
    const SpaceTimeGrid g(9, 63, 0.25);
    const std::vector<double> u = parabola(g.nx);
    const Field traj = semigroup_trajectory(op, g, u);
    for (int i = 0; i < g.nt; ++i) {
        const std::vector<double> slice = semigroup_apply(op, g.time(i), u);
        for (int j = 0; j < g.nx; ++j)
            CHECK(traj.at(i, j) == doctest::Approx(slice[std::size_t(j)]).epsilon(1e-12));
    }
}

TEST_CASE("smoothing envelope dominates the measured operator norms") {
    const OperatorSpec op;
    const SmoothingReport rep =
        verify_smoothing(op, {1e-3, 1e-2, 1e-1, 0.5}, 2.0, kInf, 255);
    CHECK(rep.passed);
    CHECK(rep.worst_excess <= 1.0);
    const SmoothingReport rep11 = verify_smoothing(op, {1e-2, 0.1}, 2.0, 2.0, 255);
    CHECK(rep11.passed);
}

}  // TEST_SUITE
