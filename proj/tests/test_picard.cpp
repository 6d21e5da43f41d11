#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "pno/picard.hpp"

using namespace pno;

namespace {

/// Reference configuration: nu = 1/2, F(z) = z|z| (c_F = 2), r = s = 2,
/// M = 1, M' = 2, R = 0.1 on the unit interval, horizon T = 2^-14.
ProblemSetup worked_setup() {
    ProblemSetup s;
    s.op.nu = 0.5;
    s.op.c_L = 1.0;
    s.op.k_eval = 200;
    s.f.kind = NonlinearitySpec::Kind::signed_power;
    s.f.p = 2.0;
    s.f.scale = 1.0;
    s.norm.r = 2.0;
    s.norm.s = 2.0;
    s.T = 6.103515625e-5;
    s.M = 1.0;
    s.M_prime = 2.0;
    s.R = 0.1;
    s.domain_measure = 1.0;
    return s;
}

}  // namespace

TEST_SUITE("picard") {

TEST_CASE("contraction constants of the reference configuration") {
    const ContractionConstants c = derive_constants(worked_setup());
    CHECK(c.alpha == -0.25);
    CHECK(c.beta == 0.5);
    // delta = 4 sqrt(2) T^{1/4} = 1/2 in exact arithmetic; the float lands
    // one ulp above it
    CHECK(c.delta == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(c.rho == doctest::Approx(7.8125e-4).epsilon(1e-15));
    CHECK(c.c1 == 2.1);
    CHECK(c.c2 == 9.5367431640625e-7);  // 2 T^{3/2} is dyadic and exact
    CHECK(c.c3 == doctest::Approx(5.2000019073486328125).epsilon(1e-14));
    CHECK(c.exponents_ok);
    CHECK(c.parameters_ok);
    CHECK(c.usable());
    CHECK(c.failure.empty());
}

TEST_CASE("exponent gates report the violated condition") {
    ProblemSetup s = worked_setup();
    s.f.p = 3.0;  // r = 2 < p
    ContractionConstants c = derive_constants(s);
    CHECK_FALSE(c.exponents_ok);
    CHECK(c.failure == "exponents: r/p >= 1 fails");
    CHECK(std::isinf(c.delta));
    CHECK_FALSE(c.usable());

    s = worked_setup();
    s.op.nu = 1.0;
    s.f.p = 3.0;
    s.norm.r = 3.0;  // alpha = -1, beta = 1/3
    c = derive_constants(s);
    CHECK_FALSE(c.exponents_ok);
    CHECK(c.failure == "exponents: alpha + beta <= 0");
}

TEST_CASE("parameter gates fire in their declared order") {
    ProblemSetup s = worked_setup();
    s.T = 2.0;
    CHECK(derive_constants(s).failure == "parameters: T <= 1 fails");

    s = worked_setup();
    s.R = 200.0;  // rho alone exceeds M
    CHECK(derive_constants(s).failure == "parameters: rho + (delta/2) M <= M fails");

    s = worked_setup();
    s.M_prime = 0.15;  // 2 c_L R = 0.2 already overflows the sup ball
    CHECK(derive_constants(s).failure == "parameters: sup-norm ball invariance fails");

    s = worked_setup();
    s.M_prime = 300.0;
    CHECK(derive_constants(s).failure ==
          "parameters: sup ball does not embed in the mixed-norm ball");

    s = worked_setup();
    s.T = 1.2e-3;  // delta = 4 sqrt(2) T^{1/4} = 1.05..., earlier gates still pass
    const ContractionConstants c = derive_constants(s);
    CHECK(c.exponents_ok);
    CHECK_FALSE(c.parameters_ok);
    CHECK(c.failure == "parameters: delta >= 1");
}

TEST_CASE("horizon search halves to the first passing dyadic") {
    ProblemSetup s = worked_setup();
    s.T = 1.0;
    // In exact arithmetic delta(2^-14) = 1/2 would already pass; the computed
    // delta sits one ulp above the target, so the search takes one more step.
    const double T = select_horizon(s, 0.5);
    CHECK(T == 3.0517578125e-5);
    s.T = T;
    ContractionConstants c = derive_constants(s);
    CHECK(c.delta <= 0.5);
    CHECK(c.delta == doctest::Approx(0.5 / std::pow(2.0, 0.25)).epsilon(1e-14));

    // doubling M doubles delta (p = 2), so the horizon shrinks by 2^4
    s = worked_setup();
    s.T = 1.0;
    s.M = 2.0;
    const double Td = select_horizon(s, 0.5);
    CHECK(Td == 1.9073486328125e-6);
    s.T = Td;
    c = derive_constants(s);
    CHECK(c.delta <= 0.5);
    CHECK(c.usable());

    CHECK_THROWS_AS(select_horizon(worked_setup(), 1.5), std::invalid_argument);
    s = worked_setup();
    s.f.p = 3.0;  // exponent failure: no horizon can help
    CHECK_THROWS_AS(select_horizon(s, 0.5), std::runtime_error);
    s = worked_setup();
    s.R = 1.0;  // 2 c_L R == M' blocks the sup ball at every horizon
    CHECK_THROWS_AS(select_horizon(s, 0.5), std::runtime_error);
    s = worked_setup();
    CHECK_THROWS_AS(select_horizon(s, 1e-9, 3), std::runtime_error);
}

TEST_CASE("iteration count follows the geometric budget") {
    CHECK(iteration_count(1e-2, 0.5) == 7);
    CHECK(iteration_count(0.5, 0.5) == 1);
    CHECK(iteration_count(0.9, 0.5) == 1);
    CHECK(iteration_count(0.3, 0.5) == 2);
    CHECK(iteration_count(0.15, 0.5) == 3);
    CHECK(iteration_count(0.075, 0.5) == 4);
    CHECK_THROWS_AS(iteration_count(1.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(iteration_count(0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(iteration_count(0.1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(iteration_count(0.1, 0.0), std::invalid_argument);
}

TEST_CASE("linear problem: one step is the semigroup and the iteration freezes") {
    ProblemSetup s = worked_setup();
    s.f.scale = 0.0;  // F identically zero
    const SpaceTimeGrid grid(65, 63, s.T);
    const std::vector<double> u0 = sample_initial_data(s.R, 63, 7, InitialDataKind::eigenmode);

    const Field zero(grid);
    const Field stepped = phi_step(s, grid, u0, zero, PicardModes{});
    const Field semi = semigroup_trajectory(s.op, grid, u0);
    CHECK(sup_norm(field_difference(stepped, semi)) == 0.0);

    const PicardResult res = picard_solve(s, grid, u0, 4, 0.5, PicardModes{});
    REQUIRE(res.iterates.size() == 4);
    CHECK(res.d1 == res.iterates[0].increment);
    CHECK(res.d1 > 0.0);
    for (std::size_t l = 1; l < res.iterates.size(); ++l)
        CHECK(res.iterates[l].increment <= 1e-14);
    CHECK(res.iterates[0].to_final <= 1e-14);
}

TEST_CASE("iterate records wire the a-priori column and stay in the balls") {
    const ProblemSetup s = worked_setup();
    const SpaceTimeGrid grid(65, 63, s.T);
    const std::vector<double> u0 = sample_initial_data(s.R, 63, 3, InitialDataKind::random_trig);
    const ContractionConstants c = derive_constants(s);

    const PicardResult res = picard_solve(s, grid, u0, 6, c.delta, PicardModes{});
    REQUIRE(res.iterates.size() == 6);
    CHECK(res.delta == c.delta);
    for (const PicardIterate& it : res.iterates) {
        const double expect = std::pow(c.delta, it.index) / (1.0 - c.delta) * res.d1;
        CHECK(it.apriori == doctest::Approx(expect).epsilon(1e-12));
        CHECK(it.sup <= s.M_prime + 1e-12);
    }
    CHECK(res.iterates[1].increment <= res.iterates[0].increment);
    CHECK(res.worst_ratio < 1.0);

    CHECK_THROWS_AS(picard_solve(s, grid, u0, 0, 0.5, PicardModes{}), std::invalid_argument);
    const Field wrong(SpaceTimeGrid(33, 31, s.T));
    CHECK_THROWS_AS(phi_step(s, grid, u0, wrong, PicardModes{}), std::invalid_argument);
}

TEST_CASE("measured contraction stays under the derived factor") {
    const ProblemSetup s = worked_setup();
    const SpaceTimeGrid grid(65, 63, s.T);
    const std::vector<double> u0 = sample_initial_data(s.R, 63, 11, InitialDataKind::eigenmode);
    const double ratio = measure_contraction(s, grid, u0, 4, 11, PicardModes{});
    CHECK(ratio > 0.0);
    CHECK(ratio <= 0.55);
    CHECK_THROWS_AS(measure_contraction(s, grid, u0, 0, 1, PicardModes{}), std::invalid_argument);
}

}  // TEST_SUITE
