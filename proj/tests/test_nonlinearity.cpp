#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "pno/nonlinearity.hpp"

using namespace pno;

namespace {

NonlinearitySpec signed_power(double p, double scale = 1.0) {
    NonlinearitySpec f;
    f.kind = NonlinearitySpec::Kind::signed_power;
    f.p = p;
    f.scale = scale;
    return f;
}

NonlinearitySpec abs_power(double p, double scale = 1.0) {
    NonlinearitySpec f;
    f.kind = NonlinearitySpec::Kind::abs_power;
    f.p = p;
    f.scale = scale;
    return f;
}

}  // namespace

TEST_SUITE("nonlinearity") {

TEST_CASE("pointwise maps and derived constants") {
    const NonlinearitySpec zabs = signed_power(2.0);
    CHECK(f_eval(zabs, 2.0) == 4.0);
    CHECK(f_eval(zabs, -2.0) == -4.0);
    CHECK(f_eval(zabs, 0.0) == 0.0);
    CHECK(zabs.growth_constant() == 2.0);

    const NonlinearitySpec sq = abs_power(2.0);
    CHECK(f_eval(sq, -0.5) == 0.25);

    NonlinearitySpec poly;
    poly.kind = NonlinearitySpec::Kind::polynomial;
    poly.poly = {0.5, 0.0, -2.0};  // 0.5 z - 2 z^3
    poly.p = 3.0;
    CHECK(f_eval(poly, 1.0) == doctest::Approx(-1.5).epsilon(1e-15));
    CHECK(poly.growth_constant() == doctest::Approx(6.5).epsilon(1e-15));

    NonlinearitySpec bad = poly;
    bad.p = 2.0;  // top degree mismatch
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("growth assumption holds on sampled pairs") {
    const AssumptionReport rep = verify_assumption_F(signed_power(2.0), 1.0);
    CHECK(rep.passed);
    CHECK(rep.f_zero_at_zero);
    CHECK(rep.worst_ratio <= 1.0 + 1e-9);
    CHECK(verify_assumption_F(signed_power(3.0), 2.0).passed);
}

TEST_CASE("curvature bounds") {
    CHECK(curvature_bound(signed_power(2.0), 1.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(curvature_bound(signed_power(3.0), 2.0) == doctest::Approx(12.0).epsilon(1e-15));
    CHECK_THROWS_AS(curvature_bound(signed_power(1.5), 1.0), std::invalid_argument);
}

TEST_CASE("piecewise-linear net hits the worked knot count and error") {
    const Fnet net = build_fnet(signed_power(2.0), 1e-2, 1.0);
    CHECK(net.knots.size() == 11);
    CHECK(net.spacing == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(net.error_bound <= 1e-2 + 1e-15);
    // uniform interpolation of z|z| attains kappa h^2 / 8 between knots
    CHECK(net.measured_error == doctest::Approx(1e-2).epsilon(1e-3));
    CHECK(net.measured_error <= 1e-2 + 1e-12);

    CHECK(net.net.eval(0.0) == 0.0);
    for (double z : {-1.0, -0.6, 0.2, 1.0})
        CHECK(net.net.eval(z) == doctest::Approx(z * std::abs(z)).epsilon(1e-13).scale(1.0));
    // boundary slope continues outside the certified window
    CHECK(net.net.eval(1.5) == doctest::Approx(1.0 + 1.8 * 0.5).epsilon(1e-13));

    const Fnet fine = build_fnet(signed_power(2.0), 1e-4, 1.0);
    CHECK(fine.knots.size() == 101);
    CHECK(fine.measured_error <= 1e-4 + 1e-12);
}

TEST_CASE("linear problem collapses the net to zero") {
    const Fnet net = build_fnet(signed_power(2.0, 0.0), 1e-2, 1.0);
    for (double z : {-1.0, 0.0, 0.7}) CHECK(net.net.eval(z) == 0.0);
}

TEST_CASE("requ realization is exact for polynomial maps") {
    const Fnet cubic = build_requ_exact(signed_power(3.0), 2.0);
    CHECK(cubic.net.act == Activation::requ);
    CHECK(cubic.measured_error <= 1e-12);
    for (double z : {-1.7, -0.3, 0.0, 0.4, 2.0})
        CHECK(cubic.net.eval(z) == doctest::Approx(z * z * z).epsilon(1e-12).scale(1.0));

    const Fnet square = build_requ_exact(abs_power(2.0), 1.5);
    CHECK(square.net.eval(-0.5) == doctest::Approx(0.25).epsilon(1e-12));

    // z|z| is not a polynomial, so the exact mode must refuse it
    CHECK_THROWS_AS(build_requ_exact(signed_power(2.0), 1.0), std::invalid_argument);
}

TEST_CASE("activation primitives") {
    CHECK(activation_eval(Activation::relu, -1.0) == 0.0);
    CHECK(activation_eval(Activation::relu, 2.5) == 2.5);
    CHECK(activation_eval(Activation::requ, -1.0) == 0.0);
    CHECK(activation_eval(Activation::requ, 1.5) == 2.25);
}

}  // TEST_SUITE
