#include <cmath>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "pno/runners.hpp"

using namespace pno;
using doctest::Contains;

namespace {

const double kPi = 3.14159265358979323846;

ExperimentConfig practical_config() {
    return parse_config_string(
        "r=2\n"
        "s=2\n"
        "f_kind=signed_power\n"
        "f_p=2\n"
        "T=0.1\n"
        "nt=33\n"
        "nx=31\n"
        "grid4=8\n"
        "u0_count=2\n"
        "eps_list=0.1\n");
}

/// Rows of a record shorn of the volatile timestamp, for determinism checks.
std::string stable_body(const RunRecord& rec) {
    std::ostringstream os;
    for (const auto& c : rec.columns) os << c << ',';
    os << '\n';
    for (const auto& row : rec.rows) {
        for (const auto& cell : row) os << cell << ',';
        os << '\n';
    }
    return os.str();
}

}  // namespace

TEST_SUITE("runners") {

TEST_CASE("finite-difference oracle reproduces heat decay on the linear problem") {
    ExperimentConfig c = practical_config();
    c.nt = 65;
    c.nx = 255;
    c.f.scale = 0.0;
    c.f.c_F = 0.0;
    const std::vector<double> u0 = sample_initial_data(1.0, c.nx, 1, InitialDataKind::eigenmode);
    const Field num = oracle_solve(u0, c, 0.5);
    const SpaceTimeGrid g = c.grid();
    double worst = 0.0;
    const double decay = std::exp(-dirichlet_eigenvalue(1) * g.T);
    for (int j = 0; j < g.nx; ++j) {
        const double exact = decay * std::sin(kPi * g.x(j));
        worst = std::max(worst, std::abs(num.at(g.nt - 1, j) - exact));
    }
    CHECK(worst <= 1e-4);

    const std::vector<double> zero(std::size_t(c.nx), 0.0);
    CHECK(sup_norm(oracle_solve(zero, c, 0.5)) == 0.0);
}

TEST_CASE("oracle instability names the step-size knob") {
    ExperimentConfig c = practical_config();
    c.f.p = 3.0;  // nu/s + 1/r < 1/(p-1) still holds at r=s=inf
    c.norm.r = kInf;
    c.norm.s = kInf;
    c.f.scale = 1e5;  // super-critical forcing blows the explicit source up
    c.f.c_F = 3e5;
    const std::vector<double> u0 = sample_initial_data(1.9, c.nx, 1, InitialDataKind::eigenmode);
    CHECK_THROWS_WITH_AS(oracle_solve(u0, c, 0.5), Contains("dt_factor"), std::runtime_error);
}

TEST_CASE("sanity study passes and reports the eigenmode error") {
    ExperimentConfig c = practical_config();
    c.nt = 65;
    c.nx = 63;
    const RunRecord rec = run_sanity(c);
    CHECK(rec.passed);
    CHECK(rec.experiment == "sanity");
    CHECK(rec.failure.empty());
    REQUIRE(!rec.rows.empty());
}

TEST_CASE("csv output sanitizes separators and repeats byte-identically") {
    RunRecord rec;
    rec.experiment = "demo";
    rec.timestamp = "2000-01-01T00:00:00Z";
    rec.config_echo = "a=1\nb=2\n";
    rec.columns = {"claim", "value"};
    rec.rows.push_back({"plain", "1"});
    std::ostringstream os;
    emit_csv(rec, os);
    const std::string text = os.str();
    CHECK(text.find("# experiment=demo\n") != std::string::npos);
    CHECK(text.find("# timestamp=2000-01-01T00:00:00Z\n") != std::string::npos);
    CHECK(text.find("# passed=true\n") != std::string::npos);
    CHECK(text.find("# config a=1\n") != std::string::npos);
    CHECK(text.find("# config b=2\n") != std::string::npos);
    CHECK(text.find("claim,value\n") != std::string::npos);
    CHECK(text.find("plain,1\n") != std::string::npos);

    // two runs of the same study differ only in the timestamp line
    const ExperimentConfig c = practical_config();
    const RunRecord first = run_sanity(c);
    const RunRecord second = run_sanity(c);
    CHECK(stable_body(first) == stable_body(second));
}

TEST_CASE("configured model honors the accuracy request") {
    const ExperimentConfig c = practical_config();
    const NeuralOperatorModel coarse = build_configured_model(c, 0.1);
    CHECK(coarse.iterations == iteration_count(0.1, c.delta_target));
    const KernelTruncation tr =
        truncation_errors(coarse.expansion, c.op, c.norm, c.grid4);
    CHECK(tr.c_g <= 0.1);
    CHECK(tr.c_g_init <= 0.1);

    // a tighter request can only grow the selected rank and the depth
    const NeuralOperatorModel fine = build_configured_model(c, 0.01);
    CHECK(fine.expansion.rank() >= coarse.expansion.rank());
    CHECK(fine.iterations > coarse.iterations);
    CHECK(fine.fnet.error_bound <= 0.01 + 1e-15);
}

TEST_CASE("studies validate their mode and basis requirements") {
    ExperimentConfig c = practical_config();
    CHECK_THROWS_WITH_AS(run_picard_convergence(c), Contains("certified"),
                         std::invalid_argument);

    c = practical_config();
    c.basis = BasisKind::fourier;
    CHECK_THROWS_WITH_AS(run_positivity(c), Contains("haar"), std::invalid_argument);

    c = practical_config();
    c.f.kind = NonlinearitySpec::Kind::abs_power;  // z^2 is not sign preserving
    CHECK_THROWS_AS(run_positivity(c), std::invalid_argument);
}

}  // TEST_SUITE
