#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pno/expansion.hpp"
#include "pno/grid.hpp"
#include "pno/heat_kernel.hpp"
#include "pno/nonlinearity.hpp"
#include "pno/picard.hpp"

namespace pno {

/// Every knob an experiment needs, resolvable from a key=value file. The
/// `certified` flag selects between runs backed by the full feasibility
/// system (tiny horizons, every constant checked) and practical runs that
/// keep the requested horizon and report `certified=false` in their output.
struct ExperimentConfig {
    OperatorSpec op;
    NormSpec norm;
    NonlinearitySpec f;

    double T = 0.1;
    double M = 1.0;
    double M_prime = 2.0;
    double R = 0.1;
    double domain_measure = 1.0;
    double delta_target = 0.5;

    BasisKind basis = BasisKind::haar;
    std::vector<double> eps_list{1e-1, 1e-2};

    int u0_count = 8;
    std::uint64_t u0_seed = 1;
    std::vector<InitialDataKind> u0_kinds{InitialDataKind::eigenmode,
                                          InitialDataKind::random_trig, InitialDataKind::bump};

    int nt = 129;
    int nx = 127;
    int grid4 = 32;

    bool certified = false;
    int kappa = 3;        ///< long-time windows
    int iterations = 8;   ///< Picard iterations for convergence studies
    double dt_factor = 0.5;  ///< finite-difference oracle time step multiplier
    std::vector<std::size_t> n_list;  ///< rank ladder; empty selects a default

    SpaceTimeGrid grid() const { return SpaceTimeGrid{nt, nx, T}; }
    ProblemSetup setup() const;

    /// Exponent admissibility (r,s in [p,inf], nu/s + 1/r < 1/(p-1)), basic
    /// range checks, and in certified mode the full feasibility system.
    void validate() const;
};

/// Parses one `key=value` per line; `#` starts a comment. Unknown, duplicate,
/// malformed, and missing required keys are each rejected by name. The
/// required keys are r, s, f_kind, f_p, T, nt, nx.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_string(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

/// Emits every resolved field; parse(serialize(c)) reproduces c exactly
/// (doubles are written with 17 significant digits).
std::string serialize_config(const ExperimentConfig& c);

std::string to_string(InitialDataKind kind);
InitialDataKind initial_kind_from_string(const std::string& s);

}  // namespace pno
