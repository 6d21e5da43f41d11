#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pno/config.hpp"
#include "pno/grid.hpp"
#include "pno/operator_model.hpp"

namespace pno {

/// One experiment's output: a fixed column set, pre-formatted rows (doubles
/// rendered with 17 significant digits at insertion), and the first failed
/// assertion if any. Reruns with the same config produce byte-identical rows;
/// only `timestamp` varies.
struct RunRecord {
    std::string experiment;
    std::string timestamp;
    std::string config_echo;  ///< serialized resolved configuration
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    bool passed = true;
    std::string failure;
};

/// Header comments (experiment, timestamp, pass state, config echo), then the
/// column header and rows. Cells are comma-sanitized on insertion.
void emit_csv(const RunRecord& rec, std::ostream& out);
void emit_csv_file(const RunRecord& rec, const std::string& path);

/// Crank-Nicolson in time, second-order centered differences in space, the
/// source term explicit, zero boundary. Runs on a refined grid whose nodes
/// contain the experiment nodes (nx_cn = 2 nx + 1, dt = dt_factor * dx_cn),
/// then samples back: shared nodes in space, linear interpolation in time.
/// Value blow-up past 1e6 reports instability and suggests a smaller
/// dt_factor.
Field oracle_solve(const std::vector<double>& u0, const ExperimentConfig& c, double dt_factor);

/// Rank selection, pointwise-network synthesis, and iteration count for one
/// eps, exactly as the end-to-end study performs them. Used by model export.
NeuralOperatorModel build_configured_model(const ExperimentConfig& c, double eps);

/// Linear problem (the nonlinearity forced to zero): the exact fixed-point
/// solver must reproduce the decaying first eigenmode.
RunRecord run_sanity(const ExperimentConfig& c);

/// Certified contraction study: per-iterate increments, ratios, distances to
/// the final iterate against the geometric a-priori bound, plus the seeded
/// two-sided contraction probe.
RunRecord run_picard_convergence(const ExperimentConfig& c);

/// Truncation errors along nested rank ladders for fourier and haar, plus the
/// spectral reference against the analytic eigenvalue tail.
RunRecord run_rank_study(const ExperimentConfig& c);

/// Full pipeline per eps: pointwise net, rank selection, iteration count,
/// weight-tied model, measured worst-case gap against the exact solver within
/// the weighted budget; operator/iteration equivalence per cell; depth/width
/// envelope columns; cross-check against the finite-difference oracle.
RunRecord run_end_to_end(const ExperimentConfig& c);

/// Window stitching: re-feeds terminal slices as new initial data on both
/// sides for kappa windows (stopping early if an end state leaves the data
/// ball), and checks the cumulative gap against the compounded
/// continuous-dependence budget.
RunRecord run_longtime(const ExperimentConfig& c);

/// Full-level haar kernel gate (min over the evaluation lattice >= -1e-12),
/// then sign preservation of the network on nonnegative data and on the
/// mirrored nonpositive family.
RunRecord run_positivity(const ExperimentConfig& c);

}  // namespace pno
