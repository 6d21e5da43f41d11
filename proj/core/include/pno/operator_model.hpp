#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pno/expansion.hpp"
#include "pno/grid.hpp"
#include "pno/nonlinearity.hpp"
#include "pno/picard.hpp"

namespace pno {

/// Weight-tied two-channel operator network realizing J applications of the
/// truncated Picard map. Channel 1 carries the running iterate, channel 2
/// pins the free term (the propagated initial data), and every application
/// reuses the same kernel expansion and the same pointwise network:
///
///   v_1     = u~ + K.fnet(0)        u~ = initial_apply(u0), fnet(0) = 0
///   v_{j+1} = u~ + K.fnet(v_j)      j = 1 .. J-1
///   output  = v_J                   (channel-1 readout)
///
/// forward() executes the identical arithmetic as iterating the Picard step
/// with the same applicator and pointwise network, so the two agree bitwise.
struct NeuralOperatorModel {
    KernelExpansion expansion;  ///< shared integral kernel of every layer
    Fnet fnet;                  ///< one pointwise network, tied across layers
    int iterations = 1;         ///< J, number of Picard applications realized
    double carry_bound = 1.0;   ///< sup bound on carried channels; squared
                                ///< activations realize identity only inside it
};

NeuralOperatorModel build_weight_tied(const KernelExpansion& expansion, const Fnet& fnet,
                                      int iterations, double carry_bound);

/// Evaluates the network on initial data sampled at the grid's interior
/// x-nodes. The applicator must wrap the model's own expansion.
Field forward(const NeuralOperatorModel& model, const KernelApplicator& app,
              const std::vector<double>& u0);
Field forward(const NeuralOperatorModel& model, const SpaceTimeGrid& grid,
              const std::vector<double>& u0);

/// Max-abs gap between forward() and iterating the Picard step J times with
/// the same applicator and pointwise network. Zero up to roundoff by
/// construction; callers assert <= 1e-10.
double verify_equivalence(const NeuralOperatorModel& model, const ProblemSetup& setup,
                          const SpaceTimeGrid& grid, const std::vector<double>& u0);

/// One row of the tied layer inventory. `counted` rows enter the depth and
/// neuron tallies; channel-mix rows are the unactivated two-channel affine
/// recombinations between applications and are excluded, matching the
/// convention that depth counts the input map, every pointwise stack, and
/// the readout.
struct LayerInfo {
    std::string kind;  ///< "input" | "pointwise" | "channel-mix" | "readout"
    int d_in = 0;
    int d_out = 0;
    bool activated = false;
    bool counted = false;
};

/// Inventory of the tied structure: input (1 -> 2), then per application the
/// lifted pointwise stack (each hidden layer widened by the two carry units),
/// a channel mix back to width 2 between applications, and a width-1 readout.
std::vector<LayerInfo> layer_table(const NeuralOperatorModel& model);

/// Size accounting against the target envelopes
///   depth <= C log(1/eps)^2,   width <= C (1/eps) log(1/eps)^2.
struct ComplexityReport {
    int iterations = 0;     ///< J
    int fnet_depth = 0;     ///< hidden layers of the tied pointwise network
    long fnet_width = 0;    ///< hidden units of the tied pointwise network
    int depth = 0;          ///< counted rows; equals iterations * fnet_depth + 2
    long width = 0;         ///< neurons over counted rows
    std::size_t rank = 0;   ///< kernel expansion rank N
    double c_g = 0.0;       ///< kernel truncation error, filled by the caller
    double c_g_init = 0.0;  ///< initial-slice truncation error, caller-filled
    double eps = 0.0;
    double envelope_constant = 0.0;  ///< smallest C satisfying both envelopes
};

ComplexityReport complexity(const NeuralOperatorModel& model, double eps);

/// One layer of the generic layered operator evaluator,
///
///   out_c = act( sum_c' W[c][c'] in_c'
///              + sum_c' phi-reconstruct( K[c*d_in+c'] . pairings(in_c') )
///              + phi-reconstruct( bias[c] ) ),
///
/// with the activation skipped on the output layer. Kernel tables use the
/// expansion's coefficient layout; empty K entries and bias entries are zero
/// blocks. On `initial` layers the inputs are spatial functions: pairings use
/// the initial slice and a pointwise W entry acts on the input extended
/// constant in time.
struct OperatorLayer {
    int d_in = 0;
    int d_out = 0;
    bool activated = true;
    bool initial = false;
    std::vector<double> W;                  ///< d_out x d_in, row-major
    std::vector<std::vector<double>> K;     ///< d_out*d_in tables, empty = zero
    std::vector<std::vector<double>> bias;  ///< d_out phi-weight vectors, empty = zero
};

/// Explicit layered form: a shared expansion, an activation, and the layer
/// list. No weight tying is implied; to_generic() materializes the tied model
/// in this form for the structural round trip.
struct GenericOperatorModel {
    Activation act = Activation::relu;
    KernelExpansion expansion;
    std::vector<OperatorLayer> layers;
};

/// Runs the layer list on initial data u0 (interior x-nodes of `grid`). The
/// first layer must be `initial` with d_in = 1; the last must be unactivated
/// with d_out = 1.
Field generic_forward(const GenericOperatorModel& gm, const SpaceTimeGrid& grid,
                      const std::vector<double>& u0);

/// Rewrites the tied model as explicit layers. Affine channel recombinations
/// fuse into the neighboring activated layers (scaling the kernel tables), so
/// every layer except the output is activated. Identity is carried through
/// activations by a two-unit pair: (relu(x), relu(-x)) exactly, or shifted
/// squares exact for |x| <= carry_bound.
GenericOperatorModel to_generic(const NeuralOperatorModel& model);

/// Plain-text serialization: header, embedded expansion block, then the
/// pointwise network. Doubles are written with 17 significant digits, so an
/// export/import cycle reproduces forward() bit for bit. Carries the
/// evaluation-relevant content; knot diagnostics are not serialized.
void export_model(const NeuralOperatorModel& model, std::ostream& out);
std::string export_model_string(const NeuralOperatorModel& model);
NeuralOperatorModel import_model(std::istream& in);
NeuralOperatorModel import_model_string(const std::string& text);

}  // namespace pno
