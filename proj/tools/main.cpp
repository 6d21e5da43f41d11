/// Experiment harness. One subcommand per study; every run loads a key=value
/// config, applies the optional seed/mode overrides, executes, and writes the
/// CSV record to --out (stdout when omitted). Exit codes: 0 all assertions
/// passed, 1 an assertion failed, 2 configuration or usage error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "pno/config.hpp"
#include "pno/operator_model.hpp"
#include "pno/runners.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string mode;
};

void add_common(CLI::App* sub, CommonOpts& o) {
    sub->add_option("--config", o.config_path, "experiment configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", o.out_path, "output path (stdout when omitted)");
    sub->add_option("--seed", o.seed, "override the initial-data seed");
    sub->add_option("--mode", o.mode, "override the run mode")
        ->check(CLI::IsMember({"certified", "practical"}));
}

pno::ExperimentConfig load(const CommonOpts& o) {
    pno::ExperimentConfig c = pno::parse_config_file(o.config_path);
    bool dirty = false;
    if (o.seed_set) {
        c.u0_seed = o.seed;
        dirty = true;
    }
    if (!o.mode.empty()) {
        c.certified = o.mode == "certified";
        dirty = true;
    }
    if (dirty) c.validate();
    return c;
}

int finish(const pno::RunRecord& rec, const CommonOpts& o) {
    if (o.out_path.empty()) {
        pno::emit_csv(rec, std::cout);
    } else {
        pno::emit_csv_file(rec, o.out_path);
    }
    std::cerr << rec.experiment << ": " << (rec.passed ? "PASS" : "FAIL")
              << (rec.failure.empty() ? "" : " (" + rec.failure + ")") << '\n';
    return rec.passed ? 0 : 1;
}

int do_export(const CommonOpts& o) {
    const pno::ExperimentConfig c = load(o);
    const pno::NeuralOperatorModel m = pno::build_configured_model(c, c.eps_list.front());
    if (o.out_path.empty()) {
        pno::export_model(m, std::cout);
    } else {
        std::ofstream out(o.out_path);
        if (!out) throw std::runtime_error("cannot open " + o.out_path);
        pno::export_model(m, out);
    }
    std::cerr << "export-model: rank " << m.expansion.rank() << ", " << m.iterations
              << " applications\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fixed-point neural operator harness"};
    app.require_subcommand(1);
    CommonOpts o;

    CLI::App* sanity = app.add_subcommand("sanity", "linear eigenmode decay check");
    CLI::App* converge = app.add_subcommand("converge", "certified contraction study");
    CLI::App* rank = app.add_subcommand("rank", "kernel truncation ladder study");
    CLI::App* e2e = app.add_subcommand("e2e", "end-to-end gap against the exact solver");
    CLI::App* longtime = app.add_subcommand("longtime", "window-stitched long-time study");
    CLI::App* positivity = app.add_subcommand("positivity", "sign preservation suite");
    CLI::App* exportm = app.add_subcommand("export-model", "serialize the configured operator");
    for (CLI::App* sub : {sanity, converge, rank, e2e, longtime, positivity, exportm})
        add_common(sub, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    CLI::App* sub = app.get_subcommands().front();
    o.seed_set = sub->count("--seed") > 0;

    try {
        if (sanity->parsed()) return finish(pno::run_sanity(load(o)), o);
        if (converge->parsed()) return finish(pno::run_picard_convergence(load(o)), o);
        if (rank->parsed()) return finish(pno::run_rank_study(load(o)), o);
        if (e2e->parsed()) return finish(pno::run_end_to_end(load(o)), o);
        if (longtime->parsed()) return finish(pno::run_longtime(load(o)), o);
        if (positivity->parsed()) return finish(pno::run_positivity(load(o)), o);
        if (exportm->parsed()) return do_export(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
