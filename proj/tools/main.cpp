// Command-line front end: simulate the Monte Carlo designs, run the
// estimators on CSV samples, test for bundle effects, and drive full
// replication studies.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bundlechoice/dgp.hpp"
#include "bundlechoice/harness.hpp"
#include "bundlechoice/io.hpp"
#include "bundlechoice/lad.hpp"
#include "bundlechoice/lad_panel.hpp"
#include "bundlechoice/mrc.hpp"
#include "bundlechoice/rng.hpp"
#include "bundlechoice/ms.hpp"

namespace bc = bundlechoice;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitFailureCap = 3;

// JSON config support: flags given on the command line win; everything else
// may come from the --config file, keyed by the long option name.
class ConfigOverlay {
public:
    explicit ConfigOverlay(const std::string& path) {
        if (path.empty()) return;
        std::ifstream in(path);
        if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
        in >> doc_;
    }

    template <typename T>
    void apply(const CLI::App& cmd, const std::string& flag, T& value) const {
        if (doc_.is_null()) return;
        const std::string key = flag.substr(flag.find_first_not_of('-'));
        if (cmd.count(flag) == 0 && doc_.contains(key)) value = doc_[key].get<T>();
    }

private:
    nlohmann::json doc_;
};

ordered_json coef_json(const std::vector<double>& v) {
    ordered_json out = ordered_json::array();
    for (double x : v) out.push_back(x);
    return out;
}

ordered_json ci_json(const std::vector<std::pair<double, double>>& cis) {
    ordered_json out = ordered_json::array();
    for (const auto& [lo, hi] : cis) out.push_back(ordered_json::array({lo, hi}));
    return out;
}

void write_json(const ordered_json& doc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << doc.dump(2) << "\n";
}

struct SimulateArgs {
    int design = 1;
    std::size_t n = 1000;
    std::uint64_t seed = 1;
    bool zero_eta = false;
    std::string out;
    std::string config;
};

struct EstimateArgs {
    std::string input;
    double c1 = 1.0, c2 = 2.0, c3 = 2.0, c4 = 2.0;
    int bootstrap = 0;
    std::uint64_t seed = 1;
    std::string out;
    std::string loss = "ce";
    std::string config;
};

struct TestEtaArgs {
    std::string input;
    std::string estimator = "mrc";
    int b = 99;
    std::uint64_t seed = 1;
    std::string out;
    std::string config;
};

struct McArgs {
    std::string estimator = "mrc";
    int design = 1;
    std::size_t n = 250;
    int reps = 100;
    std::uint64_t seed = 1;
    int workers = 0;
    int bootstrap = 0;
    double c1 = 1.0, c2 = 2.0, c3 = 2.0, c4 = 2.0;
    bool zero_eta = false;
    std::string mad_mode = "truth";
    std::string out;
    std::string format = "csv";
    std::string config;
};

void run_simulate(const SimulateArgs& args) {
    if (args.design == 1 || args.design == 2) {
        const auto sample = bc::simulate_cross(args.design, args.n, args.seed, args.zero_eta);
        bc::write_cross_csv_file(sample, args.out);
    } else {
        const auto panel = bc::simulate_panel(args.design, args.n, args.seed, args.zero_eta);
        bc::write_panel_csv_file(panel, args.out);
    }
}

void run_estimate_mrc(const EstimateArgs& args) {
    const auto sample = bc::read_cross_csv_file(args.input);
    bc::MrcConfig config;
    config.c1 = args.c1;
    config.c2 = args.c2;
    config.de.seed = args.seed;
    const auto est = bc::estimate_mrc(sample, config);

    ordered_json doc;
    doc["estimates"]["beta"] = coef_json(est.beta_free);
    doc["estimates"]["gamma"] = coef_json(est.gamma_free);
    doc["estimates"]["criterion_beta"] = est.criterion_beta;
    doc["estimates"]["criterion_gamma"] = est.criterion_gamma;

    if (args.bootstrap > 0) {
        config.bootstrap_B = args.bootstrap;
        const auto boot = bc::bootstrap_mrc(sample, config, bc::derive_seed(args.seed, 0xb007));
        doc["cis"]["beta"] = ci_json(boot.ci_beta);
        doc["cis"]["gamma"] = ci_json(boot.ci_gamma);
        const auto test =
            bc::test_eta_cross(sample, est, config, args.bootstrap, bc::derive_seed(args.seed, 0xe7a));
        doc["test"]["stat"] = test.stat;
        doc["test"]["q05"] = test.q05;
        doc["test"]["bundle_effect_detected"] = test.bundle_effect_detected;
    }
    write_json(doc, args.out);
}

void run_estimate_lad(const EstimateArgs& args) {
    const auto sample = bc::read_cross_csv_file(args.input);
    bc::LadConfig config;
    config.de.seed = args.seed;
    const auto est = bc::estimate_lad(sample, config);

    ordered_json doc;
    doc["estimates"]["beta"] = coef_json(est.params.beta_free);
    doc["estimates"]["gamma"] = coef_json(est.params.gamma_free);
    doc["estimates"]["rho1"] = coef_json(est.params.rho1);
    doc["estimates"]["rho2"] = coef_json(est.params.rho2);
    doc["estimates"]["criterion"] = est.criterion;
    doc["diagnostics"]["ccp_zero_weight_fallbacks"] = est.ccp_zero_weight_fallbacks;
    doc["diagnostics"]["ccp_clipped_rows"] = est.ccp_clipped_rows;
    write_json(doc, args.out);
}

void run_estimate_ms(const EstimateArgs& args) {
    const auto panel = bc::read_panel_csv_file(args.input);
    bc::MsConfig config;
    config.c3 = args.c3;
    config.c4 = args.c4;
    config.de.seed = args.seed;
    const auto est = bc::estimate_ms(panel, config);

    ordered_json doc;
    doc["estimates"]["beta"] = coef_json(est.beta_free);
    doc["estimates"]["gamma"] = coef_json(est.gamma_free);
    doc["estimates"]["criterion_beta"] = est.criterion_beta;
    doc["estimates"]["criterion_gamma"] = est.criterion_gamma;

    if (args.bootstrap > 0) {
        config.bootstrap_B = args.bootstrap;
        const auto boot =
            bc::numerical_bootstrap_ms(panel, config, est, bc::derive_seed(args.seed, 0xb007));
        doc["cis"]["beta"] = ci_json(boot.ci_beta);
        doc["cis"]["gamma"] = ci_json(boot.ci_gamma);
    }
    write_json(doc, args.out);
}

void run_estimate_panel_lad(const EstimateArgs& args) {
    const auto panel = bc::read_panel_csv_file(args.input);
    bc::PanelLadConfig config;
    config.de.seed = args.seed;
    config.mlp.seed = bc::derive_seed(args.seed, 0xcc9);
    config.mlp.loss =
        args.loss == "sse" ? bc::MlpConfig::Loss::SquaredError : bc::MlpConfig::Loss::CrossEntropy;
    const auto est = bc::estimate_panel_lad(panel, config);

    ordered_json doc;
    doc["estimates"]["beta"] = coef_json(est.params.beta_free);
    doc["estimates"]["gamma"] = coef_json(est.params.gamma_free);
    doc["estimates"]["rho1"] = coef_json(est.params.rho1);
    doc["estimates"]["rho2"] = coef_json(est.params.rho2);
    doc["estimates"]["criterion"] = est.criterion;
    write_json(doc, args.out);
}

void run_test_eta(const TestEtaArgs& args) {
    ordered_json doc;
    if (args.estimator == "mrc") {
        const auto sample = bc::read_cross_csv_file(args.input);
        bc::MrcConfig config;
        config.de.seed = args.seed;
        const auto est = bc::estimate_mrc(sample, config);
        const auto test =
            bc::test_eta_cross(sample, est, config, args.b, bc::derive_seed(args.seed, 0xe7a));
        doc["estimates"]["beta"] = coef_json(est.beta_free);
        doc["estimates"]["gamma"] = coef_json(est.gamma_free);
        doc["stat"] = test.stat;
        doc["q05"] = test.q05;
        doc["bundle_effect_detected"] = test.bundle_effect_detected;
    } else if (args.estimator == "ms") {
        const auto panel = bc::read_panel_csv_file(args.input);
        bc::MsConfig config;
        config.de.seed = args.seed;
        const auto est = bc::estimate_ms(panel, config);
        const auto test = bc::test_eta_panel(panel, est.gamma_free, config, args.b,
                                             bc::derive_seed(args.seed, 0xe7a));
        doc["estimates"]["beta"] = coef_json(est.beta_free);
        doc["estimates"]["gamma"] = coef_json(est.gamma_free);
        doc["stat"] = test.stat;
        doc["q05"] = test.q05;
        doc["bundle_effect_detected"] = test.bundle_effect_detected;
    } else {
        throw CLI::ValidationError("--estimator", "must be mrc or ms");
    }
    write_json(doc, args.out);
}

void run_mc(const McArgs& args) {
    bc::RunConfig config;
    config.estimator = bc::estimator_from_name(args.estimator);
    config.design = args.design;
    config.n = args.n;
    config.reps = args.reps;
    config.seed = args.seed;
    config.workers = args.workers;
    if (args.bootstrap > 0) config.bootstrap_B = args.bootstrap;
    config.c1 = args.c1;
    config.c2 = args.c2;
    config.c3 = args.c3;
    config.c4 = args.c4;
    config.zero_eta = args.zero_eta;
    if (args.mad_mode == "median")
        config.mad_mode = bc::MadMode::AboutMedian;
    else if (args.mad_mode != "truth")
        throw CLI::ValidationError("--mad-mode", "must be truth or median");

    const auto result = bc::run_design(config);
    bc::export_summary(result.summary, result.coverage, args.out, args.format);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semiparametric estimators for bundle choice models"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Generate a design sample as CSV");
    sim_cmd->add_option("--design", sim.design, "Design id (1-4)");
    sim_cmd->add_option("--n", sim.n, "Sample size");
    sim_cmd->add_option("--seed", sim.seed, "RNG seed");
    sim_cmd->add_flag("--zero-eta", sim.zero_eta, "Drop the bundle term");
    sim_cmd->add_option("--out", sim.out, "Output CSV path")->required();
    sim_cmd->add_option("--config", sim.config, "JSON config file");

    EstimateArgs mrc_args;
    auto* mrc_cmd = app.add_subcommand("estimate-mrc", "Two-step localized MRC estimator");
    mrc_cmd->add_option("--input", mrc_args.input, "Input CSV")->required();
    mrc_cmd->add_option("--c1", mrc_args.c1, "Step-1 bandwidth constant");
    mrc_cmd->add_option("--c2", mrc_args.c2, "Step-2 bandwidth constant");
    mrc_cmd->add_option("--bootstrap", mrc_args.bootstrap, "Bootstrap draws B (0 = none)");
    mrc_cmd->add_option("--seed", mrc_args.seed, "RNG seed");
    mrc_cmd->add_option("--out", mrc_args.out, "Output JSON path")->required();
    mrc_cmd->add_option("--config", mrc_args.config, "JSON config file");

    EstimateArgs lad_args;
    auto* lad_cmd = app.add_subcommand("estimate-lad", "Multi-index LAD estimator");
    lad_cmd->add_option("--input", lad_args.input, "Input CSV")->required();
    lad_cmd->add_option("--seed", lad_args.seed, "RNG seed");
    lad_cmd->add_option("--out", lad_args.out, "Output JSON path")->required();
    lad_cmd->add_option("--config", lad_args.config, "JSON config file");

    EstimateArgs ms_args;
    auto* ms_cmd = app.add_subcommand("estimate-ms", "Panel localized maximum-score estimator");
    ms_cmd->add_option("--input", ms_args.input, "Input panel CSV")->required();
    ms_cmd->add_option("--c3", ms_args.c3, "Bandwidth constant");
    ms_cmd->add_option("--c4", ms_args.c4, "Numerical-bootstrap epsilon constant");
    ms_cmd->add_option("--bootstrap", ms_args.bootstrap, "Bootstrap draws B (0 = none)");
    ms_cmd->add_option("--seed", ms_args.seed, "RNG seed");
    ms_cmd->add_option("--out", ms_args.out, "Output JSON path")->required();
    ms_cmd->add_option("--config", ms_args.config, "JSON config file");

    EstimateArgs plad_args;
    auto* plad_cmd = app.add_subcommand("estimate-panel-lad", "Panel LAD with MLP first stage");
    plad_cmd->add_option("--input", plad_args.input, "Input panel CSV")->required();
    plad_cmd->add_option("--seed", plad_args.seed, "RNG seed");
    plad_cmd->add_option("--loss", plad_args.loss, "First-stage loss: ce or sse");
    plad_cmd->add_option("--out", plad_args.out, "Output JSON path")->required();
    plad_cmd->add_option("--config", plad_args.config, "JSON config file");

    TestEtaArgs eta_args;
    auto* eta_cmd = app.add_subcommand("test-eta", "Criterion-based bundle-effect test");
    eta_cmd->add_option("--input", eta_args.input, "Input CSV")->required();
    eta_cmd->add_option("--estimator", eta_args.estimator, "mrc or ms");
    eta_cmd->add_option("--b", eta_args.b, "Bootstrap draws");
    eta_cmd->add_option("--seed", eta_args.seed, "RNG seed");
    eta_cmd->add_option("--out", eta_args.out, "Output JSON path")->required();
    eta_cmd->add_option("--config", eta_args.config, "JSON config file");

    McArgs mc_args;
    auto* mc_cmd = app.add_subcommand("mc-run", "Replication study over a design");
    mc_cmd->add_option("--estimator", mc_args.estimator, "mrc, lad, ms or panel-lad");
    mc_cmd->add_option("--design", mc_args.design, "Design id (1-4)");
    mc_cmd->add_option("--n", mc_args.n, "Sample size");
    mc_cmd->add_option("--reps", mc_args.reps, "Replications");
    mc_cmd->add_option("--seed", mc_args.seed, "Base seed");
    mc_cmd->add_option("--workers", mc_args.workers, "Worker threads (0 = all cores)");
    mc_cmd->add_option("--bootstrap", mc_args.bootstrap, "Bootstrap draws B (0 = none)");
    mc_cmd->add_option("--c1", mc_args.c1, "MRC step-1 constant");
    mc_cmd->add_option("--c2", mc_args.c2, "MRC step-2 constant");
    mc_cmd->add_option("--c3", mc_args.c3, "MS bandwidth constant");
    mc_cmd->add_option("--c4", mc_args.c4, "Numerical-bootstrap constant");
    mc_cmd->add_flag("--zero-eta", mc_args.zero_eta, "Drop the bundle term");
    mc_cmd->add_option("--mad-mode", mc_args.mad_mode, "truth or median");
    mc_cmd->add_option("--out", mc_args.out, "Output path")->required();
    mc_cmd->add_option("--format", mc_args.format, "csv or json");
    mc_cmd->add_option("--config", mc_args.config, "JSON config file");

    try {
        app.parse(argc, argv);

        if (sim_cmd->parsed()) {
            ConfigOverlay overlay(sim.config);
            overlay.apply(*sim_cmd, "--design", sim.design);
            overlay.apply(*sim_cmd, "--n", sim.n);
            overlay.apply(*sim_cmd, "--seed", sim.seed);
            overlay.apply(*sim_cmd, "--zero-eta", sim.zero_eta);
            run_simulate(sim);
        } else if (mrc_cmd->parsed()) {
            ConfigOverlay overlay(mrc_args.config);
            overlay.apply(*mrc_cmd, "--c1", mrc_args.c1);
            overlay.apply(*mrc_cmd, "--c2", mrc_args.c2);
            overlay.apply(*mrc_cmd, "--bootstrap", mrc_args.bootstrap);
            overlay.apply(*mrc_cmd, "--seed", mrc_args.seed);
            run_estimate_mrc(mrc_args);
        } else if (lad_cmd->parsed()) {
            ConfigOverlay overlay(lad_args.config);
            overlay.apply(*lad_cmd, "--seed", lad_args.seed);
            run_estimate_lad(lad_args);
        } else if (ms_cmd->parsed()) {
            ConfigOverlay overlay(ms_args.config);
            overlay.apply(*ms_cmd, "--c3", ms_args.c3);
            overlay.apply(*ms_cmd, "--c4", ms_args.c4);
            overlay.apply(*ms_cmd, "--bootstrap", ms_args.bootstrap);
            overlay.apply(*ms_cmd, "--seed", ms_args.seed);
            run_estimate_ms(ms_args);
        } else if (plad_cmd->parsed()) {
            ConfigOverlay overlay(plad_args.config);
            overlay.apply(*plad_cmd, "--seed", plad_args.seed);
            overlay.apply(*plad_cmd, "--loss", plad_args.loss);
            run_estimate_panel_lad(plad_args);
        } else if (eta_cmd->parsed()) {
            ConfigOverlay overlay(eta_args.config);
            overlay.apply(*eta_cmd, "--estimator", eta_args.estimator);
            overlay.apply(*eta_cmd, "--b", eta_args.b);
            overlay.apply(*eta_cmd, "--seed", eta_args.seed);
            run_test_eta(eta_args);
        } else if (mc_cmd->parsed()) {
            ConfigOverlay overlay(mc_args.config);
            overlay.apply(*mc_cmd, "--estimator", mc_args.estimator);
            overlay.apply(*mc_cmd, "--design", mc_args.design);
            overlay.apply(*mc_cmd, "--n", mc_args.n);
            overlay.apply(*mc_cmd, "--reps", mc_args.reps);
            overlay.apply(*mc_cmd, "--seed", mc_args.seed);
            overlay.apply(*mc_cmd, "--workers", mc_args.workers);
            overlay.apply(*mc_cmd, "--bootstrap", mc_args.bootstrap);
            overlay.apply(*mc_cmd, "--c1", mc_args.c1);
            overlay.apply(*mc_cmd, "--c2", mc_args.c2);
            overlay.apply(*mc_cmd, "--c3", mc_args.c3);
            overlay.apply(*mc_cmd, "--c4", mc_args.c4);
            overlay.apply(*mc_cmd, "--zero-eta", mc_args.zero_eta);
            overlay.apply(*mc_cmd, "--mad-mode", mc_args.mad_mode);
            run_mc(mc_args);
        }
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    } catch (const bc::failure_cap_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailureCap;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
