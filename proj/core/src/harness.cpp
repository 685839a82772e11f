#include "bundlechoice/harness.hpp"

#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "bundlechoice/dgp.hpp"
#include "bundlechoice/lad.hpp"
#include "bundlechoice/lad_panel.hpp"
#include "bundlechoice/mrc.hpp"
#include "bundlechoice/ms.hpp"
#include "bundlechoice/rng.hpp"

namespace bundlechoice {

namespace {

struct RepOutcome {
    bool ok = false;
    std::vector<double> errors;                         // estimate - truth per parameter
    std::vector<std::pair<double, double>> intervals;   // per parameter, when bootstrapping
};

bool is_panel_estimator(EstimatorKind kind) {
    return kind == EstimatorKind::Ms || kind == EstimatorKind::PanelLad;
}

std::vector<std::string> parameter_names(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::Mrc:
        case EstimatorKind::Ms:
            return {"beta", "gamma"};
        case EstimatorKind::Lad:
        case EstimatorKind::PanelLad:
            return {"beta", "gamma", "rho1", "rho2"};
    }
    throw std::invalid_argument("unknown estimator");
}

std::vector<double> truth_vector(EstimatorKind kind) {
    const auto truth = design_truth();
    std::vector<double> v;
    v.insert(v.end(), truth.beta_free.begin(), truth.beta_free.end());
    v.insert(v.end(), truth.gamma_free.begin(), truth.gamma_free.end());
    if (kind == EstimatorKind::Lad || kind == EstimatorKind::PanelLad) {
        v.insert(v.end(), truth.rho1.begin(), truth.rho1.end());
        v.insert(v.end(), truth.rho2.begin(), truth.rho2.end());
    }
    return v;
}

RepOutcome run_replication(const RunConfig& config, int k) {
    const std::uint64_t sample_seed = replication_seed(config.seed, k);
    const std::uint64_t work_seed = derive_seed(config.seed, 0x5eedULL + static_cast<std::uint64_t>(k));

    DeConfig de = config.de;
    de.seed = work_seed;

    RepOutcome out;
    const auto truth = truth_vector(config.estimator);
    std::vector<double> est;

    switch (config.estimator) {
        case EstimatorKind::Mrc: {
            const auto sample = simulate_cross(config.design, config.n, sample_seed, config.zero_eta);
            MrcConfig mrc;
            mrc.c1 = config.c1;
            mrc.c2 = config.c2;
            mrc.de = de;
            const auto point = estimate_mrc(sample, mrc);
            est.insert(est.end(), point.beta_free.begin(), point.beta_free.end());
            est.insert(est.end(), point.gamma_free.begin(), point.gamma_free.end());
            if (config.bootstrap_B) {
                mrc.bootstrap_B = *config.bootstrap_B;
                const auto boot = bootstrap_mrc(sample, mrc, derive_seed(work_seed, 0xb007));
                out.intervals.insert(out.intervals.end(), boot.ci_beta.begin(), boot.ci_beta.end());
                out.intervals.insert(out.intervals.end(), boot.ci_gamma.begin(), boot.ci_gamma.end());
            }
            break;
        }
        case EstimatorKind::Lad: {
            const auto sample = simulate_cross(config.design, config.n, sample_seed, config.zero_eta);
            LadConfig lad;
            lad.de = de;
            const auto point = estimate_lad(sample, lad);
            est = pack_lad_params(point.params, false);
            break;
        }
        case EstimatorKind::Ms: {
            const auto panel = simulate_panel(config.design, config.n, sample_seed, config.zero_eta);
            MsConfig ms;
            ms.c3 = config.c3;
            ms.c4 = config.c4;
            ms.de = de;
            const auto point = estimate_ms(panel, ms);
            est.insert(est.end(), point.beta_free.begin(), point.beta_free.end());
            est.insert(est.end(), point.gamma_free.begin(), point.gamma_free.end());
            if (config.bootstrap_B) {
                ms.bootstrap_B = *config.bootstrap_B;
                const auto boot =
                    numerical_bootstrap_ms(panel, ms, point, derive_seed(work_seed, 0xb007));
                out.intervals.insert(out.intervals.end(), boot.ci_beta.begin(), boot.ci_beta.end());
                out.intervals.insert(out.intervals.end(), boot.ci_gamma.begin(), boot.ci_gamma.end());
            }
            break;
        }
        case EstimatorKind::PanelLad: {
            const auto panel = simulate_panel(config.design, config.n, sample_seed, config.zero_eta);
            PanelLadConfig lad;
            lad.de = de;
            lad.mlp.seed = derive_seed(work_seed, 0xcc9);
            const auto point = estimate_panel_lad(panel, lad);
            est = pack_lad_params(point.params, false);
            break;
        }
    }

    out.errors.resize(truth.size());
    for (std::size_t p = 0; p < truth.size(); ++p) out.errors[p] = est[p] - truth[p];
    out.ok = true;
    return out;
}

}  // namespace

EstimatorKind estimator_from_name(const std::string& name) {
    if (name == "mrc") return EstimatorKind::Mrc;
    if (name == "lad") return EstimatorKind::Lad;
    if (name == "ms") return EstimatorKind::Ms;
    if (name == "panel-lad") return EstimatorKind::PanelLad;
    throw std::invalid_argument("unknown estimator: " + name);
}

std::string estimator_name(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::Mrc: return "mrc";
        case EstimatorKind::Lad: return "lad";
        case EstimatorKind::Ms: return "ms";
        case EstimatorKind::PanelLad: return "panel-lad";
    }
    return "?";
}

void RunConfig::validate() const {
    if (reps < 1) throw std::invalid_argument("RunConfig: reps must be >= 1");
    const bool panel = is_panel_estimator(estimator);
    if (panel && design != 3 && design != 4)
        throw std::invalid_argument("RunConfig: panel estimators need design 3 or 4");
    if (!panel && design != 1 && design != 2)
        throw std::invalid_argument("RunConfig: cross-sectional estimators need design 1 or 2");
    if (bootstrap_B && *bootstrap_B < 10)
        throw std::invalid_argument("RunConfig: bootstrap B must be >= 10");
}

std::uint64_t replication_seed(std::uint64_t base, int k) {
    return derive_seed(base, static_cast<std::uint64_t>(k));
}

RunResult run_design(const RunConfig& config) {
    config.validate();

    std::vector<RepOutcome> outcomes(static_cast<std::size_t>(config.reps));
    std::atomic<int> next{0};
    const unsigned hw = std::thread::hardware_concurrency();
    const int workers =
        std::max(1, config.workers > 0 ? config.workers : static_cast<int>(hw ? hw : 1));

    auto worker = [&]() {
        for (;;) {
            const int k = next.fetch_add(1);
            if (k >= config.reps) return;
            try {
                outcomes[static_cast<std::size_t>(k)] = run_replication(config, k);
            } catch (const std::exception&) {
                outcomes[static_cast<std::size_t>(k)].ok = false;
            }
        }
    };

    if (workers == 1 || config.reps == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<std::vector<double>> errors;
    std::vector<std::vector<std::pair<double, double>>> intervals;
    int failures = 0;
    for (const auto& o : outcomes) {
        if (!o.ok) {
            ++failures;
            continue;
        }
        errors.push_back(o.errors);
        if (config.bootstrap_B) intervals.push_back(o.intervals);
    }
    if (static_cast<double>(failures) > 0.02 * static_cast<double>(config.reps))
        throw failure_cap_error("failure cap exceeded: " + std::to_string(failures) + " of " +
                                std::to_string(config.reps) + " replications failed");

    const auto names = parameter_names(config.estimator);
    RunResult result;
    result.summary = summarize_errors(names, errors, failures, config.mad_mode);

    if (config.bootstrap_B) {
        const auto truth = truth_vector(config.estimator);
        CoverageSummary cov;
        cov.bootstrap_B = *config.bootstrap_B;
        for (std::size_t p = 0; p < names.size(); ++p) {
            CoverageRow row;
            row.parameter = names[p];
            double covered = 0.0, length = 0.0;
            for (const auto& ivs : intervals) {
                const auto& [lo, hi] = ivs[p];
                if (lo <= truth[p] && truth[p] <= hi) covered += 1.0;
                length += hi - lo;
            }
            const double m = static_cast<double>(intervals.size());
            row.coverage = covered / m;
            row.mean_length = length / m;
            cov.rows.push_back(row);
        }
        result.coverage = cov;
    }
    return result;
}

}  // namespace bundlechoice
