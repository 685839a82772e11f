#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "bundlechoice/de.hpp"
#include "bundlechoice/stats.hpp"

namespace bundlechoice {

enum class EstimatorKind { Mrc, Lad, Ms, PanelLad };

EstimatorKind estimator_from_name(const std::string& name);
std::string estimator_name(EstimatorKind kind);

/// Thrown when more than 2% of replications fail; the CLI maps it to exit
/// code 3.
struct failure_cap_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    int design = 1;
    std::size_t n = 250;
    int reps = 100;
    std::uint64_t seed = 1;
    EstimatorKind estimator = EstimatorKind::Mrc;
    std::optional<int> bootstrap_B;  // enables the coverage summary
    double c1 = 1.0, c2 = 2.0, c3 = 2.0, c4 = 2.0;
    int workers = 0;  // 0 = all hardware threads
    bool zero_eta = false;
    MadMode mad_mode = MadMode::DeviationFromTruth;
    DeConfig de;  // per-replication seeds are derived from `seed`

    void validate() const;
};

struct RunResult {
    ReplicationSummary summary;
    std::optional<CoverageSummary> coverage;
};

/// Seed for replication k; identical whether the replication runs alone or
/// inside a batch.
std::uint64_t replication_seed(std::uint64_t base, int k);

/// Runs `reps` independent simulate -> estimate pipelines in parallel and
/// aggregates MBIAS / RMSE / MED / MAD (and coverage when bootstrapping).
RunResult run_design(const RunConfig& config);

}  // namespace bundlechoice
