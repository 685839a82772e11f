#pragma once

#include <string>
#include <vector>

namespace bundlechoice {

/// MAD is the median absolute deviation from the truth by default; the
/// about-median variant is exposed for comparison.
enum class MadMode { DeviationFromTruth, AboutMedian };

struct SummaryRow {
    std::string parameter;
    double mbias = 0.0;
    double rmse = 0.0;
    double med = 0.0;
    double mad = 0.0;
};

struct ReplicationSummary {
    std::vector<SummaryRow> rows;
    int reps = 0;
    int failures = 0;
};

struct CoverageRow {
    std::string parameter;
    double coverage = 0.0;
    double mean_length = 0.0;
};

struct CoverageSummary {
    std::vector<CoverageRow> rows;
    int bootstrap_B = 0;
};

double median(std::vector<double> values);

/// errors[r][p] = estimate - truth for replication r, parameter p.
ReplicationSummary summarize_errors(const std::vector<std::string>& names,
                                    const std::vector<std::vector<double>>& errors, int failures,
                                    MadMode mode = MadMode::DeviationFromTruth);

}  // namespace bundlechoice
