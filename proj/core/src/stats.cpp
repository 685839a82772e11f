#include "bundlechoice/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bundlechoice {

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

ReplicationSummary summarize_errors(const std::vector<std::string>& names,
                                    const std::vector<std::vector<double>>& errors, int failures,
                                    MadMode mode) {
    if (errors.empty()) throw std::invalid_argument("summarize_errors: no replications");
    ReplicationSummary summary;
    summary.reps = static_cast<int>(errors.size());
    summary.failures = failures;

    for (std::size_t p = 0; p < names.size(); ++p) {
        std::vector<double> err;
        err.reserve(errors.size());
        for (const auto& row : errors) err.push_back(row[p]);

        SummaryRow out;
        out.parameter = names[p];
        double sum = 0.0, sumsq = 0.0;
        for (double e : err) {
            sum += e;
            sumsq += e * e;
        }
        out.mbias = sum / static_cast<double>(err.size());
        out.rmse = std::sqrt(sumsq / static_cast<double>(err.size()));
        out.med = median(err);

        std::vector<double> dev = err;
        if (mode == MadMode::AboutMedian)
            for (auto& e : dev) e = std::abs(e - out.med);
        else
            for (auto& e : dev) e = std::abs(e);
        out.mad = median(std::move(dev));
        summary.rows.push_back(out);
    }
    return summary;
}

}  // namespace bundlechoice
