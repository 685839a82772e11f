#include "bundlechoice/sign_criterion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bundlechoice/matrix.hpp"

namespace bundlechoice {

void SignCriterion::add_term(std::span<const double> diff, double coef) {
    if (diff.size() != dim_) throw std::invalid_argument("SignCriterion: diff size mismatch");
    if (coef == 0.0) return;
    coefs_.push_back(coef);
    diffs_.insert(diffs_.end(), diff.begin(), diff.end());
}

double SignCriterion::eval(std::span<const double> theta_full) const {
    if (theta_full.size() != dim_)
        throw std::invalid_argument("SignCriterion: coefficient size mismatch");
    double total = 0.0;
    const double* d = diffs_.data();
    for (std::size_t t = 0; t < coefs_.size(); ++t, d += dim_) {
        double index = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) index += d[j] * theta_full[j];
        total += coefs_[t] * sgn(index);
    }
    return total;
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("quantile: empty sample");
    std::sort(values.begin(), values.end());
    if (values.size() == 1) return values[0];
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace bundlechoice
