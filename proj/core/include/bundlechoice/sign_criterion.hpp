#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bundlechoice {

/// Sum of coef * sgn(diff . theta) terms. All rank/score criteria in this
/// library reduce to this form once the kernel weights (which do not depend
/// on the coefficient vector) are folded into per-term coefficients, so a
/// criterion is assembled once per sample and then evaluated cheaply inside
/// the optimizer loop.
class SignCriterion {
public:
    explicit SignCriterion(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const { return dim_; }
    std::size_t terms() const { return coefs_.size(); }

    void add_term(std::span<const double> diff, double coef);

    double eval(std::span<const double> theta_full) const;

private:
    std::size_t dim_;
    std::vector<double> coefs_;
    std::vector<double> diffs_;  // term-major, dim_ entries per term
};

/// Linear-interpolation quantile of an unsorted sample (copies and sorts).
double quantile(std::vector<double> values, double p);

}  // namespace bundlechoice
