#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bundlechoice {

/// Gaussian-family kernel of even order 2, 4 or 6. Orders above 2 are the
/// standard bias-reducing polynomial-times-phi construction; their moment
/// properties are checked numerically by kernel_moment.
struct KernelSpec {
    int order = 2;

    void validate() const;
};

/// K(u) for the given order:
///   order 2:  phi(u)
///   order 4:  (3 - u^2)/2 * phi(u)
///   order 6:  (15 - 10 u^2 + u^4)/8 * phi(u)
double gaussian_kernel(double u, const KernelSpec& spec);

/// Numerical check of the moment conditions: adaptive Simpson quadrature of
/// integral of u^power * K(u) over [-half_width, half_width].
double kernel_moment(const KernelSpec& spec, int power, double half_width = 10.0);

/// Product kernel weight for one pair of observations. Continuous
/// coordinates contribute h_l^{-1} K(diff_l / h_l) with their own per-variable
/// bandwidth; discrete coordinates contribute the exact-match indicator.
double product_weight(std::span<const double> diffs, std::span<const double> bandwidths,
                      const KernelSpec& spec, const std::vector<bool>& discrete_mask);

enum class BandwidthRule {
    MrcStep1,    // c * sigma_hat * N^{-1/8} * log(N)^{1/6}
    MrcStep2,    // c * sigma_hat * N^{-1/4} * log(N)^{1/4}
    PanelMs,     // c * sigma_hat * N^{-1/7} * log(N)^{-1/14}
    SilvermanNW  // c * sigma_hat * N^{-1/5}
};

/// Bandwidth for the given rule; log is the natural logarithm.
double bandwidth(BandwidthRule rule, std::size_t n, double c, double sigma_hat);

/// Sample standard deviation (N-1 denominator) of a column of levels.
double sample_std(std::span<const double> values);

}  // namespace bundlechoice
