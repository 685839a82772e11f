#include "bundlechoice/kernels.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace bundlechoice {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double phi(double u) { return kInvSqrt2Pi * std::exp(-0.5 * u * u); }

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace

void KernelSpec::validate() const {
    if (order != 2 && order != 4 && order != 6)
        throw std::invalid_argument("KernelSpec: order must be 2, 4 or 6");
}

double gaussian_kernel(double u, const KernelSpec& spec) {
    const double u2 = u * u;
    switch (spec.order) {
        case 2:
            return phi(u);
        case 4:
            return 0.5 * (3.0 - u2) * phi(u);
        case 6:
            return 0.125 * (15.0 - 10.0 * u2 + u2 * u2) * phi(u);
        default:
            throw std::invalid_argument("gaussian_kernel: unsupported order");
    }
}

double kernel_moment(const KernelSpec& spec, int power, double half_width) {
    spec.validate();
    if (power < 0) throw std::invalid_argument("kernel_moment: power must be >= 0");
    if (half_width < 8.0) throw std::invalid_argument("kernel_moment: half_width must be >= 8");
    auto f = [&](double u) { return std::pow(u, power) * gaussian_kernel(u, spec); };
    return integrate(f, -half_width, half_width, 1e-13);
}

double product_weight(std::span<const double> diffs, std::span<const double> bandwidths,
                      const KernelSpec& spec, const std::vector<bool>& discrete_mask) {
    if (diffs.size() != discrete_mask.size() || diffs.size() != bandwidths.size())
        throw std::invalid_argument("product_weight: length mismatch");
    double weight = 1.0;
    for (std::size_t l = 0; l < diffs.size(); ++l) {
        if (discrete_mask[l]) {
            if (diffs[l] != 0.0) return 0.0;
        } else {
            const double h = bandwidths[l];
            if (!(h > 0.0)) throw std::invalid_argument("product_weight: bandwidth must be > 0");
            weight *= gaussian_kernel(diffs[l] / h, spec) / h;
        }
    }
    return weight;
}

double bandwidth(BandwidthRule rule, std::size_t n, double c, double sigma_hat) {
    if (n < 2) throw std::invalid_argument("bandwidth: need N >= 2");
    if (!(c > 0.0)) throw std::invalid_argument("bandwidth: constant must be > 0");
    if (!(sigma_hat > 0.0)) throw std::invalid_argument("bandwidth: scale must be > 0");
    const double nn = static_cast<double>(n);
    const double ln = std::log(nn);
    switch (rule) {
        case BandwidthRule::MrcStep1:
            return c * sigma_hat * std::pow(nn, -1.0 / 8.0) * std::pow(ln, 1.0 / 6.0);
        case BandwidthRule::MrcStep2:
            return c * sigma_hat * std::pow(nn, -1.0 / 4.0) * std::pow(ln, 1.0 / 4.0);
        case BandwidthRule::PanelMs:
            return c * sigma_hat * std::pow(nn, -1.0 / 7.0) * std::pow(ln, -1.0 / 14.0);
        case BandwidthRule::SilvermanNW:
            return c * sigma_hat * std::pow(nn, -1.0 / 5.0);
    }
    throw std::invalid_argument("bandwidth: unknown rule");
}

double sample_std(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) throw std::invalid_argument("sample_std: need at least 2 values");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(n - 1));
}

}  // namespace bundlechoice
