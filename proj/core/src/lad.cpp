#include "bundlechoice/lad.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace bundlechoice {

namespace {

// Required sign of (u1, u2, ub) for I+ per alternative; I- flips every sign.
// Weak inequalities: +1 means >= 0, -1 means <= 0.
constexpr int kPlusPattern[4][3] = {
    {-1, -1, -1},  // (0,0)
    {+1, -1, -1},  // (1,0)
    {-1, +1, -1},  // (0,1)
    {+1, +1, +1},  // (1,1)
};

bool matches(double u, int req) { return req > 0 ? u >= 0.0 : u <= 0.0; }

struct Covariates {
    Matrix z;                     // N x K combined (x1, x2, w, s)
    std::vector<bool> discrete;   // per column
};

Covariates combined_covariates(const ChoiceSample& sample) {
    const std::size_t n = sample.size();
    const std::size_t k1 = sample.k1(), k2 = sample.k2(), k3 = sample.k3();
    Covariates cov;
    cov.z = Matrix(n, 2 * k1 + k2 + k3);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t c = 0;
        for (std::size_t j = 0; j < k1; ++j) cov.z(i, c++) = sample.x1(i, j);
        for (std::size_t j = 0; j < k1; ++j) cov.z(i, c++) = sample.x2(i, j);
        for (std::size_t j = 0; j < k2; ++j) cov.z(i, c++) = sample.w(i, j);
        for (std::size_t j = 0; j < k3; ++j) cov.z(i, c++) = sample.s(i, j);
    }
    cov.discrete.insert(cov.discrete.end(), sample.discrete_x.begin(), sample.discrete_x.end());
    cov.discrete.insert(cov.discrete.end(), sample.discrete_x.begin(), sample.discrete_x.end());
    cov.discrete.insert(cov.discrete.end(), sample.discrete_w.begin(), sample.discrete_w.end());
    cov.discrete.insert(cov.discrete.end(), k3, false);
    return cov;
}

// Pairwise differences and CCP deltas laid out flat for the optimizer loop.
struct PairTable {
    std::size_t k1, k2, k3;
    std::size_t stride;
    std::vector<double> data;  // per pair: dx1, dx2, dw, ds, dp[4]

    double eval(const ModelParams& vartheta) const {
        const auto beta = vartheta.beta_full();
        const auto gamma = vartheta.gamma_full();
        const std::vector<double> zero(k3, 0.0);
        const std::vector<double>& rho_b =
            vartheta.rho_b ? *vartheta.rho_b : zero;

        double total = 0.0;
        for (std::size_t off = 0; off < data.size(); off += stride) {
            const double* d = data.data() + off;
            const double* dx1 = d;
            const double* dx2 = d + k1;
            const double* dw = d + 2 * k1;
            const double* ds = d + 2 * k1 + k2;
            const double* dp = d + 2 * k1 + k2 + k3;

            double u1 = 0.0, u2 = 0.0, ub = 0.0;
            for (std::size_t j = 0; j < k1; ++j) {
                u1 += dx1[j] * beta[j];
                u2 += dx2[j] * beta[j];
            }
            for (std::size_t j = 0; j < k2; ++j) ub += dw[j] * gamma[j];
            for (std::size_t j = 0; j < k3; ++j) {
                u1 += ds[j] * vartheta.rho1[j];
                u2 += ds[j] * vartheta.rho2[j];
                ub += ds[j] * rho_b[j];
            }

            for (int alt = 0; alt < kNumAlternatives; ++alt) {
                const auto [ip, im] = lad_indicators(u1, u2, ub, alt);
                if (ip == 0 && im == 0) continue;
                const double dpd = dp[alt];
                total += (std::abs(ip - dpd) + std::abs(im + dpd) - 1.0) * (ip + im);
            }
        }
        return total;
    }
};

PairTable build_pair_table(const ChoiceSample& sample, const CcpTable& ccp) {
    const std::size_t n = sample.size();
    const std::size_t k1 = sample.k1(), k2 = sample.k2(), k3 = sample.k3();
    PairTable table;
    table.k1 = k1;
    table.k2 = k2;
    table.k3 = k3;
    table.stride = 2 * k1 + k2 + k3 + 4;
    table.data.reserve(n * (n - 1) / 2 * table.stride);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t m = i + 1; m < n; ++m) {
            for (std::size_t j = 0; j < k1; ++j) table.data.push_back(sample.x1(i, j) - sample.x1(m, j));
            for (std::size_t j = 0; j < k1; ++j) table.data.push_back(sample.x2(i, j) - sample.x2(m, j));
            for (std::size_t j = 0; j < k2; ++j) table.data.push_back(sample.w(i, j) - sample.w(m, j));
            for (std::size_t j = 0; j < k3; ++j) table.data.push_back(sample.s(i, j) - sample.s(m, j));
            for (int alt = 0; alt < kNumAlternatives; ++alt)
                table.data.push_back(ccp.p(i, alt) - ccp.p(m, alt));
        }
    }
    return table;
}

LadEstimate run_lad_optimizer(const ChoiceSample& sample, const CcpTable& ccp,
                              const LadConfig& config) {
    const std::size_t k1 = sample.k1(), k2 = sample.k2(), k3 = sample.k3();
    const auto table = build_pair_table(sample, ccp);

    const std::size_t dim = (k1 - 1) + (k2 - 1) + 2 * k3 + (config.include_rho_b ? k3 : 0);
    DeConfig de = config.de;
    if (de.lower.size() != dim || de.upper.size() != dim) {
        de.lower.assign(dim, -10.0);
        de.upper.assign(dim, 10.0);
    }

    const auto result = de_minimize(
        [&](std::span<const double> packed) {
            return table.eval(unpack_lad_params(packed, k1, k2, k3, config.include_rho_b));
        },
        de);

    LadEstimate est;
    est.params = unpack_lad_params(result.argmin, k1, k2, k3, config.include_rho_b);
    est.criterion = result.value;
    est.ccp_zero_weight_fallbacks = ccp.zero_weight_fallbacks;
    est.ccp_clipped_rows = ccp.clipped_rows;
    return est;
}

}  // namespace

CcpTable nw_ccp(const ChoiceSample& sample, const LadConfig& config) {
    sample.validate();
    const std::size_t n = sample.size();
    if (n < 20) throw std::invalid_argument("nw_ccp: need N >= 20");
    config.nw_kernel.validate();
    const double lambda =
        config.aitchison_lambda < 0.0 ? 1.0 / static_cast<double>(n) : config.aitchison_lambda;
    if (lambda >= 1.0) throw std::invalid_argument("nw_ccp: lambda must be in [0,1)");

    const auto cov = combined_covariates(sample);
    const std::size_t cols = cov.z.cols();

    // bandwidths for continuous coordinates; zero-variance columns carry no
    // information and are skipped
    std::vector<double> bw(cols, 0.0);
    std::vector<int> categories(cols, 0);
    std::vector<bool> skip(cols, false);
    for (std::size_t j = 0; j < cols; ++j) {
        const auto col = cov.z.col(j);
        if (cov.discrete[j]) {
            std::set<double> levels(col.begin(), col.end());
            categories[j] = static_cast<int>(levels.size());
            if (categories[j] < 2) skip[j] = true;
        } else {
            const double sd = sample_std(col);
            if (sd > 0.0)
                bw[j] = bandwidth(BandwidthRule::SilvermanNW, n, config.silverman_c, sd);
            else
                skip[j] = true;
        }
    }

    // global outcome frequencies, the fallback when a row has no weight
    std::array<double, 4> global{};
    for (std::size_t i = 0; i < n; ++i) global[static_cast<std::size_t>(sample.choice[i])] += 1.0;
    for (auto& g : global) g /= static_cast<double>(n);

    CcpTable out;
    out.p = Matrix(n, 4);
    for (std::size_t i = 0; i < n; ++i) {
        double wsum = 0.0;
        std::array<double, 4> psum{};
        for (std::size_t m = 0; m < n; ++m) {
            if (config.leave_one_out && m == i) continue;
            double weight = 1.0;
            for (std::size_t j = 0; j < cols && weight != 0.0; ++j) {
                if (skip[j]) continue;
                const double diff = cov.z(i, j) - cov.z(m, j);
                if (cov.discrete[j]) {
                    weight *= diff == 0.0 ? 1.0 - lambda
                                          : lambda / static_cast<double>(categories[j] - 1);
                } else {
                    weight *= gaussian_kernel(diff / bw[j], config.nw_kernel) / bw[j];
                }
            }
            if (weight != 0.0) {
                wsum += weight;
                psum[static_cast<std::size_t>(sample.choice[m])] += weight;
            }
        }
        std::array<double, 4> p{};
        if (std::abs(wsum) < 1e-300) {
            p = global;
            ++out.zero_weight_fallbacks;
        } else {
            for (int a = 0; a < 4; ++a) p[a] = psum[a] / wsum;
        }
        // higher-order kernel weights can be negative; keep each estimate a
        // proper probability vector
        bool outside = false;
        for (double v : p)
            if (v < 0.0 || v > 1.0) outside = true;
        if (outside) {
            double total = 0.0;
            for (auto& v : p) {
                v = std::clamp(v, 0.0, 1.0);
                total += v;
            }
            if (total <= 0.0) {
                p = global;
                ++out.zero_weight_fallbacks;
            } else {
                for (auto& v : p) v /= total;
            }
            ++out.clipped_rows;
        }
        for (int a = 0; a < 4; ++a) out.p(i, a) = p[a];
    }
    return out;
}

std::pair<int, int> lad_indicators(double u1, double u2, double ub, int alt) {
    const int* req = kPlusPattern[alt];
    const int ip = matches(u1, req[0]) && matches(u2, req[1]) && matches(ub, req[2]) ? 1 : 0;
    const int im = matches(u1, -req[0]) && matches(u2, -req[1]) && matches(ub, -req[2]) ? 1 : 0;
    return {ip, im};
}

std::pair<int, int> lad_indicators(const ChoiceSample& sample, std::size_t i, std::size_t m,
                                   const ModelParams& vartheta, int alt) {
    const auto beta = vartheta.beta_full();
    const auto gamma = vartheta.gamma_full();
    double u1 = 0.0, u2 = 0.0, ub = 0.0;
    for (std::size_t j = 0; j < sample.k1(); ++j) {
        u1 += (sample.x1(i, j) - sample.x1(m, j)) * beta[j];
        u2 += (sample.x2(i, j) - sample.x2(m, j)) * beta[j];
    }
    for (std::size_t j = 0; j < sample.k2(); ++j)
        ub += (sample.w(i, j) - sample.w(m, j)) * gamma[j];
    for (std::size_t j = 0; j < sample.k3(); ++j) {
        const double ds = sample.s(i, j) - sample.s(m, j);
        u1 += ds * vartheta.rho1[j];
        u2 += ds * vartheta.rho2[j];
        if (vartheta.rho_b) ub += ds * (*vartheta.rho_b)[j];
    }
    return lad_indicators(u1, u2, ub, alt);
}

double lad_criterion(const ChoiceSample& sample, const CcpTable& ccp,
                     const ModelParams& vartheta) {
    if (ccp.p.rows() != sample.size())
        throw std::invalid_argument("lad_criterion: ccp/sample misaligned");
    return build_pair_table(sample, ccp).eval(vartheta);
}

LadEstimate estimate_lad(const ChoiceSample& sample, const LadConfig& config) {
    if (sample.size() < 50) throw std::invalid_argument("estimate_lad: need N >= 50");
    return run_lad_optimizer(sample, nw_ccp(sample, config), config);
}

LadEstimate estimate_lad_with_ccp(const ChoiceSample& sample, const CcpTable& ccp,
                                  const LadConfig& config) {
    if (ccp.p.rows() != sample.size())
        throw std::invalid_argument("estimate_lad_with_ccp: ccp/sample misaligned");
    return run_lad_optimizer(sample, ccp, config);
}

std::vector<double> pack_lad_params(const ModelParams& params, bool include_rho_b) {
    std::vector<double> packed;
    packed.insert(packed.end(), params.beta_free.begin(), params.beta_free.end());
    packed.insert(packed.end(), params.gamma_free.begin(), params.gamma_free.end());
    packed.insert(packed.end(), params.rho1.begin(), params.rho1.end());
    packed.insert(packed.end(), params.rho2.begin(), params.rho2.end());
    if (include_rho_b && params.rho_b)
        packed.insert(packed.end(), params.rho_b->begin(), params.rho_b->end());
    return packed;
}

ModelParams unpack_lad_params(std::span<const double> packed, std::size_t k1, std::size_t k2,
                              std::size_t k3, bool include_rho_b) {
    const std::size_t expected = (k1 - 1) + (k2 - 1) + 2 * k3 + (include_rho_b ? k3 : 0);
    if (packed.size() != expected)
        throw std::invalid_argument("unpack_lad_params: size mismatch");
    ModelParams p;
    std::size_t off = 0;
    p.beta_free.assign(packed.begin() + off, packed.begin() + off + (k1 - 1));
    off += k1 - 1;
    p.gamma_free.assign(packed.begin() + off, packed.begin() + off + (k2 - 1));
    off += k2 - 1;
    p.rho1.assign(packed.begin() + off, packed.begin() + off + k3);
    off += k3;
    p.rho2.assign(packed.begin() + off, packed.begin() + off + k3);
    off += k3;
    if (include_rho_b) p.rho_b = std::vector<double>(packed.begin() + off, packed.begin() + off + k3);
    return p;
}

}  // namespace bundlechoice
