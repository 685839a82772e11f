#include "bundlechoice/mrc.hpp"

#include <cmath>
#include <stdexcept>

#include "bundlechoice/rng.hpp"

namespace bundlechoice {

namespace {

double sign_flip(int d) { return d == 0 ? 1.0 : -1.0; }  // (-1)^d

std::vector<double> full_coef(std::span<const double> free) {
    std::vector<double> out{1.0};
    out.insert(out.end(), free.begin(), free.end());
    return out;
}

DeConfig de_for_step(const DeConfig& base, std::size_t dim, std::uint64_t step_tag) {
    DeConfig cfg = base;
    if (cfg.lower.size() != dim || cfg.upper.size() != dim) {
        cfg.lower.assign(dim, -10.0);
        cfg.upper.assign(dim, 10.0);
    }
    cfg.seed = derive_seed(base.seed, step_tag);
    return cfg;
}

void check_kernel_orders(const ChoiceSample& sample, const MrcConfig& config) {
    config.kernel_step1.validate();
    config.kernel_step2.validate();
    const auto k1 = sample.k1();
    const auto k2 = sample.k2();
    if (config.kernel_step1.order <= static_cast<int>(k1 + k2))
        throw std::invalid_argument("MrcConfig: step-1 kernel order must exceed k1+k2");
    if (config.kernel_step2.order <= 2)
        throw std::invalid_argument("MrcConfig: step-2 kernel order must exceed 2");
}

}  // namespace

MrcBandwidths mrc_step1_bandwidths(const ChoiceSample& sample, double c1) {
    const std::size_t n = sample.size();
    MrcBandwidths h;
    auto fill = [&](const Matrix& block, const std::vector<bool>& mask, std::vector<double>& out) {
        for (std::size_t j = 0; j < block.cols(); ++j) {
            if (mask[j]) {
                out.push_back(1.0);  // placeholder; exact matching ignores it
            } else {
                const auto col = block.col(j);
                out.push_back(bandwidth(BandwidthRule::MrcStep1, n, c1, sample_std(col)));
            }
        }
    };
    fill(sample.x1, sample.discrete_x, h.x1);
    fill(sample.x2, sample.discrete_x, h.x2);
    fill(sample.w, sample.discrete_w, h.w);
    return h;
}

SignCriterion build_mrc_beta_criterion(const ChoiceSample& sample, const MrcBandwidths& h,
                                       const KernelSpec& kernel) {
    const std::size_t n = sample.size();
    const std::size_t k1 = sample.k1();
    const std::size_t k2 = sample.k2();
    SignCriterion crit(k1);

    std::vector<double> block(k1 + k2);
    std::vector<double> bw(k1 + k2);
    std::vector<bool> mask(k1 + k2);
    std::vector<double> diff(k1);

    for (std::size_t j = 0; j < k2; ++j) mask[k1 + j] = sample.discrete_w[j];
    for (std::size_t j = 0; j < k2; ++j) bw[k1 + j] = h.w[j];
    for (std::size_t j = 0; j < k1; ++j) mask[j] = sample.discrete_x[j];

    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t m = i + 1; m < n; ++m) {
            // sum over d of (Y_md - Y_id) (-1)^{d_k} collapses to a sign difference
            const double s1 = sign_flip(alt_d1(sample.choice[m])) - sign_flip(alt_d1(sample.choice[i]));
            const double s2 = sign_flip(alt_d2(sample.choice[m])) - sign_flip(alt_d2(sample.choice[i]));
            if (s1 == 0.0 && s2 == 0.0) continue;

            for (std::size_t j = 0; j < k2; ++j) block[k1 + j] = sample.w(i, j) - sample.w(m, j);

            if (s1 != 0.0) {
                for (std::size_t j = 0; j < k1; ++j) {
                    block[j] = sample.x2(i, j) - sample.x2(m, j);
                    bw[j] = h.x2[j];
                }
                const double weight = product_weight(block, bw, kernel, mask);
                if (weight != 0.0) {
                    for (std::size_t j = 0; j < k1; ++j) diff[j] = sample.x1(i, j) - sample.x1(m, j);
                    crit.add_term(diff, weight * s1);
                }
            }
            if (s2 != 0.0) {
                for (std::size_t j = 0; j < k1; ++j) {
                    block[j] = sample.x1(i, j) - sample.x1(m, j);
                    bw[j] = h.x1[j];
                }
                const double weight = product_weight(block, bw, kernel, mask);
                if (weight != 0.0) {
                    for (std::size_t j = 0; j < k1; ++j) diff[j] = sample.x2(i, j) - sample.x2(m, j);
                    crit.add_term(diff, weight * s2);
                }
            }
        }
    }
    return crit;
}

double criterion_beta(const ChoiceSample& sample, std::span<const double> b_free,
                      const MrcBandwidths& h, const KernelSpec& kernel) {
    if (b_free.size() + 1 != sample.k1())
        throw std::invalid_argument("criterion_beta: coefficient dimension mismatch");
    const auto crit = build_mrc_beta_criterion(sample, h, kernel);
    return crit.eval(full_coef(b_free));
}

SignCriterion build_mrc_gamma_criterion(const ChoiceSample& sample,
                                        std::span<const double> beta_hat_free, double sigma,
                                        const KernelSpec& kernel) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gamma criterion: sigma must be > 0");
    const std::size_t n = sample.size();
    const std::size_t k2 = sample.k2();
    const auto beta = full_coef(beta_hat_free);

    std::vector<double> v1(n), v2(n);
    for (std::size_t i = 0; i < n; ++i) {
        v1[i] = dot(sample.x1.row(i), beta);
        v2[i] = dot(sample.x2.row(i), beta);
    }

    SignCriterion crit(k2);
    std::vector<double> diff(k2);
    const double inv_sigma2 = 1.0 / (sigma * sigma);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t m = i + 1; m < n; ++m) {
            const double ydiff = sample.y(i, 3) - sample.y(m, 3);
            if (ydiff == 0.0) continue;
            const double weight = inv_sigma2 * gaussian_kernel((v1[i] - v1[m]) / sigma, kernel) *
                                  gaussian_kernel((v2[i] - v2[m]) / sigma, kernel);
            if (weight == 0.0) continue;
            for (std::size_t j = 0; j < k2; ++j) diff[j] = sample.w(i, j) - sample.w(m, j);
            crit.add_term(diff, weight * ydiff);
        }
    }
    return crit;
}

double criterion_gamma(const ChoiceSample& sample, std::span<const double> r_free,
                       std::span<const double> beta_hat_free, double sigma,
                       const KernelSpec& kernel) {
    if (r_free.size() + 1 != sample.k2())
        throw std::invalid_argument("criterion_gamma: coefficient dimension mismatch");
    const auto crit = build_mrc_gamma_criterion(sample, beta_hat_free, sigma, kernel);
    return crit.eval(full_coef(r_free));
}

MrcEstimate estimate_mrc(const ChoiceSample& sample, const MrcConfig& config) {
    sample.validate();
    if (sample.size() < 10) throw std::invalid_argument("estimate_mrc: need N >= 10");
    check_kernel_orders(sample, config);

    MrcEstimate est;

    // step 1: rank by the x-index, matching on the other covariates
    const auto h = mrc_step1_bandwidths(sample, config.c1);
    const auto crit_beta = build_mrc_beta_criterion(sample, h, config.kernel_step1);
    const DeConfig de1 = de_for_step(config.de, sample.k1() - 1, 1);
    const auto res1 = de_minimize(
        [&](std::span<const double> b) { return -crit_beta.eval(full_coef(b)); }, de1);
    est.beta_free = res1.argmin;
    est.criterion_beta = -res1.value;

    // step 2: rank the bundle outcome, matching on the fitted indices
    const auto beta = full_coef(est.beta_free);
    std::vector<double> indices;
    indices.reserve(2 * sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) {
        indices.push_back(dot(sample.x1.row(i), beta));
        indices.push_back(dot(sample.x2.row(i), beta));
    }
    est.sigma_step2 =
        bandwidth(BandwidthRule::MrcStep2, sample.size(), config.c2, sample_std(indices));

    const auto crit_gamma =
        build_mrc_gamma_criterion(sample, est.beta_free, est.sigma_step2, config.kernel_step2);
    const DeConfig de2 = de_for_step(config.de, sample.k2() - 1, 2);
    const auto res2 = de_minimize(
        [&](std::span<const double> r) { return -crit_gamma.eval(full_coef(r)); }, de2);
    est.gamma_free = res2.argmin;
    est.criterion_gamma = -res2.value;
    return est;
}

ChoiceSample resample(const ChoiceSample& sample, std::span<const std::size_t> indices) {
    ChoiceSample out;
    const std::size_t n = indices.size();
    out.x1 = Matrix(n, sample.k1());
    out.x2 = Matrix(n, sample.k1());
    out.w = Matrix(n, sample.k2());
    out.s = Matrix(n, sample.k3());
    out.choice.resize(n);
    out.discrete_x = sample.discrete_x;
    out.discrete_w = sample.discrete_w;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = indices[i];
        for (std::size_t j = 0; j < sample.k1(); ++j) {
            out.x1(i, j) = sample.x1(src, j);
            out.x2(i, j) = sample.x2(src, j);
        }
        for (std::size_t j = 0; j < sample.k2(); ++j) out.w(i, j) = sample.w(src, j);
        for (std::size_t j = 0; j < sample.k3(); ++j) out.s(i, j) = sample.s(src, j);
        out.choice[i] = sample.choice[src];
    }
    return out;
}

MrcBootstrap bootstrap_mrc(const ChoiceSample& sample, const MrcConfig& config,
                           std::uint64_t seed) {
    if (config.bootstrap_B < 10) throw std::invalid_argument("bootstrap_mrc: need B >= 10");
    const std::size_t n = sample.size();
    MrcBootstrap boot;

    for (int b = 0; b < config.bootstrap_B; ++b) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
        std::vector<std::size_t> idx(n);
        for (auto& v : idx) v = rng.next_index(n);

        MrcConfig draw_config = config;
        draw_config.de.seed = derive_seed(seed, 1000003ULL + static_cast<std::uint64_t>(b));
        const auto est = estimate_mrc(resample(sample, idx), draw_config);
        boot.beta_draws.push_back(est.beta_free);
        boot.gamma_draws.push_back(est.gamma_free);
    }

    auto cis = [&](const std::vector<std::vector<double>>& draws) {
        std::vector<std::pair<double, double>> out;
        if (draws.empty()) return out;
        for (std::size_t j = 0; j < draws[0].size(); ++j) {
            std::vector<double> column;
            column.reserve(draws.size());
            for (const auto& d : draws) column.push_back(d[j]);
            out.emplace_back(quantile(column, 0.025), quantile(column, 0.975));
        }
        return out;
    };
    boot.ci_beta = cis(boot.beta_draws);
    boot.ci_gamma = cis(boot.gamma_draws);
    return boot;
}

double eta_stat_cross(const ChoiceSample& data, const MrcEstimate& estimate,
                      const MrcConfig& config) {
    const std::size_t n = data.size();
    // the unordered-pair criterion doubled and divided by N(N-1); the
    // sigma^{-2} factor already lives inside the pair weights
    const double norm = 2.0 / (static_cast<double>(n) * static_cast<double>(n - 1));
    const auto crit = build_mrc_gamma_criterion(data, estimate.beta_free, estimate.sigma_step2,
                                                config.kernel_step2);
    return norm * crit.eval(full_coef(estimate.gamma_free));
}

TestResult test_eta_cross(const ChoiceSample& sample, const MrcEstimate& estimate,
                          const MrcConfig& config, int B, std::uint64_t seed) {
    const std::size_t n = sample.size();

    auto stat_on = [&](const ChoiceSample& data) { return eta_stat_cross(data, estimate, config); };

    TestResult result;
    result.stat = stat_on(sample);

    std::vector<double> boot_stats;
    boot_stats.reserve(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
        std::vector<std::size_t> idx(n);
        for (auto& v : idx) v = rng.next_index(n);
        boot_stats.push_back(stat_on(resample(sample, idx)));
    }
    result.q05 = quantile(boot_stats, 0.05);
    result.bundle_effect_detected = result.q05 > 0.0;
    return result;
}

}  // namespace bundlechoice
