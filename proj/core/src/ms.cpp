#include "bundlechoice/ms.hpp"

#include <cmath>
#include <stdexcept>

#include "bundlechoice/rng.hpp"

namespace bundlechoice {

namespace {

double sign_flip(int d) { return d == 0 ? 1.0 : -1.0; }

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

}  // namespace

MsBandwidths ms_bandwidths(const PanelChoiceSample& panel, double c3) {
    panel.validate();
    const std::size_t n = panel.n_agents;
    MsBandwidths h;
    auto fill = [&](const std::vector<Matrix>& block, const std::vector<bool>& mask,
                    std::vector<double>& out) {
        const std::size_t k = block[0].cols();
        for (std::size_t j = 0; j < k; ++j) {
            if (mask[j]) {
                out.push_back(1.0);
                continue;
            }
            std::vector<double> diffs;
            for (std::size_t t = 1; t < panel.periods; ++t)
                for (std::size_t s = 0; s < t; ++s)
                    for (std::size_t i = 0; i < n; ++i)
                        diffs.push_back(block[t](i, j) - block[s](i, j));
            out.push_back(bandwidth(BandwidthRule::PanelMs, n, c3, sample_std(diffs)));
        }
    };
    fill(panel.x1, panel.discrete_x, h.x1);
    fill(panel.x2, panel.discrete_x, h.x2);
    fill(panel.w, panel.discrete_w, h.w);
    return h;
}

SignCriterion build_ms_beta_criterion(const PanelChoiceSample& panel, const MsBandwidths& h,
                                      const KernelSpec& kernel) {
    const std::size_t k1 = panel.k1();
    const std::size_t k2 = panel.k2();
    SignCriterion crit(k1);

    std::vector<double> block(k1 + k2);
    std::vector<double> bw(k1 + k2);
    std::vector<bool> mask(k1 + k2);
    std::vector<double> diff(k1);
    for (std::size_t j = 0; j < k1; ++j) mask[j] = panel.discrete_x[j];
    for (std::size_t j = 0; j < k2; ++j) {
        mask[k1 + j] = panel.discrete_w[j];
        bw[k1 + j] = h.w[j];
    }

    for (std::size_t i = 0; i < panel.n_agents; ++i) {
        for (std::size_t t = 1; t < panel.periods; ++t) {
            for (std::size_t s = 0; s < t; ++s) {
                const int ct = panel.choice[t][i];
                const int cs = panel.choice[s][i];
                if (ct == cs) continue;  // non-switchers contribute nothing
                const double s1 = sign_flip(alt_d1(cs)) - sign_flip(alt_d1(ct));
                const double s2 = sign_flip(alt_d2(cs)) - sign_flip(alt_d2(ct));

                for (std::size_t j = 0; j < k2; ++j)
                    block[k1 + j] = panel.w[t](i, j) - panel.w[s](i, j);

                if (s1 != 0.0) {
                    for (std::size_t j = 0; j < k1; ++j) {
                        block[j] = panel.x2[t](i, j) - panel.x2[s](i, j);
                        bw[j] = h.x2[j];
                    }
                    const double weight = product_weight(block, bw, kernel, mask);
                    if (weight != 0.0) {
                        for (std::size_t j = 0; j < k1; ++j)
                            diff[j] = panel.x1[t](i, j) - panel.x1[s](i, j);
                        crit.add_term(diff, weight * s1);
                    }
                }
                if (s2 != 0.0) {
                    for (std::size_t j = 0; j < k1; ++j) {
                        block[j] = panel.x1[t](i, j) - panel.x1[s](i, j);
                        bw[j] = h.x1[j];
                    }
                    const double weight = product_weight(block, bw, kernel, mask);
                    if (weight != 0.0) {
                        for (std::size_t j = 0; j < k1; ++j)
                            diff[j] = panel.x2[t](i, j) - panel.x2[s](i, j);
                        crit.add_term(diff, weight * s2);
                    }
                }
            }
        }
    }
    return crit;
}

SignCriterion build_ms_gamma_criterion(const PanelChoiceSample& panel, const MsBandwidths& h,
                                       const KernelSpec& kernel) {
    const std::size_t k1 = panel.k1();
    const std::size_t k2 = panel.k2();
    SignCriterion crit(k2);

    std::vector<double> block(2 * k1);
    std::vector<double> bw(2 * k1);
    std::vector<bool> mask(2 * k1);
    std::vector<double> diff(k2);
    for (std::size_t j = 0; j < k1; ++j) {
        mask[j] = panel.discrete_x[j];
        mask[k1 + j] = panel.discrete_x[j];
        bw[j] = h.x1[j];
        bw[k1 + j] = h.x2[j];
    }

    for (std::size_t i = 0; i < panel.n_agents; ++i) {
        for (std::size_t t = 1; t < panel.periods; ++t) {
            for (std::size_t s = 0; s < t; ++s) {
                const double ydiff = panel.y(t, i, 3) - panel.y(s, i, 3);
                if (ydiff == 0.0) continue;
                for (std::size_t j = 0; j < k1; ++j) {
                    block[j] = panel.x1[t](i, j) - panel.x1[s](i, j);
                    block[k1 + j] = panel.x2[t](i, j) - panel.x2[s](i, j);
                }
                const double weight = product_weight(block, bw, kernel, mask);
                if (weight == 0.0) continue;
                for (std::size_t j = 0; j < k2; ++j)
                    diff[j] = panel.w[t](i, j) - panel.w[s](i, j);
                crit.add_term(diff, weight * ydiff);
            }
        }
    }
    return crit;
}

double criterion_beta_panel(const PanelChoiceSample& panel, std::span<const double> b_free,
                            const MsBandwidths& h, const KernelSpec& kernel) {
    if (b_free.size() + 1 != panel.k1())
        throw std::invalid_argument("criterion_beta_panel: coefficient dimension mismatch");
    return build_ms_beta_criterion(panel, h, kernel).eval(full_coef(b_free));
}

double criterion_gamma_panel(const PanelChoiceSample& panel, std::span<const double> r_free,
                             const MsBandwidths& h, const KernelSpec& kernel) {
    if (r_free.size() + 1 != panel.k2())
        throw std::invalid_argument("criterion_gamma_panel: coefficient dimension mismatch");
    return build_ms_gamma_criterion(panel, h, kernel).eval(full_coef(r_free));
}

MsEstimate estimate_ms(const PanelChoiceSample& panel, const MsConfig& config) {
    panel.validate();
    if (panel.n_agents < 50) throw std::invalid_argument("estimate_ms: need N >= 50");
    config.kernel.validate();

    const auto h = ms_bandwidths(panel, config.c3);
    MsEstimate est;

    const auto crit_beta = build_ms_beta_criterion(panel, h, config.kernel);
    const DeConfig de1 = de_for_step(config.de, panel.k1() - 1, 1);
    const auto res1 = de_minimize(
        [&](std::span<const double> b) { return -crit_beta.eval(full_coef(b)); }, de1);
    est.beta_free = res1.argmin;
    est.criterion_beta = -res1.value;

    const auto crit_gamma = build_ms_gamma_criterion(panel, h, config.kernel);
    const DeConfig de2 = de_for_step(config.de, panel.k2() - 1, 2);
    const auto res2 = de_minimize(
        [&](std::span<const double> r) { return -crit_gamma.eval(full_coef(r)); }, de2);
    est.gamma_free = res2.argmin;
    est.criterion_gamma = -res2.value;
    return est;
}

PanelChoiceSample resample_panel(const PanelChoiceSample& panel,
                                 std::span<const std::size_t> agents) {
    PanelChoiceSample out;
    out.n_agents = agents.size();
    out.periods = panel.periods;
    out.discrete_x = panel.discrete_x;
    out.discrete_w = panel.discrete_w;
    for (std::size_t t = 0; t < panel.periods; ++t) {
        out.x1.emplace_back(out.n_agents, panel.k1());
        out.x2.emplace_back(out.n_agents, panel.k1());
        out.w.emplace_back(out.n_agents, panel.k2());
        out.s.emplace_back(out.n_agents, panel.k3());
        out.choice.emplace_back(out.n_agents, 0);
        for (std::size_t i = 0; i < out.n_agents; ++i) {
            const std::size_t src = agents[i];
            for (std::size_t j = 0; j < panel.k1(); ++j) {
                out.x1[t](i, j) = panel.x1[t](src, j);
                out.x2[t](i, j) = panel.x2[t](src, j);
            }
            for (std::size_t j = 0; j < panel.k2(); ++j) out.w[t](i, j) = panel.w[t](src, j);
            for (std::size_t j = 0; j < panel.k3(); ++j) out.s[t](i, j) = panel.s[t](src, j);
            out.choice[t][i] = panel.choice[t][src];
        }
    }
    return out;
}

NumericalBootstrapConfig ms_epsilons(std::size_t n, double c4) {
    const double nn = static_cast<double>(n);
    const double eps = c4 * std::pow(nn, -5.0 / 7.0) * std::pow(std::log(nn), -5.0 / 14.0);
    if (!(nn * eps > 1.0))
        throw std::invalid_argument("ms_epsilons: N*eps must exceed 1");
    return {eps, eps};
}

MsBootstrap numerical_bootstrap_ms(const PanelChoiceSample& panel, const MsConfig& config,
                                   const MsEstimate& point, std::uint64_t seed,
                                   std::optional<NumericalBootstrapConfig> eps_override) {
    if (config.bootstrap_B < 10)
        throw std::invalid_argument("numerical_bootstrap_ms: need B >= 10");
    const std::size_t n = panel.n_agents;
    const NumericalBootstrapConfig eps =
        eps_override ? *eps_override : ms_epsilons(n, config.c4);
    const double w1 = std::sqrt(static_cast<double>(n) * eps.epsilon_n1);
    const double w2 = std::sqrt(static_cast<double>(n) * eps.epsilon_n2);
    const double inv_n = 1.0 / static_cast<double>(n);

    const auto h = ms_bandwidths(panel, config.c3);
    const auto orig_beta = build_ms_beta_criterion(panel, h, config.kernel);
    const auto orig_gamma = build_ms_gamma_criterion(panel, h, config.kernel);

    MsBootstrap boot;
    for (int b = 0; b < config.bootstrap_B; ++b) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
        std::vector<std::size_t> agents(n);
        for (auto& v : agents) v = rng.next_index(n);
        const auto draw_panel = resample_panel(panel, agents);
        const auto boot_beta = build_ms_beta_criterion(draw_panel, h, config.kernel);
        const auto boot_gamma = build_ms_gamma_criterion(draw_panel, h, config.kernel);

        const DeConfig de1 =
            de_for_step(config.de, panel.k1() - 1,
                        derive_seed(seed, 2000003ULL + static_cast<std::uint64_t>(b)));
        const auto res1 = de_minimize(
            [&](std::span<const double> bf) {
                const auto full = full_coef(bf);
                return -((1.0 - w1) * inv_n * orig_beta.eval(full) +
                         w1 * inv_n * boot_beta.eval(full));
            },
            de1);
        boot.beta_draws.push_back(res1.argmin);

        const DeConfig de2 =
            de_for_step(config.de, panel.k2() - 1,
                        derive_seed(seed, 3000017ULL + static_cast<std::uint64_t>(b)));
        const auto res2 = de_minimize(
            [&](std::span<const double> rf) {
                const auto full = full_coef(rf);
                return -((1.0 - w2) * inv_n * orig_gamma.eval(full) +
                         w2 * inv_n * boot_gamma.eval(full));
            },
            de2);
        boot.gamma_draws.push_back(res2.argmin);
    }

    // root-method interval: quantiles of (theta* - theta_hat) scaled back by
    // the rate ratio (N*eps)^{-1/3}
    auto cis = [&](const std::vector<std::vector<double>>& draws,
                   const std::vector<double>& center, double n_eps) {
        std::vector<std::pair<double, double>> out;
        const double scale = std::pow(n_eps, -1.0 / 3.0);
        for (std::size_t j = 0; j < center.size(); ++j) {
            std::vector<double> dev;
            dev.reserve(draws.size());
            for (const auto& d : draws) dev.push_back(d[j] - center[j]);
            out.emplace_back(center[j] - scale * quantile(dev, 0.975),
                             center[j] - scale * quantile(dev, 0.025));
        }
        return out;
    };
    boot.ci_beta =
        cis(boot.beta_draws, point.beta_free, static_cast<double>(n) * eps.epsilon_n1);
    boot.ci_gamma =
        cis(boot.gamma_draws, point.gamma_free, static_cast<double>(n) * eps.epsilon_n2);
    return boot;
}

double eta_stat_panel(const PanelChoiceSample& panel, std::span<const double> gamma_free,
                      const MsBandwidths& h, const KernelSpec& kernel) {
    const auto crit = build_ms_gamma_criterion(panel, h, kernel);
    return crit.eval(full_coef(gamma_free)) / static_cast<double>(panel.n_agents);
}

TestResult test_eta_panel(const PanelChoiceSample& panel, std::span<const double> gamma_free,
                          const MsConfig& config, int B, std::uint64_t seed) {
    const auto h = ms_bandwidths(panel, config.c3);

    TestResult result;
    result.stat = eta_stat_panel(panel, gamma_free, h, config.kernel);

    const std::size_t n = panel.n_agents;
    std::vector<double> boot_stats;
    boot_stats.reserve(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
        std::vector<std::size_t> agents(n);
        for (auto& v : agents) v = rng.next_index(n);
        boot_stats.push_back(
            eta_stat_panel(resample_panel(panel, agents), gamma_free, h, config.kernel));
    }
    result.q05 = quantile(boot_stats, 0.05);
    result.bundle_effect_detected = result.q05 > 0.0;
    return result;
}

}  // namespace bundlechoice
