#include "bundlechoice/lad_panel.hpp"

#include <cmath>
#include <stdexcept>

#include "bundlechoice/kernels.hpp"
#include "bundlechoice/rng.hpp"

namespace bundlechoice {

namespace {

std::size_t period_dim(const PanelChoiceSample& panel) {
    return 2 * panel.k1() + panel.k2() + panel.k3();
}

void copy_period_covariates(const PanelChoiceSample& panel, std::size_t t, std::size_t i,
                            double* out) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < panel.k1(); ++j) out[c++] = panel.x1[t](i, j);
    for (std::size_t j = 0; j < panel.k1(); ++j) out[c++] = panel.x2[t](i, j);
    for (std::size_t j = 0; j < panel.k2(); ++j) out[c++] = panel.w[t](i, j);
    for (std::size_t j = 0; j < panel.k3(); ++j) out[c++] = panel.s[t](i, j);
}

struct PanelPairTable {
    std::size_t k1, k2, k3;
    std::size_t stride;
    std::vector<double> data;  // per entry: dx1, dx2, dw, ds, dp[4]

    double eval(const ModelParams& vartheta) const {
        const auto beta = vartheta.beta_full();
        const auto gamma = vartheta.gamma_full();
        const std::vector<double> zero(k3, 0.0);
        const std::vector<double>& rho_b = vartheta.rho_b ? *vartheta.rho_b : zero;

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

PanelPairTable build_panel_pair_table(const PanelChoiceSample& panel, const PanelCcp& ccp) {
    PanelPairTable table;
    table.k1 = panel.k1();
    table.k2 = panel.k2();
    table.k3 = panel.k3();
    table.stride = 2 * table.k1 + table.k2 + table.k3 + 4;
    table.data.reserve(ccp.entries.size() * table.stride);
    for (const auto& e : ccp.entries) {
        const std::size_t i = e.agent;
        for (std::size_t j = 0; j < table.k1; ++j)
            table.data.push_back(panel.x1[e.t](i, j) - panel.x1[e.s](i, j));
        for (std::size_t j = 0; j < table.k1; ++j)
            table.data.push_back(panel.x2[e.t](i, j) - panel.x2[e.s](i, j));
        for (std::size_t j = 0; j < table.k2; ++j)
            table.data.push_back(panel.w[e.t](i, j) - panel.w[e.s](i, j));
        for (std::size_t j = 0; j < table.k3; ++j)
            table.data.push_back(panel.s[e.t](i, j) - panel.s[e.s](i, j));
        for (int alt = 0; alt < kNumAlternatives; ++alt)
            table.data.push_back(e.p_t[alt] - e.p_s[alt]);
    }
    return table;
}

PanelLadEstimate run_panel_lad_optimizer(const PanelChoiceSample& panel, const PanelCcp& ccp,
                                         const PanelLadConfig& config) {
    const std::size_t k1 = panel.k1(), k2 = panel.k2(), k3 = panel.k3();
    const auto table = build_panel_pair_table(panel, ccp);

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

    PanelLadEstimate est;
    est.params = unpack_lad_params(result.argmin, k1, k2, k3, config.include_rho_b);
    est.criterion = result.value;
    return est;
}

}  // namespace

PanelCcp fit_panel_ccp(const PanelChoiceSample& panel, const MlpConfig& config,
                       std::uint64_t seed) {
    panel.validate();
    const std::size_t pdim = period_dim(panel);
    const std::size_t in_dim = 2 * pdim;

    // rows: one per agent and (t, s) pair
    std::vector<std::array<std::size_t, 3>> index;  // agent, t, s
    for (std::size_t t = 1; t < panel.periods; ++t)
        for (std::size_t s = 0; s < t; ++s)
            for (std::size_t i = 0; i < panel.n_agents; ++i) index.push_back({i, t, s});

    Matrix inputs(index.size(), in_dim);
    Matrix targets(index.size(), 8);
    for (std::size_t r = 0; r < index.size(); ++r) {
        const auto [i, t, s] = index[r];
        copy_period_covariates(panel, t, i, &inputs.row(r)[0]);
        copy_period_covariates(panel, s, i, &inputs.row(r)[pdim]);
        targets(r, static_cast<std::size_t>(panel.choice[t][i])) = 1.0;
        targets(r, 4 + static_cast<std::size_t>(panel.choice[s][i])) = 1.0;
    }

    MlpNet net(in_dim, config.hidden, derive_seed(seed, 17));
    std::vector<double> mean(in_dim, 0.0), sd(in_dim, 1.0);
    for (std::size_t j = 0; j < in_dim; ++j) {
        const auto col = inputs.col(j);
        double m = 0.0;
        for (double v : col) m += v;
        m /= static_cast<double>(col.size());
        mean[j] = m;
        sd[j] = col.size() > 1 ? sample_std(col) : 1.0;
    }
    net.set_standardization(mean, sd);

    MlpConfig train_config = config;
    train_config.seed = seed;
    train_mlp(net, inputs, targets, train_config);

    PanelCcp ccp;
    ccp.entries.reserve(index.size());
    for (std::size_t r = 0; r < index.size(); ++r) {
        const auto [i, t, s] = index[r];
        PanelCcp::Entry entry;
        entry.agent = i;
        entry.t = t;
        entry.s = s;
        const auto [p_t, p_s] = net.forward(inputs.row(r));
        entry.p_t = p_t;
        entry.p_s = p_s;
        ccp.entries.push_back(entry);
    }
    return ccp;
}

double panel_lad_criterion(const PanelChoiceSample& panel, const PanelCcp& ccp,
                           const ModelParams& vartheta) {
    return build_panel_pair_table(panel, ccp).eval(vartheta);
}

PanelLadEstimate estimate_panel_lad(const PanelChoiceSample& panel,
                                    const PanelLadConfig& config) {
    if (panel.n_agents < 100) throw std::invalid_argument("estimate_panel_lad: need N >= 100");
    const auto ccp = fit_panel_ccp(panel, config.mlp, config.mlp.seed);
    return run_panel_lad_optimizer(panel, ccp, config);
}

PanelLadEstimate estimate_panel_lad_with_ccp(const PanelChoiceSample& panel, const PanelCcp& ccp,
                                             const PanelLadConfig& config) {
    return run_panel_lad_optimizer(panel, ccp, config);
}

}  // namespace bundlechoice
