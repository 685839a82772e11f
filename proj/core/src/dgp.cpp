#include "bundlechoice/dgp.hpp"

#include <cmath>
#include <stdexcept>

#include "bundlechoice/rng.hpp"

namespace bundlechoice {

namespace {

constexpr double kTieTol = 1e-12;

// Correlated non-Gaussian pairs/blocks use a shared-draw mixture: each
// variable copies a common draw with probability a and takes its own draw
// otherwise, which gives pairwise correlation a^2 while preserving the
// marginal exactly. Gaussian blocks use the exact factor construction.
template <typename Draw>
void mixture_block(Rng& rng, double a, std::span<double> out, Draw draw) {
    const double common = draw(rng);
    for (double& v : out) {
        const bool copy = rng.bernoulli(a);
        const double own = draw(rng);  // always consume, keeps the stream aligned
        v = copy ? common : own;
    }
}

void equicorrelated_normal(Rng& rng, double rho, std::span<double> out) {
    const double common = rng.normal();
    const double w_common = std::sqrt(rho);
    const double w_own = std::sqrt(1.0 - rho);
    for (double& v : out) v = w_common * common + w_own * rng.normal();
}

struct CrossDraw {
    double x11, x12, x21, x22;  // x_{j,1} logistic, x_{j,2} bernoulli(1/3)
    double w1, w2, s;
    double eps1, eps2, eta;
};

CrossDraw draw_cross(Rng& rng, int design, bool zero_eta) {
    CrossDraw d{};
    if (design == 1) {
        d.x11 = rng.logistic();
        d.x12 = rng.bernoulli(1.0 / 3.0) ? 1.0 : 0.0;
        d.x21 = rng.logistic();
        d.x22 = rng.bernoulli(1.0 / 3.0) ? 1.0 : 0.0;
        d.w1 = rng.logistic();
        d.w2 = rng.normal();
        d.s = rng.normal();
        d.eps1 = rng.normal();
        d.eps2 = rng.normal();
    } else if (design == 2) {
        const double a = std::sqrt(0.5);
        double x1pair[2];
        mixture_block(rng, a, x1pair, [](Rng& r) { return r.logistic(); });
        double x2pair[2];
        mixture_block(rng, a, x2pair,
                      [](Rng& r) { return r.bernoulli(1.0 / 3.0) ? 1.0 : 0.0; });
        d.x11 = x1pair[0];
        d.x21 = x1pair[1];
        d.x12 = x2pair[0];
        d.x22 = x2pair[1];
        d.w1 = rng.logistic();
        d.w2 = rng.normal();
        d.s = rng.normal();
        double eps[2];
        equicorrelated_normal(rng, 0.5, eps);
        d.eps1 = eps[0];
        d.eps2 = eps[1];
    } else {
        throw std::invalid_argument("simulate_cross: design must be 1 or 2");
    }
    d.eta = zero_eta ? 0.0 : rng.beta22();
    return d;
}

struct PanelDraw {
    // [period][...]
    double x1c[2], x1d[2];  // alternative 1: continuous, discrete coord
    double x2c[2], x2d[2];
    double w1[2], w2[2], s[2];
    double eps1[2], eps2[2], eta[2];
};

PanelDraw draw_panel(Rng& rng, int design, bool zero_eta) {
    PanelDraw d{};
    if (design == 3) {
        for (int t = 0; t < 2; ++t) {
            d.x1c[t] = rng.logistic();
            d.x1d[t] = rng.bernoulli(1.0 / 3.0) ? 1.0 : 0.0;
            d.x2c[t] = rng.logistic();
            d.x2d[t] = rng.bernoulli(1.0 / 3.0) ? 1.0 : 0.0;
            d.w1[t] = rng.logistic();
            d.w2[t] = rng.normal();
            d.s[t] = rng.normal();
            d.eps1[t] = rng.normal();
            d.eps2[t] = rng.normal();
            d.eta[t] = zero_eta ? 0.0 : rng.beta22();
        }
    } else if (design == 4) {
        // 0.25 pairwise correlation across all (j,t) combinations of the
        // x-blocks and errors, 0.25 serial correlation for w, s, eta
        const double a = 0.5;  // a^2 = 0.25
        double xc[4];
        mixture_block(rng, a, xc, [](Rng& r) { return r.logistic(); });
        double xd[4];
        mixture_block(rng, a, xd, [](Rng& r) { return r.bernoulli(1.0 / 3.0) ? 1.0 : 0.0; });
        d.x1c[0] = xc[0]; d.x1c[1] = xc[1]; d.x2c[0] = xc[2]; d.x2c[1] = xc[3];
        d.x1d[0] = xd[0]; d.x1d[1] = xd[1]; d.x2d[0] = xd[2]; d.x2d[1] = xd[3];

        double eps[4];
        equicorrelated_normal(rng, 0.25, eps);
        d.eps1[0] = eps[0]; d.eps1[1] = eps[1]; d.eps2[0] = eps[2]; d.eps2[1] = eps[3];

        double w1pair[2];
        mixture_block(rng, a, w1pair, [](Rng& r) { return r.logistic(); });
        double w2pair[2];
        equicorrelated_normal(rng, 0.25, w2pair);
        double spair[2];
        equicorrelated_normal(rng, 0.25, spair);
        double etapair[2];
        mixture_block(rng, a, etapair, [](Rng& r) { return r.beta22(); });
        for (int t = 0; t < 2; ++t) {
            d.w1[t] = w1pair[t];
            d.w2[t] = w2pair[t];
            d.s[t] = spair[t];
            d.eta[t] = zero_eta ? 0.0 : etapair[t];
        }
    } else {
        throw std::invalid_argument("simulate_panel: design must be 3 or 4");
    }
    return d;
}

}  // namespace

std::array<double, 4> utilities(const ModelParams& params, std::span<const double> x1,
                                std::span<const double> x2, std::span<const double> w,
                                std::span<const double> s, const LatentDraw& latent) {
    const auto beta = params.beta_full();
    const auto gamma = params.gamma_full();
    if (x1.size() != beta.size() || x2.size() != beta.size() || w.size() != gamma.size())
        throw std::invalid_argument("utilities: dimension mismatch");

    const double u1 = dot(x1, beta) + dot(s, params.rho1) + latent.alpha1 + latent.eps1;
    const double u2 = dot(x2, beta) + dot(s, params.rho2) + latent.alpha2 + latent.eps2;
    double bundle_index = dot(w, gamma) + latent.alpha_b;
    if (params.rho_b) bundle_index += dot(s, *params.rho_b);
    return {0.0, u1, u2, u1 + u2 + latent.eta * bundle_index};
}

int choose(std::span<const double> u, bool* tied) {
    double umax = u[0];
    for (std::size_t i = 1; i < u.size(); ++i) umax = std::max(umax, u[i]);
    int pick = -1;
    int near = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] >= umax - kTieTol) {
            ++near;
            if (pick < 0) pick = static_cast<int>(i);
        }
    }
    if (tied) *tied = near > 1;
    return pick;
}

ModelParams design_truth() {
    ModelParams p;
    p.beta_free = {1.0};
    p.gamma_free = {1.0};
    p.rho1 = {1.0};
    p.rho2 = {1.0};
    return p;
}

ChoiceSample simulate_cross(int design, std::size_t n, std::uint64_t seed, bool zero_eta) {
    if (n < 2) throw std::invalid_argument("simulate_cross: need N >= 2");
    const ModelParams truth = design_truth();

    ChoiceSample sample;
    sample.x1 = Matrix(n, 2);
    sample.x2 = Matrix(n, 2);
    sample.w = Matrix(n, 2);
    sample.s = Matrix(n, 1);
    sample.choice.resize(n);
    sample.discrete_x = {false, true};
    sample.discrete_w = {false, false};

    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const CrossDraw d = draw_cross(rng, design, zero_eta);
        sample.x1(i, 0) = d.x11;
        sample.x1(i, 1) = d.x12;
        sample.x2(i, 0) = d.x21;
        sample.x2(i, 1) = d.x22;
        sample.w(i, 0) = d.w1;
        sample.w(i, 1) = d.w2;
        sample.s(i, 0) = d.s;

        LatentDraw latent;
        latent.eps1 = d.eps1;
        latent.eps2 = d.eps2;
        latent.eta = d.eta;
        const auto u = utilities(truth, sample.x1.row(i), sample.x2.row(i), sample.w.row(i),
                                 sample.s.row(i), latent);
        sample.choice[i] = choose(u);
    }
    return sample;
}

PanelChoiceSample simulate_panel(int design, std::size_t n, std::uint64_t seed, bool zero_eta) {
    if (n < 2) throw std::invalid_argument("simulate_panel: need N >= 2");
    const ModelParams truth = design_truth();

    PanelChoiceSample panel;
    panel.n_agents = n;
    panel.periods = 2;
    panel.discrete_x = {false, true};
    panel.discrete_w = {false, false};
    for (int t = 0; t < 2; ++t) {
        panel.x1.emplace_back(n, 2);
        panel.x2.emplace_back(n, 2);
        panel.w.emplace_back(n, 2);
        panel.s.emplace_back(n, 1);
        panel.choice.emplace_back(n, 0);
    }

    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const PanelDraw d = draw_panel(rng, design, zero_eta);
        // fixed effects from the two periods' first continuous covariates
        const double alpha1 = (d.x1c[0] + d.x1c[1]) / 4.0;
        const double alpha2 = (d.x2c[0] + d.x2c[1]) / 4.0;
        const double alpha_b = (d.w1[0] + d.w1[1]) / 4.0;
        for (int t = 0; t < 2; ++t) {
            panel.x1[t](i, 0) = d.x1c[t];
            panel.x1[t](i, 1) = d.x1d[t];
            panel.x2[t](i, 0) = d.x2c[t];
            panel.x2[t](i, 1) = d.x2d[t];
            panel.w[t](i, 0) = d.w1[t];
            panel.w[t](i, 1) = d.w2[t];
            panel.s[t](i, 0) = d.s[t];

            LatentDraw latent;
            latent.eps1 = d.eps1[t];
            latent.eps2 = d.eps2[t];
            latent.eta = d.eta[t];
            latent.alpha1 = alpha1;
            latent.alpha2 = alpha2;
            latent.alpha_b = alpha_b;
            const auto u = utilities(truth, panel.x1[t].row(i), panel.x2[t].row(i),
                                     panel.w[t].row(i), panel.s[t].row(i), latent);
            panel.choice[t][i] = choose(u);
        }
    }
    return panel;
}

std::array<double, 4> oracle_ccp(int design, const ModelParams& params,
                                 std::span<const double> x1, std::span<const double> x2,
                                 std::span<const double> w, std::span<const double> s,
                                 std::size_t m_draws, std::uint64_t seed, bool zero_eta) {
    if (m_draws < 10000) throw std::invalid_argument("oracle_ccp: need M >= 1e4");
    if (design != 1 && design != 2) throw std::invalid_argument("oracle_ccp: design must be 1 or 2");

    Rng rng(seed);
    std::array<std::size_t, 4> counts{};
    for (std::size_t m = 0; m < m_draws; ++m) {
        LatentDraw latent;
        if (design == 1) {
            latent.eps1 = rng.normal();
            latent.eps2 = rng.normal();
        } else {
            double eps[2];
            equicorrelated_normal(rng, 0.5, eps);
            latent.eps1 = eps[0];
            latent.eps2 = eps[1];
        }
        latent.eta = zero_eta ? 0.0 : rng.beta22();
        const auto u = utilities(params, x1, x2, w, s, latent);
        ++counts[static_cast<std::size_t>(choose(u))];
    }
    std::array<double, 4> p{};
    const double m = static_cast<double>(m_draws);
    for (int a = 0; a < 3; ++a) p[a] = static_cast<double>(counts[a]) / m;
    p[3] = 1.0 - (p[0] + p[1] + p[2]);  // frequencies sum to one exactly
    return p;
}

std::array<std::array<double, 4>, 2> oracle_panel_ccp(
    int design, const ModelParams& params, std::span<const double> x1_s,
    std::span<const double> x2_s, std::span<const double> w_s, std::span<const double> s_s,
    std::span<const double> x1_t, std::span<const double> x2_t, std::span<const double> w_t,
    std::span<const double> s_t, std::size_t m_draws, std::uint64_t seed, bool zero_eta) {
    if (m_draws < 10000) throw std::invalid_argument("oracle_panel_ccp: need M >= 1e4");
    if (design != 3 && design != 4)
        throw std::invalid_argument("oracle_panel_ccp: design must be 3 or 4");

    LatentDraw base;
    base.alpha1 = (x1_s[0] + x1_t[0]) / 4.0;
    base.alpha2 = (x2_s[0] + x2_t[0]) / 4.0;
    base.alpha_b = (w_s[0] + w_t[0]) / 4.0;

    Rng rng(seed);
    std::array<std::array<std::size_t, 4>, 2> counts{};
    for (std::size_t m = 0; m < m_draws; ++m) {
        double eps1[2], eps2[2], eta[2];
        if (design == 3) {
            for (int t = 0; t < 2; ++t) {
                eps1[t] = rng.normal();
                eps2[t] = rng.normal();
                eta[t] = zero_eta ? 0.0 : rng.beta22();
            }
        } else {
            double eps[4];
            equicorrelated_normal(rng, 0.25, eps);
            eps1[0] = eps[0]; eps1[1] = eps[1]; eps2[0] = eps[2]; eps2[1] = eps[3];
            double etapair[2];
            mixture_block(rng, 0.5, etapair, [](Rng& r) { return r.beta22(); });
            for (int t = 0; t < 2; ++t) eta[t] = zero_eta ? 0.0 : etapair[t];
        }
        for (int t = 0; t < 2; ++t) {
            LatentDraw latent = base;
            latent.eps1 = eps1[t];
            latent.eps2 = eps2[t];
            latent.eta = eta[t];
            const auto u = t == 0 ? utilities(params, x1_s, x2_s, w_s, s_s, latent)
                                  : utilities(params, x1_t, x2_t, w_t, s_t, latent);
            ++counts[t][static_cast<std::size_t>(choose(u))];
        }
    }
    std::array<std::array<double, 4>, 2> out{};
    const double m = static_cast<double>(m_draws);
    for (int t = 0; t < 2; ++t) {
        for (int a = 0; a < 3; ++a) out[t][a] = static_cast<double>(counts[t][a]) / m;
        out[t][3] = 1.0 - (out[t][0] + out[t][1] + out[t][2]);
    }
    return out;
}

}  // namespace bundlechoice
