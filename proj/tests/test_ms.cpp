#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "bundlechoice/dgp.hpp"
#include "bundlechoice/ms.hpp"
#include "bundlechoice/rng.hpp"

using namespace bundlechoice;

// estimators see covariates and choices only; the panel container carries no
// latent fields
template <typename T>
constexpr bool exposes_latent_state = requires(T t) { t.alpha1; } || requires(T t) { t.alpha_b; } ||
                                      requires(T t) { t.eta; } || requires(T t) { t.latent; };
static_assert(!exposes_latent_state<PanelChoiceSample>);
static_assert(!exposes_latent_state<ChoiceSample>);

namespace oracle {

double phi(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * M_PI); }
double kern(double u, int order) {
    if (order == 2) return phi(u);
    if (order == 4) return (3.0 - u * u) / 2.0 * phi(u);
    return (15.0 - 10.0 * u * u + u * u * u * u) / 8.0 * phi(u);
}
double sgn(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

double crit_beta(const PanelChoiceSample& p, const std::vector<double>& b_full,
                 const MsBandwidths& h, int order) {
    double total = 0.0;
    for (std::size_t i = 0; i < p.n_agents; ++i) {
        for (std::size_t t = 1; t < p.periods; ++t) {
            for (std::size_t s = 0; s < t; ++s) {
                for (int d = 0; d < 4; ++d) {
                    const double ydiff = p.y(s, i, d) - p.y(t, i, d);
                    const double f1 = alt_d1(d) == 0 ? 1.0 : -1.0;
                    const double f2 = alt_d2(d) == 0 ? 1.0 : -1.0;

                    auto weight = [&](int which_x) {
                        double w = 1.0;
                        for (std::size_t j = 0; j < p.k1(); ++j) {
                            const double diff =
                                which_x == 1 ? p.x1[t](i, j) - p.x1[s](i, j)
                                             : p.x2[t](i, j) - p.x2[s](i, j);
                            if (p.discrete_x[j]) {
                                if (diff != 0.0) return 0.0;
                            } else {
                                const double bw = which_x == 1 ? h.x1[j] : h.x2[j];
                                w *= kern(diff / bw, order) / bw;
                            }
                        }
                        for (std::size_t j = 0; j < p.k2(); ++j) {
                            const double diff = p.w[t](i, j) - p.w[s](i, j);
                            if (p.discrete_w[j]) {
                                if (diff != 0.0) return 0.0;
                            } else {
                                w *= kern(diff / h.w[j], order) / h.w[j];
                            }
                        }
                        return w;
                    };
                    auto index = [&](int which_x) {
                        double v = 0.0;
                        for (std::size_t j = 0; j < p.k1(); ++j)
                            v += ((which_x == 1 ? p.x1[t](i, j) : p.x2[t](i, j)) -
                                  (which_x == 1 ? p.x1[s](i, j) : p.x2[s](i, j))) *
                                 b_full[j];
                        return v;
                    };

                    total += weight(2) * ydiff * sgn(index(1)) * f1;
                    total += weight(1) * ydiff * sgn(index(2)) * f2;
                }
            }
        }
    }
    return total;
}

double crit_gamma(const PanelChoiceSample& p, const std::vector<double>& r_full,
                  const MsBandwidths& h, int order) {
    double total = 0.0;
    for (std::size_t i = 0; i < p.n_agents; ++i) {
        for (std::size_t t = 1; t < p.periods; ++t) {
            for (std::size_t s = 0; s < t; ++s) {
                double w = 1.0;
                bool dead = false;
                for (std::size_t j = 0; j < p.k1() && !dead; ++j) {
                    const double d1 = p.x1[t](i, j) - p.x1[s](i, j);
                    const double d2 = p.x2[t](i, j) - p.x2[s](i, j);
                    if (p.discrete_x[j]) {
                        if (d1 != 0.0 || d2 != 0.0) dead = true;
                    } else {
                        w *= kern(d1 / h.x1[j], order) / h.x1[j];
                        w *= kern(d2 / h.x2[j], order) / h.x2[j];
                    }
                }
                if (dead) continue;
                double wr = 0.0;
                for (std::size_t j = 0; j < p.k2(); ++j)
                    wr += (p.w[t](i, j) - p.w[s](i, j)) * r_full[j];
                total += w * (p.y(t, i, 3) - p.y(s, i, 3)) * sgn(wr);
            }
        }
    }
    return total;
}

}  // namespace oracle

namespace {
const double kTol = 1e-10;

MsBandwidths unit_bandwidths(const PanelChoiceSample& p) {
    MsBandwidths h;
    h.x1.assign(p.k1(), 0.9);
    h.x2.assign(p.k1(), 1.1);
    h.w.assign(p.k2(), 0.8);
    return h;
}
}  // namespace

TEST_CASE("panel criteria agree with the brute-force oracle") {
    Rng rng(41);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 6 + rng.next_index(15);
        const auto panel = simulate_panel(3, n, 1000 + rep);
        const auto h = unit_bandwidths(panel);
        const std::vector<double> b_free{rng.uniform(-2, 2)};
        const std::vector<double> b_full{1.0, b_free[0]};

        const double lib = criterion_beta_panel(panel, b_free, h);
        const double ref = oracle::crit_beta(panel, b_full, h, 2);
        CHECK(std::abs(lib - ref) <= kTol * std::max(1.0, std::abs(ref)));

        const double libg = criterion_gamma_panel(panel, b_free, h);
        const double refg = oracle::crit_gamma(panel, b_full, h, 2);
        CHECK(std::abs(libg - refg) <= kTol * std::max(1.0, std::abs(refg)));
    }
}

TEST_CASE("two-agent hand panel") {
    PanelChoiceSample p;
    p.n_agents = 2;
    p.periods = 2;
    p.discrete_x = {false, false};
    p.discrete_w = {false, false};
    for (int t = 0; t < 2; ++t) {
        p.x1.emplace_back(2, 2);
        p.x2.emplace_back(2, 2);
        p.w.emplace_back(2, 2);
        p.s.emplace_back(2, 0);
        p.choice.emplace_back(2, 0);
    }
    // agent 0 switches (0,0) -> (1,0); agent 1 switches (1,1) -> (0,1)
    p.choice[0] = {0, 3};
    p.choice[1] = {1, 2};
    Rng rng(6);
    for (int t = 0; t < 2; ++t)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                p.x1[t](i, j) = rng.uniform(-1, 1);
                p.x2[t](i, j) = rng.uniform(-1, 1);
                p.w[t](i, j) = rng.uniform(-1, 1);
            }

    const auto h = unit_bandwidths(p);
    const std::vector<double> b_free{0.4};
    const double lib = criterion_beta_panel(p, b_free, h);
    const double ref = oracle::crit_beta(p, {1.0, 0.4}, h, 2);
    CHECK(lib == doctest::Approx(ref).epsilon(1e-14));
    CHECK(lib != 0.0);
}

TEST_CASE("non-switchers contribute nothing") {
    auto panel = simulate_panel(3, 150, 9);
    const auto h = ms_bandwidths(panel, 2.0);
    const std::vector<double> b{0.7};

    const double full_beta = criterion_beta_panel(panel, b, h);
    const double full_gamma = criterion_gamma_panel(panel, b, h);

    // drop agents whose choice never changes
    std::vector<std::size_t> switchers;
    for (std::size_t i = 0; i < panel.n_agents; ++i)
        if (panel.choice[0][i] != panel.choice[1][i]) switchers.push_back(i);
    REQUIRE(switchers.size() < panel.n_agents);
    const auto trimmed = resample_panel(panel, switchers);

    CHECK(criterion_beta_panel(trimmed, b, h) == full_beta);
    CHECK(criterion_gamma_panel(trimmed, b, h) == full_gamma);
}

TEST_CASE("agent permutation leaves criteria unchanged") {
    const auto panel = simulate_panel(4, 80, 3);
    const auto h = ms_bandwidths(panel, 2.0);
    std::vector<std::size_t> perm(panel.n_agents);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(10);
    for (std::size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[rng.next_index(i)]);
    const auto shuffled = resample_panel(panel, perm);

    for (double b : {-0.8, 0.3, 1.4}) {
        const std::vector<double> bf{b};
        CHECK(criterion_beta_panel(panel, bf, h) ==
              doctest::Approx(criterion_beta_panel(shuffled, bf, h)).epsilon(1e-12));
        CHECK(criterion_gamma_panel(panel, bf, h) ==
              doctest::Approx(criterion_gamma_panel(shuffled, bf, h)).epsilon(1e-12));
    }
}

TEST_CASE("positive rescaling leaves the criteria unchanged") {
    const auto panel = simulate_panel(3, 60, 21);
    const auto h = ms_bandwidths(panel, 2.0);
    const auto crit_b = build_ms_beta_criterion(panel, h, KernelSpec{2});
    const auto crit_g = build_ms_gamma_criterion(panel, h, KernelSpec{2});
    Rng rng(2);
    for (int rep = 0; rep < 100; ++rep) {
        const double b = rng.uniform(-3, 3);
        const double c = rng.uniform(0.01, 10.0);
        CHECK(crit_b.eval(std::vector<double>{1.0, b}) ==
              crit_b.eval(std::vector<double>{c, c * b}));
        CHECK(crit_g.eval(std::vector<double>{1.0, b}) ==
              crit_g.eval(std::vector<double>{c, c * b}));
    }
}

TEST_CASE("degenerate DE box at the truth returns the truth") {
    const auto panel = simulate_panel(3, 120, 31);
    MsConfig config;
    config.de = DeConfig::for_box(1, 1.0, 1.0);
    const auto est = estimate_ms(panel, config);
    CHECK(est.beta_free == std::vector<double>{1.0});
    CHECK(est.gamma_free == std::vector<double>{1.0});
}

TEST_CASE("single design-3 run lands in a sane range" * doctest::timeout(600)) {
    const auto panel = simulate_panel(3, 1000, 77);
    MsConfig config;
    config.de.seed = 5;
    const auto est = estimate_ms(panel, config);
    // paper-scale RMSE is about 0.37 at this size
    CHECK(std::abs(est.beta_free[0] - 1.0) < 1.5);
    CHECK(std::abs(est.gamma_free[0] - 1.0) < 1.7);
}

TEST_CASE("epsilon rule and guard") {
    const auto eps = ms_epsilons(1000, 2.0);
    const double expected =
        2.0 * std::pow(1000.0, -5.0 / 7.0) * std::pow(std::log(1000.0), -5.0 / 14.0);
    CHECK(eps.epsilon_n1 == doctest::Approx(expected).epsilon(1e-12));
    CHECK(eps.epsilon_n2 == eps.epsilon_n1);
    CHECK(1000.0 * eps.epsilon_n1 > 1.0);
}

TEST_CASE("numerical bootstrap with eps = 1/N is the classic bootstrap") {
    // at eps = 1/N the (N*eps)^{1/2} weight is one and the original
    // criterion cancels out of the objective; N a power of two keeps the
    // weight exactly one in floating point
    const std::size_t n = 64;
    const auto panel = simulate_panel(3, n, 17);
    MsConfig config;
    config.bootstrap_B = 10;
    config.de.seed = 23;

    const auto point = estimate_ms(panel, config);
    NumericalBootstrapConfig eps{1.0 / static_cast<double>(n), 1.0 / static_cast<double>(n)};
    const auto numerical = numerical_bootstrap_ms(panel, config, point, 5, eps);

    // classic bootstrap re-estimates on the resample with the same seeds
    const auto h = ms_bandwidths(panel, config.c3);
    for (int b = 0; b < config.bootstrap_B; ++b) {
        Rng rng(derive_seed(5, static_cast<std::uint64_t>(b)));
        std::vector<std::size_t> agents(n);
        for (auto& v : agents) v = rng.next_index(n);
        const auto draw = resample_panel(panel, agents);
        const auto crit = build_ms_beta_criterion(draw, h, config.kernel);
        DeConfig de = config.de;
        de.lower = {-10.0};
        de.upper = {10.0};
        de.seed = derive_seed(config.de.seed,
                              derive_seed(5, 2000003ULL + static_cast<std::uint64_t>(b)));
        const auto res = de_minimize(
            [&](std::span<const double> bf) {
                std::vector<double> full{1.0};
                full.insert(full.end(), bf.begin(), bf.end());
                return -crit.eval(full) / static_cast<double>(n);
            },
            de);
        CHECK(numerical.beta_draws[static_cast<std::size_t>(b)] == res.argmin);
    }
}

TEST_CASE("numerical bootstrap rejects tiny B") {
    const auto panel = simulate_panel(3, 60, 17);
    MsConfig config;
    config.bootstrap_B = 5;
    const auto point = MsEstimate{{1.0}, {1.0}, 0.0, 0.0};
    CHECK_THROWS_AS(numerical_bootstrap_ms(panel, config, point, 3), std::invalid_argument);
}

TEST_CASE("eta statistic: single-draw bootstrap equals the statistic") {
    const auto panel = simulate_panel(3, 100, 8);
    MsConfig config;
    const auto h = ms_bandwidths(panel, config.c3);
    const std::vector<double> gamma{1.0};

    const double stat = eta_stat_panel(panel, gamma, h);
    std::vector<std::size_t> identity(panel.n_agents);
    std::iota(identity.begin(), identity.end(), 0);
    CHECK(eta_stat_panel(resample_panel(panel, identity), gamma, h) == stat);
    CHECK(quantile(std::vector<double>{stat}, 0.05) == stat);
}

TEST_CASE("estimate_ms size guard") {
    const auto panel = simulate_panel(3, 20, 3);
    CHECK_THROWS_AS(estimate_ms(panel, MsConfig{}), std::invalid_argument);
}
