#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "bundlechoice/dgp.hpp"
#include "bundlechoice/lad.hpp"
#include "bundlechoice/lad_panel.hpp"
#include "bundlechoice/ms.hpp"
#include "bundlechoice/rng.hpp"

using namespace bundlechoice;

namespace {

ModelParams make_params(double b, double r, double rho1, double rho2) {
    ModelParams p;
    p.beta_free = {b};
    p.gamma_free = {r};
    p.rho1 = {rho1};
    p.rho2 = {rho2};
    return p;
}

// naive criterion from the definition, iterating agents and period pairs
double naive_panel_criterion(const PanelChoiceSample& p, const PanelCcp& ccp,
                             const ModelParams& v) {
    const auto beta = v.beta_full();
    const auto gamma = v.gamma_full();
    double total = 0.0;
    for (const auto& e : ccp.entries) {
        const std::size_t i = e.agent;
        double u1 = 0, u2 = 0, ub = 0;
        for (std::size_t j = 0; j < p.k1(); ++j) {
            u1 += (p.x1[e.t](i, j) - p.x1[e.s](i, j)) * beta[j];
            u2 += (p.x2[e.t](i, j) - p.x2[e.s](i, j)) * beta[j];
        }
        for (std::size_t j = 0; j < p.k2(); ++j)
            ub += (p.w[e.t](i, j) - p.w[e.s](i, j)) * gamma[j];
        for (std::size_t j = 0; j < p.k3(); ++j) {
            const double ds = p.s[e.t](i, j) - p.s[e.s](i, j);
            u1 += ds * v.rho1[j];
            u2 += ds * v.rho2[j];
            if (v.rho_b) ub += ds * (*v.rho_b)[j];
        }
        const int pattern[4][3] = {{-1, -1, -1}, {1, -1, -1}, {-1, 1, -1}, {1, 1, 1}};
        for (int alt = 0; alt < 4; ++alt) {
            auto ok = [&](double u, int req) { return req > 0 ? u >= 0.0 : u <= 0.0; };
            const int ip =
                ok(u1, pattern[alt][0]) && ok(u2, pattern[alt][1]) && ok(ub, pattern[alt][2]) ? 1 : 0;
            const int im = ok(u1, -pattern[alt][0]) && ok(u2, -pattern[alt][1]) &&
                                   ok(ub, -pattern[alt][2])
                               ? 1
                               : 0;
            const double dp = e.p_t[alt] - e.p_s[alt];
            total += (std::abs(ip - dp) + std::abs(im + dp) - 1.0) * (ip + im);
        }
    }
    return total;
}

PanelCcp random_ccp_for(const PanelChoiceSample& panel, Rng& rng) {
    PanelCcp ccp;
    for (std::size_t i = 0; i < panel.n_agents; ++i) {
        PanelCcp::Entry e;
        e.agent = i;
        e.t = 1;
        e.s = 0;
        double st = 0, ss = 0;
        for (int a = 0; a < 4; ++a) {
            e.p_t[a] = rng.uniform(0, 1);
            e.p_s[a] = rng.uniform(0, 1);
            st += e.p_t[a];
            ss += e.p_s[a];
        }
        for (int a = 0; a < 4; ++a) {
            e.p_t[a] /= st;
            e.p_s[a] /= ss;
        }
        ccp.entries.push_back(e);
    }
    return ccp;
}

}  // namespace

TEST_CASE("identical agents and periods yield vanishing probability differences") {
    // one covariate vector everywhere and one common choice: the two output
    // heads fit the same target, so dp converges to zero
    const std::size_t n = 60;
    PanelChoiceSample p;
    p.n_agents = n;
    p.periods = 2;
    p.discrete_x = {false, true};
    p.discrete_w = {false, false};
    for (int t = 0; t < 2; ++t) {
        p.x1.emplace_back(n, 2, 0.4);
        p.x2.emplace_back(n, 2, -0.2);
        p.w.emplace_back(n, 2, 0.1);
        p.s.emplace_back(n, 1, 0.9);
        p.choice.emplace_back(n, 2);
    }
    MlpConfig config;
    config.epochs = 400;
    const auto ccp = fit_panel_ccp(p, config, 5);
    REQUIRE(ccp.entries.size() == n);
    for (const auto& e : ccp.entries)
        for (int a = 0; a < 4; ++a) CHECK(std::abs(e.p_t[a] - e.p_s[a]) < 0.05);
}

TEST_CASE("fit_panel_ccp is deterministic per seed") {
    const auto panel = simulate_panel(3, 80, 3);
    MlpConfig config;
    config.epochs = 150;
    const auto a = fit_panel_ccp(panel, config, 7);
    const auto b = fit_panel_ccp(panel, config, 7);
    REQUIRE(a.entries.size() == b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        CHECK(a.entries[i].p_t == b.entries[i].p_t);
        CHECK(a.entries[i].p_s == b.entries[i].p_s);
    }
}

TEST_CASE("criterion arithmetic") {
    PanelChoiceSample p;
    p.n_agents = 1;
    p.periods = 2;
    p.discrete_x = {false, false};
    p.discrete_w = {false, false};
    for (int t = 0; t < 2; ++t) {
        p.x1.emplace_back(1, 2, 0.0);
        p.x2.emplace_back(1, 2, 0.0);
        p.w.emplace_back(1, 2, 0.0);
        p.s.emplace_back(1, 0);
        p.choice.emplace_back(1, 0);
    }
    ModelParams v;
    v.beta_free = {0.0};
    v.gamma_free = {0.0};

    PanelCcp ccp;
    PanelCcp::Entry e;
    e.agent = 0;
    e.t = 1;
    e.s = 0;
    e.p_t = {0.25, 0.25, 0.25, 0.25};
    e.p_s = {0.25, 0.25, 0.25, 0.25};
    ccp.entries.push_back(e);

    SUBCASE("uninformative sign pattern contributes zero") {
        p.x1[1](0, 0) = -1.0;  // u1 < 0
        p.x2[1](0, 0) = -1.0;  // u2 < 0
        p.w[1](0, 0) = 1.0;    // ub > 0
        CHECK(panel_lad_criterion(p, ccp, v) == 0.0);
    }
    SUBCASE("wrong-signed probability difference pays 2|dp|") {
        p.x1[1](0, 0) = 1.0;   // u1 > 0
        p.x2[1](0, 0) = -1.0;  // u2 < 0
        p.w[1](0, 0) = -1.0;   // ub < 0: only the (1,0) plus-indicator fires
        ccp.entries[0].p_t = {0.45, 0.05, 0.25, 0.25};
        ccp.entries[0].p_s = {0.05, 0.45, 0.25, 0.25};
        // dp_(1,0) = -0.4 against I+ = 1 costs |1+0.4| + |0-0.4| - 1 = 0.8
        CHECK(panel_lad_criterion(p, ccp, v) == doctest::Approx(0.8).epsilon(1e-12));
    }
}

TEST_CASE("brute-force agreement on random panels") {
    Rng rng(404);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 5 + rng.next_index(16);
        const auto panel = simulate_panel(3, n, 300 + rep);
        const auto ccp = random_ccp_for(panel, rng);
        auto v = make_params(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2),
                             rng.uniform(-2, 2));
        if (rep % 4 == 0) v.rho_b = std::vector<double>{rng.uniform(-2, 2)};
        const double lib = panel_lad_criterion(panel, ccp, v);
        const double ref = naive_panel_criterion(panel, ccp, v);
        CHECK(std::abs(lib - ref) <= 1e-10 * std::max(1.0, std::abs(ref)));
    }
}

TEST_CASE("agent permutation leaves the criterion unchanged") {
    Rng rng(5);
    const auto panel = simulate_panel(3, 40, 12);
    const auto ccp = random_ccp_for(panel, rng);
    const auto v = make_params(0.5, -0.5, 0.2, 0.8);
    const double base = panel_lad_criterion(panel, ccp, v);

    std::vector<std::size_t> perm(panel.n_agents);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.next_index(i)]);
    const auto shuffled = resample_panel(panel, perm);
    PanelCcp shuffled_ccp;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        auto e = ccp.entries[perm[i]];
        e.agent = i;
        shuffled_ccp.entries.push_back(e);
    }
    CHECK(panel_lad_criterion(shuffled, shuffled_ccp, v) ==
          doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("zero probability differences leave only double-fired boundaries") {
    Rng rng(6);
    const auto panel = simulate_panel(3, 25, 9);
    auto ccp = random_ccp_for(panel, rng);
    for (auto& e : ccp.entries) e.p_s = e.p_t;  // dp = 0 everywhere

    // q = (|I+| + |I-| - 1)(I+ + I-) is 0 unless both indicators fire, in
    // which case it is 2; count those pairs directly
    const auto v = make_params(0.3, 0.3, 0.1, -0.1);
    double expected = 0.0;
    const auto beta = v.beta_full();
    const auto gamma = v.gamma_full();
    for (std::size_t i = 0; i < panel.n_agents; ++i) {
        double u1 = 0, u2 = 0, ub = 0;
        for (std::size_t j = 0; j < 2; ++j) {
            u1 += (panel.x1[1](i, j) - panel.x1[0](i, j)) * beta[j];
            u2 += (panel.x2[1](i, j) - panel.x2[0](i, j)) * beta[j];
            ub += (panel.w[1](i, j) - panel.w[0](i, j)) * gamma[j];
        }
        const double ds = panel.s[1](i, 0) - panel.s[0](i, 0);
        u1 += ds * v.rho1[0];
        u2 += ds * v.rho2[0];
        for (int alt = 0; alt < 4; ++alt) {
            const auto [ip, im] = lad_indicators(u1, u2, ub, alt);
            if (ip == 1 && im == 1) expected += 2.0;
        }
    }
    CHECK(panel_lad_criterion(panel, ccp, v) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("first stage tracks the latent-probability oracle" * doctest::timeout(900)) {
    const std::size_t n = 2000;
    const auto panel = simulate_panel(3, n, 2025);
    MlpConfig config;
    const auto ccp = fit_panel_ccp(panel, config, 6);
    const ModelParams truth = design_truth();

    double mae = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < n; i += n / 20) {
        const auto oracle = oracle_panel_ccp(
            3, truth, panel.x1[0].row(i), panel.x2[0].row(i), panel.w[0].row(i),
            panel.s[0].row(i), panel.x1[1].row(i), panel.x2[1].row(i), panel.w[1].row(i),
            panel.s[1].row(i), 20000, 900 + i);
        const auto& e = ccp.entries[i];
        for (int a = 0; a < 4; ++a) {
            const double fitted_dp = e.p_t[a] - e.p_s[a];
            const double oracle_dp = oracle[1][a] - oracle[0][a];
            mae += std::abs(fitted_dp - oracle_dp);
            ++count;
        }
    }
    mae /= count;
    CHECK(mae < 0.10);
}

TEST_CASE("degenerate DE box at the truth returns the truth") {
    const auto panel = simulate_panel(3, 150, 44);
    PanelLadConfig config;
    config.mlp.epochs = 100;
    config.de = DeConfig::for_box(4, 1.0, 1.0);
    const auto est = estimate_panel_lad(panel, config);
    CHECK(est.params.beta_free == std::vector<double>{1.0});
    CHECK(est.params.gamma_free == std::vector<double>{1.0});
    CHECK(est.params.rho1 == std::vector<double>{1.0});
    CHECK(est.params.rho2 == std::vector<double>{1.0});
}

TEST_CASE("estimate_panel_lad size guard") {
    const auto panel = simulate_panel(3, 50, 3);
    CHECK_THROWS_AS(estimate_panel_lad(panel, PanelLadConfig{}), std::invalid_argument);
}
