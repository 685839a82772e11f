#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "bundlechoice/data.hpp"
#include "bundlechoice/de.hpp"
#include "bundlechoice/kernels.hpp"
#include "bundlechoice/mrc.hpp"  // TestResult
#include "bundlechoice/sign_criterion.hpp"

namespace bundlechoice {

/// Panel localized maximum-score estimator with within-agent time
/// differencing, numerical-bootstrap inference, and the panel bundle-effect
/// test. Only switchers contribute; fixed effects never enter the API.
struct MsConfig {
    KernelSpec kernel{2};
    double c3 = 2.0;
    double c4 = 2.0;
    DeConfig de;
    int bootstrap_B = 299;
};

/// Per-column bandwidths h_N = sigma_N for the matching blocks, scaled by
/// the standard deviation of the time-differenced column (the matched
/// object). Discrete columns are exact-matched and ignore their entry.
struct MsBandwidths {
    std::vector<double> x1, x2, w;
};

MsBandwidths ms_bandwidths(const PanelChoiceSample& panel, double c3);

double criterion_beta_panel(const PanelChoiceSample& panel, std::span<const double> b_free,
                            const MsBandwidths& h, const KernelSpec& kernel = KernelSpec{2});

/// Matching here is on the raw covariate differences (x1_ts, x2_ts), not on
/// estimated indices, so the two estimation steps are independent.
double criterion_gamma_panel(const PanelChoiceSample& panel, std::span<const double> r_free,
                             const MsBandwidths& h, const KernelSpec& kernel = KernelSpec{2});

SignCriterion build_ms_beta_criterion(const PanelChoiceSample& panel, const MsBandwidths& h,
                                      const KernelSpec& kernel);
SignCriterion build_ms_gamma_criterion(const PanelChoiceSample& panel, const MsBandwidths& h,
                                       const KernelSpec& kernel);

struct MsEstimate {
    std::vector<double> beta_free;
    std::vector<double> gamma_free;
    double criterion_beta = 0.0;
    double criterion_gamma = 0.0;
};

MsEstimate estimate_ms(const PanelChoiceSample& panel, const MsConfig& config);

PanelChoiceSample resample_panel(const PanelChoiceSample& panel,
                                 std::span<const std::size_t> agents);

struct NumericalBootstrapConfig {
    double epsilon_n1 = 0.0;
    double epsilon_n2 = 0.0;
};

/// epsilon_N1 = epsilon_N2 = c4 * N^{-5/7} * log(N)^{-5/14}.
NumericalBootstrapConfig ms_epsilons(std::size_t n, double c4);

struct MsBootstrap {
    std::vector<std::vector<double>> beta_draws;
    std::vector<std::vector<double>> gamma_draws;
    std::vector<std::pair<double, double>> ci_beta;
    std::vector<std::pair<double, double>> ci_gamma;
};

/// Numerical bootstrap: each draw maximizes the original criterion plus a
/// (N*eps)^{1/2}-weighted bootstrap-minus-original difference. Confidence
/// intervals use the root method with scale (N*eps)^{-1/3}. With eps = 1/N
/// the objective reduces to the classic bootstrap criterion.
MsBootstrap numerical_bootstrap_ms(const PanelChoiceSample& panel, const MsConfig& config,
                                   const MsEstimate& point, std::uint64_t seed,
                                   std::optional<NumericalBootstrapConfig> eps_override = {});

/// Test statistic N^{-1} L_gamma(gamma_hat) on the given panel.
double eta_stat_panel(const PanelChoiceSample& panel, std::span<const double> gamma_free,
                      const MsBandwidths& h, const KernelSpec& kernel = KernelSpec{2});

/// Bundle-effect test with gamma_hat held fixed across B agent-level
/// resamples; detection means the 5% bootstrap quantile is positive.
TestResult test_eta_panel(const PanelChoiceSample& panel, std::span<const double> gamma_free,
                          const MsConfig& config, int B, std::uint64_t seed);

}  // namespace bundlechoice
