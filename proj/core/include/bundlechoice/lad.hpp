#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "bundlechoice/data.hpp"
#include "bundlechoice/de.hpp"
#include "bundlechoice/kernels.hpp"

namespace bundlechoice {

/// First-stage conditional choice probabilities, one simplex row per
/// observation, plus diagnostics from the Nadaraya-Watson fit.
struct CcpTable {
    Matrix p;  // N x 4
    int zero_weight_fallbacks = 0;
    int clipped_rows = 0;
};

struct LadConfig {
    KernelSpec nw_kernel{4};
    double silverman_c = 1.06;
    double aitchison_lambda = -1.0;  // < 0 means use the default 1/N
    bool leave_one_out = false;      // first stage is leave-one-in by default
    DeConfig de;
    bool include_rho_b = false;
};

/// Nadaraya-Watson regression of the one-hot outcomes on Z = (x1,x2,w,s)
/// with shared weights across alternatives (hence rows sum to one), an
/// order-4 Gaussian kernel with Silverman bandwidths for continuous
/// coordinates, and the Aitchison-Aitken kernel for discrete ones.
CcpTable nw_ccp(const ChoiceSample& sample, const LadConfig& config);

/// Indicator pair (I+, I-) for alternative `alt` from the sign pattern of
/// the three pairwise-differenced indices.
std::pair<int, int> lad_indicators(double u1, double u2, double ub, int alt);

/// Spec-level form taking the two observations' covariate rows directly.
std::pair<int, int> lad_indicators(const ChoiceSample& sample, std::size_t i, std::size_t m,
                                   const ModelParams& vartheta, int alt);

/// Debiased LAD criterion: sum over unordered pairs and all four
/// alternatives of [|I+ - dp| + |I- + dp| - 1] * [I+ + I-] with
/// dp = p_hat_d(Z_i) - p_hat_d(Z_m).
double lad_criterion(const ChoiceSample& sample, const CcpTable& ccp,
                     const ModelParams& vartheta);

struct LadEstimate {
    ModelParams params;
    double criterion = 0.0;
    int ccp_zero_weight_fallbacks = 0;
    int ccp_clipped_rows = 0;
};

LadEstimate estimate_lad(const ChoiceSample& sample, const LadConfig& config);

/// Same, with an externally supplied first stage (used by oracle-CCP
/// ablations and the identification checks).
LadEstimate estimate_lad_with_ccp(const ChoiceSample& sample, const CcpTable& ccp,
                                  const LadConfig& config);

/// Free-parameter packing used by the optimizer: (beta_free, gamma_free,
/// rho1, rho2[, rho_b]).
std::vector<double> pack_lad_params(const ModelParams& params, bool include_rho_b);
ModelParams unpack_lad_params(std::span<const double> packed, std::size_t k1, std::size_t k2,
                              std::size_t k3, bool include_rho_b);

}  // namespace bundlechoice
