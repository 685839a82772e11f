#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "bundlechoice/data.hpp"

namespace bundlechoice {

/// Latent utilities over the four alternatives. The outside option (0,0) is
/// normalized to zero; the bundle utility is the sum of the stand-alone
/// utilities plus eta times the bundle index. Panel variants carry their
/// fixed effects inside `latent`.
std::array<double, 4> utilities(const ModelParams& params, std::span<const double> x1,
                                std::span<const double> x2, std::span<const double> w,
                                std::span<const double> s, const LatentDraw& latent);

/// Argmax over the four utilities. Ties within 1e-12 go to the lowest index
/// in the order (0,0),(1,0),(0,1),(1,1); `tied` reports whether one occurred.
int choose(std::span<const double> u, bool* tied = nullptr);

/// True coefficients used by all four designs.
ModelParams design_truth();

/// Cross-sectional designs 1 (independent draws) and 2 (0.5-correlated
/// x-blocks and errors). `zero_eta` drops the bundle term; it is a variant
/// used by the bundle-effect test checks, not a separate design id.
ChoiceSample simulate_cross(int design, std::size_t n, std::uint64_t seed, bool zero_eta = false);

/// Panel designs 3 and 4 with T=2 and fixed effects built from the period
/// covariates. Design 4 adds the 0.25 equicorrelations.
PanelChoiceSample simulate_panel(int design, std::size_t n, std::uint64_t seed,
                                 bool zero_eta = false);

/// Monte Carlo estimate of P(Y_d = 1 | Z = z) at fixed covariates: redraws
/// the latent variables M times and counts argmax choices. Entries sum to
/// one exactly.
std::array<double, 4> oracle_ccp(int design, const ModelParams& params,
                                 std::span<const double> x1, std::span<const double> x2,
                                 std::span<const double> w, std::span<const double> s,
                                 std::size_t m_draws, std::uint64_t seed, bool zero_eta = false);

/// Panel analog: choice probabilities for both periods conditional on both
/// periods' covariates (fixed effects are implied by the design formulas).
/// Index 0 of the result is period s (first), index 1 is period t (second).
std::array<std::array<double, 4>, 2> oracle_panel_ccp(
    int design, const ModelParams& params, std::span<const double> x1_s,
    std::span<const double> x2_s, std::span<const double> w_s, std::span<const double> s_s,
    std::span<const double> x1_t, std::span<const double> x2_t, std::span<const double> w_t,
    std::span<const double> s_t, std::size_t m_draws, std::uint64_t seed, bool zero_eta = false);

}  // namespace bundlechoice
