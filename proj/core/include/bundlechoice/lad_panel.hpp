#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bundlechoice/data.hpp"
#include "bundlechoice/de.hpp"
#include "bundlechoice/lad.hpp"
#include "bundlechoice/mlp.hpp"

namespace bundlechoice {

/// First-stage CCPs for the panel model: one entry per agent and period
/// pair, both periods' probabilities conditional on both periods'
/// covariates.
struct PanelCcp {
    struct Entry {
        std::size_t agent = 0;
        std::size_t t = 0, s = 0;  // t > s
        std::array<double, 4> p_t{}, p_s{};
    };
    std::vector<Entry> entries;
};

struct PanelLadConfig {
    MlpConfig mlp;
    DeConfig de;
    bool include_rho_b = false;
};

/// Trains one shared network on inputs (Z_t, Z_s) concatenated with targets
/// (Y_t, Y_s); predictions give dp_d = p_t[d] - p_s[d] per agent.
PanelCcp fit_panel_ccp(const PanelChoiceSample& panel, const MlpConfig& config,
                       std::uint64_t seed);

/// Within-agent analog of the cross-sectional debiased criterion with
/// time-differenced indices; the indicator tables are unchanged.
double panel_lad_criterion(const PanelChoiceSample& panel, const PanelCcp& ccp,
                           const ModelParams& vartheta);

struct PanelLadEstimate {
    ModelParams params;
    double criterion = 0.0;
};

PanelLadEstimate estimate_panel_lad(const PanelChoiceSample& panel, const PanelLadConfig& config);

PanelLadEstimate estimate_panel_lad_with_ccp(const PanelChoiceSample& panel, const PanelCcp& ccp,
                                             const PanelLadConfig& config);

}  // namespace bundlechoice
