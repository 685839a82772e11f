#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "bundlechoice/data.hpp"
#include "bundlechoice/stats.hpp"

namespace bundlechoice {

/// Cross-sectional CSV: named covariate columns (x1_*, x2_*, w_*, s_*) and a
/// `choice` column in {00,10,01,11}. Panel CSV prefixes `agent,period`.
/// Values round-trip exactly (%.17g).
void write_cross_csv(const ChoiceSample& sample, std::ostream& os);
void write_panel_csv(const PanelChoiceSample& panel, std::ostream& os);

/// Readers infer the discrete masks: a covariate column is discrete when
/// every value is 0 or 1.
ChoiceSample read_cross_csv(std::istream& is);
PanelChoiceSample read_panel_csv(std::istream& is);

/// Peeks at the header to distinguish the two layouts.
bool csv_is_panel(const std::string& path);

ChoiceSample read_cross_csv_file(const std::string& path);
PanelChoiceSample read_panel_csv_file(const std::string& path);
void write_cross_csv_file(const ChoiceSample& sample, const std::string& path);
void write_panel_csv_file(const PanelChoiceSample& panel, const std::string& path);

/// Six significant digits, the serialization used by summary exports.
std::string format_sig(double v);

/// Stable column order: parameter,mbias,rmse,med,mad[,coverage,length].
/// JSON mirrors the CSV fields.
void export_summary(const ReplicationSummary& summary,
                    const std::optional<CoverageSummary>& coverage, const std::string& path,
                    const std::string& format);

}  // namespace bundlechoice
