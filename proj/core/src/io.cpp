#include "bundlechoice/io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace bundlechoice {

namespace {

std::string format_exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

struct ParsedCsv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

ParsedCsv parse_csv(std::istream& is) {
    ParsedCsv out;
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("CSV: missing header");
    out.header = split_line(line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (fields.size() != out.header.size())
            throw std::runtime_error("CSV: ragged row");
        out.rows.push_back(std::move(fields));
    }
    return out;
}

// column indices per block prefix, in numeric order x1_1, x1_2, ...
std::vector<std::size_t> block_columns(const std::vector<std::string>& header,
                                       const std::string& prefix) {
    std::map<int, std::size_t> ordered;
    for (std::size_t j = 0; j < header.size(); ++j) {
        const auto& name = header[j];
        if (name.rfind(prefix, 0) == 0) ordered[std::stoi(name.substr(prefix.size()))] = j;
    }
    std::vector<std::size_t> out;
    for (const auto& [idx, col] : ordered) out.push_back(col);
    return out;
}

std::vector<bool> infer_discrete(const Matrix& block) {
    std::vector<bool> mask(block.cols(), false);
    for (std::size_t j = 0; j < block.cols(); ++j) {
        bool binary = true;
        for (std::size_t i = 0; i < block.rows() && binary; ++i) {
            const double v = block(i, j);
            if (v != 0.0 && v != 1.0) binary = false;
        }
        mask[j] = binary && block.rows() > 0;
    }
    return mask;
}

void write_covariate_header(std::ostream& os, std::size_t k1, std::size_t k2, std::size_t k3) {
    for (std::size_t j = 0; j < k1; ++j) os << "x1_" << j + 1 << ",";
    for (std::size_t j = 0; j < k1; ++j) os << "x2_" << j + 1 << ",";
    for (std::size_t j = 0; j < k2; ++j) os << "w_" << j + 1 << ",";
    for (std::size_t j = 0; j < k3; ++j) os << "s_" << j + 1 << ",";
    os << "choice\n";
}

void write_covariate_row(std::ostream& os, const ChoiceSample& sample, std::size_t i) {
    for (std::size_t j = 0; j < sample.k1(); ++j) os << format_exact(sample.x1(i, j)) << ",";
    for (std::size_t j = 0; j < sample.k1(); ++j) os << format_exact(sample.x2(i, j)) << ",";
    for (std::size_t j = 0; j < sample.k2(); ++j) os << format_exact(sample.w(i, j)) << ",";
    for (std::size_t j = 0; j < sample.k3(); ++j) os << format_exact(sample.s(i, j)) << ",";
    os << alt_label(sample.choice[i]) << "\n";
}

}  // namespace

void write_cross_csv(const ChoiceSample& sample, std::ostream& os) {
    write_covariate_header(os, sample.k1(), sample.k2(), sample.k3());
    for (std::size_t i = 0; i < sample.size(); ++i) write_covariate_row(os, sample, i);
}

void write_panel_csv(const PanelChoiceSample& panel, std::ostream& os) {
    os << "agent,period,";
    write_covariate_header(os, panel.k1(), panel.k2(), panel.k3());
    for (std::size_t i = 0; i < panel.n_agents; ++i) {
        for (std::size_t t = 0; t < panel.periods; ++t) {
            os << i + 1 << "," << t + 1 << ",";
            for (std::size_t j = 0; j < panel.k1(); ++j)
                os << format_exact(panel.x1[t](i, j)) << ",";
            for (std::size_t j = 0; j < panel.k1(); ++j)
                os << format_exact(panel.x2[t](i, j)) << ",";
            for (std::size_t j = 0; j < panel.k2(); ++j)
                os << format_exact(panel.w[t](i, j)) << ",";
            for (std::size_t j = 0; j < panel.k3(); ++j)
                os << format_exact(panel.s[t](i, j)) << ",";
            os << alt_label(panel.choice[t][i]) << "\n";
        }
    }
}

ChoiceSample read_cross_csv(std::istream& is) {
    const auto csv = parse_csv(is);
    const auto x1_cols = block_columns(csv.header, "x1_");
    const auto x2_cols = block_columns(csv.header, "x2_");
    const auto w_cols = block_columns(csv.header, "w_");
    const auto s_cols = block_columns(csv.header, "s_");
    if (x1_cols.empty() || x1_cols.size() != x2_cols.size() || w_cols.empty())
        throw std::runtime_error("CSV: expected x1_*, x2_*, w_* covariate columns");
    std::size_t choice_col = csv.header.size();
    for (std::size_t j = 0; j < csv.header.size(); ++j)
        if (csv.header[j] == "choice") choice_col = j;
    if (choice_col == csv.header.size()) throw std::runtime_error("CSV: missing choice column");

    const std::size_t n = csv.rows.size();
    ChoiceSample sample;
    sample.x1 = Matrix(n, x1_cols.size());
    sample.x2 = Matrix(n, x2_cols.size());
    sample.w = Matrix(n, w_cols.size());
    sample.s = Matrix(n, s_cols.size());
    sample.choice.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = csv.rows[i];
        for (std::size_t j = 0; j < x1_cols.size(); ++j) sample.x1(i, j) = std::stod(row[x1_cols[j]]);
        for (std::size_t j = 0; j < x2_cols.size(); ++j) sample.x2(i, j) = std::stod(row[x2_cols[j]]);
        for (std::size_t j = 0; j < w_cols.size(); ++j) sample.w(i, j) = std::stod(row[w_cols[j]]);
        for (std::size_t j = 0; j < s_cols.size(); ++j) sample.s(i, j) = std::stod(row[s_cols[j]]);
        sample.choice[i] = alt_from_label(row[choice_col]);
    }
    auto mask1 = infer_discrete(sample.x1);
    const auto mask2 = infer_discrete(sample.x2);
    for (std::size_t j = 0; j < mask1.size(); ++j) mask1[j] = mask1[j] && mask2[j];
    sample.discrete_x = mask1;
    sample.discrete_w = infer_discrete(sample.w);
    sample.validate();
    return sample;
}

PanelChoiceSample read_panel_csv(std::istream& is) {
    const auto csv = parse_csv(is);
    const auto x1_cols = block_columns(csv.header, "x1_");
    const auto x2_cols = block_columns(csv.header, "x2_");
    const auto w_cols = block_columns(csv.header, "w_");
    const auto s_cols = block_columns(csv.header, "s_");
    std::size_t agent_col = csv.header.size(), period_col = csv.header.size(),
                choice_col = csv.header.size();
    for (std::size_t j = 0; j < csv.header.size(); ++j) {
        if (csv.header[j] == "agent") agent_col = j;
        if (csv.header[j] == "period") period_col = j;
        if (csv.header[j] == "choice") choice_col = j;
    }
    if (agent_col == csv.header.size() || period_col == csv.header.size() ||
        choice_col == csv.header.size())
        throw std::runtime_error("CSV: panel layout needs agent, period and choice columns");

    std::size_t n_agents = 0, periods = 0;
    for (const auto& row : csv.rows) {
        n_agents = std::max(n_agents, static_cast<std::size_t>(std::stoul(row[agent_col])));
        periods = std::max(periods, static_cast<std::size_t>(std::stoul(row[period_col])));
    }
    if (csv.rows.size() != n_agents * periods)
        throw std::runtime_error("CSV: incomplete panel (need one row per agent-period)");

    PanelChoiceSample panel;
    panel.n_agents = n_agents;
    panel.periods = periods;
    for (std::size_t t = 0; t < periods; ++t) {
        panel.x1.emplace_back(n_agents, x1_cols.size());
        panel.x2.emplace_back(n_agents, x2_cols.size());
        panel.w.emplace_back(n_agents, w_cols.size());
        panel.s.emplace_back(n_agents, s_cols.size());
        panel.choice.emplace_back(n_agents, 0);
    }
    for (const auto& row : csv.rows) {
        const std::size_t i = std::stoul(row[agent_col]) - 1;
        const std::size_t t = std::stoul(row[period_col]) - 1;
        for (std::size_t j = 0; j < x1_cols.size(); ++j) panel.x1[t](i, j) = std::stod(row[x1_cols[j]]);
        for (std::size_t j = 0; j < x2_cols.size(); ++j) panel.x2[t](i, j) = std::stod(row[x2_cols[j]]);
        for (std::size_t j = 0; j < w_cols.size(); ++j) panel.w[t](i, j) = std::stod(row[w_cols[j]]);
        for (std::size_t j = 0; j < s_cols.size(); ++j) panel.s[t](i, j) = std::stod(row[s_cols[j]]);
        panel.choice[t][i] = alt_from_label(row[choice_col]);
    }

    Matrix x_all(n_agents * periods, x1_cols.size());
    for (std::size_t t = 0; t < periods; ++t)
        for (std::size_t i = 0; i < n_agents; ++i)
            for (std::size_t j = 0; j < x1_cols.size(); ++j)
                x_all(t * n_agents + i, j) = panel.x1[t](i, j);
    auto mask1 = infer_discrete(x_all);
    for (std::size_t t = 0; t < periods; ++t)
        for (std::size_t i = 0; i < n_agents; ++i)
            for (std::size_t j = 0; j < x1_cols.size(); ++j)
                x_all(t * n_agents + i, j) = panel.x2[t](i, j);
    const auto mask2 = infer_discrete(x_all);
    for (std::size_t j = 0; j < mask1.size(); ++j) mask1[j] = mask1[j] && mask2[j];
    panel.discrete_x = mask1;

    Matrix w_all(n_agents * periods, w_cols.size());
    for (std::size_t t = 0; t < periods; ++t)
        for (std::size_t i = 0; i < n_agents; ++i)
            for (std::size_t j = 0; j < w_cols.size(); ++j)
                w_all(t * n_agents + i, j) = panel.w[t](i, j);
    panel.discrete_w = infer_discrete(w_all);
    panel.validate();
    return panel;
}

bool csv_is_panel(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    std::getline(in, line);
    return line.rfind("agent,", 0) == 0;
}

ChoiceSample read_cross_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_cross_csv(in);
}

PanelChoiceSample read_panel_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_panel_csv(in);
}

void write_cross_csv_file(const ChoiceSample& sample, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_cross_csv(sample, out);
}

void write_panel_csv_file(const PanelChoiceSample& panel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_panel_csv(panel, out);
}

std::string format_sig(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

void export_summary(const ReplicationSummary& summary,
                    const std::optional<CoverageSummary>& coverage, const std::string& path,
                    const std::string& format) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);

    if (format == "csv") {
        out << "parameter,mbias,rmse,med,mad";
        if (coverage) out << ",coverage,length";
        out << "\n";
        for (std::size_t r = 0; r < summary.rows.size(); ++r) {
            const auto& row = summary.rows[r];
            out << row.parameter << "," << format_sig(row.mbias) << "," << format_sig(row.rmse)
                << "," << format_sig(row.med) << "," << format_sig(row.mad);
            if (coverage) {
                const auto& c = coverage->rows[r];
                out << "," << format_sig(c.coverage) << "," << format_sig(c.mean_length);
            }
            out << "\n";
        }
    } else if (format == "json") {
        nlohmann::ordered_json doc;
        doc["reps"] = summary.reps;
        doc["failures"] = summary.failures;
        if (coverage) doc["bootstrap_B"] = coverage->bootstrap_B;
        doc["rows"] = nlohmann::ordered_json::array();
        for (std::size_t r = 0; r < summary.rows.size(); ++r) {
            const auto& row = summary.rows[r];
            nlohmann::ordered_json jrow;
            jrow["parameter"] = row.parameter;
            jrow["mbias"] = format_sig(row.mbias);
            jrow["rmse"] = format_sig(row.rmse);
            jrow["med"] = format_sig(row.med);
            jrow["mad"] = format_sig(row.mad);
            if (coverage) {
                jrow["coverage"] = format_sig(coverage->rows[r].coverage);
                jrow["length"] = format_sig(coverage->rows[r].mean_length);
            }
            doc["rows"].push_back(jrow);
        }
        out << doc.dump(2) << "\n";
    } else {
        throw std::invalid_argument("export_summary: format must be csv or json");
    }
}

}  // namespace bundlechoice
