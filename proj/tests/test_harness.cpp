#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "bundlechoice/dgp.hpp"
#include "bundlechoice/harness.hpp"
#include "bundlechoice/io.hpp"
#include "bundlechoice/rng.hpp"

using namespace bundlechoice;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/bc_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("summary statistics against a two-pass reference") {
    Rng rng(9);
    std::vector<std::vector<double>> errors;
    for (int r = 0; r < 101; ++r) errors.push_back({rng.uniform(-1, 1), rng.uniform(-2, 2)});

    const auto summary = summarize_errors({"a", "b"}, errors, 0);
    for (std::size_t p = 0; p < 2; ++p) {
        // two-pass reference: collect, then reduce
        std::vector<double> col;
        for (const auto& row : errors) col.push_back(row[p]);
        double mean = 0.0;
        for (double v : col) mean += v;
        mean /= static_cast<double>(col.size());
        double msq = 0.0;
        for (double v : col) msq += v * v;
        msq /= static_cast<double>(col.size());
        std::vector<double> absd;
        for (double v : col) absd.push_back(std::abs(v));

        CHECK(std::abs(summary.rows[p].mbias - mean) < 1e-12);
        CHECK(std::abs(summary.rows[p].rmse - std::sqrt(msq)) < 1e-12);
        CHECK(summary.rows[p].med == median(col));
        CHECK(summary.rows[p].mad == median(absd));
        CHECK(summary.rows[p].rmse >= std::abs(summary.rows[p].mbias));
    }
}

TEST_CASE("single replication degenerates to that replication's error") {
    const std::vector<std::vector<double>> errors{{0.3, -0.4}};
    const auto summary = summarize_errors({"a", "b"}, errors, 0);
    CHECK(summary.rows[0].mbias == 0.3);
    CHECK(summary.rows[0].rmse == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(summary.rows[0].med == 0.3);
    CHECK(summary.rows[0].mad == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(summary.rows[1].mad == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("mad about the median differs from mad about the truth") {
    const std::vector<std::vector<double>> errors{{1.0}, {1.2}, {1.4}};
    const auto truth_mode = summarize_errors({"a"}, errors, 0, MadMode::DeviationFromTruth);
    const auto median_mode = summarize_errors({"a"}, errors, 0, MadMode::AboutMedian);
    CHECK(truth_mode.rows[0].mad == doctest::Approx(1.2));
    CHECK(median_mode.rows[0].mad == doctest::Approx(0.2));
}

TEST_CASE("replication seed stream is batch-independent") {
    // the sample produced inside a batch for replication k is the one
    // produced standalone from replication_seed(base, k)
    const std::uint64_t base = 99;
    const auto alone = simulate_cross(1, 50, replication_seed(base, 3));
    const auto again = simulate_cross(1, 50, replication_seed(base, 3));
    CHECK(alone.choice == again.choice);
    CHECK(replication_seed(base, 0) != replication_seed(base, 1));
}

TEST_CASE("run_design smoke: worker count does not change the result" * doctest::timeout(600)) {
    RunConfig config;
    config.estimator = EstimatorKind::Ms;
    config.design = 3;
    config.n = 120;
    config.reps = 4;
    config.seed = 5;
    config.de.max_iter = 40;

    config.workers = 1;
    const auto serial = run_design(config);
    config.workers = 2;
    const auto parallel = run_design(config);

    REQUIRE(serial.summary.rows.size() == parallel.summary.rows.size());
    for (std::size_t p = 0; p < serial.summary.rows.size(); ++p) {
        CHECK(serial.summary.rows[p].mbias == parallel.summary.rows[p].mbias);
        CHECK(serial.summary.rows[p].rmse == parallel.summary.rows[p].rmse);
    }
    CHECK(serial.summary.reps == 4);
    CHECK(serial.summary.failures == 0);
}

TEST_CASE("run_design validates configs") {
    RunConfig config;
    config.estimator = EstimatorKind::Mrc;
    config.design = 3;  // panel design with a cross-sectional estimator
    CHECK_THROWS_AS(run_design(config), std::invalid_argument);
    config.design = 1;
    config.reps = 0;
    CHECK_THROWS_AS(run_design(config), std::invalid_argument);
    config.reps = 10;
    config.bootstrap_B = 5;
    CHECK_THROWS_AS(run_design(config), std::invalid_argument);
}

TEST_CASE("failure cap breach raises the dedicated error") {
    RunConfig config;
    config.estimator = EstimatorKind::Mrc;
    config.design = 1;
    config.n = 5;  // below the estimator minimum: every replication fails
    config.reps = 4;
    CHECK_THROWS_AS(run_design(config), failure_cap_error);
}

TEST_CASE("estimator names round trip") {
    for (auto kind : {EstimatorKind::Mrc, EstimatorKind::Lad, EstimatorKind::Ms,
                      EstimatorKind::PanelLad})
        CHECK(estimator_from_name(estimator_name(kind)) == kind);
    CHECK_THROWS_AS(estimator_from_name("nope"), std::invalid_argument);
}

TEST_CASE("export formats") {
    ReplicationSummary summary;
    summary.reps = 10;
    summary.failures = 0;
    summary.rows = {{"beta", 0.0123456, 0.52, -0.003, 0.4},
                    {"gamma", -0.07, 0.44, 0.001, 0.3}};
    CoverageSummary coverage;
    coverage.bootstrap_B = 99;
    coverage.rows = {{"beta", 0.94, 1.23456789}, {"gamma", 0.9, 1.0}};

    SUBCASE("csv header and values") {
        TempFile f("summary.csv");
        export_summary(summary, std::nullopt, f.path, "csv");
        const auto text = slurp(f.path);
        CHECK(text.rfind("parameter,mbias,rmse,med,mad\n", 0) == 0);
        CHECK(text.find("beta,0.0123456,0.52,-0.003,0.4") != std::string::npos);
    }
    SUBCASE("csv with coverage appends the two columns") {
        TempFile f("summary_cov.csv");
        export_summary(summary, coverage, f.path, "csv");
        const auto text = slurp(f.path);
        CHECK(text.rfind("parameter,mbias,rmse,med,mad,coverage,length\n", 0) == 0);
        CHECK(text.find("beta,0.0123456,0.52,-0.003,0.4,0.94,1.23457") != std::string::npos);
    }
    SUBCASE("json mirrors the csv fields and round-trips") {
        TempFile f("summary.json");
        export_summary(summary, coverage, f.path, "json");
        const auto text = slurp(f.path);
        CHECK(text.find("\"parameter\": \"beta\"") != std::string::npos);
        CHECK(text.find("\"rmse\": \"0.52\"") != std::string::npos);
        CHECK(text.find("\"coverage\": \"0.94\"") != std::string::npos);
    }
    SUBCASE("round trip: exported values parse back to their serialization") {
        TempFile f("summary_rt.csv");
        export_summary(summary, std::nullopt, f.path, "csv");
        std::ifstream in(f.path);
        std::string header, line;
        std::getline(in, header);
        std::getline(in, line);
        std::stringstream ss(line);
        std::string name, field;
        std::getline(ss, name, ',');
        std::getline(ss, field, ',');
        CHECK(name == "beta");
        CHECK(std::stod(field) == std::stod(format_sig(summary.rows[0].mbias)));
    }
    SUBCASE("unknown format rejected") {
        TempFile f("summary.what");
        CHECK_THROWS_AS(export_summary(summary, std::nullopt, f.path, "yaml"),
                        std::invalid_argument);
    }
}

TEST_CASE("identical run configs export identical files" * doctest::timeout(600)) {
    RunConfig config;
    config.estimator = EstimatorKind::Ms;
    config.design = 3;
    config.n = 100;
    config.reps = 3;
    config.seed = 11;
    config.de.max_iter = 30;

    TempFile f1("det1.csv"), f2("det2.csv");
    const auto a = run_design(config);
    export_summary(a.summary, a.coverage, f1.path, "csv");
    const auto b = run_design(config);
    export_summary(b.summary, b.coverage, f2.path, "csv");
    CHECK(slurp(f1.path) == slurp(f2.path));
}

TEST_CASE("cross csv round trip") {
    const auto sample = simulate_cross(2, 40, 77);
    std::stringstream ss;
    write_cross_csv(sample, ss);
    const auto back = read_cross_csv(ss);
    CHECK(back.size() == sample.size());
    CHECK(back.x1 == sample.x1);
    CHECK(back.x2 == sample.x2);
    CHECK(back.w == sample.w);
    CHECK(back.s == sample.s);
    CHECK(back.choice == sample.choice);
    // the Bernoulli column is recognized as discrete
    CHECK(back.discrete_x == std::vector<bool>{false, true});
    CHECK(back.discrete_w == std::vector<bool>{false, false});
}

TEST_CASE("panel csv round trip") {
    const auto panel = simulate_panel(3, 25, 13);
    std::stringstream ss;
    write_panel_csv(panel, ss);
    const auto back = read_panel_csv(ss);
    CHECK(back.n_agents == panel.n_agents);
    CHECK(back.periods == panel.periods);
    for (std::size_t t = 0; t < 2; ++t) {
        CHECK(back.x1[t] == panel.x1[t]);
        CHECK(back.w[t] == panel.w[t]);
        CHECK(back.choice[t] == panel.choice[t]);
    }
    CHECK(back.discrete_x == std::vector<bool>{false, true});
}
