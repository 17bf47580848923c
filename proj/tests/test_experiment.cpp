#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fcollapse/errors.hpp"
#include "fcollapse/experiment.hpp"
#include "fcollapse/io.hpp"

using namespace fcollapse;

namespace {

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

ScenarioConfig quick(const std::string& name, std::size_t n = 800) {
    ScenarioConfig c = builtin_scenario(name);
    c.n_subjects = n;
    c.thresholds.pa_replicates = 60;
    return c;
}

}  // namespace

TEST_CASE("builtin scenarios") {
    CHECK(builtin_scenario_names() ==
          std::vector<std::string>{"figure1", "identity", "positive-block", "mixed-sign", "anxiety-depression"});
    for (const auto& name : builtin_scenario_names()) {
        const ScenarioConfig c = builtin_scenario(name);
        CHECK(c.name == name);
        CHECK_NOTHROW(c.validate());
        CHECK(validate_spec(c.spec).passed(check::kIterationSufficient));
    }

    const ScenarioConfig fig = builtin_scenario("figure1");
    CHECK(fig.spec.p == 12);
    CHECK(fig.spec.m == 2);
    CHECK(fig.spec.b == Matrix::from_rows({{0.7, 0.3}, {0.2, 0.8}}));
    CHECK(fig.spec.rho == 0.2);
    CHECK(fig.wave_schedule == std::vector<std::size_t>{1, 2, 5, 10, 20, 40});
    CHECK(fig.n_subjects == 5000);
    CHECK(fig.seed == 42);
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(fig.spec.lambda(i, i / 6) == 0.8);
        CHECK(fig.spec.lambda(i, 1 - i / 6) == 0.0);
    }
    CHECK(validate_spec(fig.spec).all_passed());

    CHECK(builtin_scenario("identity").spec.b == Matrix::identity(2));
    CHECK(equivalence_classes(builtin_scenario("mixed-sign").spec.b).classes.size() == 1);
    CHECK(equivalence_classes(builtin_scenario("mixed-sign").spec.b).classes[0].size() == 3);

    const ScenarioConfig ad = builtin_scenario("anxiety-depression");
    CHECK(ad.spec.b == fig.spec.b);
    REQUIRE(ad.spec.item_blocks.size() == 2);
    CHECK(ad.spec.item_blocks[0].label == "anxiety");
    CHECK(ad.spec.item_blocks[1].label == "depression");

    const Matrix pos = builtin_scenario("positive-block").spec.b;
    CHECK(pos.rows() == 3);
    for (double x : pos.data()) CHECK(x > 0.0);
    CHECK(std::abs(eigenvalues(pos)[0] - 1.0) < 1e-12);
    CHECK(builtin_scenario("positive-block") == builtin_scenario("positive-block"));

    CHECK_THROWS_AS(builtin_scenario("nope"), InvalidInput);
}

TEST_CASE("config validation") {
    ScenarioConfig c = builtin_scenario("figure1");
    c.wave_schedule = {};
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c.wave_schedule = {1, 1};
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c.wave_schedule = {3, 2};
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c.wave_schedule = {0, 2};
    CHECK_NOTHROW(c.validate());
    c.n_subjects = 1;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
}

TEST_CASE("figure1 collapses") {
    const ExperimentReport r = run_collapse_experiment(quick("figure1"));
    REQUIRE(r.waves.size() == 6);
    CHECK(r.waves.front().population_rank == 2);
    CHECK(r.waves.back().population_rank == 1);
    CHECK(r.asymptotic_rank == 1u);
    REQUIRE(r.collapse_wave.has_value());
    // The second latent eigenvalue decays like 0.25^t.
    for (std::size_t k = 1; k < r.waves.size(); ++k)
        CHECK(r.waves[k].population_leading[1] < r.waves[k - 1].population_leading[1]);
    const auto& last = r.waves.back().population_leading;
    CHECK(last[1] < 1e-6 * last[0]);
    CHECK(r.verdict.find("equals asymptotic rank 1") != std::string::npos);

    const auto rows = lines(report_to_csv(r));
    CHECK(rows.front() == "wave,population_rank,est_reduced,est_parallel,est_gap,lambda1,lambda2,cross_block_max");
    CHECK(rows.size() == 7);
    CHECK(rows.back().rfind("40,1,", 0) == 0);
}

TEST_CASE("identity never collapses") {
    const ExperimentReport r = run_collapse_experiment(quick("identity"));
    for (const auto& w : r.waves) {
        CHECK(w.population_rank == 2);
        CHECK(w.population_cross.max_abs == 0.0);
    }
    CHECK(r.asymptotic_rank == 2u);
}

TEST_CASE("final rank matches asymptotic rank for convergent scenarios") {
    for (const auto& name : builtin_scenario_names()) {
        const ExperimentReport r = run_collapse_experiment(quick(name, 300));
        REQUIRE(r.asymptotic_rank.has_value());
        CHECK(r.waves.back().population_rank == *r.asymptotic_rank);
    }
    const ExperimentReport mixed = run_collapse_experiment(quick("mixed-sign", 300));
    CHECK(mixed.waves.back().population_rank == 2);
    CHECK(mixed.partition.classes.size() == 1);
}

TEST_CASE("population path ignores seed and sample size") {
    const ExperimentReport a = run_collapse_experiment(quick("figure1", 300));
    ScenarioConfig other = quick("figure1", 500);
    other.seed = 7;
    const ExperimentReport b = run_collapse_experiment(other);
    for (std::size_t k = 0; k < a.waves.size(); ++k) {
        CHECK(a.waves[k].population_rank == b.waves[k].population_rank);
        CHECK(a.waves[k].population_leading == b.waves[k].population_leading);
        CHECK(a.waves[k].population_cross == b.waves[k].population_cross);
    }
}

TEST_CASE("reruns are identical") {
    const ScenarioConfig c = quick("positive-block", 400);
    const ExperimentReport a = run_collapse_experiment(c);
    const ExperimentReport b = run_collapse_experiment(c);
    CHECK(a == b);
    CHECK(report_to_csv(a) == report_to_csv(b));
    CHECK(report_to_json_text(a) == report_to_json_text(b));
}

TEST_CASE("divergent transition still reports every wave") {
    ScenarioConfig c = quick("figure1", 200);
    c.spec.b = Matrix::from_rows({{1.0, 1.0}, {0.0, 1.0}});
    c.wave_schedule = {1, 3, 6};
    const ExperimentReport r = run_collapse_experiment(c);
    CHECK(r.waves.size() == 3);
    CHECK_FALSE(r.asymptotic_rank.has_value());
    CHECK_FALSE(r.collapse_wave.has_value());
    CHECK(r.verdict.find("does not converge") != std::string::npos);
}

TEST_CASE("report json round trip and files") {
    const ExperimentReport r = run_collapse_experiment(quick("anxiety-depression", 300));
    CHECK(report_from_json_text(report_to_json_text(r)) == r);
    CHECK(report_stem(r) == "anxiety-depression_42");

    const auto dir = std::filesystem::temp_directory_path() / "fcollapse_experiment_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    write_report(r, ReportFormat::csv, dir / "r.csv");
    write_report(r, ReportFormat::json, dir / "r.json");
    CHECK(read_text_file(dir / "r.csv") == report_to_csv(r));
    CHECK(report_from_json_text(read_text_file(dir / "r.json")) == r);
    CHECK_THROWS_AS(write_report(r, ReportFormat::csv, dir / "missing" / "r.csv"), IoError);
    std::filesystem::remove_all(dir);
}
