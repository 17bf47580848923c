// fcollapse: command-line front end for the factor-collapse toolkit.
//
// Exit codes: 0 success, 2 invalid input or config, 3 numeric failure,
// 4 I/O failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fcollapse/equilibrium.hpp"
#include "fcollapse/errors.hpp"
#include "fcollapse/experiment.hpp"
#include "fcollapse/extraction.hpp"
#include "fcollapse/io.hpp"
#include "fcollapse/model.hpp"
#include "fcollapse/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fcollapse;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

int g_verbosity = 0;

void note(const std::string& msg) {
    if (g_verbosity > 0) std::cerr << "fcollapse: " << msg << '\n';
}

// A bare m x m array, or an object carrying "b" (e.g. a full model spec).
Matrix load_transition(const fs::path& path) {
    const json j = read_json_file(path);
    if (j.is_object()) {
        if (!j.contains("b")) throw InvalidInput("expected a nested array or an object with field 'b'");
        return j.at("b").get<Matrix>();
    }
    return j.get<Matrix>();
}

ModelSpec load_spec(const fs::path& path) {
    ModelSpec spec = read_json_file(path).get<ModelSpec>();
    require_structurally_valid(spec);
    return spec;
}

// A bare p x p array, or an object carrying "covariance" (the output of
// the covariance subcommand).
Matrix load_covariance(const fs::path& path) {
    const json j = read_json_file(path);
    if (j.is_object()) {
        if (!j.contains("covariance")) throw InvalidInput("expected a nested array or an object with field 'covariance'");
        return j.at("covariance").get<Matrix>();
    }
    return j.get<Matrix>();
}

struct AnalyzeArgs {
    std::string input;
    double tol = kDefaultEigTol;
    double zero_tol = kDefaultZeroTol;
};

int run_analyze(const AnalyzeArgs& args) {
    const Matrix b = load_transition(args.input);
    if (!b.is_square()) throw InvalidInput("transition matrix must be square");
    const ConvergenceReport conv = classify_convergence(b, args.tol);
    const EquivalencePartition partition = equivalence_classes(b, args.zero_tol);
    const auto classes = block_decompose(b, partition, args.tol, args.zero_tol);
    std::cout << json{{"convergence", conv}, {"partition", partition}, {"classes", classes}}.dump(2) << '\n';
    return kExitOk;
}

int run_validate(const std::string& input, double rel_tol) {
    const ModelSpec spec = read_json_file(input).get<ModelSpec>();
    std::cout << json(validate_spec(spec, rel_tol)).dump(2) << '\n';
    return kExitOk;
}

struct SimulateArgs {
    std::string input;
    std::size_t waves = 0;
    std::size_t n = 0;
    std::uint64_t seed = 42;
    std::string out;
};

int run_simulate(const SimulateArgs& args) {
    const ModelSpec spec = load_spec(args.input);
    note("simulating " + std::to_string(args.n) + " subjects over " + std::to_string(args.waves) + " waves");
    const TrajectoryPanel panel = simulate_panel(spec, args.waves, args.n, args.seed);
    write_file_atomic(args.out, panel_to_csv(panel));
    note("wrote " + args.out);
    return kExitOk;
}

struct CovarianceArgs {
    std::string input;
    std::size_t wave = 0;
    bool equilibrium = false;
    double abs_tol = 1e-12;
    std::size_t max_waves = 100000;
    double tol = kDefaultEigTol;
};

int run_covariance(const CovarianceArgs& args) {
    const ModelSpec spec = load_spec(args.input);
    json out;
    if (args.equilibrium) {
        const EquilibriumCovariance eq = equilibrium_covariance(spec, args.abs_tol, args.max_waves, args.tol);
        out = json{{"equilibrium", true},
                   {"waves_to_converge", eq.waves},
                   {"last_change", eq.last_change},
                   {"latent_covariance", eq.latent},
                   {"covariance", eq.covariance}};
    } else {
        out = json{{"equilibrium", false},
                   {"wave", args.wave},
                   {"latent_covariance", latent_covariance(spec, args.wave)},
                   {"covariance", population_covariance(spec, args.wave)}};
    }
    std::cout << out.dump(2) << '\n';
    return kExitOk;
}

struct ExtractArgs {
    std::string input;
    std::string method = "reduced-rank";
    std::optional<std::size_t> wave;
    std::optional<std::size_t> loadings;
    std::optional<std::size_t> n;
    DimensionParams params;
    std::string scree;
};

int run_extract(const ExtractArgs& args) {
    const DimensionMethod method = parse_dimension_method(args.method);
    DimensionParams params = args.params;
    Matrix s;
    if (fs::path(args.input).extension() == ".csv") {
        const TrajectoryPanel panel = read_panel_csv(args.input);
        if (!args.wave) throw InvalidInput("--wave is required for panel input");
        s = sample_covariance(panel, *args.wave);
        params.n_subjects = args.n.value_or(panel.n_subjects);
    } else {
        s = load_covariance(args.input);
        params.n_subjects = args.n.value_or(params.n_subjects);
    }
    const DimensionalityReport report = estimate_dimensionality(s, method, params);
    json out{{"dimensionality", report}};
    if (args.loadings) out["loadings"] = extract_loadings(s, *args.loadings);
    if (!args.scree.empty()) write_file_atomic(args.scree, scree_csv(report.eigenvalues));
    std::cout << out.dump(2) << '\n';
    return kExitOk;
}

struct ExperimentArgs {
    std::string target;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n;
    std::vector<std::size_t> waves;
};

int run_experiment(const ExperimentArgs& args) {
    ScenarioConfig config;
    const fs::path target(args.target);
    if (target.extension() == ".json") {
        config = read_json_file(target).get<ScenarioConfig>();
    } else {
        config = builtin_scenario(args.target);
    }
    if (args.seed) config.seed = *args.seed;
    if (args.n) config.n_subjects = *args.n;
    if (!args.waves.empty()) config.wave_schedule = args.waves;
    config.validate();
    require_structurally_valid(config.spec);

    note("running scenario " + config.name);
    const ExperimentReport report = run_collapse_experiment(config);

    std::error_code ec;
    fs::create_directories(args.out, ec);
    if (ec) throw IoError("cannot create output directory", args.out);
    const fs::path stem = fs::path(args.out) / report_stem(report);
    fs::path json_path = stem;
    json_path += ".json";
    fs::path csv_path = stem;
    csv_path += ".csv";
    write_report(report, ReportFormat::json, json_path);
    write_report(report, ReportFormat::csv, csv_path);
    std::cout << json{{"scenario", report.scenario},
                      {"json", json_path.string()},
                      {"csv", csv_path.string()},
                      {"verdict", report.verdict}}
                     .dump(2)
              << '\n';
    return kExitOk;
}

int run_scenarios() {
    for (const auto& name : builtin_scenario_names()) {
        const ScenarioConfig c = builtin_scenario(name);
        std::cout << name << "\tp=" << c.spec.p << " m=" << c.spec.m << " n=" << c.n_subjects << " seed=" << c.seed
                  << '\n';
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic factor model simulation and equilibrium dimensionality analysis"};
    app.require_subcommand(1);
    app.add_flag("-v,--verbose", g_verbosity, "Progress notes on stderr (repeatable)");

    AnalyzeArgs analyze;
    auto* cmd_analyze = app.add_subcommand("analyze", "Convergence, equivalence classes and class bounds of B");
    cmd_analyze->add_option("input", analyze.input, "JSON file: bare m x m array or object with 'b'")->required();
    cmd_analyze->add_option("--tol", analyze.tol, "Eigenvalue-1 tolerance")->capture_default_str();
    cmd_analyze->add_option("--zero-tol", analyze.zero_tol, "Structural-zero threshold")->capture_default_str();

    std::string validate_input;
    double validate_tol = kDefaultRankTol;
    auto* cmd_validate = app.add_subcommand("validate", "Check a model spec's assumptions");
    cmd_validate->add_option("input", validate_input, "Model spec JSON")->required();
    cmd_validate->add_option("--rel-tol", validate_tol, "Singularity tolerance for B")->capture_default_str();

    SimulateArgs simulate;
    auto* cmd_simulate = app.add_subcommand("simulate", "Simulate a panel and write it as CSV");
    cmd_simulate->add_option("input", simulate.input, "Model spec JSON")->required();
    cmd_simulate->add_option("--waves", simulate.waves, "Number of waves (0..waves-1)")->required()->check(CLI::PositiveNumber);
    cmd_simulate->add_option("--n", simulate.n, "Number of subjects")->required()->check(CLI::PositiveNumber);
    cmd_simulate->add_option("--seed", simulate.seed, "Random seed")->capture_default_str();
    cmd_simulate->add_option("--out", simulate.out, "Output CSV path")->required();

    CovarianceArgs covariance;
    auto* cmd_cov = app.add_subcommand("covariance", "Exact population covariance at a wave or in equilibrium");
    cmd_cov->add_option("input", covariance.input, "Model spec JSON")->required();
    cmd_cov->add_option("--wave", covariance.wave, "Wave index")->capture_default_str();
    cmd_cov->add_flag("--equilibrium", covariance.equilibrium, "Iterate to the equilibrium covariance");
    cmd_cov->add_option("--abs-tol", covariance.abs_tol, "Equilibrium stopping tolerance (Frobenius)")->capture_default_str();
    cmd_cov->add_option("--max-waves", covariance.max_waves, "Equilibrium wave budget")->capture_default_str();
    cmd_cov->add_option("--tol", covariance.tol, "Eigenvalue-1 tolerance")->capture_default_str();

    ExtractArgs extract;
    auto* cmd_extract = app.add_subcommand("extract", "Estimate the number of factors and loadings");
    cmd_extract->add_option("input", extract.input, "Covariance JSON or panel CSV")->required();
    cmd_extract->add_option("--method", extract.method, "reduced-rank | parallel-analysis | gap-ratio")
        ->capture_default_str();
    cmd_extract->add_option("--wave", extract.wave, "Wave to use (panel input)");
    cmd_extract->add_option("--loadings", extract.loadings, "Also extract k loadings")->check(CLI::PositiveNumber);
    cmd_extract->add_option("--n", extract.n, "Sample size for parallel analysis (default: panel size, else 1000)");
    cmd_extract->add_option("--replicates", extract.params.replicates, "Parallel-analysis replicates")->capture_default_str();
    cmd_extract->add_option("--percentile", extract.params.percentile, "Parallel-analysis percentile")->capture_default_str();
    cmd_extract->add_option("--seed", extract.params.seed, "Parallel-analysis seed")->capture_default_str();
    cmd_extract->add_option("--rel-tol", extract.params.rel_tol, "Reduced-rank tolerance")->capture_default_str();
    cmd_extract->add_option("--max-k", extract.params.max_k, "Gap-ratio search limit")->capture_default_str();
    cmd_extract->add_option("--scree", extract.scree, "Write eigenvalues as index,value CSV");

    ExperimentArgs experiment;
    auto* cmd_experiment = app.add_subcommand("experiment", "Run a collapse experiment and write reports");
    cmd_experiment->add_option("target", experiment.target, "Built-in scenario name or config JSON")->required();
    cmd_experiment->add_option("--out", experiment.out, "Output directory")->capture_default_str();
    cmd_experiment->add_option("--seed", experiment.seed, "Override seed");
    cmd_experiment->add_option("--n", experiment.n, "Override subject count");
    cmd_experiment->add_option("--waves", experiment.waves, "Override wave schedule")->delimiter(',');

    auto* cmd_scenarios = app.add_subcommand("scenarios", "List built-in scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    try {
        if (cmd_analyze->parsed()) return run_analyze(analyze);
        if (cmd_validate->parsed()) return run_validate(validate_input, validate_tol);
        if (cmd_simulate->parsed()) return run_simulate(simulate);
        if (cmd_cov->parsed()) return run_covariance(covariance);
        if (cmd_extract->parsed()) return run_extract(extract);
        if (cmd_experiment->parsed()) return run_experiment(experiment);
        if (cmd_scenarios->parsed()) return run_scenarios();
    } catch (const InvalidInput& e) {
        std::cerr << "fcollapse: invalid input: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const json::exception& e) {
        std::cerr << "fcollapse: invalid input: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const NumericFailure& e) {
        std::cerr << "fcollapse: numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const IoError& e) {
        std::cerr << "fcollapse: i/o error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitInvalid;
}
