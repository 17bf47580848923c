#include "fcollapse/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fcollapse/errors.hpp"
#include "fcollapse/io.hpp"
#include "fcollapse/parallel.hpp"
#include "fcollapse/simulate.hpp"

namespace fcollapse {

namespace {

std::vector<double> leading_two(const Matrix& s) {
    std::vector<double> values = symmetric_eigenvalues(s);
    values.resize(2, 0.0);
    return values;
}

ScenarioConfig two_factor_scenario(std::string name, Matrix b, std::vector<std::string> labels) {
    ScenarioConfig config;
    config.name = std::move(name);
    config.spec = ModelSpec::with_defaults(block_loadings(2, 6, 0.8), std::move(b), 0.2);
    config.spec.item_blocks = consecutive_blocks(2, 6, labels);
    config.wave_schedule = {1, 2, 5, 10, 20, 40};
    config.n_subjects = 5000;
    config.seed = 42;
    return config;
}

ScenarioConfig three_factor_scenario(std::string name, Matrix b) {
    ScenarioConfig config;
    config.name = std::move(name);
    config.spec = ModelSpec::with_defaults(block_loadings(3, 4, 0.8), std::move(b), 0.2);
    config.spec.item_blocks = consecutive_blocks(3, 4);
    config.wave_schedule = {1, 2, 5, 10, 20, 40};
    config.n_subjects = 5000;
    config.seed = 42;
    return config;
}

}  // namespace

void ScenarioConfig::validate() const {
    if (wave_schedule.empty()) throw InvalidInput("scenario '" + name + "': wave schedule is empty");
    for (std::size_t k = 1; k < wave_schedule.size(); ++k)
        if (wave_schedule[k] <= wave_schedule[k - 1])
            throw InvalidInput("scenario '" + name + "': wave schedule must be strictly increasing");
    if (n_subjects < 2) throw InvalidInput("scenario '" + name + "': need at least two subjects");
}

ExperimentReport run_collapse_experiment(const ScenarioConfig& config) {
    config.validate();
    const ModelSpec& spec = config.spec;
    require_structurally_valid(spec);
    const Thresholds& th = config.thresholds;

    ExperimentReport report;
    report.scenario = config.name;
    report.seed = config.seed;
    report.n_subjects = config.n_subjects;
    report.convergence = classify_convergence(spec.b, th.eig_tol);
    report.partition = equivalence_classes(spec.b, th.zero_tol);
    report.classes = block_decompose(spec.b, report.partition, th.eig_tol, th.zero_tol);
    report.asymptotic_rank = report.convergence.asymptotic_rank;

    const TrajectoryPanel panel =
        simulate_panel(spec, config.wave_schedule.back() + 1, config.n_subjects, config.seed);
    report.parallel_threshold =
        parallel_analysis_threshold(config.n_subjects, spec.p, th.pa_replicates, th.pa_percentile, config.seed);

    DimensionParams params;
    params.rel_tol = th.rank_rel_tol;
    params.n_subjects = config.n_subjects;
    params.replicates = th.pa_replicates;
    params.percentile = th.pa_percentile;
    params.seed = config.seed;
    params.threshold = report.parallel_threshold;
    params.max_k = th.gap_max_k;

    for (std::size_t wave : config.wave_schedule) {
        const Matrix latent = latent_covariance(spec, wave);
        if (!latent.all_finite()) throw NumericFailure("latent covariance overflowed at wave " + std::to_string(wave));
        const Matrix reduced = spec.lambda * latent * transpose(spec.lambda);
        const Matrix population = population_covariance(spec, wave);
        const Matrix sample = sample_covariance(panel, wave);

        WaveRecord rec;
        rec.wave = wave;
        rec.population_rank =
            estimate_dimensionality(population, DimensionMethod::reduced_rank, params).estimated_factors;
        rec.est_reduced = estimate_dimensionality(sample, DimensionMethod::reduced_rank, params).estimated_factors;
        rec.est_parallel =
            estimate_dimensionality(sample, DimensionMethod::parallel_analysis, params).estimated_factors;
        rec.est_gap = estimate_dimensionality(sample, DimensionMethod::gap_ratio, params).estimated_factors;
        rec.population_leading = leading_two(reduced);
        rec.sample_leading = leading_two(sample);
        rec.population_cross = cross_block_covariance(population, spec.item_blocks);
        rec.sample_cross = cross_block_covariance(sample, spec.item_blocks);
        report.waves.push_back(std::move(rec));
    }

    std::ostringstream verdict;
    if (report.convergence.converges()) {
        const std::size_t target = *report.asymptotic_rank;
        for (const auto& rec : report.waves) {
            if (rec.population_rank == target) {
                report.collapse_wave = rec.wave;
                break;
            }
        }
        const std::size_t final_rank = report.waves.back().population_rank;
        verdict << "final-wave dimensionality " << final_rank
                << (final_rank == target ? " equals" : " does not equal") << " asymptotic rank " << target << " of "
                << spec.m << " factors";
        if (report.collapse_wave) verdict << " (reached by wave " << *report.collapse_wave << ")";
    } else {
        verdict << "B^t does not converge (" << to_string(report.convergence.status) << ": "
                << report.convergence.reason << "); no equilibrium dimensionality";
    }
    report.verdict = verdict.str();
    return report;
}

Matrix random_positive_unit_radius(std::size_t m, std::uint64_t seed, std::uint64_t stream) {
    auto engine = substream(seed, stream, stream_tag::kScenario);
    std::uniform_real_distribution<double> entry(0.1, 1.0);
    Matrix b(m, m);
    for (double& x : b.data()) x = entry(engine);
    const double radius = std::abs(eigenvalues(b).front());
    return (1.0 / radius) * b;
}

const std::vector<std::string>& builtin_scenario_names() {
    static const std::vector<std::string> names = {"figure1", "identity", "positive-block", "mixed-sign",
                                                   "anxiety-depression"};
    return names;
}

ScenarioConfig builtin_scenario(const std::string& name) {
    if (name == "figure1") {
        return two_factor_scenario(name, Matrix::from_rows({{0.7, 0.3}, {0.2, 0.8}}), {"factor1", "factor2"});
    }
    if (name == "identity") {
        return two_factor_scenario(name, Matrix::identity(2), {"factor1", "factor2"});
    }
    if (name == "anxiety-depression") {
        return two_factor_scenario(name, Matrix::from_rows({{0.7, 0.3}, {0.2, 0.8}}), {"anxiety", "depression"});
    }
    if (name == "positive-block") {
        return three_factor_scenario(name, random_positive_unit_radius(3, 42));
    }
    if (name == "mixed-sign") {
        Matrix b = Matrix::identity(3);
        for (double& x : b.data()) x -= 1.0 / 6.0;
        return three_factor_scenario(name, std::move(b));
    }
    throw InvalidInput("unknown scenario '" + name + "'");
}

std::string report_stem(const ExperimentReport& report) {
    return report.scenario + "_" + std::to_string(report.seed);
}

std::string report_to_csv(const ExperimentReport& report) {
    std::string out = "wave,population_rank,est_reduced,est_parallel,est_gap,lambda1,lambda2,cross_block_max\n";
    for (const auto& r : report.waves) {
        out += std::to_string(r.wave) + ',' + std::to_string(r.population_rank) + ',' +
               std::to_string(r.est_reduced) + ',' + std::to_string(r.est_parallel) + ',' +
               std::to_string(r.est_gap) + ',' + format_double(r.population_leading.at(0)) + ',' +
               format_double(r.population_leading.at(1)) + ',' + format_double(r.population_cross.max_abs) + '\n';
    }
    return out;
}

std::string report_to_json_text(const ExperimentReport& report) {
    return nlohmann::json(report).dump(2) + "\n";
}

ExperimentReport report_from_json_text(const std::string& text) {
    return parse_json_text(text).get<ExperimentReport>();
}

void write_report(const ExperimentReport& report, ReportFormat format, const std::filesystem::path& destination) {
    write_file_atomic(destination, format == ReportFormat::json ? report_to_json_text(report) : report_to_csv(report));
}

}  // namespace fcollapse
