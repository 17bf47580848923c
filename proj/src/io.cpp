#include "fcollapse/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "fcollapse/errors.hpp"

namespace fcollapse {

using nlohmann::json;

namespace {

template <typename T>
json optional_to_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from_json(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& text) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) throw InvalidInput("csv: malformed number '" + text + "'");
    return value;
}

std::size_t parse_index(const std::string& text) {
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw InvalidInput("csv: malformed index '" + text + "'");
    return value;
}

}  // namespace

std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) throw NumericFailure("format_double: conversion failed");
    return std::string(buf, ptr);
}

json parse_json_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidInput(std::string("invalid JSON: ") + e.what());
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file for reading", path.string());
    std::ostringstream os;
    os << in.rdbuf();
    if (in.bad()) throw IoError("read failed", path.string());
    return os.str();
}

json read_json_file(const std::filesystem::path& path) { return parse_json_text(read_text_file(path)); }

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open file for writing", path.string());
        out << content;
        out.flush();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw IoError("write failed", path.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move file into place", path.string());
    }
}

void to_json(json& j, const Matrix& m) { j = m.to_rows(); }

void from_json(const json& j, Matrix& m) {
    if (!j.is_array() || j.empty() || !j.front().is_array())
        throw InvalidInput("matrix must be a non-empty array of row arrays");
    m = Matrix::from_rows(j.get<std::vector<std::vector<double>>>());
}

void to_json(json& j, const ModelSpec& spec) {
    j = json{{"p", spec.p},           {"m", spec.m},   {"lambda", spec.lambda},   {"b", spec.b},
             {"mu0", spec.mu0},       {"sigma0", spec.sigma0}, {"sigma_w", spec.sigma_w}, {"rho", spec.rho}};
    if (!spec.item_blocks.empty()) {
        json blocks = json::array();
        json labels = json::array();
        for (const auto& blk : spec.item_blocks) {
            blocks.push_back(blk.items);
            labels.push_back(blk.label);
        }
        j["item_blocks"] = blocks;
        j["item_block_labels"] = labels;
    }
}

void from_json(const json& j, ModelSpec& spec) {
    if (!j.is_object()) throw InvalidInput("model spec must be a JSON object");
    for (const char* key : {"lambda", "b", "rho"})
        if (!j.contains(key)) throw InvalidInput(std::string("model spec is missing '") + key + "'");
    spec = ModelSpec{};
    spec.lambda = j.at("lambda").get<Matrix>();
    spec.b = j.at("b").get<Matrix>();
    spec.rho = j.at("rho").get<double>();
    spec.p = j.value("p", spec.lambda.rows());
    spec.m = j.value("m", spec.lambda.cols());
    spec.mu0 = j.contains("mu0") ? j.at("mu0").get<std::vector<double>>() : std::vector<double>(spec.m, 0.0);
    spec.sigma0 = j.contains("sigma0") ? j.at("sigma0").get<Matrix>() : Matrix::identity(spec.m);
    spec.sigma_w = j.contains("sigma_w") ? j.at("sigma_w").get<Matrix>() : Matrix::identity(spec.m);
    if (j.contains("item_blocks")) {
        const auto blocks = j.at("item_blocks").get<std::vector<std::vector<std::size_t>>>();
        std::vector<std::string> labels;
        if (j.contains("item_block_labels")) labels = j.at("item_block_labels").get<std::vector<std::string>>();
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            spec.item_blocks.push_back(
                ItemBlock{k < labels.size() ? labels[k] : "block" + std::to_string(k + 1), blocks[k]});
        }
    }
}

void to_json(json& j, const ValidationReport& report) {
    j = json::array();
    for (const auto& c : report.checks)
        j.push_back(json{{"name", c.name}, {"passed", c.passed}, {"measured", c.measured}, {"detail", c.detail}});
    j = json{{"checks", j}, {"structurally_valid", report.structurally_valid()}};
}

void to_json(json& j, const ConvergenceReport& report) {
    json eig = json::array();
    for (const auto& z : report.eigenvalues) eig.push_back(json{{"re", z.real()}, {"im", z.imag()}});
    j = json{{"eigenvalues", eig},
             {"status", to_string(report.status)},
             {"reason", report.reason},
             {"limit", report.limit ? json(*report.limit) : json(nullptr)},
             {"asymptotic_rank", optional_to_json(report.asymptotic_rank)},
             {"warning", report.warning}};
}

void from_json(const json& j, ConvergenceReport& report) {
    report = ConvergenceReport{};
    for (const auto& z : j.at("eigenvalues")) report.eigenvalues.emplace_back(z.at("re").get<double>(), z.at("im").get<double>());
    report.status = parse_convergence_status(j.at("status").get<std::string>());
    report.reason = j.at("reason").get<std::string>();
    report.limit = optional_from_json<Matrix>(j, "limit");
    report.asymptotic_rank = optional_from_json<std::size_t>(j, "asymptotic_rank");
    report.warning = j.value("warning", "");
}

void to_json(json& j, const EquivalencePartition& partition) {
    j = json{{"classes", partition.classes}, {"permutation", partition.permutation}};
}

void from_json(const json& j, EquivalencePartition& partition) {
    partition.classes = j.at("classes").get<std::vector<std::vector<std::size_t>>>();
    partition.permutation = j.at("permutation").get<std::vector<std::size_t>>();
}

void to_json(json& j, const ClassReport& report) {
    j = json{{"indices", report.indices},
             {"block", report.block},
             {"bound_kind", to_string(report.bound_kind)},
             {"rank_bound", report.rank_bound},
             {"exact_rank", optional_to_json(report.exact_rank)},
             {"convergent", report.convergent}};
}

void from_json(const json& j, ClassReport& report) {
    report.indices = j.at("indices").get<std::vector<std::size_t>>();
    report.block = j.at("block").get<Matrix>();
    report.bound_kind = parse_bound_kind(j.at("bound_kind").get<std::string>());
    report.rank_bound = j.at("rank_bound").get<std::string>();
    report.exact_rank = optional_from_json<std::size_t>(j, "exact_rank");
    report.convergent = j.at("convergent").get<bool>();
}

void to_json(json& j, const DimensionalityReport& report) {
    j = json{{"eigenvalues", report.eigenvalues},
             {"method", to_string(report.method)},
             {"estimated_factors", report.estimated_factors},
             {"threshold_used", report.threshold_used}};
}

void from_json(const json& j, DimensionalityReport& report) {
    report.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
    report.method = parse_dimension_method(j.at("method").get<std::string>());
    report.estimated_factors = j.at("estimated_factors").get<std::size_t>();
    report.threshold_used = j.at("threshold_used").get<double>();
}

void to_json(json& j, const LoadingEstimate& estimate) {
    j = json{{"loadings", estimate.loadings}, {"variance_explained", estimate.variance_explained}};
}

void from_json(const json& j, LoadingEstimate& estimate) {
    estimate.loadings = j.at("loadings").get<Matrix>();
    estimate.variance_explained = j.at("variance_explained").get<std::vector<double>>();
}

void to_json(json& j, const CrossBlockSummary& summary) {
    j = json{{"max_abs", summary.max_abs}, {"mean_abs", summary.mean_abs}};
}

void from_json(const json& j, CrossBlockSummary& summary) {
    summary.max_abs = j.at("max_abs").get<double>();
    summary.mean_abs = j.at("mean_abs").get<double>();
}

void to_json(json& j, const Thresholds& th) {
    j = json{{"rank_rel_tol", th.rank_rel_tol},
             {"eig_tol", th.eig_tol},
             {"zero_tol", th.zero_tol},
             {"equilibrium_abs_tol", th.equilibrium_abs_tol},
             {"max_waves", th.max_waves},
             {"pa_replicates", th.pa_replicates},
             {"pa_percentile", th.pa_percentile},
             {"gap_max_k", th.gap_max_k}};
}

void from_json(const json& j, Thresholds& th) {
    const Thresholds d;
    th.rank_rel_tol = j.value("rank_rel_tol", d.rank_rel_tol);
    th.eig_tol = j.value("eig_tol", d.eig_tol);
    th.zero_tol = j.value("zero_tol", d.zero_tol);
    th.equilibrium_abs_tol = j.value("equilibrium_abs_tol", d.equilibrium_abs_tol);
    th.max_waves = j.value("max_waves", d.max_waves);
    th.pa_replicates = j.value("pa_replicates", d.pa_replicates);
    th.pa_percentile = j.value("pa_percentile", d.pa_percentile);
    th.gap_max_k = j.value("gap_max_k", d.gap_max_k);
}

void to_json(json& j, const ScenarioConfig& config) {
    j = json{{"name", config.name},         {"spec", config.spec},
             {"wave_schedule", config.wave_schedule}, {"n_subjects", config.n_subjects},
             {"seed", config.seed},         {"thresholds", config.thresholds}};
}

void from_json(const json& j, ScenarioConfig& config) {
    if (!j.is_object()) throw InvalidInput("scenario config must be a JSON object");
    for (const char* key : {"name", "spec", "wave_schedule", "n_subjects", "seed"})
        if (!j.contains(key)) throw InvalidInput(std::string("scenario config is missing '") + key + "'");
    config.name = j.at("name").get<std::string>();
    config.spec = j.at("spec").get<ModelSpec>();
    config.wave_schedule = j.at("wave_schedule").get<std::vector<std::size_t>>();
    config.n_subjects = j.at("n_subjects").get<std::size_t>();
    config.seed = j.at("seed").get<std::uint64_t>();
    config.thresholds = j.contains("thresholds") ? j.at("thresholds").get<Thresholds>() : Thresholds{};
}

void to_json(json& j, const WaveRecord& r) {
    j = json{{"wave", r.wave},
             {"population_rank", r.population_rank},
             {"sample_estimates",
              {{"reduced-rank", r.est_reduced}, {"parallel-analysis", r.est_parallel}, {"gap-ratio", r.est_gap}}},
             {"population_leading", r.population_leading},
             {"sample_leading", r.sample_leading},
             {"population_cross_block", r.population_cross},
             {"sample_cross_block", r.sample_cross}};
}

void from_json(const json& j, WaveRecord& r) {
    r.wave = j.at("wave").get<std::size_t>();
    r.population_rank = j.at("population_rank").get<std::size_t>();
    const json& est = j.at("sample_estimates");
    r.est_reduced = est.at("reduced-rank").get<std::size_t>();
    r.est_parallel = est.at("parallel-analysis").get<std::size_t>();
    r.est_gap = est.at("gap-ratio").get<std::size_t>();
    r.population_leading = j.at("population_leading").get<std::vector<double>>();
    r.sample_leading = j.at("sample_leading").get<std::vector<double>>();
    r.population_cross = j.at("population_cross_block").get<CrossBlockSummary>();
    r.sample_cross = j.at("sample_cross_block").get<CrossBlockSummary>();
}

void to_json(json& j, const ExperimentReport& report) {
    j = json{{"scenario", report.scenario},
             {"seed", report.seed},
             {"n_subjects", report.n_subjects},
             {"waves", report.waves},
             {"convergence", report.convergence},
             {"partition", report.partition},
             {"classes", report.classes},
             {"parallel_threshold", report.parallel_threshold},
             {"asymptotic_rank", optional_to_json(report.asymptotic_rank)},
             {"collapse_wave", optional_to_json(report.collapse_wave)},
             {"verdict", report.verdict}};
}

void from_json(const json& j, ExperimentReport& report) {
    report.scenario = j.at("scenario").get<std::string>();
    report.seed = j.at("seed").get<std::uint64_t>();
    report.n_subjects = j.at("n_subjects").get<std::size_t>();
    report.waves = j.at("waves").get<std::vector<WaveRecord>>();
    report.convergence = j.at("convergence").get<ConvergenceReport>();
    report.partition = j.at("partition").get<EquivalencePartition>();
    report.classes = j.at("classes").get<std::vector<ClassReport>>();
    report.parallel_threshold = j.at("parallel_threshold").get<double>();
    report.asymptotic_rank = optional_from_json<std::size_t>(j, "asymptotic_rank");
    report.collapse_wave = optional_from_json<std::size_t>(j, "collapse_wave");
    report.verdict = j.at("verdict").get<std::string>();
}

std::string panel_to_csv(const TrajectoryPanel& panel) {
    std::string out = "subject,wave";
    for (std::size_t i = 1; i <= panel.p; ++i) out += ",item_" + std::to_string(i);
    out += '\n';
    for (std::size_t s = 0; s < panel.n_subjects; ++s) {
        for (std::size_t w = 0; w < panel.n_waves; ++w) {
            out += std::to_string(s);
            out += ',';
            out += std::to_string(w);
            for (std::size_t i = 0; i < panel.p; ++i) {
                out += ',';
                out += format_double(panel.observation(s, w, i));
            }
            out += '\n';
        }
    }
    return out;
}

TrajectoryPanel panel_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("panel csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "subject" || header[1] != "wave")
        throw InvalidInput("panel csv: header must be subject,wave,item_1..item_p");
    const std::size_t p = header.size() - 2;
    for (std::size_t i = 0; i < p; ++i)
        if (header[i + 2] != "item_" + std::to_string(i + 1))
            throw InvalidInput("panel csv: unexpected column '" + header[i + 2] + "'");

    struct Row {
        std::size_t subject, wave;
        std::vector<double> values;
    };
    std::vector<Row> rows;
    std::size_t max_subject = 0, max_wave = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != p + 2) throw InvalidInput("panel csv: row has " + std::to_string(fields.size()) + " fields");
        Row r{parse_index(fields[0]), parse_index(fields[1]), {}};
        for (std::size_t i = 0; i < p; ++i) r.values.push_back(parse_number(fields[i + 2]));
        max_subject = std::max(max_subject, r.subject);
        max_wave = std::max(max_wave, r.wave);
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw InvalidInput("panel csv: no data rows");

    TrajectoryPanel panel;
    panel.n_subjects = max_subject + 1;
    panel.n_waves = max_wave + 1;
    panel.p = p;
    if (rows.size() != panel.n_subjects * panel.n_waves)
        throw InvalidInput("panel csv: rows do not form a complete subject x wave grid");
    panel.observations.assign(panel.n_subjects * panel.n_waves * p, 0.0);
    std::vector<bool> seen(panel.n_subjects * panel.n_waves, false);
    for (const auto& r : rows) {
        const std::size_t slot = r.subject * panel.n_waves + r.wave;
        if (seen[slot]) throw InvalidInput("panel csv: duplicate (subject, wave) row");
        seen[slot] = true;
        std::copy(r.values.begin(), r.values.end(), panel.observations.begin() + static_cast<std::ptrdiff_t>(slot * p));
    }
    return panel;
}

TrajectoryPanel read_panel_csv(const std::filesystem::path& path) { return panel_from_csv(read_text_file(path)); }

std::string scree_csv(std::span<const double> eigenvalues) {
    std::string out = "index,value\n";
    for (std::size_t k = 0; k < eigenvalues.size(); ++k)
        out += std::to_string(k + 1) + ',' + format_double(eigenvalues[k]) + '\n';
    return out;
}

}  // namespace fcollapse
