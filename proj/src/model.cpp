#include "fcollapse/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fcollapse/errors.hpp"

namespace fcollapse {

namespace {

bool has_shape(const Matrix& a, std::size_t rows, std::size_t cols) {
    return a.rows() == rows && a.cols() == cols;
}

ValidationCheck psd_check(const char* name, const Matrix& a) {
    ValidationCheck c{name, false, {}, {}};
    const double asym = asymmetry(a);
    const double min_eig = symmetric_eigenvalues(a).back();
    c.measured = {{"asymmetry", asym}, {"min_eigenvalue", min_eig}};
    c.passed = asym <= 1e-12 && min_eig >= -1e-10;
    if (!c.passed) c.detail = "not symmetric positive semidefinite";
    return c;
}

ValidationCheck skipped(const char* name) {
    return ValidationCheck{name, false, {}, "skipped: dimensions inconsistent"};
}

Matrix symmetrized(const Matrix& a) { return 0.5 * (a + transpose(a)); }

}  // namespace

ModelSpec ModelSpec::with_defaults(Matrix lambda, Matrix b, double rho) {
    ModelSpec s;
    s.p = lambda.rows();
    s.m = lambda.cols();
    s.lambda = std::move(lambda);
    s.b = std::move(b);
    s.mu0.assign(s.m, 0.0);
    s.sigma0 = Matrix::identity(s.m);
    s.sigma_w = Matrix::identity(s.m);
    s.rho = rho;
    return s;
}

Matrix block_loadings(std::size_t m, std::size_t items_per_factor, double loading) {
    Matrix out(m * items_per_factor, m);
    for (std::size_t f = 0; f < m; ++f)
        for (std::size_t k = 0; k < items_per_factor; ++k) out(f * items_per_factor + k, f) = loading;
    return out;
}

std::vector<ItemBlock> consecutive_blocks(std::size_t m, std::size_t items_per_factor,
                                          const std::vector<std::string>& labels) {
    std::vector<ItemBlock> blocks(m);
    for (std::size_t f = 0; f < m; ++f) {
        blocks[f].label = f < labels.size() ? labels[f] : "factor" + std::to_string(f + 1);
        for (std::size_t k = 0; k < items_per_factor; ++k) blocks[f].items.push_back(f * items_per_factor + k);
    }
    return blocks;
}

const ValidationCheck* ValidationReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

bool ValidationReport::passed(const std::string& name) const {
    const ValidationCheck* c = find(name);
    return c != nullptr && c->passed;
}

bool ValidationReport::structurally_valid() const {
    return passed(check::kDims) && passed(check::kSigma0Psd) && passed(check::kSigmaWPsd) &&
           passed(check::kDecayRange) && passed(check::kItemBlocks);
}

bool ValidationReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.passed; });
}

ValidationReport validate_spec(const ModelSpec& spec, double rel_tol) {
    ValidationReport report;
    const std::size_t p = spec.p;
    const std::size_t m = spec.m;

    ValidationCheck dims{check::kDims, false, {{"p", double(p)}, {"m", double(m)}}, {}};
    if (p == 0 || m == 0) {
        dims.detail = "p and m must be positive";
    } else if (!has_shape(spec.lambda, p, m)) {
        dims.detail = "lambda must be p x m";
    } else if (!has_shape(spec.b, m, m)) {
        dims.detail = "b must be m x m";
    } else if (spec.mu0.size() != m) {
        dims.detail = "mu0 must have length m";
    } else if (!has_shape(spec.sigma0, m, m)) {
        dims.detail = "sigma0 must be m x m";
    } else if (!has_shape(spec.sigma_w, m, m)) {
        dims.detail = "sigma_w must be m x m";
    } else {
        dims.passed = true;
    }
    report.checks.push_back(dims);

    ValidationCheck range{check::kDecayRange, spec.rho > 0.0 && spec.rho <= 1.0, {{"rho", spec.rho}}, {}};
    if (!range.passed) range.detail = "rho must lie in (0, 1]";
    report.checks.push_back(range);

    ValidationCheck blocks{check::kItemBlocks, true, {{"blocks", double(spec.item_blocks.size())}}, {}};
    std::vector<bool> seen(p, false);
    for (const auto& blk : spec.item_blocks) {
        if (blk.items.empty()) {
            blocks.passed = false;
            blocks.detail = "empty item block '" + blk.label + "'";
        }
        for (std::size_t i : blk.items) {
            if (i >= p) {
                blocks.passed = false;
                blocks.detail = "item index " + std::to_string(i) + " out of range";
            } else if (seen[i]) {
                blocks.passed = false;
                blocks.detail = "item " + std::to_string(i) + " appears in more than one block";
            } else {
                seen[i] = true;
            }
        }
    }
    report.checks.push_back(blocks);

    if (!dims.passed) {
        for (const char* name : {check::kSigma0Psd, check::kSigmaWPsd, check::kInvertible, check::kDecaySufficient,
                                 check::kIterationSufficient})
            report.checks.push_back(skipped(name));
        return report;
    }

    report.checks.push_back(psd_check(check::kSigma0Psd, spec.sigma0));
    report.checks.push_back(psd_check(check::kSigmaWPsd, spec.sigma_w));

    const double cond = condition_number(spec.b);
    ValidationCheck inv{check::kInvertible, cond <= 1.0 / rel_tol, {{"condition", cond}}, {}};
    if (!inv.passed) inv.detail = "B is numerically singular";
    report.checks.push_back(inv);

    std::vector<ComplexScalar> eig;
    try {
        eig = eigenvalues(spec.b);
    } catch (const NumericFailure& e) {
        report.checks.push_back({check::kDecaySufficient, false, {}, e.what()});
        report.checks.push_back({check::kIterationSufficient, false, {}, e.what()});
        return report;
    }
    double min_modulus = std::numeric_limits<double>::infinity();
    for (const auto& z : eig) min_modulus = std::min(min_modulus, std::abs(z));
    const double bound = min_modulus * min_modulus;
    ValidationCheck decay{check::kDecaySufficient, spec.rho < bound,
                          {{"rho", spec.rho}, {"min_modulus_squared", bound}}, {}};
    if (!decay.passed) decay.detail = "rho is not below the squared smallest eigenvalue modulus of B";
    report.checks.push_back(decay);

    ValidationCheck iter{check::kIterationSufficient, false, {{"rho", spec.rho}}, {}};
    try {
        const ConvergenceReport conv = classify_convergence(spec.b);
        iter.passed = conv.converges() && spec.rho < 1.0;
        iter.detail = std::string(to_string(conv.status)) + ": " + conv.reason;
        if (spec.rho >= 1.0) iter.detail += "; rho must be below 1";
    } catch (const NumericFailure& e) {
        iter.detail = e.what();
    }
    report.checks.push_back(iter);
    return report;
}

void require_structurally_valid(const ModelSpec& spec) {
    const ValidationReport report = validate_spec(spec);
    if (report.structurally_valid()) return;
    for (const auto& c : report.checks) {
        if (!c.passed && (c.name == check::kDims || c.name == check::kSigma0Psd || c.name == check::kSigmaWPsd ||
                          c.name == check::kDecayRange || c.name == check::kItemBlocks)) {
            throw InvalidInput("model spec failed check " + c.name + ": " + c.detail);
        }
    }
}

Matrix latent_covariance(const ModelSpec& spec, std::size_t t) {
    const Matrix bt = transpose(spec.b);
    Matrix sigma = spec.sigma0;
    double noise_scale = 1.0;
    for (std::size_t k = 1; k <= t; ++k) {
        noise_scale *= spec.rho;
        sigma = spec.b * sigma * bt + noise_scale * spec.sigma_w;
    }
    return symmetrized(sigma);
}

Matrix item_covariance(const ModelSpec& spec, const Matrix& latent) {
    return spec.lambda * latent * transpose(spec.lambda) + Matrix::identity(spec.p);
}

Matrix population_covariance(const ModelSpec& spec, std::size_t t) {
    return symmetrized(item_covariance(spec, latent_covariance(spec, t)));
}

EquilibriumCovariance equilibrium_covariance(const ModelSpec& spec, double abs_tol, std::size_t max_waves,
                                             double eig_tol) {
    if (!(spec.rho < 1.0)) throw InvalidInput("equilibrium_covariance: requires rho < 1");
    const ConvergenceReport conv = classify_convergence(spec.b, eig_tol);
    if (!conv.converges()) {
        throw InvalidInput("equilibrium_covariance: B^t does not converge (" + std::string(to_string(conv.status)) +
                           ")");
    }
    const Matrix bt = transpose(spec.b);
    Matrix sigma = spec.sigma0;
    double noise_scale = 1.0;
    double change = std::numeric_limits<double>::infinity();
    for (std::size_t t = 1; t <= max_waves; ++t) {
        noise_scale *= spec.rho;
        Matrix next = spec.b * sigma * bt + noise_scale * spec.sigma_w;
        change = frobenius_norm(next - sigma);
        sigma = std::move(next);
        if (change < abs_tol) {
            sigma = symmetrized(sigma);
            return {symmetrized(item_covariance(spec, sigma)), sigma, t, change};
        }
    }
    throw NoEquilibrium("equilibrium_covariance: no convergence within " + std::to_string(max_waves) +
                            " waves (last change " + std::to_string(change) + ")",
                        change);
}

}  // namespace fcollapse
