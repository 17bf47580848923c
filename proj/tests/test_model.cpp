#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "fcollapse/errors.hpp"
#include "fcollapse/extraction.hpp"
#include "fcollapse/linalg.hpp"
#include "fcollapse/model.hpp"
#include "fcollapse/simulate.hpp"
#include "oracles.hpp"

using namespace fcollapse;

namespace {

const Matrix kFig1 = Matrix::from_rows({{0.7, 0.3}, {0.2, 0.8}});

ModelSpec two_factor(const Matrix& b, double rho, std::size_t per = 6) {
    ModelSpec s = ModelSpec::with_defaults(block_loadings(2, per, 0.8), b, rho);
    s.item_blocks = consecutive_blocks(2, per);
    return s;
}

// Cov(eta^t) written out as B^t S0 (B^t)' + sum_k rho^(t-k) B^k Sw (B^k)'.
Matrix termwise_latent(const ModelSpec& s, std::size_t t) {
    const Matrix bt = oracle::naive_power(s.b, t);
    Matrix out = oracle::naive_mul(oracle::naive_mul(bt, s.sigma0), transpose(bt));
    for (std::size_t k = 0; k < t; ++k) {
        const Matrix bk = oracle::naive_power(s.b, k);
        out = out + std::pow(s.rho, static_cast<double>(t - k)) *
                        oracle::naive_mul(oracle::naive_mul(bk, s.sigma_w), transpose(bk));
    }
    return out;
}

Matrix random_psd(std::size_t m, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Matrix a(m, m);
    for (double& x : a.data()) x = z(rng);
    return (1.0 / static_cast<double>(m)) * (a * transpose(a));
}

}  // namespace

TEST_CASE("validate_spec checks") {
    SUBCASE("identity transition") {
        const ValidationReport r = validate_spec(two_factor(Matrix::identity(2), 0.5));
        CHECK(r.all_passed());
        CHECK(r.passed(check::kDecaySufficient));
    }
    SUBCASE("coupled transition meets the decay condition") {
        const ValidationReport r = validate_spec(two_factor(kFig1, 0.2));
        CHECK(r.all_passed());
        const ValidationCheck* c = r.find(check::kDecaySufficient);
        REQUIRE(c != nullptr);
        CHECK(c->measured.at("min_modulus_squared") == doctest::Approx(0.25));
        CHECK_FALSE(validate_spec(two_factor(kFig1, 0.3)).passed(check::kDecaySufficient));
        CHECK(validate_spec(two_factor(kFig1, 0.3)).passed(check::kIterationSufficient));
    }
    SUBCASE("singular transition") {
        const ValidationReport r = validate_spec(two_factor(Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}}), 0.2));
        CHECK_FALSE(r.passed(check::kInvertible));
        CHECK(r.structurally_valid());
    }
    SUBCASE("divergent transition") {
        const ValidationReport r = validate_spec(two_factor(Matrix::from_rows({{1, 1}, {0, 1}}), 0.2));
        CHECK_FALSE(r.passed(check::kIterationSufficient));
        CHECK(r.structurally_valid());
    }
    SUBCASE("rho of one") {
        const ValidationReport r = validate_spec(two_factor(Matrix::identity(2), 1.0));
        CHECK(r.passed(check::kDecayRange));
        CHECK_FALSE(r.passed(check::kIterationSufficient));
    }
    SUBCASE("broken inputs are reported, not thrown") {
        ModelSpec s = two_factor(kFig1, 0.2);
        s.lambda = Matrix(3, 2);
        ValidationReport r;
        CHECK_NOTHROW(r = validate_spec(s));
        CHECK_FALSE(r.passed(check::kDims));
        CHECK_FALSE(r.structurally_valid());
        CHECK_THROWS_AS(require_structurally_valid(s), InvalidInput);

        s = two_factor(kFig1, 0.0);
        CHECK_FALSE(validate_spec(s).passed(check::kDecayRange));
        s = two_factor(kFig1, 0.2);
        s.sigma_w = Matrix::from_rows({{1, 2}, {2, 1}});
        CHECK_FALSE(validate_spec(s).passed(check::kSigmaWPsd));
        s = two_factor(kFig1, 0.2);
        s.sigma0 = Matrix::from_rows({{1, 0.5}, {0.4, 1}});
        CHECK_FALSE(validate_spec(s).passed(check::kSigma0Psd));
        s = two_factor(kFig1, 0.2);
        s.item_blocks = {{"a", {0, 1}}, {"b", {1, 2}}};
        CHECK_FALSE(validate_spec(s).passed(check::kItemBlocks));
        s.item_blocks = {{"a", {0, 99}}};
        CHECK_FALSE(validate_spec(s).passed(check::kItemBlocks));
    }
}

TEST_CASE("latent_covariance") {
    ModelSpec s = two_factor(kFig1, 0.2);
    CHECK(latent_covariance(s, 0) == s.sigma0);

    const Matrix two = latent_covariance(s, 2);
    const Matrix expected = Matrix::from_rows({{0.661, 0.556}, {0.556, 0.756}});
    CHECK(max_abs(two - expected) < 1e-14);
    CHECK(max_abs(two - termwise_latent(s, 2)) < 1e-14);

    ModelSpec z = two_factor(Matrix::zeros(2, 2), 0.5);
    CHECK(max_abs(latent_covariance(z, 3) - 0.125 * z.sigma_w) < 1e-15);
}

TEST_CASE("latent_covariance matches the termwise sum and stays PSD") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = 1 + static_cast<std::size_t>(trial % 4);
        const Matrix b = oracle::random_mixed_matrix(m + (m == 1), rng);
        if (b.rows() != m) continue;
        ModelSpec s = ModelSpec::with_defaults(Matrix(3, m, 0.5), b, 0.3 + 0.6 * (trial % 7) / 7.0);
        s.sigma0 = random_psd(m, rng);
        s.sigma_w = random_psd(m, rng);
        for (std::size_t t : {0u, 1u, 3u, 9u}) {
            const Matrix c = latent_covariance(s, t);
            const Matrix o = termwise_latent(s, t);
            CHECK(max_abs(c - o) <= 1e-9 * std::max(1.0, max_abs(o)));
            CHECK(asymmetry(c) == 0.0);
            CHECK(symmetric_eigenvalues(c).back() >= -1e-10 * std::max(1.0, max_abs(c)));
            const Matrix pop = population_covariance(s, t);
            CHECK(numeric_rank(pop - Matrix::identity(3)) <= m);
        }
    }
}

TEST_CASE("population_covariance") {
    ModelSpec zero = ModelSpec::with_defaults(Matrix(4, 2), kFig1, 0.2);
    CHECK(population_covariance(zero, 5) == Matrix::identity(4));

    ModelSpec one = ModelSpec::with_defaults(Matrix(4, 1, 1.0), Matrix::from_rows({{0.5}}), 0.5);
    const double c = latent_covariance(one, 3)(0, 0);
    const Matrix pop = population_covariance(one, 3);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) CHECK(pop(i, j) == doctest::Approx(i == j ? 1.0 + c : c));

    // No cross effects: items on different factors are exactly uncorrelated.
    ModelSpec diag = two_factor(Matrix::diagonal(std::vector<double>{0.9, 0.6}), 0.4);
    for (std::size_t t : {1u, 5u, 40u}) {
        const Matrix p = population_covariance(diag, t);
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 6; j < 12; ++j) CHECK(p(i, j) == 0.0);
    }
}

TEST_CASE("equilibrium_covariance") {
    SUBCASE("everything decays") {
        ModelSpec s = ModelSpec::with_defaults(block_loadings(2, 3, 0.8), 0.5 * Matrix::identity(2), 0.5);
        const EquilibriumCovariance eq = equilibrium_covariance(s);
        CHECK(max_abs(eq.latent) < 1e-12);
        CHECK(max_abs(eq.covariance - Matrix::identity(6)) < 1e-12);
        CHECK(eq.waves > 0);
        CHECK(eq.last_change < 1e-12);
    }
    SUBCASE("identity transition sums a geometric series") {
        ModelSpec s = ModelSpec::with_defaults(block_loadings(2, 3, 0.8), Matrix::identity(2), 0.5);
        const EquilibriumCovariance eq = equilibrium_covariance(s);
        // I + sum_{k>=1} 0.5^k I = 2 I
        CHECK(max_abs(eq.latent - 2.0 * Matrix::identity(2)) < 1e-11);
    }
    SUBCASE("coupled factors collapse") {
        const EquilibriumCovariance eq = equilibrium_covariance(two_factor(kFig1, 0.2));
        CHECK(max_abs(eq.latent - Matrix(2, 2, 0.65)) < 1e-10);
        CHECK(numeric_rank(eq.covariance - Matrix::identity(12), 1e-6) == 1);
        CHECK(max_abs(eq.covariance) == doctest::Approx(1.416).epsilon(1e-9));
    }
    SUBCASE("all moduli inside the circle leaves only noise") {
        std::mt19937_64 rng(22);
        for (int trial = 0; trial < 20; ++trial) {
            oracle::SpectrumBuilder sb;
            sb.real(0.8);
            sb.rotation(0.7, 1.1);
            const Matrix b = oracle::conjugate(sb.build(), rng);
            ModelSpec s = ModelSpec::with_defaults(Matrix(5, 3, 0.6), b, 0.5);
            const EquilibriumCovariance eq = equilibrium_covariance(s);
            CHECK(max_abs(eq.covariance - Matrix::identity(5)) < 1e-10);
        }
    }
    SUBCASE("preconditions and budget") {
        CHECK_THROWS_AS(equilibrium_covariance(two_factor(Matrix::from_rows({{1, 1}, {0, 1}}), 0.2)), InvalidInput);
        CHECK_THROWS_AS(equilibrium_covariance(two_factor(kFig1, 1.0)), InvalidInput);
        try {
            equilibrium_covariance(two_factor(kFig1, 0.2), 1e-12, 3);
            FAIL("expected NoEquilibrium");
        } catch (const NoEquilibrium& e) {
            CHECK(e.last_change() > 1e-12);
        }
    }
}

TEST_CASE("simulate_panel shapes and determinism") {
    const ModelSpec s = two_factor(kFig1, 0.2);
    const TrajectoryPanel a = simulate_panel(s, 4, 50, 7, true);
    CHECK(a.n_subjects == 50);
    CHECK(a.n_waves == 4);
    CHECK(a.p == 12);
    CHECK(a.observations.size() == 50 * 4 * 12);
    CHECK(a.latents.size() == 50 * 4 * 2);
    CHECK(a == simulate_panel(s, 4, 50, 7, true));
    CHECK_FALSE(a == simulate_panel(s, 4, 50, 8, true));

    // A prefix of subjects does not depend on how many subjects follow.
    const TrajectoryPanel b = simulate_panel(s, 4, 20, 7);
    for (std::size_t k = 0; k < b.observations.size(); ++k) CHECK(b.observations[k] == a.observations[k]);

    ModelSpec broken = s;
    broken.sigma_w = Matrix::from_rows({{1, 2}, {2, 1}});
    CHECK_THROWS_AS(simulate_panel(broken, 2, 10, 1), InvalidInput);
}

TEST_CASE("zero loadings give pure noise") {
    ModelSpec s = ModelSpec::with_defaults(Matrix(6, 2), kFig1, 0.2);
    const TrajectoryPanel panel = simulate_panel(s, 2, 10000, 3);
    const Matrix c = sample_covariance(panel, 1);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j)
            if (i != j) CHECK(std::abs(c(i, j)) < 0.05);
}

TEST_CASE("degenerate latent path is deterministic") {
    ModelSpec s = ModelSpec::with_defaults(block_loadings(2, 2, 0.8), Matrix::identity(2), 0.5);
    s.sigma0 = Matrix::zeros(2, 2);
    s.sigma_w = Matrix::zeros(2, 2);
    s.mu0 = {1.0, 1.0};
    const TrajectoryPanel panel = simulate_panel(s, 5, 4000, 9, true);
    for (std::size_t subj = 0; subj < panel.n_subjects; ++subj)
        for (std::size_t w = 0; w < 5; ++w) {
            CHECK(panel.latent(subj, w, 0) == 1.0);
            CHECK(panel.latent(subj, w, 1) == 1.0);
        }
    double mean = 0.0;
    for (std::size_t subj = 0; subj < panel.n_subjects; ++subj) mean += panel.observation(subj, 3, 0);
    mean /= static_cast<double>(panel.n_subjects);
    CHECK(std::abs(mean - 0.8) < 4.0 / std::sqrt(4000.0));
}

TEST_CASE("sample covariance approaches the population covariance") {
    const ModelSpec s = two_factor(kFig1, 0.2);
    const std::size_t n = 20000;
    const TrajectoryPanel panel = simulate_panel(s, 6, n, 5);
    for (std::size_t t : {1u, 5u}) {
        const Matrix pop = population_covariance(s, t);
        const Matrix smp = sample_covariance(panel, t);
        for (std::size_t i = 0; i < 12; ++i)
            for (std::size_t j = 0; j < 12; ++j) {
                // Gaussian: var(s_ij) = (S_ij^2 + S_ii S_jj) / (n - 1)
                const double se = std::sqrt((pop(i, j) * pop(i, j) + pop(i, i) * pop(j, j)) / (n - 1.0));
                CHECK(std::abs(smp(i, j) - pop(i, j)) < 3.0 * se);
            }
    }
}
