#include "fcollapse/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "fcollapse/linalg.hpp"
#include "fcollapse/model.hpp"
#include "fcollapse/parallel.hpp"

namespace fcollapse::kernels {

namespace {

Matrix two_pass_covariance(const RowView& rows) {
    const std::size_t n = rows.n;
    const std::size_t p = rows.p;
    std::vector<double> mean(p, 0.0);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t i = 0; i < p; ++i) mean[i] += rows.at(s, i);
    for (double& x : mean) x /= static_cast<double>(n);

    // Column-major centred copy so each pair product streams contiguously.
    std::vector<double> centred(n * p);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t i = 0; i < p; ++i) centred[i * n + s] = rows.at(s, i) - mean[i];

    Matrix cov(p, p);
    const double denom = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < p; ++i) {
        const double* xi = centred.data() + i * n;
        for (std::size_t j = i; j < p; ++j) {
            const double* xj = centred.data() + j * n;
            double acc = 0.0;
            for (std::size_t s = 0; s < n; ++s) acc += xi[s] * xj[s];
            cov(i, j) = acc / denom;
            cov(j, i) = cov(i, j);
        }
    }
    return cov;
}

}  // namespace

SimulationPlan make_simulation_plan(const ModelSpec& spec, std::size_t n_waves, std::uint64_t seed) {
    SimulationPlan plan;
    plan.p = spec.p;
    plan.m = spec.m;
    plan.n_waves = n_waves;
    plan.seed = seed;
    plan.lambda = spec.lambda;
    plan.b = spec.b;
    plan.mu0 = spec.mu0;
    plan.sigma0_root = symmetric_sqrt(spec.sigma0);
    plan.sigma_w_root = symmetric_sqrt(spec.sigma_w);
    plan.noise_scale.resize(n_waves);
    for (std::size_t w = 0; w < n_waves; ++w) plan.noise_scale[w] = std::pow(spec.rho, 0.5 * static_cast<double>(w));
    return plan;
}

void simulate_subject(const SimulationPlan& plan, std::size_t subject, std::span<double> observations,
                      std::span<double> latents) {
    const std::size_t p = plan.p;
    const std::size_t m = plan.m;
    auto engine = substream(plan.seed, subject, stream_tag::kSimulation);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<double> eta(m), next(m), z(m);
    for (std::size_t w = 0; w < plan.n_waves; ++w) {
        for (double& v : z) v = normal(engine);
        const Matrix& root = w == 0 ? plan.sigma0_root : plan.sigma_w_root;
        const double scale = w == 0 ? 1.0 : plan.noise_scale[w];
        for (std::size_t i = 0; i < m; ++i) {
            double shock = 0.0;
            for (std::size_t k = 0; k < m; ++k) shock += root(i, k) * z[k];
            if (w == 0) {
                next[i] = plan.mu0[i] + shock;
            } else {
                double carry = 0.0;
                for (std::size_t k = 0; k < m; ++k) carry += plan.b(i, k) * eta[k];
                next[i] = carry + scale * shock;
            }
        }
        eta.swap(next);

        double* y = observations.data() + w * p;
        for (std::size_t i = 0; i < p; ++i) {
            double signal = 0.0;
            for (std::size_t k = 0; k < m; ++k) signal += plan.lambda(i, k) * eta[k];
            y[i] = signal + normal(engine);
        }
        if (!latents.empty()) std::copy(eta.begin(), eta.end(), latents.begin() + static_cast<std::ptrdiff_t>(w * m));
    }
}

double null_leading_eigenvalue(std::size_t n, std::size_t p, std::uint64_t seed, std::size_t replicate) {
    auto engine = substream(seed, replicate, stream_tag::kParallelAnalysis);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> draws(n * p);
    for (double& x : draws) x = normal(engine);
    const Matrix cov = two_pass_covariance(RowView{draws, n, p, p, 0});
    return symmetric_eigenvalues(cov).front();
}

namespace serial {

void simulate(const SimulationPlan& plan, std::size_t n_subjects, std::span<double> observations,
              std::span<double> latents) {
    const std::size_t obs_len = plan.n_waves * plan.p;
    const std::size_t lat_len = latents.empty() ? 0 : plan.n_waves * plan.m;
    for (std::size_t s = 0; s < n_subjects; ++s) {
        simulate_subject(plan, s, observations.subspan(s * obs_len, obs_len),
                         latents.empty() ? latents : latents.subspan(s * lat_len, lat_len));
    }
}

Matrix covariance(const RowView& rows) {
    const std::size_t p = rows.p;
    std::vector<double> mean(p, 0.0), delta(p);
    Matrix comoment(p, p);
    for (std::size_t s = 0; s < rows.n; ++s) {
        const double k = static_cast<double>(s + 1);
        for (std::size_t i = 0; i < p; ++i) {
            delta[i] = rows.at(s, i) - mean[i];
            mean[i] += delta[i] / k;
        }
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j) comoment(i, j) += delta[i] * (rows.at(s, j) - mean[j]);
    }
    const double denom = static_cast<double>(rows.n - 1);
    Matrix cov(p, p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i; j < p; ++j) {
            cov(i, j) = 0.5 * (comoment(i, j) + comoment(j, i)) / denom;
            cov(j, i) = cov(i, j);
        }
    return cov;
}

std::vector<double> null_leading_eigenvalues(std::size_t n, std::size_t p, std::size_t replicates,
                                             std::uint64_t seed) {
    std::vector<double> out(replicates);
    for (std::size_t r = 0; r < replicates; ++r) out[r] = null_leading_eigenvalue(n, p, seed, r);
    return out;
}

}  // namespace serial

namespace omp {

void simulate(const SimulationPlan& plan, std::size_t n_subjects, std::span<double> observations,
              std::span<double> latents) {
    const std::size_t obs_len = plan.n_waves * plan.p;
    const std::size_t lat_len = latents.empty() ? 0 : plan.n_waves * plan.m;
    const auto n = static_cast<std::ptrdiff_t>(n_subjects);
#pragma omp parallel for schedule(static) num_threads(worker_threads())
    for (std::ptrdiff_t s = 0; s < n; ++s) {
        const auto su = static_cast<std::size_t>(s);
        simulate_subject(plan, su, observations.subspan(su * obs_len, obs_len),
                         latents.empty() ? latents : latents.subspan(su * lat_len, lat_len));
    }
}

Matrix covariance(const RowView& rows) {
    // Fixed-size row chunks, reduced in chunk order, so the sums do not
    // depend on how many threads ran them.
    constexpr std::size_t kChunk = 512;
    const std::size_t n = rows.n;
    const std::size_t p = rows.p;
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    const auto nc = static_cast<std::ptrdiff_t>(chunks);

    std::vector<double> partial(chunks * p, 0.0);
#pragma omp parallel for schedule(static) num_threads(worker_threads())
    for (std::ptrdiff_t c = 0; c < nc; ++c) {
        double* sum = partial.data() + static_cast<std::size_t>(c) * p;
        const std::size_t end = std::min(n, (static_cast<std::size_t>(c) + 1) * kChunk);
        for (std::size_t s = static_cast<std::size_t>(c) * kChunk; s < end; ++s)
            for (std::size_t i = 0; i < p; ++i) sum[i] += rows.at(s, i);
    }
    std::vector<double> mean(p, 0.0);
    for (std::size_t c = 0; c < chunks; ++c)
        for (std::size_t i = 0; i < p; ++i) mean[i] += partial[c * p + i];
    for (double& m : mean) m /= static_cast<double>(n);

    std::vector<double> comoment(chunks * p * p, 0.0);
#pragma omp parallel for schedule(static) num_threads(worker_threads())
    for (std::ptrdiff_t c = 0; c < nc; ++c) {
        double* acc = comoment.data() + static_cast<std::size_t>(c) * p * p;
        std::vector<double> x(p);
        const std::size_t end = std::min(n, (static_cast<std::size_t>(c) + 1) * kChunk);
        for (std::size_t s = static_cast<std::size_t>(c) * kChunk; s < end; ++s) {
            for (std::size_t i = 0; i < p; ++i) x[i] = rows.at(s, i) - mean[i];
            for (std::size_t i = 0; i < p; ++i)
                for (std::size_t j = i; j < p; ++j) acc[i * p + j] += x[i] * x[j];
        }
    }

    Matrix cov(p, p);
    const double denom = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i; j < p; ++j) {
            double total = 0.0;
            for (std::size_t c = 0; c < chunks; ++c) total += comoment[(c * p + i) * p + j];
            cov(i, j) = total / denom;
            cov(j, i) = cov(i, j);
        }
    return cov;
}

std::vector<double> null_leading_eigenvalues(std::size_t n, std::size_t p, std::size_t replicates,
                                             std::uint64_t seed) {
    std::vector<double> out(replicates);
    const auto reps = static_cast<std::ptrdiff_t>(replicates);
#pragma omp parallel for schedule(dynamic) num_threads(worker_threads())
    for (std::ptrdiff_t r = 0; r < reps; ++r)
        out[static_cast<std::size_t>(r)] = null_leading_eigenvalue(n, p, seed, static_cast<std::size_t>(r));
    return out;
}

}  // namespace omp

}  // namespace fcollapse::kernels
