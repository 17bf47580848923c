#include <random>
#include <vector>

#include "doctest.h"
#include "fcollapse/extraction.hpp"
#include "fcollapse/kernels.hpp"
#include "fcollapse/model.hpp"
#include "fcollapse/parallel.hpp"
#include "fcollapse/simulate.hpp"

using namespace fcollapse;
namespace k = fcollapse::kernels;

namespace {

ModelSpec small_spec() {
    ModelSpec s = ModelSpec::with_defaults(block_loadings(2, 3, 0.8), Matrix::from_rows({{0.7, 0.3}, {0.2, 0.8}}), 0.2);
    s.sigma0 = Matrix::from_rows({{1.0, 0.3}, {0.3, 0.5}});
    s.mu0 = {0.5, -0.5};
    return s;
}

struct ThreadGuard {
    ~ThreadGuard() { set_worker_threads(0); }
};

}  // namespace

TEST_CASE("substreams are reproducible and distinct") {
    auto a = substream(42, 0, stream_tag::kSimulation);
    auto b = substream(42, 0, stream_tag::kSimulation);
    auto c = substream(42, 1, stream_tag::kSimulation);
    auto d = substream(42, 0, stream_tag::kParallelAnalysis);
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
    CHECK(x != d());
}

TEST_CASE("serial and parallel simulation agree bit for bit") {
    ThreadGuard guard;
    const k::SimulationPlan plan = k::make_simulation_plan(small_spec(), 5, 123);
    const std::size_t n = 257;
    std::vector<double> obs_s(n * 5 * 6), lat_s(n * 5 * 2), obs_p(obs_s.size()), lat_p(lat_s.size());
    k::serial::simulate(plan, n, obs_s, lat_s);
    for (int threads : {1, 2, 3, 4}) {
        set_worker_threads(threads);
        k::omp::simulate(plan, n, obs_p, lat_p);
        CHECK(obs_p == obs_s);
        CHECK(lat_p == lat_s);
    }
}

TEST_CASE("simulate_subject follows the recursion") {
    const ModelSpec spec = small_spec();
    const k::SimulationPlan plan = k::make_simulation_plan(spec, 4, 9);
    std::vector<double> obs(4 * 6), lat(4 * 2);
    k::simulate_subject(plan, 3, obs, lat);
    // Replay the subject's stream by hand.
    auto rng = substream(9, 3, stream_tag::kSimulation);
    std::normal_distribution<double> z;
    std::vector<double> eta(2);
    for (std::size_t w = 0; w < 4; ++w) {
        double d0 = z(rng), d1 = z(rng);
        if (w == 0) {
            const Matrix& r = plan.sigma0_root;
            eta = {spec.mu0[0] + r(0, 0) * d0 + r(0, 1) * d1, spec.mu0[1] + r(1, 0) * d0 + r(1, 1) * d1};
        } else {
            const double s = plan.noise_scale[w];
            eta = {0.7 * eta[0] + 0.3 * eta[1] + s * d0, 0.2 * eta[0] + 0.8 * eta[1] + s * d1};
        }
        CHECK(lat[w * 2 + 0] == doctest::Approx(eta[0]).epsilon(1e-14));
        CHECK(lat[w * 2 + 1] == doctest::Approx(eta[1]).epsilon(1e-14));
        for (std::size_t i = 0; i < 6; ++i) {
            const double e = z(rng);
            const double expected = 0.8 * eta[i / 3] + e;
            CHECK(obs[w * 6 + i] == doctest::Approx(expected).epsilon(1e-14));
        }
    }
}

TEST_CASE("covariance kernels agree") {
    ThreadGuard guard;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z(3.0, 2.0);
    const std::size_t n = 501, p = 7, stride = 10, offset = 2;
    std::vector<double> buf(offset + n * stride);
    for (double& x : buf) x = z(rng);
    const k::RowView view{buf, n, p, stride, offset};
    const Matrix s = k::serial::covariance(view);

    Matrix naive(p, p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            double mi = 0, mj = 0;
            for (std::size_t r = 0; r < n; ++r) {
                mi += view.at(r, i);
                mj += view.at(r, j);
            }
            mi /= n;
            mj /= n;
            double acc = 0;
            for (std::size_t r = 0; r < n; ++r) acc += (view.at(r, i) - mi) * (view.at(r, j) - mj);
            naive(i, j) = acc / (n - 1);
        }
    CHECK(max_abs(s - naive) < 1e-12);

    set_worker_threads(1);
    const Matrix p1 = k::omp::covariance(view);
    CHECK(max_abs(p1 - naive) < 1e-12);
    for (int threads : {2, 4}) {
        set_worker_threads(threads);
        CHECK(k::omp::covariance(view) == p1);
    }
}

TEST_CASE("null eigenvalue kernels agree") {
    ThreadGuard guard;
    const auto s = k::serial::null_leading_eigenvalues(300, 8, 40, 77);
    for (int threads : {1, 3}) {
        set_worker_threads(threads);
        CHECK(k::omp::null_leading_eigenvalues(300, 8, 40, 77) == s);
    }
    for (std::size_t r = 0; r < s.size(); ++r) CHECK(s[r] == k::null_leading_eigenvalue(300, 8, 77, r));
    // Leading noise eigenvalue sits near (1 + sqrt(p/n))^2.
    double mean = 0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(s.size());
    CHECK(mean > 1.1);
    CHECK(mean < 1.6);
}

TEST_CASE("panel results do not depend on thread count") {
    ThreadGuard guard;
    const ModelSpec spec = small_spec();
    set_worker_threads(1);
    const TrajectoryPanel one = simulate_panel(spec, 3, 400, 11);
    const Matrix c1 = sample_covariance(one, 2);
    const double t1 = parallel_analysis_threshold(400, 6, 50, 95.0, 3);
    set_worker_threads(4);
    CHECK(simulate_panel(spec, 3, 400, 11) == one);
    CHECK(sample_covariance(one, 2) == c1);
    CHECK(parallel_analysis_threshold(400, 6, 50, 95.0, 3) == t1);
}
