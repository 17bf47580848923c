#include "fcollapse/linalg.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fcollapse/errors.hpp"

namespace fcollapse {

namespace {

using EMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const EMatrix> view(const Matrix& a) {
    return Eigen::Map<const EMatrix>(a.data().data(), static_cast<Eigen::Index>(a.rows()),
                                     static_cast<Eigen::Index>(a.cols()));
}

Matrix from_eigen(const EMatrix& e) {
    Matrix out(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
    Eigen::Map<EMatrix>(out.data().data(), e.rows(), e.cols()) = e;
    return out;
}

void require_square(const Matrix& a, const char* op) {
    if (!a.is_square() || a.empty())
        throw InvalidInput(std::string(op) + ": matrix must be square and non-empty");
}

// Roots of x^2 - tr x + det, with the small root taken from det / big root
// to avoid cancellation.
void quadratic_eigenvalues(double a, double b, double c, double d, ComplexScalar& l1, ComplexScalar& l2) {
    const double half_tr = 0.5 * (a + d);
    const double half_gap = 0.5 * (a - d);
    const double disc = half_gap * half_gap + b * c;
    if (disc >= 0.0) {
        const double root = std::sqrt(disc);
        const double big = half_tr + std::copysign(root, half_tr);
        const double det = a * d - b * c;
        l1 = big;
        l2 = big != 0.0 ? det / big : half_tr - std::copysign(root, half_tr);
    } else {
        const double im = std::sqrt(-disc);
        l1 = ComplexScalar(half_tr, im);
        l2 = ComplexScalar(half_tr, -im);
    }
}

}  // namespace

Matrix mat_mul(const Matrix& a, const Matrix& b) { return a * b; }

Matrix mat_pow(const Matrix& a, std::uint64_t t) {
    require_square(a, "mat_pow");
    Matrix result = Matrix::identity(a.rows());
    Matrix base = a;
    while (t > 0) {
        if (t & 1U) result = result * base;
        t >>= 1U;
        if (t > 0) base = base * base;
    }
    if (!result.all_finite()) throw NumericFailure("mat_pow: power overflowed");
    return result;
}

void sort_eigenvalues(std::vector<ComplexScalar>& values) {
    std::sort(values.begin(), values.end(), [](const ComplexScalar& x, const ComplexScalar& y) {
        const double ax = std::abs(x);
        const double ay = std::abs(y);
        if (ax != ay) return ax > ay;
        if (x.real() != y.real()) return x.real() > y.real();
        return x.imag() > y.imag();
    });
}

std::vector<ComplexScalar> eigenvalues(const Matrix& a, const EigenOptions& options) {
    require_square(a, "eigenvalues");
    const std::size_t m = a.rows();
    std::vector<ComplexScalar> out;
    out.reserve(m);
    if (m == 1) {
        out.emplace_back(a(0, 0));
    } else if (m == 2) {
        ComplexScalar l1, l2;
        quadratic_eigenvalues(a(0, 0), a(0, 1), a(1, 0), a(1, 1), l1, l2);
        out = {l1, l2};
    } else {
        Eigen::RealSchur<Eigen::MatrixXd> schur(static_cast<Eigen::Index>(m));
        schur.setMaxIterations(options.max_iterations_per_value * static_cast<Eigen::Index>(m));
        schur.compute(Eigen::MatrixXd(view(a)), /*computeU=*/false);
        const Eigen::MatrixXd& t = schur.matrixT();
        if (schur.info() != Eigen::Success) {
            double residual = 0.0;
            for (Eigen::Index i = 0; i + 1 < t.rows(); ++i) residual = std::max(residual, std::abs(t(i + 1, i)));
            throw NumericFailure("eigenvalues: QR iteration budget exhausted, residual subdiagonal " +
                                 std::to_string(residual));
        }
        // Quasi-triangular T: 1x1 blocks are real eigenvalues, 2x2 blocks
        // hold conjugate pairs.
        const auto n = static_cast<Eigen::Index>(m);
        for (Eigen::Index i = 0; i < n;) {
            if (i + 1 < n && t(i + 1, i) != 0.0) {
                ComplexScalar l1, l2;
                quadratic_eigenvalues(t(i, i), t(i, i + 1), t(i + 1, i), t(i + 1, i + 1), l1, l2);
                out.push_back(l1);
                out.push_back(l2);
                i += 2;
            } else {
                out.emplace_back(t(i, i));
                i += 1;
            }
        }
    }
    sort_eigenvalues(out);
    return out;
}

std::vector<double> singular_values(const Matrix& a) {
    if (a.empty()) return {};
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(view(a)));
    const auto& s = svd.singularValues();
    return std::vector<double>(s.data(), s.data() + s.size());
}

std::size_t numeric_rank(const Matrix& a, double rel_tol) {
    if (!(rel_tol > 0.0)) throw InvalidInput("numeric_rank: rel_tol must be positive");
    const auto s = singular_values(a);
    if (s.empty() || s.front() == 0.0) return 0;
    const double cut = rel_tol * s.front();
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [cut](double x) { return x > cut; }));
}

double condition_number(const Matrix& a) {
    require_square(a, "condition_number");
    const auto s = singular_values(a);
    if (s.back() == 0.0) return std::numeric_limits<double>::infinity();
    return s.front() / s.back();
}

Matrix invert(const Matrix& a, double rel_tol) {
    require_square(a, "invert");
    if (!(rel_tol > 0.0)) throw InvalidInput("invert: rel_tol must be positive");
    const double cond = condition_number(a);
    if (!(cond <= 1.0 / rel_tol)) {
        throw SingularMatrix("invert: matrix is numerically singular (condition " + std::to_string(cond) + ")",
                             cond);
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd(view(a)));
    return from_eigen(lu.inverse());
}

double determinant(const Matrix& a) {
    require_square(a, "determinant");
    return Eigen::MatrixXd(view(a)).partialPivLu().determinant();
}

std::size_t geometric_multiplicity(const Matrix& a, double lambda, double rel_tol) {
    require_square(a, "geometric_multiplicity");
    const std::size_t m = a.rows();
    const std::size_t rank = numeric_rank(a - lambda * Matrix::identity(m), rel_tol);
    if (rank == m) {
        throw InvalidInput("geometric_multiplicity: " + std::to_string(lambda) +
                           " is not an eigenvalue within tolerance");
    }
    return m - rank;
}

EigenReport eigen_report(const Matrix& a, double cluster_tol, double rel_tol) {
    EigenReport report;
    report.values = eigenvalues(a);
    const std::size_t m = a.rows();
    std::vector<bool> used(report.values.size(), false);
    for (std::size_t i = 0; i < report.values.size(); ++i) {
        if (used[i]) continue;
        const ComplexScalar lead = report.values[i];
        ComplexScalar sum = 0.0;
        std::size_t count = 0;
        for (std::size_t j = i; j < report.values.size(); ++j) {
            if (!used[j] && std::abs(report.values[j] - lead) <= cluster_tol * std::max(1.0, std::abs(lead))) {
                used[j] = true;
                sum += report.values[j];
                ++count;
            }
        }
        EigenCluster cluster{sum / static_cast<double>(count), count, std::nullopt};
        if (std::abs(cluster.value.imag()) <= cluster_tol) {
            cluster.value = cluster.value.real();
            const std::size_t rank =
                numeric_rank(a - cluster.value.real() * Matrix::identity(m), rel_tol);
            cluster.geometric = std::clamp<std::size_t>(m - rank, 1, count);
        }
        report.clusters.push_back(cluster);
    }
    return report;
}

SymmetricEigen symmetric_eigen(const Matrix& a) {
    require_square(a, "symmetric_eigen");
    const Eigen::MatrixXd sym = 0.5 * (Eigen::MatrixXd(view(a)) + Eigen::MatrixXd(view(a)).transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) throw NumericFailure("symmetric_eigen: solver did not converge");
    const auto n = sym.rows();
    SymmetricEigen out;
    out.values.resize(static_cast<std::size_t>(n));
    out.vectors = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
    // Eigen returns ascending order.
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = n - 1 - k;
        out.values[static_cast<std::size_t>(k)] = solver.eigenvalues()(src);
        for (Eigen::Index r = 0; r < n; ++r)
            out.vectors(static_cast<std::size_t>(r), static_cast<std::size_t>(k)) = solver.eigenvectors()(r, src);
    }
    return out;
}

std::vector<double> symmetric_eigenvalues(const Matrix& a) {
    require_square(a, "symmetric_eigenvalues");
    const Eigen::MatrixXd sym = 0.5 * (Eigen::MatrixXd(view(a)) + Eigen::MatrixXd(view(a)).transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericFailure("symmetric_eigenvalues: solver did not converge");
    std::vector<double> out(solver.eigenvalues().data(), solver.eigenvalues().data() + sym.rows());
    std::reverse(out.begin(), out.end());
    return out;
}

Matrix symmetric_sqrt(const Matrix& a, double clip_tol) {
    const SymmetricEigen eig = symmetric_eigen(a);
    const std::size_t n = a.rows();
    Matrix out(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        double v = eig.values[k];
        if (v < -clip_tol) {
            throw InvalidInput("symmetric_sqrt: matrix is not positive semidefinite (eigenvalue " +
                               std::to_string(v) + ")");
        }
        if (v <= 0.0) continue;
        const double root = std::sqrt(v);
        for (std::size_t i = 0; i < n; ++i) {
            const double vi = eig.vectors(i, k) * root;
            for (std::size_t j = 0; j < n; ++j) out(i, j) += vi * eig.vectors(j, k);
        }
    }
    return out;
}

bool is_symmetric_psd(const Matrix& a, double sym_tol, double psd_tol) {
    if (!a.is_square() || a.empty()) return false;
    if (asymmetry(a) > sym_tol) return false;
    return symmetric_eigenvalues(a).back() >= -psd_tol;
}

}  // namespace fcollapse
