#include "fcollapse/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "fcollapse/errors.hpp"
#include "fcollapse/linalg.hpp"

namespace fcollapse {

namespace {

// Every nonzero singular value of an idempotent matrix is >= 1, so anything
// below one half is round-off left over from the decaying modes.
std::size_t projector_rank(const Matrix& limit, double tol) {
    const auto s = singular_values(limit);
    if (s.empty() || s.front() < 0.5) return 0;
    const double cut = std::max(tol * s.front(), 0.5);
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [cut](double x) { return x > cut; }));
}

std::string format_complex(ComplexScalar z) {
    std::ostringstream os;
    os.precision(6);
    os << z.real();
    if (z.imag() != 0.0) os << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i";
    return os.str();
}

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        // Smaller root wins so the representative is the smallest member.
        if (b < a) std::swap(a, b);
        parent_[b] = a;
    }

private:
    std::vector<std::size_t> parent_;
};

}  // namespace

std::string_view to_string(ConvergenceStatus status) {
    switch (status) {
        case ConvergenceStatus::converges: return "converges";
        case ConvergenceStatus::diverges_unbounded: return "diverges-unbounded";
        case ConvergenceStatus::diverges_oscillates: return "diverges-oscillates";
    }
    return "unknown";
}

ConvergenceStatus parse_convergence_status(std::string_view text) {
    if (text == "converges") return ConvergenceStatus::converges;
    if (text == "diverges-unbounded") return ConvergenceStatus::diverges_unbounded;
    if (text == "diverges-oscillates") return ConvergenceStatus::diverges_oscillates;
    throw InvalidInput("unknown convergence status '" + std::string(text) + "'");
}

Matrix limit_matrix(const Matrix& b, double abs_tol, int max_doublings) {
    if (!b.is_square() || b.empty()) throw InvalidInput("limit_matrix: matrix must be square");
    if (!(abs_tol > 0.0)) throw InvalidInput("limit_matrix: abs_tol must be positive");
    // Squaring doubles any round-off sitting on the range of the projector,
    // so the change can bottom out a little above abs_tol and then grow.
    // Once it is small and starts rising, the previous iterate is the best
    // this precision allows.
    const double floor_band = std::sqrt(abs_tol);
    Matrix current = b;
    double change = 0.0;
    double previous = std::numeric_limits<double>::infinity();
    for (int k = 0; k < max_doublings; ++k) {
        Matrix next = current * current;
        if (!next.all_finite()) throw NumericFailure("limit_matrix: powers overflowed after " + std::to_string(k + 1) + " squarings");
        change = frobenius_norm(next - current);
        if (change < abs_tol) return next;
        if (previous < floor_band && change >= previous) return current;
        previous = change;
        current = std::move(next);
    }
    throw NumericFailure("limit_matrix: no convergence after " + std::to_string(max_doublings) +
                         " squarings (last change " + std::to_string(change) + ")");
}

ConvergenceReport classify_convergence(const Matrix& b, double tol, const LimitOptions& limit) {
    if (!b.is_square() || b.empty()) throw InvalidInput("classify_convergence: matrix must be square");
    if (!(tol > 0.0)) throw InvalidInput("classify_convergence: tol must be positive");

    ConvergenceReport report;
    report.eigenvalues = eigenvalues(b);

    // A defective eigenvalue 1 comes back from the eigensolver split into a
    // small cloud (about eps^(1/k) wide for a k-block) whose centroid is still
    // 1 to rounding. Treat such a cloud as one cluster at 1.
    const double band = std::max(tol, std::sqrt(tol));
    ComplexScalar centroid = 0.0;
    std::size_t near = 0;
    for (const ComplexScalar& z : report.eigenvalues) {
        if (std::abs(z - 1.0) <= band) {
            centroid += z;
            ++near;
        }
    }
    const bool unit_cloud = near > 0 && std::abs(centroid / static_cast<double>(near) - 1.0) <= tol;
    const double unit_radius = unit_cloud ? band : tol;

    std::size_t unit_count = 0;
    std::vector<ComplexScalar> growing;
    std::vector<ComplexScalar> on_circle;
    for (const ComplexScalar& z : report.eigenvalues) {
        const double modulus = std::abs(z);
        if (std::abs(z - 1.0) <= unit_radius) {
            ++unit_count;
        } else if (modulus > 1.0 + tol) {
            growing.push_back(z);
        } else if (modulus >= 1.0 - tol) {
            on_circle.push_back(z);
        }
    }

    if (!on_circle.empty()) {
        report.warning = "eigenvalue " + format_complex(on_circle.front()) +
                         " lies within tolerance of the unit circle but is not 1; near-critical";
    }
    if (!growing.empty()) {
        report.status = ConvergenceStatus::diverges_unbounded;
        report.reason = "eigenvalue " + format_complex(growing.front()) + " has modulus " +
                        std::to_string(std::abs(growing.front())) + " > 1";
        return report;
    }
    if (unit_count > 0) {
        const std::size_t m = b.rows();
        // Rank of B - I measured against the scale of B, not of B - I: when
        // B is close to I the difference is pure round-off.
        const auto s = singular_values(b - Matrix::identity(m));
        const double cut = tol * std::max(1.0, singular_values(b).front());
        const auto rank = static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [cut](double x) { return x > cut; }));
        const std::size_t geometric = m - rank;
        if (geometric < unit_count) {
            report.status = ConvergenceStatus::diverges_unbounded;
            report.reason = "eigenvalue 1 is not semisimple (algebraic multiplicity " + std::to_string(unit_count) +
                            ", geometric multiplicity " + std::to_string(geometric) + ")";
            return report;
        }
    }
    if (!on_circle.empty()) {
        report.status = ConvergenceStatus::diverges_oscillates;
        report.reason = "eigenvalue " + format_complex(on_circle.front()) + " has modulus 1 but is not 1";
        return report;
    }

    report.status = ConvergenceStatus::converges;
    report.reason = unit_count == 0 ? "all eigenvalues inside the unit circle"
                                    : "eigenvalue 1 is semisimple and all others lie inside the unit circle";
    Matrix lim = limit_matrix(b, limit.abs_tol, limit.max_doublings);
    const std::size_t rank = projector_rank(lim, tol);
    if (rank != unit_count) {
        throw NumericFailure("classify_convergence: multiplicity of eigenvalue 1 (" + std::to_string(unit_count) +
                             ") disagrees with rank of the limit matrix (" + std::to_string(rank) + ")");
    }
    report.limit = std::move(lim);
    report.asymptotic_rank = rank;
    return report;
}

std::size_t asymptotic_rank(const Matrix& b, double tol) {
    const ConvergenceReport report = classify_convergence(b, tol);
    if (!report.converges()) {
        throw InvalidInput("asymptotic_rank: B^t does not converge (" + std::string(to_string(report.status)) +
                           ": " + report.reason + ")");
    }
    return *report.asymptotic_rank;
}

EquivalencePartition equivalence_classes(const Matrix& b, double zero_tol) {
    if (!b.is_square() || b.empty()) throw InvalidInput("equivalence_classes: matrix must be square");
    const std::size_t m = b.rows();
    DisjointSets sets(m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            if (std::abs(b(i, j)) > zero_tol || std::abs(b(j, i)) > zero_tol) sets.unite(i, j);

    EquivalencePartition out;
    std::vector<std::size_t> slot(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t root = sets.find(i);
        if (slot[root] == m) {
            slot[root] = out.classes.size();
            out.classes.emplace_back();
        }
        out.classes[slot[root]].push_back(i);
    }
    for (const auto& cls : out.classes) out.permutation.insert(out.permutation.end(), cls.begin(), cls.end());
    return out;
}

std::string_view to_string(BoundKind kind) {
    switch (kind) {
        case BoundKind::singleton_unit: return "singleton-unit";
        case BoundKind::singleton_decay: return "singleton-decay";
        case BoundKind::pair: return "pair";
        case BoundKind::positive_perron: return "positive-perron";
        case BoundKind::general: return "general";
    }
    return "unknown";
}

BoundKind parse_bound_kind(std::string_view text) {
    for (BoundKind k : {BoundKind::singleton_unit, BoundKind::singleton_decay, BoundKind::pair,
                        BoundKind::positive_perron, BoundKind::general}) {
        if (to_string(k) == text) return k;
    }
    throw InvalidInput("unknown bound kind '" + std::string(text) + "'");
}

std::vector<ClassReport> block_decompose(const Matrix& b, const EquivalencePartition& partition, double tol,
                                         double zero_tol) {
    if (!b.is_square() || partition.permutation.size() != b.rows())
        throw InvalidInput("block_decompose: partition does not match matrix order");

    std::vector<ClassReport> reports;
    reports.reserve(partition.classes.size());
    for (const auto& cls : partition.classes) {
        ClassReport r;
        r.indices = cls;
        r.block = submatrix(b, cls);

        if (cls.size() == 1) {
            const double v = r.block(0, 0);
            if (std::abs(v - 1.0) <= tol) {
                r.bound_kind = BoundKind::singleton_unit;
                r.rank_bound = "exact 1";
            } else if (std::abs(v) < 1.0 - tol) {
                r.bound_kind = BoundKind::singleton_decay;
                r.rank_bound = "exact 0";
            } else {
                r.bound_kind = BoundKind::general;
                r.rank_bound = "none";
            }
        } else if (cls.size() == 2) {
            r.bound_kind = BoundKind::pair;
            r.rank_bound = "≤1";
        } else {
            const auto d = r.block.data();
            const bool positive = std::all_of(d.begin(), d.end(), [zero_tol](double x) { return x > zero_tol; });
            r.bound_kind = positive ? BoundKind::positive_perron : BoundKind::general;
            r.rank_bound = positive ? "≤1" : "none";
        }

        const ConvergenceReport conv = classify_convergence(r.block, tol);
        r.convergent = conv.converges();
        if (r.convergent) r.exact_rank = conv.asymptotic_rank;
        reports.push_back(std::move(r));
    }
    return reports;
}

}  // namespace fcollapse
