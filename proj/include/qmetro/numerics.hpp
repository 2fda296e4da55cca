#ifndef QMETRO_NUMERICS_HPP
#define QMETRO_NUMERICS_HPP

#include "qmetro/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace qmetro {

// ---------------------------------------------------------------------------
// Deterministic random numbers.
//
// All randomized components (optimizer restarts, basis choosers, Monte Carlo
// batches) draw from seeded streams derived with mix64, so results are
// reproducible and independent of how work is partitioned.
// ---------------------------------------------------------------------------

inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// SplitMix64 stream with a hand-rolled polar Gaussian so draws do not depend
// on the standard library's distribution implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(mix64(seed ^ 0x5851f42d4c957f2dull)) {}

    static Rng stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index = 0) {
        return Rng(mix64(seed) ^ mix64(purpose * 0x100000001b3ull + index));
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    double uniform() {  // in [0, 1)
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    Complex complex_normal() {
        const double re = normal();
        const double im = normal();
        return Complex(re, im) / std::sqrt(2.0);
    }

  private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

inline ComplexMatrix random_complex_gaussian(int rows, int cols, Rng& rng) {
    ComplexMatrix m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = rng.complex_normal();
    return m;
}

// Haar-distributed unitary via QR with the phase convention fixed by R's
// diagonal.
inline ComplexMatrix random_unitary(int dim, Rng& rng) {
    ComplexMatrix z = random_complex_gaussian(dim, dim, rng);
    Eigen::HouseholderQR<ComplexMatrix> qr(z);
    ComplexMatrix q = qr.householderQ();
    ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < dim; ++j) {
        Complex d = r(j, j);
        q.col(j) *= (std::abs(d) > 0) ? d / std::abs(d) : Complex(1, 0);
    }
    return q;
}

inline RealMatrix random_orthogonal(int dim, Rng& rng) {
    RealMatrix z(dim, dim);
    for (int j = 0; j < dim; ++j)
        for (int i = 0; i < dim; ++i) z(i, j) = rng.normal();
    Eigen::HouseholderQR<RealMatrix> qr(z);
    RealMatrix q = qr.householderQ();
    RealMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < dim; ++j)
        if (r(j, j) < 0) q.col(j) = -q.col(j);
    return q;
}

// ---------------------------------------------------------------------------
// Shape checks.
// ---------------------------------------------------------------------------

inline void require_symmetric(const RealMatrix& m, double rel_tol = 1e-12,
                              const char* what = "matrix") {
    const double scale = std::max(1.0, m.norm());
    if ((m - m.transpose()).norm() > rel_tol * scale)
        throw std::invalid_argument(std::string(what) + " is not symmetric");
}

inline void require_antisymmetric(const RealMatrix& m, double rel_tol = 1e-12,
                                  const char* what = "matrix") {
    const double scale = std::max(1.0, m.norm());
    if ((m + m.transpose()).norm() > rel_tol * scale)
        throw std::invalid_argument(std::string(what) + " is not antisymmetric");
}

// ---------------------------------------------------------------------------
// Kernels.
// ---------------------------------------------------------------------------

struct GramSchmidtResult {
    std::vector<ComplexVector> basis;  // mutually orthonormal, same span as input
    std::vector<int> retained;         // indices of inputs that survived
};

// Orthonormalizes `vectors` in order, with a second orthogonalization pass for
// stability. Inputs whose residual after projection falls below
// tol * max input norm are dropped and reported via `retained`.
inline GramSchmidtResult gram_schmidt(const std::vector<ComplexVector>& vectors,
                                      double tol = tol::rank_drop) {
    if (vectors.empty()) throw std::invalid_argument("gram_schmidt: empty input");
    if (tol <= 0) throw std::invalid_argument("gram_schmidt: tol must be positive");
    const Eigen::Index dim = vectors.front().size();
    double max_norm = 0.0;
    for (const auto& v : vectors) {
        if (v.size() != dim)
            throw std::invalid_argument("gram_schmidt: inconsistent dimensions");
        max_norm = std::max(max_norm, v.norm());
    }
    GramSchmidtResult out;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        ComplexVector w = vectors[i];
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : out.basis) w -= b.dot(w) * b;
        const double nrm = w.norm();
        if (nrm > tol * std::max(max_norm, 1e-300)) {
            out.basis.push_back(w / nrm);
            out.retained.push_back(static_cast<int>(i));
        }
    }
    return out;
}

// Inverse square root of a symmetric positive definite matrix. S satisfies
// S*M*S = I; eigenvalues below spd_floor relative to the largest signal a
// locally unidentifiable parameter set.
inline RealMatrix spd_inv_sqrt(const RealMatrix& m) {
    require_symmetric(m, 1e-12, "spd_inv_sqrt input");
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(m);
    const RealVector& ev = es.eigenvalues();
    const double largest = ev.maxCoeff();
    if (largest <= 0 || ev.minCoeff() <= tol::spd_floor * largest)
        throw SingularInformationError(
            "spd_inv_sqrt: matrix is singular or indefinite (parameters not locally identifiable)");
    return es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
           es.eigenvectors().transpose();
}

// Magnitudes |s_q| of the purely imaginary eigenvalues +/- i s_q of a real
// antisymmetric matrix, descending, with multiplicity (length = order).
// Computed from the Hermitian form i*M so the spectrum is real by
// construction.
inline RealVector skew_spectrum(const RealMatrix& m) {
    require_antisymmetric(m, 1e-12, "skew_spectrum input");
    const Eigen::Index n = m.rows();
    ComplexMatrix h = Complex(0, 1) * m.cast<Complex>();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h, Eigen::EigenvaluesOnly);
    RealVector mags = es.eigenvalues().cwiseAbs();
    std::sort(mags.data(), mags.data() + n, std::greater<double>());
    return mags;
}

// Completes k real orthonormal columns to a full real orthogonal d x d
// matrix. The first k columns of the result equal the prefix exactly.
inline RealMatrix real_orthogonal_completion(const RealMatrix& prefix, int dim) {
    const int k = static_cast<int>(prefix.cols());
    if (prefix.rows() != dim || k > dim)
        throw std::invalid_argument("real_orthogonal_completion: bad prefix shape");
    if (k > 0 && (prefix.transpose() * prefix - RealMatrix::Identity(k, k)).norm() > tol::basis_orthogonality)
        throw std::invalid_argument("real_orthogonal_completion: prefix not orthonormal");
    RealMatrix out(dim, dim);
    if (k == 0) return RealMatrix::Identity(dim, dim);
    out.leftCols(k) = prefix;
    Eigen::HouseholderQR<RealMatrix> qr(prefix);
    RealMatrix q = qr.householderQ();
    out.rightCols(dim - k) = q.rightCols(dim - k);
    return out;
}

// exp(A) for antihermitian A through the Hermitian eigendecomposition of iA.
inline ComplexMatrix antihermitian_exp(const ComplexMatrix& a) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(Complex(0, 1) * a);
    ComplexVector phases = (Complex(0, -1) * es.eigenvalues().cast<Complex>()).array().exp();
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace qmetro

#endif  // QMETRO_NUMERICS_HPP
