#ifndef QMETRO_INFORMATION_HPP
#define QMETRO_INFORMATION_HPP

#include "qmetro/model.hpp"
#include "qmetro/numerics.hpp"
#include "qmetro/types.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace qmetro {

// SLD vectors |l_j> = L_j|Psi> = 2(|d_j Psi> - <Psi|d_j Psi>|Psi>), the images
// of the state under the symmetric logarithmic derivatives. They are
// orthogonal to the state by construction.
inline std::vector<ComplexVector> sld_vectors(const ComplexVector& psi,
                                              const std::vector<ComplexVector>& dpsi) {
    std::vector<ComplexVector> ls;
    ls.reserve(dpsi.size());
    for (const auto& dp : dpsi) ls.push_back(ComplexVector(2.0 * (dp - psi.dot(dp) * psi)));
    return ls;
}

// Geometric tensor F_{jk} = <l_j|l_k> and its split F = F_Q + i F_Im together
// with the incompatibility magnitudes |lambda_q|, the eigenvalue magnitudes of
// F_Q^{-1/2} F_Im F_Q^{-1/2}.
struct InformationBundle {
    ComplexVector psi;
    std::vector<ComplexVector> sld;  // l_j
    ComplexMatrix f;                 // n x n Hermitian PSD
    RealMatrix f_q;                  // Re F, the quantum Fisher information matrix
    RealMatrix f_im;                 // Im F, antisymmetric
    RealMatrix f_q_inv_sqrt;         // cached F_Q^{-1/2}
    RealVector lambda_abs;           // descending, length n

    int n() const { return static_cast<int>(f_q.rows()); }
    int d() const { return static_cast<int>(psi.size()); }

    // SLD vectors in coordinates where F_Q = I.
    std::vector<ComplexVector> sld_tilde() const {
        std::vector<ComplexVector> lt(sld.size(), ComplexVector::Zero(psi.size()));
        for (int j = 0; j < n(); ++j)
            for (int k = 0; k < n(); ++k) lt[j] += f_q_inv_sqrt(j, k) * sld[k];
        return lt;
    }
};

inline InformationBundle geometric_tensor(const ComplexVector& psi,
                                          const std::vector<ComplexVector>& dpsi) {
    InformationBundle b;
    b.psi = psi;
    b.sld = sld_vectors(psi, dpsi);
    const int n = static_cast<int>(b.sld.size());
    b.f.resize(n, n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) b.f(j, k) = b.sld[j].dot(b.sld[k]);
    b.f = (b.f + b.f.adjoint()).eval() / 2.0;  // clean Hermiticity
    b.f_q = b.f.real();
    b.f_im = b.f.imag();
    b.f_im = ((b.f_im - b.f_im.transpose()) / 2.0).eval();
    b.f_q_inv_sqrt = spd_inv_sqrt(b.f_q);  // throws SingularInformationError if F_Q degenerate
    b.lambda_abs = skew_spectrum(RealMatrix(b.f_q_inv_sqrt * b.f_im * b.f_q_inv_sqrt));
    const double excess = b.lambda_abs.size() ? b.lambda_abs.maxCoeff() - 1.0 : 0.0;
    if (excess > tol::lambda_excess)
        throw std::runtime_error("incompatibility magnitude exceeds 1 by " +
                                 std::to_string(excess) + "; model data is inconsistent");
    return b;
}

inline InformationBundle information_at(const PureStateModel& model, const RealVector& x) {
    const auto ev = evaluate_with_derivatives(model, x);
    return geometric_tensor(ev.psi, ev.dpsi);
}

// Classical Fisher information matrix of a projective measurement given by
// the rows of `outcome_bras` (each row is <m|). Rows must be orthonormal;
// completeness may be implicit: any missing mass is aggregated into a
// remainder projector whose contribution is included when its probability is
// above the cutoff.
inline RealMatrix cfim(const ComplexMatrix& outcome_bras, const ComplexVector& psi,
                       const std::vector<ComplexVector>& dpsi,
                       double cutoff = tol::probability_cutoff) {
    const int m_count = static_cast<int>(outcome_bras.rows());
    const int n = static_cast<int>(dpsi.size());
    ComplexMatrix gram = outcome_bras * outcome_bras.adjoint();
    if ((gram - ComplexMatrix::Identity(m_count, m_count)).norm() > tol::basis_orthogonality * m_count)
        throw std::invalid_argument("cfim: measurement vectors are not orthonormal");

    ComplexVector c = outcome_bras * psi;                       // <m|Psi>
    RealMatrix dp(n, m_count);                                  // d_j p_m
    for (int j = 0; j < n; ++j) {
        ComplexVector g = outcome_bras * dpsi[j];
        dp.row(j) = 2.0 * (g.array() * c.array().conjugate()).real().transpose();
    }
    RealMatrix fc = RealMatrix::Zero(n, n);
    for (int m = 0; m < m_count; ++m) {
        const double p = std::norm(c[m]);
        if (p > cutoff)
            fc += dp.col(m) * dp.col(m).transpose() / p;
        else if (dp.col(m).cwiseAbs().maxCoeff() > 1e-6)
            throw std::runtime_error("cfim: outcome with vanishing probability carries first-order information");
    }
    // remainder projector for an incomplete outcome list
    const double p_rest = std::max(0.0, 1.0 - c.squaredNorm());
    if (p_rest > cutoff) {
        RealVector dp_rest(n);
        for (int j = 0; j < n; ++j) {
            const Complex overlap = psi.dot(dpsi[j]) - (c.array().conjugate() *
                                    (outcome_bras * dpsi[j]).array()).sum();
            dp_rest[j] = 2.0 * overlap.real();
        }
        fc += dp_rest * dp_rest.transpose() / p_rest;
    }
    // F_C <= F_Q is a model-error detector: violations are reported, never clipped
    const auto slds = sld_vectors(psi, dpsi);
    RealMatrix fq(n, n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k <= j; ++k) fq(j, k) = fq(k, j) = slds[j].dot(slds[k]).real();
    Eigen::SelfAdjointEigenSolver<RealMatrix> gap(RealMatrix(fq - fc), Eigen::EigenvaluesOnly);
    if (gap.eigenvalues().minCoeff() < -1e-8)
        throw std::runtime_error("cfim: classical information exceeds the quantum limit by " +
                                 std::to_string(-gap.eigenvalues().minCoeff()) +
                                 "; the model data is inconsistent");
    return fc;
}

// The incompatibility trade-off report: the tight upper bound on
// Gamma = max over measurements of Tr(F_Q^{-1} F_C).
struct TradeoffReport {
    int n = 0;
    int d = 0;
    double gamma_bound = 0.0;          // n - sum of per-mode penalties
    RealVector per_mode_penalty;       // (1 - sqrt(1 - |lambda_q|^2)) / 2, descending
    double gill_massar_constant = 0.0; // d - 1
    bool weak_commutativity = false;   // true iff F_Im vanishes (all |lambda_q| ~ 0)
};

inline double incompatibility_penalty(const RealVector& lambda_abs) {
    double pen = 0.0;
    for (Eigen::Index q = 0; q < lambda_abs.size(); ++q) {
        const double lam = lambda_abs[q];
        // |lambda| = 1 is an exact structural value (full-parameter models);
        // snap to it so the bound is exact there instead of sqrt-amplifying
        // rounding noise.
        const double root = (lam >= 1.0 - tol::lambda_snap)
                                ? 0.0
                                : std::sqrt(std::max(0.0, 1.0 - lam * lam));
        pen += 0.5 * (1.0 - root);
    }
    return pen;
}

inline TradeoffReport tradeoff_bound(const InformationBundle& b) {
    TradeoffReport r;
    r.n = b.n();
    r.d = b.d();
    r.per_mode_penalty.resize(r.n);
    for (int q = 0; q < r.n; ++q) {
        const double lam = b.lambda_abs[q];
        const double root =
            (lam >= 1.0 - tol::lambda_snap) ? 0.0 : std::sqrt(std::max(0.0, 1.0 - lam * lam));
        r.per_mode_penalty[q] = 0.5 * (1.0 - root);
    }
    r.gamma_bound = r.n - r.per_mode_penalty.sum();
    r.gill_massar_constant = r.d - 1.0;
    r.weak_commutativity =
        b.lambda_abs.size() == 0 || b.lambda_abs.maxCoeff() < tol::weak_commutativity;
    return r;
}

// Linear change of parameters x~ = J x. SLD vectors transform with J^{-T},
// the geometric tensor by congruence; the incompatibility magnitudes and the
// trade-off bound are invariant.
inline InformationBundle reparametrize(const InformationBundle& b, const RealMatrix& j) {
    const int n = b.n();
    if (j.rows() != n || j.cols() != n)
        throw std::invalid_argument("reparametrize: J has wrong shape");
    Eigen::FullPivLU<RealMatrix> lu(j);
    if (!lu.isInvertible()) throw std::invalid_argument("reparametrize: J is singular");
    RealMatrix jinv_t = lu.inverse().transpose();
    std::vector<ComplexVector> dpsi_new(n, ComplexVector::Zero(b.psi.size()));
    // rebuild from sld/2 (which equals the projected derivative)
    for (int jdx = 0; jdx < n; ++jdx)
        for (int k = 0; k < n; ++k) dpsi_new[jdx] += jinv_t(jdx, k) * (0.5 * b.sld[k]);
    return geometric_tensor(b.psi, dpsi_new);
}

}  // namespace qmetro

#endif  // QMETRO_INFORMATION_HPP
