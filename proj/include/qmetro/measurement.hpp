#ifndef QMETRO_MEASUREMENT_HPP
#define QMETRO_MEASUREMENT_HPP

#include "qmetro/information.hpp"
#include "qmetro/model.hpp"
#include "qmetro/numerics.hpp"
#include "qmetro/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace qmetro {

namespace stream_id {
constexpr std::uint64_t rotation = 1;
constexpr std::uint64_t b_chooser = 2;
constexpr std::uint64_t basis_padding = 3;
constexpr std::uint64_t monte_carlo = 4;
constexpr std::uint64_t brute_force = 5;
}  // namespace stream_id

// ---------------------------------------------------------------------------
// Rotation search: find the unitary that brings the rescaled SLD vectors as
// close to real vectors as possible, keeping the state itself real.
// ---------------------------------------------------------------------------

struct RotationConfig {
    int restarts = 16;
    int max_iterations = 20000;
    double objective_window_tol = 1e-12;  // convergence: change over `window` iterations
    int window = 50;
    double initial_step = 0.2;
    std::uint64_t seed = 0;
};

struct RotationResult {
    ComplexMatrix working_basis;  // d x s, orthonormal columns; column 0 is the state
    ComplexMatrix sld_coords;     // s x n coordinates of the rescaled SLDs
    ComplexMatrix u_opt;          // s x s block unitary diag(1, W*)
    ComplexMatrix target_coords;  // s x n coordinates of the real-vector targets o_j
    double residual = 0.0;        // min of sum_j ||Im(U l~_j)||^2
    double penalty = 0.0;         // analytic value 1/2 sum_q (1 - sqrt(1 - |lambda_q|^2))
    int best_restart = 0;
    bool converged = false;

    ComplexMatrix targets_full() const { return working_basis * target_coords; }
};

// All information relevant to the search lives in the span of the state and
// the SLD vectors (dimension <= n+1); the search runs there. The image of the
// state is pinned to the first basis vector, which is legitimate because the
// SLD vectors are orthogonal to the state, and removes a flat direction.
inline RotationResult optimal_rotation(const InformationBundle& bundle,
                                       const RotationConfig& config = {}) {
    const int n = bundle.n();
    const auto lt = bundle.sld_tilde();

    std::vector<ComplexVector> span_vectors;
    span_vectors.reserve(n + 1);
    span_vectors.push_back(bundle.psi);
    for (const auto& v : lt) span_vectors.push_back(v);
    const auto gs = gram_schmidt(span_vectors);

    RotationResult out;
    const int s = static_cast<int>(gs.basis.size());
    const int r = s - 1;
    out.working_basis.resize(bundle.psi.size(), s);
    for (int k = 0; k < s; ++k) out.working_basis.col(k) = gs.basis[k];
    out.sld_coords.resize(s, n);
    for (int j = 0; j < n; ++j) out.sld_coords.col(j) = out.working_basis.adjoint() * lt[j];
    out.penalty = incompatibility_penalty(bundle.lambda_abs);

    // coordinates of the rescaled SLDs on the orthocomplement of the state
    const ComplexMatrix m = out.sld_coords.bottomRows(r);
    const auto objective = [&m](const ComplexMatrix& w) {
        return (w * m).imag().squaredNorm();
    };

    ComplexMatrix w_best;
    double g_best = 0.0;
    int best_restart = -1;
    bool any_converged = false;

    for (int restart = 0; restart < std::max(1, config.restarts); ++restart) {
        ComplexMatrix w;
        if (restart == 0) {
            w = ComplexMatrix::Identity(r, r);
        } else {
            Rng rng = Rng::stream(config.seed, stream_id::rotation, restart);
            w = random_unitary(r, rng);
        }
        double g = objective(w);
        double tau = config.initial_step;
        double g_window_start = g;
        bool converged = false;
        for (int it = 0; it < config.max_iterations; ++it) {
            const ComplexMatrix z = w * m;
            const ComplexMatrix grad = Complex(0, 2) * z.imag().cast<Complex>() * m.adjoint();
            const ComplexMatrix wg = w.adjoint() * grad;
            const ComplexMatrix dir = (wg - wg.adjoint()) / 2.0;  // antihermitian
            if (dir.norm() < 1e-14 * std::max(1.0, g)) {
                converged = true;
                break;
            }
            bool accepted = false;
            for (int bt = 0; bt < 60; ++bt) {
                const ComplexMatrix w_try = w * antihermitian_exp(ComplexMatrix(-tau * dir));
                const double g_try = objective(w_try);
                if (g_try < g) {
                    w = w_try;
                    g = g_try;
                    tau *= 1.3;
                    accepted = true;
                    break;
                }
                tau *= 0.4;
                if (tau < 1e-18) break;
            }
            if (!accepted) {
                converged = true;  // no descent direction makes progress
                break;
            }
            if ((it + 1) % config.window == 0) {
                if (g_window_start - g < config.objective_window_tol) {
                    converged = true;
                    break;
                }
                g_window_start = g;
            }
        }
        any_converged = any_converged || converged;
        if (best_restart < 0 || g < g_best - 1e-12) {  // earliest restart wins ties
            g_best = g;
            w_best = w;
            best_restart = restart;
        }
    }
    if (!any_converged)
        throw ConvergenceError("rotation search did not converge in any restart", g_best);

    out.residual = g_best;
    out.best_restart = best_restart;
    out.converged = true;
    out.u_opt = ComplexMatrix::Identity(s, s);
    if (r > 0) out.u_opt.bottomRightCorner(r, r) = w_best;
    out.target_coords = out.u_opt.adjoint() * (out.u_opt * out.sld_coords).real().cast<Complex>();
    return out;
}

// ---------------------------------------------------------------------------
// B-matrix policies and validation.
// ---------------------------------------------------------------------------

struct BValidation {
    bool ok = true;
    std::vector<std::pair<int, int>> violations;  // (row, column)

    std::string describe() const {
        std::ostringstream os;
        os << "B zero-pattern violations at (row,col):";
        for (const auto& [r, c] : violations) os << " (" << r << "," << c << ")";
        return os.str();
    }
};

// A row whose first-column entry vanishes must vanish across all constrained
// columns, otherwise the associated target vectors cannot be realized as
// functions of the measurement record. A first column free of zeros is always
// acceptable.
inline BValidation validate_B(const RealMatrix& b, int constrained_cols) {
    const int s = static_cast<int>(b.rows());
    if (b.cols() != s || (b.transpose() * b - RealMatrix::Identity(s, s)).norm() >
                             tol::basis_orthogonality * std::max(1, s))
        throw std::invalid_argument("validate_B: matrix is not orthogonal");
    BValidation v;
    const int jmax = std::min(constrained_cols, s - 1);
    for (int m = 0; m < s; ++m) {
        if (std::abs(b(m, 0)) >= tol::zero_entry) continue;
        for (int j = 1; j <= jmax; ++j)
            if (std::abs(b(m, j)) >= tol::zero_entry) {
                v.ok = false;
                v.violations.emplace_back(m, j);
            }
    }
    return v;
}

// Builds a B matrix whose first column is sqrt(p), fixing the outcome
// probabilities. Zero-probability rows force zero rows across the constrained
// block, which needs at least constrained_cols+1 strictly positive entries.
inline RealMatrix shape_probabilities(const RealVector& p, int constrained_cols) {
    const int s = static_cast<int>(p.size());
    if (p.minCoeff() < -1e-12 || std::abs(p.sum() - 1.0) > 1e-9)
        throw std::invalid_argument("shape_probabilities: not a probability vector");
    std::vector<int> nz;
    for (int m = 0; m < s; ++m)
        if (p[m] > tol::zero_entry) nz.push_back(m);
    const int z = static_cast<int>(nz.size());
    if (z < constrained_cols + 1)
        throw ValidationError("shape_probabilities: " + std::to_string(constrained_cols + 1) +
                              " strictly positive probabilities required, got " +
                              std::to_string(z));
    RealVector root = p.cwiseMax(0.0).cwiseSqrt();
    root /= root.norm();
    if (z == s) return real_orthogonal_completion(root, s);

    // complete within the support, then append the zero rows as themselves
    RealVector u0(z);
    for (int i = 0; i < z; ++i) u0[i] = root[nz[i]];
    RealMatrix q = real_orthogonal_completion(u0, z);
    RealMatrix b = RealMatrix::Zero(s, s);
    for (int col = 0; col < z; ++col)
        for (int i = 0; i < z; ++i) b(nz[i], col) = q(i, col);
    int col = z;
    for (int m = 0; m < s; ++m)
        if (p[m] <= tol::zero_entry) b(m, col++) = 1.0;
    const auto check = validate_B(b, constrained_cols);
    if (!check.ok) throw ValidationError(check.describe());
    return b;
}

struct BPolicy {
    enum class Kind { random_dense, given, shaped };
    Kind kind = Kind::random_dense;
    RealMatrix matrix;        // for `given`
    RealVector target_probs;  // for `shaped`
    double min_first_column = 1e-3;

    static BPolicy random_dense() { return {}; }
    static BPolicy given(RealMatrix b) {
        BPolicy p;
        p.kind = Kind::given;
        p.matrix = std::move(b);
        return p;
    }
    static BPolicy shaped(RealVector probs) {
        BPolicy p;
        p.kind = Kind::shaped;
        p.target_probs = std::move(probs);
        return p;
    }
};

// ---------------------------------------------------------------------------
// Estimator coefficients and approximation errors.
// ---------------------------------------------------------------------------

// Optimal coefficients f_j(m) = Re(<Psi|m><m|l_j>) / p_m (zero below the
// probability cutoff), obtained by per-outcome minimization of the
// mean-squared approximation error.
inline RealMatrix estimator_coefficients(const ComplexMatrix& outcome_bras,
                                         const ComplexVector& psi,
                                         const std::vector<ComplexVector>& slds,
                                         double cutoff = tol::probability_cutoff) {
    const int n = static_cast<int>(slds.size());
    const int m_count = static_cast<int>(outcome_bras.rows());
    const ComplexVector c = outcome_bras * psi;
    RealMatrix f = RealMatrix::Zero(n, m_count);
    for (int j = 0; j < n; ++j) {
        const ComplexVector z = outcome_bras * slds[j];
        for (int m = 0; m < m_count; ++m) {
            const double p = std::norm(c[m]);
            if (p > cutoff) f(j, m) = (std::conj(c[m]) * z[m]).real() / p;
        }
    }
    return f;
}

// eps_j^2 = sum_m |f_j(m) <m|Psi> - <m|l_j>|^2, plus the weight of l_j outside
// the span of the outcomes (that part cannot be represented at all).
inline RealVector approximation_errors(const ComplexMatrix& outcome_bras, const RealMatrix& f,
                                       const ComplexVector& psi,
                                       const std::vector<ComplexVector>& slds) {
    const int n = static_cast<int>(slds.size());
    const ComplexVector c = outcome_bras * psi;
    RealVector eps(n);
    for (int j = 0; j < n; ++j) {
        const ComplexVector z = outcome_bras * slds[j];
        double total = 0.0;
        for (Eigen::Index m = 0; m < z.size(); ++m) total += std::norm(f(j, m) * c[m] - z[m]);
        total += std::max(0.0, slds[j].squaredNorm() - z.squaredNorm());
        eps[j] = total;
    }
    return eps;
}

inline RealVector approximation_errors(const ComplexMatrix& outcome_bras,
                                       const ComplexVector& psi,
                                       const std::vector<ComplexVector>& slds) {
    return approximation_errors(outcome_bras, estimator_coefficients(outcome_bras, psi, slds),
                                psi, slds);
}

// ---------------------------------------------------------------------------
// Two-step basis construction: U = B A^{-1}.
// ---------------------------------------------------------------------------

struct MeasurementPlan {
    ComplexMatrix outcome_bras;   // rows <m| in the full space
    ComplexMatrix working_basis;  // d x s
    ComplexMatrix u;              // s x s change of basis on subspace coordinates
    RealMatrix b_matrix;
    int constrained_cols = 0;  // columns of B subject to the zero pattern
    int rank_dropped = 0;      // target vectors absorbed by Gram-Schmidt

    RealVector amplitudes;    // c_m = <m|Psi>, real by construction
    RealVector probabilities; // c_m^2
    RealMatrix estimator_f;   // n x s
    RealMatrix f_c;
    RealVector eps_sq;        // per-parameter approximation errors
    RealVector eps_sq_tilde;  // same in coordinates where F_Q = I
    double objective_tilde = 0.0;  // sum_j ||Im <m|l~_j>||^2 in this basis
    double gamma_achieved = 0.0;   // Tr(F_Q^{-1} F_C)
    double gamma_bound = 0.0;
    double residual = 0.0;  // rotation-search residual (certificate value)
};

inline MeasurementPlan build_basis(const InformationBundle& bundle, const RotationResult& rot,
                                   const BPolicy& policy = {}, std::uint64_t seed = 0) {
    const int n = bundle.n();
    const int s = static_cast<int>(rot.working_basis.cols());

    // Step 1: Gram-Schmidt on {state, o_1, ..., o_n} in subspace coordinates.
    std::vector<ComplexVector> set;
    set.reserve(n + 1);
    ComplexVector e0 = ComplexVector::Zero(s);
    e0[0] = 1.0;
    set.push_back(e0);
    for (int j = 0; j < n; ++j) set.push_back(rot.target_coords.col(j));
    auto gs = gram_schmidt(set);
    const int k = static_cast<int>(gs.basis.size());

    MeasurementPlan plan;
    plan.rank_dropped = (n + 1) - k;
    plan.constrained_cols = k - 1;

    // pad to a complete basis of the working space
    Rng pad_rng = Rng::stream(seed, stream_id::basis_padding);
    while (static_cast<int>(gs.basis.size()) < s) {
        ComplexVector v(s);
        for (int i = 0; i < s; ++i) v[i] = pad_rng.complex_normal();
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : gs.basis) v -= b.dot(v) * b;
        if (v.norm() > 1e-6) gs.basis.push_back(v.normalized());
    }
    ComplexMatrix a(s, s);
    for (int col = 0; col < s; ++col) a.col(col) = gs.basis[col];

    // Step 2: real orthogonal B with a valid zero pattern.
    RealMatrix b;
    switch (policy.kind) {
        case BPolicy::Kind::given: {
            b = policy.matrix;
            const auto check = validate_B(b, plan.constrained_cols);
            if (!check.ok) throw ValidationError(check.describe());
            break;
        }
        case BPolicy::Kind::shaped:
            b = shape_probabilities(policy.target_probs, plan.constrained_cols);
            break;
        case BPolicy::Kind::random_dense: {
            Rng rng = Rng::stream(seed, stream_id::b_chooser);
            for (int attempt = 0;; ++attempt) {
                b = random_orthogonal(s, rng);
                if (b.col(0).cwiseAbs().minCoeff() > policy.min_first_column) break;
                if (attempt > 512)
                    throw ConvergenceError("could not sample a dense first column for B", 0.0);
            }
            break;
        }
    }
    if (b.rows() != s)
        throw std::invalid_argument("B has wrong dimension for the working space");

    plan.b_matrix = b;
    plan.working_basis = rot.working_basis;
    plan.u = b.cast<Complex>() * a.adjoint();
    plan.outcome_bras = plan.u * rot.working_basis.adjoint();

    // amplitudes and probabilities; reality is a construction invariant
    const ComplexVector c = plan.outcome_bras * bundle.psi;
    plan.amplitudes = c.real();
    plan.probabilities = c.cwiseAbs2();
    if (c.imag().cwiseAbs().maxCoeff() > 1e-9)
        throw std::runtime_error("constructed basis failed to make the state real");

    const auto lt = bundle.sld_tilde();
    plan.estimator_f = estimator_coefficients(plan.outcome_bras, bundle.psi, bundle.sld);
    plan.eps_sq = approximation_errors(plan.outcome_bras, plan.estimator_f, bundle.psi, bundle.sld);
    plan.eps_sq_tilde = approximation_errors(plan.outcome_bras, bundle.psi, lt);

    std::vector<ComplexVector> dpsi_eq;
    dpsi_eq.reserve(n);
    for (const auto& l : bundle.sld) dpsi_eq.push_back(ComplexVector(0.5 * l));
    plan.f_c = cfim(plan.outcome_bras, bundle.psi, dpsi_eq);
    plan.gamma_achieved = bundle.f_q.ldlt().solve(plan.f_c).trace();
    plan.gamma_bound = n - incompatibility_penalty(bundle.lambda_abs);
    plan.residual = rot.residual;

    double obj = 0.0;
    for (const auto& l : lt) obj += (plan.outcome_bras * l).imag().squaredNorm();
    plan.objective_tilde = obj;
    return plan;
}

struct MeasurementConfig {
    RotationConfig rotation;
    BPolicy b_policy;
    std::uint64_t seed = 0;
};

// Full pipeline: rotation search followed by the two-step construction.
inline MeasurementPlan design_measurement(const InformationBundle& bundle,
                                          const MeasurementConfig& config = {}) {
    RotationConfig rc = config.rotation;
    rc.seed = config.seed;
    const auto rot = optimal_rotation(bundle, rc);
    return build_basis(bundle, rot, config.b_policy, config.seed);
}

// ---------------------------------------------------------------------------
// Brute-force lower bound on Gamma = max Tr(F_Q^{-1} F_C): projected gradient
// ascent over full orthonormal bases, with random restarts. Independent of
// the constructive route above.
// ---------------------------------------------------------------------------

struct BruteForceConfig {
    int restarts = 8;
    int max_iterations = 3000;
    double initial_step = 0.05;
    std::uint64_t seed = 0;
    int dimension_limit = 8;
};

struct BruteForceResult {
    double best_gamma = 0.0;
    ComplexMatrix best_basis;  // rows <m|
    int best_restart = 0;
};

inline BruteForceResult brute_force_gamma(const PureStateModel& model, const RealVector& x,
                                          const BruteForceConfig& config = {}) {
    if (model.d > config.dimension_limit)
        throw ValidationError("brute_force_gamma: dimension " + std::to_string(model.d) +
                              " exceeds limit " + std::to_string(config.dimension_limit));
    const auto ev = evaluate_with_derivatives(model, x);
    const auto bundle = geometric_tensor(ev.psi, ev.dpsi);
    const RealMatrix w_inv = bundle.f_q.inverse();
    const int d = model.d;
    const int n = model.n;

    struct Eval {
        double gamma;
        ComplexVector c;
        ComplexMatrix g;  // n x d, row j = V d_j psi
        RealMatrix dp;    // n x d
        RealVector p;
    };
    const auto evaluate = [&](const ComplexMatrix& v) {
        Eval e;
        e.c = v * ev.psi;
        e.p = e.c.cwiseAbs2();
        e.g.resize(n, d);
        for (int j = 0; j < n; ++j) e.g.row(j) = (v * ev.dpsi[j]).transpose();
        e.dp.resize(n, d);
        for (int j = 0; j < n; ++j)
            e.dp.row(j) =
                2.0 * (e.g.row(j).transpose().array().conjugate() * e.c.array()).real().transpose();
        e.gamma = 0.0;
        for (int m = 0; m < d; ++m)
            if (e.p[m] > tol::probability_cutoff)
                e.gamma += e.dp.col(m).dot(w_inv * e.dp.col(m)) / e.p[m];
        return e;
    };

    BruteForceResult out;
    out.best_gamma = -1.0;
    for (int restart = 0; restart < std::max(1, config.restarts); ++restart) {
        Rng rng = Rng::stream(config.seed, stream_id::brute_force, restart);
        ComplexMatrix v = random_unitary(d, rng);
        Eval e = evaluate(v);
        double tau = config.initial_step;
        for (int it = 0; it < config.max_iterations; ++it) {
            // Euclidean gradient of gamma: grad = w0 psi^dag + sum_j w^j dpsi_j^dag
            ComplexVector w0 = ComplexVector::Zero(d);
            ComplexMatrix wj_all = ComplexMatrix::Zero(d, n);  // column j holds w^j
            for (int m = 0; m < d; ++m) {
                if (e.p[m] <= tol::probability_cutoff) continue;
                const RealVector u = w_inv * e.dp.col(m);
                const double q = e.dp.col(m).dot(u);
                for (int j = 0; j < n; ++j) {
                    wj_all(m, j) = 4.0 * u[j] / e.p[m] * e.c[m];
                    w0[m] += 4.0 * u[j] / e.p[m] * e.g(j, m);
                }
                w0[m] -= 2.0 * q / (e.p[m] * e.p[m]) * e.c[m];
            }
            ComplexMatrix grad = w0 * ev.psi.adjoint();
            for (int j = 0; j < n; ++j) grad += wj_all.col(j) * ev.dpsi[j].adjoint();
            const ComplexMatrix vg = v.adjoint() * grad;
            const ComplexMatrix dir = (vg - vg.adjoint()) / 2.0;
            if (dir.norm() < 1e-13 * std::max(1.0, e.gamma)) break;
            bool accepted = false;
            for (int bt = 0; bt < 50; ++bt) {
                const ComplexMatrix v_try = v * antihermitian_exp(ComplexMatrix(tau * dir));
                Eval e_try = evaluate(v_try);
                if (e_try.gamma > e.gamma) {
                    v = v_try;
                    e = std::move(e_try);
                    tau *= 1.25;
                    accepted = true;
                    break;
                }
                tau *= 0.5;
                if (tau < 1e-16) break;
            }
            if (!accepted) break;
        }
        if (e.gamma > out.best_gamma + 1e-12) {
            out.best_gamma = e.gamma;
            out.best_basis = v;
            out.best_restart = restart;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo verification: sample the measurement, fit by local maximum
// likelihood, compare the empirical covariance against F_C^{-1} / shots.
// ---------------------------------------------------------------------------

struct SimulationConfig {
    std::uint64_t seed = 0;
    int trials = 1000;
    int max_scoring_iterations = 60;
    double step_tolerance = 1e-10;
};

struct SimulationResult {
    RealMatrix covariance;    // empirical covariance of the estimator
    RealMatrix expected;      // F_C^{-1} / shots
    RealMatrix fc_truth;
    RealMatrix fq_truth;
    RealVector mean;          // mean estimate
    long shots = 0;
    int trials = 0;
    double gamma_estimate = 0.0;  // Tr(F_Q^{-1} (shots * covariance)^{-1})
};

inline SimulationResult simulate_estimation(const ComplexMatrix& outcome_bras,
                                            const PureStateModel& model, const RealVector& x_true,
                                            long shots, const SimulationConfig& config = {}) {
    if (shots < 1) throw std::invalid_argument("simulate_estimation: shots must be positive");
    const int n = model.n;
    const int m_count = static_cast<int>(outcome_bras.rows());

    struct Probs {
        RealVector p;   // m_count (+1 remainder slot at the end)
        RealMatrix dp;  // n x (m_count+1)
    };
    const auto probs_at = [&](const RealVector& x) {
        const auto ev = evaluate_with_derivatives(model, x);
        Probs pr;
        pr.p.resize(m_count + 1);
        pr.dp.resize(n, m_count + 1);
        const ComplexVector c = outcome_bras * ev.psi;
        for (int m = 0; m < m_count; ++m) pr.p[m] = std::norm(c[m]);
        pr.p[m_count] = std::max(0.0, 1.0 - c.squaredNorm());
        for (int j = 0; j < n; ++j) {
            const ComplexVector g = outcome_bras * ev.dpsi[j];
            for (int m = 0; m < m_count; ++m)
                pr.dp(j, m) = 2.0 * (g[m] * std::conj(c[m])).real();
            const Complex rest = ev.psi.dot(ev.dpsi[j]) -
                                 (c.array().conjugate() * g.array()).sum();
            pr.dp(j, m_count) = 2.0 * rest.real();
        }
        return pr;
    };

    const auto fisher_of = [&](const Probs& pr) {
        RealMatrix fc = RealMatrix::Zero(n, n);
        for (int m = 0; m <= m_count; ++m)
            if (pr.p[m] > tol::probability_cutoff)
                fc += pr.dp.col(m) * pr.dp.col(m).transpose() / pr.p[m];
        return fc;
    };

    const Probs truth = probs_at(x_true);
    const RealMatrix fc0 = fisher_of(truth);
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(fc0);
    if (es.eigenvalues().minCoeff() <= 1e-12 * std::max(1.0, es.eigenvalues().maxCoeff()))
        throw SingularInformationError(
            "simulate_estimation: classical Fisher information is singular under this measurement");

    SimulationResult out;
    out.shots = shots;
    out.trials = config.trials;
    out.fc_truth = fc0;
    {
        const auto evt = evaluate_with_derivatives(model, x_true);
        out.fq_truth = geometric_tensor(evt.psi, evt.dpsi).f_q;
    }
    out.expected = fc0.inverse() / static_cast<double>(shots);

    std::vector<RealVector> estimates;
    estimates.reserve(config.trials);
    for (int trial = 0; trial < config.trials; ++trial) {
        // one independent stream per trial so results do not depend on batching
        std::mt19937_64 engine(mix64(config.seed) ^ mix64(stream_id::monte_carlo * 0x9e37ull + trial));
        std::vector<long> counts(m_count + 1, 0);
        long remaining = shots;
        double mass = 1.0;
        for (int m = 0; m <= m_count && remaining > 0; ++m) {
            if (m == m_count) {
                counts[m] = remaining;
                break;
            }
            const double q = std::min(1.0, std::max(0.0, truth.p[m] / mass));
            std::binomial_distribution<long> bin(remaining, q);
            counts[m] = bin(engine);
            remaining -= counts[m];
            mass -= truth.p[m];
            if (mass <= 0) break;
        }

        RealVector x = x_true;
        for (int it = 0; it < config.max_scoring_iterations; ++it) {
            const Probs pr = probs_at(x);
            RealVector score = RealVector::Zero(n);
            for (int m = 0; m <= m_count; ++m) {
                // counts on sub-cutoff outcomes are information-free by the
                // measure-zero convention and would destabilize the step
                if (counts[m] == 0 || pr.p[m] <= tol::probability_cutoff) continue;
                score += static_cast<double>(counts[m]) / pr.p[m] * pr.dp.col(m);
            }
            const RealMatrix info = static_cast<double>(shots) * fisher_of(pr);
            const RealVector step = info.ldlt().solve(score);
            x += step;
            if (step.norm() <= config.step_tolerance * (1.0 + x.norm())) break;
        }
        estimates.push_back(x);
    }

    out.mean = RealVector::Zero(n);
    for (const auto& e : estimates) out.mean += e;
    out.mean /= static_cast<double>(estimates.size());
    out.covariance = RealMatrix::Zero(n, n);
    for (const auto& e : estimates) {
        const RealVector d = e - out.mean;
        out.covariance += d * d.transpose();
    }
    out.covariance /= static_cast<double>(estimates.size() - 1);
    const RealMatrix info_emp = (static_cast<double>(shots) * out.covariance).inverse();
    out.gamma_estimate = out.fq_truth.ldlt().solve(info_emp).trace();
    return out;
}

}  // namespace qmetro

#endif  // QMETRO_MEASUREMENT_HPP
