#ifndef QMETRO_MODEL_HPP
#define QMETRO_MODEL_HPP

#include "qmetro/numerics.hpp"
#include "qmetro/types.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace qmetro {

// A parametrized family x -> |Psi_x> with derivative access. Models are
// immutable after construction and evaluation is pure, so they can be shared
// freely across threads.
struct PureStateModel {
    int d = 0;  // Hilbert-space dimension
    int n = 0;  // number of parameters
    std::string name;
    std::vector<std::string> labels;
    RealVector reference_point;  // natural evaluation point (size n)

    std::function<ComplexVector(const RealVector&)> state;
    // Analytic derivatives; when absent, central finite differences with
    // fd_step are used.
    std::function<std::vector<ComplexVector>(const RealVector&)> derivatives;
    std::function<void(const RealVector&)> domain_check;  // throws std::domain_error
    double fd_step = tol::fd_default_step;
};

struct AncillaSpec {
    int dim = 1;
    ComplexVector xi;  // unit vector of size dim

    static AncillaSpec trivial() {
        AncillaSpec a;
        a.xi = ComplexVector::Ones(1);
        return a;
    }
};

struct StateWithDerivatives {
    ComplexVector psi;
    std::vector<ComplexVector> dpsi;
};

namespace detail {

inline void check_point(const PureStateModel& model, const RealVector& x) {
    if (x.size() != model.n)
        throw std::invalid_argument("model '" + model.name + "' expects " +
                                    std::to_string(model.n) + " parameters, got " +
                                    std::to_string(x.size()));
    if (model.domain_check) model.domain_check(x);
}

// Removes the real overlap Re<psi|v> so the normalization identity
// Re<psi|d_j psi> = 0 holds exactly.
inline void project_real_overlap(const ComplexVector& psi, ComplexVector& v) {
    v -= psi.dot(v).real() * psi;
}

}  // namespace detail

// Evaluates the state and its n derivative vectors at x. Finite-difference
// derivatives are corrected to satisfy Re<psi|d_j psi> = 0.
inline StateWithDerivatives evaluate_with_derivatives(const PureStateModel& model,
                                                      const RealVector& x) {
    detail::check_point(model, x);
    StateWithDerivatives out;
    out.psi = model.state(x);
    if (out.psi.size() != model.d)
        throw std::invalid_argument("model state has wrong dimension");
    if (std::abs(out.psi.norm() - 1.0) > tol::state_norm)
        throw std::invalid_argument("model state is not normalized at the requested point");
    if (model.derivatives) {
        out.dpsi = model.derivatives(x);
        for (const auto& d : out.dpsi) {
            // normalization-preservation identity; analytic derivatives must
            // supply it themselves
            if (std::abs(out.psi.dot(d).real()) > 1e-8 * std::max(1.0, d.norm()))
                throw std::invalid_argument(
                    "model derivatives violate Re<psi|d psi> = 0; the family does not preserve "
                    "normalization");
        }
    } else {
        const double h = model.fd_step;
        out.dpsi.reserve(model.n);
        for (int j = 0; j < model.n; ++j) {
            RealVector xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            ComplexVector der = (model.state(xp) - model.state(xm)) / (2.0 * h);
            detail::project_real_overlap(out.psi, der);
            out.dpsi.push_back(std::move(der));
        }
    }
    if (static_cast<int>(out.dpsi.size()) != model.n)
        throw std::invalid_argument("model returned wrong number of derivatives");
    return out;
}

// Tensor product with an ancilla. Parameters act on the system factor only,
// so the information matrices are unchanged.
inline PureStateModel augment(const PureStateModel& model, const AncillaSpec& anc) {
    if (anc.dim < 1 || anc.xi.size() != anc.dim)
        throw std::invalid_argument("ancilla dimension mismatch");
    if (std::abs(anc.xi.norm() - 1.0) > tol::state_norm)
        throw std::invalid_argument("ancilla state is not normalized");
    if (anc.dim == 1) {
        PureStateModel same = model;
        const Complex phase = anc.xi[0];
        same.name = model.name + "+ancilla1";
        auto base_state = model.state;
        same.state = [base_state, phase](const RealVector& x) {
            return ComplexVector(phase * base_state(x));
        };
        if (model.derivatives) {
            auto base_der = model.derivatives;
            same.derivatives = [base_der, phase](const RealVector& x) {
                auto ds = base_der(x);
                for (auto& d : ds) d *= phase;
                return ds;
            };
        }
        return same;
    }
    auto kron = [](const ComplexVector& a, const ComplexVector& b) {
        ComplexVector out(a.size() * b.size());
        for (Eigen::Index i = 0; i < a.size(); ++i)
            out.segment(i * b.size(), b.size()) = a[i] * b;
        return out;
    };
    PureStateModel big;
    big.d = model.d * anc.dim;
    big.n = model.n;
    big.name = model.name + "+ancilla" + std::to_string(anc.dim);
    big.labels = model.labels;
    big.reference_point = model.reference_point;
    big.fd_step = model.fd_step;
    big.domain_check = model.domain_check;
    ComplexVector xi = anc.xi;
    auto base_state = model.state;
    big.state = [base_state, xi, kron](const RealVector& x) { return kron(base_state(x), xi); };
    if (model.derivatives) {
        auto base_der = model.derivatives;
        big.derivatives = [base_der, xi, kron](const RealVector& x) {
            auto ds = base_der(x);
            std::vector<ComplexVector> out;
            out.reserve(ds.size());
            for (const auto& d : ds) out.push_back(kron(d, xi));
            return out;
        };
    }
    return big;
}

// ---------------------------------------------------------------------------
// Built-in families.
// ---------------------------------------------------------------------------

// Bloch-sphere qubit |Psi> = (cos(theta/2), sin(theta/2) e^{i phi}).
inline PureStateModel qubit_bloch_model() {
    PureStateModel m;
    m.d = 2;
    m.n = 2;
    m.name = "qubit_bloch";
    m.labels = {"theta", "phi"};
    m.reference_point = RealVector::Zero(2);
    m.reference_point << M_PI / 2, 0.0;
    m.state = [](const RealVector& x) {
        ComplexVector psi(2);
        psi << Complex(std::cos(x[0] / 2), 0),
            std::sin(x[0] / 2) * std::exp(Complex(0, x[1]));
        return psi;
    };
    m.derivatives = [](const RealVector& x) {
        const double th = x[0], ph = x[1];
        const Complex eip = std::exp(Complex(0, ph));
        std::vector<ComplexVector> ds(2, ComplexVector(2));
        ds[0] << Complex(-0.5 * std::sin(th / 2), 0), 0.5 * std::cos(th / 2) * eip;
        ds[1] << Complex(0, 0), Complex(0, 1) * std::sin(th / 2) * eip;
        return ds;
    };
    return m;
}

// Full pure-state family on C^d with n = 2d-2 parameters
// (phi_1..phi_{d-1}, p_1..p_{d-1}):
//   |Psi> = sqrt(p_0)|0> + sum_k sqrt(p_k) e^{i phi_k} |k>,  p_0 = 1 - sum p_k.
inline PureStateModel multiphase_model(int d) {
    if (d < 2) throw std::invalid_argument("multiphase requires d >= 2");
    PureStateModel m;
    m.d = d;
    m.n = 2 * d - 2;
    m.name = "multiphase";
    for (int k = 1; k < d; ++k) m.labels.push_back("phi_" + std::to_string(k));
    for (int k = 1; k < d; ++k) m.labels.push_back("p_" + std::to_string(k));
    m.reference_point = RealVector::Zero(m.n);
    for (int k = 0; k < d - 1; ++k) {
        m.reference_point[k] = 0.3 + 0.2 * k;       // phases
        m.reference_point[d - 1 + k] = 1.0 / (d + 1);  // weights
    }
    m.domain_check = [d](const RealVector& x) {
        double sum = 0;
        for (int k = 0; k < d - 1; ++k) {
            const double p = x[d - 1 + k];
            if (p <= 1e-12) throw std::domain_error("multiphase: weights must be positive");
            sum += p;
        }
        if (sum >= 1.0 - 1e-12)
            throw std::domain_error("multiphase: weights must sum to less than 1");
    };
    m.state = [d](const RealVector& x) {
        ComplexVector psi(d);
        double p0 = 1.0;
        for (int k = 0; k < d - 1; ++k) p0 -= x[d - 1 + k];
        psi[0] = std::sqrt(p0);
        for (int k = 0; k < d - 1; ++k)
            psi[k + 1] = std::sqrt(x[d - 1 + k]) * std::exp(Complex(0, x[k]));
        return psi;
    };
    m.derivatives = [d](const RealVector& x) {
        double p0 = 1.0;
        for (int k = 0; k < d - 1; ++k) p0 -= x[d - 1 + k];
        std::vector<ComplexVector> ds;
        ds.reserve(2 * d - 2);
        for (int k = 0; k < d - 1; ++k) {  // d/dphi_k
            ComplexVector v = ComplexVector::Zero(d);
            v[k + 1] = Complex(0, 1) * std::sqrt(x[d - 1 + k]) * std::exp(Complex(0, x[k]));
            ds.push_back(v);
        }
        for (int k = 0; k < d - 1; ++k) {  // d/dp_k
            ComplexVector v = ComplexVector::Zero(d);
            v[0] = -0.5 / std::sqrt(p0);
            v[k + 1] = 0.5 / std::sqrt(x[d - 1 + k]) * std::exp(Complex(0, x[k]));
            ds.push_back(v);
        }
        return ds;
    };
    return m;
}

// Model given by raw numeric data at a reference point x0. Away from x0 the
// family is the normalized first-order extension
//   |Psi_x> = normalize(|psi0> + sum_j (x_j - x0_j) |dpsi_j>),
// whose value and derivatives at x0 reproduce the supplied data (after the
// global-phase gauge and the Re<psi|dpsi> projection).
inline PureStateModel explicit_model(ComplexVector psi0, std::vector<ComplexVector> dpsi0,
                                     RealVector x0 = RealVector()) {
    const int d = static_cast<int>(psi0.size());
    const int n = static_cast<int>(dpsi0.size());
    if (d == 0 || n == 0) throw std::invalid_argument("explicit model needs d >= 1, n >= 1");
    const double nrm = psi0.norm();
    if (nrm < 1e-12) throw std::invalid_argument("explicit model state is zero");
    psi0 /= nrm;
    // gauge: first nonzero amplitude real positive
    for (Eigen::Index k = 0; k < psi0.size(); ++k) {
        if (std::abs(psi0[k]) > 1e-12) {
            const Complex phase = std::conj(psi0[k]) / std::abs(psi0[k]);
            psi0 *= phase;
            for (auto& dv : dpsi0) dv *= phase;
            break;
        }
    }
    for (auto& dv : dpsi0) {
        if (dv.size() != d) throw std::invalid_argument("explicit model derivative dimension mismatch");
        detail::project_real_overlap(psi0, dv);
    }
    if (x0.size() == 0) x0 = RealVector::Zero(n);
    if (x0.size() != n) throw std::invalid_argument("explicit model reference point size mismatch");

    PureStateModel m;
    m.d = d;
    m.n = n;
    m.name = "explicit";
    m.reference_point = x0;
    m.state = [psi0, dpsi0, x0](const RealVector& x) {
        ComplexVector v = psi0;
        for (std::size_t j = 0; j < dpsi0.size(); ++j) v += (x[j] - x0[j]) * dpsi0[j];
        return ComplexVector(v / v.norm());
    };
    m.derivatives = [psi0, dpsi0, x0](const RealVector& x) {
        ComplexVector v = psi0;
        for (std::size_t j = 0; j < dpsi0.size(); ++j) v += (x[j] - x0[j]) * dpsi0[j];
        const double r = v.norm();
        std::vector<ComplexVector> ds;
        ds.reserve(dpsi0.size());
        for (const auto& dv : dpsi0)
            ds.push_back(ComplexVector(dv / r - v * (v.dot(dv).real() / (r * r * r))));
        return ds;
    };
    return m;
}

}  // namespace qmetro

#endif  // QMETRO_MODEL_HPP
