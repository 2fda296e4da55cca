#ifndef QMETRO_TYPES_HPP
#define QMETRO_TYPES_HPP

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace qmetro {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

// Tolerances shared across the library. Values are part of the public
// contract: tests and reports quote them.
namespace tol {
constexpr double orthonormality = 1e-12;     // Gram-Schmidt output quality
constexpr double rank_drop = 1e-9;           // relative residual below which a vector is dropped
constexpr double spd_floor = 1e-10;          // min/max eigenvalue ratio for SPD inversion
constexpr double basis_orthogonality = 1e-10;// accepted measurement/B-matrix orthogonality
constexpr double zero_entry = 1e-12;         // B-matrix zero-pattern threshold
constexpr double probability_cutoff = 1e-12; // outcomes below this carry no usable information
constexpr double lambda_excess = 1e-9;       // allowed |lambda| overshoot above 1
constexpr double lambda_snap = 1e-12;        // |lambda| within this of 1 is treated as exactly 1
constexpr double weak_commutativity = 1e-9;  // max |lambda| below this counts as compatible
constexpr double state_norm = 1e-10;         // unit-norm requirement on model states
constexpr double fd_default_step = 1e-5;     // central-difference step
constexpr double residual_certificate = 1e-6;// rotation residual vs. analytic penalty
}  // namespace tol

// Error taxonomy. The CLI maps these onto distinct exit codes.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingularInformationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
    ConvergenceError(const std::string& what, double best)
        : std::runtime_error(what), best_residual(best) {}
    double best_residual;
};

}  // namespace qmetro

#endif  // QMETRO_TYPES_HPP
