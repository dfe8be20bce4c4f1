#pragma once

// Dense real-matrix kernels used by every other module.

#include <Eigen/Dense>

namespace adpetc::num {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kTolEig = 1e-10;
inline constexpr double kTolPsd = 1e-8;

/// Spectral decomposition S = V diag(values) V^T, eigenvalues in descending order.
struct SymEig {
    Vector values;
    Matrix vectors;
};

/// Throws DomainError if any entry is NaN or Inf. `what` names the operand.
void require_finite(const Matrix& m, const char* what);

/// Throws DimensionError unless `m` is square.
void require_square(const Matrix& m, const char* what);

Matrix symmetrize(const Matrix& s);

/// e^{M t} by scaling and squaring with the degree-13 Pade approximant.
Matrix expm(const Matrix& m, double t = 1.0);

/// Cyclic Jacobi eigen-decomposition of (S + S^T) / 2.
SymEig sym_eig(const Matrix& s);

double lambda_min(const Matrix& s);
double lambda_max(const Matrix& s);

/// Nearest symmetric matrix (Frobenius) whose eigenvalues are all >= margin.
Matrix psd_project(const Matrix& s, double margin = 0.0);

/// Largest singular value, sqrt(lambda_max(M^T M)).
double spectral_norm(const Matrix& m);

/// L with L L^T = S from the eigen square root. Eigenvalues in [-tol*|S|, 0]
/// are clipped to zero; anything more negative throws NotPsdError.
Matrix psd_factor(const Matrix& s, double tol_psd = kTolPsd);

/// Reciprocal 1-norm condition number; 0 for an exactly singular matrix.
double rcond(const Matrix& m);

/// Solves A X = B with partial-pivot LU; throws DomainError if A is singular.
Matrix solve(const Matrix& a, const Matrix& b);

Matrix inverse(const Matrix& a);

}  // namespace adpetc::num
