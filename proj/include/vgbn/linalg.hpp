#pragma once

#include <optional>
#include <span>
#include <string_view>

#include <Eigen/Dense>

#include "vgbn/error.hpp"

namespace vgbn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Symmetry tolerance, relative to the Frobenius norm.
inline constexpr double kSymTol = 1e-9;
/// PSD tolerance, relative to the largest eigenvalue magnitude.
inline constexpr double kPsdTol = 1e-9;
/// Reciprocal condition number below which a symmetric matrix is treated as singular.
inline constexpr double kSingularRcond = 1e-13;

Matrix symmetrize(const Matrix& m);

bool is_symmetric(const Matrix& m, double tol = kSymTol);
bool is_psd(const Matrix& m, double tol = kPsdTol);
bool is_finite(const Matrix& m);

/// Inverse of a symmetric positive definite matrix: Cholesky first, symmetric
/// eigendecomposition as fallback. Returns nullopt when the matrix is singular
/// (or indefinite) to working precision.
std::optional<Matrix> try_spd_inverse(const Matrix& m);

/// Same as try_spd_inverse, but reports failure as an Error with the given code.
Matrix spd_inverse(const Matrix& m, ErrorCode on_failure, std::string_view context);

/// log-determinant of a symmetric positive definite matrix, or nullopt when singular.
std::optional<double> try_spd_log_det(const Matrix& m);

Matrix block_diag(std::span<const Matrix> blocks);
Matrix vstack(std::span<const Matrix> blocks, Index cols);
Vector vconcat(std::span<const Vector> parts);

/// max |a - b| / max(1, max |b|): relative for large entries, absolute near zero.
double relative_deviation(const Matrix& a, const Matrix& b);

}  // namespace vgbn
