#include "vgbn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vgbn {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::SingularPrecision: return "SingularPrecision";
    case ErrorCode::SingularCombination: return "SingularCombination";
    case ErrorCode::SingularInnovationCovariance: return "SingularInnovationCovariance";
    case ErrorCode::SingularPriorCovariance: return "SingularPriorCovariance";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::ClusterInvalid: return "ClusterInvalid";
    case ErrorCode::InvalidNetwork: return "InvalidNetwork";
    case ErrorCode::IncompleteMailbox: return "IncompleteMailbox";
    case ErrorCode::HasEvidence: return "HasEvidence";
    case ErrorCode::NoEvidence: return "NoEvidence";
    case ErrorCode::NotRemovable: return "NotRemovable";
    case ErrorCode::SequenceMismatch: return "SequenceMismatch";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = m.norm();
  if (scale == 0.0) return true;
  return (m - m.transpose()).norm() <= tol * scale;
}

bool is_psd(const Matrix& m, double tol) {
  if (!is_symmetric(m)) return false;
  if (m.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(m), Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) return false;
  const auto& ev = eig.eigenvalues();
  const double largest = ev.cwiseAbs().maxCoeff();
  return ev.minCoeff() >= -tol * std::max(largest, 1e-300);
}

bool is_finite(const Matrix& m) { return m.allFinite(); }

std::optional<Matrix> try_spd_inverse(const Matrix& m) {
  const Index n = m.rows();
  if (n != m.cols()) return std::nullopt;
  if (n == 0) return Matrix(0, 0);
  const Matrix s = symmetrize(m);
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() == Eigen::Success && llt.rcond() > kSingularRcond) {
    return symmetrize(llt.solve(Matrix::Identity(n, n)));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  if (eig.info() != Eigen::Success) return std::nullopt;
  const Vector& ev = eig.eigenvalues();
  const double largest = ev.maxCoeff();
  if (!(largest > 0.0) || ev.minCoeff() <= kSingularRcond * largest) return std::nullopt;
  const Matrix& v = eig.eigenvectors();
  return symmetrize(v * ev.cwiseInverse().asDiagonal() * v.transpose());
}

Matrix spd_inverse(const Matrix& m, ErrorCode on_failure, std::string_view context) {
  auto inv = try_spd_inverse(m);
  if (!inv) {
    throw Error(on_failure, std::string(context) + " is not positive definite");
  }
  return *std::move(inv);
}

std::optional<double> try_spd_log_det(const Matrix& m) {
  if (m.rows() != m.cols()) return std::nullopt;
  Eigen::LLT<Matrix> llt(symmetrize(m));
  if (llt.info() != Eigen::Success || llt.rcond() <= kSingularRcond) return std::nullopt;
  const Matrix& l = llt.matrixLLT();
  double acc = 0.0;
  for (Index i = 0; i < m.rows(); ++i) acc += std::log(l(i, i));
  return 2.0 * acc;
}

Matrix block_diag(std::span<const Matrix> blocks) {
  Index rows = 0, cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Matrix out = Matrix::Zero(rows, cols);
  Index r = 0, c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

Matrix vstack(std::span<const Matrix> blocks, Index cols) {
  Index rows = 0;
  for (const auto& b : blocks) rows += b.rows();
  Matrix out(rows, cols);
  Index r = 0;
  for (const auto& b : blocks) {
    out.middleRows(r, b.rows()) = b;
    r += b.rows();
  }
  return out;
}

Vector vconcat(std::span<const Vector> parts) {
  Index n = 0;
  for (const auto& p : parts) n += p.size();
  Vector out(n);
  Index r = 0;
  for (const auto& p : parts) {
    out.segment(r, p.size()) = p;
    r += p.size();
  }
  return out;
}

double relative_deviation(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::DimMismatch, "relative_deviation: shape mismatch");
  }
  if (a.size() == 0) return 0.0;
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace vgbn
