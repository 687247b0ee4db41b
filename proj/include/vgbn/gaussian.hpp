#pragma once

#include <span>
#include <string>
#include <vector>

#include "vgbn/linalg.hpp"

namespace vgbn {

/// Moment-form multivariate normal N(x; cov, mean).
///
/// The covariance must be symmetric PSD; zero covariance is legal and encodes
/// a point mass (an instantiated or deterministic quantity). The stored
/// covariance is explicitly symmetrized.
class Gaussian {
public:
  Gaussian(Vector mean, Matrix cov);

  /// Point mass at `value` (zero covariance).
  static Gaussian delta(const Vector& value);

  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }
  Index dim() const { return mean_.size(); }

  friend bool operator==(const Gaussian& a, const Gaussian& b) {
    return a.mean_ == b.mean_ && a.cov_ == b.cov_;
  }

private:
  Vector mean_;
  Matrix cov_;
};

/// Information-form Gaussian potential exp(-1/2 x'Λx + η'x), unnormalized.
/// Λ may be singular or zero; Λ = 0 and η = 0 is the unit potential.
class InfoForm {
public:
  InfoForm(Matrix prec, Vector info);

  static InfoForm unit(Index dim);

  const Matrix& prec() const { return prec_; }
  const Vector& info() const { return info_; }
  Index dim() const { return info_.size(); }
  bool is_unit() const { return prec_.isZero(0.0) && info_.isZero(0.0); }

private:
  Matrix prec_;
  Vector info_;
};

/// A Gaussian over a concatenation of named blocks.
class JointGaussian {
public:
  struct Block {
    std::string id;
    Index offset = 0;
    Index dim = 0;
  };

  JointGaussian(Gaussian dist, std::vector<Block> blocks);

  const Gaussian& dist() const { return dist_; }
  const std::vector<Block>& blocks() const { return blocks_; }

  bool contains(const std::string& id) const;
  const Block& block(const std::string& id) const;
  Gaussian marginal(const std::string& id) const;
  /// Cross-covariance Cov(a, b).
  Matrix cross_cov(const std::string& a, const std::string& b) const;

private:
  Gaussian dist_;
  std::vector<Block> blocks_;
};

/// |2πP|^(-1/2) exp(-½(x-x̄)'P⁻¹(x-x̄)). Throws SingularCovariance.
double pdf(const Gaussian& g, const Vector& x);

struct ProductResult {
  Gaussian gaussian;
  /// N(x̄₁; P₁+P₂, x̄₂), the integral of the pointwise product.
  double constant;
};

/// Pointwise product of two densities, precision form. When one factor has
/// a singular covariance the covariance form is used instead.
ProductResult product(const Gaussian& g1, const Gaussian& g2);

/// Covariance form of the product: P₂ - P₂(P₁+P₂)⁻¹P₂. Needs P₁+P₂ invertible only.
Gaussian product_covariance_form(const Gaussian& g1, const Gaussian& g2);

/// The density of y = Ax + b evaluated as a function of x, returned as an
/// unnormalized potential (AᵀP_y⁻¹A, AᵀP_y⁻¹(ȳ-b)).
InfoForm pullback(const Matrix& a, const Gaussian& g_y, const Vector& offset);
InfoForm pullback(const Matrix& a, const Gaussian& g_y);

/// Product of potentials: precisions and information vectors add.
/// An empty list yields the unit potential of the given dimension.
InfoForm info_product(std::span<const InfoForm> terms, Index dim);

struct LinearTerm {
  Matrix coeff;
  Gaussian input;
};

/// Distribution of x = Σ Bᵢuᵢ + offset + v with independent uᵢ and v ~ N(0, Q):
/// N(x; Q + Σ BᵢPᵢBᵢᵀ, Σ Bᵢūᵢ + offset).
Gaussian marginalize_linear(std::span<const LinearTerm> terms, const Matrix& noise_cov);
Gaussian marginalize_linear(std::span<const LinearTerm> terms, const Matrix& noise_cov,
                            const Vector& offset);

/// Condition a joint on one block taking `value`; the block is dropped from the result.
JointGaussian condition(const JointGaussian& joint, const std::string& observed,
                        const Vector& value);

/// Posterior of x after observing z = Hx + w, w ~ N(0, R), in gain form with the
/// Joseph covariance update. Works with singular prior covariance; throws
/// SingularInnovationCovariance when HPHᵀ + R is singular.
Gaussian observe_linear(const Gaussian& prior, const Matrix& h, const Matrix& r,
                        const Vector& z);

InfoForm moment_to_info(const Gaussian& g);
Gaussian info_to_moment(const InfoForm& f);

}  // namespace vgbn
