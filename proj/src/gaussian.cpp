#include "vgbn/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace vgbn {

namespace {

void check_square_psd(const Matrix& m, Index dim, const char* what) {
  if (m.rows() != dim || m.cols() != dim) {
    throw Error(ErrorCode::DimMismatch, std::string(what) + " must be " + std::to_string(dim) +
                                            "x" + std::to_string(dim));
  }
  if (!is_finite(m)) throw Error(ErrorCode::InvalidArgument, std::string(what) + " is not finite");
  if (!is_symmetric(m)) throw Error(ErrorCode::InvalidArgument, std::string(what) + " is not symmetric");
  if (!is_psd(m)) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " is not positive semi-definite");
  }
}

}  // namespace

Gaussian::Gaussian(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (mean_.size() < 1) throw Error(ErrorCode::InvalidArgument, "Gaussian of dimension 0");
  if (!is_finite(mean_)) throw Error(ErrorCode::InvalidArgument, "mean is not finite");
  check_square_psd(cov_, mean_.size(), "covariance");
  cov_ = symmetrize(cov_);
}

Gaussian Gaussian::delta(const Vector& value) {
  return Gaussian(value, Matrix::Zero(value.size(), value.size()));
}

InfoForm::InfoForm(Matrix prec, Vector info) : prec_(std::move(prec)), info_(std::move(info)) {
  if (info_.size() < 1) throw Error(ErrorCode::InvalidArgument, "potential of dimension 0");
  if (!is_finite(info_)) throw Error(ErrorCode::InvalidArgument, "information vector is not finite");
  check_square_psd(prec_, info_.size(), "precision");
  prec_ = symmetrize(prec_);
}

InfoForm InfoForm::unit(Index dim) { return InfoForm(Matrix::Zero(dim, dim), Vector::Zero(dim)); }

JointGaussian::JointGaussian(Gaussian dist, std::vector<Block> blocks)
    : dist_(std::move(dist)), blocks_(std::move(blocks)) {
  Index next = 0;
  for (const auto& b : blocks_) {
    if (b.dim < 1 || b.offset != next) {
      throw Error(ErrorCode::InvalidArgument, "joint blocks must partition the state: " + b.id);
    }
    next += b.dim;
  }
  if (next != dist_.dim()) {
    throw Error(ErrorCode::DimMismatch, "joint blocks do not cover the state vector");
  }
}

bool JointGaussian::contains(const std::string& id) const {
  return std::any_of(blocks_.begin(), blocks_.end(), [&](const Block& b) { return b.id == id; });
}

const JointGaussian::Block& JointGaussian::block(const std::string& id) const {
  for (const auto& b : blocks_) {
    if (b.id == id) return b;
  }
  throw Error(ErrorCode::UnknownNode, id);
}

Gaussian JointGaussian::marginal(const std::string& id) const {
  const Block& b = block(id);
  return Gaussian(dist_.mean().segment(b.offset, b.dim),
                  dist_.cov().block(b.offset, b.offset, b.dim, b.dim));
}

Matrix JointGaussian::cross_cov(const std::string& a, const std::string& b) const {
  const Block& ba = block(a);
  const Block& bb = block(b);
  return dist_.cov().block(ba.offset, bb.offset, ba.dim, bb.dim);
}

double pdf(const Gaussian& g, const Vector& x) {
  if (x.size() != g.dim()) throw Error(ErrorCode::DimMismatch, "pdf argument dimension");
  const auto log_det = try_spd_log_det(g.cov());
  if (!log_det) throw Error(ErrorCode::SingularCovariance, "pdf of a singular Gaussian");
  const Vector d = x - g.mean();
  const double quad = d.dot(Eigen::LLT<Matrix>(g.cov()).solve(d));
  const double log_norm = static_cast<double>(g.dim()) * std::log(2.0 * std::numbers::pi) + *log_det;
  return std::exp(-0.5 * (log_norm + quad));
}

Gaussian product_covariance_form(const Gaussian& g1, const Gaussian& g2) {
  if (g1.dim() != g2.dim()) throw Error(ErrorCode::DimMismatch, "product of different dimensions");
  const Matrix s_inv = spd_inverse(g1.cov() + g2.cov(), ErrorCode::SingularCovariance, "P1 + P2");
  const Matrix& p2 = g2.cov();
  const Matrix gain = p2 * s_inv;
  return Gaussian(g2.mean() + gain * (g1.mean() - g2.mean()), symmetrize(p2 - gain * p2));
}

ProductResult product(const Gaussian& g1, const Gaussian& g2) {
  if (g1.dim() != g2.dim()) throw Error(ErrorCode::DimMismatch, "product of different dimensions");
  const Gaussian sum(g2.mean(), g1.cov() + g2.cov());
  if (!try_spd_log_det(sum.cov())) {
    throw Error(ErrorCode::SingularCovariance, "both factors singular along a shared direction");
  }
  const double constant = pdf(sum, g1.mean());

  auto i1 = try_spd_inverse(g1.cov());
  auto i2 = try_spd_inverse(g2.cov());
  if (i1 && i2) {
    const Matrix cov = spd_inverse(*i1 + *i2, ErrorCode::SingularCovariance, "P1^-1 + P2^-1");
    return {Gaussian(cov * (*i1 * g1.mean() + *i2 * g2.mean()), cov), constant};
  }
  return {product_covariance_form(g1, g2), constant};
}

InfoForm pullback(const Matrix& a, const Gaussian& g_y, const Vector& offset) {
  if (a.rows() != g_y.dim() || offset.size() != g_y.dim()) {
    throw Error(ErrorCode::DimMismatch, "pullback: A must have dim(y) rows");
  }
  if (a.cols() < 1) throw Error(ErrorCode::InvalidArgument, "pullback onto dimension 0");
  const Matrix r_inv = spd_inverse(g_y.cov(), ErrorCode::SingularCovariance, "pullback covariance");
  const Matrix at_rinv = a.transpose() * r_inv;
  return InfoForm(symmetrize(at_rinv * a), at_rinv * (g_y.mean() - offset));
}

InfoForm pullback(const Matrix& a, const Gaussian& g_y) {
  return pullback(a, g_y, Vector::Zero(g_y.dim()));
}

InfoForm info_product(std::span<const InfoForm> terms, Index dim) {
  Matrix prec = Matrix::Zero(dim, dim);
  Vector info = Vector::Zero(dim);
  for (const auto& t : terms) {
    if (t.dim() != dim) throw Error(ErrorCode::DimMismatch, "info_product term dimension");
    prec += t.prec();
    info += t.info();
  }
  return InfoForm(std::move(prec), std::move(info));
}

Gaussian marginalize_linear(std::span<const LinearTerm> terms, const Matrix& noise_cov,
                            const Vector& offset) {
  const Index n = noise_cov.rows();
  if (noise_cov.cols() != n || offset.size() != n) {
    throw Error(ErrorCode::DimMismatch, "marginalize_linear: noise/offset shape");
  }
  Vector mean = offset;
  Matrix cov = noise_cov;
  for (const auto& t : terms) {
    if (t.coeff.rows() != n || t.coeff.cols() != t.input.dim()) {
      throw Error(ErrorCode::DimMismatch, "marginalize_linear: coefficient shape");
    }
    mean += t.coeff * t.input.mean();
    cov += t.coeff * t.input.cov() * t.coeff.transpose();
  }
  return Gaussian(std::move(mean), symmetrize(cov));
}

Gaussian marginalize_linear(std::span<const LinearTerm> terms, const Matrix& noise_cov) {
  return marginalize_linear(terms, noise_cov, Vector::Zero(noise_cov.rows()));
}

JointGaussian condition(const JointGaussian& joint, const std::string& observed,
                        const Vector& value) {
  const auto& ob = joint.block(observed);
  if (value.size() != ob.dim) throw Error(ErrorCode::DimMismatch, "observed value for " + observed);
  if (joint.blocks().size() == 1) {
    throw Error(ErrorCode::InvalidArgument, "conditioning would leave an empty joint");
  }

  // Permutation of the remaining coordinates, in block order.
  std::vector<JointGaussian::Block> kept;
  std::vector<Index> idx;
  Index next = 0;
  for (const auto& b : joint.blocks()) {
    if (b.id == observed) continue;
    kept.push_back({b.id, next, b.dim});
    for (Index i = 0; i < b.dim; ++i) idx.push_back(b.offset + i);
    next += b.dim;
  }

  const Matrix& cov = joint.dist().cov();
  const Vector& mean = joint.dist().mean();
  const Index n = next;
  Matrix pxx(n, n), pxy(n, ob.dim);
  Vector mx(n);
  for (Index i = 0; i < n; ++i) {
    mx(i) = mean(idx[i]);
    for (Index j = 0; j < n; ++j) pxx(i, j) = cov(idx[i], idx[j]);
    pxy.row(i) = cov.block(idx[i], ob.offset, 1, ob.dim);
  }
  const Matrix pyy = cov.block(ob.offset, ob.offset, ob.dim, ob.dim);
  const Matrix pyy_inv = spd_inverse(pyy, ErrorCode::SingularCovariance, "covariance of " + observed);
  const Matrix gain = pxy * pyy_inv;
  Vector post_mean = mx + gain * (value - mean.segment(ob.offset, ob.dim));
  Matrix post_cov = symmetrize(pxx - gain * pxy.transpose());
  return JointGaussian(Gaussian(std::move(post_mean), std::move(post_cov)), std::move(kept));
}

Gaussian observe_linear(const Gaussian& prior, const Matrix& h, const Matrix& r, const Vector& z) {
  const Index n = prior.dim();
  if (h.cols() != n || h.rows() != r.rows() || r.cols() != r.rows() || z.size() != h.rows()) {
    throw Error(ErrorCode::DimMismatch, "observe_linear shapes");
  }
  const Matrix& p = prior.cov();
  const Matrix pht = p * h.transpose();
  const Matrix s_inv = spd_inverse(symmetrize(h * pht + r), ErrorCode::SingularInnovationCovariance,
                                   "innovation covariance HPH' + R");
  const Matrix k = pht * s_inv;
  const Matrix ikh = Matrix::Identity(n, n) - k * h;
  Matrix cov = symmetrize(ikh * p * ikh.transpose() + k * r * k.transpose());
  return Gaussian(prior.mean() + k * (z - h * prior.mean()), std::move(cov));
}

InfoForm moment_to_info(const Gaussian& g) {
  const Matrix prec = spd_inverse(g.cov(), ErrorCode::SingularCovariance, "covariance");
  return InfoForm(prec, prec * g.mean());
}

Gaussian info_to_moment(const InfoForm& f) {
  const Matrix cov = spd_inverse(f.prec(), ErrorCode::SingularPrecision, "precision");
  return Gaussian(cov * f.info(), cov);
}

}  // namespace vgbn
