#pragma once

#include <algorithm>

#include "vgbn/oracle.hpp"
#include "vgbn/propagation.hpp"
#include "vgbn/transform.hpp"

namespace vgbn::testing {

/// Composite Simpson rule over [lo, hi] with an even number of intervals.
template <class F>
double simpson(F f, double lo, double hi, int intervals) {
  const double h = (hi - lo) / intervals;
  double acc = f(lo) + f(hi);
  for (int i = 1; i < intervals; ++i) acc += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

inline double deviation(const Gaussian& a, const Gaussian& b) {
  return std::max(relative_deviation(a.mean(), b.mean()), relative_deviation(a.cov(), b.cov()));
}

inline double deviation(const InfoForm& a, const InfoForm& b) {
  return std::max(relative_deviation(a.prec(), b.prec()), relative_deviation(a.info(), b.info()));
}

/// Largest deviation over the ids present in both tables.
inline double deviation(const propagation::BeliefTable& a, const propagation::BeliefTable& b) {
  double worst = 0.0;
  for (const auto& [id, g] : a) {
    auto it = b.find(id);
    if (it != b.end()) worst = std::max(worst, deviation(g, it->second));
  }
  return worst;
}

/// Largest deviation of the non-evidence beliefs from exact conditioning.
inline double oracle_deviation(const NetworkSpec& net, const propagation::BeliefTable& beliefs) {
  const auto exact = oracle::exact_posteriors(net);
  double worst = 0.0;
  for (const auto& [id, g] : beliefs)
    if (!net.has_evidence(id)) worst = std::max(worst, deviation(g, exact.at(id)));
  return worst;
}

/// Deviation between the posterior joints over the latent nodes that survive a
/// transform step. A cluster step's composite block is matched to its members.
inline double step_deviation(const NetworkSpec& before, const NetworkSpec& after,
                             const transform::TransformStep& step) {
  std::vector<std::string> latent;
  for (const auto& n : after.nodes)
    if (!after.has_evidence(n.id)) latent.push_back(n.id);
  if (latent.empty()) return 0.0;

  const JointGaussian pa = oracle::posterior_joint(after);
  const JointGaussian pb = oracle::posterior_joint(before);
  std::vector<Index> rows_a, rows_b;
  auto append = [](std::vector<Index>& rows, const JointGaussian::Block& b) {
    for (Index i = 0; i < b.dim; ++i) rows.push_back(b.offset + i);
  };
  for (const auto& id : latent) {
    append(rows_a, pa.block(id));
    if (step.kind == transform::StepKind::Cluster && id == step.target) {
      for (const auto& m : step.members) append(rows_b, pb.block(m));
    } else {
      append(rows_b, pb.block(id));
    }
  }
  const Vector mean_a = pa.dist().mean()(rows_a), mean_b = pb.dist().mean()(rows_b);
  const Matrix cov_a = pa.dist().cov()(rows_a, rows_a), cov_b = pb.dist().cov()(rows_b, rows_b);
  return std::max(relative_deviation(mean_a, mean_b), relative_deviation(cov_a, cov_b));
}

}  // namespace vgbn::testing
