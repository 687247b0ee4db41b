#include "vgbn/oracle.hpp"

namespace vgbn::oracle {

JointGaussian assemble_joint(const NetworkSpec& net) {
  ValidationReport r = validate_dag(net);
  if (!r.ok()) throw Error(ErrorCode::InvalidNetwork, r.to_text());

  const auto order = topological_order(net);
  const Index total = net.total_dim();
  Vector mean = Vector::Zero(total);
  Matrix cov = Matrix::Zero(total, total);
  std::vector<JointGaussian::Block> blocks;
  std::map<std::string, Index> at;

  Index next = 0;
  for (const auto& id : order) {
    const NodeSpec& n = net.node(id);
    const Index o = next;
    const Index d = n.dim;
    if (n.is_root()) {
      mean.segment(o, d) = n.prior->mean();
      cov.block(o, o, d, d) = n.prior->cov();
    } else {
      const auto parents = net.parent_links(id);
      Vector m = n.offset;
      Matrix cross = Matrix::Zero(d, o);  // Cov(x, everything placed so far)
      for (const LinkSpec* l : parents) {
        const Index po = at.at(l->from);
        const Index pd = l->matrix.cols();
        m += l->matrix * mean.segment(po, pd);
        cross += l->matrix * cov.block(po, 0, pd, o);
      }
      Matrix self = *n.noise_cov;
      for (const LinkSpec* l : parents) {
        const Index po = at.at(l->from);
        self += cross.middleCols(po, l->matrix.cols()) * l->matrix.transpose();
      }
      mean.segment(o, d) = m;
      cov.block(o, 0, d, o) = cross;
      cov.block(0, o, o, d) = cross.transpose();
      cov.block(o, o, d, d) = symmetrize(self);
    }
    blocks.push_back({id, o, d});
    at[id] = o;
    next += d;
  }
  return JointGaussian(Gaussian(std::move(mean), symmetrize(cov)), std::move(blocks));
}

JointGaussian posterior_joint(const NetworkSpec& net, const std::vector<std::string>& evidence_order) {
  if (evidence_order.size() != net.evidence.size()) {
    throw Error(ErrorCode::InvalidArgument, "evidence order must list every evidence node once");
  }
  JointGaussian joint = assemble_joint(net);
  for (const auto& id : evidence_order) {
    auto it = net.evidence.find(id);
    if (it == net.evidence.end()) throw Error(ErrorCode::NoEvidence, "'" + id + "' carries no evidence");
    joint = condition(joint, id, it->second);
  }
  return joint;
}

JointGaussian posterior_joint(const NetworkSpec& net) {
  std::vector<std::string> order;
  for (const auto& [id, v] : net.evidence) order.push_back(id);
  return posterior_joint(net, order);
}

Gaussian exact_posterior(const NetworkSpec& net, const std::string& query,
                         const std::vector<std::string>& evidence_order) {
  net.node(query);
  if (auto it = net.evidence.find(query); it != net.evidence.end()) return Gaussian::delta(it->second);
  return posterior_joint(net, evidence_order).marginal(query);
}

Gaussian exact_posterior(const NetworkSpec& net, const std::string& query) {
  net.node(query);
  if (auto it = net.evidence.find(query); it != net.evidence.end()) return Gaussian::delta(it->second);
  return posterior_joint(net).marginal(query);
}

std::map<std::string, Gaussian> exact_posteriors(const NetworkSpec& net) {
  std::map<std::string, Gaussian> out;
  const bool all_observed = net.evidence.size() == net.nodes.size();
  if (!all_observed) {
    JointGaussian joint = posterior_joint(net);
    for (const auto& b : joint.blocks()) out.emplace(b.id, joint.marginal(b.id));
  }
  for (const auto& [id, v] : net.evidence) out.emplace(id, Gaussian::delta(v));
  return out;
}

}  // namespace vgbn::oracle
