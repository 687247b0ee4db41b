#include "vgbn/transform.hpp"

#include <algorithm>

namespace vgbn::transform {

namespace {

NodeSpec& mutable_node(NetworkSpec& net, const std::string& id) {
  for (auto& n : net.nodes)
    if (n.id == id) return n;
  throw Error(ErrorCode::UnknownNode, "no node '" + id + "'");
}

// A non-root left without parents becomes a root with prior N(offset, Q).
void promote_if_parentless(NetworkSpec& net, const std::string& id) {
  NodeSpec& n = mutable_node(net, id);
  if (n.is_root() || !net.parent_links(id).empty()) return;
  n = NodeSpec::root(n.id, Gaussian(n.offset, *n.noise_cov));
}

void erase_link(NetworkSpec& net, const std::string& from, const std::string& to) {
  std::erase_if(net.links, [&](const LinkSpec& l) { return l.from == from && l.to == to; });
}

void erase_node(NetworkSpec& net, const std::string& id) {
  std::erase_if(net.nodes, [&](const NodeSpec& n) { return n.id == id; });
  std::erase_if(net.links, [&](const LinkSpec& l) { return l.from == id || l.to == id; });
  net.evidence.erase(id);
}

// Replace every outgoing link of an observed node by a mean shift in the child.
void fold_into_children(NetworkSpec& net, const std::string& id, const Vector& value) {
  std::vector<std::pair<std::string, Matrix>> children;
  for (const LinkSpec* l : net.child_links(id)) children.emplace_back(l->to, l->matrix);
  for (const auto& [child, b] : children) {
    NodeSpec& c = mutable_node(net, child);
    c.offset += b * value;
    erase_link(net, id, child);
    promote_if_parentless(net, child);
  }
}

}  // namespace

std::string_view to_string(StepKind kind) {
  switch (kind) {
    case StepKind::RemoveParent: return "remove_parent";
    case StepKind::AbsorbEvidence: return "absorb_evidence";
    case StepKind::RemoveBarren: return "remove_barren";
    case StepKind::FoldEvidence: return "fold_evidence";
    case StepKind::Splice: return "splice";
    case StepKind::Cluster: return "cluster";
  }
  return "unknown";
}

NetworkSpec remove_parent(const NetworkSpec& net, const std::string& id) {
  const NodeSpec& u = net.node(id);
  if (net.has_evidence(id)) throw Error(ErrorCode::HasEvidence, "'" + id + "' carries evidence");
  if (!u.is_root()) throw Error(ErrorCode::NotRemovable, "'" + id + "' still has parents");
  const auto children = net.child_links(id);
  if (children.size() > 1) {
    throw Error(ErrorCode::NotRemovable,
                "'" + id + "' has several children; removing it would drop their correlation");
  }

  NetworkSpec out = net;
  for (const LinkSpec* l : children) {
    NodeSpec& x = mutable_node(out, l->to);
    const Matrix& f = l->matrix;
    *x.noise_cov = symmetrize(*x.noise_cov + f * u.prior->cov() * f.transpose());
    x.offset += f * u.prior->mean();
  }
  erase_node(out, id);
  for (const LinkSpec* l : children) promote_if_parentless(out, l->to);
  return out;
}

NetworkSpec fold_evidence(const NetworkSpec& net, const std::string& id) {
  net.node(id);
  auto it = net.evidence.find(id);
  if (it == net.evidence.end()) throw Error(ErrorCode::NoEvidence, "'" + id + "' carries no evidence");
  NetworkSpec out = net;
  fold_into_children(out, id, it->second);
  return out;
}

NetworkSpec absorb_evidence(const NetworkSpec& net, const std::string& id) {
  const NodeSpec& y = net.node(id);
  auto ev = net.evidence.find(id);
  if (ev == net.evidence.end()) throw Error(ErrorCode::NoEvidence, "'" + id + "' carries no evidence");
  const Vector value = ev->second;
  const auto parents = net.parent_links(id);
  if (parents.size() > 1) {
    throw Error(ErrorCode::NotRemovable, "'" + id + "' has several parents; cluster them first");
  }

  NetworkSpec out = net;
  fold_into_children(out, id, value);
  if (!parents.empty()) {
    const LinkSpec& l = *parents.front();
    NodeSpec& x = mutable_node(out, l.from);
    if (!x.is_root()) {
      throw Error(ErrorCode::NotRemovable,
                  "parent '" + x.id + "' of '" + id + "' has no marginal in moment form yet");
    }
    x.prior = observe_linear(*x.prior, l.matrix, *y.noise_cov, value - y.offset);
  }
  erase_node(out, id);
  return out;
}

NetworkSpec remove_barren(const NetworkSpec& net, const std::string& id) {
  net.node(id);
  if (net.has_evidence(id)) throw Error(ErrorCode::HasEvidence, "'" + id + "' carries evidence");
  if (!net.child_links(id).empty()) throw Error(ErrorCode::NotRemovable, "'" + id + "' has children");
  NetworkSpec out = net;
  erase_node(out, id);
  return out;
}

NetworkSpec splice(const NetworkSpec& net, const std::string& id) {
  const NodeSpec& x = net.node(id);
  if (net.has_evidence(id)) throw Error(ErrorCode::HasEvidence, "'" + id + "' carries evidence");
  if (x.is_root()) throw Error(ErrorCode::NotRemovable, "'" + id + "' is a root; use remove_parent");
  const auto children = net.child_links(id);
  if (children.size() != 1) {
    throw Error(ErrorCode::NotRemovable, "'" + id + "' must have exactly one child to be spliced");
  }
  const LinkSpec& down = *children.front();
  const Matrix& f = down.matrix;

  NetworkSpec out = net;
  NodeSpec& c = mutable_node(out, down.to);
  *c.noise_cov = symmetrize(*c.noise_cov + f * *x.noise_cov * f.transpose());
  c.offset += f * x.offset;
  for (const LinkSpec* up : net.parent_links(id)) {
    const Matrix composed = f * up->matrix;
    bool merged = false;
    for (auto& l : out.links) {
      if (l.from == up->from && l.to == down.to) {
        l.matrix += composed;
        merged = true;
      }
    }
    if (!merged) out.links.push_back({up->from, down.to, composed});
  }
  erase_node(out, id);
  return out;
}

NetworkSpec apply(const NetworkSpec& net, const TransformStep& step) {
  switch (step.kind) {
    case StepKind::RemoveParent: return remove_parent(net, step.target);
    case StepKind::AbsorbEvidence: return absorb_evidence(net, step.target);
    case StepKind::RemoveBarren: return remove_barren(net, step.target);
    case StepKind::FoldEvidence: return fold_evidence(net, step.target);
    case StepKind::Splice: return splice(net, step.target);
    case StepKind::Cluster: return cluster(net, step.members, step.target);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown transform step");
}

namespace {

std::string joined(const std::vector<std::string>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? "+" : "") + ids[i];
  return s;
}

// Picks the next elimination step, or nullopt when nothing applies.
std::optional<TransformStep> next_step(const NetworkSpec& net, const std::string& query) {
  auto ids = net.ids();
  std::sort(ids.begin(), ids.end());
  auto evidence = [&](const std::string& id) { return net.has_evidence(id); };
  auto n_children = [&](const std::string& id) { return net.child_links(id).size(); };
  auto n_parents = [&](const std::string& id) { return net.parent_links(id).size(); };

  for (const auto& id : ids)
    if (evidence(id) && n_children(id) > 0) return TransformStep{StepKind::FoldEvidence, id, {}};
  for (const auto& id : ids)
    if (id != query && !evidence(id) && n_children(id) == 0) return TransformStep{StepKind::RemoveBarren, id, {}};
  for (const auto& id : ids)
    if (evidence(id) && n_parents(id) == 0) return TransformStep{StepKind::AbsorbEvidence, id, {}};
  for (const auto& id : ids) {
    if (evidence(id) && n_parents(id) > 1) {
      std::vector<std::string> members;
      for (const LinkSpec* l : net.parent_links(id)) members.push_back(l->from);
      return TransformStep{StepKind::Cluster, joined(members), members};
    }
  }
  for (const auto& id : ids) {
    if (evidence(id) && n_parents(id) == 1 && net.node(net.parent_links(id).front()->from).is_root()) {
      return TransformStep{StepKind::AbsorbEvidence, id, {}};
    }
  }
  for (const auto& id : ids) {
    if (id != query && !evidence(id) && net.node(id).is_root() && n_children(id) == 1) {
      return TransformStep{StepKind::RemoveParent, id, {}};
    }
  }
  for (const auto& id : ids) {
    if (id == query || evidence(id) || net.node(id).is_root() || n_children(id) < 2) continue;
    const auto kids = net.child_links(id);
    if (std::all_of(kids.begin(), kids.end(), [&](const LinkSpec* l) { return evidence(l->to); })) {
      std::vector<std::string> members;
      for (const LinkSpec* l : kids) members.push_back(l->to);
      return TransformStep{StepKind::Cluster, joined(members), members};
    }
  }
  for (const auto& id : ids) {
    if (id != query && !evidence(id) && !net.node(id).is_root() && n_children(id) == 1) {
      return TransformStep{StepKind::Splice, id, {}};
    }
  }
  return std::nullopt;
}

}  // namespace

Reduction reduce_traced(const NetworkSpec& net, const std::string& query) {
  require_valid(net);
  net.node(query);
  if (auto it = net.evidence.find(query); it != net.evidence.end()) {
    return {Gaussian::delta(it->second), {}};
  }

  // The query may end up inside a composite node; track where its block lives.
  std::string holder = query;
  Index offset = 0;
  const Index dim = net.node(query).dim;

  NetworkSpec current = net;
  std::vector<TransformStep> trace;
  while (current.nodes.size() > 1) {
    auto step = next_step(current, holder);
    if (!step) throw Error(ErrorCode::InvalidNetwork, "no applicable elimination step");
    if (step->kind == StepKind::Cluster) {
      Index at = 0;
      for (const auto& m : step->members) {
        if (m == holder) {
          holder = step->target;
          offset += at;
          break;
        }
        at += current.node(m).dim;
      }
    }
    current = apply(current, *step);
    trace.push_back(std::move(*step));
  }

  const NodeSpec& last = current.node(holder);
  const Gaussian& g = *last.prior;
  return {Gaussian(g.mean().segment(offset, dim), g.cov().block(offset, offset, dim, dim)), std::move(trace)};
}

Gaussian reduce(const NetworkSpec& net, const std::string& query) { return reduce_traced(net, query).marginal; }

}  // namespace vgbn::transform
