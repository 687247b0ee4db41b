#include "vgbn/network.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

namespace vgbn {

namespace {

bool same(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Union-find over node indices, used for the undirected cycle check.
struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

ValidationReport validate_impl(const NetworkSpec& net, bool require_tree) {
  ValidationReport report;
  auto add = [&](ViolationKind k, std::string msg) { report.violations.push_back({k, std::move(msg)}); };

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    const NodeSpec& n = net.nodes[i];
    if (!index.emplace(n.id, i).second) add(ViolationKind::DuplicateNode, "duplicate node id '" + n.id + "'");
    if (n.dim < 1) {
      add(ViolationKind::BadDimension, "node '" + n.id + "' has dimension " + std::to_string(n.dim));
      continue;
    }
    if (n.prior && n.noise_cov) {
      add(ViolationKind::RoleMismatch, "node '" + n.id + "' carries both a prior and a noise covariance");
    }
    if (!n.prior && !n.noise_cov) {
      add(ViolationKind::RoleMismatch, "node '" + n.id + "' carries neither a prior nor a noise covariance");
    }
    if (n.prior && n.prior->dim() != n.dim) {
      add(ViolationKind::ShapeMismatch, "prior of '" + n.id + "' has dimension " +
                                            std::to_string(n.prior->dim()));
    }
    if (n.noise_cov) {
      const Matrix& q = *n.noise_cov;
      if (q.rows() != n.dim || q.cols() != n.dim) {
        add(ViolationKind::ShapeMismatch, "noise_cov of '" + n.id + "' is " + shape(q));
      } else if (!is_finite(q)) {
        add(ViolationKind::NonFinite, "noise_cov of '" + n.id + "' is not finite");
      } else if (!is_psd(q)) {
        add(ViolationKind::NotPsd, "noise_cov of '" + n.id + "' is not symmetric positive semi-definite");
      }
      if (n.offset.size() != n.dim) {
        add(ViolationKind::ShapeMismatch, "offset of '" + n.id + "' has length " +
                                              std::to_string(n.offset.size()));
      } else if (!is_finite(n.offset)) {
        add(ViolationKind::NonFinite, "offset of '" + n.id + "' is not finite");
      }
    }
  }

  std::set<std::pair<std::string, std::string>> seen;
  std::map<std::string, int> parent_count;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (const LinkSpec& l : net.links) {
    const std::string label = "link " + l.from + " -> " + l.to;
    auto f = index.find(l.from);
    auto t = index.find(l.to);
    if (f == index.end() || t == index.end()) {
      add(ViolationKind::OrphanLink, label + " references an unknown node");
      continue;
    }
    if (l.from == l.to) {
      add(ViolationKind::SelfLoop, label + " is a self loop");
      continue;
    }
    if (!seen.insert({l.from, l.to}).second) {
      add(ViolationKind::DuplicateLink, label + " is declared more than once");
      continue;
    }
    const NodeSpec& from = net.nodes[f->second];
    const NodeSpec& to = net.nodes[t->second];
    if (l.matrix.rows() != to.dim || l.matrix.cols() != from.dim) {
      add(ViolationKind::ShapeMismatch, label + " matrix is " + shape(l.matrix) + ", expected " +
                                            std::to_string(to.dim) + "x" + std::to_string(from.dim));
    } else if (!is_finite(l.matrix)) {
      add(ViolationKind::NonFinite, label + " matrix is not finite");
    }
    ++parent_count[l.to];
    edges.emplace_back(f->second, t->second);
  }

  for (const NodeSpec& n : net.nodes) {
    const bool has_parents = parent_count[n.id] > 0;
    if (n.prior && has_parents) {
      add(ViolationKind::RoleMismatch, "root '" + n.id + "' has incoming links");
    }
    if (!n.prior && n.noise_cov && !has_parents) {
      add(ViolationKind::RoleMismatch, "non-root '" + n.id + "' has no parents");
    }
  }

  // Directed cycles (Kahn).
  {
    const std::size_t n = net.nodes.size();
    std::vector<std::vector<std::size_t>> out(n);
    std::vector<int> indeg(n, 0);
    for (auto [a, b] : edges) {
      out[a].push_back(b);
      ++indeg[b];
    }
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < n; ++i)
      if (indeg[i] == 0) stack.push_back(i);
    std::size_t visited = 0;
    while (!stack.empty()) {
      std::size_t v = stack.back();
      stack.pop_back();
      ++visited;
      for (std::size_t w : out[v])
        if (--indeg[w] == 0) stack.push_back(w);
    }
    if (visited != n) add(ViolationKind::Cycle, "graph contains a directed cycle");
  }

  if (require_tree) {
    DisjointSets sets(net.nodes.size());
    for (auto [a, b] : edges) {
      if (!sets.unite(a, b)) {
        add(ViolationKind::NotSinglyConnected,
            "not singly connected: more than one path between '" + net.nodes[a].id + "' and '" +
                net.nodes[b].id + "'");
        break;
      }
    }
  }

  for (const auto& [id, value] : net.evidence) {
    auto it = index.find(id);
    if (it == index.end()) {
      add(ViolationKind::UnknownEvidenceNode, "evidence on unknown node '" + id + "'");
    } else if (value.size() != net.nodes[it->second].dim) {
      add(ViolationKind::EvidenceDimMismatch, "evidence on '" + id + "' has length " +
                                                  std::to_string(value.size()));
    } else if (!is_finite(value)) {
      add(ViolationKind::NonFinite, "evidence on '" + id + "' is not finite");
    }
  }
  return report;
}

}  // namespace

NodeSpec NodeSpec::root(std::string id, Gaussian prior) {
  NodeSpec n;
  n.id = std::move(id);
  n.dim = prior.dim();
  n.prior = std::move(prior);
  return n;
}

NodeSpec NodeSpec::internal(std::string id, Matrix noise_cov) {
  Vector offset = Vector::Zero(noise_cov.rows());
  return internal(std::move(id), std::move(noise_cov), std::move(offset));
}

NodeSpec NodeSpec::internal(std::string id, Matrix noise_cov, Vector offset) {
  NodeSpec n;
  n.id = std::move(id);
  n.dim = noise_cov.rows();
  n.noise_cov = std::move(noise_cov);
  n.offset = std::move(offset);
  return n;
}

const NodeSpec* NetworkSpec::find(const std::string& id) const {
  for (const auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

const NodeSpec& NetworkSpec::node(const std::string& id) const {
  if (const NodeSpec* n = find(id)) return *n;
  throw Error(ErrorCode::UnknownNode, "no node '" + id + "'");
}

std::vector<const LinkSpec*> NetworkSpec::parent_links(const std::string& id) const {
  std::vector<const LinkSpec*> out;
  for (const auto& l : links)
    if (l.to == id) out.push_back(&l);
  std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->from < b->from; });
  return out;
}

std::vector<const LinkSpec*> NetworkSpec::child_links(const std::string& id) const {
  std::vector<const LinkSpec*> out;
  for (const auto& l : links)
    if (l.from == id) out.push_back(&l);
  std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->to < b->to; });
  return out;
}

const LinkSpec* NetworkSpec::link(const std::string& from, const std::string& to) const {
  for (const auto& l : links)
    if (l.from == from && l.to == to) return &l;
  return nullptr;
}

std::vector<std::string> NetworkSpec::ids() const {
  std::vector<std::string> out;
  for (const auto& n : nodes) out.push_back(n.id);
  return out;
}

Index NetworkSpec::total_dim() const {
  Index d = 0;
  for (const auto& n : nodes) d += n.dim;
  return d;
}

bool operator==(const NodeSpec& a, const NodeSpec& b) {
  if (a.id != b.id || a.dim != b.dim) return false;
  if (a.prior.has_value() != b.prior.has_value()) return false;
  if (a.prior && !(same(a.prior->mean(), b.prior->mean()) && same(a.prior->cov(), b.prior->cov())))
    return false;
  if (a.noise_cov.has_value() != b.noise_cov.has_value()) return false;
  if (a.noise_cov && !same(*a.noise_cov, *b.noise_cov)) return false;
  return same(a.offset, b.offset);
}

bool operator==(const LinkSpec& a, const LinkSpec& b) {
  return a.from == b.from && a.to == b.to && same(a.matrix, b.matrix);
}

bool operator==(const NetworkSpec& a, const NetworkSpec& b) {
  if (a.nodes != b.nodes || a.links != b.links) return false;
  if (a.evidence.size() != b.evidence.size()) return false;
  for (const auto& [id, v] : a.evidence) {
    auto it = b.evidence.find(id);
    if (it == b.evidence.end() || !same(v, it->second)) return false;
  }
  return true;
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::DuplicateNode: return "duplicate_node";
    case ViolationKind::BadDimension: return "bad_dimension";
    case ViolationKind::RoleMismatch: return "role_mismatch";
    case ViolationKind::ShapeMismatch: return "shape_mismatch";
    case ViolationKind::NotPsd: return "not_psd";
    case ViolationKind::NonFinite: return "non_finite";
    case ViolationKind::OrphanLink: return "orphan_link";
    case ViolationKind::DuplicateLink: return "duplicate_link";
    case ViolationKind::SelfLoop: return "self_loop";
    case ViolationKind::Cycle: return "cycle";
    case ViolationKind::NotSinglyConnected: return "not_singly_connected";
    case ViolationKind::UnknownEvidenceNode: return "unknown_evidence_node";
    case ViolationKind::EvidenceDimMismatch: return "evidence_dim_mismatch";
  }
  return "unknown";
}

bool ValidationReport::has(ViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [kind](const Violation& v) { return v.kind == kind; });
}

std::string ValidationReport::to_text() const {
  std::ostringstream os;
  if (violations.empty()) {
    os << "status: ok\n";
    return os.str();
  }
  os << "status: invalid\nviolations: " << violations.size() << "\n";
  for (const auto& v : violations) os << "  - [" << to_string(v.kind) << "] " << v.message << "\n";
  return os.str();
}

ValidationReport validate(const NetworkSpec& net) { return validate_impl(net, true); }

ValidationReport validate_dag(const NetworkSpec& net) { return validate_impl(net, false); }

void require_valid(const NetworkSpec& net) {
  ValidationReport r = validate(net);
  if (!r.ok()) throw Error(ErrorCode::InvalidNetwork, r.to_text());
}

std::vector<std::string> topological_order(const NetworkSpec& net) {
  std::map<std::string, int> indeg;
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& n : net.nodes) indeg[n.id];
  for (const auto& l : net.links) {
    ++indeg[l.to];
    out[l.from].push_back(l.to);
  }
  std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
  for (const auto& [id, d] : indeg)
    if (d == 0) ready.push(id);
  std::vector<std::string> order;
  while (!ready.empty()) {
    std::string v = ready.top();
    ready.pop();
    order.push_back(v);
    for (const auto& w : out[v])
      if (--indeg[w] == 0) ready.push(w);
  }
  if (order.size() != indeg.size()) throw Error(ErrorCode::InvalidNetwork, "graph contains a directed cycle");
  return order;
}

NetworkSpec cluster(const NetworkSpec& net, const std::vector<std::string>& ids,
                    std::optional<std::string> new_id) {
  if (ids.empty()) throw Error(ErrorCode::ClusterInvalid, "empty cluster");
  std::set<std::string> members;
  for (const auto& id : ids) {
    net.node(id);
    if (!members.insert(id).second) throw Error(ErrorCode::ClusterInvalid, "'" + id + "' listed twice");
  }

  std::string merged_id = new_id.value_or("");
  if (!new_id) {
    for (std::size_t i = 0; i < ids.size(); ++i) merged_id += (i ? "+" : "") + ids[i];
  }
  if (!members.count(merged_id) && net.find(merged_id)) {
    throw Error(ErrorCode::ClusterInvalid, "cluster id '" + merged_id + "' already in use");
  }

  const std::size_t with_evidence = std::count_if(
      ids.begin(), ids.end(), [&](const std::string& id) { return net.has_evidence(id); });
  if (with_evidence != 0 && with_evidence != ids.size()) {
    throw Error(ErrorCode::ClusterInvalid, "evidence covers only part of the cluster");
  }

  NetworkSpec out;
  if (ids.size() == 1) {
    out = net;
    const std::string& old = ids.front();
    for (auto& n : out.nodes)
      if (n.id == old) n.id = merged_id;
    for (auto& l : out.links) {
      if (l.from == old) l.from = merged_id;
      if (l.to == old) l.to = merged_id;
    }
    if (auto it = out.evidence.find(old); it != out.evidence.end()) {
      Vector v = it->second;
      out.evidence.erase(it);
      out.evidence[merged_id] = v;
    }
  } else {
    for (const auto& l : net.links) {
      if (members.count(l.from) && members.count(l.to)) {
        throw Error(ErrorCode::ClusterInvalid, "members '" + l.from + "' and '" + l.to + "' are linked");
      }
    }

    std::map<std::string, Index> local;  // member -> row offset in the composite
    Index dim = 0;
    bool all_roots = true;
    for (const auto& id : ids) {
      local[id] = dim;
      dim += net.node(id).dim;
      all_roots = all_roots && net.node(id).is_root();
    }

    std::vector<Vector> means;
    std::vector<Matrix> covs;
    for (const auto& id : ids) {
      const NodeSpec& n = net.node(id);
      if (n.is_root()) {
        means.push_back(n.prior->mean());
        covs.push_back(n.prior->cov());
      } else {
        means.push_back(n.offset);
        covs.push_back(*n.noise_cov);
      }
    }
    NodeSpec merged = all_roots ? NodeSpec::root(merged_id, Gaussian(vconcat(means), block_diag(covs)))
                                : NodeSpec::internal(merged_id, block_diag(covs), vconcat(means));

    std::map<std::string, Matrix> from_parent;  // external parent -> dim x dim(parent)
    std::map<std::string, Matrix> to_child;     // external child -> dim(child) x dim
    for (const auto& l : net.links) {
      if (members.count(l.to)) {
        auto [it, fresh] = from_parent.try_emplace(l.from, Matrix::Zero(dim, l.matrix.cols()));
        it->second.middleRows(local[l.to], l.matrix.rows()) = l.matrix;
      } else if (members.count(l.from)) {
        auto [it, fresh] = to_child.try_emplace(l.to, Matrix::Zero(l.matrix.rows(), dim));
        it->second.middleCols(local[l.from], l.matrix.cols()) = l.matrix;
      }
    }

    bool placed = false;
    for (const auto& n : net.nodes) {
      if (!members.count(n.id)) {
        out.nodes.push_back(n);
      } else if (!placed) {
        out.nodes.push_back(merged);
        placed = true;
      }
    }
    for (const auto& l : net.links)
      if (!members.count(l.from) && !members.count(l.to)) out.links.push_back(l);
    for (auto& [p, m] : from_parent) out.links.push_back({p, merged_id, m});
    for (auto& [c, m] : to_child) out.links.push_back({merged_id, c, m});

    for (const auto& [id, v] : net.evidence)
      if (!members.count(id)) out.evidence[id] = v;
    if (with_evidence) {
      std::vector<Vector> parts;
      for (const auto& id : ids) parts.push_back(net.evidence.at(id));
      out.evidence[merged_id] = vconcat(parts);
    }
  }

  ValidationReport r = validate(out);
  if (!r.ok()) throw Error(ErrorCode::ClusterInvalid, "clustered network is invalid:\n" + r.to_text());
  return out;
}

NetworkSpec attach_evidence(const NetworkSpec& net, const std::string& id, const Vector& value) {
  const NodeSpec& n = net.node(id);
  if (value.size() != n.dim) {
    throw Error(ErrorCode::DimMismatch, "evidence for '" + id + "' has length " +
                                            std::to_string(value.size()) + ", node dimension is " +
                                            std::to_string(n.dim));
  }
  NetworkSpec out = net;
  out.evidence[id] = value;
  return out;
}

NetworkSpec clear_evidence(const NetworkSpec& net, const std::string& id) {
  net.node(id);
  NetworkSpec out = net;
  out.evidence.erase(id);
  return out;
}

}  // namespace vgbn
