#include "vgbn/propagation.hpp"

#include <algorithm>
#include <deque>

namespace vgbn::propagation {

LikelihoodFactor LikelihoodFactor::none(Index dim) {
  return {Matrix::Zero(0, dim), Matrix::Zero(0, 0), Vector::Zero(0)};
}

InfoForm LikelihoodFactor::potential() const {
  if (rows() == 0) return InfoForm::unit(dim());
  const Matrix r_inv = spd_inverse(r, ErrorCode::SingularCombination, "message covariance");
  const Matrix ht_rinv = h.transpose() * r_inv;
  return InfoForm(symmetrize(ht_rinv * h), ht_rinv * y);
}

LikelihoodFactor stack_factors(std::span<const LikelihoodFactor> factors, Index dim) {
  std::vector<Matrix> hs, rs;
  std::vector<Vector> ys;
  for (const auto& f : factors) {
    if (f.dim() != dim) throw Error(ErrorCode::DimMismatch, "stacked factor dimension");
    if (f.rows() == 0) continue;
    hs.push_back(f.h);
    rs.push_back(f.r);
    ys.push_back(f.y);
  }
  if (hs.empty()) return LikelihoodFactor::none(dim);
  return {vstack(hs, dim), block_diag(rs), vconcat(ys)};
}

LambdaMessage LambdaMessage::from_factor(std::string from, std::string to, LikelihoodFactor factor) {
  InfoForm payload = factor.potential();
  return {std::move(from), std::move(to), std::move(payload), std::move(factor)};
}

LambdaMessage LambdaMessage::unit(std::string from, std::string to, Index dim) {
  return {std::move(from), std::move(to), InfoForm::unit(dim), LikelihoodFactor::none(dim)};
}

Gaussian compute_pi(const NodeSpec& node, std::span<const LinearTerm> incoming) {
  if (node.is_root()) {
    if (!incoming.empty()) throw Error(ErrorCode::InvalidArgument, "root '" + node.id + "' has no parents");
    return *node.prior;
  }
  if (incoming.empty()) throw Error(ErrorCode::IncompleteMailbox, "no π messages for '" + node.id + "'");
  return marginalize_linear(incoming, *node.noise_cov, node.offset);
}

LambdaState compute_lambda(Index dim, std::span<const LambdaMessage> incoming,
                           const std::optional<Vector>& evidence) {
  std::vector<InfoForm> potentials;
  std::vector<LikelihoodFactor> factors;
  for (const auto& m : incoming) {
    potentials.push_back(m.payload);
    factors.push_back(m.factor);
  }
  LambdaState state{info_product(potentials, dim), stack_factors(factors, dim), std::nullopt};
  if (evidence) {
    if (evidence->size() != dim) throw Error(ErrorCode::DimMismatch, "evidence dimension");
    state.instantiated = *evidence;
  }
  return state;
}

Gaussian belief_covariance_form(const Gaussian& pi, const InfoForm& lambda) {
  if (pi.dim() != lambda.dim()) throw Error(ErrorCode::DimMismatch, "belief: π and λ dimensions");
  const Matrix p_lambda = spd_inverse(lambda.prec(), ErrorCode::SingularCombination, "λ precision");
  const Vector x_lambda = p_lambda * lambda.info();
  const Matrix& p = pi.cov();
  const Matrix s_inv = spd_inverse(p + p_lambda, ErrorCode::SingularCombination, "P_π + P_λ");
  const Matrix gain = p * s_inv;
  return Gaussian(pi.mean() + gain * (x_lambda - pi.mean()), symmetrize(p - gain * p));
}

Gaussian belief(const Gaussian& pi, const InfoForm& lambda) {
  if (pi.dim() != lambda.dim()) throw Error(ErrorCode::DimMismatch, "belief: π and λ dimensions");
  if (lambda.is_unit()) return pi;

  if (auto pi_prec = try_spd_inverse(pi.cov())) {
    auto cov = try_spd_inverse(*pi_prec + lambda.prec());
    if (!cov) throw Error(ErrorCode::SingularCombination, "P_π⁻¹ + Λ is singular");
    return Gaussian(*cov * (*pi_prec * pi.mean() + lambda.info()), *cov);
  }
  if (try_spd_inverse(lambda.prec())) return belief_covariance_form(pi, lambda);

  // Both singular: factor Λ = HᵀR⁻¹H over its range and use the gain form.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(lambda.prec());
  const Vector& ev = eig.eigenvalues();
  const double largest = ev.maxCoeff();
  std::vector<Index> keep;
  for (Index i = 0; i < ev.size(); ++i)
    if (ev(i) > kSingularRcond * largest) keep.push_back(i);
  const Index rank = static_cast<Index>(keep.size());
  Matrix h(rank, pi.dim());
  Vector d(rank);
  for (Index k = 0; k < rank; ++k) {
    h.row(k) = eig.eigenvectors().col(keep[k]).transpose();
    d(k) = ev(keep[k]);
  }
  const Matrix r = d.cwiseInverse().asDiagonal();
  const Vector y = d.cwiseInverse().asDiagonal() * (h * lambda.info());
  try {
    return observe_linear(pi, h, r, y);
  } catch (const Error& e) {
    throw Error(ErrorCode::SingularCombination, e.what());
  }
}

Engine::Engine(NetworkSpec net) : net_(std::move(net)) {
  require_valid(net_);
  for (const auto& n : net_.nodes) adjacency_[n.id];
  for (const auto& l : net_.links) {
    adjacency_[l.to].push_back({l.from, true});
    adjacency_[l.from].push_back({l.to, false});
  }
  for (auto& [id, nbrs] : adjacency_) {
    std::sort(nbrs.begin(), nbrs.end(), [](const Neighbor& a, const Neighbor& b) { return a.id < b.id; });
  }
  std::deque<std::string> work;
  for (const auto& [id, v] : net_.evidence) work.push_back(id);
  while (!work.empty()) {
    std::string id = work.front();
    work.pop_front();
    if (!downstream_.insert(id).second) continue;
    for (const LinkSpec* l : net_.parent_links(id)) work.push_back(l->from);
  }
}

void Engine::post(PiMessage m) {
  auto key = std::make_pair(m.from, m.to);
  pi_box_.insert_or_assign(std::move(key), std::move(m));
}

void Engine::post(LambdaMessage m) {
  auto key = std::make_pair(m.from, m.to);
  lambda_box_.insert_or_assign(std::move(key), std::move(m));
}

void Engine::clear_mailboxes() {
  pi_box_.clear();
  lambda_box_.clear();
}

const PiMessage* Engine::pi_message(const std::string& from, const std::string& to) const {
  auto it = pi_box_.find({from, to});
  return it == pi_box_.end() ? nullptr : &it->second;
}

const LambdaMessage* Engine::lambda_message(const std::string& from, const std::string& to) const {
  auto it = lambda_box_.find({from, to});
  return it == lambda_box_.end() ? nullptr : &it->second;
}

std::vector<LinearTerm> Engine::incoming_pi(const std::string& id, const std::string* skip) const {
  std::vector<LinearTerm> terms;
  for (const LinkSpec* l : net_.parent_links(id)) {
    if (skip && l->from == *skip) continue;
    const PiMessage* m = pi_message(l->from, id);
    if (!m) {
      throw Error(ErrorCode::IncompleteMailbox, "'" + id + "' is missing the π message from '" + l->from + "'");
    }
    terms.push_back({l->matrix, m->payload});
  }
  return terms;
}

Gaussian Engine::pi(const std::string& id) const {
  const NodeSpec& node = net_.node(id);
  if (node.is_root()) return *node.prior;
  return compute_pi(node, incoming_pi(id, nullptr));
}

LambdaState Engine::lambda_excluding(const std::string& id, const std::string& child) const {
  const NodeSpec& node = net_.node(id);
  std::vector<LambdaMessage> incoming;
  for (const LinkSpec* l : net_.child_links(id)) {
    if (l->to == child) continue;
    if (const LambdaMessage* m = lambda_message(l->to, id)) {
      incoming.push_back(*m);
    } else if (has_downstream_evidence(l->to)) {
      throw Error(ErrorCode::IncompleteMailbox, "'" + id + "' is missing the λ message from '" + l->to + "'");
    }
  }
  std::optional<Vector> evidence;
  if (auto it = net_.evidence.find(id); it != net_.evidence.end()) evidence = it->second;
  return compute_lambda(node.dim, incoming, evidence);
}

LambdaState Engine::lambda(const std::string& id) const { return lambda_excluding(id, std::string{}); }

Gaussian Engine::belief(const std::string& id) const {
  if (auto it = net_.evidence.find(id); it != net_.evidence.end()) return Gaussian::delta(it->second);
  return propagation::belief(pi(id), lambda(id).potential);
}

PiMessage Engine::message_to_child(const std::string& id, const std::string& child) const {
  if (!net_.link(id, child)) throw Error(ErrorCode::UnknownNode, "'" + child + "' is not a child of '" + id + "'");
  if (auto it = net_.evidence.find(id); it != net_.evidence.end()) {
    return {id, child, Gaussian::delta(it->second)};
  }
  return {id, child, propagation::belief(pi(id), lambda_excluding(id, child).potential)};
}

LambdaMessage Engine::message_to_parent(const std::string& id, const std::string& parent,
                                        ParentMessageForm form) const {
  const LinkSpec* link = net_.link(parent, id);
  if (!link) throw Error(ErrorCode::UnknownNode, "'" + parent + "' is not a parent of '" + id + "'");
  const Index parent_dim = link->matrix.cols();
  const LambdaState lam = lambda(id);
  if (lam.is_unit()) return LambdaMessage::unit(id, parent, parent_dim);

  // Spouse contributions: M = Q + Σ_{k≠i} B_k P_k B_kᵀ, shift = offset + Σ_{k≠i} B_k ū_k.
  const NodeSpec& node = net_.node(id);
  Matrix m = *node.noise_cov;
  Vector shift = node.offset;
  for (const LinearTerm& t : incoming_pi(id, &parent)) {
    m += t.coeff * t.input.cov() * t.coeff.transpose();
    shift += t.coeff * t.input.mean();
  }
  const Matrix& b = link->matrix;

  if (lam.instantiated) {
    return LambdaMessage::from_factor(id, parent, {b, symmetrize(m), *lam.instantiated - shift});
  }

  if (form == ParentMessageForm::Automatic) {
    form = try_spd_inverse(lam.potential.prec()) ? ParentMessageForm::Moment : ParentMessageForm::Stacked;
  }
  if (form == ParentMessageForm::Moment) {
    const Matrix p_lambda =
        spd_inverse(lam.potential.prec(), ErrorCode::SingularCombination, "λ precision of '" + id + "'");
    const Vector x_lambda = p_lambda * lam.potential.info();
    return LambdaMessage::from_factor(id, parent, {b, symmetrize(p_lambda + m), x_lambda - shift});
  }
  const LikelihoodFactor& f = lam.factor;
  return LambdaMessage::from_factor(
      id, parent, {f.h * b, symmetrize(f.h * m * f.h.transpose() + f.r), f.y - f.h * shift});
}

void Engine::send(const std::string& from, const Neighbor& to, ParentMessageForm form) {
  if (to.is_parent) {
    post(message_to_parent(from, to.id, form));
  } else {
    post(message_to_child(from, to.id));
  }
}

void Engine::run(const PropagateOptions& options) {
  if (options.collect_root) net_.node(*options.collect_root);
  clear_mailboxes();

  std::set<std::string> visited;
  for (const auto& [start, unused] : adjacency_) {
    if (visited.count(start)) continue;

    // Component members, then the collect root.
    std::vector<std::string> members{start};
    visited.insert(start);
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (const auto& nb : adjacency_.at(members[i]))
        if (visited.insert(nb.id).second) members.push_back(nb.id);
    }
    std::string root = *std::min_element(members.begin(), members.end());
    if (options.collect_root &&
        std::find(members.begin(), members.end(), *options.collect_root) != members.end()) {
      root = *options.collect_root;
    }

    // Breadth-first order from the root, remembering the edge back toward it.
    std::vector<std::string> order{root};
    std::map<std::string, Neighbor> toward_root;
    for (std::size_t i = 0; i < order.size(); ++i) {
      const std::string v = order[i];
      for (const auto& nb : adjacency_.at(v)) {
        if (nb.id == root || toward_root.count(nb.id)) continue;
        toward_root.emplace(nb.id, Neighbor{v, !nb.is_parent});
        order.push_back(nb.id);
      }
    }

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      if (*it == root) continue;
      send(*it, toward_root.at(*it), options.form);
    }
    for (const auto& v : order) {
      for (const auto& nb : adjacency_.at(v)) {
        auto back = toward_root.find(v);
        if (back != toward_root.end() && back->second.id == nb.id) continue;
        send(v, nb, options.form);
      }
    }
  }
}

BeliefTable Engine::beliefs() const {
  BeliefTable out;
  for (const auto& n : net_.nodes) out.emplace(n.id, belief(n.id));
  return out;
}

BeliefTable propagate(const NetworkSpec& net, const PropagateOptions& options) {
  Engine engine(net);
  engine.run(options);
  return engine.beliefs();
}

}  // namespace vgbn::propagation
