#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vgbn/network.hpp"

namespace vgbn::propagation {

/// The potential N(Hu; R, ȳ) seen as a function of u, with R positive definite.
/// Rows from several children stack into one factor with block-diagonal R.
struct LikelihoodFactor {
  Matrix h;
  Matrix r;
  Vector y;

  /// Zero-row factor: the unit potential on a `dim`-vector.
  static LikelihoodFactor none(Index dim);

  Index rows() const { return h.rows(); }
  Index dim() const { return h.cols(); }
  /// (HᵀR⁻¹H, HᵀR⁻¹ȳ). Throws SingularCombination when R is singular.
  InfoForm potential() const;
};

LikelihoodFactor stack_factors(std::span<const LikelihoodFactor> factors, Index dim);

/// π message: moment-form density of the sender given all evidence except
/// what lies beyond the receiving child.
struct PiMessage {
  std::string from;
  std::string to;
  Gaussian payload;
};

/// λ message: likelihood potential over the receiving parent's state.
struct LambdaMessage {
  std::string from;
  std::string to;
  InfoForm payload;
  LikelihoodFactor factor;

  static LambdaMessage from_factor(std::string from, std::string to, LikelihoodFactor factor);
  static LambdaMessage unit(std::string from, std::string to, Index dim);
};

/// λ(x) at a node: either the product of the children's potentials, or the
/// delta of an instantiated node. The delta is kept as a marker and never
/// converted to information form.
struct LambdaState {
  InfoForm potential;
  LikelihoodFactor factor;
  std::optional<Vector> instantiated;

  bool is_unit() const { return !instantiated && potential.is_unit(); }
};

using BeliefTable = std::map<std::string, Gaussian>;

enum class ParentMessageForm {
  /// Moment form when the node's λ precision is invertible, stacked form otherwise.
  Automatic,
  /// Through P_λ = Λ⁻¹; fails with SingularCombination when Λ is singular.
  Moment,
  /// Through the stacked child factors; needs no inverse of Λ.
  Stacked,
};

/// π(x): a root's prior, or N(Σ BᵢPᵢBᵢᵀ + Q, Σ Bᵢūᵢ + offset) over incoming π messages.
Gaussian compute_pi(const NodeSpec& node, std::span<const LinearTerm> incoming);

/// λ(x) from the children's messages; `evidence` overrides everything with a delta.
LambdaState compute_lambda(Index dim, std::span<const LambdaMessage> incoming,
                           const std::optional<Vector>& evidence = std::nullopt);

/// Posterior from π and a λ potential. Uses the precision form when π is
/// nonsingular, the covariance form when Λ is invertible, and otherwise a gain
/// form over a factorization of Λ. Throws SingularCombination.
Gaussian belief(const Gaussian& pi, const InfoForm& lambda);

/// P_π − P_π(P_π + P_λ)⁻¹P_π form; requires Λ invertible.
Gaussian belief_covariance_form(const Gaussian& pi, const InfoForm& lambda);

struct PropagateOptions {
  /// Root for the collect phase in its component; lexicographically smallest id when unset.
  std::optional<std::string> collect_root;
  ParentMessageForm form = ParentMessageForm::Automatic;
};

/// Message-passing engine over a validated singly-connected network. Mailboxes
/// hold the last message posted on each directed edge.
class Engine {
public:
  explicit Engine(NetworkSpec net);

  const NetworkSpec& network() const { return net_; }

  void post(PiMessage m);
  void post(LambdaMessage m);
  void clear_mailboxes();

  const PiMessage* pi_message(const std::string& from, const std::string& to) const;
  const LambdaMessage* lambda_message(const std::string& from, const std::string& to) const;

  /// True when the node or one of its descendants carries evidence.
  bool has_downstream_evidence(const std::string& id) const { return downstream_.count(id) != 0; }

  Gaussian pi(const std::string& id) const;
  LambdaState lambda(const std::string& id) const;
  /// λ(x) with one child's message left out.
  LambdaState lambda_excluding(const std::string& id, const std::string& child) const;
  Gaussian belief(const std::string& id) const;

  PiMessage message_to_child(const std::string& id, const std::string& child) const;
  LambdaMessage message_to_parent(const std::string& id, const std::string& parent,
                                  ParentMessageForm form = ParentMessageForm::Automatic) const;

  /// Collect toward the root of each component, then distribute.
  void run(const PropagateOptions& options = {});
  BeliefTable beliefs() const;

private:
  struct Neighbor {
    std::string id;
    bool is_parent;  // neighbor is a DAG parent of the node
  };

  void send(const std::string& from, const Neighbor& to, ParentMessageForm form);
  std::vector<LinearTerm> incoming_pi(const std::string& id, const std::string* skip) const;

  NetworkSpec net_;
  std::map<std::string, std::vector<Neighbor>> adjacency_;
  std::set<std::string> downstream_;
  std::map<std::pair<std::string, std::string>, PiMessage> pi_box_;
  std::map<std::pair<std::string, std::string>, LambdaMessage> lambda_box_;
};

BeliefTable propagate(const NetworkSpec& net, const PropagateOptions& options = {});

}  // namespace vgbn::propagation
