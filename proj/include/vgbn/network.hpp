#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vgbn/gaussian.hpp"

namespace vgbn {

/// A vector node. Roots carry a prior; every other node carries the noise
/// covariance Q of x = Σ Bᵢuᵢ + offset + v and an optional constant offset.
struct NodeSpec {
  std::string id;
  Index dim = 0;
  std::optional<Gaussian> prior;
  std::optional<Matrix> noise_cov;
  Vector offset;  // non-roots only; size dim

  static NodeSpec root(std::string id, Gaussian prior);
  static NodeSpec internal(std::string id, Matrix noise_cov);
  static NodeSpec internal(std::string id, Matrix noise_cov, Vector offset);

  bool is_root() const { return prior.has_value(); }
};

/// Directed link `from -> to`; `matrix` is dim(to) x dim(from).
struct LinkSpec {
  std::string from;
  std::string to;
  Matrix matrix;
};

struct NetworkSpec {
  std::vector<NodeSpec> nodes;
  std::vector<LinkSpec> links;
  std::map<std::string, Vector> evidence;

  const NodeSpec* find(const std::string& id) const;
  /// Throws UnknownNode.
  const NodeSpec& node(const std::string& id) const;
  bool has_evidence(const std::string& id) const { return evidence.count(id) != 0; }

  /// Incoming links, ordered by parent id.
  std::vector<const LinkSpec*> parent_links(const std::string& id) const;
  /// Outgoing links, ordered by child id.
  std::vector<const LinkSpec*> child_links(const std::string& id) const;
  const LinkSpec* link(const std::string& from, const std::string& to) const;

  std::vector<std::string> ids() const;
  Index total_dim() const;
};

bool operator==(const NodeSpec& a, const NodeSpec& b);
bool operator==(const LinkSpec& a, const LinkSpec& b);
bool operator==(const NetworkSpec& a, const NetworkSpec& b);

enum class ViolationKind {
  DuplicateNode,
  BadDimension,
  RoleMismatch,
  ShapeMismatch,
  NotPsd,
  NonFinite,
  OrphanLink,
  DuplicateLink,
  SelfLoop,
  Cycle,
  NotSinglyConnected,
  UnknownEvidenceNode,
  EvidenceDimMismatch,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(ViolationKind kind) const;
  std::string to_text() const;
};

/// Lists every structural and numerical problem; an empty report means the
/// network is a valid singly-connected linear-Gaussian network.
ValidationReport validate(const NetworkSpec& net);

/// Same checks minus the singly-connected requirement (the exact oracle works on any DAG).
ValidationReport validate_dag(const NetworkSpec& net);

/// Throws InvalidNetwork carrying the report text when validation fails.
void require_valid(const NetworkSpec& net);

/// Topological order with lexicographic tie-break. Throws InvalidNetwork on a cycle.
std::vector<std::string> topological_order(const NetworkSpec& net);

/// Merge `ids` into one composite node (default id: members joined with '+').
/// Link matrices are stacked per neighbor, priors and noise covariances are
/// combined block-diagonally, and evidence is concatenated. A root member of a
/// mixed cluster contributes its prior as a noise block and its mean as an offset.
NetworkSpec cluster(const NetworkSpec& net, const std::vector<std::string>& ids,
                    std::optional<std::string> new_id = std::nullopt);

NetworkSpec attach_evidence(const NetworkSpec& net, const std::string& id, const Vector& value);
NetworkSpec clear_evidence(const NetworkSpec& net, const std::string& id);

}  // namespace vgbn
