#pragma once

#include <string>
#include <vector>

#include "vgbn/network.hpp"

namespace vgbn::transform {

enum class StepKind {
  /// Expectation over a root with a single child (child noise becomes Q + FP_uFᵀ).
  RemoveParent,
  /// Bayes' rule: condition the root parent on an observed child, then delete the child.
  AbsorbEvidence,
  /// Delete a childless node without evidence.
  RemoveBarren,
  /// Substitute an observed value into the node's children and cut those links.
  FoldEvidence,
  /// Integrate out a non-root node with a single child; the child inherits its parents.
  Splice,
  /// Merge nodes into one composite node.
  Cluster,
};

std::string_view to_string(StepKind kind);

struct TransformStep {
  StepKind kind;
  std::string target;
  std::vector<std::string> members;  // Cluster only
};

NetworkSpec remove_parent(const NetworkSpec& net, const std::string& id);
NetworkSpec absorb_evidence(const NetworkSpec& net, const std::string& id);
NetworkSpec remove_barren(const NetworkSpec& net, const std::string& id);
NetworkSpec fold_evidence(const NetworkSpec& net, const std::string& id);
NetworkSpec splice(const NetworkSpec& net, const std::string& id);

NetworkSpec apply(const NetworkSpec& net, const TransformStep& step);

struct Reduction {
  Gaussian marginal;
  std::vector<TransformStep> trace;
};

/// Reduce the network to the query's marginal given all evidence. Evidence is
/// folded and absorbed into root parents, and every other node is eliminated,
/// until only the node holding the query remains.
Reduction reduce_traced(const NetworkSpec& net, const std::string& query);
Gaussian reduce(const NetworkSpec& net, const std::string& query);

}  // namespace vgbn::transform
