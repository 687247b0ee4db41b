#pragma once

#include <map>
#include <string>
#include <vector>

#include "vgbn/network.hpp"

namespace vgbn::oracle {

/// Joint Gaussian over every node, blocks in topological order. Works on any
/// DAG; the singly-connected requirement is not checked here.
JointGaussian assemble_joint(const NetworkSpec& net);

/// Joint over the non-evidence nodes after conditioning on all evidence, one
/// block at a time in `evidence_order` (default: the evidence map order).
JointGaussian posterior_joint(const NetworkSpec& net);
JointGaussian posterior_joint(const NetworkSpec& net, const std::vector<std::string>& evidence_order);

/// Exact posterior of one node. An evidence node yields a point mass at its value.
Gaussian exact_posterior(const NetworkSpec& net, const std::string& query);
Gaussian exact_posterior(const NetworkSpec& net, const std::string& query,
                         const std::vector<std::string>& evidence_order);

/// Exact posterior of every node.
std::map<std::string, Gaussian> exact_posteriors(const NetworkSpec& net);

}  // namespace vgbn::oracle
