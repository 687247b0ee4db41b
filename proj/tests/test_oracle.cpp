#include <gtest/gtest.h>

#include "support/builders.hpp"
#include "support/random_models.hpp"
#include "vgbn/oracle.hpp"

using namespace vgbn;
using namespace vgbn::testing;

TEST(AssembleJoint, ScalarChain) {
  const JointGaussian joint = oracle::assemble_joint(scalar_chain());
  EXPECT_EQ(joint.dist().mean(), vec({0, 0, 0}));
  EXPECT_EQ(joint.dist().cov(), mat({{1, 1, 1}, {1, 2, 2}, {1, 2, 3}}));
  EXPECT_EQ(joint.block("y").offset, 2);
}

TEST(AssembleJoint, OffsetsShiftMeans) {
  NetworkSpec net = scalar_chain();
  net.nodes[1] = NodeSpec::internal("x", mat({{1}}), vec({2}));
  net.nodes[0] = NodeSpec::root("u", scalar(1, 1));
  const JointGaussian joint = oracle::assemble_joint(net);
  EXPECT_EQ(joint.dist().mean(), vec({1, 3, 3}));
}

TEST(AssembleJoint, DiamondWorksOnDag) {
  const JointGaussian joint = oracle::assemble_joint(diamond());
  // w = x1 - x2, x1 = u + v1, x2 = 2u + v2: var(w) = var(-u + v1 - v2) + 1 = 4.
  EXPECT_NEAR(joint.marginal("w").cov()(0, 0), 4.0, 1e-15);
  EXPECT_NEAR(joint.cross_cov("u", "x2")(0, 0), 2.0, 1e-15);
}

TEST(ExactPosterior, ChainWithLeafEvidence) {
  // Frozen: u | y=3 in the unit chain has mean 1, variance 2/3.
  NetworkSpec net = scalar_chain();
  net.evidence["y"] = vec({3});
  const Gaussian u = oracle::exact_posterior(net, "u");
  EXPECT_NEAR(u.mean()(0), 1.0, 1e-14);
  EXPECT_NEAR(u.cov()(0, 0), 2.0 / 3.0, 1e-14);
  const Gaussian x = oracle::exact_posterior(net, "x");
  EXPECT_NEAR(x.mean()(0), 2.0, 1e-14);
  EXPECT_NEAR(x.cov()(0, 0), 2.0 / 3.0, 1e-14);
  const Gaussian y = oracle::exact_posterior(net, "y");
  EXPECT_EQ(y, Gaussian::delta(vec({3})));
}

TEST(ExactPosterior, NoEvidenceGivesPriorMarginals) {
  const NetworkSpec net = scalar_chain();
  const auto all = oracle::exact_posteriors(net);
  EXPECT_NEAR(all.at("y").cov()(0, 0), 3.0, 1e-15);
}

TEST(ExactPosterior, AllEvidence) {
  NetworkSpec net = scalar_chain();
  net.evidence = {{"u", vec({1})}, {"x", vec({2})}, {"y", vec({3})}};
  const auto all = oracle::exact_posteriors(net);
  EXPECT_EQ(all.size(), 3u);
  EXPECT_EQ(all.at("x"), Gaussian::delta(vec({2})));
}

TEST(ExactPosterior, EvidenceOrderDoesNotMatter) {
  Rng rng(3);
  for (int t = 0; t < 40; ++t) {
    const NetworkSpec net = random_polytree(rng, {.min_nodes = 3});
    if (net.evidence.size() == net.nodes.size()) continue;
    std::vector<std::string> order;
    for (const auto& [id, _] : net.evidence) order.push_back(id);
    std::vector<std::string> reversed(order.rbegin(), order.rend());
    const JointGaussian a = oracle::posterior_joint(net, order);
    const JointGaussian b = oracle::posterior_joint(net, reversed);
    EXPECT_LT(relative_deviation(a.dist().mean(), b.dist().mean()), 1e-10);
    EXPECT_LT(relative_deviation(a.dist().cov(), b.dist().cov()), 1e-10);
  }
}

TEST(ExactPosterior, UnknownQuery) {
  EXPECT_THROW(oracle::exact_posterior(scalar_chain(), "nope"), Error);
}
