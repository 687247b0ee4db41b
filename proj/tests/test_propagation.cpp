#include <gtest/gtest.h>

#include "support/builders.hpp"
#include "support/checks.hpp"
#include "support/random_models.hpp"

using namespace vgbn;
using namespace vgbn::propagation;
using namespace vgbn::testing;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

LambdaMessage scalar_lambda(const std::string& from, double y) {
  return LambdaMessage::from_factor(from, "x", {mat({{1}}), mat({{1}}), vec({y})});
}

}  // namespace

TEST(ComputePi, RootTakesPrior) {
  const NodeSpec root = NodeSpec::root("u", scalar(0, 1));
  EXPECT_EQ(compute_pi(root, {}), scalar(0, 1));
  const std::vector<LinearTerm> terms{{mat({{1}}), scalar(0, 1)}};
  EXPECT_EQ(code_of([&] { compute_pi(root, terms); }), ErrorCode::InvalidArgument);
}

TEST(ComputePi, TwoParents) {
  const std::vector<LinearTerm> terms{{mat({{1}}), scalar(1, 1)}, {mat({{1}}), scalar(-1, 1)}};
  const Gaussian pi = compute_pi(NodeSpec::internal("x", mat({{0.5}})), terms);
  EXPECT_NEAR(pi.mean()(0), 0.0, 1e-15);
  EXPECT_NEAR(pi.cov()(0, 0), 2.5, 1e-15);
}

TEST(ComputePi, EvidenceParentOnlyShiftsMean) {
  const std::vector<LinearTerm> terms{{mat({{3}}), Gaussian::delta(vec({2}))}};
  const Gaussian pi = compute_pi(NodeSpec::internal("x", mat({{1}})), terms);
  EXPECT_EQ(pi, scalar(6, 1));
}

TEST(ComputePi, MissingParentMessage) {
  EXPECT_EQ(code_of([] { compute_pi(NodeSpec::internal("x", mat({{1}})), {}); }), ErrorCode::IncompleteMailbox);
}

TEST(ComputeLambda, LeafIsUnit) {
  const LambdaState s = compute_lambda(2, {});
  EXPECT_TRUE(s.is_unit());
  EXPECT_EQ(s.potential.dim(), 2);
}

TEST(ComputeLambda, SingleChild) {
  const std::vector<LambdaMessage> in{scalar_lambda("y", 3)};
  const LambdaState s = compute_lambda(1, in);
  EXPECT_DOUBLE_EQ(s.potential.prec()(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(s.potential.info()(0), 3.0);
}

TEST(ComputeLambda, TwoChildrenAdd) {
  const std::vector<LambdaMessage> in{scalar_lambda("y1", 3), scalar_lambda("y2", 1)};
  const LambdaState s = compute_lambda(1, in);
  EXPECT_DOUBLE_EQ(s.potential.prec()(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(s.potential.info()(0), 4.0);
  EXPECT_EQ(s.factor.rows(), 2);
}

TEST(ComputeLambda, EvidenceOverridesChildren) {
  const std::vector<LambdaMessage> in{scalar_lambda("y", 3)};
  const LambdaState s = compute_lambda(1, in, vec({7}));
  ASSERT_TRUE(s.instantiated);
  EXPECT_EQ(*s.instantiated, vec({7}));
  EXPECT_FALSE(s.is_unit());
}

TEST(Belief, UnitLambdaReturnsPi) {
  const Gaussian pi(vec({1, 2}), mat({{2, 0.3}, {0.3, 1}}));
  EXPECT_EQ(belief(pi, InfoForm::unit(2)), pi);
}

TEST(Belief, EqualPrecisionFusion) {
  const Gaussian b = belief(scalar(0, 1), InfoForm(mat({{1}}), vec({2})));
  EXPECT_NEAR(b.mean()(0), 1.0, 1e-15);
  EXPECT_NEAR(b.cov()(0, 0), 0.5, 1e-15);
}

TEST(Belief, BothFormsAgree) {
  Rng rng(21);
  for (int t = 0; t < 100; ++t) {
    const Index n = uniform_int(rng, 1, 5);
    const Gaussian pi(random_vector(rng, n), random_spd(rng, n));
    const InfoForm lambda(random_spd(rng, n), random_vector(rng, n));
    EXPECT_LT(deviation(belief(pi, lambda), belief_covariance_form(pi, lambda)), 1e-10);
  }
}

TEST(Belief, SingularPiWithSingularLambda) {
  // π pins the first coordinate, λ pins the second: the combination is proper.
  const Gaussian pi(vec({1, 0}), mat({{0, 0}, {0, 1}}));
  const InfoForm lambda(mat({{0, 0}, {0, 4}}), vec({0, 8}));
  const Gaussian b = belief(pi, lambda);
  EXPECT_NEAR(b.mean()(0), 1.0, 1e-14);
  EXPECT_NEAR(b.mean()(1), 1.6, 1e-14);
  EXPECT_NEAR(b.cov()(1, 1), 0.2, 1e-14);
  EXPECT_NEAR(b.cov()(0, 0), 0.0, 1e-14);
}

TEST(Belief, MatchesCentralizedUpdateOnScalarModel) {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const Gaussian pi = scalar(uniform(rng, -2, 2), uniform(rng, 0.2, 3));
    const double h = uniform(rng, -2, 2), r = uniform(rng, 0.1, 2), z = uniform(rng, -3, 3);
    const Gaussian fused = belief(pi, pullback(mat({{h}}), scalar(z, r)));
    const Gaussian gain = observe_linear(pi, mat({{h}}), mat({{r}}), vec({z}));
    EXPECT_LT(deviation(fused, gain), 1e-12);
  }
}

TEST(MessageToParent, NoDownstreamEvidenceIsUnit) {
  Engine engine(scalar_chain());
  engine.run();
  EXPECT_TRUE(engine.message_to_parent("y", "x").payload.is_unit());
  EXPECT_TRUE(engine.message_to_parent("x", "u").payload.is_unit());
}

TEST(MessageToParent, ChainValue) {
  NetworkSpec net = scalar_chain();
  net.evidence["y"] = vec({2});
  Engine engine(net);
  engine.run();
  const LambdaState lx = engine.lambda("x");
  EXPECT_DOUBLE_EQ(lx.potential.prec()(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(lx.potential.info()(0), 2.0);
  const InfoForm m = engine.message_to_parent("x", "u").payload;
  EXPECT_NEAR(m.prec()(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(m.info()(0), 1.0, 1e-15);
  // Same answer from exact conditioning: u | y has precision 1 + 0.5.
  EXPECT_NEAR(oracle::exact_posterior(net, "u").cov()(0, 0), 1.0 / 1.5, 1e-15);
}

TEST(MessageToParent, FormsAgreeWhenLambdaInvertible) {
  Rng rng(31);
  for (int t = 0; t < 50; ++t) {
    Engine engine(random_star(rng, false));
    engine.run();
    for (const LinkSpec* l : engine.network().parent_links("x")) {
      const auto moment = engine.message_to_parent("x", l->from, ParentMessageForm::Moment);
      const auto stacked = engine.message_to_parent("x", l->from, ParentMessageForm::Stacked);
      EXPECT_LT(deviation(moment.payload, stacked.payload), 1e-9);
    }
  }
}

TEST(MessageToParent, SingularLambdaNeedsStackedForm) {
  Rng rng(32);
  for (int t = 0; t < 30; ++t) {
    const NetworkSpec net = random_star(rng, true);
    Engine engine(net);
    engine.run();
    EXPECT_EQ(code_of([&] { engine.message_to_parent("x", "u0", ParentMessageForm::Moment); }),
              ErrorCode::SingularCombination);
    EXPECT_LT(oracle_deviation(net, propagate(net, {.collect_root = std::nullopt, .form = ParentMessageForm::Stacked})), 1e-8);
  }
}

TEST(MessageToChild, SingleChildEqualsPi) {
  NetworkSpec net = scalar_chain();
  net.evidence["y"] = vec({2});
  Engine engine(net);
  engine.run();
  EXPECT_EQ(engine.message_to_child("x", "y").payload, engine.pi("x"));
}

TEST(MessageToChild, LeavesOutOneChild) {
  NetworkSpec net;
  net.nodes = {NodeSpec::root("x", scalar(0, 1)), NodeSpec::internal("y1", mat({{1}})),
               NodeSpec::internal("y2", mat({{1}}))};
  net.links = {link("x", "y1", mat({{1}})), link("x", "y2", mat({{1}}))};
  net.evidence = {{"y1", vec({3})}, {"y2", vec({1})}};
  Engine engine(net);
  engine.run();
  const Gaussian m = engine.message_to_child("x", "y1").payload;
  EXPECT_LT(deviation(m, belief(scalar(0, 1), InfoForm(mat({{1}}), vec({1})))), 1e-15);
}

TEST(MessageToChild, EvidenceNodeSendsDelta) {
  NetworkSpec net = scalar_chain();
  net.evidence["x"] = vec({4});
  Engine engine(net);
  engine.run();
  EXPECT_EQ(engine.message_to_child("x", "y").payload, Gaussian::delta(vec({4})));
}

TEST(MessageToChild, RecombinesToFullBelief) {
  Rng rng(41);
  int checked = 0;
  for (int t = 0; t < 60; ++t) {
    const NetworkSpec net = random_polytree(rng, {.min_nodes = 4});
    Engine engine(net);
    engine.run();
    for (const auto& id : net.ids()) {
      if (net.has_evidence(id)) continue;
      for (const LinkSpec* l : net.child_links(id)) {
        const Gaussian loo = engine.message_to_child(id, l->to).payload;
        const LambdaMessage* lj = engine.lambda_message(l->to, id);
        const InfoForm lambda_j = lj ? lj->payload : InfoForm::unit(loo.dim());
        EXPECT_LT(deviation(belief(loo, lambda_j), engine.belief(id)), 1e-10) << id << "->" << l->to;
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 50);
}

TEST(Engine, IncompleteMailbox) {
  NetworkSpec net = scalar_chain();
  net.evidence["y"] = vec({2});
  Engine engine(net);
  EXPECT_EQ(code_of([&] { engine.pi("x"); }), ErrorCode::IncompleteMailbox);
  EXPECT_EQ(code_of([&] { engine.lambda("x"); }), ErrorCode::IncompleteMailbox);
  engine.run();
  engine.clear_mailboxes();
  EXPECT_EQ(code_of([&] { engine.belief("x"); }), ErrorCode::IncompleteMailbox);
}

TEST(Engine, RejectsInvalidNetwork) {
  EXPECT_EQ(code_of([] { Engine e(diamond()); }), ErrorCode::InvalidNetwork);
}

TEST(Engine, ManualMessagesReproduceRun) {
  NetworkSpec net = scalar_chain();
  net.evidence["y"] = vec({3});
  Engine manual(net);
  manual.post(manual.message_to_parent("y", "x"));
  manual.post(manual.message_to_parent("x", "u"));
  manual.post(manual.message_to_child("u", "x"));
  manual.post(manual.message_to_child("x", "y"));
  const auto auto_run = propagate(net);
  for (const auto& id : net.ids()) EXPECT_LT(deviation(manual.belief(id), auto_run.at(id)), 1e-15) << id;
}

TEST(Propagate, NoEvidenceGivesPriorMarginals) {
  Rng rng(51);
  for (int t = 0; t < 20; ++t) {
    const NetworkSpec net = random_polytree(rng, {.evidence = false});
    const auto beliefs = propagate(net);
    const JointGaussian joint = oracle::assemble_joint(net);
    for (const auto& [id, g] : beliefs) EXPECT_LT(deviation(g, joint.marginal(id)), 1e-10) << id;
  }
}

TEST(Propagate, LeafEvidenceOnFiveNodeTree) {
  NetworkSpec net;
  net.nodes = {NodeSpec::root("a", Gaussian(vec({0, 1}), mat({{1, 0.2}, {0.2, 2}}))),
               NodeSpec::internal("b", mat({{0.5}}), vec({1})),
               NodeSpec::root("c", scalar(-1, 0.7)),
               NodeSpec::internal("d", mat({{1, 0}, {0, 0.3}})),
               NodeSpec::internal("e", mat({{0.2}}))};
  net.links = {link("a", "b", mat({{1, -1}})), link("c", "b", mat({{2}})), link("b", "d", mat({{1}, {0.5}})),
               link("b", "e", mat({{3}}))};
  net.evidence = {{"d", vec({0.4, -0.1})}, {"e", vec({2})}};
  const auto beliefs = propagate(net);
  EXPECT_LT(oracle_deviation(net, beliefs), 1e-8);
  EXPECT_EQ(beliefs.at("d"), Gaussian::delta(vec({0.4, -0.1})));
}

TEST(Propagate, MatchesOracleOnRandomPolytrees) {
  Rng rng(61);
  for (int t = 0; t < 100; ++t) {
    const NetworkSpec net = random_polytree(rng);
    EXPECT_LT(oracle_deviation(net, propagate(net)), 1e-8) << "net " << t;
  }
}

TEST(Propagate, ScheduleInvariance) {
  Rng rng(71);
  for (int t = 0; t < 20; ++t) {
    const NetworkSpec net = random_polytree(rng);
    const auto reference = propagate(net);
    for (const auto& id : net.ids()) EXPECT_LT(deviation(propagate(net, {.collect_root = id}), reference), 1e-10);
  }
}

TEST(Propagate, BoundaryConditions) {
  Rng rng(81);
  for (int t = 0; t < 50; ++t) {
    const NetworkSpec net = random_polytree(rng);
    Engine engine(net);
    engine.run();
    for (const auto& n : net.nodes) {
      if (n.is_root()) {
        EXPECT_EQ(engine.pi(n.id), *n.prior);
      }
      if (net.has_evidence(n.id)) {
        EXPECT_EQ(engine.belief(n.id), Gaussian::delta(net.evidence.at(n.id)));
      } else if (net.child_links(n.id).empty()) {
        EXPECT_EQ(engine.belief(n.id), engine.pi(n.id));
      }
      if (!engine.has_downstream_evidence(n.id)) {
        for (const LinkSpec* l : net.parent_links(n.id))
          EXPECT_TRUE(engine.message_to_parent(n.id, l->from).payload.is_unit());
      }
    }
  }
}

TEST(Propagate, Idempotent) {
  Rng rng(91);
  for (int t = 0; t < 10; ++t) {
    const NetworkSpec net = random_polytree(rng);
    Engine engine(net);
    engine.run();
    const auto first = engine.beliefs();
    engine.run();
    const auto second = engine.beliefs();
    for (const auto& [id, g] : first) EXPECT_EQ(g, second.at(id));
  }
}
