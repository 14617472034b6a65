#include <gtest/gtest.h>

#include <algorithm>
#include <iterator>

#include "hyq/brute_force.hpp"
#include "hyq/error.hpp"
#include "hyq/executor.hpp"
#include "hyq/random.hpp"
#include "hyq/sampler.hpp"
#include "hyq/synthetic.hpp"

using namespace hyq;

namespace {

EntitySet names(const KnowledgeGraph& g, std::initializer_list<const char*> list) {
  EntitySet out;
  for (const char* n : list) out.push_back(g.entity(n));
  std::sort(out.begin(), out.end());
  return out;
}

Query random_query(QueryStructure s, const KnowledgeGraph& g, Rng& rng) {
  const auto shape = template_query(s);
  std::vector<EntityId> anchors;
  std::vector<RelationId> rels;
  for (const auto& n : shape.nodes()) {
    if (n.op == QueryOp::Anchor) anchors.push_back(EntityId{static_cast<std::uint32_t>(rng.index(g.num_entities()))});
    if (n.op == QueryOp::Projection) {
      rels.push_back(RelationId{static_cast<std::uint32_t>(rng.index(g.num_relation_ids()))});
    }
  }
  return instantiate(s, anchors, rels);
}

bool is_subset(const EntitySet& a, const EntitySet& b) { return std::includes(b.begin(), b.end(), a.begin(), a.end()); }

}  // namespace

TEST(Symbolic, OneHop) {
  GraphBuilder b;
  b.add("a", "r", "b");
  b.add("a", "r", "c");
  auto g = std::move(b).build();
  EXPECT_EQ(execute_symbolic(parse_query("(p r (e a))", g), g, Split::Train), names(g, {"b", "c"}));
  EXPECT_EQ(execute_symbolic(parse_query("(p ~r (e c))", g), g, Split::Train), names(g, {"a"}));
  EXPECT_EQ(brute_force_answers(parse_query("(p r (e a))", g), g, Split::Train), names(g, {"b", "c"}));
}

TEST(Symbolic, TwoInIsSetDifference) {
  GraphBuilder b;
  b.add("a", "r1", "x");
  b.add("a", "r1", "y");
  b.add("a", "r1", "z");
  b.add("d", "r2", "y");
  b.add("d", "r2", "w");
  auto g = std::move(b).build();
  const auto q = parse_query("(i (p r1 (e a)) (n (p r2 (e d))))", g);
  EXPECT_EQ(execute_symbolic(q, g, Split::Train), names(g, {"x", "z"}));
}

TEST(Symbolic, PniHandFixture) {
  GraphBuilder b;
  b.add("a", "r", "c");
  b.add("a", "r", "d");
  b.add("c", "s", "e");
  b.add("d", "s", "f");
  b.add("b", "s", "e");
  b.add("b", "s", "f");
  b.add("b", "s", "c");
  auto g = std::move(b).build();
  // (p r a) = {c, d}; (p s {c, d}) = {e, f}; its complement is {a, b, c, d};
  // (p s b) = {c, e, f}; the intersection is {c}.
  const auto q = parse_query("(i (n (p s (p r (e a)))) (p s (e b)))", g);
  ASSERT_EQ(classify_structure(q), QueryStructure::PNI);
  EXPECT_EQ(execute_symbolic(q, g, Split::Train), names(g, {"c"}));
  EXPECT_EQ(brute_force_answers(q, g, Split::Train), names(g, {"c"}));
}

TEST(Symbolic, MaskSelectsSplits) {
  GraphBuilder b;
  b.add("a", "r", "b");
  b.add("a", "r", "c", Split::Test);
  auto g = std::move(b).build();
  const auto q = parse_query("(p r (e a))", g);
  EXPECT_EQ(execute_symbolic(q, g, Split::Train), names(g, {"b"}));
  EXPECT_EQ(execute_symbolic(q, g, SplitMask::all()), names(g, {"b", "c"}));
}

TEST(Symbolic, OutOfRangeIsValidationError) {
  auto g = random_graph(5, 1, 5, 1);
  Query q;
  q.project(RelationId{0}, q.anchor(EntityId{9}));
  EXPECT_THROW(execute_symbolic(q, g, Split::Train), ValidationError);
  Query r;
  r.project(RelationId{7}, r.anchor(EntityId{0}));
  EXPECT_THROW(execute_symbolic(r, g, Split::Train), ValidationError);
  EXPECT_THROW(execute_crisp(r, g, Split::Train), ValidationError);
}

TEST(BruteForce, AgreesWithSymbolicOnRandomInstances) {
  Rng rng(1);
  std::size_t checked = 0, nonempty = 0;
  for (int i = 0; i < 420; ++i) {
    const auto s = kAllStructures[static_cast<std::size_t>(i) % kAllStructures.size()];
    const std::size_t n = 5 + rng.index(16);
    const auto g = random_graph(n, 1 + rng.index(3), n + rng.index(3 * n), rng.next(), 0.2);
    const auto q = random_query(s, g, rng);
    for (auto mask : {SplitMask(Split::Train), SplitMask::all()}) {
      const auto expect = brute_force_answers(q, g, mask);
      ASSERT_EQ(execute_symbolic(q, g, mask), expect) << serialize_query(q, g);
      nonempty += !expect.empty();
      ++checked;
    }
  }
  EXPECT_EQ(checked, 840u);
  EXPECT_GT(nonempty, 200u);
}

TEST(BruteForce, AgreesOnSampledQueries) {
  const auto g = family_tree_graph({.entities = 40, .seed = 3});
  for (auto s : kAllStructures) {
    for (const auto& sample : sample_queries(g, s, 5, Split::Test, 2)) {
      EXPECT_EQ(brute_force_answers(sample.query, g, SplitMask::all()), sample.answers())
          << serialize_query(sample.query, g);
    }
  }
}

TEST(BruteForce, ThreeHopChainsOnTenEntities) {
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const auto g = random_graph(10, 2, 25, rng.next());
    const auto q = random_query(QueryStructure::P3, g, rng);
    EXPECT_EQ(brute_force_answers(q, g, Split::Train), execute_symbolic(q, g, Split::Train));
  }
}

TEST(BruteForce, RefusesLargeInputs) {
  const auto big = random_graph(65, 1, 100, 1);
  EXPECT_THROW(brute_force_answers(parse_query("(p r0 (e e0))", big), big, Split::Train), RefusalError);
  const auto g = random_graph(10, 1, 20, 1);
  const auto four = parse_query("(p r0 (p r0 (p r0 (p r0 (p r0 (e e0))))))", g);
  EXPECT_EQ(bound_variables(four), 4u);
  EXPECT_THROW(brute_force_answers(four, g, Split::Train), RefusalError);
  EXPECT_EQ(bound_variables(parse_query("(p r0 (e e0))", g)), 0u);
  EXPECT_EQ(bound_variables(template_query(QueryStructure::IP)), 1u);
}

TEST(Crisp, MatchesSymbolicExactly) {
  Rng rng(3);
  for (int i = 0; i < 280; ++i) {
    const auto s = kAllStructures[static_cast<std::size_t>(i) % kAllStructures.size()];
    const auto g = random_graph(15, 2, 40, rng.next());
    const auto q = random_query(s, g, rng);
    const auto scores = execute_crisp(q, g, Split::Train);
    for (Eigen::Index v = 0; v < scores.size(); ++v) ASSERT_TRUE(scores[v] == 0.0 || scores[v] == 1.0);
    EXPECT_EQ(threshold_answers(scores), execute_symbolic(q, g, Split::Train)) << serialize_query(q, g);
  }
}

TEST(Symbolic, AddingEdgesNeverShrinksNegationFreeAnswers) {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto s = kEpfoStructures[static_cast<std::size_t>(i) % kEpfoStructures.size()];
    const auto g = random_graph(15, 2, 50, rng.next(), 0.4);
    const auto q = random_query(s, g, rng);
    EXPECT_TRUE(is_subset(execute_symbolic(q, g, Split::Train), execute_symbolic(q, g, SplitMask::all())));
  }
}

TEST(Trace, OneEntryPerNodeRootIsAnswer) {
  const auto g = family_tree_graph({.entities = 40, .seed = 4});
  ProjectionModel model(g.num_entities(), g.num_relation_ids(), {.dim = 4, .layers = 2}, 1);
  MessageGraph graph(adjacency_matrix(g, Split::Train));
  for (auto s : kAllStructures) {
    const auto sample = sample_queries(g, s, 1, Split::Test, 5).front();
    const auto& q = sample.query;
    std::vector<EntitySet> sym;
    const auto answers = execute_symbolic(q, g, SplitMask::all(), &sym);
    ASSERT_EQ(sym.size(), q.size());
    EXPECT_EQ(sym[q.root()], answers);
    std::vector<FuzzySetd> neural;
    const auto y = execute_neural(q, model, graph, &neural);
    ASSERT_EQ(neural.size(), q.size());
    for (const auto& x : neural) {
      EXPECT_EQ(static_cast<std::size_t>(x.size()), g.num_entities());
      EXPECT_TRUE(is_fuzzy_set(x));
    }
    EXPECT_EQ(neural[q.root()], y);
    const auto j = trace_to_json(q, g, neural);
    EXPECT_EQ(j.at("nodes").size(), q.size());
    EXPECT_EQ(j.at("root").get<std::size_t>(), static_cast<std::size_t>(q.root()));
  }
}

TEST(Neural, AnchorIsOneHotAndConnectivesAreProductLogic) {
  const auto g = family_tree_graph({.entities = 30, .seed = 5});
  ProjectionModel model(g.num_entities(), g.num_relation_ids(), {.dim = 4, .layers = 2}, 2);
  MessageGraph graph(adjacency_matrix(g, Split::Train));
  const auto a = parse_query("(p parent (e e0001))", g);
  const auto b = parse_query("(p child (e e0002))", g);
  const auto ya = execute_neural(a, model, graph);
  const auto yb = execute_neural(b, model, graph);
  const auto both = execute_neural(parse_query("(i (p parent (e e0001)) (p child (e e0002)))", g), model, graph);
  EXPECT_LE((both - conjunction(ya, yb)).cwiseAbs().maxCoeff(), 1e-15);
  const auto either = execute_neural(parse_query("(u (p parent (e e0001)) (p child (e e0002)))", g), model, graph);
  EXPECT_LE((either - disjunction(ya, yb)).cwiseAbs().maxCoeff(), 1e-15);
  std::vector<FuzzySetd> trace;
  execute_neural(a, model, graph, &trace);
  FuzzySetd hot = FuzzySetd::Zero(static_cast<Eigen::Index>(g.num_entities()));
  hot[index(g.entity("e0001"))] = 1.0;
  EXPECT_EQ(trace[0], hot);
}

TEST(Neural, EntityCountMismatchIsValidationError) {
  const auto g = random_graph(10, 2, 20, 1);
  ProjectionModel model(11, g.num_relation_ids(), {.dim = 4, .layers = 2}, 3);
  MessageGraph graph(adjacency_matrix(g, Split::Train));
  EXPECT_THROW(execute_neural(parse_query("(p r0 (e e0))", g), model, graph), ValidationError);
}

TEST(Neural, GradientsReachModelThroughConnectives) {
  const auto g = family_tree_graph({.entities = 30, .seed = 6});
  ProjectionModel model(g.num_entities(), g.num_relation_ids(), {.dim = 4, .layers = 2}, 4);
  MessageGraph graph(adjacency_matrix(g, Split::Train));
  ad::Tape tape;
  const auto b = model.bind(tape);
  const auto q = parse_query("(i (p parent (e e0003)) (n (p sibling (e e0004))))", g);
  tape.backward(ad::sum(execute_neural(q, tape, model, b, graph)));
  EXPECT_GT(model.params().at("relations").grad.norm(), 0.0);
  EXPECT_GT(model.params().at("mlp.w2").grad.norm(), 0.0);
}

TEST(ThresholdAnswers, StrictlyAbove) {
  FuzzySetd s(4);
  s << 0.5, 0.51, 0.9, 0.1;
  EXPECT_EQ(threshold_answers(s), (EntitySet{EntityId{1}, EntityId{2}}));
  EXPECT_EQ(threshold_answers(s, 0.05).size(), 4u);
}
