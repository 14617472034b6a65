#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "hyq/error.hpp"
#include "hyq/graph.hpp"
#include "hyq/random.hpp"
#include "hyq/synthetic.hpp"

using namespace hyq;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("hyq_graph_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

KnowledgeGraph from_text(const std::string& text, Split s = Split::Train) {
  GraphBuilder b;
  std::istringstream in(text);
  b.read_tsv(in, s);
  return std::move(b).build();
}

std::size_t total_edges(const KnowledgeGraph& g, SplitMask mask) {
  std::size_t n = 0;
  for (std::uint32_t v = 0; v < g.num_entities(); ++v) {
    for (std::uint32_t r = 0; r < g.num_relation_ids(); ++r) n += g.neighbors(EntityId{v}, RelationId{r}, mask).size();
  }
  return n;
}

}  // namespace

TEST(LoadTriples, TwoLinesGiveThreeEntitiesAndInverseEdges) {
  auto dir = temp_dir("two");
  auto g = load_triples(write_file(dir / "t.tsv", "a\tr\tb\nb\tr\tc\n"));
  EXPECT_EQ(g.num_entities(), 3u);
  EXPECT_EQ(g.num_relations(), 1u);
  EXPECT_EQ(g.triples(Split::Train).size(), 2u);
  EXPECT_EQ(total_edges(g, Split::Train), 4u);
  EXPECT_EQ(g.entity("a"), EntityId{0});
  EXPECT_EQ(g.entity("c"), EntityId{2});
}

TEST(LoadTriples, EmptyFile) {
  auto dir = temp_dir("empty");
  auto g = load_triples(write_file(dir / "t.tsv", ""));
  EXPECT_EQ(g.num_entities(), 0u);
  EXPECT_EQ(g.num_relations(), 0u);
  EXPECT_TRUE(g.triples(Split::Train).empty());
}

TEST(LoadTriples, DuplicateLineCountedOnce) {
  std::string text;
  for (int i = 0; i < 9; ++i) text += "h" + std::to_string(i) + "\tr\tt" + std::to_string(i % 3) + "\n";
  text += "h4\tr\tt1\n";  // repeats line 5
  auto g = from_text(text);
  EXPECT_EQ(g.triples(Split::Train).size(), 9u);
}

TEST(LoadTriples, WrongColumnCountReportsLine) {
  try {
    from_text("a\tr\tb\nbroken line\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 2u);
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(from_text("a\tr\tb\textra\n"), ParseError);
}

TEST(LoadTriples, FrozenDictionariesRejectUnknownNames) {
  auto dir = temp_dir("frozen");
  auto base = from_text("a\tr\tb\n");
  auto path = write_file(dir / "t.tsv", "a\tr\tz\n");
  EXPECT_THROW(load_triples(path, Split::Train, &base.dictionaries()), LookupError);
  auto ok = load_triples(write_file(dir / "u.tsv", "b\tr\ta\n"), Split::Test, &base.dictionaries());
  EXPECT_EQ(ok.entity("b"), EntityId{1});
  EXPECT_EQ(ok.triples(Split::Test).size(), 1u);
}

TEST(Neighbors, ForwardAndInverse) {
  auto g = from_text("a\tr\tb\n");
  const auto r = g.relation("r");
  EXPECT_EQ(g.neighbors(g.entity("a"), r, SplitMask(Split::Train)), std::vector<EntityId>{g.entity("b")});
  EXPECT_EQ(g.neighbors(g.entity("b"), inverse(r), SplitMask(Split::Train)), std::vector<EntityId>{g.entity("a")});
  EXPECT_EQ(g.relation("~r"), inverse(r));
  EXPECT_EQ(g.relation_name(inverse(r)), "~r");
}

TEST(Neighbors, OutOfRangeIsBoundsError) {
  auto g = from_text("a\tr\tb\n");
  EXPECT_THROW(g.neighbors(EntityId{2}, RelationId{0}, SplitMask::all()), BoundsError);
  EXPECT_THROW(g.neighbors(EntityId{0}, RelationId{2}, SplitMask::all()), BoundsError);
}

TEST(Neighbors, MatchesLinearScanOnRandomGraph) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto g = random_graph(12, 3, 50, seed, 0.3);
    for (auto mask : {SplitMask(Split::Train), SplitMask(Split::Test), SplitMask::all()}) {
      const auto triples = g.triples(mask);
      for (std::uint32_t v = 0; v < g.num_entities(); ++v) {
        for (std::uint32_t r = 0; r < g.num_relation_ids(); ++r) {
          std::vector<EntityId> expect;
          for (const auto& t : triples) {
            if (r % 2 == 0 && t.head == EntityId{v} && t.rel == RelationId{r}) expect.push_back(t.tail);
            if (r % 2 == 1 && t.tail == EntityId{v} && t.rel == RelationId{r - 1}) expect.push_back(t.head);
          }
          std::sort(expect.begin(), expect.end());
          EXPECT_EQ(g.neighbors(EntityId{v}, RelationId{r}, mask), expect) << "v=" << v << " r=" << r;
        }
      }
    }
  }
}

TEST(Splits, DisjointAndEarlierSplitWins) {
  GraphBuilder b;
  b.add("a", "r", "b", Split::Test);
  b.add("a", "r", "b", Split::Train);
  b.add("b", "r", "c", Split::Valid);
  b.add("b", "r", "c", Split::Test);
  b.add("c", "r", "a", Split::Test);
  auto g = std::move(b).build();
  EXPECT_EQ(g.triples(Split::Train).size(), 1u);
  EXPECT_EQ(g.triples(Split::Valid).size(), 1u);
  EXPECT_EQ(g.triples(Split::Test).size(), 1u);
  std::set<Triple> seen;
  for (auto s : kSplits) {
    for (const auto& t : g.triples(s)) EXPECT_TRUE(seen.insert(t).second);
  }
}

TEST(Splits, EveryTripleReachableBothWays) {
  auto g = family_tree_graph({.entities = 60, .branching = 3, .valid_fraction = 0.1, .test_fraction = 0.1, .seed = 4});
  for (auto s : kSplits) {
    for (const auto& t : g.triples(s)) {
      const auto fwd = g.neighbors(t.head, t.rel, SplitMask(s));
      const auto bwd = g.neighbors(t.tail, inverse(t.rel), SplitMask(s));
      EXPECT_TRUE(std::binary_search(fwd.begin(), fwd.end(), t.tail));
      EXPECT_TRUE(std::binary_search(bwd.begin(), bwd.end(), t.head));
    }
  }
}

TEST(Adjacency, SingleEdgeGraph) {
  auto g = from_text("a\tr\tb\n");
  auto edges = adjacency_matrix(g, Split::Train);
  EXPECT_EQ(edges.num_relations, 3u);
  ASSERT_EQ(edges.size(), 1u + 1u + 2u);
  std::map<std::uint32_t, std::vector<std::pair<std::uint32_t, std::uint32_t>>> groups;
  for (std::size_t e = 0; e < edges.size(); ++e) groups[edges.rel[e]].push_back({edges.src[e], edges.dst[e]});
  EXPECT_EQ(groups[0], (std::vector<std::pair<std::uint32_t, std::uint32_t>>{{0, 1}}));
  EXPECT_EQ(groups[1], (std::vector<std::pair<std::uint32_t, std::uint32_t>>{{1, 0}}));
  EXPECT_EQ(groups[edges.self_loop()], (std::vector<std::pair<std::uint32_t, std::uint32_t>>{{0, 0}, {1, 1}}));
}

TEST(Adjacency, TrainMaskExcludesHeldOutEdges) {
  auto g = random_graph(20, 2, 80, 11, 0.25);
  auto edges = adjacency_matrix(g, Split::Train);
  EXPECT_EQ(edges.size(), 2 * g.triples(Split::Train).size() + g.num_entities());
  std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> held_out;
  for (const auto& t : g.triples(Split::Test)) held_out.insert({index(t.head), index(t.rel), index(t.tail)});
  for (std::size_t e = 0; e < edges.size(); ++e) {
    EXPECT_FALSE(held_out.contains({edges.src[e], edges.rel[e], edges.dst[e]}));
  }
  auto all = adjacency_matrix(g, SplitMask::all());
  EXPECT_EQ(all.size(), 2 * 80 + g.num_entities());
}

TEST(GraphDir, RoundTripKeepsIdsAndEdges) {
  auto dir = temp_dir("roundtrip");
  auto g = family_tree_graph({.entities = 40, .branching = 3, .valid_fraction = 0.1, .test_fraction = 0.1, .seed = 9});
  save_graph_dir(g, dir / "g");
  auto back = load_graph_dir(dir / "g");
  EXPECT_TRUE(back.dictionaries().entities == g.dictionaries().entities);
  EXPECT_TRUE(back.dictionaries().relations == g.dictionaries().relations);
  for (auto s : kSplits) EXPECT_EQ(back.triples(s), g.triples(s));
}

TEST(GraphDir, TsvRoundTripThroughLoader) {
  auto dir = temp_dir("tsv");
  auto g = from_text("x\tknows\ty\ny\tlikes\tz\nz\tknows\tx\n");
  std::ofstream out(dir / "t.tsv", std::ios::binary);
  write_triples_tsv(g, Split::Train, out);
  out.close();
  auto back = load_triples(dir / "t.tsv");
  EXPECT_EQ(back.triples(Split::Train).size(), 3u);
  for (const auto& t : g.triples(Split::Train)) {
    EXPECT_TRUE(back.contains(Triple{back.entity(g.entity_name(t.head)), back.relation(g.relation_name(t.rel)),
                                     back.entity(g.entity_name(t.tail))},
                              Split::Train));
  }
}
