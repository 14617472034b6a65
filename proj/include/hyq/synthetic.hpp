#pragma once

#include <cstdint>

#include "hyq/graph.hpp"

namespace hyq {

/// A family tree: entities form a balanced tree with fixed branching and five
/// relations defined by it,
///   parent(x, p), child(p, x), sibling(x, y), grandparent(x, g), uncle(x, u),
/// so every edge is implied by others (child is parent reversed, sibling is
/// parent;child, grandparent is parent;parent, uncle is parent;sibling).
/// A random fraction of the edges is moved to test (and valid).
struct SyntheticConfig {
  std::size_t entities = 200;
  std::size_t branching = 3;
  double valid_fraction = 0.0;
  double test_fraction = 0.1;
  std::uint64_t seed = 0;
};

KnowledgeGraph family_tree_graph(const SyntheticConfig& config);

/// Uniformly random distinct triples, all in the train split unless
/// `test_fraction` > 0. Entity names are "e<k>", relation names "r<k>".
KnowledgeGraph random_graph(std::size_t entities, std::size_t relations, std::size_t edges, std::uint64_t seed,
                            double test_fraction = 0.0);

}  // namespace hyq
