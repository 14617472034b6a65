#include "hyq/brute_force.hpp"

#include <set>
#include <tuple>

#include "hyq/error.hpp"

namespace hyq {

namespace {

class Enumerator {
 public:
  Enumerator(const Query& q, const KnowledgeGraph& g, SplitMask mask) : q_(q), n_(g.num_entities()) {
    for (const auto& t : g.triples(mask)) facts_.insert({index(t.head), index(t.rel), index(t.tail)});
  }

  bool holds(NodeRef node, std::uint32_t y) const {
    const auto& nd = q_.node(node);
    switch (nd.op) {
      case QueryOp::Anchor:
        return index(nd.entity) == y;
      case QueryOp::Projection: {
        const auto& child = q_.node(nd.children[0]);
        if (child.op == QueryOp::Anchor) return edge(index(child.entity), index(nd.rel), y);
        for (std::uint32_t z = 0; z < n_; ++z) {
          if (edge(z, index(nd.rel), y) && holds(nd.children[0], z)) return true;
        }
        return false;
      }
      case QueryOp::Intersection:
        for (auto c : nd.children) {
          if (!holds(c, y)) return false;
        }
        return true;
      case QueryOp::Union:
        for (auto c : nd.children) {
          if (holds(c, y)) return true;
        }
        return false;
      case QueryOp::Negation:
        return !holds(nd.children[0], y);
    }
    return false;
  }

 private:
  bool edge(std::uint32_t h, std::uint32_t r, std::uint32_t t) const {
    if (r & 1u) return facts_.count({t, r ^ 1u, h}) > 0;
    return facts_.count({h, r, t}) > 0;
  }

  const Query& q_;
  std::size_t n_;
  std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> facts_;
};

}  // namespace

std::size_t bound_variables(const Query& q) {
  std::size_t n = 0;
  for (const auto& node : q.nodes()) {
    if (node.op == QueryOp::Projection && q.node(node.children[0]).op != QueryOp::Anchor) ++n;
  }
  return n;
}

EntitySet brute_force_answers(const Query& q, const KnowledgeGraph& g, SplitMask mask) {
  if (g.num_entities() > kBruteForceMaxEntities) {
    throw RefusalError("brute force refuses graphs with more than " + std::to_string(kBruteForceMaxEntities) +
                       " entities");
  }
  q.validate(g);
  if (bound_variables(q) > kBruteForceMaxVariables) {
    throw RefusalError("brute force refuses queries with more than " + std::to_string(kBruteForceMaxVariables) +
                       " bound variables");
  }
  const Enumerator en(q, g, mask);
  EntitySet out;
  for (std::uint32_t y = 0; y < g.num_entities(); ++y) {
    if (en.holds(q.root(), y)) out.push_back(EntityId{y});
  }
  return out;
}

}  // namespace hyq
