#include "hyq/sampler.hpp"

#include <algorithm>
#include <iterator>
#include <optional>

#include "hyq/error.hpp"
#include "hyq/executor.hpp"
#include "hyq/random.hpp"

namespace hyq {

AnswerGraphs answer_graphs(Split answer_split) {
  switch (answer_split) {
    case Split::Test:
      return {SplitMask::all(), Split::Train | Split::Valid, true};
    case Split::Valid:
      return {Split::Train | Split::Valid, Split::Train, true};
    case Split::Train:
      break;
  }
  return {Split::Train, SplitMask(), false};
}

QuerySample label_query(const Query& q, const KnowledgeGraph& g, Split answer_split) {
  const auto graphs = answer_graphs(answer_split);
  QuerySample s;
  s.query = q;
  s.structure = classify_structure(q);
  const auto full = execute_symbolic(q, g, graphs.full);
  if (graphs.has_observed) {
    const auto observed = execute_symbolic(q, g, graphs.observed);
    std::set_intersection(full.begin(), full.end(), observed.begin(), observed.end(), std::back_inserter(s.easy));
    std::set_difference(full.begin(), full.end(), observed.begin(), observed.end(), std::back_inserter(s.hard));
  } else {
    s.hard = full;
  }
  return s;
}

namespace {

constexpr int kNegationTries = 10;

class Grounder {
 public:
  Grounder(const KnowledgeGraph& g, const Query& shape, SplitMask full, Rng& rng)
      : g_(g), shape_(shape), full_(full), rng_(rng) {}

  /// Builds the labelled copy of `shape` rooted at node `n` with `answer` among
  /// its answers.
  std::optional<NodeRef> ground(NodeRef n, EntityId answer, Query& out) {
    const auto& node = shape_.node(n);
    switch (node.op) {
      case QueryOp::Anchor:
        return out.anchor(answer);
      case QueryOp::Projection: {
        const auto rels = g_.relations_from(answer, full_);
        if (rels.empty()) return std::nullopt;
        const auto r = rels[rng_.index(rels.size())];
        const auto heads = g_.neighbors(answer, r, full_);
        const auto head = heads[rng_.index(heads.size())];
        const auto child = ground(node.children[0], head, out);
        if (!child) return std::nullopt;
        return out.project(inverse(r), *child);
      }
      case QueryOp::Intersection:
      case QueryOp::Union: {
        std::vector<NodeRef> children;
        for (auto c : node.children) {
          const auto sub = shape_.node(c).op == QueryOp::Negation ? ground_negated(c, answer, out)
                                                                   : ground(c, answer, out);
          if (!sub) return std::nullopt;
          children.push_back(*sub);
        }
        return node.op == QueryOp::Intersection ? out.intersect(std::move(children)) : out.unite(std::move(children));
      }
      case QueryOp::Negation:
        break;
    }
    return std::nullopt;
  }

 private:
  /// n(sub) with `answer` outside sub's answers on the full graph.
  std::optional<NodeRef> ground_negated(NodeRef n, EntityId answer, Query& out) {
    const auto inner = shape_.node(n).children[0];
    for (int attempt = 0; attempt < kNegationTries; ++attempt) {
      const EntityId pivot{static_cast<std::uint32_t>(rng_.index(g_.num_entities()))};
      Query scratch;
      const auto sub = ground(inner, pivot, scratch);
      if (!sub) continue;
      scratch.set_root(*sub);
      const auto members = execute_symbolic(scratch, g_, full_);
      if (members.empty() || members.size() == g_.num_entities()) continue;
      if (std::binary_search(members.begin(), members.end(), answer)) continue;
      return out.negate(copy(scratch, *sub, out));
    }
    return std::nullopt;
  }

  static NodeRef copy(const Query& from, NodeRef n, Query& out) {
    const auto& node = from.node(n);
    switch (node.op) {
      case QueryOp::Anchor:
        return out.anchor(node.entity);
      case QueryOp::Projection:
        return out.project(node.rel, copy(from, node.children[0], out));
      case QueryOp::Negation:
        return out.negate(copy(from, node.children[0], out));
      case QueryOp::Intersection:
      case QueryOp::Union: {
        std::vector<NodeRef> children;
        for (auto c : node.children) children.push_back(copy(from, c, out));
        return node.op == QueryOp::Intersection ? out.intersect(std::move(children)) : out.unite(std::move(children));
      }
    }
    return 0;
  }

  const KnowledgeGraph& g_;
  const Query& shape_;
  SplitMask full_;
  Rng& rng_;
};

}  // namespace

std::vector<QuerySample> sample_queries(const KnowledgeGraph& g, QueryStructure structure, std::size_t n,
                                        Split answer_split, std::uint64_t seed) {
  if (structure == QueryStructure::Other) throw UsageError("cannot sample structure 'other'");
  const auto graphs = answer_graphs(answer_split);
  const Query shape = template_query(structure);
  Rng rng(seed ^ (0xD1B54A32D192ED03ULL * (static_cast<std::uint64_t>(structure) + 1)), Stream::Sampler);

  std::vector<QuerySample> samples;
  samples.reserve(n);
  std::size_t failures = 0;
  while (samples.size() < n) {
    if (failures == kSampleAttempts) {
      throw SamplingError("could not sample a '" + std::string(structure_name(structure)) + "' query with " +
                          split_name(answer_split).data() + " answers after " + std::to_string(kSampleAttempts) +
                          " attempts");
    }
    ++failures;
    if (g.num_entities() == 0) continue;
    const EntityId answer{static_cast<std::uint32_t>(rng.index(g.num_entities()))};
    Query q;
    Grounder grounder(g, shape, graphs.full, rng);
    const auto root = grounder.ground(shape.root(), answer, q);
    if (!root) continue;
    q.set_root(*root);
    auto sample = label_query(q, g, answer_split);
    if (sample.hard.empty()) continue;
    if (sample.easy.size() + sample.hard.size() == g.num_entities()) continue;
    sample.structure = structure;
    samples.push_back(std::move(sample));
    failures = 0;
  }
  return samples;
}

}  // namespace hyq
