#pragma once

#include <cstdint>
#include <vector>

#include "hyq/graph.hpp"
#include "hyq/query.hpp"

namespace hyq {

inline constexpr std::size_t kSampleAttempts = 100;

/// Observed and full graphs for an answer split: test answers are labelled
/// against train+valid (easy) and all splits (full); valid against train and
/// train+valid; train against the train graph only, so every answer is hard.
struct AnswerGraphs {
  SplitMask full;
  SplitMask observed;
  bool has_observed = true;
};

AnswerGraphs answer_graphs(Split answer_split);

/// Draws `n` samples of one structure. Each attempt walks backwards from a
/// random answer entity over the full graph, grounding the template one
/// relation at a time; negated branches are grounded away from the answer so
/// the negated set is neither empty nor the universe. Attempts whose hard
/// answer set is empty, or whose answer set covers every entity, are
/// rejected. Throws SamplingError after kSampleAttempts consecutive failures.
std::vector<QuerySample> sample_queries(const KnowledgeGraph& g, QueryStructure structure, std::size_t n,
                                        Split answer_split, std::uint64_t seed);

/// Symbolic easy/hard labels for an arbitrary query.
QuerySample label_query(const Query& q, const KnowledgeGraph& g, Split answer_split);

}  // namespace hyq
