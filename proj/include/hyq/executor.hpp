#pragma once

#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyq/autodiff.hpp"
#include "hyq/fuzzy.hpp"
#include "hyq/graph.hpp"
#include "hyq/model.hpp"
#include "hyq/query.hpp"

namespace hyq {

/// Decision boundary for turning a fuzzy answer into an entity set.
inline constexpr double kAnswerThreshold = 0.5;

namespace ad {

// Product-logic connectives on the tape. Outputs are clamped into [0, 1] with
// a pass-through gradient.
Tensor conjunction(const Tensor& x, const Tensor& y);
Tensor disjunction(const Tensor& x, const Tensor& y);
Tensor negation(const Tensor& x);

}  // namespace ad

/// Exact evaluation by set traversal over the masked splits. When `trace` is
/// given it receives one entry per query node (unreachable nodes stay empty).
EntitySet execute_symbolic(const Query& q, const KnowledgeGraph& g, SplitMask mask,
                           std::vector<EntitySet>* trace = nullptr);

/// Maps an input fuzzy set (|V| x 1) through one relation.
using TensorProjector = std::function<ad::Tensor(const ad::Tensor& x, RelationId rel)>;

/// Fuzzy evaluation on a tape: anchors become one-hot columns, projections go
/// through `project`, and the connectives are product logic. Shared nodes are
/// evaluated once.
ad::Tensor execute_fuzzy(const Query& q, ad::Tape& tape, std::size_t num_entities, const TensorProjector& project,
                         std::vector<ad::Tensor>* trace = nullptr);

/// Neural evaluation with the learned projection; `b` comes from model.bind().
ad::Tensor execute_neural(const Query& q, ad::Tape& tape, const ProjectionModel& model,
                          const ProjectionModel::Bound& b, const MessageGraph& graph,
                          std::vector<ad::Tensor>* trace = nullptr);

/// Inference wrapper: one tape, constant parameters.
FuzzySetd execute_neural(const Query& q, const ProjectionModel& model, const MessageGraph& graph,
                         std::vector<FuzzySetd>* trace = nullptr);

/// Fuzzy evaluation where each projection is the exact adjacency indicator
/// y_t = min(1, Σ_h x_h [h r t]) over the masked splits.
FuzzySetd execute_crisp(const Query& q, const KnowledgeGraph& g, SplitMask mask,
                        std::vector<FuzzySetd>* trace = nullptr);

/// Entities whose score is strictly above `threshold`.
EntitySet threshold_answers(const FuzzySetd& scores, double threshold = kAnswerThreshold);

/// {"nodes": [{"id", "op", "label", "children", "members"}...]}; fuzzy members
/// are listed as [entity, probability] pairs above `min_probability`.
nlohmann::ordered_json trace_to_json(const Query& q, const KnowledgeGraph& g, const std::vector<FuzzySetd>& trace,
                                     double min_probability = 1e-3);

}  // namespace hyq
