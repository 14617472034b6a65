#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyq/autodiff.hpp"
#include "hyq/fuzzy.hpp"
#include "hyq/query.hpp"

namespace hyq {

/// Probabilities are clamped into [kProbabilityClamp, 1 - kProbabilityClamp]
/// before taking logs.
inline constexpr double kProbabilityClamp = 1e-7;

/// L = -(1/|A|) Σ_{a∈A} log p_a - (1/|V\A|) Σ_{a'∉A} log(1 - p_a').
/// Throws ValidationError when A is empty or A = V.
double bce_loss(const FuzzySetd& pred, const EntitySet& answers);
ad::Tensor bce_loss(const ad::Tensor& pred, const EntitySet& answers);

/// 1 + #{non-answers scoring above s_a} + floor(#{non-answers tied with s_a} / 2).
/// `all_answers` must be sorted and contain `hard_answer` (UsageError otherwise).
std::size_t filtered_rank(const FuzzySetd& scores, EntityId hard_answer, const EntitySet& all_answers);

enum class CardinalityMode { Sum, Count };

/// Σ_v s_v [s_v > threshold], or the number of such entities in Count mode.
double predict_cardinality(const FuzzySetd& scores, double threshold = 0.5,
                           CardinalityMode mode = CardinalityMode::Sum);

/// Fractional ranks, 1-based; tied values share their average rank.
std::vector<double> average_ranks(std::span<const double> xs);

/// Pearson correlation of average ranks. Throws ValidationError for lengths
/// below 2, unequal lengths or a constant sequence.
double spearman(std::span<const double> xs, std::span<const double> ys);

double mean_reciprocal_rank(std::span<const std::size_t> ranks);
double hits_at(std::span<const std::size_t> ranks, std::size_t k);

/// E[1/rank] for a scorer whose scores are i.i.d. continuous: each hard answer
/// competes with |V| - |answers| non-answers, so its rank is uniform on
/// 1..N+1 and E[1/rank] = H_{N+1} / (N+1). Averaged over (query, hard answer).
double random_scorer_mrr(std::span<const QuerySample> samples, std::size_t num_entities);

struct AnswerRank {
  std::size_t query = 0;
  QueryStructure structure = QueryStructure::Other;
  EntityId answer{};
  std::size_t rank = 0;
};

struct StructureMetrics {
  std::size_t queries = 0;
  std::size_t answers = 0;
  double mrr = 0.0;
  std::map<std::size_t, double> hits;
  /// Spearman ρ of predicted vs true cardinality; empty when undefined.
  std::optional<double> cardinality_spearman;
};

struct RankingReport {
  std::map<QueryStructure, StructureMetrics> by_structure;
  std::vector<AnswerRank> ranks;
  std::optional<double> avg_p_mrr, avg_n_mrr;
  std::vector<std::string> warnings;

  nlohmann::ordered_json to_json() const;
  /// query<TAB>structure<TAB>entity<TAB>rank, with a header line.
  std::string ranks_tsv(const KnowledgeGraph& g) const;
};

struct EvalOptions {
  std::vector<std::size_t> ks = {1, 3, 10};
  double cardinality_threshold = 0.5;
  CardinalityMode cardinality_mode = CardinalityMode::Sum;
  /// Scoring runs on this many threads; results do not depend on it.
  std::size_t threads = 1;
};

using Scorer = std::function<FuzzySetd(const Query&)>;

/// Scores every sample once and ranks each hard answer among non-answers.
/// Structures absent from `samples` are left out of the report; those of the
/// 14 benchmark shapes are named in `warnings`.
RankingReport evaluate(std::span<const QuerySample> samples, const Scorer& scorer, const EvalOptions& options = {});

}  // namespace hyq
