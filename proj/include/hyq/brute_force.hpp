#pragma once

#include "hyq/graph.hpp"
#include "hyq/query.hpp"

namespace hyq {

inline constexpr std::size_t kBruteForceMaxEntities = 64;
inline constexpr std::size_t kBruteForceMaxVariables = 3;

/// Answers by exhaustive enumeration: for every candidate y, the formula is
/// checked by looping over all assignments of the existential variables and
/// testing edge membership against the raw triple list. Refuses graphs with
/// more than 64 entities or queries with more than 3 bound variables.
EntitySet brute_force_answers(const Query& q, const KnowledgeGraph& g, SplitMask mask);

/// Existential variables of the formula: one per projection whose operand is
/// not a constant.
std::size_t bound_variables(const Query& q);

}  // namespace hyq
