#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hyq/graph.hpp"

namespace hyq {

/// Sorted, duplicate-free set of entities.
using EntitySet = std::vector<EntityId>;

enum class QueryOp : std::uint8_t { Anchor, Projection, Intersection, Union, Negation };

/// The 14 benchmark query shapes.
enum class QueryStructure : std::uint8_t {
  P1, P2, P3, I2, I3, PI, IP, U2, UP, IN2, IN3, INP, PIN, PNI, Other
};

inline constexpr std::array<QueryStructure, 14> kAllStructures = {
    QueryStructure::P1, QueryStructure::P2,  QueryStructure::P3,  QueryStructure::I2,  QueryStructure::I3,
    QueryStructure::PI, QueryStructure::IP,  QueryStructure::U2,  QueryStructure::UP,  QueryStructure::IN2,
    QueryStructure::IN3, QueryStructure::INP, QueryStructure::PIN, QueryStructure::PNI};

/// Existential positive first-order shapes (no negation).
inline constexpr std::array<QueryStructure, 9> kEpfoStructures = {
    QueryStructure::P1, QueryStructure::P2, QueryStructure::P3, QueryStructure::I2, QueryStructure::I3,
    QueryStructure::PI, QueryStructure::IP, QueryStructure::U2, QueryStructure::UP};

inline constexpr std::array<QueryStructure, 5> kNegationStructures = {
    QueryStructure::IN2, QueryStructure::IN3, QueryStructure::INP, QueryStructure::PIN, QueryStructure::PNI};

/// Shapes admitted for training; ip, pi, 2u and up are held out.
inline constexpr std::array<QueryStructure, 10> kTrainingStructures = {
    QueryStructure::P1,  QueryStructure::P2,  QueryStructure::P3,  QueryStructure::I2,  QueryStructure::I3,
    QueryStructure::IN2, QueryStructure::IN3, QueryStructure::INP, QueryStructure::PIN, QueryStructure::PNI};

std::string_view structure_name(QueryStructure s);
/// Accepts "1p", "2in", ... ; throws UsageError otherwise.
QueryStructure parse_structure(std::string_view name);
bool is_training_structure(QueryStructure s);
bool is_negation_structure(QueryStructure s);

using NodeRef = std::uint32_t;

struct QueryNode {
  QueryOp op = QueryOp::Anchor;
  EntityId entity{};    // Anchor
  RelationId rel{};     // Projection
  std::vector<NodeRef> children;

  friend bool operator==(const QueryNode&, const QueryNode&) = default;
};

/// A query as a computation DAG. Nodes are stored in construction order, so
/// children always precede their parents; the root is the last node added
/// unless set explicitly.
class Query {
 public:
  NodeRef anchor(EntityId e);
  NodeRef project(RelationId r, NodeRef child);
  NodeRef intersect(std::vector<NodeRef> children);
  NodeRef unite(std::vector<NodeRef> children);
  NodeRef negate(NodeRef child);

  NodeRef root() const;
  void set_root(NodeRef r);
  const QueryNode& node(NodeRef n) const { return nodes_.at(n); }
  const std::vector<QueryNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

  /// Throws ValidationError unless every node is reachable from the root,
  /// leaves are anchors, arities hold and the root is not a negation.
  void validate() const;
  /// Additionally checks all ids against the graph (BoundsError).
  void validate(const KnowledgeGraph& g) const;

  /// Structural equality from the root; node numbering is irrelevant.
  friend bool operator==(const Query& a, const Query& b);

 private:
  NodeRef push(QueryNode n);

  std::vector<QueryNode> nodes_;
  std::optional<NodeRef> root_;
};

/// Matches the shape against the 14 templates, ignoring labels and the order
/// of intersection/union operands.
QueryStructure classify_structure(const Query& q);

/// Canonical shape for a structure; every anchor is entity 0 and every
/// relation is relation 0.
Query template_query(QueryStructure s);

/// Fills a template: anchors[k] labels the k-th anchor node and rels[k] the
/// k-th projection node of template_query(s), in node order.
Query instantiate(QueryStructure s, std::span<const EntityId> anchors, std::span<const RelationId> rels);

/// Parses `(e name)`, `(p rel sub)`, `(i sub sub...)`, `(u sub sub...)` and
/// `(n sub)`. Names containing whitespace, parentheses, quotes or backslashes
/// are written in double quotes with backslash escapes. `~rel` denotes the
/// inverse of `rel`. Every error, unknown names included, is a ParseError
/// carrying the byte offset.
Query parse_query(std::string_view text, const KnowledgeGraph& g);

/// Canonical s-expression: children in stored order, single spaces.
std::string serialize_query(const Query& q, const KnowledgeGraph& g);

struct QuerySample {
  Query query;
  QueryStructure structure = QueryStructure::Other;
  EntitySet easy;
  EntitySet hard;

  /// easy ∪ hard.
  EntitySet answers() const;
};

}  // namespace hyq
