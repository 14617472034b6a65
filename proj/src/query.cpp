#include "hyq/query.hpp"

#include <algorithm>
#include <functional>

#include "hyq/error.hpp"

namespace hyq {

namespace {

constexpr std::array<std::string_view, 14> kStructureNames = {
    "1p", "2p", "3p", "2i", "3i", "pi", "ip", "2u", "up", "2in", "3in", "inp", "pin", "pni"};

}  // namespace

std::string_view structure_name(QueryStructure s) {
  const auto i = static_cast<std::size_t>(s);
  return i < kStructureNames.size() ? kStructureNames[i] : "other";
}

QueryStructure parse_structure(std::string_view name) {
  for (std::size_t i = 0; i < kStructureNames.size(); ++i) {
    if (kStructureNames[i] == name) return static_cast<QueryStructure>(i);
  }
  throw UsageError("unknown query structure '" + std::string(name) + "'");
}

bool is_training_structure(QueryStructure s) {
  return std::find(kTrainingStructures.begin(), kTrainingStructures.end(), s) != kTrainingStructures.end();
}

bool is_negation_structure(QueryStructure s) {
  return std::find(kNegationStructures.begin(), kNegationStructures.end(), s) != kNegationStructures.end();
}

// ---------------------------------------------------------------------------

NodeRef Query::push(QueryNode n) {
  for (auto c : n.children) {
    if (c >= nodes_.size()) throw ValidationError("query child reference out of range");
  }
  nodes_.push_back(std::move(n));
  return static_cast<NodeRef>(nodes_.size() - 1);
}

NodeRef Query::anchor(EntityId e) { return push({QueryOp::Anchor, e, {}, {}}); }

NodeRef Query::project(RelationId r, NodeRef child) { return push({QueryOp::Projection, {}, r, {child}}); }

NodeRef Query::intersect(std::vector<NodeRef> children) {
  return push({QueryOp::Intersection, {}, {}, std::move(children)});
}

NodeRef Query::unite(std::vector<NodeRef> children) { return push({QueryOp::Union, {}, {}, std::move(children)}); }

NodeRef Query::negate(NodeRef child) { return push({QueryOp::Negation, {}, {}, {child}}); }

NodeRef Query::root() const {
  if (nodes_.empty()) throw ValidationError("empty query");
  return root_.value_or(static_cast<NodeRef>(nodes_.size() - 1));
}

void Query::set_root(NodeRef r) {
  if (r >= nodes_.size()) throw ValidationError("query root out of range");
  root_ = r;
}

void Query::validate() const {
  if (nodes_.empty()) throw ValidationError("empty query");
  std::vector<bool> reached(nodes_.size(), false);
  std::vector<NodeRef> stack = {root()};
  while (!stack.empty()) {
    const auto n = stack.back();
    stack.pop_back();
    if (reached[n]) continue;
    reached[n] = true;
    const auto& node = nodes_[n];
    const auto arity = node.children.size();
    switch (node.op) {
      case QueryOp::Anchor:
        if (arity != 0) throw ValidationError("anchor with children");
        break;
      case QueryOp::Projection:
      case QueryOp::Negation:
        if (arity != 1) throw ValidationError("projection/negation needs exactly one operand");
        break;
      case QueryOp::Intersection:
      case QueryOp::Union:
        if (arity < 2) throw ValidationError("intersection/union needs at least two operands");
        break;
    }
    for (auto c : node.children) {
      if (c >= n) throw ValidationError("query node refers forward; the graph must be acyclic");
      stack.push_back(c);
    }
  }
  if (std::find(reached.begin(), reached.end(), false) != reached.end()) {
    throw ValidationError("query has nodes unreachable from the root");
  }
  if (nodes_[root()].op == QueryOp::Negation) throw ValidationError("negation cannot be the query root");
}

void Query::validate(const KnowledgeGraph& g) const {
  validate();
  for (const auto& n : nodes_) {
    if (n.op == QueryOp::Anchor) g.check(n.entity);
    if (n.op == QueryOp::Projection) g.check(n.rel);
  }
}

bool operator==(const Query& a, const Query& b) {
  if (a.empty() || b.empty()) return a.empty() && b.empty();
  std::function<bool(NodeRef, NodeRef)> same = [&](NodeRef x, NodeRef y) {
    const auto& nx = a.node(x);
    const auto& ny = b.node(y);
    if (nx.op != ny.op || nx.children.size() != ny.children.size()) return false;
    if (nx.op == QueryOp::Anchor && nx.entity != ny.entity) return false;
    if (nx.op == QueryOp::Projection && nx.rel != ny.rel) return false;
    for (std::size_t i = 0; i < nx.children.size(); ++i) {
      if (!same(nx.children[i], ny.children[i])) return false;
    }
    return true;
  };
  return same(a.root(), b.root());
}

// ---------------------------------------------------------------------------

namespace {

std::string shape_signature(const Query& q, NodeRef n) {
  const auto& node = q.node(n);
  switch (node.op) {
    case QueryOp::Anchor: return "e";
    case QueryOp::Projection: return "p(" + shape_signature(q, node.children[0]) + ")";
    case QueryOp::Negation: return "n(" + shape_signature(q, node.children[0]) + ")";
    case QueryOp::Intersection:
    case QueryOp::Union: {
      std::vector<std::string> parts;
      for (auto c : node.children) parts.push_back(shape_signature(q, c));
      std::sort(parts.begin(), parts.end());
      std::string out = node.op == QueryOp::Intersection ? "i(" : "u(";
      for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
      return out + ")";
    }
  }
  return "?";
}

}  // namespace

Query template_query(QueryStructure s) {
  Query q;
  const EntityId e{0};
  const RelationId r{0};
  auto chain = [&](int hops) {
    NodeRef n = q.anchor(e);
    for (int k = 0; k < hops; ++k) n = q.project(r, n);
    return n;
  };
  switch (s) {
    case QueryStructure::P1: chain(1); break;
    case QueryStructure::P2: chain(2); break;
    case QueryStructure::P3: chain(3); break;
    case QueryStructure::I2: {
      auto a = chain(1);
      auto b = chain(1);
      q.intersect({a, b});
      break;
    }
    case QueryStructure::I3: {
      auto a = chain(1);
      auto b = chain(1);
      auto c = chain(1);
      q.intersect({a, b, c});
      break;
    }
    case QueryStructure::PI: {
      auto a = chain(2);
      auto b = chain(1);
      q.intersect({a, b});
      break;
    }
    case QueryStructure::IP: {
      auto a = chain(1);
      auto b = chain(1);
      q.project(r, q.intersect({a, b}));
      break;
    }
    case QueryStructure::U2: {
      auto a = chain(1);
      auto b = chain(1);
      q.unite({a, b});
      break;
    }
    case QueryStructure::UP: {
      auto a = chain(1);
      auto b = chain(1);
      q.project(r, q.unite({a, b}));
      break;
    }
    case QueryStructure::IN2: {
      auto a = chain(1);
      auto b = q.negate(chain(1));
      q.intersect({a, b});
      break;
    }
    case QueryStructure::IN3: {
      auto a = chain(1);
      auto b = chain(1);
      auto c = q.negate(chain(1));
      q.intersect({a, b, c});
      break;
    }
    case QueryStructure::INP: {
      auto a = chain(1);
      auto b = q.negate(chain(1));
      q.project(r, q.intersect({a, b}));
      break;
    }
    case QueryStructure::PIN: {
      auto a = chain(2);
      auto b = q.negate(chain(1));
      q.intersect({a, b});
      break;
    }
    case QueryStructure::PNI: {
      auto a = q.negate(chain(2));
      auto b = chain(1);
      q.intersect({a, b});
      break;
    }
    case QueryStructure::Other: throw UsageError("no template for structure 'other'");
  }
  return q;
}

Query instantiate(QueryStructure s, std::span<const EntityId> anchors, std::span<const RelationId> rels) {
  const Query shape = template_query(s);
  Query q;
  std::size_t next_anchor = 0, next_rel = 0;
  for (const auto& n : shape.nodes()) {
    switch (n.op) {
      case QueryOp::Anchor:
        if (next_anchor >= anchors.size()) throw UsageError("instantiate: too few anchors");
        q.anchor(anchors[next_anchor++]);
        break;
      case QueryOp::Projection:
        if (next_rel >= rels.size()) throw UsageError("instantiate: too few relations");
        q.project(rels[next_rel++], n.children[0]);
        break;
      case QueryOp::Intersection: q.intersect(n.children); break;
      case QueryOp::Union: q.unite(n.children); break;
      case QueryOp::Negation: q.negate(n.children[0]); break;
    }
  }
  if (next_anchor != anchors.size() || next_rel != rels.size()) {
    throw UsageError("instantiate: label count does not match the template");
  }
  return q;
}

QueryStructure classify_structure(const Query& q) {
  static const std::vector<std::string> signatures = [] {
    std::vector<std::string> out;
    for (auto s : kAllStructures) {
      const auto t = template_query(s);
      out.push_back(shape_signature(t, t.root()));
    }
    return out;
  }();
  if (q.empty()) return QueryStructure::Other;
  const auto sig = shape_signature(q, q.root());
  for (std::size_t i = 0; i < signatures.size(); ++i) {
    if (signatures[i] == sig) return kAllStructures[i];
  }
  return QueryStructure::Other;
}

EntitySet QuerySample::answers() const {
  EntitySet out;
  std::set_union(easy.begin(), easy.end(), hard.begin(), hard.end(), std::back_inserter(out));
  return out;
}

}  // namespace hyq
