#include "hyq/executor.hpp"

#include <algorithm>
#include <iterator>

#include "hyq/error.hpp"

namespace hyq {

namespace ad {

Tensor conjunction(const Tensor& x, const Tensor& y) { return clamp_unit(mul(x, y)); }

Tensor disjunction(const Tensor& x, const Tensor& y) { return clamp_unit(sub(add(x, y), mul(x, y))); }

Tensor negation(const Tensor& x) { return clamp_unit(add_scalar(scale(x, -1.0), 1.0)); }

}  // namespace ad

namespace {

void validate_for(const Query& q, const KnowledgeGraph& g) {
  try {
    q.validate(g);
  } catch (const BoundsError& e) {
    throw ValidationError(e.what());
  }
}

/// Nodes reachable from the root; node order is already a post-order.
std::vector<bool> reachable(const Query& q) {
  std::vector<bool> live(q.size(), false);
  live[q.root()] = true;
  for (std::size_t i = q.size(); i-- > 0;) {
    if (!live[i]) continue;
    for (auto c : q.node(static_cast<NodeRef>(i)).children) live[c] = true;
  }
  return live;
}

EntitySet complement(const EntitySet& s, std::size_t n) {
  EntitySet out;
  out.reserve(n - s.size());
  auto it = s.begin();
  for (std::uint32_t v = 0; v < n; ++v) {
    if (it != s.end() && index(*it) == v) {
      ++it;
    } else {
      out.push_back(EntityId{v});
    }
  }
  return out;
}

}  // namespace

EntitySet execute_symbolic(const Query& q, const KnowledgeGraph& g, SplitMask mask, std::vector<EntitySet>* trace) {
  validate_for(q, g);
  const auto live = reachable(q);
  std::vector<EntitySet> values(q.size());
  std::vector<char> seen(g.num_entities(), 0);
  constexpr std::array<Split, 3> kSplits = {Split::Train, Split::Valid, Split::Test};

  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!live[i]) continue;
    const auto& node = q.node(static_cast<NodeRef>(i));
    auto& out = values[i];
    switch (node.op) {
      case QueryOp::Anchor:
        out = {node.entity};
        break;
      case QueryOp::Projection: {
        for (auto h : values[node.children[0]]) {
          for (auto s : kSplits) {
            if (!mask.contains(s)) continue;
            for (auto t : g.neighbors(h, node.rel, s)) {
              if (!seen[index(t)]) {
                seen[index(t)] = 1;
                out.push_back(t);
              }
            }
          }
        }
        for (auto t : out) seen[index(t)] = 0;
        std::sort(out.begin(), out.end());
        break;
      }
      case QueryOp::Intersection: {
        out = values[node.children[0]];
        for (std::size_t k = 1; k < node.children.size(); ++k) {
          EntitySet next;
          const auto& other = values[node.children[k]];
          std::set_intersection(out.begin(), out.end(), other.begin(), other.end(), std::back_inserter(next));
          out = std::move(next);
        }
        break;
      }
      case QueryOp::Union: {
        out = values[node.children[0]];
        for (std::size_t k = 1; k < node.children.size(); ++k) {
          EntitySet next;
          const auto& other = values[node.children[k]];
          std::set_union(out.begin(), out.end(), other.begin(), other.end(), std::back_inserter(next));
          out = std::move(next);
        }
        break;
      }
      case QueryOp::Negation:
        out = complement(values[node.children[0]], g.num_entities());
        break;
    }
  }
  EntitySet result = values[q.root()];
  if (trace) *trace = std::move(values);
  return result;
}

ad::Tensor execute_fuzzy(const Query& q, ad::Tape& tape, std::size_t num_entities, const TensorProjector& project,
                         std::vector<ad::Tensor>* trace) {
  q.validate();
  const auto live = reachable(q);
  std::vector<ad::Tensor> values(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!live[i]) continue;
    const auto& node = q.node(static_cast<NodeRef>(i));
    switch (node.op) {
      case QueryOp::Anchor: {
        if (index(node.entity) >= num_entities) throw ValidationError("anchor entity out of range");
        ad::Matrix onehot = ad::Matrix::Zero(static_cast<Eigen::Index>(num_entities), 1);
        onehot(index(node.entity), 0) = 1.0;
        values[i] = tape.constant(std::move(onehot));
        break;
      }
      case QueryOp::Projection:
        values[i] = project(values[node.children[0]], node.rel);
        break;
      case QueryOp::Intersection:
        values[i] = values[node.children[0]];
        for (std::size_t k = 1; k < node.children.size(); ++k) {
          values[i] = ad::conjunction(values[i], values[node.children[k]]);
        }
        break;
      case QueryOp::Union:
        values[i] = values[node.children[0]];
        for (std::size_t k = 1; k < node.children.size(); ++k) {
          values[i] = ad::disjunction(values[i], values[node.children[k]]);
        }
        break;
      case QueryOp::Negation:
        values[i] = ad::negation(values[node.children[0]]);
        break;
    }
  }
  ad::Tensor result = values[q.root()];
  if (trace) *trace = std::move(values);
  return result;
}

ad::Tensor execute_neural(const Query& q, ad::Tape& tape, const ProjectionModel& model,
                          const ProjectionModel::Bound& b, const MessageGraph& graph,
                          std::vector<ad::Tensor>* trace) {
  if (graph.num_entities() != model.num_entities()) {
    throw ValidationError("model expects " + std::to_string(model.num_entities()) + " entities, graph has " +
                          std::to_string(graph.num_entities()));
  }
  for (const auto& node : q.nodes()) {
    if (node.op == QueryOp::Projection && index(node.rel) >= model.num_relation_ids()) {
      throw ValidationError("query relation out of range");
    }
  }
  const TensorProjector project = [&](const ad::Tensor& x, RelationId rel) {
    return model.project(b, x, rel, graph);
  };
  return execute_fuzzy(q, tape, model.num_entities(), project, trace);
}

FuzzySetd execute_neural(const Query& q, const ProjectionModel& model, const MessageGraph& graph,
                         std::vector<FuzzySetd>* trace) {
  ad::Tape tape;
  const auto b = model.bind_constant(tape);
  std::vector<ad::Tensor> nodes;
  const ad::Tensor out = execute_neural(q, tape, model, b, graph, trace ? &nodes : nullptr);
  if (trace) {
    trace->assign(nodes.size(), FuzzySetd());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].valid()) (*trace)[i] = nodes[i].value().col(0);
    }
  }
  return out.value().col(0);
}

FuzzySetd execute_crisp(const Query& q, const KnowledgeGraph& g, SplitMask mask, std::vector<FuzzySetd>* trace) {
  validate_for(q, g);
  const auto n = static_cast<Eigen::Index>(g.num_entities());
  ad::Tape tape;
  const TensorProjector project = [&](const ad::Tensor& x, RelationId rel) {
    ad::Matrix y = ad::Matrix::Zero(n, 1);
    for (std::uint32_t h = 0; h < g.num_entities(); ++h) {
      const double xh = x.value()(h, 0);
      if (xh == 0.0) continue;
      for (auto t : g.neighbors(EntityId{h}, rel, mask)) y(index(t), 0) += xh;
    }
    return tape.constant(y.cwiseMin(1.0));
  };
  std::vector<ad::Tensor> nodes;
  const ad::Tensor out = execute_fuzzy(q, tape, g.num_entities(), project, trace ? &nodes : nullptr);
  if (trace) {
    trace->assign(nodes.size(), FuzzySetd());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].valid()) (*trace)[i] = nodes[i].value().col(0);
    }
  }
  return out.value().col(0);
}

EntitySet threshold_answers(const FuzzySetd& scores, double threshold) {
  EntitySet out;
  for (Eigen::Index v = 0; v < scores.size(); ++v) {
    if (scores[v] > threshold) out.push_back(EntityId{static_cast<std::uint32_t>(v)});
  }
  return out;
}

nlohmann::ordered_json trace_to_json(const Query& q, const KnowledgeGraph& g, const std::vector<FuzzySetd>& trace,
                                     double min_probability) {
  static constexpr const char* kOpNames[] = {"anchor", "projection", "intersection", "union", "negation"};
  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < q.size(); ++i) {
    const auto& node = q.node(static_cast<NodeRef>(i));
    nlohmann::ordered_json j;
    j["id"] = i;
    j["op"] = kOpNames[static_cast<int>(node.op)];
    if (node.op == QueryOp::Anchor) j["label"] = g.entity_name(node.entity);
    if (node.op == QueryOp::Projection) j["label"] = g.relation_name(node.rel);
    j["children"] = node.children;
    nlohmann::ordered_json members = nlohmann::ordered_json::array();
    if (i < trace.size()) {
      const auto& x = trace[i];
      for (Eigen::Index v = 0; v < x.size(); ++v) {
        if (x[v] > min_probability) {
          members.push_back({g.entity_name(EntityId{static_cast<std::uint32_t>(v)}), x[v]});
        }
      }
    }
    j["members"] = std::move(members);
    nodes.push_back(std::move(j));
  }
  return {{"root", q.root()}, {"nodes", std::move(nodes)}};
}

}  // namespace hyq
