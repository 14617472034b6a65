#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyq/autodiff.hpp"
#include "hyq/fuzzy.hpp"
#include "hyq/graph.hpp"

namespace hyq {

/// Edge structure consumed by message passing: per-edge source and relation
/// plus the |V| x |E| aggregation matrix with entry 1/in-degree(v) at
/// (v, e) for every edge e into v (self-loops count towards the degree).
class MessageGraph {
 public:
  explicit MessageGraph(EdgeList edges);

  std::size_t num_entities() const { return edges_.num_entities; }
  std::size_t num_relations() const { return edges_.num_relations; }
  const EdgeList& edges() const { return edges_; }
  const std::shared_ptr<const ad::SparseMatrix>& aggregate() const { return aggregate_; }

 private:
  EdgeList edges_;
  std::shared_ptr<const ad::SparseMatrix> aggregate_;
};

struct ModelConfig {
  std::size_t dim = 32;
  std::size_t layers = 4;
  double relation_init_std = 0.1;
};

/// Curvature c_t = softplus(theta_t) + kCurvatureFloor.
inline constexpr double kCurvatureFloor = 1e-4;

/// Hyperbolic relation-projection GNN. Layer t reads its input states on the
/// ball of curvature c_t and writes its output at c_{t+1} (the last layer
/// writes at its own curvature).
///
///   h0      = exp0(x ⊗ q_rel; c_0)
///   U       = log0(h; c_t)
///   M_v     = (1/deg v) Σ_{(z,r,v)} U_z ⊙ q_r        (inverse edges and self-loops included)
///   h'      = project(exp0(relu(M W_t); c_{t+1}))
///   P_q(x)  = sigmoid(f(log0(h_T; c_{T-1})))         f: d -> d -> 1 with ReLU
class ProjectionModel {
 public:
  /// Parameter leaves for one tape.
  struct Bound {
    ad::Tensor relations;
    std::vector<ad::Tensor> weights;
    std::vector<ad::Tensor> curvatures;
    ad::Tensor mlp_w1, mlp_b1, mlp_w2, mlp_b2;
  };

  ProjectionModel(std::size_t num_entities, std::size_t num_relation_ids, ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  std::size_t num_entities() const { return num_entities_; }
  /// 2|R|; the embedding table has one more row for the self-loop.
  std::size_t num_relation_ids() const { return num_relation_ids_; }

  ad::ParameterSet& params() { return params_; }
  const ad::ParameterSet& params() const { return params_; }

  double curvature(std::size_t layer) const;
  /// Pins every c_t to the given values (bypassing the softplus floor) and
  /// stops training the curvature parameters.
  void freeze_curvatures(std::vector<double> values);
  const std::optional<std::vector<double>>& frozen_curvatures() const { return frozen_; }

  /// Traced leaves; gradients reach params() on backward.
  Bound bind(ad::Tape& tape);
  /// Constant leaves for inference.
  Bound bind_constant(ad::Tape& tape) const;

  /// Row v = x_v * q_rel.
  ad::Tensor init_states(const Bound& b, const ad::Tensor& x, RelationId rel) const;
  /// One message-passing layer on ball states (input at c_t).
  ad::Tensor layer_forward(const Bound& b, const ad::Tensor& states, std::size_t t, const MessageGraph& graph) const;
  ad::Tensor project(const Bound& b, const ad::Tensor& x, RelationId rel, const MessageGraph& graph) const;

  /// Inference convenience on plain vectors.
  FuzzySetd project(const FuzzySetd& x, RelationId rel, const MessageGraph& graph) const;

  nlohmann::json hyperparameters() const;
  void save(const std::filesystem::path& path) const;
  static ProjectionModel load(const std::filesystem::path& path);

 private:
  void check_graph(const MessageGraph& graph) const;
  ad::Tensor curvature_at(const Bound& b, std::size_t layer) const {
    return b.curvatures[std::min(layer, config_.layers - 1)];
  }

  std::size_t num_entities_;
  std::size_t num_relation_ids_;
  ModelConfig config_;
  ad::ParameterSet params_;
  std::optional<std::vector<double>> frozen_;
};

}  // namespace hyq
