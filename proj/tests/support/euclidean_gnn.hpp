#pragma once

// Plain Euclidean counterpart of the projection model: same parameters, no
// exponential or logarithmic maps. Written with explicit loops over edges.

#include <algorithm>
#include <cmath>
#include <vector>

#include "hyq/model.hpp"

namespace hyq::testing {

using Dense = Eigen::MatrixXd;

/// One message-passing layer: relu(mean over in-edges of h_src * q_rel, times W).
inline Dense euclidean_layer(const Dense& h, const EdgeList& edges, const Dense& relations, const Dense& w) {
  Dense sum = Dense::Zero(h.rows(), h.cols());
  std::vector<double> degree(static_cast<std::size_t>(h.rows()), 0.0);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    sum.row(edges.dst[e]) += h.row(edges.src[e]).cwiseProduct(relations.row(edges.rel[e]));
    degree[edges.dst[e]] += 1.0;
  }
  for (Eigen::Index v = 0; v < sum.rows(); ++v) {
    if (degree[static_cast<std::size_t>(v)] > 0) sum.row(v) /= degree[static_cast<std::size_t>(v)];
  }
  return (sum * w).cwiseMax(0.0);
}

inline Dense euclidean_project(const ProjectionModel& model, const Eigen::VectorXd& x, RelationId rel,
                               const EdgeList& edges) {
  const auto& p = model.params();
  const Dense relations = p.at("relations").value;
  Dense h = x * relations.row(index(rel));
  for (std::size_t t = 0; t < model.config().layers; ++t) {
    h = euclidean_layer(h, edges, relations, p.at("weight." + std::to_string(t)).value);
  }
  Dense hidden = h * Dense(p.at("mlp.w1").value);
  hidden.rowwise() += Eigen::RowVectorXd(p.at("mlp.b1").value);
  hidden = hidden.cwiseMax(0.0);
  Dense logits = hidden * Dense(p.at("mlp.w2").value);
  logits.array() += p.at("mlp.b2").value(0, 0);
  return logits.unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });
}

}  // namespace hyq::testing
