#include "hyq/model.hpp"

#include <cmath>

#include "hyq/checkpoint.hpp"
#include "hyq/error.hpp"
#include "hyq/random.hpp"

namespace hyq {

MessageGraph::MessageGraph(EdgeList edges) : edges_(std::move(edges)) {
  const auto nv = static_cast<Eigen::Index>(edges_.num_entities);
  const auto ne = static_cast<Eigen::Index>(edges_.size());
  std::vector<double> in_degree(edges_.num_entities, 0.0);
  for (auto v : edges_.dst) {
    if (v >= edges_.num_entities) throw BoundsError("edge target out of range");
    in_degree[v] += 1.0;
  }
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(edges_.size());
  for (Eigen::Index e = 0; e < ne; ++e) {
    const auto v = edges_.dst[static_cast<std::size_t>(e)];
    entries.emplace_back(static_cast<Eigen::Index>(v), e, 1.0 / in_degree[v]);
  }
  auto m = std::make_shared<ad::SparseMatrix>(nv, ne);
  m->setFromTriplets(entries.begin(), entries.end());
  aggregate_ = std::move(m);
}

namespace {

ad::Matrix uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double bound) {
  ad::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  return m;
}

ad::Matrix normal_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double stddev) {
  ad::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, stddev);
  return m;
}

std::string layer_name(const char* base, std::size_t t) { return std::string(base) + "." + std::to_string(t); }

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

ProjectionModel::ProjectionModel(std::size_t num_entities, std::size_t num_relation_ids, ModelConfig config,
                                 std::uint64_t seed)
    : num_entities_(num_entities), num_relation_ids_(num_relation_ids), config_(config) {
  if (config_.layers < 2) throw ValidationError("model needs at least 2 layers");
  if (config_.dim < 4) throw ValidationError("model dimension must be at least 4");
  const auto d = static_cast<Eigen::Index>(config_.dim);
  const double bound = 1.0 / std::sqrt(static_cast<double>(config_.dim));
  Rng rng(seed, Stream::Init);

  params_.add("relations", normal_matrix(rng, static_cast<Eigen::Index>(num_relation_ids + 1), d,
                                          config_.relation_init_std));
  // softplus(theta) + floor == 1
  const double theta0 = std::log(std::expm1(1.0 - kCurvatureFloor));
  for (std::size_t t = 0; t < config_.layers; ++t) {
    params_.add(layer_name("weight", t), uniform_matrix(rng, d, d, bound));
    params_.add(layer_name("curvature", t), ad::Matrix::Constant(1, 1, theta0));
  }
  params_.add("mlp.w1", uniform_matrix(rng, d, d, bound));
  params_.add("mlp.b1", ad::Matrix::Zero(1, d));
  params_.add("mlp.w2", uniform_matrix(rng, d, 1, bound));
  params_.add("mlp.b2", ad::Matrix::Zero(1, 1));
}

double ProjectionModel::curvature(std::size_t layer) const {
  if (layer >= config_.layers) throw BoundsError("layer index out of range");
  if (frozen_) return (*frozen_)[layer];
  return softplus(params_.at(layer_name("curvature", layer)).value(0, 0)) + kCurvatureFloor;
}

void ProjectionModel::freeze_curvatures(std::vector<double> values) {
  if (values.size() != config_.layers) throw DimensionError("need one curvature per layer");
  for (double c : values) {
    if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("frozen curvature must be positive");
  }
  frozen_ = std::move(values);
  for (std::size_t t = 0; t < config_.layers; ++t) params_.at(layer_name("curvature", t)).trainable = false;
}

ProjectionModel::Bound ProjectionModel::bind(ad::Tape& tape) {
  Bound b;
  b.relations = tape.parameter(params_.at("relations"));
  for (std::size_t t = 0; t < config_.layers; ++t) {
    b.weights.push_back(tape.parameter(params_.at(layer_name("weight", t))));
    if (frozen_) {
      b.curvatures.push_back(tape.constant(ad::Matrix::Constant(1, 1, (*frozen_)[t])));
    } else {
      b.curvatures.push_back(
          ad::add_scalar(ad::softplus(tape.parameter(params_.at(layer_name("curvature", t)))), kCurvatureFloor));
    }
  }
  b.mlp_w1 = tape.parameter(params_.at("mlp.w1"));
  b.mlp_b1 = tape.parameter(params_.at("mlp.b1"));
  b.mlp_w2 = tape.parameter(params_.at("mlp.w2"));
  b.mlp_b2 = tape.parameter(params_.at("mlp.b2"));
  return b;
}

ProjectionModel::Bound ProjectionModel::bind_constant(ad::Tape& tape) const {
  Bound b;
  b.relations = tape.constant(params_.at("relations").value);
  for (std::size_t t = 0; t < config_.layers; ++t) {
    b.weights.push_back(tape.constant(params_.at(layer_name("weight", t)).value));
    b.curvatures.push_back(tape.constant(ad::Matrix::Constant(1, 1, curvature(t))));
  }
  b.mlp_w1 = tape.constant(params_.at("mlp.w1").value);
  b.mlp_b1 = tape.constant(params_.at("mlp.b1").value);
  b.mlp_w2 = tape.constant(params_.at("mlp.w2").value);
  b.mlp_b2 = tape.constant(params_.at("mlp.b2").value);
  return b;
}

void ProjectionModel::check_graph(const MessageGraph& graph) const {
  if (graph.num_entities() != num_entities_) {
    throw ValidationError("graph has " + std::to_string(graph.num_entities()) + " entities, model expects " +
                          std::to_string(num_entities_));
  }
  if (graph.num_relations() != num_relation_ids_ + 1) throw ValidationError("graph relation count does not match model");
}

ad::Tensor ProjectionModel::init_states(const Bound& b, const ad::Tensor& x, RelationId rel) const {
  if (x.rows() != static_cast<Eigen::Index>(num_entities_) || x.cols() != 1) {
    throw DimensionError("input fuzzy set must have one entry per entity");
  }
  if (index(rel) >= num_relation_ids_) throw BoundsError("query relation out of range");
  const std::uint32_t row[] = {index(rel)};
  return ad::matmul(x, ad::gather_rows(b.relations, row));
}

ad::Tensor ProjectionModel::layer_forward(const Bound& b, const ad::Tensor& states, std::size_t t,
                                          const MessageGraph& graph) const {
  if (t >= config_.layers) throw BoundsError("layer index out of range");
  check_graph(graph);
  try {
    const auto& edges = graph.edges();
    const ad::Tensor tangent = ad::logmap0(states, curvature_at(b, t));
    const ad::Tensor messages = ad::mul(ad::gather_rows(tangent, edges.src), ad::gather_rows(b.relations, edges.rel));
    const ad::Tensor aggregated = ad::sparse_dense_matmul(graph.aggregate(), messages);
    const ad::Tensor activated = ad::relu(ad::matmul(aggregated, b.weights[t]));
    const ad::Tensor next_c = curvature_at(b, t + 1);
    return ad::ball_project(ad::expmap0(activated, next_c), next_c);
  } catch (const NumericError& e) {
    throw NumericError("layer " + std::to_string(t) + ": " + e.what());
  }
}

ad::Tensor ProjectionModel::project(const Bound& b, const ad::Tensor& x, RelationId rel,
                                    const MessageGraph& graph) const {
  check_graph(graph);
  const ad::Tensor c0 = curvature_at(b, 0);
  ad::Tensor h = ad::ball_project(ad::expmap0(init_states(b, x, rel), c0), c0);
  for (std::size_t t = 0; t < config_.layers; ++t) h = layer_forward(b, h, t, graph);
  const ad::Tensor features = ad::logmap0(h, curvature_at(b, config_.layers - 1));
  const ad::Tensor hidden = ad::relu(ad::add_row(ad::matmul(features, b.mlp_w1), b.mlp_b1));
  const ad::Tensor logits = ad::add_row(ad::matmul(hidden, b.mlp_w2), b.mlp_b2);
  return ad::sigmoid(logits);
}

FuzzySetd ProjectionModel::project(const FuzzySetd& x, RelationId rel, const MessageGraph& graph) const {
  ad::Tape tape;
  const Bound b = bind_constant(tape);
  const ad::Tensor out = project(b, tape.constant(ad::Matrix(x)), rel, graph);
  return out.value().col(0);
}

nlohmann::json ProjectionModel::hyperparameters() const {
  nlohmann::json j = {{"dim", config_.dim},
                      {"layers", config_.layers},
                      {"relation_init_std", config_.relation_init_std},
                      {"num_entities", num_entities_},
                      {"num_relation_ids", num_relation_ids_}};
  if (frozen_) j["frozen_curvatures"] = *frozen_;
  return j;
}

void ProjectionModel::save(const std::filesystem::path& path) const {
  ad::save_checkpoint(path, params_, {{"model", hyperparameters()}});
}

ProjectionModel ProjectionModel::load(const std::filesystem::path& path) {
  const auto ckpt = ad::read_checkpoint(path);
  if (!ckpt.meta.contains("model")) throw ValidationError("checkpoint has no model hyperparameters");
  const auto& h = ckpt.meta.at("model");
  ModelConfig config;
  config.dim = h.at("dim").get<std::size_t>();
  config.layers = h.at("layers").get<std::size_t>();
  config.relation_init_std = h.value("relation_init_std", config.relation_init_std);
  ProjectionModel model(h.at("num_entities").get<std::size_t>(), h.at("num_relation_ids").get<std::size_t>(), config,
                        0);
  ad::load_into(model.params_, ckpt);
  if (h.contains("frozen_curvatures")) model.freeze_curvatures(h.at("frozen_curvatures").get<std::vector<double>>());
  return model;
}

}  // namespace hyq
