#include "hyq/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <tuple>

#include "hyq/error.hpp"
#include "hyq/executor.hpp"
#include "hyq/metrics.hpp"
#include "hyq/random.hpp"

namespace hyq {

namespace {

using EdgeKey = std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>;  // src, rel, dst

/// Edges from each anchor straight to the answers of its projection.
std::set<EdgeKey> droppable_edges(const Query& q, const KnowledgeGraph& g, SplitMask mask) {
  std::set<EdgeKey> out;
  for (const auto& node : q.nodes()) {
    if (node.op != QueryOp::Projection) continue;
    const auto& child = q.node(node.children[0]);
    if (child.op != QueryOp::Anchor) continue;
    for (auto t : g.neighbors(child.entity, node.rel, mask)) {
      out.insert({index(child.entity), index(node.rel), index(t)});
      out.insert({index(t), index(inverse(node.rel)), index(child.entity)});
    }
  }
  return out;
}

EdgeList without(const EdgeList& edges, const std::set<EdgeKey>& dropped) {
  EdgeList out;
  out.num_entities = edges.num_entities;
  out.num_relations = edges.num_relations;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (dropped.contains({edges.src[e], edges.rel[e], edges.dst[e]})) continue;
    out.src.push_back(edges.src[e]);
    out.dst.push_back(edges.dst[e]);
    out.rel.push_back(edges.rel[e]);
  }
  return out;
}

std::string describe(std::size_t epoch, std::size_t batch, std::size_t sample) {
  return "epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) + ", sample " + std::to_string(sample);
}

}  // namespace

TrainResult train(const KnowledgeGraph& g, const std::vector<QuerySample>& samples, const TrainConfig& config,
                  ProjectionModel& model, const EpochCallback& on_epoch) {
  if (config.batch_size == 0) throw ValidationError("batch size must be at least 1");
  if (!(config.learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  if (config.traversal_dropout < 0.0 || config.traversal_dropout > 1.0) {
    throw ValidationError("traversal dropout must lie in [0, 1]");
  }
  if (samples.empty()) throw ValidationError("no training samples");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!is_training_structure(samples[i].structure)) {
      throw ValidationError("sample " + std::to_string(i) + " has structure '" +
                            std::string(structure_name(samples[i].structure)) + "', which is not a training type");
    }
  }
  if (model.num_entities() != g.num_entities() || model.num_relation_ids() != g.num_relation_ids()) {
    throw ValidationError("model does not match the graph");
  }
  if (!config.out_dir.empty()) std::filesystem::create_directories(config.out_dir);

  const EdgeList base_edges = adjacency_matrix(g, config.edges);
  const MessageGraph base_graph(base_edges);
  std::vector<EntitySet> targets;
  for (const auto& s : samples) targets.push_back(s.answers());

  Rng shuffle_rng(config.seed, Stream::Shuffle);
  Rng dropout_rng(config.seed, Stream::Dropout);
  const ad::AdamConfig adam{config.learning_rate};

  TrainResult result;
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  bool done = config.max_steps > 0 && result.total_steps >= config.max_steps;
  for (std::size_t epoch = 1; epoch <= config.epochs && !done; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0, batch = 0; start < order.size(); start += config.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double weight = 1.0 / static_cast<double>(end - start);
      double batch_loss = 0.0;
      model.params().zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        const auto i = order[k];
        std::optional<MessageGraph> dropped_graph;
        if (config.traversal_dropout > 0.0) {
          std::set<EdgeKey> dropped;
          for (const auto& e : droppable_edges(samples[i].query, g, config.edges)) {
            if (dropout_rng.bernoulli(config.traversal_dropout)) dropped.insert(e);
          }
          if (!dropped.empty()) dropped_graph.emplace(without(base_edges, dropped));
        }
        const MessageGraph& graph = dropped_graph ? *dropped_graph : base_graph;
        try {
          ad::Tape tape;
          const auto b = model.bind(tape);
          const auto pred = execute_neural(samples[i].query, tape, model, b, graph);
          const auto loss = bce_loss(pred, targets[i]);
          const double value = loss.value()(0, 0);
          if (!std::isfinite(value)) throw NumericError("non-finite loss");
          batch_loss += weight * value;
          tape.backward(ad::scale(loss, weight));
        } catch (const NumericError& e) {
          throw NumericError(std::string(e.what()) + " (" + describe(epoch, batch, i) + ")");
        }
      }
      ad::adam_step(model.params(), adam);
      ++result.total_steps;
      result.steps.push_back({epoch, result.total_steps, batch_loss});
      epoch_total += batch_loss;
      ++batches;
      if (config.max_steps > 0 && result.total_steps >= config.max_steps) {
        done = true;
        break;
      }
    }
    const double mean = epoch_total / static_cast<double>(batches);
    result.epoch_loss.push_back(mean);
    if (!config.out_dir.empty()) {
      model.save(config.out_dir / ("epoch-" + std::to_string(epoch) + ".hyqr"));
      write_loss_csv(config.out_dir / "loss.csv", result.steps);
    }
    if (on_epoch) on_epoch(epoch, mean);
  }
  return result;
}

double mean_loss(const KnowledgeGraph& g, const std::vector<QuerySample>& samples, const ProjectionModel& model,
                 SplitMask edges) {
  if (samples.empty()) throw ValidationError("no samples");
  const MessageGraph graph(adjacency_matrix(g, edges));
  double total = 0.0;
  for (const auto& s : samples) total += bce_loss(execute_neural(s.query, model, graph), s.answers());
  return total / static_cast<double>(samples.size());
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& steps) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,step,loss\n";
  for (const auto& r : steps) out << r.epoch << ',' << r.step << ',' << r.loss << '\n';
  std::ofstream file(path, std::ios::binary);
  if (!file) throw ValidationError("cannot write '" + path.string() + "'");
  file << out.str();
}

}  // namespace hyq
