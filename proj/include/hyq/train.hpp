#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "hyq/autodiff.hpp"
#include "hyq/graph.hpp"
#include "hyq/model.hpp"
#include "hyq/query.hpp"

namespace hyq {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  /// Stop after this many optimizer steps (0 = no cap).
  std::size_t max_steps = 0;
  /// Probability of hiding each edge a training query could read its answer
  /// from directly: for every projection of an anchor e by r, the edges
  /// (e, r, t) to that projection's targets and their inverses.
  double traversal_dropout = 0.0;
  /// Message-passing edges; training always uses the train split by default.
  SplitMask edges = Split::Train;
  /// Per-epoch checkpoints `epoch-<k>.hyqr` and `loss.csv` go here when set.
  std::filesystem::path out_dir{};
};

struct LossRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double loss = 0.0;
};

struct TrainResult {
  std::vector<LossRecord> steps;
  /// Mean batch loss per epoch.
  std::vector<double> epoch_loss;
  std::size_t total_steps = 0;
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

/// Minibatch Adam on the mean BCE loss of each batch; targets are easy ∪ hard. Samples are reshuffled
/// every epoch from Stream::Shuffle. Only the ten training structures are
/// admitted (ValidationError otherwise). A non-finite loss or activation
/// aborts with a NumericError naming the epoch, batch and sample.
TrainResult train(const KnowledgeGraph& g, const std::vector<QuerySample>& samples, const TrainConfig& config,
                  ProjectionModel& model, const EpochCallback& on_epoch = {});

/// Mean BCE of the current model over `samples`, on `edges`.
double mean_loss(const KnowledgeGraph& g, const std::vector<QuerySample>& samples, const ProjectionModel& model,
                 SplitMask edges = Split::Train);

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& steps);

}  // namespace hyq
