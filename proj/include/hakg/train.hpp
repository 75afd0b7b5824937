#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "hakg/kg_store.hpp"
#include "hakg/model.hpp"
#include "hakg/subgraph.hpp"

namespace hakg::model {

struct TrainConfig {
  double lr = 0.001;
  double l2 = 1e-5;
  std::size_t batch_size = 256;
  std::size_t max_iter = 100;
  double dropout = 0.1;
  std::uint64_t seed = 0;
  std::size_t patience = 10;        // 0 disables early stopping
  std::size_t negative_pool = 8;    // pre-sampled negatives per training positive
  std::size_t eval_negatives = 100;
  std::size_t eval_every = 1;       // validation period in epochs, 0 = never
};

// Pre-sampled negatives for every training positive, keyed by the positive.
using NegativePools = std::map<kg::UserItem, std::vector<std::uint32_t>>;

NegativePools negative_pools(const kg::SplitData& split, std::size_t pool_size, std::uint64_t seed);

// Every (user, item) pair training will ask a subgraph for.
std::vector<kg::UserItem> training_pairs(const kg::SplitData& split, const NegativePools& pools);

struct TrainingSet {
  const kg::SplitData& split;
  std::span<const TypeId> entity_types;
  subgraph::SubgraphSource& subgraphs;
  const NegativePools& pools;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;         // objective per training instance
  double valid_hit10 = 0.0;  // NaN when validation did not run
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 0 when validation never ran
  double best_valid = 0.0;
  bool stopped_early = false;
};

// One pass over the training positives, each paired with one negative drawn
// from its pool; Adam update per minibatch. Returns the objective per
// instance. Throws NumericError naming the batch on a non-finite loss.
double train_epoch(HakgModel& model, const TrainingSet& data, const TrainConfig& cfg, std::size_t epoch);

double validation_hit10(HakgModel& model, const TrainingSet& data, const TrainConfig& cfg);

// Runs up to cfg.max_iter epochs and leaves the best-validation parameters in
// `model` (the last ones when validation never ran).
TrainResult train(HakgModel& model, const TrainingSet& data, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace hakg::model
