#pragma once

#include <string>
#include <vector>

#include "hakg/checkpoint.hpp"
#include "hakg/config.hpp"
#include "hakg/eval.hpp"
#include "hakg/kg_store.hpp"
#include "hakg/model.hpp"
#include "hakg/subgraph.hpp"
#include "hakg/train.hpp"

namespace hakg::pipeline {

// The KG, a split, and the graph paths are sampled from (KG plus training
// interactions, held-out interactions removed).
struct Dataset {
  kg::KnowledgeGraph kg;
  kg::SplitData split;
  kg::KnowledgeGraph graph;
  RelationId interaction = 0;

  model::ModelShape shape(model::Variant variant, const model::Dimensions& dims) const;
  // The base config with the interaction relation masked between anchors.
  subgraph::SampleConfig sampling(const subgraph::SampleConfig& base) const;
  std::vector<subgraph::SubgraphCache::Key> entity_pairs(const std::vector<kg::UserItem>& pairs) const;
};

Dataset make_dataset(kg::KnowledgeGraph kg, kg::SplitData split, const std::string& interaction_relation);

// Loads the KG and the split dump written by prepare().
Dataset load_dataset(const config::RunConfig& cfg);

eval::EvalConfig eval_config(const config::RunConfig& cfg);

// prepare: load, binarize, split, write the split dump.
kg::SplitData prepare(const config::RunConfig& cfg);

// build-subgraphs: cache for training positives, their negative pools, and
// every validation/test candidate.
subgraph::SubgraphCache build_subgraphs(const config::RunConfig& cfg);

// train: needs the cache; writes the checkpoint and the loss history CSV.
model::TrainResult train(const config::RunConfig& cfg);

// evaluate: restores `cfg.checkpoint` and writes the metrics CSV.
eval::MetricsReport evaluate(const config::RunConfig& cfg);

struct AblationRow {
  model::Variant variant;
  double hit10 = 0.0;
  double ndcg10 = 0.0;
};

// ablate: trains and evaluates every variant with the same seed and writes
// variant,hit@10,ndcg@10,hit_decrease,ndcg_decrease (decrease relative to
// full, in percent).
std::vector<AblationRow> ablate(const config::RunConfig& cfg);

std::string history_csv(const model::TrainResult& result);
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace hakg::pipeline
