#include "hakg/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hakg/error.hpp"
#include "hakg/eval.hpp"
#include "hakg/log.hpp"

namespace hakg::model {

NegativePools negative_pools(const kg::SplitData& split, std::size_t pool_size, std::uint64_t seed) {
  if (pool_size == 0) throw ConfigError("negative pool size must be positive");
  NegativePools pools;
  for (const auto& p : split.train) {
    Rng rng(derive_seed(seed, {tag(StreamTag::kNegativePool), p.user, p.item}));
    auto pool = kg::sample_negatives(split.interacted.at(p.user), split.items.size(), pool_size, rng);
    if (pool.empty()) {
      throw ExhaustionError("user " + std::to_string(split.users[p.user]) + " interacted with every item");
    }
    pools.emplace(p, std::move(pool));
  }
  return pools;
}

std::vector<kg::UserItem> training_pairs(const kg::SplitData& split, const NegativePools& pools) {
  std::vector<kg::UserItem> pairs;
  for (const auto& p : split.train) {
    pairs.push_back(p);
    for (auto n : pools.at(p)) pairs.push_back({p.user, n});
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

double train_epoch(HakgModel& model, const TrainingSet& data, const TrainConfig& cfg, std::size_t epoch) {
  if (data.split.train.empty()) throw EmptyDatasetError("no training interactions");
  if (cfg.batch_size == 0) throw ConfigError("batch size must be positive");
  Rng rng(derive_seed(cfg.seed, {tag(StreamTag::kTraining), epoch}));

  struct Instance {
    kg::UserItem pair;
    bool positive;
  };
  std::vector<Instance> instances;
  instances.reserve(2 * data.split.train.size());
  for (const auto& p : data.split.train) {
    const auto& pool = data.pools.at(p);
    instances.push_back({p, true});
    instances.push_back({{p.user, pool[uniform_index(rng, pool.size())]}, false});
  }
  std::shuffle(instances.begin(), instances.end(), rng);

  const nn::AdamConfig adam{cfg.lr};
  const EncodeContext ctx{true, cfg.dropout, &rng};
  double total = 0.0;
  std::vector<Example> batch;
  for (std::size_t start = 0, b = 0; start < instances.size(); start += cfg.batch_size, ++b) {
    const std::size_t end = std::min(instances.size(), start + cfg.batch_size);
    batch.clear();
    for (std::size_t k = start; k < end; ++k) {
      const auto& ins = instances[k];
      batch.push_back({&data.subgraphs.get(data.split.users[ins.pair.user], data.split.items[ins.pair.item]),
                       ins.positive});
    }
    model.params().zero_grad();
    const double j = accumulate_loss(model, batch, data.entity_types, cfg.l2, ctx);
    if (!std::isfinite(j)) {
      throw NumericError("non-finite loss in batch " + std::to_string(b) + " of epoch " + std::to_string(epoch));
    }
    nn::adam_step(model.params(), adam);
    total += j;
  }
  return total / static_cast<double>(instances.size());
}

double validation_hit10(HakgModel& model, const TrainingSet& data, const TrainConfig& cfg) {
  eval::EvalConfig ec;
  ec.seed = cfg.seed;
  ec.negatives = cfg.eval_negatives;
  ec.target = eval::Target::kValidation;
  auto scorer = [&](std::uint32_t u, std::uint32_t i) {
    return model.score(data.subgraphs.get(data.split.users[u], data.split.items[i]), data.entity_types);
  };
  return eval::evaluate(scorer, data.split, ec).all.hit[9];
}

TrainResult train(HakgModel& model, const TrainingSet& data, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  if (data.split.train.empty()) throw EmptyDatasetError("no training interactions");
  TrainResult result;
  result.best_valid = -std::numeric_limits<double>::infinity();
  const bool validate = cfg.eval_every > 0 && !data.split.validation.empty();
  std::optional<nn::ParamStore> best;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_iter; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = train_epoch(model, data, cfg, epoch);
    rec.valid_hit10 = std::numeric_limits<double>::quiet_NaN();
    if (validate && epoch % cfg.eval_every == 0) {
      rec.valid_hit10 = validation_hit10(model, data, cfg);
      if (rec.valid_hit10 > result.best_valid) {
        result.best_valid = rec.valid_hit10;
        result.best_epoch = epoch;
        best = model.params();
        since_best = 0;
      } else {
        ++since_best;
      }
    }
    log::info("epoch ", epoch, " loss ", rec.loss, " valid hit@10 ", rec.valid_hit10);
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (cfg.patience > 0 && since_best >= cfg.patience) {
      result.stopped_early = true;
      break;
    }
  }
  if (best) {
    model.params().copy_values_from(*best);
  } else {
    result.best_valid = std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

}  // namespace hakg::model
