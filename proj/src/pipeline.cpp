#include "hakg/pipeline.hpp"

#include <cstdio>
#include <fstream>

#include "hakg/error.hpp"
#include "hakg/log.hpp"

namespace hakg::pipeline {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
  if (!out) throw ValidationError("write failed for " + path.string());
}

void ensure_parent(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
}

subgraph::SubgraphSource open_cache(const Dataset& data, const config::RunConfig& cfg) {
  if (!std::filesystem::exists(cfg.cache)) {
    throw CacheError("subgraph cache not found: " + cfg.cache.string() + " (run build-subgraphs first)");
  }
  subgraph::BuildConfig bc{data.sampling(cfg.sample), cfg.require_seed(), 1};
  return subgraph::SubgraphSource(data.graph, subgraph::SubgraphCache::load(cfg.cache), bc);
}

eval::Scorer scorer_for(model::HakgModel& model, const Dataset& data, subgraph::SubgraphSource& source) {
  return [&](std::uint32_t u, std::uint32_t i) {
    return model.score(source.get(data.split.users[u], data.split.items[i]), data.graph.entity_types());
  };
}

}  // namespace

model::ModelShape Dataset::shape(model::Variant variant, const model::Dimensions& dims) const {
  return {graph.entity_count(), graph.type_count(), graph.relation_count(), dims, variant};
}

subgraph::SampleConfig Dataset::sampling(const subgraph::SampleConfig& base) const {
  auto s = base;
  s.masked_relation = interaction;
  return s;
}

std::vector<subgraph::SubgraphCache::Key> Dataset::entity_pairs(const std::vector<kg::UserItem>& pairs) const {
  std::vector<subgraph::SubgraphCache::Key> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.emplace_back(split.users[p.user], split.items[p.item]);
  return out;
}

Dataset make_dataset(kg::KnowledgeGraph kg, kg::SplitData split, const std::string& interaction_relation) {
  Dataset d;
  d.graph = kg::training_graph(kg, split, interaction_relation);
  d.interaction = *d.graph.find_relation(interaction_relation);
  d.kg = std::move(kg);
  d.split = std::move(split);
  return d;
}

Dataset load_dataset(const config::RunConfig& cfg) {
  auto kg = kg::load_kg(cfg.kg);
  if (!std::filesystem::exists(cfg.split_path)) {
    throw ValidationError("split dump not found: " + cfg.split_path.string() + " (run prepare first)");
  }
  auto split = kg::read_split(cfg.split_path, kg);
  return make_dataset(std::move(kg), std::move(split), cfg.interaction_relation);
}

eval::EvalConfig eval_config(const config::RunConfig& cfg) {
  eval::EvalConfig ec;
  ec.seed = cfg.require_seed();
  ec.negatives = cfg.train.eval_negatives;
  ec.groups = cfg.groups;
  return ec;
}

kg::SplitData prepare(const config::RunConfig& cfg) {
  const auto seed = cfg.require_seed();
  auto kg = kg::load_kg(cfg.kg);
  auto data = kg::load_interactions(cfg.interactions, kg);
  kg::SplitData split;
  if (cfg.split.leave_one_out) {
    split = kg::leave_one_out_split(data);
  } else {
    Rng rng(derive_seed(seed, {tag(StreamTag::kSplit)}));
    split = kg::split_by_ratio(data, cfg.split.ratio, rng);
  }
  ensure_parent(cfg.split_path);
  kg::write_split(split, kg, cfg.split_path);
  log::info("prepared ", split.users.size(), " users, ", split.items.size(), " items, ", split.train.size(),
            " training interactions");
  return split;
}

subgraph::SubgraphCache build_subgraphs(const config::RunConfig& cfg) {
  const auto seed = cfg.require_seed();
  const Dataset data = load_dataset(cfg);
  const auto pools = model::negative_pools(data.split, cfg.train.negative_pool, seed);
  auto pairs = model::training_pairs(data.split, pools);
  auto ec = eval_config(cfg);
  for (auto target : {eval::Target::kValidation, eval::Target::kTest}) {
    ec.target = target;
    const auto more = eval::evaluation_pairs(data.split, ec);
    pairs.insert(pairs.end(), more.begin(), more.end());
  }
  const auto keys = data.entity_pairs(pairs);
  subgraph::BuildConfig bc{data.sampling(cfg.sample), seed, cfg.workers};
  auto cache = subgraph::build_cache(data.graph, keys, bc);
  ensure_parent(cfg.cache);
  cache.save(cfg.cache);
  log::info("built ", cache.size(), " subgraphs into ", cfg.cache.string());
  return cache;
}

model::TrainResult train(const config::RunConfig& cfg) {
  const auto seed = cfg.require_seed();
  const Dataset data = load_dataset(cfg);
  auto source = open_cache(data, cfg);
  const auto pools = model::negative_pools(data.split, cfg.train.negative_pool, seed);
  model::HakgModel model(data.shape(cfg.variant, cfg.dims), seed);
  model::TrainingSet set{data.split, data.graph.entity_types(), source, pools};
  auto result = model::train(model, set, cfg.train);
  if (source.built_on_demand() > 0) log::warn(source.built_on_demand(), " subgraphs were missing from the cache");
  ensure_parent(cfg.checkpoint);
  model::save_checkpoint(model, cfg.checkpoint);
  write_text(cfg.history_out, history_csv(result));
  return result;
}

eval::MetricsReport evaluate(const config::RunConfig& cfg) {
  const Dataset data = load_dataset(cfg);
  auto ck = model::load_checkpoint(cfg.checkpoint);
  const auto shape = data.shape(ck.variant, ck.dims);
  auto model = model::restore_model(std::move(ck), shape);
  auto source = open_cache(data, cfg);
  auto report = eval::evaluate(scorer_for(model, data, source), data.split, eval_config(cfg));
  ensure_parent(cfg.metrics_out);
  eval::write_metrics_csv(report, cfg.metrics_out);
  return report;
}

std::vector<AblationRow> ablate(const config::RunConfig& cfg) {
  const auto seed = cfg.require_seed();
  const Dataset data = load_dataset(cfg);
  auto source = open_cache(data, cfg);
  const auto pools = model::negative_pools(data.split, cfg.train.negative_pool, seed);
  auto ec = eval_config(cfg);
  ec.groups = 0;
  std::vector<AblationRow> rows;
  for (auto variant : model::all_variants()) {
    model::HakgModel model(data.shape(variant, cfg.dims), seed);
    model::TrainingSet set{data.split, data.graph.entity_types(), source, pools};
    model::train(model, set, cfg.train);
    const auto report = eval::evaluate(scorer_for(model, data, source), data.split, ec);
    rows.push_back({variant, report.all.hit[9], report.all.ndcg[9]});
    log::info("variant ", model::variant_name(variant), " hit@10 ", rows.back().hit10);
  }
  write_text(cfg.ablation_out, ablation_csv(rows));
  return rows;
}

std::string history_csv(const model::TrainResult& result) {
  std::string out = "epoch,loss,valid_hit10\n";
  char line[96];
  for (const auto& r : result.history) {
    std::snprintf(line, sizeof line, "%zu,%.10f,%.6f\n", r.epoch, r.loss, r.valid_hit10);
    out += line;
  }
  return out;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "variant,hit@10,ndcg@10,hit_decrease,ndcg_decrease\n";
  const AblationRow* full = nullptr;
  for (const auto& r : rows) {
    if (r.variant == model::Variant::kFull) full = &r;
  }
  auto decrease = [](double base, double v) { return base > 0.0 ? 100.0 * (base - v) / base : 0.0; };
  char line[128];
  for (const auto& r : rows) {
    const double hd = full ? decrease(full->hit10, r.hit10) : 0.0;
    const double nd = full ? decrease(full->ndcg10, r.ndcg10) : 0.0;
    std::snprintf(line, sizeof line, "%s,%.6f,%.6f,%.2f,%.2f\n", std::string(model::variant_name(r.variant)).c_str(),
                  r.hit10, r.ndcg10, hd, nd);
    out += line;
  }
  return out;
}

}  // namespace hakg::pipeline
