// Acceptance checks: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "hakg/checkpoint.hpp"
#include "hakg/cli.hpp"
#include "hakg/eval.hpp"
#include "hakg/gradcheck.hpp"
#include "hakg/log.hpp"
#include "hakg/model.hpp"
#include "hakg/pipeline.hpp"
#include "hakg/synthetic.hpp"
#include "hakg/train.hpp"
#include "support.hpp"

using namespace hakg;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Synthetic block dataset with a leave-one-out split.
struct Synthetic {
  explicit Synthetic(synth::SyntheticConfig sc = {}) {
    const auto text = synth::generate(sc);
    auto kg = testing::kg_from(text.kg);
    auto inter = testing::interactions_from(text.interactions, kg);
    data = pipeline::make_dataset(std::move(kg), kg::leave_one_out_split(inter), "interact");
  }
  pipeline::Dataset data;
};

struct Trainer {
  Trainer(const pipeline::Dataset& d, std::uint64_t seed, std::size_t pool = 8)
      : data(d), pools(model::negative_pools(d.split, pool, seed)), bc{d.sampling({}), seed, 1} {
    source.emplace(d.graph, subgraph::build_cache(d.graph, d.entity_pairs(model::training_pairs(d.split, pools)), bc),
                   bc);
  }
  model::TrainingSet set() { return {data.split, data.graph.entity_types(), *source, pools}; }

  const pipeline::Dataset& data;
  model::NegativePools pools;
  subgraph::BuildConfig bc;
  std::optional<subgraph::SubgraphSource> source;
};

// 1. metrics_at_n against the definitions.
Outcome metric_oracle() {
  std::size_t mismatches = 0;
  double worst = 0.0;
  for (std::size_t rank = 1; rank <= 101; ++rank) {
    for (std::size_t n = 1; n <= 15; ++n) {
      const bool in = rank <= n;
      const double hit = in ? 1.0 : 0.0;
      const double ndcg = in ? 1.0 / std::log2(static_cast<double>(rank) + 1.0) : 0.0;
      const double mrr = in ? 1.0 / static_cast<double>(rank) : 0.0;
      const auto m = eval::metrics_at_n(rank, n);
      if (m.hit != hit) ++mismatches;
      worst = std::max({worst, std::abs(m.ndcg - ndcg), std::abs(m.mrr - mrr)});
    }
  }
  return {mismatches == 0 && worst <= 1e-12, fmt("hit mismatches %zu, max ndcg/mrr error %.3g", mismatches, worst)};
}

// 2. Gradient of the full objective against central differences.
Outcome gradient_check() {
  Rng rng(2024);
  const std::size_t universe = 6;
  subgraph::Subgraph sg;
  sg.entities = {0, 1, 2, 3, 4, 5};
  std::set<subgraph::LocalLink> links;
  while (links.size() < 8) {
    auto a = static_cast<std::uint32_t>(uniform_index(rng, 6));
    auto b = static_cast<std::uint32_t>(uniform_index(rng, 6));
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    links.insert({a, b, static_cast<RelationId>(uniform_index(rng, 3))});
  }
  sg.links.assign(links.begin(), links.end());
  const std::vector<TypeId> types{0, 1, 2, 1, 2, 0};
  const model::ModelShape shape{universe, 3, 3, {}, model::Variant::kFull};
  model::HakgModel m(shape, 7);
  const double lambda = 1e-5;
  const std::vector<model::Example> batch{{&sg, true}};
  m.params().zero_grad();
  model::accumulate_loss(m, batch, types, lambda, {});
  nn::GradCheckOptions opts;
  opts.eps = 1e-5;
  opts.min_coords = 64;
  opts.seed = 3;
  const auto r = nn::finite_diff_check(
      [&] {
        const std::vector<double> pos{m.score(sg, types)};
        return model::batch_loss(pos, {}, lambda, m.params().squared_norm());
      },
      m.params(), opts);
  return {r.max_rel_error <= 1e-4,
          fmt("max relative error %.3g over %zu coordinates in %zu tensors (worst %s[%zu]: %.6g vs %.6g)",
              r.max_rel_error, r.checked, m.params().size(), r.worst_parameter.c_str(), r.worst_index,
              r.worst_analytic, r.worst_numeric)};
}

// 3. Scores do not depend on the order of non-anchor entities.
Outcome permutation_invariance() {
  const std::size_t universe = 40;
  std::vector<TypeId> types(universe);
  for (std::size_t e = 0; e < universe; ++e) types[e] = static_cast<TypeId>(e % 4);
  double worst = 0.0;
  std::size_t checked = 0;
  for (model::Variant v : model::all_variants()) {
    model::HakgModel m({universe, 4, 5, {}, v}, 11);
    Rng rng(100 + static_cast<std::uint64_t>(v));
    for (int k = 0; k < 100; ++k) {
      const std::size_t n = 2 + uniform_index(rng, 11);
      const auto sg = testing::random_subgraph(rng, n, 2 * n, universe, 5);
      const auto perm = testing::anchor_fixing_permutation(rng, n);
      worst = std::max(worst, std::abs(m.score(sg, types) - m.score(testing::permute_subgraph(sg, perm), types)));
      ++checked;
    }
  }
  return {worst <= 1e-10, fmt("max |delta score| %.3g over %zu subgraphs, all variants", worst, checked)};
}

// 4. Attention rows are distributions and A H is m x d_e for any n.
Outcome attention_normalization() {
  const std::size_t universe = 60;
  model::ModelShape shape{universe, 3, 3, {}, model::Variant::kFull};
  nn::ParamStore store;
  Rng init(5);
  model::add_encoder_params(store, shape, init);
  const auto p = model::bind_encoder(store, shape);
  std::vector<TypeId> types(universe);
  for (std::size_t e = 0; e < universe; ++e) types[e] = static_cast<TypeId>(e % 3);
  double worst = 0.0;
  bool shapes = true;
  Rng rng(6);
  for (std::size_t n : {1, 2, 5, 40}) {
    const auto sg = testing::random_subgraph(rng, n, 2 * n, universe, 3);
    nn::Tape tape(false);
    nn::Var h = model::encode_entities(tape, p, sg, types, shape, {});
    nn::Var a = model::attention_matrix(tape, p, h);
    for (Eigen::Index r = 0; r < a.rows(); ++r) worst = std::max(worst, std::abs(a.value().row(r).sum() - 1.0));
    nn::Var heads = nn::matmul(a, h);
    shapes = shapes && heads.rows() == 5 && heads.cols() == 128 && a.cols() == static_cast<Eigen::Index>(n);
  }
  return {worst <= 1e-9 && shapes, fmt("max |row sum - 1| %.3g, A H shapes %s", worst, shapes ? "(5, 128)" : "wrong")};
}

// 5. Sampled paths are real paths and subgraphs are exactly their union.
Outcome subgraph_soundness() {
  std::size_t paths = 0, pairs = 0, unsound = 0, mismatched = 0;
  for (std::uint64_t g = 0; g < 50; ++g) {
    Rng rng(derive_seed(77, {g}));
    const std::size_t n = 5 + uniform_index(rng, 11);
    const auto kg = testing::random_kg(derive_seed(78, {g}), n, n);
    for (int trial = 0; trial < 4; ++trial) {
      const auto u = static_cast<EntityId>(uniform_index(rng, n));
      auto i = static_cast<EntityId>(uniform_index(rng, n));
      if (u == i) i = static_cast<EntityId>((i + 1) % n);
      subgraph::SampleConfig cfg;
      cfg.paths = 15;
      cfg.max_len = 6;
      const auto sampled = subgraph::sample_paths(kg, u, i, cfg, rng);
      const auto oracle = subgraph::enumerate_paths_oracle(kg, u, i, cfg.max_len);
      const std::set<subgraph::Path> truth(oracle.begin(), oracle.end());
      for (const auto& path : sampled) {
        ++paths;
        if (!truth.contains(path)) ++unsound;
      }
      std::set<EntityId> ents{u, i};
      std::set<std::tuple<EntityId, EntityId, RelationId>> lks;
      for (const auto& path : sampled) {
        for (std::size_t k = 0; k < path.length(); ++k) {
          const EntityId a = path.entities[k], b = path.entities[k + 1];
          ents.insert(a);
          ents.insert(b);
          lks.insert({std::min(a, b), std::max(a, b), path.relations[k]});
        }
      }
      const auto sg = subgraph::assemble_subgraph(sampled, u, i);
      const std::set<EntityId> got_e(sg.entities.begin(), sg.entities.end());
      std::set<std::tuple<EntityId, EntityId, RelationId>> got_l;
      for (const auto& l : sg.links) {
        const EntityId a = sg.entities[l.head], b = sg.entities[l.tail];
        got_l.insert({std::min(a, b), std::max(a, b), l.relation});
      }
      const bool anchors = sg.entities.size() >= 2 && sg.entities[0] == u && sg.entities[1] == i;
      if (got_e != ents || got_l != lks || got_e.size() != sg.entities.size() || got_l.size() != sg.links.size() ||
          !anchors) {
        ++mismatched;
      }
      ++pairs;
    }
  }
  return {unsound == 0 && mismatched == 0,
          fmt("%zu pairs, %zu sampled paths, %zu not in DFS oracle, %zu union mismatches", pairs, paths, unsound,
              mismatched)};
}

// Share of training positives ranked first against `negatives` unseen items.
double train_hit1(model::HakgModel& m, const pipeline::Dataset& d, subgraph::SubgraphSource& source,
                  std::size_t negatives, std::uint64_t seed) {
  const auto& split = d.split;
  const auto& types = d.graph.entity_types();
  std::size_t hits = 0;
  for (const auto& [u, i] : split.train) {
    Rng rng(derive_seed(seed, {u, i}));
    const auto negs = kg::sample_negatives(split.interacted[u], split.items.size(), negatives, rng);
    const double target = m.score(source.get(split.users[u], split.items[i]), types);
    std::vector<double> others;
    for (auto n : negs) others.push_back(m.score(source.get(split.users[u], split.items[n]), types));
    if (eval::pessimistic_rank(target, others) == 1) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(split.train.size());
}

// 6. The default model overfits the synthetic block dataset.
Outcome synthetic_overfit() {
  Synthetic s;
  Trainer t(s.data, 13);
  model::HakgModel m(s.data.shape(model::Variant::kFull, {}), 13);
  model::TrainConfig cfg;
  cfg.seed = 13;
  double initial = 0.0, loss = 0.0, hit1 = 0.0;
  std::size_t epoch = 0;
  bool pass = false;
  for (epoch = 1; epoch <= 200; ++epoch) {
    loss = model::train_epoch(m, t.set(), cfg, epoch);
    if (epoch == 1) initial = loss;
    if (epoch % 20 == 0 && loss < 0.1 * initial) {
      hit1 = train_hit1(m, s.data, *t.source, 20, 99);
      if (hit1 >= 0.9) {
        pass = true;
        break;
      }
    }
  }
  if (!pass) {
    epoch = std::min<std::size_t>(epoch, 200);
    hit1 = train_hit1(m, s.data, *t.source, 20, 99);
    pass = loss < 0.1 * initial && hit1 >= 0.9;
  }
  return {pass, fmt("epoch %zu: loss %.4f vs initial %.4f (ratio %.3f), train Hit@1 %.3f vs 20 negatives", epoch, loss,
                    initial, loss / initial, hit1)};
}

double mean_valid_hit10(const pipeline::Dataset& d, model::Dimensions dims, std::size_t epochs) {
  double total = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    Trainer t(d, seed);
    model::HakgModel m(d.shape(model::Variant::kFull, dims), seed);
    model::TrainConfig cfg;
    cfg.seed = seed;
    for (std::size_t e = 1; e <= epochs; ++e) model::train_epoch(m, t.set(), cfg, e);
    total += model::validation_hit10(m, t.set(), cfg);
  }
  return total / 3.0;
}

// 7. Depth and head-count directions on the synthetic data.
Outcome hyperparameter_trend() {
  Synthetic s;
  const std::size_t epochs = 5;
  model::Dimensions base;
  model::Dimensions deep = base;
  deep.layers = 4;
  model::Dimensions one_head = base;
  one_head.heads = 1;
  const double l2 = mean_valid_hit10(s.data, base, epochs);
  const double l4 = mean_valid_hit10(s.data, deep, epochs);
  const double m1 = mean_valid_hit10(s.data, one_head, epochs);
  return {l2 >= l4 && l2 >= m1,
          fmt("valid Hit@10 over 3 seeds, %zu epochs: L=2/m=5 %.4f, L=4 %.4f, m=1 %.4f", epochs, l2, l4, m1)};
}

// 8. Every variant trains, and parameter layouts differ as designed.
Outcome ablation_structure() {
  Synthetic s;
  Trainer t(s.data, 21);
  using Sig = std::map<std::string, nn::Shape>;
  std::map<model::Variant, Sig> sigs;
  std::string failures;
  for (model::Variant v : model::all_variants()) {
    model::HakgModel m(s.data.shape(v, {}), 21);
    model::TrainConfig cfg;
    cfg.seed = 21;
    try {
      const double loss = model::train_epoch(m, t.set(), cfg, 1);
      if (!std::isfinite(loss)) failures += std::string(model::variant_name(v)) + " non-finite; ";
    } catch (const std::exception& e) {
      failures += std::string(model::variant_name(v)) + ": " + e.what() + "; ";
    }
    for (const auto& [name, shape] : m.params().signature()) sigs[v][name] = shape;
  }
  auto without = [](Sig s, std::initializer_list<const char*> names) {
    for (auto n : names) s.erase(n);
    return s;
  };
  const Sig& full = sigs[model::Variant::kFull];
  const nn::Shape init_shape{128, 160};
  std::string wrong;
  auto expect = [&](bool cond, const char* what) {
    if (!cond) wrong += std::string(what) + " ";
  };
  // -t: no type table and no init transform.
  expect(sigs[model::Variant::kNoType] == without(full, {"type.embedding", "init.weight", "init.bias"}), "-t");
  expect(!sigs[model::Variant::kNoType].contains("init.weight") && full.at("init.weight") == init_shape,
         "-t init matrix");
  // -r: no relation table, square neighbour weights.
  Sig r = without(full, {"relation.embedding"});
  r["prop1.w1"] = {128, 128};
  r["prop2.w1"] = {128, 128};
  expect(sigs[model::Variant::kNoRelation] == r, "-r");
  // -a: no attention tensors.
  expect(sigs[model::Variant::kNoAttention] == without(full, {"attn.w1", "attn.w2"}), "-a");
  // -g: no attention, tower input 2 d_e.
  const Sig& g = sigs[model::Variant::kNoSubgraph];
  expect(g.at("mlp1.weight") == nn::Shape{128, 256} && !g.contains("attn.w1"), "-g");
  expect(full.at("mlp1.weight") == nn::Shape{128, 384}, "full tower");
  // max pooling shares the full layout; attention pooling adds a context vector.
  expect(sigs[model::Variant::kMaxPool] == full, "max");
  Sig att = full;
  att["attn.context"] = {128};
  expect(sigs[model::Variant::kAttentionPool] == att, "att");
  const bool ok = failures.empty() && wrong.empty();
  if (!wrong.empty()) failures += "unexpected layout for: " + wrong;
  return {ok, failures.empty() ? "7 variants trained one epoch; signatures as designed" : failures};
}

// 9. Epoch time grows linearly with the number of training pairs.
Outcome linear_scaling() {
  synth::SyntheticConfig sc;
  sc.users = 100;
  sc.items = 100;
  sc.blocks = 10;
  Synthetic s(sc);
  Trainer t(s.data, 31);
  kg::SplitData half = s.data.split;
  half.train.clear();
  for (std::size_t k = 0; k < s.data.split.train.size(); k += 2) half.train.push_back(s.data.split.train[k]);
  auto time_epochs = [&](const kg::SplitData& split) {
    std::vector<double> times;
    for (std::size_t run = 1; run <= 3; ++run) {
      model::HakgModel m(s.data.shape(model::Variant::kFull, {}), 31);
      model::TrainConfig cfg;
      cfg.seed = 31;
      model::TrainingSet set{split, s.data.graph.entity_types(), *t.source, t.pools};
      const auto t0 = Clock::now();
      model::train_epoch(m, set, cfg, run);
      times.push_back(seconds_since(t0));
    }
    std::sort(times.begin(), times.end());
    return times[1];
  };
  const double small = time_epochs(half);
  const double large = time_epochs(s.data.split);
  const double ratio = large / small;
  return {ratio <= 2.5, fmt("%zu pairs %.3fs, %zu pairs %.3fs, ratio %.2f", half.train.size(), small,
                            s.data.split.train.size(), large, ratio)};
}

// 10. Every stage is byte-for-byte reproducible.
Outcome reproducibility() {
  testing::TempDir dir("acceptance");
  synth::SyntheticConfig sc;
  sc.users = 20;
  sc.items = 20;
  sc.blocks = 4;
  synth::write_dataset(sc, dir.path());
  testing::write_file(dir / "run.cfg",
                      "kg = kg.tsv\ninteractions = interactions.tsv\nworkdir = work\nseed = 17\nworkers = 1\n"
                      "max_iter = 2\n");
  const std::vector<std::string> files{"split.tsv", "subgraphs.hkgc", "model.hkgm", "metrics.csv", "history.csv"};
  auto run_all = [&] {
    std::vector<std::string> out;
    for (const char* stage : {"prepare", "build-subgraphs", "train", "evaluate"}) {
      std::ostringstream o, e;
      if (cli::run({stage, "--config", (dir / "run.cfg").string()}, o, e) != 0) {
        out.push_back(std::string("stage ") + stage + " failed: " + e.str());
        return out;
      }
    }
    for (const auto& f : files) out.push_back(testing::read_file(dir / ("work/" + f)));
    return out;
  };
  const auto a = run_all();
  const auto b = run_all();
  std::string differing;
  for (std::size_t k = 0; k < files.size(); ++k) {
    if (k >= a.size() || k >= b.size() || a[k] != b[k]) differing += files[k] + " ";
  }
  const bool ok = differing.empty() && a.size() == files.size();
  return {ok, ok ? "split, cache, checkpoint, metrics and history identical across runs"
                 : "differing: " + differing + (a.empty() ? "" : a.front().substr(0, 200))};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  log::set_level(log::Level::kWarn);
  const std::vector<Criterion> criteria{
      {1, "metric oracle equivalence", 1.0, metric_oracle},
      {2, "gradient correctness", 60.0, gradient_check},
      {3, "permutation invariance", 60.0, permutation_invariance},
      {4, "attention normalization and size invariance", 1.0, attention_normalization},
      {5, "subgraph soundness", 10.0, subgraph_soundness},
      {6, "synthetic overfit", 600.0, synthetic_overfit},
      {7, "hyperparameter trend smoke", 600.0, hyperparameter_trend},
      {8, "ablation structure", 300.0, ablation_structure},
      {9, "linear scaling", 600.0, linear_scaling},
      {10, "reproducibility", 600.0, reproducibility},
  };
  std::set<int> wanted;
  for (int k = 1; k < argc; ++k) wanted.insert(std::atoi(argv[k]));
  int failed = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && !wanted.contains(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    const bool in_time = secs <= c.budget_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("[%s] %2d %s: %s (%.2fs of %.0fs budget%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                secs, c.budget_seconds, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
