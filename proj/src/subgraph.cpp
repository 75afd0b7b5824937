#include "hakg/subgraph.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <iterator>
#include <set>
#include <thread>
#include <unordered_map>

#include "hakg/error.hpp"
#include "hakg/log.hpp"

namespace hakg::subgraph {

namespace {

void check_entity(const kg::KnowledgeGraph& kg, EntityId e) {
  if (e >= kg.entity_count()) {
    throw std::out_of_range("entity index " + std::to_string(e) + " out of range (" +
                            std::to_string(kg.entity_count()) + " entities)");
  }
}

}  // namespace

PathSet sample_paths(const kg::KnowledgeGraph& kg, EntityId u, EntityId i, const SampleConfig& cfg, Rng& rng) {
  check_entity(kg, u);
  check_entity(kg, i);
  if (u == i) throw ContractError("sample_paths: anchors must differ");
  if (cfg.paths == 0 || cfg.max_len == 0) throw ContractError("sample_paths: K and max_len must be positive");

  PathSet out;
  std::set<Path> seen;
  std::vector<EntityId> walk;
  std::vector<RelationId> rels;
  std::vector<kg::Neighbor> candidates;
  const std::size_t budget = cfg.effective_budget();

  for (std::size_t attempt = 0; attempt < budget && out.size() < cfg.paths; ++attempt) {
    walk.assign(1, u);
    rels.clear();
    bool reached = false;
    while (rels.size() < cfg.max_len) {
      const EntityId cur = walk.back();
      candidates.clear();
      for (const auto& nb : kg.neighbors(cur)) {
        if (cfg.masked_relation && cur == u && nb.entity == i && nb.relation == *cfg.masked_relation) continue;
        if (std::find(walk.begin(), walk.end(), nb.entity) != walk.end()) continue;
        candidates.push_back(nb);
      }
      if (candidates.empty()) break;
      const auto& step = candidates[uniform_index(rng, candidates.size())];
      walk.push_back(step.entity);
      rels.push_back(step.relation);
      if (step.entity == i) {
        reached = true;
        break;
      }
    }
    if (!reached) continue;
    Path p{walk, rels};
    if (seen.insert(p).second) out.push_back(std::move(p));
  }
  return out;
}

PathSet enumerate_paths_oracle(const kg::KnowledgeGraph& kg, EntityId u, EntityId i, std::size_t max_len) {
  check_entity(kg, u);
  check_entity(kg, i);
  PathSet out;
  if (max_len == 0 || u == i) return out;
  std::vector<EntityId> walk{u};
  std::vector<RelationId> rels;
  std::vector<char> on_walk(kg.entity_count(), 0);
  on_walk[u] = 1;

  auto dfs = [&](auto&& self) -> void {
    const EntityId cur = walk.back();
    for (const auto& nb : kg.neighbors(cur)) {
      if (on_walk[nb.entity]) continue;
      walk.push_back(nb.entity);
      rels.push_back(nb.relation);
      if (nb.entity == i) {
        out.push_back({walk, rels});
      } else if (rels.size() < max_len) {
        on_walk[nb.entity] = 1;
        self(self);
        on_walk[nb.entity] = 0;
      }
      walk.pop_back();
      rels.pop_back();
    }
  };
  dfs(dfs);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Subgraph assemble_subgraph(const PathSet& paths, EntityId u, EntityId i) {
  Subgraph sg;
  std::unordered_map<EntityId, std::uint32_t> local;
  auto local_of = [&](EntityId e) {
    auto [it, inserted] = local.try_emplace(e, static_cast<std::uint32_t>(sg.entities.size()));
    if (inserted) sg.entities.push_back(e);
    return it->second;
  };
  local_of(u);
  local_of(i);
  std::set<std::array<std::uint32_t, 3>> seen;
  for (const auto& p : paths) {
    for (std::size_t j = 0; j < p.relations.size(); ++j) {
      std::uint32_t a = local_of(p.entities[j]);
      std::uint32_t b = local_of(p.entities[j + 1]);
      std::array<std::uint32_t, 3> key{std::min(a, b), std::max(a, b), p.relations[j]};
      if (seen.insert(key).second) sg.links.push_back({a, b, p.relations[j]});
    }
  }
  return sg;
}

Subgraph build_subgraph(const kg::KnowledgeGraph& kg, EntityId u, EntityId i, const SampleConfig& cfg,
                        std::uint64_t seed) {
  Rng rng(derive_seed(seed, {tag(StreamTag::kSubgraph), u, i}));
  return assemble_subgraph(sample_paths(kg, u, i, cfg, rng), u, i);
}

// ---------------------------------------------------------------------------
// Cache

const Subgraph* SubgraphCache::find(EntityId u, EntityId i) const {
  auto it = records_.find({u, i});
  return it == records_.end() ? nullptr : &it->second;
}

void SubgraphCache::insert(EntityId u, EntityId i, Subgraph sg) { records_[{u, i}] = std::move(sg); }

namespace {

void put_u32(std::string& buf, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) buf.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

class Reader {
 public:
  Reader(const std::string& data, std::string source) : data_(data), source_(std::move(source)) {}

  bool done() const { return pos_ == data_.size(); }

  std::uint32_t u32(const char* what) {
    if (data_.size() - pos_ < 4) throw CacheError(source_ + ": truncated while reading " + what);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + b])) << (8 * b);
    pos_ += 4;
    return v;
  }

  void expect_magic(std::string_view magic) {
    if (data_.size() < magic.size() || data_.compare(0, magic.size(), magic) != 0) {
      throw CacheError(source_ + ": bad magic, not a subgraph cache");
    }
    pos_ = magic.size();
  }

 private:
  const std::string& data_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

void SubgraphCache::save(const std::filesystem::path& path) const {
  std::string buf = "HKGC";
  put_u32(buf, kCacheVersion);
  for (const auto& [key, sg] : records_) {
    put_u32(buf, key.first);
    put_u32(buf, key.second);
    put_u32(buf, static_cast<std::uint32_t>(sg.entities.size()));
    for (auto e : sg.entities) put_u32(buf, e);
    put_u32(buf, static_cast<std::uint32_t>(sg.links.size()));
    for (const auto& l : sg.links) {
      put_u32(buf, l.head);
      put_u32(buf, l.tail);
      put_u32(buf, l.relation);
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CacheError("cannot write subgraph cache " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw CacheError("write failed for subgraph cache " + path.string());
}

SubgraphCache SubgraphCache::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CacheError("subgraph cache not found: " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(data, path.string());
  r.expect_magic("HKGC");
  if (auto v = r.u32("version"); v != kCacheVersion) {
    throw CacheError(path.string() + ": unsupported cache version " + std::to_string(v));
  }
  SubgraphCache cache;
  while (!r.done()) {
    EntityId u = r.u32("user");
    EntityId i = r.u32("item");
    Subgraph sg;
    std::uint32_t n = r.u32("entity count");
    if (n < 2) throw CacheError(path.string() + ": record with fewer than two entities");
    sg.entities.resize(n);
    for (auto& e : sg.entities) e = r.u32("entity");
    std::uint32_t m = r.u32("link count");
    sg.links.resize(m);
    for (auto& l : sg.links) {
      l.head = r.u32("link head");
      l.tail = r.u32("link tail");
      l.relation = r.u32("link relation");
      if (l.head >= n || l.tail >= n) throw CacheError(path.string() + ": link endpoint out of range");
    }
    if (sg.entities[0] != u || sg.entities[1] != i) throw CacheError(path.string() + ": anchors do not match key");
    cache.insert(u, i, std::move(sg));
  }
  return cache;
}

SubgraphCache build_cache(const kg::KnowledgeGraph& kg, std::span<const SubgraphCache::Key> pairs,
                          const BuildConfig& cfg) {
  std::vector<SubgraphCache::Key> todo(pairs.begin(), pairs.end());
  std::sort(todo.begin(), todo.end());
  todo.erase(std::unique(todo.begin(), todo.end()), todo.end());

  std::vector<Subgraph> built(todo.size());
  auto work = [&](std::size_t start, std::size_t stride) {
    for (std::size_t k = start; k < todo.size(); k += stride) {
      const auto& [u, i] = todo[k];
      try {
        built[k] = build_subgraph(kg, u, i, cfg.sample, cfg.seed);
      } catch (const std::exception& ex) {
        throw CacheError("subgraph for pair (" + kg.entity_name(u) + ", " + kg.entity_name(i) + "): " + ex.what());
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.workers, todo.size()));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          work(w, workers);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  SubgraphCache cache;
  for (std::size_t k = 0; k < todo.size(); ++k) cache.insert(todo[k].first, todo[k].second, std::move(built[k]));
  return cache;
}

SubgraphSource::SubgraphSource(const kg::KnowledgeGraph& kg, SubgraphCache cache, BuildConfig cfg, bool allow_build)
    : kg_(kg), cache_(std::move(cache)), cfg_(cfg), allow_build_(allow_build) {}

const Subgraph& SubgraphSource::get(EntityId u, EntityId i) {
  if (const Subgraph* sg = cache_.find(u, i)) return *sg;
  if (!allow_build_) {
    throw CacheError("subgraph cache has no record for pair (" + kg_.entity_name(u) + ", " + kg_.entity_name(i) + ")");
  }
  ++built_;
  cache_.insert(u, i, build_subgraph(kg_, u, i, cfg_.sample, cfg_.seed));
  return *cache_.find(u, i);
}

}  // namespace hakg::subgraph
