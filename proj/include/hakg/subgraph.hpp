#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hakg/kg_store.hpp"
#include "hakg/rng.hpp"
#include "hakg/types.hpp"

namespace hakg::subgraph {

// A simple walk from the user anchor (entities.front()) to the item anchor
// (entities.back()). relations[j] labels the link entities[j] -- entities[j+1].
struct Path {
  std::vector<EntityId> entities;
  std::vector<RelationId> relations;

  std::size_t length() const { return relations.size(); }
  auto operator<=>(const Path&) const = default;
};

using PathSet = std::vector<Path>;

struct SampleConfig {
  std::size_t paths = 15;       // K
  std::size_t max_len = 6;      // links per path
  std::size_t walk_budget = 0;  // attempts; 0 means 50 * paths
  // Links of this relation between the two anchors are invisible to the walk
  // (keeps a pair's own interaction out of its subgraph).
  std::optional<RelationId> masked_relation;

  std::size_t effective_budget() const { return walk_budget ? walk_budget : 50 * paths; }
};

// Uniform random walks from u that keep only simple walks reaching i within
// max_len links. Returns at most cfg.paths distinct paths, possibly none.
PathSet sample_paths(const kg::KnowledgeGraph& kg, EntityId u, EntityId i, const SampleConfig& cfg, Rng& rng);

// Every simple path from u to i with at most max_len links (exhaustive DFS).
// Only meant for small graphs.
PathSet enumerate_paths_oracle(const kg::KnowledgeGraph& kg, EntityId u, EntityId i, std::size_t max_len);

struct LocalLink {
  std::uint32_t head;
  std::uint32_t tail;
  RelationId relation;
  auto operator<=>(const LocalLink&) const = default;
};

// Connectivity graph of a user-item pair. Local index 0 is the user anchor,
// 1 the item anchor, the rest follow in first-seen order over the paths.
struct Subgraph {
  static constexpr std::uint32_t kUserAnchor = 0;
  static constexpr std::uint32_t kItemAnchor = 1;

  std::vector<EntityId> entities;  // global indices
  std::vector<LocalLink> links;    // undirected, deduplicated

  std::size_t size() const { return entities.size(); }
  bool operator==(const Subgraph&) const = default;
};

Subgraph assemble_subgraph(const PathSet& paths, EntityId u, EntityId i);

// Per-pair construction with a stream derived from (seed, u, i), so a pair's
// subgraph does not depend on which other pairs are built or in what order.
Subgraph build_subgraph(const kg::KnowledgeGraph& kg, EntityId u, EntityId i, const SampleConfig& cfg,
                        std::uint64_t seed);

// Subgraphs keyed by (user entity, item entity).
class SubgraphCache {
 public:
  using Key = std::pair<EntityId, EntityId>;

  const Subgraph* find(EntityId u, EntityId i) const;
  void insert(EntityId u, EntityId i, Subgraph sg);
  std::size_t size() const { return records_.size(); }
  const std::map<Key, Subgraph>& records() const { return records_; }

  // Binary little-endian: "HKGC", u32 version, then records sorted by key.
  void save(const std::filesystem::path& path) const;
  static SubgraphCache load(const std::filesystem::path& path);

 private:
  std::map<Key, Subgraph> records_;
};

inline constexpr std::uint32_t kCacheVersion = 1;

struct BuildConfig {
  SampleConfig sample;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

// Builds one subgraph per distinct pair. The result is independent of
// `workers`.
SubgraphCache build_cache(const kg::KnowledgeGraph& kg, std::span<const SubgraphCache::Key> pairs,
                          const BuildConfig& cfg);

// Cache lookup with on-demand construction for pairs the cache lacks.
class SubgraphSource {
 public:
  SubgraphSource(const kg::KnowledgeGraph& kg, SubgraphCache cache, BuildConfig cfg, bool allow_build = true);

  const Subgraph& get(EntityId u, EntityId i);
  const kg::KnowledgeGraph& graph() const { return kg_; }
  std::size_t built_on_demand() const { return built_; }

 private:
  const kg::KnowledgeGraph& kg_;
  SubgraphCache cache_;
  BuildConfig cfg_;
  bool allow_build_;
  std::size_t built_ = 0;
};

}  // namespace hakg::subgraph
