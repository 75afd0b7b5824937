#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hakg/rng.hpp"
#include "hakg/types.hpp"

namespace hakg::kg {

struct Neighbor {
  EntityId entity;
  RelationId relation;
};

struct Link {
  EntityId head;
  EntityId tail;
  RelationId relation;
};

// Typed entities joined by undirected typed links. Every link is visible from
// both endpoints with the same relation; a (h, k, r) link and its reverse
// (k, h, r) are the same link and are stored once.
class KnowledgeGraph {
 public:
  // Returns the existing index when `name` was seen before; a different type
  // for a known entity is a ValidationError.
  EntityId add_entity(std::string_view name, std::string_view type);
  RelationId add_relation(std::string_view name);
  // Returns false when the link was already present. Self-loops throw.
  bool add_link(EntityId head, EntityId tail, RelationId relation);

  // Checks the heterogeneity condition (|A| > 1 or |R| > 1).
  void validate() const;

  std::size_t entity_count() const { return entity_names_.size(); }
  std::size_t type_count() const { return type_names_.size(); }
  std::size_t relation_count() const { return relation_names_.size(); }
  std::size_t link_count() const { return links_.size(); }

  std::span<const Neighbor> neighbors(EntityId e) const { return adjacency_.at(e); }
  std::span<const Link> links() const { return links_; }
  std::span<const TypeId> entity_types() const { return entity_types_; }
  TypeId type_of(EntityId e) const { return entity_types_.at(e); }

  const std::string& entity_name(EntityId e) const { return entity_names_.at(e); }
  const std::string& type_name(TypeId t) const { return type_names_.at(t); }
  const std::string& relation_name(RelationId r) const { return relation_names_.at(r); }

  std::optional<EntityId> find_entity(std::string_view name) const;
  std::optional<TypeId> find_type(std::string_view name) const;
  std::optional<RelationId> find_relation(std::string_view name) const;
  bool has_link(EntityId a, EntityId b, RelationId relation) const;

  // Same entities, types and relations; no links.
  KnowledgeGraph without_links() const;

 private:
  static std::uint64_t link_key(EntityId a, EntityId b, RelationId r);

  std::vector<std::string> entity_names_;
  std::vector<TypeId> entity_types_;
  std::vector<std::string> type_names_;
  std::vector<std::string> relation_names_;
  std::unordered_map<std::string, EntityId> entity_index_;
  std::unordered_map<std::string, TypeId> type_index_;
  std::unordered_map<std::string, RelationId> relation_index_;
  std::vector<Link> links_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::unordered_set<std::uint64_t> link_keys_;
};

// KG TSV: head_id \t head_type \t relation_type \t tail_id \t tail_type
KnowledgeGraph load_kg(const std::filesystem::path& path);
KnowledgeGraph parse_kg(std::istream& in, const std::string& source = "<stream>");

struct Interaction {
  std::uint32_t user;      // index into InteractionData::users
  std::uint32_t item;      // index into InteractionData::items
  std::int64_t timestamp;  // defaults to the 1-based line number
  std::size_t order;       // file order, breaks timestamp ties
};

// Binarized implicit feedback. `users` and `items` hold KG entity indices in
// ascending order so every stage reconstructs identical dense indices.
struct InteractionData {
  std::vector<EntityId> users;
  std::vector<EntityId> items;
  std::vector<Interaction> events;
  std::size_t dropped_rows = 0;  // rows whose user or item is not a KG entity
};

// Interactions TSV: user_id \t item_id [\t rating [\t timestamp]]
InteractionData load_interactions(const std::filesystem::path& path, const KnowledgeGraph& kg);
InteractionData parse_interactions(std::istream& in, const KnowledgeGraph& kg,
                                   const std::string& source = "<stream>");
// Writes the binarized data back in the interactions TSV format (rating = 1).
void dump_interactions(const InteractionData& data, const KnowledgeGraph& kg,
                       const std::filesystem::path& path);

struct UserItem {
  std::uint32_t user;
  std::uint32_t item;
  auto operator<=>(const UserItem&) const = default;
};

// Train/validation/test partition over the dense user/item indices of an
// InteractionData. Validation and test hold one item per user under
// leave-one-out and possibly several under ratio splitting.
struct SplitData {
  std::vector<EntityId> users;
  std::vector<EntityId> items;
  std::vector<UserItem> train;  // sorted
  std::map<std::uint32_t, std::vector<std::uint32_t>> validation;
  std::map<std::uint32_t, std::vector<std::uint32_t>> test;
  std::vector<std::vector<std::uint32_t>> interacted;  // per user, sorted, all roles
  std::vector<std::size_t> train_counts;

  std::vector<std::uint32_t> train_items(std::uint32_t user) const;
};

SplitData leave_one_out_split(const InteractionData& data);
SplitData split_by_ratio(const InteractionData& data, double rho, Rng& rng);

// Split dump TSV: user_id \t item_id \t {train|valid|test}
void write_split(const SplitData& split, const KnowledgeGraph& kg, const std::filesystem::path& path);
SplitData read_split(const std::filesystem::path& path, const KnowledgeGraph& kg);

// Uniform draw from items \ interacted. `interacted` must be sorted.
std::uint32_t sample_negative(std::span<const std::uint32_t> interacted, std::size_t item_count, Rng& rng);

// Up to `count` distinct uniform draws from items \ interacted (all of them
// when fewer are available).
std::vector<std::uint32_t> sample_negatives(std::span<const std::uint32_t> interacted,
                                            std::size_t item_count, std::size_t count, Rng& rng);

// Partitions the test users into `groups` sparsity groups of near-equal total
// training interactions. Group 0 is the sparsest.
std::map<std::uint32_t, int> sparsity_groups(const SplitData& split, int groups = 4);

// Greedy prefix cut of ascending `counts` into `groups` contiguous runs; the
// k-th cut lands where the running total is nearest k*total/groups (ties go to
// the later cut). Returns the group id for each position.
std::vector<int> prefix_partition(std::span<const std::size_t> counts, int groups);

// The graph paths are sampled from: the KG with every training interaction
// added as an `interaction_relation` link and every held-out interaction link
// removed.
KnowledgeGraph training_graph(const KnowledgeGraph& kg, const SplitData& split,
                              std::string_view interaction_relation);

}  // namespace hakg::kg
