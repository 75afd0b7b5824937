#include "hakg/kg_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hakg/error.hpp"
#include "hakg/log.hpp"

namespace hakg::kg {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cols;
}

std::string_view chomp(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

bool parse_int64(std::string_view s, std::int64_t& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

}  // namespace

// ---------------------------------------------------------------------------
// KnowledgeGraph

EntityId KnowledgeGraph::add_entity(std::string_view name, std::string_view type) {
  TypeId t;
  if (auto it = type_index_.find(std::string(type)); it != type_index_.end()) {
    t = it->second;
  } else {
    t = static_cast<TypeId>(type_names_.size());
    type_names_.emplace_back(type);
    type_index_.emplace(std::string(type), t);
  }
  if (auto it = entity_index_.find(std::string(name)); it != entity_index_.end()) {
    if (entity_types_[it->second] != t) {
      throw ValidationError("entity '" + std::string(name) + "' declared with types '" +
                            type_names_[entity_types_[it->second]] + "' and '" + std::string(type) + "'");
    }
    return it->second;
  }
  if (entity_names_.size() >= (1u << 24)) throw ValidationError("too many entities (limit 2^24)");
  auto e = static_cast<EntityId>(entity_names_.size());
  entity_names_.emplace_back(name);
  entity_types_.push_back(t);
  entity_index_.emplace(std::string(name), e);
  adjacency_.emplace_back();
  return e;
}

RelationId KnowledgeGraph::add_relation(std::string_view name) {
  if (auto it = relation_index_.find(std::string(name)); it != relation_index_.end()) return it->second;
  if (relation_names_.size() >= (1u << 16)) throw ValidationError("too many relation types (limit 2^16)");
  auto r = static_cast<RelationId>(relation_names_.size());
  relation_names_.emplace_back(name);
  relation_index_.emplace(std::string(name), r);
  return r;
}

std::uint64_t KnowledgeGraph::link_key(EntityId a, EntityId b, RelationId r) {
  if (a > b) std::swap(a, b);
  // 24 bits per entity leaves 16 for the relation.
  return (static_cast<std::uint64_t>(a) << 40) ^ (static_cast<std::uint64_t>(b) << 16) ^ r;
}

bool KnowledgeGraph::add_link(EntityId head, EntityId tail, RelationId relation) {
  if (head >= entity_count() || tail >= entity_count()) throw std::out_of_range("link endpoint out of range");
  if (relation >= relation_count()) throw std::out_of_range("relation out of range");
  if (head == tail) throw ValidationError("self-loop on entity '" + entity_names_[head] + "'");
  if (!link_keys_.insert(link_key(head, tail, relation)).second) return false;
  links_.push_back({head, tail, relation});
  adjacency_[head].push_back({tail, relation});
  adjacency_[tail].push_back({head, relation});
  return true;
}

void KnowledgeGraph::validate() const {
  if (type_count() <= 1 && relation_count() <= 1) {
    throw ValidationError("knowledge graph is not heterogeneous: needs more than one entity type or relation type");
  }
}

std::optional<EntityId> KnowledgeGraph::find_entity(std::string_view name) const {
  auto it = entity_index_.find(std::string(name));
  if (it == entity_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<TypeId> KnowledgeGraph::find_type(std::string_view name) const {
  auto it = type_index_.find(std::string(name));
  if (it == type_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<RelationId> KnowledgeGraph::find_relation(std::string_view name) const {
  auto it = relation_index_.find(std::string(name));
  if (it == relation_index_.end()) return std::nullopt;
  return it->second;
}

bool KnowledgeGraph::has_link(EntityId a, EntityId b, RelationId relation) const {
  return link_keys_.contains(link_key(a, b, relation));
}

KnowledgeGraph KnowledgeGraph::without_links() const {
  KnowledgeGraph out = *this;
  out.links_.clear();
  out.link_keys_.clear();
  for (auto& adj : out.adjacency_) adj.clear();
  return out;
}

// ---------------------------------------------------------------------------
// Loading

KnowledgeGraph parse_kg(std::istream& in, const std::string& source) {
  KnowledgeGraph kg;
  std::string raw;
  std::size_t line_no = 0;
  std::size_t duplicates = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = chomp(raw);
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 5) {
      throw ParseError(source, line_no, "expected 5 tab-separated columns, got " + std::to_string(cols.size()));
    }
    for (auto c : cols) {
      if (c.empty()) throw ParseError(source, line_no, "empty column");
    }
    if (cols[0] == cols[3]) {
      throw ValidationError(source + ":" + std::to_string(line_no) + ": self-loop on '" + std::string(cols[0]) + "'");
    }
    EntityId h = kg.add_entity(cols[0], cols[1]);
    RelationId r = kg.add_relation(cols[2]);
    EntityId t = kg.add_entity(cols[3], cols[4]);
    if (!kg.add_link(h, t, r)) ++duplicates;
  }
  kg.validate();
  if (duplicates > 0) log::debug("kg: ", duplicates, " duplicate links collapsed in ", source);
  return kg;
}

KnowledgeGraph load_kg(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_kg(in, path.string());
}

InteractionData parse_interactions(std::istream& in, const KnowledgeGraph& kg, const std::string& source) {
  struct Row {
    EntityId user, item;
    std::int64_t ts;
    std::size_t order;
  };
  std::vector<Row> rows;
  std::map<std::pair<EntityId, EntityId>, std::size_t> first;  // (user, item) -> row slot
  InteractionData data;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = chomp(raw);
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() < 2 || cols.size() > 4) {
      throw ParseError(source, line_no, "expected 2 to 4 tab-separated columns, got " + std::to_string(cols.size()));
    }
    std::int64_t ts = static_cast<std::int64_t>(line_no);
    if (cols.size() == 4 && !parse_int64(cols[3], ts)) {
      throw ParseError(source, line_no, "non-numeric timestamp '" + std::string(cols[3]) + "'");
    }
    auto u = kg.find_entity(cols[0]);
    auto i = kg.find_entity(cols[1]);
    if (!u || !i || *u == *i) {
      ++data.dropped_rows;
      continue;
    }
    auto [it, inserted] = first.try_emplace({*u, *i}, rows.size());
    if (inserted) {
      rows.push_back({*u, *i, ts, rows.size()});
    } else if (ts < rows[it->second].ts) {
      rows[it->second].ts = ts;  // keep the earliest occurrence
    }
  }
  if (data.dropped_rows > 0) {
    log::warn("interactions: dropped ", data.dropped_rows, " rows whose user or item is not a KG entity");
  }
  if (rows.empty()) throw EmptyDatasetError(source + ": no usable interactions");

  for (const auto& r : rows) {
    data.users.push_back(r.user);
    data.items.push_back(r.item);
  }
  auto uniq = [](std::vector<EntityId>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(data.users);
  uniq(data.items);
  auto index_of = [](const std::vector<EntityId>& v, EntityId e) {
    return static_cast<std::uint32_t>(std::lower_bound(v.begin(), v.end(), e) - v.begin());
  };
  data.events.reserve(rows.size());
  for (const auto& r : rows) {
    data.events.push_back({index_of(data.users, r.user), index_of(data.items, r.item), r.ts, r.order});
  }
  return data;
}

InteractionData load_interactions(const std::filesystem::path& path, const KnowledgeGraph& kg) {
  auto in = open_input(path);
  return parse_interactions(in, kg, path.string());
}

void dump_interactions(const InteractionData& data, const KnowledgeGraph& kg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  std::vector<const Interaction*> order;
  for (const auto& e : data.events) order.push_back(&e);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->order < b->order; });
  for (const auto* e : order) {
    out << kg.entity_name(data.users[e->user]) << '\t' << kg.entity_name(data.items[e->item]) << "\t1\t"
        << e->timestamp << '\n';
  }
}

// ---------------------------------------------------------------------------
// Splits

std::vector<std::uint32_t> SplitData::train_items(std::uint32_t user) const {
  std::vector<std::uint32_t> out;
  auto lo = std::lower_bound(train.begin(), train.end(), UserItem{user, 0});
  for (auto it = lo; it != train.end() && it->user == user; ++it) out.push_back(it->item);
  return out;
}

namespace {

std::vector<std::vector<const Interaction*>> events_by_user(const InteractionData& data) {
  std::vector<std::vector<const Interaction*>> per_user(data.users.size());
  for (const auto& e : data.events) per_user[e.user].push_back(&e);
  for (auto& evs : per_user) {
    std::sort(evs.begin(), evs.end(), [](const Interaction* a, const Interaction* b) {
      return a->timestamp != b->timestamp ? a->timestamp < b->timestamp : a->order < b->order;
    });
  }
  return per_user;
}

void finalize(SplitData& s) {
  std::sort(s.train.begin(), s.train.end());
  s.interacted.assign(s.users.size(), {});
  s.train_counts.assign(s.users.size(), 0);
  for (const auto& p : s.train) {
    s.interacted[p.user].push_back(p.item);
    ++s.train_counts[p.user];
  }
  for (auto* held : {&s.validation, &s.test}) {
    for (auto& [u, items] : *held) {
      std::sort(items.begin(), items.end());
      for (auto i : items) s.interacted[u].push_back(i);
    }
  }
  for (auto& v : s.interacted) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
}

}  // namespace

SplitData leave_one_out_split(const InteractionData& data) {
  SplitData s;
  s.users = data.users;
  s.items = data.items;
  auto per_user = events_by_user(data);
  for (std::uint32_t u = 0; u < per_user.size(); ++u) {
    auto& evs = per_user[u];
    std::size_t n = evs.size();
    std::size_t train_end = n;
    if (n >= 2) {
      s.test[u].push_back(evs[n - 1]->item);
      train_end = n - 1;
    }
    if (n >= 3) {
      s.validation[u].push_back(evs[n - 2]->item);
      train_end = n - 2;
    }
    for (std::size_t k = 0; k < train_end; ++k) s.train.push_back({u, evs[k]->item});
  }
  finalize(s);
  return s;
}

SplitData split_by_ratio(const InteractionData& data, double rho, Rng& rng) {
  if (!(rho > 0.0 && rho < 1.0)) throw ContractError("split ratio must lie in (0, 1)");
  SplitData s;
  s.users = data.users;
  s.items = data.items;
  auto per_user = events_by_user(data);
  for (std::uint32_t u = 0; u < per_user.size(); ++u) {
    auto& evs = per_user[u];
    if (evs.empty()) continue;
    std::shuffle(evs.begin(), evs.end(), rng);
    // ceil(rho * n) >= 1, so no user ends up without training data.
    auto n_train = static_cast<std::size_t>(std::ceil(rho * static_cast<double>(evs.size()) - 1e-12));
    n_train = std::clamp<std::size_t>(n_train, 1, evs.size());
    for (std::size_t k = 0; k < evs.size(); ++k) {
      if (k < n_train) {
        s.train.push_back({u, evs[k]->item});
      } else {
        s.test[u].push_back(evs[k]->item);
      }
    }
  }
  // Carve 10% of the training interactions out as validation without
  // emptying any user's training set.
  std::sort(s.train.begin(), s.train.end());
  std::vector<std::size_t> counts(s.users.size(), 0);
  for (const auto& p : s.train) ++counts[p.user];
  std::vector<std::size_t> order(s.train.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  auto target = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(s.train.size())));
  std::vector<bool> moved(s.train.size(), false);
  std::size_t taken = 0;
  for (std::size_t idx : order) {
    if (taken == target) break;
    const auto& p = s.train[idx];
    if (counts[p.user] <= 1) continue;
    --counts[p.user];
    moved[idx] = true;
    s.validation[p.user].push_back(p.item);
    ++taken;
  }
  std::vector<UserItem> kept;
  for (std::size_t k = 0; k < s.train.size(); ++k) {
    if (!moved[k]) kept.push_back(s.train[k]);
  }
  s.train = std::move(kept);
  finalize(s);
  return s;
}

void write_split(const SplitData& split, const KnowledgeGraph& kg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  auto line = [&](std::uint32_t u, std::uint32_t i, const char* role) {
    out << kg.entity_name(split.users[u]) << '\t' << kg.entity_name(split.items[i]) << '\t' << role << '\n';
  };
  for (std::uint32_t u = 0; u < split.users.size(); ++u) {
    for (auto i : split.train_items(u)) line(u, i, "train");
    if (auto it = split.validation.find(u); it != split.validation.end()) {
      for (auto i : it->second) line(u, i, "valid");
    }
    if (auto it = split.test.find(u); it != split.test.end()) {
      for (auto i : it->second) line(u, i, "test");
    }
  }
}

SplitData read_split(const std::filesystem::path& path, const KnowledgeGraph& kg) {
  auto in = open_input(path);
  struct Row {
    EntityId user, item;
    int role;
  };
  std::vector<Row> rows;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = chomp(raw);
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 3) throw ParseError(path.string(), line_no, "expected 3 tab-separated columns");
    auto u = kg.find_entity(cols[0]);
    auto i = kg.find_entity(cols[1]);
    if (!u || !i) throw ParseError(path.string(), line_no, "unknown entity");
    int role;
    if (cols[2] == "train") {
      role = 0;
    } else if (cols[2] == "valid") {
      role = 1;
    } else if (cols[2] == "test") {
      role = 2;
    } else {
      throw ParseError(path.string(), line_no, "role must be train, valid or test");
    }
    rows.push_back({*u, *i, role});
  }
  if (rows.empty()) throw EmptyDatasetError(path.string() + ": empty split");
  SplitData s;
  for (const auto& r : rows) {
    s.users.push_back(r.user);
    s.items.push_back(r.item);
  }
  for (auto* v : {&s.users, &s.items}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  auto index_of = [](const std::vector<EntityId>& v, EntityId e) {
    return static_cast<std::uint32_t>(std::lower_bound(v.begin(), v.end(), e) - v.begin());
  };
  for (const auto& r : rows) {
    std::uint32_t u = index_of(s.users, r.user);
    std::uint32_t i = index_of(s.items, r.item);
    if (r.role == 0) {
      s.train.push_back({u, i});
    } else if (r.role == 1) {
      s.validation[u].push_back(i);
    } else {
      s.test[u].push_back(i);
    }
  }
  finalize(s);
  return s;
}

// ---------------------------------------------------------------------------
// Negative sampling

std::uint32_t sample_negative(std::span<const std::uint32_t> interacted, std::size_t item_count, Rng& rng) {
  if (interacted.size() >= item_count) throw ExhaustionError("user has interacted with every item");
  if (interacted.size() * 2 <= item_count) {
    // Rejection sampling is exactly uniform over the complement.
    while (true) {
      auto i = static_cast<std::uint32_t>(uniform_index(rng, item_count));
      if (!std::binary_search(interacted.begin(), interacted.end(), i)) return i;
    }
  }
  std::size_t k = uniform_index(rng, item_count - interacted.size());
  // k-th item not in `interacted`.
  std::uint32_t candidate = 0;
  for (auto it = interacted.begin();; ++candidate) {
    while (it != interacted.end() && *it < candidate) ++it;
    if (it != interacted.end() && *it == candidate) continue;
    if (k == 0) return candidate;
    --k;
  }
}

std::vector<std::uint32_t> sample_negatives(std::span<const std::uint32_t> interacted, std::size_t item_count,
                                            std::size_t count, Rng& rng) {
  std::vector<std::uint32_t> pool;
  pool.reserve(item_count);
  for (std::uint32_t i = 0; i < item_count; ++i) {
    if (!std::binary_search(interacted.begin(), interacted.end(), i)) pool.push_back(i);
  }
  if (pool.size() <= count) return pool;
  // Partial Fisher-Yates.
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t j = k + uniform_index(rng, pool.size() - k);
    std::swap(pool[k], pool[j]);
  }
  pool.resize(count);
  return pool;
}

// ---------------------------------------------------------------------------
// Sparsity groups

std::vector<int> prefix_partition(std::span<const std::size_t> counts, int groups) {
  const std::size_t n = counts.size();
  if (groups < 2) throw ContractError("need at least two groups");
  if (n < static_cast<std::size_t>(groups)) throw ContractError("fewer users than sparsity groups");
  std::vector<std::size_t> cumulative(n);
  std::partial_sum(counts.begin(), counts.end(), cumulative.begin());
  const double total = static_cast<double>(cumulative.back());

  // cut[k] = number of positions in groups 0..k.
  std::vector<std::size_t> cut(groups, n);
  std::size_t prev = 0;
  for (int k = 1; k < groups; ++k) {
    const double target = total * k / groups;
    // Leave room for the remaining groups to be non-empty.
    const std::size_t lo = prev + 1;
    const std::size_t hi = n - static_cast<std::size_t>(groups - k);
    std::size_t best = lo;
    double best_gap = std::abs(static_cast<double>(cumulative[lo - 1]) - target);
    for (std::size_t c = lo + 1; c <= hi; ++c) {
      double gap = std::abs(static_cast<double>(cumulative[c - 1]) - target);
      if (gap <= best_gap) {
        best = c;
        best_gap = gap;
      }
      if (static_cast<double>(cumulative[c - 1]) > target) break;
    }
    cut[k - 1] = best;
    prev = best;
  }
  std::vector<int> out(n);
  int g = 0;
  for (std::size_t p = 0; p < n; ++p) {
    while (p >= cut[g]) ++g;
    out[p] = g;
  }
  return out;
}

std::map<std::uint32_t, int> sparsity_groups(const SplitData& split, int groups) {
  if (split.train.empty()) throw ContractError("sparsity groups need training interactions");
  std::vector<std::uint32_t> users;
  for (const auto& [u, items] : split.test) users.push_back(u);
  if (users.size() < static_cast<std::size_t>(std::max(groups, 0))) {
    throw ContractError("only " + std::to_string(users.size()) + " test users for " + std::to_string(groups) +
                        " sparsity groups");
  }
  std::stable_sort(users.begin(), users.end(), [&](std::uint32_t a, std::uint32_t b) {
    return split.train_counts[a] < split.train_counts[b];
  });
  std::vector<std::size_t> counts;
  for (auto u : users) counts.push_back(split.train_counts[u]);
  auto assignment = prefix_partition(counts, groups);
  std::map<std::uint32_t, int> out;
  for (std::size_t k = 0; k < users.size(); ++k) out[users[k]] = assignment[k];
  return out;
}

// ---------------------------------------------------------------------------

KnowledgeGraph training_graph(const KnowledgeGraph& kg, const SplitData& split, std::string_view interaction_relation) {
  KnowledgeGraph out = kg.without_links();
  RelationId interact = out.add_relation(interaction_relation);
  std::unordered_set<std::uint64_t> held_out;
  auto key = [](EntityId a, EntityId b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
  };
  for (const auto* held : {&split.validation, &split.test}) {
    for (const auto& [u, items] : *held) {
      for (auto i : items) held_out.insert(key(split.users[u], split.items[i]));
    }
  }
  for (const auto& l : kg.links()) {
    if (l.relation == interact && held_out.contains(key(l.head, l.tail))) continue;
    out.add_link(l.head, l.tail, l.relation);
  }
  for (const auto& p : split.train) out.add_link(split.users[p.user], split.items[p.item], interact);
  return out;
}

}  // namespace hakg::kg
