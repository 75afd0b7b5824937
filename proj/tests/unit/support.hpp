#pragma once

#include <cstdint>
#include <algorithm>
#include <filesystem>
#include <numeric>
#include <set>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "hakg/kg_store.hpp"
#include "hakg/rng.hpp"
#include "hakg/subgraph.hpp"

namespace testing {

// The running example: four users, three businesses, a category and a city.
inline const char* kToyKg =
    "Mike\tuser\tinteraction\tMcDonald's\tbusiness\n"
    "May\tuser\tinteraction\tMcDonald's\tbusiness\n"
    "May\tuser\tinteraction\tKFC\tbusiness\n"
    "Mike\tuser\tinteraction\tWalmart\tbusiness\n"
    "Mike\tuser\tfriendship\tJim\tuser\n"
    "Amy\tuser\tinteraction\tKFC\tbusiness\n"
    "Amy\tuser\tfriendship\tMay\tuser\n"
    "KFC\tbusiness\tcategorization\tFood\tcategory\n"
    "McDonald's\tbusiness\tcategorization\tFood\tcategory\n"
    "KFC\tbusiness\tlocation\tSunCity\tcity\n"
    "McDonald's\tbusiness\tlocation\tSunCity\tcity\n"
    "Walmart\tbusiness\tlocation\tSunCity\tcity\n";

inline hakg::kg::KnowledgeGraph kg_from(const std::string& text) {
  std::istringstream in(text);
  return hakg::kg::parse_kg(in, "test.tsv");
}

inline hakg::kg::InteractionData interactions_from(const std::string& text, const hakg::kg::KnowledgeGraph& kg) {
  std::istringstream in(text);
  return hakg::kg::parse_interactions(in, kg, "interactions.tsv");
}

// Random connected-ish toy graph: n entities over 3 types, random links over
// 3 relations, with a spanning chain so u and i are usually reachable.
inline hakg::kg::KnowledgeGraph random_kg(std::uint64_t seed, std::size_t n, std::size_t extra_links) {
  hakg::Rng rng(seed);
  hakg::kg::KnowledgeGraph kg;
  for (std::size_t e = 0; e < n; ++e) kg.add_entity("e" + std::to_string(e), "t" + std::to_string(e % 3));
  for (int r = 0; r < 3; ++r) kg.add_relation("r" + std::to_string(r));
  for (std::size_t e = 1; e < n; ++e) {
    if (hakg::uniform_index(rng, 4) != 0) {
      kg.add_link(static_cast<hakg::EntityId>(hakg::uniform_index(rng, e)), static_cast<hakg::EntityId>(e),
                  static_cast<hakg::RelationId>(hakg::uniform_index(rng, 3)));
    }
  }
  for (std::size_t k = 0; k < extra_links; ++k) {
    auto a = static_cast<hakg::EntityId>(hakg::uniform_index(rng, n));
    auto b = static_cast<hakg::EntityId>(hakg::uniform_index(rng, n));
    if (a != b) kg.add_link(a, b, static_cast<hakg::RelationId>(hakg::uniform_index(rng, 3)));
  }
  return kg;
}

// Hand-built subgraph: n distinct global entities drawn from [0, universe)
// and up to `links` distinct undirected links over `relations` relations.
inline hakg::subgraph::Subgraph random_subgraph(hakg::Rng& rng, std::size_t n, std::size_t links,
                                                std::size_t universe, std::size_t relations) {
  hakg::subgraph::Subgraph sg;
  std::vector<hakg::EntityId> pool(universe);
  std::iota(pool.begin(), pool.end(), 0);
  std::shuffle(pool.begin(), pool.end(), rng);
  sg.entities.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
  std::set<hakg::subgraph::LocalLink> seen;
  for (std::size_t k = 0; k < 4 * links && seen.size() < links && n > 1; ++k) {
    auto a = static_cast<std::uint32_t>(hakg::uniform_index(rng, n));
    auto b = static_cast<std::uint32_t>(hakg::uniform_index(rng, n));
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    seen.insert({a, b, static_cast<hakg::RelationId>(hakg::uniform_index(rng, relations))});
  }
  sg.links.assign(seen.begin(), seen.end());
  return sg;
}

// Relabels local entities: old local index k moves to perm[k].
inline hakg::subgraph::Subgraph permute_subgraph(const hakg::subgraph::Subgraph& sg,
                                                 const std::vector<std::uint32_t>& perm) {
  hakg::subgraph::Subgraph out;
  out.entities.resize(sg.size());
  for (std::size_t k = 0; k < sg.size(); ++k) out.entities[perm[k]] = sg.entities[k];
  for (const auto& l : sg.links) out.links.push_back({perm[l.head], perm[l.tail], l.relation});
  std::reverse(out.links.begin(), out.links.end());
  return out;
}

// Random permutation that keeps both anchors in place.
inline std::vector<std::uint32_t> anchor_fixing_permutation(hakg::Rng& rng, std::size_t n) {
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  if (n > 2) std::shuffle(perm.begin() + 2, perm.end(), rng);
  return perm;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("hakg-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace testing
