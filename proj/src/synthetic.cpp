#include "hakg/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <vector>

#include "hakg/error.hpp"
#include "hakg/rng.hpp"

namespace hakg::synth {

namespace {

std::string row(const std::string& h, const char* ht, const char* rel, const std::string& t, const char* tt) {
  return h + '\t' + ht + '\t' + rel + '\t' + t + '\t' + tt + '\n';
}

}  // namespace

SyntheticText generate(const SyntheticConfig& cfg) {
  if (cfg.blocks == 0 || cfg.users < cfg.blocks || cfg.items < cfg.blocks || cfg.categories_per_block == 0) {
    throw ConfigError("synthetic dataset needs at least one user and item per block");
  }
  auto block_of = [&](std::size_t k, std::size_t n) { return k * cfg.blocks / n; };
  SyntheticText out;
  for (std::size_t i = 0; i < cfg.items; ++i) {
    const std::size_t b = block_of(i, cfg.items);
    const std::string item = "i" + std::to_string(i);
    const std::size_t cat = b * cfg.categories_per_block + i % cfg.categories_per_block;
    out.kg += row(item, "item", "belongs_to", "c" + std::to_string(cat), "category");
    const std::size_t brand = i % 3 == 0 ? (b + 1) % cfg.blocks : b;
    out.kg += row(item, "item", "made_by", "b" + std::to_string(brand), "brand");
  }
  for (std::size_t u = 0; u < cfg.users; ++u) {
    out.kg += row("u" + std::to_string(u), "user", "lives_in", "r" + std::to_string(block_of(u, cfg.users)), "region");
  }

  Rng rng(derive_seed(cfg.seed, {0x5e7d}));
  for (std::size_t u = 0; u < cfg.users; ++u) {
    const std::size_t b = block_of(u, cfg.users);
    std::vector<std::size_t> items;
    for (std::size_t i = 0; i < cfg.items; ++i) {
      if (block_of(i, cfg.items) == b) items.push_back(i);
    }
    std::shuffle(items.begin(), items.end(), rng);
    for (std::size_t t = 0; t < items.size(); ++t) {
      const int rating = 1 + static_cast<int>(uniform_index(rng, 5));
      out.interactions += "u" + std::to_string(u) + "\ti" + std::to_string(items[t]) + '\t' +
                          std::to_string(rating) + '\t' + std::to_string(t + 1) + '\n';
    }
  }
  return out;
}

void write_dataset(const SyntheticConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto text = generate(cfg);
  for (const auto& [name, body] : {std::pair{"kg.tsv", &text.kg}, std::pair{"interactions.tsv", &text.interactions}}) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + (dir / name).string());
    out << *body;
  }
}

}  // namespace hakg::synth
