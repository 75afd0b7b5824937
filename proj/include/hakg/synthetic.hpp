#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

namespace hakg::synth {

// Block-structured toy dataset: users and items are split evenly into blocks,
// every user interacts with every item of its own block. Side information:
// items belong to block-local categories and are made by brands (mostly the
// block's own, every third item by the next block's), users live in their
// block's region. Five entity types (user, item, category, brand, region);
// three KG relations plus the interaction relation added at training time.
struct SyntheticConfig {
  std::size_t users = 50;
  std::size_t items = 50;
  std::size_t blocks = 5;
  std::size_t categories_per_block = 2;
  std::uint64_t seed = 0;
};

struct SyntheticText {
  std::string kg;            // KG TSV
  std::string interactions;  // interactions TSV with rating and timestamp
};

SyntheticText generate(const SyntheticConfig& cfg);

// Writes kg.tsv and interactions.tsv into `dir` (created if needed).
void write_dataset(const SyntheticConfig& cfg, const std::filesystem::path& dir);

}  // namespace hakg::synth
