#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hakg/encoder.hpp"
#include "hakg/subgraph.hpp"
#include "hakg/train.hpp"

namespace hakg::config {

// Ordered key -> raw value.
using KeyValues = std::map<std::string, std::string>;

// `key = value` lines; `#` starts a comment; blank lines ignored.
KeyValues parse_key_values(std::string_view text, const std::string& source = "<config>");

// Reads a config file; relative path values are resolved against the file's
// directory.
KeyValues load_config_file(const std::filesystem::path& path);

struct SplitMode {
  bool leave_one_out = true;
  double ratio = 0.8;
};

SplitMode parse_split_mode(std::string_view text);  // leave-one-out | ratio:<rho>

struct RunConfig {
  std::filesystem::path kg;
  std::filesystem::path interactions;
  std::filesystem::path workdir = ".";
  std::filesystem::path split_path;    // default workdir/split.tsv
  std::filesystem::path cache;         // default workdir/subgraphs.hkgc
  std::filesystem::path checkpoint;    // default workdir/model.hkgm
  std::filesystem::path metrics_out;   // default workdir/metrics.csv
  std::filesystem::path history_out;   // default workdir/history.csv
  std::filesystem::path ablation_out;  // default workdir/ablation.csv

  SplitMode split;
  std::optional<std::uint64_t> seed;
  std::string interaction_relation = "interact";

  model::TrainConfig train;
  model::Dimensions dims;
  model::Variant variant = model::Variant::kFull;
  subgraph::SampleConfig sample;
  std::size_t workers = 1;
  int groups = 0;

  // Throws ConfigError when no seed was given.
  std::uint64_t require_seed() const;
};

std::vector<std::string> known_keys();

// Defaults, then `file`, then `overrides`. Unknown keys and malformed values
// throw UsageError.
RunConfig resolve(const KeyValues& file, const KeyValues& overrides = {});

// Inverse of resolve for every known key.
KeyValues to_key_values(const RunConfig& cfg);

}  // namespace hakg::config
