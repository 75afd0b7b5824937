#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hakg/kg_store.hpp"

namespace hakg::eval {

inline constexpr std::size_t kMaxCutoff = 15;

struct Metrics {
  double hit = 0.0;
  double ndcg = 0.0;
  double mrr = 0.0;
};

// Single relevant item at 1-based `rank`, cutoff n.
Metrics metrics_at_n(std::size_t rank, std::size_t n);

// 1 + #others scoring strictly higher + #others scoring equal.
std::size_t pessimistic_rank(double target, std::span<const double> others);

struct RankingResult {
  std::uint32_t user = 0;
  std::size_t rank = 0;
  std::size_t candidates = 0;
};

// Scores a (dense user, dense item) pair of the split.
using Scorer = std::function<double(std::uint32_t user, std::uint32_t item)>;

RankingResult rank_test_item(const Scorer& scorer, std::uint32_t user, std::uint32_t test_item,
                             std::span<const std::uint32_t> negatives);

struct Curve {
  std::array<double, kMaxCutoff> hit{};
  std::array<double, kMaxCutoff> ndcg{};
  std::array<double, kMaxCutoff> mrr{};
  std::size_t users = 0;
};

// Mean over users of each user's mean metrics (a user may hold several
// held-out items under ratio splits).
Curve aggregate(std::span<const RankingResult> rankings);

struct MetricsReport {
  Curve all;
  std::map<int, Curve> groups;  // sparsity group -> curve, empty unless requested
  std::vector<RankingResult> rankings;
  std::size_t shortfall_users = 0;  // users ranked against fewer negatives than asked
};

enum class Target { kTest, kValidation };

struct EvalConfig {
  std::uint64_t seed = 0;
  std::size_t negatives = 100;
  int groups = 0;  // 0 disables the sparsity breakdown
  Target target = Target::kTest;
};

// The fixed negative candidates of a user: distinct items the user never
// interacted with, drawn from a stream keyed by (seed, target, user).
std::vector<std::uint32_t> evaluation_negatives(const kg::SplitData& split, std::uint32_t user,
                                                const EvalConfig& cfg);

// Every (user, candidate) pair evaluate() will score, held-out items included.
std::vector<kg::UserItem> evaluation_pairs(const kg::SplitData& split, const EvalConfig& cfg);

MetricsReport evaluate(const Scorer& scorer, const kg::SplitData& split, const EvalConfig& cfg);

// CSV with header N,hit,ndcg,mrr,group; group "all" first, then 0..g-1.
std::string metrics_csv(const MetricsReport& report);
void write_metrics_csv(const MetricsReport& report, const std::filesystem::path& path);

}  // namespace hakg::eval
