#include "hakg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "hakg/error.hpp"
#include "hakg/log.hpp"
#include "hakg/rng.hpp"

namespace hakg::eval {

Metrics metrics_at_n(std::size_t rank, std::size_t n) {
  if (rank == 0 || n == 0) throw ContractError("rank and cutoff are 1-based");
  if (rank > n) return {};
  return {1.0, 1.0 / std::log2(static_cast<double>(rank) + 1.0), 1.0 / static_cast<double>(rank)};
}

std::size_t pessimistic_rank(double target, std::span<const double> others) {
  std::size_t ahead = 0;
  for (double s : others) {
    if (s >= target) ++ahead;
  }
  return 1 + ahead;
}

RankingResult rank_test_item(const Scorer& scorer, std::uint32_t user, std::uint32_t test_item,
                             std::span<const std::uint32_t> negatives) {
  std::set<std::uint32_t> seen{test_item};
  for (auto n : negatives) {
    if (!seen.insert(n).second) throw ContractError("duplicate ranking candidate " + std::to_string(n));
  }
  const double target = scorer(user, test_item);
  std::vector<double> scores;
  scores.reserve(negatives.size());
  for (auto n : negatives) scores.push_back(scorer(user, n));
  return {user, pessimistic_rank(target, scores), negatives.size() + 1};
}

Curve aggregate(std::span<const RankingResult> rankings) {
  std::map<std::uint32_t, std::vector<std::size_t>> by_user;
  for (const auto& r : rankings) by_user[r.user].push_back(r.rank);
  Curve c;
  c.users = by_user.size();
  if (c.users == 0) return c;
  for (const auto& [user, ranks] : by_user) {
    for (std::size_t n = 1; n <= kMaxCutoff; ++n) {
      Metrics sum;
      for (auto rank : ranks) {
        Metrics m = metrics_at_n(rank, n);
        sum.hit += m.hit;
        sum.ndcg += m.ndcg;
        sum.mrr += m.mrr;
      }
      const double k = static_cast<double>(ranks.size());
      c.hit[n - 1] += sum.hit / k;
      c.ndcg[n - 1] += sum.ndcg / k;
      c.mrr[n - 1] += sum.mrr / k;
    }
  }
  const double users = static_cast<double>(c.users);
  for (std::size_t n = 0; n < kMaxCutoff; ++n) {
    c.hit[n] /= users;
    c.ndcg[n] /= users;
    c.mrr[n] /= users;
  }
  return c;
}

namespace {

const std::map<std::uint32_t, std::vector<std::uint32_t>>& held_out(const kg::SplitData& split, Target t) {
  return t == Target::kTest ? split.test : split.validation;
}

}  // namespace

std::vector<std::uint32_t> evaluation_negatives(const kg::SplitData& split, std::uint32_t user,
                                                const EvalConfig& cfg) {
  const auto stream = cfg.target == Target::kTest ? StreamTag::kTestNegatives : StreamTag::kValidationNegatives;
  Rng rng(derive_seed(cfg.seed, {tag(stream), user}));
  return kg::sample_negatives(split.interacted.at(user), split.items.size(), cfg.negatives, rng);
}

std::vector<kg::UserItem> evaluation_pairs(const kg::SplitData& split, const EvalConfig& cfg) {
  std::vector<kg::UserItem> pairs;
  for (const auto& [user, items] : held_out(split, cfg.target)) {
    for (auto i : items) pairs.push_back({user, i});
    for (auto n : evaluation_negatives(split, user, cfg)) pairs.push_back({user, n});
  }
  return pairs;
}

MetricsReport evaluate(const Scorer& scorer, const kg::SplitData& split, const EvalConfig& cfg) {
  MetricsReport report;
  for (const auto& [user, items] : held_out(split, cfg.target)) {
    const auto negatives = evaluation_negatives(split, user, cfg);
    if (negatives.size() < cfg.negatives) ++report.shortfall_users;
    for (auto i : items) report.rankings.push_back(rank_test_item(scorer, user, i, negatives));
  }
  if (report.shortfall_users > 0) {
    log::info(report.shortfall_users, " users ranked against fewer than ", cfg.negatives, " negatives");
  }
  report.all = aggregate(report.rankings);
  if (cfg.groups > 0) {
    const auto groups = kg::sparsity_groups(split, cfg.groups);
    std::map<int, std::vector<RankingResult>> split_rankings;
    for (int g = 0; g < cfg.groups; ++g) split_rankings[g];
    for (const auto& r : report.rankings) split_rankings[groups.at(r.user)].push_back(r);
    for (const auto& [g, rs] : split_rankings) report.groups[g] = aggregate(rs);
  }
  return report;
}

std::string metrics_csv(const MetricsReport& report) {
  std::string out = "N,hit,ndcg,mrr,group\n";
  char line[128];
  auto emit = [&](const Curve& c, const std::string& group) {
    for (std::size_t n = 0; n < kMaxCutoff; ++n) {
      std::snprintf(line, sizeof line, "%zu,%.6f,%.6f,%.6f,", n + 1, c.hit[n], c.ndcg[n], c.mrr[n]);
      out += line;
      out += group;
      out += '\n';
    }
  };
  emit(report.all, "all");
  for (const auto& [g, c] : report.groups) emit(c, std::to_string(g));
  return out;
}

void write_metrics_csv(const MetricsReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write metrics file " + path.string());
  out << metrics_csv(report);
  if (!out) throw ValidationError("write failed for metrics file " + path.string());
}

}  // namespace hakg::eval
