#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "hakg/checkpoint.hpp"
#include "hakg/cli.hpp"
#include "hakg/config.hpp"
#include "hakg/error.hpp"
#include "hakg/synthetic.hpp"
#include "support.hpp"

using namespace hakg;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result hakg_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Small synthetic dataset plus a config file with tiny dimensions.
struct Workspace {
  explicit Workspace(const std::string& tag, std::size_t max_iter = 2) : dir(tag) {
    synth::SyntheticConfig sc;
    sc.users = 12;
    sc.items = 12;
    sc.blocks = 3;
    sc.seed = 1;
    synth::write_dataset(sc, dir.path());
    testing::write_file(dir / "run.cfg", "# test run\n"
                                         "kg = kg.tsv\n"
                                         "interactions = interactions.tsv\n"
                                         "workdir = work\n"
                                         "seed = 5\n"
                                         "d_e = 8\nd_t = 4\nd_r = 4\nd_a = 8\nheads = 2\n"
                                         "batch_size = 32\nnegative_pool = 2\neval_negatives = 20\n"
                                         "max_iter = " + std::to_string(max_iter) + "\n");
  }
  std::string config() const { return (dir / "run.cfg").string(); }
  std::filesystem::path work(const std::string& name) const { return dir / ("work/" + name); }

  Result stage(const std::string& name, std::vector<std::string> extra = {}) const {
    std::vector<std::string> args{name, "--config", config()};
    args.insert(args.end(), extra.begin(), extra.end());
    return hakg_run(args);
  }

  testing::TempDir dir;
};

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config precedence is override over file over default") {
    config::KeyValues file{{"seed", "3"}, {"lr", "0.5"}, {"variant", "-r"}};
    config::KeyValues over{{"variant", "max"}};
    const auto cfg = config::resolve(file, over);
    CHECK(cfg.train.lr == 0.5);
    CHECK(cfg.variant == model::Variant::kMaxPool);
    CHECK(cfg.train.l2 == 1e-5);
    CHECK(cfg.dims.entity == 128);
    CHECK(cfg.sample.paths == 15);
    CHECK(cfg.sample.max_len == 6);
    CHECK(cfg.train.seed == 3);
    CHECK(cfg.cache == std::filesystem::path(".") / "subgraphs.hkgc");
  }

  TEST_CASE("config parsing errors") {
    CHECK_THROWS_AS(config::resolve({{"bogus", "1"}}), UsageError);
    CHECK_THROWS_AS(config::resolve({{"lr", "fast"}}), UsageError);
    CHECK_THROWS_AS(config::resolve({}).require_seed(), ConfigError);
    CHECK_THROWS_AS(config::parse_key_values("seed 3\n"), ParseError);
    const auto kv = config::parse_key_values("  a = 1 # note\n\n# skip\nb=two\n");
    CHECK(kv.at("a") == "1");
    CHECK(kv.at("b") == "two");
    CHECK(config::parse_split_mode("ratio:0.7").ratio == 0.7);
    CHECK_FALSE(config::parse_split_mode("ratio:0.7").leave_one_out);
    CHECK(config::parse_split_mode("loo").leave_one_out);
    CHECK_THROWS(config::parse_split_mode("ratio:2"));
  }

  TEST_CASE("config round-trips through key values") {
    auto cfg = config::resolve({{"seed", "9"}, {"d_e", "16"}, {"split", "ratio:0.6"}, {"variant", "-g"}});
    const auto again = config::resolve(config::to_key_values(cfg));
    CHECK(again.dims == cfg.dims);
    CHECK(again.variant == cfg.variant);
    CHECK(again.split.ratio == cfg.split.ratio);
    CHECK(again.seed == cfg.seed);
  }

  TEST_CASE("help and usage errors") {
    CHECK(hakg_run({"--help"}).code == 0);
    CHECK(hakg_run({}).code == 2);
    CHECK(hakg_run({"frobnicate"}).code == 2);
    CHECK(hakg_run({"train"}).code == 2);
  }

  TEST_CASE("unknown config key exits with a usage error") {
    Workspace ws("cli-key");
    const auto r = ws.stage("prepare", {"--set", "colour=blue"});
    CHECK(r.code == 2);
    CHECK(r.err.find("colour") != std::string::npos);
    CHECK(ws.stage("prepare", {"--set", "novalue"}).code == 2);
  }

  TEST_CASE("train without a cache names the missing file") {
    Workspace ws("cli-nocache");
    REQUIRE(ws.stage("prepare").code == 0);
    const auto r = ws.stage("train");
    CHECK(r.code == 1);
    CHECK(r.err.find("subgraphs.hkgc") != std::string::npos);
    CHECK(r.err.find("build-subgraphs") != std::string::npos);
  }

  TEST_CASE("stages before prepare report the missing split") {
    Workspace ws("cli-nosplit");
    const auto r = ws.stage("build-subgraphs");
    CHECK(r.code == 1);
    CHECK(r.err.find("split.tsv") != std::string::npos);
  }

  TEST_CASE("full pipeline writes every artefact") {
    Workspace ws("cli-full");
    REQUIRE(ws.stage("prepare").code == 0);
    REQUIRE(ws.stage("build-subgraphs", {"--workers", "2"}).code == 0);
    REQUIRE(ws.stage("train", {"--variant", "max"}).code == 0);
    REQUIRE(ws.stage("evaluate", {"--groups", "2"}).code == 0);
    const auto ck = model::load_checkpoint(ws.work("model.hkgm"));
    CHECK(ck.variant == model::Variant::kMaxPool);
    CHECK(ck.dims.entity == 8);
    const std::string metrics = testing::read_file(ws.work("metrics.csv"));
    CHECK(metrics.rfind("N,hit,ndcg,mrr,group\n", 0) == 0);
    CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 1 + 3 * 15);
    const std::string history = testing::read_file(ws.work("history.csv"));
    CHECK(history.rfind("epoch,loss,valid_hit10\n", 0) == 0);
    CHECK(std::count(history.begin(), history.end(), '\n') == 3);
    const std::string split = testing::read_file(ws.work("split.tsv"));
    CHECK(split.find("\ttest\n") != std::string::npos);
    CHECK(split.find("\tvalid\n") != std::string::npos);
  }

  TEST_CASE("flag beats --set beats the config file") {
    Workspace ws("cli-prec");
    REQUIRE(ws.stage("prepare").code == 0);
    REQUIRE(ws.stage("build-subgraphs").code == 0);
    REQUIRE(ws.stage("train", {"--set", "variant=-r", "--variant", "-t"}).code == 0);
    CHECK(model::load_checkpoint(ws.work("model.hkgm")).variant == model::Variant::kNoType);
    REQUIRE(ws.stage("train", {"--set", "variant=-r"}).code == 0);
    CHECK(model::load_checkpoint(ws.work("model.hkgm")).variant == model::Variant::kNoRelation);
    REQUIRE(ws.stage("train").code == 0);
    CHECK(model::load_checkpoint(ws.work("model.hkgm")).variant == model::Variant::kFull);
  }

  TEST_CASE("ablate writes one row per variant") {
    Workspace ws("cli-ablate", 1);
    REQUIRE(ws.stage("prepare").code == 0);
    REQUIRE(ws.stage("build-subgraphs").code == 0);
    REQUIRE(ws.stage("ablate").code == 0);
    const std::string csv = testing::read_file(ws.work("ablation.csv"));
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "variant,hit@10,ndcg@10,hit_decrease,ndcg_decrease");
    std::vector<std::string> names;
    while (std::getline(in, line)) names.push_back(line.substr(0, line.find(',')));
    CHECK(names == std::vector<std::string>{"full", "-t", "-r", "-a", "-g", "max", "att"});
    CHECK(csv.find("full,") != std::string::npos);
  }

  TEST_CASE("reruns are byte-identical") {
    Workspace ws("cli-rerun");
    auto run_all = [&] {
      REQUIRE(ws.stage("prepare").code == 0);
      REQUIRE(ws.stage("build-subgraphs").code == 0);
      REQUIRE(ws.stage("train").code == 0);
      REQUIRE(ws.stage("evaluate").code == 0);
      std::vector<std::string> files;
      for (auto name : {"split.tsv", "subgraphs.hkgc", "model.hkgm", "metrics.csv", "history.csv"}) {
        files.push_back(testing::read_file(ws.work(name)));
      }
      return files;
    };
    const auto first = run_all();
    const auto second = run_all();
    CHECK(first == second);
    REQUIRE(ws.stage("build-subgraphs", {"--workers", "3"}).code == 0);
    CHECK(testing::read_file(ws.work("subgraphs.hkgc")) == first[1]);
  }
}
