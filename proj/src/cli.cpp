#include "hakg/cli.hpp"

#include <algorithm>
#include <ostream>

#include <CLI11.hpp>

#include "hakg/error.hpp"
#include "hakg/pipeline.hpp"

namespace hakg::cli {

namespace {

struct Options {
  std::string config;
  std::vector<std::string> sets;
  std::string split, variant, checkpoint;
  std::size_t workers = 0;
  int groups = -1;
};

config::KeyValues overrides_from(const Options& o, const CLI::App& sub) {
  config::KeyValues kv;
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + s + "'");
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  auto given = [&](const char* flag) { return sub.get_option_no_throw(flag) && sub.count(flag) > 0; };
  if (given("--split")) kv["split"] = o.split;
  if (given("--variant")) kv["variant"] = o.variant;
  if (given("--checkpoint")) kv["checkpoint"] = o.checkpoint;
  if (given("--workers")) kv["workers"] = std::to_string(o.workers);
  if (given("--groups")) kv["groups"] = std::to_string(o.groups);
  return kv;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"HAKG knowledge-graph recommender pipeline", "hakg"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "key = value configuration file")->required();
    sub->add_option("--set", o.sets, "override a configuration key (key=value)");
  };
  auto* prepare = app.add_subcommand("prepare", "load, binarize and split the interactions");
  add_common(prepare);
  prepare->add_option("--split", o.split, "leave-one-out or ratio:<rho>");
  auto* build = app.add_subcommand("build-subgraphs", "sample and cache user-item subgraphs");
  add_common(build);
  build->add_option("--workers", o.workers, "parallel subgraph builders");
  auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
  add_common(train);
  train->add_option("--variant", o.variant, "full, -t, -r, -a, -g, max or att");
  auto* evaluate = app.add_subcommand("evaluate", "rank held-out items and write metrics");
  add_common(evaluate);
  evaluate->add_option("--checkpoint", o.checkpoint, "checkpoint to evaluate");
  evaluate->add_option("--groups", o.groups, "sparsity groups to report (0 = none)");
  auto* ablate = app.add_subcommand("ablate", "train and evaluate all seven variants");
  add_common(ablate);

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "hakg: " << e.what() << "\n" << "run 'hakg --help' for usage\n";
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string stage = sub->get_name();
  try {
    const auto cfg = config::resolve(config::load_config_file(o.config), overrides_from(o, *sub));
    if (stage == "prepare") {
      const auto split = pipeline::prepare(cfg);
      out << "wrote " << cfg.split_path.string() << " (" << split.train.size() << " train, " << split.validation.size()
          << " validation users, " << split.test.size() << " test users)\n";
    } else if (stage == "build-subgraphs") {
      const auto cache = pipeline::build_subgraphs(cfg);
      out << "wrote " << cfg.cache.string() << " (" << cache.size() << " subgraphs)\n";
    } else if (stage == "train") {
      const auto result = pipeline::train(cfg);
      out << "wrote " << cfg.checkpoint.string() << " after " << result.history.size() << " epochs\n";
    } else if (stage == "evaluate") {
      const auto report = pipeline::evaluate(cfg);
      out << "wrote " << cfg.metrics_out.string() << " (" << report.all.users << " users, hit@10 "
          << report.all.hit[9] << ", ndcg@10 " << report.all.ndcg[9] << ")\n";
    } else if (stage == "ablate") {
      const auto rows = pipeline::ablate(cfg);
      out << "wrote " << cfg.ablation_out.string() << " (" << rows.size() << " variants)\n";
    }
  } catch (const UsageError& e) {
    err << "hakg " << stage << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "hakg " << stage << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace hakg::cli
