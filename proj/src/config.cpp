#include "hakg/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>

#include "hakg/error.hpp"

namespace hakg::config {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw UsageError("invalid value '" + value + "' for key '" + key + "'");
  return out;
}

bool is_path_key(const std::string& key) {
  return key == "kg" || key == "interactions" || key == "workdir" || key == "split_path" || key == "cache" ||
         key == "checkpoint" || key == "metrics_out" || key == "history_out" || key == "ablation_out";
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Field {
  Setter set;
  Getter get;
};

template <typename T>
Field size_field(T RunConfig::*group, std::size_t T::*member) {
  return {[=](RunConfig& c, const std::string& k, const std::string& v) {
            (c.*group).*member = parse_number<std::size_t>(k, v);
          },
          [=](const RunConfig& c) { return std::to_string((c.*group).*member); }};
}

template <typename T>
Field double_field(T RunConfig::*group, double T::*member) {
  return {[=](RunConfig& c, const std::string& k, const std::string& v) {
            (c.*group).*member = parse_number<double>(k, v);
          },
          [=](const RunConfig& c) { return format_double((c.*group).*member); }};
}

Field path_field(std::filesystem::path RunConfig::*member) {
  return {[=](RunConfig& c, const std::string&, const std::string& v) { c.*member = v; },
          [=](const RunConfig& c) { return (c.*member).string(); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> f;
    f["kg"] = path_field(&RunConfig::kg);
    f["interactions"] = path_field(&RunConfig::interactions);
    f["workdir"] = path_field(&RunConfig::workdir);
    f["split_path"] = path_field(&RunConfig::split_path);
    f["cache"] = path_field(&RunConfig::cache);
    f["checkpoint"] = path_field(&RunConfig::checkpoint);
    f["metrics_out"] = path_field(&RunConfig::metrics_out);
    f["history_out"] = path_field(&RunConfig::history_out);
    f["ablation_out"] = path_field(&RunConfig::ablation_out);
    f["split"] = {[](RunConfig& c, const std::string&, const std::string& v) { c.split = parse_split_mode(v); },
                  [](const RunConfig& c) {
                    return c.split.leave_one_out ? std::string("leave-one-out") : "ratio:" + format_double(c.split.ratio);
                  }};
    f["seed"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                   c.seed = parse_number<std::uint64_t>(k, v);
                 },
                 [](const RunConfig& c) { return c.seed ? std::to_string(*c.seed) : std::string(); }};
    f["interaction_relation"] = {
        [](RunConfig& c, const std::string& k, const std::string& v) {
          if (v.empty()) throw UsageError("key '" + k + "' needs a value");
          c.interaction_relation = v;
        },
        [](const RunConfig& c) { return c.interaction_relation; }};
    f["variant"] = {[](RunConfig& c, const std::string&, const std::string& v) {
                      try {
                        c.variant = model::parse_variant(v);
                      } catch (const ConfigError& e) {
                        throw UsageError(e.what());
                      }
                    },
                    [](const RunConfig& c) { return std::string(model::variant_name(c.variant)); }};
    f["workers"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                      c.workers = parse_number<std::size_t>(k, v);
                    },
                    [](const RunConfig& c) { return std::to_string(c.workers); }};
    f["groups"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.groups = parse_number<int>(k, v); },
                   [](const RunConfig& c) { return std::to_string(c.groups); }};

    f["lr"] = double_field(&RunConfig::train, &model::TrainConfig::lr);
    f["l2"] = double_field(&RunConfig::train, &model::TrainConfig::l2);
    f["dropout"] = double_field(&RunConfig::train, &model::TrainConfig::dropout);
    f["batch_size"] = size_field(&RunConfig::train, &model::TrainConfig::batch_size);
    f["max_iter"] = size_field(&RunConfig::train, &model::TrainConfig::max_iter);
    f["patience"] = size_field(&RunConfig::train, &model::TrainConfig::patience);
    f["negative_pool"] = size_field(&RunConfig::train, &model::TrainConfig::negative_pool);
    f["eval_negatives"] = size_field(&RunConfig::train, &model::TrainConfig::eval_negatives);
    f["eval_every"] = size_field(&RunConfig::train, &model::TrainConfig::eval_every);

    f["d_e"] = size_field(&RunConfig::dims, &model::Dimensions::entity);
    f["d_t"] = size_field(&RunConfig::dims, &model::Dimensions::type);
    f["d_r"] = size_field(&RunConfig::dims, &model::Dimensions::relation);
    f["d_a"] = size_field(&RunConfig::dims, &model::Dimensions::attention);
    f["heads"] = size_field(&RunConfig::dims, &model::Dimensions::heads);
    f["layers"] = size_field(&RunConfig::dims, &model::Dimensions::layers);

    f["paths"] = size_field(&RunConfig::sample, &subgraph::SampleConfig::paths);
    f["max_len"] = size_field(&RunConfig::sample, &subgraph::SampleConfig::max_len);
    f["walk_budget"] = size_field(&RunConfig::sample, &subgraph::SampleConfig::walk_budget);
    return f;
  }();
  return table;
}

void apply(RunConfig& cfg, const KeyValues& kv) {
  const auto& table = fields();
  for (const auto& [key, value] : kv) {
    auto it = table.find(key);
    if (it == table.end()) throw UsageError("unknown configuration key '" + key + "'");
    it->second.set(cfg, key, value);
  }
}

void check(const RunConfig& cfg) {
  const auto& d = cfg.dims;
  if (d.entity == 0 || d.type == 0 || d.relation == 0 || d.attention == 0 || d.heads == 0 || d.layers == 0) {
    throw UsageError("model dimensions must be positive");
  }
  if (cfg.sample.paths == 0 || cfg.sample.max_len == 0) throw UsageError("paths and max_len must be positive");
  if (cfg.train.batch_size == 0) throw UsageError("batch_size must be positive");
  if (cfg.train.negative_pool == 0) throw UsageError("negative_pool must be positive");
  if (!(cfg.train.lr > 0.0)) throw UsageError("lr must be positive");
  if (cfg.train.l2 < 0.0) throw UsageError("l2 must be non-negative");
  if (cfg.train.dropout < 0.0 || cfg.train.dropout >= 1.0) throw UsageError("dropout must lie in [0, 1)");
  if (cfg.workers == 0) throw UsageError("workers must be positive");
  if (cfg.groups < 0 || cfg.groups == 1) throw UsageError("groups must be 0 or at least 2");
}

}  // namespace

KeyValues parse_key_values(std::string_view text, const std::string& source) {
  KeyValues out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(source, line_no, "empty key");
    out[std::string(key)] = std::string(trim(line.substr(eq + 1)));
  }
  return out;
}

KeyValues load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  KeyValues kv = parse_key_values(text, path.string());
  const auto base = path.parent_path();
  for (auto& [key, value] : kv) {
    if (is_path_key(key) && !value.empty() && std::filesystem::path(value).is_relative()) {
      value = (base / value).lexically_normal().string();
    }
  }
  return kv;
}

SplitMode parse_split_mode(std::string_view text) {
  if (text == "leave-one-out" || text == "loo") return {};
  if (text.starts_with("ratio:")) {
    const std::string rho(text.substr(6));
    const double r = parse_number<double>("split", rho);
    if (!(r > 0.0 && r < 1.0)) throw UsageError("split ratio must lie in (0, 1)");
    return {false, r};
  }
  throw UsageError("unknown split mode '" + std::string(text) + "' (expected leave-one-out or ratio:<rho>)");
}

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw ConfigError("configuration must set 'seed'");
  return *seed;
}

std::vector<std::string> known_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, f] : fields()) keys.push_back(k);
  return keys;
}

RunConfig resolve(const KeyValues& file, const KeyValues& overrides) {
  RunConfig cfg;
  apply(cfg, file);
  apply(cfg, overrides);
  auto fill = [&](std::filesystem::path& p, const char* name) {
    if (p.empty()) p = cfg.workdir / name;
  };
  fill(cfg.split_path, "split.tsv");
  fill(cfg.cache, "subgraphs.hkgc");
  fill(cfg.checkpoint, "model.hkgm");
  fill(cfg.metrics_out, "metrics.csv");
  fill(cfg.history_out, "history.csv");
  fill(cfg.ablation_out, "ablation.csv");
  if (cfg.seed) cfg.train.seed = *cfg.seed;
  check(cfg);
  return cfg;
}

KeyValues to_key_values(const RunConfig& cfg) {
  KeyValues kv;
  for (const auto& [k, f] : fields()) kv[k] = f.get(cfg);
  return kv;
}

}  // namespace hakg::config
