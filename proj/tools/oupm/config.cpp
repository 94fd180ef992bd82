#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace oupm::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ConfigError("config: '" + key + "' " + what);
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) fail(where + k, "is not a recognized key");
}

template <typename T>
T get_as(const json& obj, const std::string& key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(where + key, "has the wrong type");
  }
}

double positive(const json& obj, const std::string& key, const std::string& where) {
  const auto v = get_as<double>(obj, key, where);
  if (!(v > 0.0)) fail(where + key, "must be positive");
  return v;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::vector<std::filesystem::path> path_list(const json& obj, const std::string& key,
                                             const std::filesystem::path& base) {
  std::vector<std::filesystem::path> out;
  for (const auto& s : get_as<std::vector<std::string>>(obj, key, "")) out.push_back(resolve(base, s));
  return out;
}

void parse_train(const json& j, TrainConfig& t) {
  const std::string w = "train.";
  if (!j.is_object()) fail("train", "must be an object");
  reject_unknown(j, {"epochs", "batch_size", "learning_rate", "early_stopping",
                     "constant_volatility", "beta1", "beta2", "epsilon"}, w);
  if (j.contains("epochs")) {
    t.epochs = get_as<std::size_t>(j, "epochs", w);
    if (t.epochs < 1) fail(w + "epochs", "must be >= 1");
  }
  if (j.contains("batch_size")) {
    t.batch_size = get_as<std::size_t>(j, "batch_size", w);
    if (t.batch_size < 1) fail(w + "batch_size", "must be >= 1");
  }
  if (j.contains("learning_rate")) t.learning_rate = positive(j, "learning_rate", w);
  if (j.contains("early_stopping")) t.early_stopping = get_as<bool>(j, "early_stopping", w);
  if (j.contains("constant_volatility"))
    t.constant_volatility = get_as<bool>(j, "constant_volatility", w);
  if (j.contains("beta1")) t.adam.beta1 = get_as<double>(j, "beta1", w);
  if (j.contains("beta2")) t.adam.beta2 = get_as<double>(j, "beta2", w);
  if (j.contains("epsilon")) t.adam.epsilon = positive(j, "epsilon", w);
  if (!(t.adam.beta1 >= 0.0 && t.adam.beta1 < 1.0)) fail(w + "beta1", "must lie in [0, 1)");
  if (!(t.adam.beta2 >= 0.0 && t.adam.beta2 < 1.0)) fail(w + "beta2", "must lie in [0, 1)");
}

void parse_synth(const json& j, SynthSpec& s) {
  const std::string w = "synth.";
  if (!j.is_object()) fail("synth", "must be an object");
  reject_unknown(j, {"lambda", "a", "b", "sigma", "c", "d_off", "dt", "t0", "n", "train_points",
                     "schedule", "channel_names"}, w);
  if (j.contains("lambda")) s.lambda = get_as<double>(j, "lambda", w);
  if (j.contains("a")) s.a = get_as<std::vector<double>>(j, "a", w);
  if (j.contains("b")) s.b = get_as<double>(j, "b", w);
  if (j.contains("sigma")) s.sigma = get_as<double>(j, "sigma", w);
  if (j.contains("c")) s.c = get_as<std::vector<double>>(j, "c", w);
  if (j.contains("d_off")) s.d_off = get_as<double>(j, "d_off", w);
  if (j.contains("dt")) s.dt = get_as<double>(j, "dt", w);
  if (j.contains("t0")) s.t0 = get_as<double>(j, "t0", w);
  if (j.contains("n")) s.n = get_as<std::size_t>(j, "n", w);
  if (j.contains("train_points")) s.train_points = get_as<std::size_t>(j, "train_points", w);
  if (j.contains("channel_names"))
    s.channel_names = get_as<std::vector<std::string>>(j, "channel_names", w);
  else if (s.a.size() != s.channel_names.size()) {
    s.channel_names.clear();
    for (std::size_t k = 0; k < s.a.size(); ++k) s.channel_names.push_back("u" + std::to_string(k + 1));
  }
  if (j.contains("schedule")) {
    const auto& sched = j.at("schedule");
    if (!sched.is_array()) fail(w + "schedule", "must be an array of {start, levels}");
    s.schedule.clear();
    for (std::size_t k = 0; k < sched.size(); ++k) {
      const std::string wk = w + "schedule[" + std::to_string(k) + "].";
      if (!sched[k].is_object()) fail(wk, "must be an object");
      reject_unknown(sched[k], {"start", "levels"}, wk);
      s.schedule.push_back({get_as<double>(sched[k], "start", wk),
                            get_as<std::vector<double>>(sched[k], "levels", wk)});
    }
  }
  try {
    s.validate();
  } catch (const DataError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

}  // namespace

RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  reject_unknown(j, {"channels", "target", "dt", "train_files", "validation_files",
                     "validation_fraction", "validation_indices", "test_file", "target_scale",
                     "zero_floor", "train", "paths", "quantiles", "threads", "seed", "out_dir",
                     "synth"}, "");

  RunConfig c;
  if (j.contains("channels")) {
    c.channels = get_as<std::vector<std::string>>(j, "channels", "");
    std::set<std::string> seen;
    for (const auto& ch : c.channels) {
      if (ch.empty()) fail("channels", "contains an empty name");
      if (!seen.insert(ch).second) fail("channels", "contains duplicate '" + ch + "'");
    }
  }
  if (j.contains("target")) c.target = get_as<std::string>(j, "target", "");
  if (j.contains("dt")) c.dt = positive(j, "dt", "");
  if (j.contains("train_files")) c.train_files = path_list(j, "train_files", base_dir);
  if (j.contains("validation_files")) c.validation_files = path_list(j, "validation_files", base_dir);
  if (j.contains("validation_indices"))
    c.validation_indices = get_as<std::vector<std::size_t>>(j, "validation_indices", "");
  if (j.contains("test_file")) c.test_file = resolve(base_dir, get_as<std::string>(j, "test_file", ""));
  if (j.contains("target_scale") && !j.at("target_scale").is_null())
    c.target_scale = positive(j, "target_scale", "");
  if (j.contains("zero_floor")) c.zero_floor = positive(j, "zero_floor", "");
  if (j.contains("train")) parse_train(j.at("train"), c.train);
  if (j.contains("validation_fraction")) {
    c.train.validation_fraction = get_as<double>(j, "validation_fraction", "");
    if (!(c.train.validation_fraction > 0.0 && c.train.validation_fraction < 1.0))
      fail("validation_fraction", "must lie in (0, 1)");
  }
  if (j.contains("paths")) {
    c.paths = get_as<std::size_t>(j, "paths", "");
    if (c.paths < 1) fail("paths", "must be >= 1");
  }
  if (j.contains("quantiles")) {
    c.quantiles = get_as<std::vector<double>>(j, "quantiles", "");
    for (double q : c.quantiles)
      if (!(q > 0.0 && q < 1.0)) fail("quantiles", "entries must lie in (0, 1)");
  }
  if (j.contains("threads")) c.threads = get_as<unsigned>(j, "threads", "");
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j, "seed", "");
  c.train.seed = c.seed;
  c.out_dir = resolve(base_dir, j.contains("out_dir") ? get_as<std::string>(j, "out_dir", "") : "out");
  if (j.contains("synth")) parse_synth(j.at("synth"), c.synth);
  c.synth.seed = c.seed;
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path().empty() ? "." : path.parent_path());
}

std::string config_to_json(const RunConfig& c, const std::filesystem::path& base_dir) {
  auto rel = [&](const std::filesystem::path& p) {
    return p.lexically_relative(base_dir).generic_string();
  };
  json j;
  j["channels"] = c.channels;
  j["target"] = c.target;
  if (c.dt) j["dt"] = *c.dt;
  std::vector<std::string> files;
  for (const auto& p : c.train_files) files.push_back(rel(p));
  j["train_files"] = files;
  files.clear();
  for (const auto& p : c.validation_files) files.push_back(rel(p));
  if (!files.empty()) j["validation_files"] = files;
  if (!c.validation_indices.empty()) j["validation_indices"] = c.validation_indices;
  j["validation_fraction"] = c.train.validation_fraction;
  if (c.test_file) j["test_file"] = rel(*c.test_file);
  if (c.target_scale) j["target_scale"] = *c.target_scale;
  j["zero_floor"] = c.zero_floor;
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate},
                {"early_stopping", c.train.early_stopping},
                {"constant_volatility", c.train.constant_volatility}};
  j["paths"] = c.paths;
  j["quantiles"] = c.quantiles;
  j["threads"] = c.threads;
  j["seed"] = c.seed;
  j["out_dir"] = rel(c.out_dir);
  return j.dump(2) + "\n";
}

}  // namespace oupm::cli
