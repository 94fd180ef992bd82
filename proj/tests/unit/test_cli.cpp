#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "dataset.hpp"
#include "oupm/error.hpp"
#include "oupm/model_io.hpp"

using namespace oupm;
using namespace oupm::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("oupm_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Shrinks a generated config so the end-to-end tests stay fast.
void shrink_config(const fs::path& config) {
  std::string text = read_text(config);
  auto cfg = parse_config(text, config.parent_path());
  cfg.train.epochs = 30;
  cfg.paths = 300;
  write_text(config, config_to_json(cfg, config.parent_path()));
}

}  // namespace

TEST_CASE("config parsing applies defaults and resolves paths") {
  const auto c = parse_config(R"({"channels": ["speed", "torque"], "train_files": ["a.csv"],
                                  "train": {"epochs": 5}, "seed": 42})",
                              "/base");
  CHECK(c.channels == std::vector<std::string>{"speed", "torque"});
  CHECK(c.train_files[0] == fs::path("/base/a.csv"));
  CHECK(c.train.epochs == 5);
  CHECK(c.train.batch_size == 512);
  CHECK(c.train.learning_rate == 1e-2);
  CHECK(c.train.seed == 42);
  CHECK(c.seed == 42);
  CHECK(c.paths == 10000);
  CHECK(c.target == "pm");
  CHECK(c.out_dir == fs::path("/base/out"));
}

TEST_CASE("config rejects bad values with the key name") {
  auto message = [](const std::string& text) {
    try {
      parse_config(text, ".");
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message(R"({"chanels": []})").find("chanels") != std::string::npos);
  CHECK(message(R"({"train": {"epochs": 0}})").find("train.epochs") != std::string::npos);
  CHECK(message(R"({"train": {"learning_rate": -1}})").find("learning_rate") != std::string::npos);
  CHECK(message(R"({"validation_fraction": 1.5})").find("validation_fraction") != std::string::npos);
  CHECK(message(R"({"channels": ["a", "a"]})").find("duplicate") != std::string::npos);
  CHECK(message(R"({"paths": "many"})").find("paths") != std::string::npos);
  CHECK(message(R"({"quantiles": [0.5, 1.0]})").find("quantiles") != std::string::npos);
  CHECK(message(R"({"synth": {"lambda": -1}})").find("lambda") != std::string::npos);
  CHECK(message("not json").find("invalid JSON") != std::string::npos);
}

TEST_CASE("config round trips through its JSON form") {
  const auto c = parse_config(R"({"channels": ["u"], "train_files": ["x/a.csv"], "test_file": "b.csv",
                                  "target_scale": 2.0, "paths": 7, "threads": 2, "seed": 3})",
                              "/root/cfg");
  const auto again = parse_config(config_to_json(c, "/root/cfg"), "/root/cfg");
  CHECK(again.train_files == c.train_files);
  CHECK(again.test_file == c.test_file);
  CHECK(again.target_scale == c.target_scale);
  CHECK(again.paths == 7);
  CHECK(again.threads == 2);
  CHECK(again.seed == 3);
}

TEST_CASE("dataset columns bind by name") {
  const std::string csv = "pm,torque,time_s,speed\n1.5,10,0.0,100\n2.5,11,0.1,101\n3.5,12,0.2,102\n";
  const auto ds = parse_dataset(csv, {"speed", "torque"}, "pm", true);
  CHECK(ds.inputs.size() == 3);
  CHECK(ds.inputs.row(1)[0] == 101.0);
  CHECK(ds.inputs.row(1)[1] == 11.0);
  CHECK(ds.inputs.dt() == doctest::Approx(0.1));
  CHECK((*ds.target_raw)[2] == 3.5);
  const auto no_target = parse_dataset("time_s,speed\n0,1\n1,2\n", {"speed"}, "pm", false);
  CHECK_FALSE(no_target.target_raw.has_value());
}

TEST_CASE("dataset errors name the file and line") {
  auto message = [](const std::string& csv, bool need_target = true) {
    try {
      parse_dataset(csv, {"speed"}, "pm", need_target, "data.csv");
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("speed,pm\n1,2\n2,3\n").find("time_s") != std::string::npos);
  CHECK(message("time_s,pm\n0,2\n1,3\n").find("speed") != std::string::npos);
  CHECK(message("time_s,speed\n0,2\n1,3\n").find("pm") != std::string::npos);
  CHECK(message("time_s,speed,pm\n0,1,2\n1,x,3\n").find("data.csv:3") != std::string::npos);
  CHECK(message("time_s,speed,pm\n0,1,2\n1,,3\n").find("missing") != std::string::npos);
  CHECK(message("time_s,speed,pm\n0,1,2\n1,1,-3\n") != "");
  CHECK(message("time_s,speed,pm\n0,1,2\n1,1,3\n2.5,1,3\n") != "");
  CHECK(message("time_s,speed,pm\n1,1,2\n0,1,3\n") != "");
}

TEST_CASE("end to end: synth, fit, predict and evaluate") {
  const fs::path dir = fresh_dir("e2e");
  std::ostringstream log;
  Options o;
  o.out = dir;
  o.seed = 5;
  cmd_synth(o, log);
  CHECK(fs::exists(dir / "synth.csv"));
  CHECK(fs::exists(dir / "truth.json"));
  shrink_config(dir / "config.json");

  Options f;
  f.config = dir / "config.json";
  cmd_fit(f, log);
  CHECK(fs::exists(dir / kModelFileName));
  CHECK(fs::exists(dir / "loss_curves.csv"));
  const Model m = load_model(dir / kModelFileName);
  CHECK(m.channel_names == std::vector<std::string>{"u"});
  CHECK(m.stats.target_scale == 1.0);

  // predict must work without a target column
  const auto ds = read_dataset(dir / "synth.csv", {"u"}, "pm", true);
  write_text(dir / "inputs_only.csv", dataset_csv(ds.inputs.slice(0, 50), "", {}));
  Options p = f;
  p.data = dir / "inputs_only.csv";
  p.out = dir / "pred";
  p.model = dir / kModelFileName;
  p.dump_paths = true;
  cmd_predict(p, log);
  CHECK(fs::exists(dir / "pred" / "summary.csv"));
  CHECK(fs::exists(dir / "pred" / "paths.csv"));
  CHECK(fs::exists(dir / "pred" / "cumulative.csv"));

  Options e = f;
  e.out = dir / "eval";
  e.model = dir / kModelFileName;
  cmd_evaluate(e, log);
  for (const char* name : {"eval_report.json", "pit.csv", "qq.csv", "pit_histogram.csv", "cumulative.csv"})
    CHECK(fs::exists(dir / "eval" / name));
  const auto cum = read_text(dir / "eval" / "cumulative.csv");
  CHECK(cum.substr(0, cum.find('\n')).ends_with(",observed"));
  fs::remove_all(dir);
}

TEST_CASE("reruns are byte identical and independent of thread count") {
  const fs::path dir = fresh_dir("repro");
  std::ostringstream log;
  Options o;
  o.out = dir;
  o.seed = 7;
  cmd_synth(o, log);
  shrink_config(dir / "config.json");
  std::vector<std::string> model_text, summary_text;
  for (unsigned threads : {1u, 4u, 4u}) {
    Options f;
    f.config = dir / "config.json";
    f.threads = threads;
    f.out = dir / ("run" + std::to_string(model_text.size()));
    cmd_fit(f, log);
    cmd_predict(f, log);
    model_text.push_back(read_text(*f.out / kModelFileName));
    summary_text.push_back(read_text(*f.out / "summary.csv") + read_text(*f.out / "cumulative.csv"));
  }
  CHECK(model_text[0] == model_text[1]);
  CHECK(model_text[1] == model_text[2]);
  CHECK(summary_text[0] == summary_text[1]);
  CHECK(summary_text[1] == summary_text[2]);
  fs::remove_all(dir);
}

TEST_CASE("model and config channel mismatch is rejected") {
  const fs::path dir = fresh_dir("mismatch");
  std::ostringstream log;
  Options o;
  o.out = dir;
  cmd_synth(o, log);
  shrink_config(dir / "config.json");
  Options f;
  f.config = dir / "config.json";
  cmd_fit(f, log);

  auto cfg = load_config(dir / "config.json");
  cfg.channels = {"u", "v"};
  write_text(dir / "two.json", config_to_json(cfg, dir));
  Options p;
  p.config = dir / "two.json";
  p.model = dir / kModelFileName;
  CHECK_THROWS_AS(cmd_predict(p, log), DataError);

  Model m = load_model(dir / kModelFileName);
  m.params.a.push_back(0.0);
  CHECK_THROWS_AS(model_from_string(model_to_string(m)), DataError);
  fs::remove_all(dir);
}

TEST_CASE("commands that need a config say so") {
  std::ostringstream log;
  CHECK_THROWS_AS(cmd_fit(Options{}, log), ConfigError);
  CHECK_THROWS_AS(cmd_predict(Options{}, log), ConfigError);
}
