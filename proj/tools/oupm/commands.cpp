#include "commands.hpp"

#include <cmath>
#include <ostream>

#include <json.hpp>

#include "config.hpp"
#include "dataset.hpp"
#include "oupm/format.hpp"
#include "oupm/metrics.hpp"
#include "oupm/model_io.hpp"
#include "oupm/sampler.hpp"
#include "oupm/synthetic.hpp"
#include "oupm/trainer.hpp"

namespace oupm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

RunConfig resolve_config(const Options& opts, bool required) {
  RunConfig cfg;
  if (opts.config) {
    cfg = load_config(*opts.config);
  } else if (required) {
    throw ConfigError("--config is required for this command");
  }
  if (opts.seed) {
    cfg.seed = *opts.seed;
    cfg.train.seed = *opts.seed;
    cfg.synth.seed = *opts.seed;
  }
  if (opts.out) cfg.out_dir = *opts.out;
  if (opts.threads) cfg.threads = *opts.threads;
  return cfg;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
}

void check_dt(const RunConfig& cfg, const InputSeries& inputs, const fs::path& file) {
  if (cfg.dt && std::abs(*cfg.dt - inputs.dt()) > 1e-6 * *cfg.dt)
    throw DataError(file.string() + ": sample spacing " + format_double(inputs.dt()) +
                    " s differs from configured dt " + format_double(*cfg.dt));
}

std::vector<double> concat_rows(const std::vector<Dataset>& sets) {
  std::vector<double> v;
  for (const auto& s : sets) v.insert(v.end(), s.inputs.values().begin(), s.inputs.values().end());
  return v;
}

Model load_model_for(const RunConfig& cfg, const Options& opts) {
  const fs::path path = opts.model ? *opts.model : cfg.out_dir / kModelFileName;
  Model model = load_model(path);
  if (!cfg.channels.empty() && cfg.channels != model.channel_names)
    throw DataError("model channels do not match the configured channel list");
  return model;
}

fs::path data_path(const RunConfig& cfg, const Options& opts) {
  if (opts.data) return *opts.data;
  if (cfg.test_file) return *cfg.test_file;
  throw ConfigError("no input data: pass --data or set 'test_file' in the config");
}

SamplerConfig sampler_config(const RunConfig& cfg, bool keep_paths) {
  SamplerConfig sc;
  sc.paths = cfg.paths;
  sc.seed = cfg.seed;
  sc.threads = cfg.threads;
  sc.quantiles = cfg.quantiles;
  sc.keep_paths = keep_paths;
  return sc;
}

}  // namespace

void cmd_synth(const Options& opts, std::ostream& log) {
  const RunConfig cfg = resolve_config(opts, false);
  const SynthSpec& spec = cfg.synth;
  const SynthData data = generate(spec);
  ensure_dir(cfg.out_dir);

  const std::string target = cfg.target;
  std::vector<double> in_train(spec.n, 0.0);
  for (std::size_t i = 0; i <= spec.train_points; ++i) in_train[i] = 1.0;
  write_text(cfg.out_dir / "synth.csv",
             dataset_csv(data.inputs, target, data.obs.y_raw, "in_train", in_train));
  const std::size_t rows = spec.train_points + 1;
  std::vector<double> train_raw(data.obs.y_raw.begin(),
                                data.obs.y_raw.begin() + static_cast<std::ptrdiff_t>(rows));
  write_text(cfg.out_dir / "synth_train.csv",
             dataset_csv(data.inputs.slice(0, rows), target, train_raw));

  json truth;
  truth["lambda"] = spec.lambda;
  truth["a"] = spec.a;
  truth["b"] = spec.b;
  truth["sigma"] = spec.sigma;
  if (!spec.c.empty()) {
    truth["c"] = spec.c;
    truth["d_off"] = spec.d_off;
  }
  truth["dt"] = spec.dt;
  truth["n"] = spec.n;
  truth["train_end_row"] = spec.train_points;
  truth["train_end_time_s"] = spec.t0 + spec.dt * static_cast<double>(spec.train_points);
  truth["seed"] = spec.seed;
  truth["channel_names"] = spec.channel_names;
  write_text(cfg.out_dir / "truth.json", truth.dump(2) + "\n");

  RunConfig run = cfg;
  run.channels = spec.channel_names;
  run.dt = spec.dt;
  run.train_files = {cfg.out_dir / "synth_train.csv"};
  run.validation_files.clear();
  run.test_file = cfg.out_dir / "synth.csv";
  run.target_scale = 1.0;
  run.train.constant_volatility = spec.c.empty();
  run.out_dir = cfg.out_dir;
  write_text(cfg.out_dir / "config.json", config_to_json(run, cfg.out_dir));

  if (!opts.quiet)
    log << "synth: wrote " << spec.n << " rows (training window rows 0.." << spec.train_points
        << ") to " << cfg.out_dir.string() << "\n";
}

void cmd_fit(const Options& opts, std::ostream& log) {
  const RunConfig cfg = resolve_config(opts, true);
  if (cfg.channels.empty()) throw ConfigError("config: 'channels' must list the input columns");
  if (cfg.train_files.empty()) throw ConfigError("config: 'train_files' must be non-empty");

  std::vector<Dataset> train_sets, val_sets;
  for (const auto& f : cfg.train_files) {
    train_sets.push_back(read_dataset(f, cfg.channels, cfg.target, true));
    check_dt(cfg, train_sets.back().inputs, f);
  }
  for (const auto& f : cfg.validation_files) {
    val_sets.push_back(read_dataset(f, cfg.channels, cfg.target, true));
    check_dt(cfg, val_sets.back().inputs, f);
  }

  std::vector<double> all_target;
  for (const auto& s : train_sets)
    all_target.insert(all_target.end(), s.target_raw->begin(), s.target_raw->end());
  const InputSeries all_inputs(0.0, train_sets.front().inputs.dt(), cfg.channels,
                               concat_rows(train_sets));
  PreprocessStats stats = cfg.target_scale ? fit_input_stats(all_inputs)
                                           : fit_preprocess(all_target, all_inputs);
  if (cfg.target_scale) stats.target_scale = *cfg.target_scale;
  stats.zero_floor = cfg.zero_floor;
  for (std::size_t j = 0; j < stats.channels(); ++j)
    if (stats.constant_channel[j] && !opts.quiet)
      log << "warning: input channel '" << cfg.channels[j]
          << "' is constant in the training data; its std is set to 1\n";

  auto transitions_of = [&](const Dataset& ds) {
    const auto obs = ObservationSeries::from_raw(ds.inputs.t0(), ds.inputs.dt(), *ds.target_raw, stats);
    return build_transitions(ds.inputs, obs, stats);
  };

  TransitionSet train(cfg.channels.size()), validation(cfg.channels.size());
  if (!val_sets.empty()) {
    for (const auto& s : train_sets) train.append(transitions_of(s));
    for (const auto& s : val_sets) validation.append(transitions_of(s));
  } else if (!cfg.validation_indices.empty()) {
    TransitionSet all(cfg.channels.size());
    for (const auto& s : train_sets) all.append(transitions_of(s));
    auto split = split_by_indices(all, cfg.validation_indices);
    train = std::move(split.train);
    validation = std::move(split.validation);
  } else {
    for (const auto& s : train_sets) {
      auto split = split_tail(transitions_of(s), cfg.train.validation_fraction);
      train.append(split.train);
      validation.append(split.validation);
    }
  }

  const FitReport report = fit(train, validation, cfg.train);
  const Model model{cfg.channels, report.best_params, stats};
  ensure_dir(cfg.out_dir);
  save_model(model, cfg.out_dir / kModelFileName);
  write_text(cfg.out_dir / "loss_curves.csv", fit_report_csv(report));
  json summary;
  summary["epochs"] = cfg.train.epochs;
  summary["best_epoch"] = report.best_epoch;
  summary["best_val_loss"] = report.val_loss_curve[report.best_epoch];
  summary["train_examples"] = train.size();
  summary["validation_examples"] = validation.size();
  summary["wall_time_s"] = report.wall_time;
  summary["lambda"] = report.best_params.lambda();
  write_text(cfg.out_dir / "fit_report.json", summary.dump(2) + "\n");

  if (!opts.quiet)
    log << "fit: best epoch " << report.best_epoch << " of " << cfg.train.epochs
        << ", validation loss " << report.val_loss_curve[report.best_epoch] << ", wall time "
        << report.wall_time << " s\n";
}

void cmd_predict(const Options& opts, std::ostream& log) {
  const RunConfig cfg = resolve_config(opts, true);
  const Model model = load_model_for(cfg, opts);
  const fs::path path = data_path(cfg, opts);
  const Dataset ds = read_dataset(path, model.channel_names, cfg.target, false);
  check_dt(cfg, ds.inputs, path);

  const PathEnsemble ens =
      sample_paths(model.params, model.stats, ds.inputs, sampler_config(cfg, opts.dump_paths));
  ensure_dir(cfg.out_dir);
  write_text(cfg.out_dir / "summary.csv", summary_csv(ens));
  write_text(cfg.out_dir / "cumulative.csv", cumulative_csv(ens));
  if (opts.dump_paths) write_text(cfg.out_dir / "paths.csv", paths_csv(ens));
  if (!opts.quiet)
    log << "predict: " << ens.paths << " paths x " << ens.steps << " steps written to "
        << cfg.out_dir.string() << "\n";
}

void cmd_evaluate(const Options& opts, std::ostream& log) {
  RunConfig cfg = resolve_config(opts, true);
  for (double q : {0.025, 0.975}) {
    bool present = false;
    for (double l : cfg.quantiles) present = present || std::abs(l - q) < 1e-12;
    if (!present) cfg.quantiles.push_back(q);
  }
  const Model model = load_model_for(cfg, opts);
  const fs::path path = data_path(cfg, opts);
  const Dataset ds = read_dataset(path, model.channel_names, cfg.target, true);
  check_dt(cfg, ds.inputs, path);
  const auto obs =
      ObservationSeries::from_raw(ds.inputs.t0(), ds.inputs.dt(), *ds.target_raw, model.stats);

  const PathEnsemble ens =
      sample_paths(model.params, model.stats, ds.inputs, sampler_config(cfg, opts.dump_paths));
  const EvalReport report = evaluate(ens, obs);

  ensure_dir(cfg.out_dir);
  write_text(cfg.out_dir / "eval_report.json", eval_report_json(report));
  write_text(cfg.out_dir / "pit.csv", pit_csv(report, ens));
  write_text(cfg.out_dir / "qq.csv", qq_csv(report));
  write_text(cfg.out_dir / "pit_histogram.csv", pit_histogram_csv(report));
  write_text(cfg.out_dir / "summary.csv", summary_csv(ens));

  std::string cum = cumulative_csv(ens);
  const auto observed = observed_cumulative(obs);
  std::string merged;
  std::size_t row = 0, pos = 0;
  while (pos < cum.size()) {
    const auto eol = cum.find('\n', pos);
    merged.append(cum, pos, eol - pos);
    merged += ',';
    if (row == 0) merged += "observed";
    else append_double(merged, observed[row - 1]);
    merged += '\n';
    pos = eol + 1;
    ++row;
  }
  write_text(cfg.out_dir / "cumulative.csv", merged);
  if (opts.dump_paths) write_text(cfg.out_dir / "paths.csv", paths_csv(ens));

  if (!opts.quiet)
    log << "evaluate: KS " << report.ks << ", NRMSE " << report.nrmse << ", 95% coverage "
        << report.coverage_95 << ", cumulative inside 3 sigma " << report.cumulative_inside_3sigma
        << " (" << report.pit.size() << " steps)\n";
}

}  // namespace oupm::cli
