#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "oupm/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Fit, simulate and evaluate an input-driven Ornstein-Uhlenbeck model"};
  app.require_subcommand(1);

  oupm::cli::Options opts;
  std::string config, out, model, data;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Run configuration (JSON)");
    sub->add_option("--seed", seed, "Override the configured seed");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--threads", threads, "Worker threads (0 = all cores)");
    sub->add_flag("--quiet", opts.quiet, "Suppress progress output");
  };

  auto* synth = app.add_subcommand("synth", "Generate the synthetic verification dataset");
  add_common(synth);
  auto* fit = app.add_subcommand("fit", "Fit model parameters by maximum likelihood");
  add_common(fit);
  auto* predict = app.add_subcommand("predict", "Sample predictive paths from input data");
  add_common(predict);
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against observations");
  add_common(evaluate);
  for (auto* sub : {predict, evaluate}) {
    sub->add_option("--model", model, "Model file (default: <out>/model.oupm)");
    sub->add_option("--data", data, "Dataset CSV (default: config test_file)");
    sub->add_flag("--paths", opts.dump_paths, "Also write every sampled path");
  }

  CLI11_PARSE(app, argc, argv);

  auto given = [](CLI::App* sub, const char* name) { return sub->count(name) > 0; };
  CLI::App* active = app.get_subcommands().front();
  if (given(active, "--config")) opts.config = config;
  if (given(active, "--seed")) opts.seed = seed;
  if (given(active, "--out")) opts.out = out;
  if (given(active, "--threads")) opts.threads = threads;
  if (active == predict || active == evaluate) {
    if (given(active, "--model")) opts.model = model;
    if (given(active, "--data")) opts.data = data;
  }

  try {
    if (active == synth) oupm::cli::cmd_synth(opts, std::cout);
    if (active == fit) oupm::cli::cmd_fit(opts, std::cout);
    if (active == predict) oupm::cli::cmd_predict(opts, std::cout);
    if (active == evaluate) oupm::cli::cmd_evaluate(opts, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "oupm " << active->get_name() << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
