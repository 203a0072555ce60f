// Command-line front end: generate, train, eval, simulate.

#include "sfrc/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>

namespace {

using nlohmann::json;

json describe(const CLI::App& app) {
  json j;
  j["name"] = app.get_name();
  j["description"] = app.get_description();
  json options = json::array();
  for (const CLI::Option* opt : app.get_options()) {
    json o;
    o["name"] = opt->get_name();
    o["description"] = opt->get_description();
    o["flag"] = opt->get_expected_min() == 0;
    o["required"] = opt->get_required();
    if (!opt->get_default_str().empty()) o["default"] = opt->get_default_str();
    options.push_back(o);
  }
  j["options"] = options;
  json subs = json::array();
  for (const CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; })) subs.push_back(describe(*sub));
  if (!subs.empty()) j["subcommands"] = subs;
  return j;
}

sfrc::RunConfig load(const std::string& path) { return path.empty() ? sfrc::RunConfig{} : sfrc::load_config(path); }

void progress(std::uint64_t done, std::uint64_t total) {
  if (done == total || done % 50 == 0) std::fprintf(stderr, "\r  %llu / %llu records", (unsigned long long)done, (unsigned long long)total);
  if (done == total) std::fprintf(stderr, "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Short-fiber composite surrogate: data generation, training, evaluation, simulation"};
  app.name("sfrc");
  app.failure_message(CLI::FailureMessage::help);
  app.require_subcommand(0, 1);
  app.set_version_flag("--version", std::string(SFRC_VERSION));
  bool help_json = false;
  app.add_flag("--help-json", help_json, "Print the command-line interface as JSON and exit");

  std::string config_path, out;
  std::uint64_t seed = 0, count = 0;
  int epochs = 0, workers = -1;
  std::string dataset, checkpoint;
  bool quick = false;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  };

  CLI::App* gen = app.add_subcommand("generate", "Sample strain paths and microstructures and simulate them");
  add_config(gen);
  gen->add_option("--seed", seed, "Master seed");
  gen->add_option("--count", count, "Number of records");
  gen->add_option("--out", out, "Dataset path (manifest is written next to it)");
  gen->add_option("--workers", workers, "Worker threads (0 = all cores)");

  CLI::App* tr = app.add_subcommand("train", "Train the recurrent surrogate on a dataset");
  add_config(tr);
  tr->add_option("--seed", seed, "Shuffling / dropout seed");
  tr->add_option("--epochs", epochs, "Number of epochs");
  tr->add_option("--out", out, "Checkpoint path");
  tr->add_option("--dataset", dataset, "Dataset path");

  CLI::App* ev = app.add_subcommand("eval", "Evaluate a checkpoint on the test set and the virtual-sample campaigns");
  add_config(ev);
  ev->add_option("--out", out, "Output directory");
  ev->add_option("--checkpoint", checkpoint, "Checkpoint path");
  ev->add_option("--dataset", dataset, "Dataset path (test split)");
  ev->add_option("--seed", seed, "Split seed when the dataset has no manifest");
  ev->add_flag("--quick", quick, "Only the test set and the one-cycle campaign");

  CLI::App* sim = app.add_subcommand("simulate", "Run one material-point simulation with the homogenization model");
  add_config(sim);
  sim->add_option("--out", out, "CSV output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (help_json) {
    std::cout << describe(app).dump(2) << "\n";
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return 2;
  }

  try {
    sfrc::RunConfig c = load(config_path);
    const CLI::Option* seed_opt = app.get_subcommands()[0]->get_option_no_throw("--seed");
    const bool has_seed = seed_opt && seed_opt->count() > 0;
    if (gen->parsed()) {
      if (has_seed) c.generation.master_seed = seed;
      if (gen->count("--count")) c.generation.sample_count = count;
      if (gen->count("--workers")) c.workers = workers;
      const std::string path = out.empty() ? c.paths.dataset : out;
      const auto report = sfrc::generate_dataset(c, path, progress);
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "wrote " << report.count << " records (" << report.failed << " failed) to " << path << " in "
                << report.seconds << " s\n";
    } else if (tr->parsed()) {
      if (has_seed) c.training.seed = seed;
      if (tr->count("--epochs")) c.training.epochs = epochs;
      const std::string ckpt = out.empty() ? c.paths.checkpoint : out;
      const auto outcome = sfrc::train_from_dataset(
          c, dataset.empty() ? c.paths.dataset : dataset, ckpt, c.paths.history, [](const sfrc::EpochRecord& e) {
            std::fprintf(stderr, "epoch %d  lr %.3g  train %.5f  val %.5f  (%.1f s)\n", e.epoch, e.lr,
                         e.train_cost, e.val_cost, e.wall_time);
          });
      std::cout << "best epoch " << outcome.result.best_epoch << ", validation cost " << outcome.result.best_val_cost
                << ", test cost " << outcome.test_cost << "; checkpoint " << ckpt << "\n";
    } else if (ev->parsed()) {
      if (has_seed) c.generation.master_seed = seed;
      sfrc::EvaluationOptions opts;
      if (quick) opts.cyclic = opts.extrapolation = opts.resampling = false;
      const auto summary =
          sfrc::evaluate_checkpoint(c, checkpoint.empty() ? c.paths.checkpoint : checkpoint,
                                    dataset.empty() ? c.paths.dataset : dataset, out.empty() ? c.paths.eval_dir : out, opts);
      std::cout << summary.report;
    } else if (sim->parsed()) {
      if (!out.empty()) c.simulate.output = out;
      const auto r = sfrc::run_simulation(c);
      std::cout << "wrote " << r.strain.rows() << " steps to " << c.simulate.output << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
