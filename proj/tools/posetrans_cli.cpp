// posetrans command-line front end. Talks to the core exclusively through the
// C API in posetrans/posetrans.h, like any other embedding client would.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "posetrans/posetrans.h"

namespace {

// Exit codes: 0 success, 2 validation error, 3 runtime error.
int exit_code_for(posetrans_status status) {
  switch (status) {
    case POSETRANS_OK:
      return 0;
    case POSETRANS_ERROR_INVALID_ARGUMENT:
    case POSETRANS_ERROR_FORMAT:
      return 2;
    default:
      return 3;
  }
}

int finish(posetrans_status status) {
  if (status != POSETRANS_OK) {
    std::fprintf(stderr, "error: %s\n", posetrans_last_error());
  }
  return exit_code_for(status);
}

struct ConfigHandle {
  posetrans_config* ptr = nullptr;
  ~ConfigHandle() { posetrans_config_free(ptr); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PoseTrans: limb-level pose transformation augmentation with "
               "rarity-driven sample selection"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;
  std::string out_dir;
  app.add_option("--config", config_path, "pipeline config file (JSON)")->required();
  app.add_option("--seed", seed, "override the config rng seed")
      ->each([&seed_set](const std::string&) { seed_set = true; });
  app.add_option("--workers", workers, "number of augmentation workers");
  app.add_option("--out", out_dir, "override the output directory");

  auto* fit_pcm = app.add_subcommand("fit-pcm", "fit the pose clustering model");
  auto* train_disc =
      app.add_subcommand("train-disc", "train the pose plausibility discriminator");
  auto* augment = app.add_subcommand("augment", "generate the augmented dataset");
  std::string selection;
  augment->add_option("--selection", selection,
                      "candidate selection: pcm (rarity) or random (w/o-PCM)");
  bool no_refit = false;
  augment->add_flag("--no-refit", no_refit, "skip the PCM refit after augmentation");
  auto* evaluate = app.add_subcommand("evaluate", "evaluate predictions (AP/AR + balanced)");
  std::string predictions_path;
  evaluate->add_option("predictions", predictions_path, "COCO results JSON")->required();
  auto* baselines =
      app.add_subcommand("baselines", "long-tail baselines from the PCM clusters");
  std::string mode;
  baselines->add_option("mode", mode, "oversample or reweight")->required();
  auto* cluster_report =
      app.add_subcommand("cluster-report", "regenerate the cluster report");

  CLI11_PARSE(app, argc, argv);

  ConfigHandle config;
  posetrans_status status = posetrans_config_load(config_path.c_str(), &config.ptr);
  if (status != POSETRANS_OK) return finish(status);

  if (seed_set) posetrans_config_set_seed(config.ptr, seed);
  if (workers > 0) {
    status = posetrans_config_set_workers(config.ptr, workers);
    if (status != POSETRANS_OK) return finish(status);
  }
  if (!out_dir.empty()) posetrans_config_set_out_dir(config.ptr, out_dir.c_str());

  if (fit_pcm->parsed()) {
    status = posetrans_run_fit_pcm(config.ptr);
    if (status == POSETRANS_OK) std::printf("fit-pcm: done\n");
  } else if (train_disc->parsed()) {
    status = posetrans_run_train_discriminator(config.ptr);
    if (status == POSETRANS_OK) std::printf("train-disc: done\n");
  } else if (augment->parsed()) {
    if (!selection.empty()) {
      status = posetrans_config_set_selection(config.ptr, selection.c_str());
      if (status != POSETRANS_OK) return finish(status);
    }
    if (no_refit) posetrans_config_set_refit(config.ptr, 0);
    posetrans_augment_stats stats{};
    status = posetrans_run_augment(config.ptr, &stats);
    if (status == POSETRANS_OK) {
      std::printf("augment: %d eligible, %d augmented, %d skipped\n", stats.eligible,
                  stats.augmented, stats.skipped);
    }
  } else if (evaluate->parsed()) {
    char* report = nullptr;
    status = posetrans_run_evaluate(config.ptr, predictions_path.c_str(), &report);
    if (status == POSETRANS_OK && report) {
      std::printf("%s", report);
      posetrans_string_free(report);
    }
  } else if (baselines->parsed()) {
    status = posetrans_run_baselines(config.ptr, mode.c_str());
    if (status == POSETRANS_OK) std::printf("baselines: %s written\n", mode.c_str());
  } else if (cluster_report->parsed()) {
    status = posetrans_run_cluster_report(config.ptr);
    if (status == POSETRANS_OK) std::printf("cluster-report: done\n");
  }
  return finish(status);
}
