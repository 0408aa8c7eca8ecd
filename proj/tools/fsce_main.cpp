#include "fsce/config.hpp"
#include "fsce/eval/experiments.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <functional>

namespace {

struct GlobalOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool assert_trends = false;
  bool dry_run = false;
};

fsce::AppConfig resolve_config(const GlobalOpts& g) {
  fsce::AppConfig cfg =
      g.config_path.empty() ? fsce::desk_default_config() : fsce::load_app_config(g.config_path);
  if (!g.out_dir.empty()) cfg.eval.out_dir = g.out_dir;
  if (g.seed_set) {
    cfg.train.seed = g.seed;
    cfg.eval.seeds = {g.seed};
    cfg.dataset.seed = g.seed;
  }
  if (g.assert_trends) cfg.eval.assert_trends = true;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"few-shot OFDM channel estimation experiments"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "JSON config file (defaults to the desk-scale setup)");
  app.add_option("--out-dir", g.out_dir, "output directory override");
  app.add_option("--seed", g.seed, "seed override (training seed and evaluation seed list)")
      ->each([&](const std::string&) { g.seed_set = true; });
  app.add_flag("--assert", g.assert_trends, "turn trend checks into pass/fail exit codes");

  auto* generate = app.add_subcommand("generate", "write the synthetic dataset");
  generate->add_flag("--dry-run", g.dry_run, "validate and summarize without writing");
  auto* train = app.add_subcommand("train", "train a model kind and write a checkpoint");
  auto* eval_snr = app.add_subcommand("eval-snr", "MSE vs SNR curves for configured checkpoints");
  auto* sweep = app.add_subcommand("sweep-support", "MSE vs support count at fixed SNR");
  auto* mismatch = app.add_subcommand("mismatch", "matched vs mismatched support sets");
  auto* separability = app.add_subcommand("separability", "scenario classification check");
  auto* boundary = app.add_subcommand("boundary", "per-environment testing accuracy boundary");
  auto* switchnet = app.add_subcommand("switchnet", "switchnet baseline with online adaptation");
  for (auto* sub : {generate, train, eval_snr, sweep, mismatch, separability, boundary, switchnet})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : fsce::kExitUsage;
  }

  try {
    const fsce::AppConfig cfg = resolve_config(g);
    if (generate->parsed()) return fsce::cmd_generate(cfg, g.dry_run);
    if (train->parsed()) return fsce::cmd_train(cfg);
    if (eval_snr->parsed()) return fsce::cmd_eval_snr(cfg);
    if (sweep->parsed()) return fsce::cmd_sweep_support(cfg);
    if (mismatch->parsed()) return fsce::cmd_mismatch(cfg);
    if (separability->parsed()) return fsce::cmd_separability(cfg);
    if (boundary->parsed()) return fsce::cmd_boundary(cfg);
    if (switchnet->parsed()) return fsce::cmd_switchnet(cfg);
    std::fprintf(stderr, "no subcommand\n");
    return fsce::kExitUsage;
  } catch (const fsce::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return fsce::kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return fsce::kExitUsage;
  } catch (const fsce::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return fsce::kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return fsce::kExitIo;
  }
}
