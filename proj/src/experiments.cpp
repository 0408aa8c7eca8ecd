#include "fsce/eval/experiments.hpp"

#include "fsce/config.hpp"
#include "fsce/core/parallel.hpp"
#include "fsce/eval/baseline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

namespace fsce {

void ExperimentConfig::validate() const {
  for (double s : snr_grid_db)
    if (!std::isfinite(s)) throw ConfigError("eval: snr grid values must be finite");
  if (eval_samples < 1) throw ConfigError("eval: eval_samples must be >= 1");
  if (seeds.empty()) throw ConfigError("eval: seed list must not be empty");
  if (eval_pdps_per_scenario < 1) throw ConfigError("eval: eval_pdps_per_scenario must be >= 1");
  if (threads < 1) throw ConfigError("eval: threads must be >= 1");
}

AppConfig desk_default_config() {
  AppConfig cfg;
  cfg.dataset_dir = "data";
  cfg.dataset.scenarios = {
      {"indoor_short", 3, 5, 6, 10, 0.25, 0.40, 0.30},
      {"suburban_mid", 6, 9, 16, 22, 0.12, 0.18, 0.30},
      {"urban_long", 10, 14, 34, 48, 0.05, 0.08, 0.30},
  };
  cfg.dataset.pdps_per_scenario = 50;
  cfg.dataset.realizations_per_pdp = 200;
  cfg.dataset.seed = 7;
  cfg.dataset.train_pdp_fraction = 0.9;

  cfg.train.batch_size = 64;
  cfg.train.episodes_per_epoch = 4096;
  cfg.train.epochs = 5;
  cfg.train.threads = 2;
  return cfg;
}

std::uint64_t eval_episode_seed(std::uint64_t seed, int pdp_id, int sample) {
  return mix_seed(mix_seed(seed, 0xE7A1, static_cast<std::uint64_t>(pdp_id)),
                  static_cast<std::uint64_t>(sample) + 1);
}

double eval_episode_mse(const FSLModel& model, const Episode& ep) {
  const FslOutput out = fsl_forward(model, ep);
  return response_mse(estimate_response(model, out.h_est), ep.true_response);
}

double eval_point(const FSLModel& model, const Dataset& ds, int pdp_index, int n,
                  double snr_db, std::uint64_t seed, int samples) {
  const int pdp_id = ds.pdp(pdp_index).pdp_id;
  double acc = 0.0;
  for (int e = 0; e < samples; ++e) {
    const Episode ep = ds.episode(pdp_index, n, snr_db, eval_episode_seed(seed, pdp_id, e));
    acc += eval_episode_mse(model, ep);
  }
  return acc / samples;
}

std::filesystem::path checkpoint_path(const AppConfig& cfg, const std::string& kind,
                                      std::uint64_t seed, int n_support) {
  std::string name = kind;
  if (n_support >= 0) name += "_n" + std::to_string(n_support);
  name += "_seed" + std::to_string(seed) + ".ckpt";
  return std::filesystem::path(cfg.eval.out_dir) / name;
}

namespace {

Dataset load_dataset_or_throw(const AppConfig& cfg) {
  try {
    return Dataset::load(cfg.dataset_dir);
  } catch (const std::exception& e) {
    throw IoError(std::string("dataset: ") + e.what());
  }
}

std::vector<int> eval_pdp_set(const Dataset& ds, int per_scenario) {
  std::vector<int> out;
  for (int s = 0; s < ds.scenario_count(); ++s) {
    const auto held = ds.heldout_pdp_indices(s);
    for (int i = 0; i < per_scenario && i < static_cast<int>(held.size()); ++i)
      out.push_back(held[static_cast<std::size_t>(i)]);
  }
  return out;
}

void ensure_out_dir(const AppConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.eval.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.eval.out_dir);
}

struct LoadedModel {
  std::string label;
  FSLModel model;
  int eval_n;  // support count used when evaluating this model
};

LoadedModel load_model_ref(const CheckpointRef& ref) {
  try {
    if (checkpoint_is_switchnet(ref.path))
      throw ConfigError("checkpoint '" + ref.path + "' is a switchnet model; use the switchnet command");
    LoadedModel lm{ref.model, load_fsl_checkpoint(ref.path), 0};
    const bool uses_support =
        lm.model.kind == ModelKind::FslFull || lm.model.kind == ModelKind::FslNoCam;
    lm.eval_n = uses_support ? lm.model.cfg.n_support : 0;
    return lm;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  }
}

// median over seeds of the per-seed mean across the pdp set
double seed_median(const std::vector<ResultRow>& rows, const std::string& experiment,
                   const std::string& model, double snr, int n_support) {
  std::map<std::uint64_t, std::pair<double, int>> per_seed;
  for (const auto& r : rows) {
    if (r.experiment != experiment || r.model != model || r.n_support != n_support) continue;
    if (std::abs(r.snr_db - snr) > 1e-9) continue;
    auto& [sum, count] = per_seed[r.seed];
    sum += r.mse;
    count += 1;
  }
  if (per_seed.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> means;
  means.reserve(per_seed.size());
  for (auto& [seed, sc] : per_seed) means.push_back(sc.first / sc.second);
  return median(std::move(means));
}

struct TrendCheck {
  std::string name;
  bool pass;
  std::string detail;
};

int report_trends(const std::vector<TrendCheck>& checks, bool assert_mode) {
  bool all = true;
  for (const auto& c : checks) {
    std::printf("[%s] %s: %s\n", c.pass ? "pass" : "FAIL", c.name.c_str(), c.detail.c_str());
    all = all && c.pass;
  }
  return (!all && assert_mode) ? kExitAssertion : kExitOk;
}

bool finite_less(double a, double b) { return std::isfinite(a) && std::isfinite(b) && a < b; }
bool finite_leq(double a, double b) { return std::isfinite(a) && std::isfinite(b) && a <= b; }

std::vector<SvgSeries> series_by_model(const std::vector<ResultRow>& rows,
                                       const std::vector<std::string>& models, bool by_snr) {
  std::vector<SvgSeries> out;
  for (const auto& m : models) {
    std::map<double, std::pair<double, int>> agg;  // x -> (sum, count)
    for (const auto& r : rows) {
      if (r.model != m) continue;
      const double x = by_snr ? r.snr_db : static_cast<double>(r.n_support);
      auto& [sum, count] = agg[x];
      sum += r.mse;
      count += 1;
    }
    SvgSeries s;
    s.label = m;
    for (auto& [x, sc] : agg) s.points.push_back({x, sc.first / sc.second});
    if (!s.points.empty()) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

int cmd_generate(const AppConfig& cfg, bool dry_run) {
  try {
    cfg.dataset.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  const auto& d = cfg.dataset;
  const long long records =
      static_cast<long long>(d.pdps_per_scenario) * d.realizations_per_pdp;
  std::printf("dataset: %zu scenario(s), %d PDPs x %d realizations each (%lld records/scenario)\n",
              d.scenarios.size(), d.pdps_per_scenario, d.realizations_per_pdp, records);
  for (std::size_t i = 0; i < d.scenarios.size(); ++i) {
    const auto& s = d.scenarios[i];
    std::printf("  [%zu] %s: taps %d..%d, delay spread %d..%d, decay %.3g..%.3g, jitter %.3g\n",
                i, s.name.c_str(), s.tap_count_min, s.tap_count_max, s.delay_spread_min,
                s.delay_spread_max, s.decay_exp_min, s.decay_exp_max, s.tap_jitter);
  }
  if (dry_run) {
    std::printf("dry run: nothing written\n");
    return kExitOk;
  }
  try {
    Dataset::generate(d, cfg.dataset_dir);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::exception& e) {
    throw IoError(e.what());
  }
  std::printf("wrote %s/manifest.json and %zu scenario file(s)\n", cfg.dataset_dir.c_str(),
              d.scenarios.size());
  return kExitOk;
}

int cmd_train(const AppConfig& cfg) {
  ensure_out_dir(cfg);
  const Dataset ds = load_dataset_or_throw(cfg);

  if (cfg.train_model_kind == "switchnet") {
    SwitchNetTrainOutput out = switchnet_offline_train(ds, cfg.eval.switchnet_m, cfg.train);
    const auto path = checkpoint_path(cfg, "switchnet", cfg.train.seed, -1);
    save_checkpoint(path, out.params);
    write_curve_csv(std::filesystem::path(cfg.eval.out_dir) /
                        ("curve_switchnet_seed" + std::to_string(cfg.train.seed) + ".csv"),
                    out.curve);
    std::printf("switchnet offline training done (M=%d); checkpoint %s\n", out.params.m(),
                path.string().c_str());
    return kExitOk;
  }

  const ModelKind kind = model_kind_from_name(cfg.train_model_kind);
  TrainOutput out = train(kind, ds, ds.train_pdp_indices(), cfg.model, cfg.train);
  const bool uses_n = kind == ModelKind::FslFull || kind == ModelKind::FslNoCam;
  const auto path = checkpoint_path(cfg, cfg.train_model_kind, cfg.train.seed,
                                    uses_n ? cfg.train.n_support : -1);
  save_checkpoint(path, out.model);
  write_curve_csv(std::filesystem::path(cfg.eval.out_dir) /
                      ("curve_" + cfg.train_model_kind + "_seed" +
                       std::to_string(cfg.train.seed) + ".csv"),
                  out.curve);
  const double first = out.curve.front().loss_total;
  const double last = out.curve.back().loss_total;
  std::printf("%s: %zu steps, loss %.6g -> %.6g; checkpoint %s\n", cfg.train_model_kind.c_str(),
              out.curve.size(), first, last, path.string().c_str());
  return kExitOk;
}

int cmd_eval_snr(const AppConfig& cfg) {
  cfg.eval.validate();
  ensure_out_dir(cfg);
  const Dataset ds = load_dataset_or_throw(cfg);
  const auto pdps = eval_pdp_set(ds, cfg.eval.eval_pdps_per_scenario);
  if (cfg.eval.checkpoints.empty())
    throw ConfigError("eval-snr: no checkpoints configured");

  std::vector<LoadedModel> models;
  for (const auto& ref : cfg.eval.checkpoints) models.push_back(load_model_ref(ref));

  struct Task {
    int model;  // -1 = ls interpolation baseline
    int pdp;
    double snr;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (int m = -1; m < static_cast<int>(models.size()); ++m)
    for (int p : pdps)
      for (double snr : cfg.eval.snr_grid_db)
        for (std::uint64_t seed : cfg.eval.seeds) tasks.push_back({m, p, snr, seed});

  std::vector<double> mse(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), cfg.eval.threads, [&](int i) {
    const Task& t = tasks[static_cast<std::size_t>(i)];
    if (t.model < 0) {
      const int pdp_id = ds.pdp(t.pdp).pdp_id;
      double acc = 0;
      for (int e = 0; e < cfg.eval.eval_samples; ++e) {
        const Episode ep = ds.episode(t.pdp, 0, t.snr, eval_episode_seed(t.seed, pdp_id, e));
        acc += response_mse(ls_interpolation_estimate(ep.query), ep.true_response);
      }
      mse[static_cast<std::size_t>(i)] = acc / cfg.eval.eval_samples;
    } else {
      const auto& lm = models[static_cast<std::size_t>(t.model)];
      mse[static_cast<std::size_t>(i)] =
          eval_point(lm.model, ds, t.pdp, lm.eval_n, t.snr, t.seed, cfg.eval.eval_samples);
    }
  });

  std::vector<ResultRow> rows;
  std::vector<std::string> labels = {"ls_interp"};
  for (const auto& lm : models) labels.push_back(lm.label);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const Task& t = tasks[i];
    ResultRow r;
    r.experiment = "eval_snr";
    r.model = t.model < 0 ? "ls_interp" : models[static_cast<std::size_t>(t.model)].label;
    r.scenario = ds.pdp(t.pdp).scenario_name;
    r.pdp_id = ds.pdp(t.pdp).pdp_id;
    r.snr_db = t.snr;
    r.n_support = t.model < 0 ? 0 : models[static_cast<std::size_t>(t.model)].eval_n;
    r.seed = t.seed;
    r.mse = mse[i];
    rows.push_back(std::move(r));
  }

  const auto csv = std::filesystem::path(cfg.eval.out_dir) / "eval_snr.csv";
  write_results_csv(csv, rows);
  write_svg_plot(std::filesystem::path(cfg.eval.out_dir) / "eval_snr.svg",
                 "Channel estimation MSE vs SNR", "SNR (dB)", "MSE",
                 series_by_model(read_results_csv(csv), labels, true), true);
  std::printf("eval-snr: %zu rows -> %s\n", rows.size(), csv.string().c_str());

  std::vector<TrendCheck> checks;
  bool have_full = false, have_backbone = false;
  int full_n = 0;
  for (const auto& lm : models) {
    if (lm.label == "fsl_full") {
      have_full = true;
      full_n = lm.eval_n;
    }
    if (lm.label == "backbone_only") have_backbone = true;
  }
  if (have_full && have_backbone) {
    for (double snr : cfg.eval.snr_grid_db) {
      const double f = seed_median(rows, "eval_snr", "fsl_full", snr, full_n);
      const double b = seed_median(rows, "eval_snr", "backbone_only", snr, 0);
      checks.push_back({"fsl_full <= backbone_only @ " + format_double(snr) + " dB",
                        finite_leq(f, b), format_double(f) + " vs " + format_double(b)});
    }
  }
  return report_trends(checks, cfg.eval.assert_trends);
}

int cmd_sweep_support(const AppConfig& cfg) {
  cfg.eval.validate();
  ensure_out_dir(cfg);
  const Dataset ds = load_dataset_or_throw(cfg);
  const auto pdps = eval_pdp_set(ds, cfg.eval.eval_pdps_per_scenario);
  const double snr = cfg.eval.sweep_snr_db;

  // one checkpoint per grid entry: backbone_only for n=0, fsl_full otherwise
  std::map<int, LoadedModel> by_n;
  for (int n : cfg.eval.n_support_grid) {
    std::optional<CheckpointRef> found;
    for (const auto& ref : cfg.eval.checkpoints) {
      if (n == 0 && ref.model == "backbone_only") found = ref;
      if (n > 0 && ref.model == "fsl_full" && ref.n_support == n) found = ref;
    }
    if (!found)
      throw ConfigError("sweep-support: missing checkpoint for n_support=" + std::to_string(n));
    LoadedModel lm = load_model_ref(*found);
    lm.eval_n = n;
    by_n.emplace(n, std::move(lm));
  }

  struct Task {
    int n;
    int pdp;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const auto& [n, lm] : by_n)
    for (int p : pdps)
      for (std::uint64_t seed : cfg.eval.seeds) tasks.push_back({n, p, seed});
  std::vector<double> mse(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), cfg.eval.threads, [&](int i) {
    const Task& t = tasks[static_cast<std::size_t>(i)];
    const auto& lm = by_n.at(t.n);
    mse[static_cast<std::size_t>(i)] =
        eval_point(lm.model, ds, t.pdp, t.n, snr, t.seed, cfg.eval.eval_samples);
  });

  std::vector<ResultRow> rows;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const Task& t = tasks[i];
    rows.push_back({"sweep_support", t.n == 0 ? "backbone_only" : "fsl_full",
                    ds.pdp(t.pdp).scenario_name, ds.pdp(t.pdp).pdp_id, snr, t.n, t.seed,
                    mse[i]});
  }
  const auto csv = std::filesystem::path(cfg.eval.out_dir) / "sweep_support.csv";
  write_results_csv(csv, rows);
  {
    std::map<int, std::pair<double, int>> agg;
    for (const auto& r : rows) {
      auto& [sum, count] = agg[r.n_support];
      sum += r.mse;
      count += 1;
    }
    SvgSeries s;
    s.label = "fsl (n>0) / backbone (n=0)";
    for (auto& [n, sc] : agg) s.points.push_back({static_cast<double>(n), sc.first / sc.second});
    write_svg_plot(std::filesystem::path(cfg.eval.out_dir) / "sweep_support.svg",
                   "MSE vs support block count @ " + format_double(snr) + " dB",
                   "support blocks n", "MSE", {s}, true);
  }
  std::printf("sweep-support: %zu rows -> %s\n", rows.size(), csv.string().c_str());

  auto med = [&](int n) {
    return seed_median(rows, "sweep_support", n == 0 ? "backbone_only" : "fsl_full", snr, n);
  };
  std::vector<TrendCheck> checks;
  auto has_n = [&](int n) { return by_n.count(n) != 0; };
  if (has_n(0) && has_n(1))
    checks.push_back({"mse(n=0) > mse(n=1)", finite_less(med(1), med(0)),
                      format_double(med(0)) + " vs " + format_double(med(1))});
  if (has_n(1) && has_n(16))
    checks.push_back({"mse(n=1) > mse(n=16)", finite_less(med(16), med(1)),
                      format_double(med(1)) + " vs " + format_double(med(16))});
  if (has_n(16) && has_n(32)) {
    const double m16 = med(16), m32 = med(32);
    const bool ok = std::isfinite(m16) && std::isfinite(m32) && std::abs(m32 - m16) <= 0.1 * m16;
    checks.push_back({"mse(n=32) within 10% of mse(n=16)", ok,
                      format_double(m32) + " vs " + format_double(m16)});
  }
  return report_trends(checks, cfg.eval.assert_trends);
}

int cmd_mismatch(const AppConfig& cfg) {
  cfg.eval.validate();
  ensure_out_dir(cfg);
  const Dataset ds = load_dataset_or_throw(cfg);

  std::optional<CheckpointRef> full;
  for (const auto& ref : cfg.eval.checkpoints)
    if (ref.model == "fsl_full") full = ref;
  if (!full) throw ConfigError("mismatch: an fsl_full checkpoint is required");
  const LoadedModel lm = load_model_ref(*full);

  const int per = cfg.eval.eval_pdps_per_scenario;
  for (int s = 0; s < ds.scenario_count(); ++s)
    if (static_cast<int>(ds.heldout_pdp_indices(s).size()) < 2)
      throw ConfigError("mismatch: needs >= 2 held-out PDPs per scenario");

  struct Cond {
    const char* experiment;
    int query;
    int support;
  };
  std::vector<Cond> conds;
  for (int s = 0; s < ds.scenario_count(); ++s) {
    const auto held = ds.heldout_pdp_indices(s);
    const auto next_held = ds.heldout_pdp_indices((s + 1) % ds.scenario_count());
    for (int i = 0; i < per && i < static_cast<int>(held.size()); ++i) {
      const int q = held[static_cast<std::size_t>(i)];
      const int same = held[static_cast<std::size_t>((i + 1) % held.size())];
      const int cross = next_held[static_cast<std::size_t>(i % next_held.size())];
      conds.push_back({"mismatch_matched", q, q});
      conds.push_back({"mismatch_same_scenario", q, same});
      conds.push_back({"mismatch_cross_scenario", q, cross});
    }
  }

  struct Task {
    int cond;
    double snr;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (int c = 0; c < static_cast<int>(conds.size()); ++c)
    for (double snr : cfg.eval.snr_grid_db)
      for (std::uint64_t seed : cfg.eval.seeds) tasks.push_back({c, snr, seed});
  std::vector<double> mse(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), cfg.eval.threads, [&](int i) {
    const Task& t = tasks[static_cast<std::size_t>(i)];
    const Cond& c = conds[static_cast<std::size_t>(t.cond)];
    const int pdp_id = ds.pdp(c.query).pdp_id;
    double acc = 0;
    for (int e = 0; e < cfg.eval.eval_samples; ++e) {
      const Episode ep = ds.mismatch_episode(c.query, c.support, lm.eval_n, t.snr,
                                             eval_episode_seed(t.seed, pdp_id, e));
      acc += eval_episode_mse(lm.model, ep);
    }
    mse[static_cast<std::size_t>(i)] = acc / cfg.eval.eval_samples;
  });

  std::vector<ResultRow> rows;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const Task& t = tasks[i];
    const Cond& c = conds[static_cast<std::size_t>(t.cond)];
    rows.push_back({c.experiment, "fsl_full", ds.pdp(c.query).scenario_name,
                    ds.pdp(c.query).pdp_id, t.snr, lm.eval_n, t.seed, mse[i]});
  }
  const auto csv = std::filesystem::path(cfg.eval.out_dir) / "mismatch.csv";
  write_results_csv(csv, rows);
  {
    std::vector<SvgSeries> series;
    for (const char* exp :
         {"mismatch_matched", "mismatch_same_scenario", "mismatch_cross_scenario"}) {
      std::map<double, std::pair<double, int>> agg;
      for (const auto& r : rows)
        if (r.experiment == exp) {
          auto& [sum, count] = agg[r.snr_db];
          sum += r.mse;
          count += 1;
        }
      SvgSeries s;
      s.label = exp;
      for (auto& [x, sc] : agg) s.points.push_back({x, sc.first / sc.second});
      series.push_back(std::move(s));
    }
    write_svg_plot(std::filesystem::path(cfg.eval.out_dir) / "mismatch.svg",
                   "Match vs mismatch MSE", "SNR (dB)", "MSE", series, true);
  }
  std::printf("mismatch: %zu rows -> %s\n", rows.size(), csv.string().c_str());

  const double snr = cfg.eval.mismatch_assert_snr_db;
  const double m = seed_median(rows, "mismatch_matched", "fsl_full", snr, lm.eval_n);
  const double same = seed_median(rows, "mismatch_same_scenario", "fsl_full", snr, lm.eval_n);
  const double cross = seed_median(rows, "mismatch_cross_scenario", "fsl_full", snr, lm.eval_n);
  std::vector<TrendCheck> checks = {
      {"matched < same-scenario mismatch @ " + format_double(snr) + " dB", finite_less(m, same),
       format_double(m) + " vs " + format_double(same)},
      {"same-scenario < cross-scenario mismatch @ " + format_double(snr) + " dB",
       finite_less(same, cross), format_double(same) + " vs " + format_double(cross)},
  };
  return report_trends(checks, cfg.eval.assert_trends);
}

int cmd_separability(const AppConfig& cfg) {
  ensure_out_dir(cfg);
  const Dataset ds = load_dataset_or_throw(cfg);
  if (ds.scenario_count() < 2) throw ConfigError("separability: need >= 2 scenarios");
  const ClassifierResult res = train_separability_classifier(ds, cfg.eval.classifier);

  const auto path = std::filesystem::path(cfg.eval.out_dir) / "separability.txt";
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << "held-out accuracy: " << format_double(res.accuracy) << " (" << res.test_samples
     << " samples)\n";
  os << "confusion (rows = true scenario, cols = predicted):\n";
  for (int r = 0; r < res.confusion.rows(); ++r) {
    os << "  " << ds.config().scenarios[static_cast<std::size_t>(r)].name << ":";
    for (int c = 0; c < res.confusion.cols(); ++c) os << ' ' << res.confusion(r, c);
    os << '\n';
  }
  std::printf("separability: accuracy %.4f -> %s\n", res.accuracy, path.string().c_str());

  std::vector<TrendCheck> checks = {{"scenario classification accuracy >= 0.9",
                                     std::isfinite(res.accuracy) && res.accuracy >= 0.9,
                                     format_double(res.accuracy)}};
  return report_trends(checks, cfg.eval.assert_trends);
}

int cmd_boundary(const AppConfig& cfg) {
  cfg.eval.validate();
  ensure_out_dir(cfg);
  const Dataset ds = load_dataset_or_throw(cfg);

  std::optional<CheckpointRef> full, backbone;
  for (const auto& ref : cfg.eval.checkpoints) {
    if (ref.model == "fsl_full") full = ref;
    if (ref.model == "backbone_only") backbone = ref;
  }
  if (!full || !backbone)
    throw ConfigError("boundary: fsl_full and backbone_only checkpoints are required");
  const LoadedModel lm_full = load_model_ref(*full);
  const LoadedModel lm_backbone = load_model_ref(*backbone);

  const auto pdps = eval_pdp_set(ds, cfg.eval.boundary_pdps_per_scenario);
  std::vector<ResultRow> rows;
  for (int p : pdps) {
    const int pdp_id = ds.pdp(p).pdp_id;
    for (std::uint64_t seed : cfg.eval.seeds) {
      // the boundary: a backbone trained abundantly on this environment alone
      TrainConfig tc = cfg.train;
      tc.seed = mix_seed(seed, static_cast<std::uint64_t>(pdp_id));
      tc.n_support = 0;
      TrainOutput bt = train(ModelKind::BackboneOnly, ds, {p}, cfg.model, tc);
      for (double snr : cfg.eval.snr_grid_db) {
        rows.push_back({"boundary", "boundary", ds.pdp(p).scenario_name, pdp_id, snr, 0, seed,
                        eval_point(bt.model, ds, p, 0, snr, seed, cfg.eval.eval_samples)});
        rows.push_back({"boundary", "backbone_only", ds.pdp(p).scenario_name, pdp_id, snr, 0,
                        seed,
                        eval_point(lm_backbone.model, ds, p, 0, snr, seed, cfg.eval.eval_samples)});
        rows.push_back({"boundary", "fsl_full", ds.pdp(p).scenario_name, pdp_id, snr,
                        lm_full.eval_n, seed,
                        eval_point(lm_full.model, ds, p, lm_full.eval_n, snr, seed,
                                   cfg.eval.eval_samples)});
      }
    }
  }
  const auto csv = std::filesystem::path(cfg.eval.out_dir) / "boundary.csv";
  write_results_csv(csv, rows);

  const auto report = std::filesystem::path(cfg.eval.out_dir) / "boundary_report.txt";
  std::ofstream os(report);
  if (!os) throw IoError("cannot write " + report.string());
  std::vector<TrendCheck> checks;
  os << "gap(fsl_full, boundary) per SNR point (positive = fsl above the boundary):\n";
  for (double snr : cfg.eval.snr_grid_db) {
    const double b = seed_median(rows, "boundary", "boundary", snr, 0);
    const double g = seed_median(rows, "boundary", "backbone_only", snr, 0);
    const double f = seed_median(rows, "boundary", "fsl_full", snr, lm_full.eval_n);
    os << "  snr " << format_double(snr) << ": boundary " << format_double(b) << ", fsl_full "
       << format_double(f) << ", gap " << format_double(f - b) << ", generic backbone "
       << format_double(g) << '\n';
    checks.push_back({"boundary <= generic backbone @ " + format_double(snr) + " dB",
                      finite_leq(b, g), format_double(b) + " vs " + format_double(g)});
  }
  std::printf("boundary: %zu rows -> %s\n", rows.size(), csv.string().c_str());
  return report_trends(checks, cfg.eval.assert_trends);
}

int cmd_switchnet(const AppConfig& cfg) {
  cfg.eval.validate();
  ensure_out_dir(cfg);
  const Dataset ds = load_dataset_or_throw(cfg);

  std::optional<CheckpointRef> full;
  for (const auto& ref : cfg.eval.checkpoints)
    if (ref.model == "fsl_full") full = ref;
  if (!full) throw ConfigError("switchnet: an fsl_full checkpoint is required for the comparison");
  const LoadedModel lm_full = load_model_ref(*full);

  SwitchNetTrainOutput offline = switchnet_offline_train(ds, cfg.eval.switchnet_m, cfg.train);
  save_checkpoint(checkpoint_path(cfg, "switchnet", cfg.train.seed, -1), offline.params);
  std::printf("switchnet: trainable online parameter count = %d (M+1)\n",
              offline.params.m() + 1);

  const auto pdps = eval_pdp_set(ds, cfg.eval.eval_pdps_per_scenario);
  std::vector<ResultRow> rows;
  for (int p : pdps) {
    const int pdp_id = ds.pdp(p).pdp_id;
    for (std::uint64_t seed : cfg.eval.seeds) {
      // 16 truth-labeled w/4-pilot blocks from the new environment
      std::vector<Episode> adapt_set;
      for (int i = 0; i < 16; ++i)
        adapt_set.push_back(ds.episode(p, 0, cfg.train.train_snr_db,
                                       mix_seed(eval_episode_seed(seed, pdp_id, 1 << 20), i)));
      SwitchNetParams adapted = offline.params;
      adapted.alpha = Tensor::zeros({offline.params.m() + 1});
      adapted.alpha.data()[0] = 1.0;
      switchnet_online_adapt(adapted, adapt_set, cfg.eval.switchnet_adapt_steps,
                             cfg.eval.switchnet_adapt_lr);

      SwitchNetParams subnet0 = offline.params;
      subnet0.alpha = Tensor::zeros({offline.params.m() + 1});
      subnet0.alpha.data()[0] = 1.0;

      for (double snr : cfg.eval.snr_grid_db) {
        auto eval_sn = [&](const SwitchNetParams& params) {
          double acc = 0;
          for (int e = 0; e < cfg.eval.eval_samples; ++e) {
            const Episode ep = ds.episode(p, 0, snr, eval_episode_seed(seed, pdp_id, e));
            const Tensor est = switchnet_forward(params, switchnet_input(ep.query));
            acc += (est.flat() -
                    flatten_response(ep.true_response).flat()).square().mean();
          }
          return acc / cfg.eval.eval_samples;
        };
        rows.push_back({"switchnet", "switchnet_adapted", ds.pdp(p).scenario_name, pdp_id, snr,
                        0, seed, eval_sn(adapted)});
        rows.push_back({"switchnet", "switchnet_subnet0", ds.pdp(p).scenario_name, pdp_id, snr,
                        0, seed, eval_sn(subnet0)});
        rows.push_back({"switchnet", "fsl_full", ds.pdp(p).scenario_name, pdp_id, snr,
                        lm_full.eval_n, seed,
                        eval_point(lm_full.model, ds, p, lm_full.eval_n, snr, seed,
                                   cfg.eval.eval_samples)});
      }
    }
  }
  const auto csv = std::filesystem::path(cfg.eval.out_dir) / "switchnet.csv";
  write_results_csv(csv, rows);

  const auto table = std::filesystem::path(cfg.eval.out_dir) / "switchnet_table.txt";
  std::ofstream os(table);
  if (!os) throw IoError("cannot write " + table.string());
  const double snr0 = cfg.eval.sweep_snr_db;
  os << "model, online_gradient_steps, trainable_online_params, labeled_support, median_mse@"
     << format_double(snr0) << "dB\n";
  const double a = seed_median(rows, "switchnet", "switchnet_adapted", snr0, 0);
  const double s0 = seed_median(rows, "switchnet", "switchnet_subnet0", snr0, 0);
  const double f = seed_median(rows, "switchnet", "fsl_full", snr0, lm_full.eval_n);
  os << "switchnet_adapted, " << cfg.eval.switchnet_adapt_steps << ", "
     << offline.params.m() + 1 << ", yes (true channel given for 16 w/4-pilot blocks), "
     << format_double(a) << '\n';
  os << "switchnet_subnet0, 0, 0, no, " << format_double(s0) << '\n';
  os << "fsl_full, 0, 0, no (16 unlabeled w-pilot blocks), " << format_double(f) << '\n';
  std::printf("switchnet: %zu rows -> %s (table %s)\n", rows.size(), csv.string().c_str(),
              table.string().c_str());

  std::vector<TrendCheck> checks = {
      {"adapted <= subnet0-only @ " + format_double(snr0) + " dB", finite_leq(a, s0),
       format_double(a) + " vs " + format_double(s0)}};
  return report_trends(checks, cfg.eval.assert_trends);
}

}  // namespace fsce
