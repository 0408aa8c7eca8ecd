#include "fsce/config.hpp"

#include <fstream>
#include <set>

namespace fsce {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw ConfigError("config: unknown key '" + key + "' in " + where);
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

ScenarioSpec scenario_from_json(const json& j) {
  require_keys(j, {"name", "tap_count_range", "delay_spread_range", "decay_exponent_range",
                   "tap_jitter"},
               "dataset.scenarios[]");
  ScenarioSpec s;
  s.name = j.at("name").get<std::string>();
  s.tap_count_min = j.at("tap_count_range").at(0).get<int>();
  s.tap_count_max = j.at("tap_count_range").at(1).get<int>();
  s.delay_spread_min = j.at("delay_spread_range").at(0).get<int>();
  s.delay_spread_max = j.at("delay_spread_range").at(1).get<int>();
  s.decay_exp_min = j.at("decay_exponent_range").at(0).get<double>();
  s.decay_exp_max = j.at("decay_exponent_range").at(1).get<double>();
  s.tap_jitter = j.at("tap_jitter").get<double>();
  return s;
}

ordered_json scenario_to_json(const ScenarioSpec& s) {
  ordered_json j;
  j["name"] = s.name;
  j["tap_count_range"] = {s.tap_count_min, s.tap_count_max};
  j["delay_spread_range"] = {s.delay_spread_min, s.delay_spread_max};
  j["decay_exponent_range"] = {s.decay_exp_min, s.decay_exp_max};
  j["tap_jitter"] = s.tap_jitter;
  return j;
}

DatasetConfig dataset_from_json(const json& j) {
  require_keys(j, {"scenarios", "pdps_per_scenario", "realizations_per_pdp", "seed", "l_pad",
                   "width", "train_pdp_fraction"},
               "dataset");
  DatasetConfig d;
  if (j.contains("scenarios")) {
    d.scenarios.clear();
    for (const auto& s : j.at("scenarios")) d.scenarios.push_back(scenario_from_json(s));
  }
  get_if(j, "pdps_per_scenario", d.pdps_per_scenario);
  get_if(j, "realizations_per_pdp", d.realizations_per_pdp);
  get_if(j, "seed", d.seed);
  get_if(j, "l_pad", d.l_pad);
  get_if(j, "width", d.width);
  get_if(j, "train_pdp_fraction", d.train_pdp_fraction);
  return d;
}

ordered_json dataset_to_json(const DatasetConfig& d) {
  ordered_json j;
  j["scenarios"] = ordered_json::array();
  for (const auto& s : d.scenarios) j["scenarios"].push_back(scenario_to_json(s));
  j["pdps_per_scenario"] = d.pdps_per_scenario;
  j["realizations_per_pdp"] = d.realizations_per_pdp;
  j["seed"] = d.seed;
  j["l_pad"] = d.l_pad;
  j["width"] = d.width;
  j["train_pdp_fraction"] = d.train_pdp_fraction;
  return j;
}

TrainConfig train_from_json(const json& j) {
  require_keys(j, {"batch_size", "learning_rate", "optimizer", "beta1", "beta2", "adam_eps",
                   "loss", "train_snr_db", "episodes_per_epoch", "epochs", "n_support", "seed",
                   "threads"},
               "train");
  TrainConfig t;
  get_if(j, "batch_size", t.batch_size);
  get_if(j, "learning_rate", t.learning_rate);
  if (j.contains("optimizer")) {
    const auto s = j.at("optimizer").get<std::string>();
    if (s == "adam")
      t.optimizer = OptimizerKind::Adam;
    else if (s == "sgd")
      t.optimizer = OptimizerKind::Sgd;
    else
      throw ConfigError("config: unknown optimizer '" + s + "'");
  }
  get_if(j, "beta1", t.beta1);
  get_if(j, "beta2", t.beta2);
  get_if(j, "adam_eps", t.adam_eps);
  if (j.contains("loss")) t.loss = loss_kind_from_name(j.at("loss").get<std::string>());
  get_if(j, "train_snr_db", t.train_snr_db);
  get_if(j, "episodes_per_epoch", t.episodes_per_epoch);
  get_if(j, "epochs", t.epochs);
  get_if(j, "n_support", t.n_support);
  get_if(j, "seed", t.seed);
  get_if(j, "threads", t.threads);
  return t;
}

ordered_json train_to_json(const TrainConfig& t) {
  ordered_json j;
  j["batch_size"] = t.batch_size;
  j["learning_rate"] = t.learning_rate;
  j["optimizer"] = t.optimizer == OptimizerKind::Adam ? "adam" : "sgd";
  j["beta1"] = t.beta1;
  j["beta2"] = t.beta2;
  j["adam_eps"] = t.adam_eps;
  j["loss"] = loss_kind_name(t.loss);
  j["train_snr_db"] = t.train_snr_db;
  j["episodes_per_epoch"] = t.episodes_per_epoch;
  j["epochs"] = t.epochs;
  j["n_support"] = t.n_support;
  j["seed"] = t.seed;
  j["threads"] = t.threads;
  return j;
}

CheckpointRef checkpoint_ref_from_json(const json& j) {
  require_keys(j, {"model", "path", "n_support"}, "eval.checkpoints[]");
  CheckpointRef c;
  c.model = j.at("model").get<std::string>();
  c.path = j.at("path").get<std::string>();
  get_if(j, "n_support", c.n_support);
  return c;
}

ClassifierConfig classifier_from_json(const json& j) {
  require_keys(j, {"conv_channels", "kernel", "steps", "batch_size", "learning_rate",
                   "train_per_pdp", "test_per_pdp", "seed"},
               "eval.classifier");
  ClassifierConfig c;
  get_if(j, "conv_channels", c.conv_channels);
  get_if(j, "kernel", c.kernel);
  get_if(j, "steps", c.steps);
  get_if(j, "batch_size", c.batch_size);
  get_if(j, "learning_rate", c.learning_rate);
  get_if(j, "train_per_pdp", c.train_per_pdp);
  get_if(j, "test_per_pdp", c.test_per_pdp);
  get_if(j, "seed", c.seed);
  return c;
}

ordered_json classifier_to_json(const ClassifierConfig& c) {
  ordered_json j;
  j["conv_channels"] = c.conv_channels;
  j["kernel"] = c.kernel;
  j["steps"] = c.steps;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["train_per_pdp"] = c.train_per_pdp;
  j["test_per_pdp"] = c.test_per_pdp;
  j["seed"] = c.seed;
  return j;
}

ExperimentConfig eval_from_json(const json& j) {
  require_keys(j, {"checkpoints", "snr_grid_db", "n_support_grid", "eval_samples", "seeds",
                   "out_dir", "eval_pdps_per_scenario", "threads", "assert_trends",
                   "sweep_snr_db", "mismatch_assert_snr_db", "switchnet_m",
                   "switchnet_adapt_steps", "switchnet_adapt_lr", "boundary_pdps_per_scenario",
                   "classifier"},
               "eval");
  ExperimentConfig e;
  if (j.contains("checkpoints")) {
    e.checkpoints.clear();
    for (const auto& c : j.at("checkpoints")) e.checkpoints.push_back(checkpoint_ref_from_json(c));
  }
  get_if(j, "snr_grid_db", e.snr_grid_db);
  get_if(j, "n_support_grid", e.n_support_grid);
  get_if(j, "eval_samples", e.eval_samples);
  get_if(j, "seeds", e.seeds);
  get_if(j, "out_dir", e.out_dir);
  get_if(j, "eval_pdps_per_scenario", e.eval_pdps_per_scenario);
  get_if(j, "threads", e.threads);
  get_if(j, "assert_trends", e.assert_trends);
  get_if(j, "sweep_snr_db", e.sweep_snr_db);
  get_if(j, "mismatch_assert_snr_db", e.mismatch_assert_snr_db);
  get_if(j, "switchnet_m", e.switchnet_m);
  get_if(j, "switchnet_adapt_steps", e.switchnet_adapt_steps);
  get_if(j, "switchnet_adapt_lr", e.switchnet_adapt_lr);
  get_if(j, "boundary_pdps_per_scenario", e.boundary_pdps_per_scenario);
  if (j.contains("classifier")) e.classifier = classifier_from_json(j.at("classifier"));
  return e;
}

ordered_json eval_to_json(const ExperimentConfig& e) {
  ordered_json j;
  j["checkpoints"] = ordered_json::array();
  for (const auto& c : e.checkpoints) {
    ordered_json cj;
    cj["model"] = c.model;
    cj["path"] = c.path;
    cj["n_support"] = c.n_support;
    j["checkpoints"].push_back(cj);
  }
  j["snr_grid_db"] = e.snr_grid_db;
  j["n_support_grid"] = e.n_support_grid;
  j["eval_samples"] = e.eval_samples;
  j["seeds"] = e.seeds;
  j["out_dir"] = e.out_dir;
  j["eval_pdps_per_scenario"] = e.eval_pdps_per_scenario;
  j["threads"] = e.threads;
  j["assert_trends"] = e.assert_trends;
  j["sweep_snr_db"] = e.sweep_snr_db;
  j["mismatch_assert_snr_db"] = e.mismatch_assert_snr_db;
  j["switchnet_m"] = e.switchnet_m;
  j["switchnet_adapt_steps"] = e.switchnet_adapt_steps;
  j["switchnet_adapt_lr"] = e.switchnet_adapt_lr;
  j["boundary_pdps_per_scenario"] = e.boundary_pdps_per_scenario;
  j["classifier"] = classifier_to_json(e.classifier);
  return j;
}

}  // namespace

ModelConfig model_config_from_json(const nlohmann::json& j) {
  require_keys(j, {"width", "n_support", "feature_channels", "extractor_hidden", "reduction",
                   "tau", "backbone_n", "backbone_hidden", "backbone_kernel", "cin_hidden",
                   "cin_kernel", "cin_head_kernel", "tam_channels", "tam_kernel",
                   "senet_reduction", "per_block_softmax", "tam_exact_printed_form",
                   "backbone_query_skip"},
               "model");
  ModelConfig m;
  get_if(j, "width", m.width);
  get_if(j, "n_support", m.n_support);
  get_if(j, "feature_channels", m.feature_channels);
  get_if(j, "extractor_hidden", m.extractor_hidden);
  get_if(j, "reduction", m.reduction);
  get_if(j, "tau", m.tau);
  get_if(j, "backbone_n", m.backbone_n);
  get_if(j, "backbone_hidden", m.backbone_hidden);
  get_if(j, "backbone_kernel", m.backbone_kernel);
  get_if(j, "cin_hidden", m.cin_hidden);
  get_if(j, "cin_kernel", m.cin_kernel);
  get_if(j, "cin_head_kernel", m.cin_head_kernel);
  get_if(j, "tam_channels", m.tam_channels);
  get_if(j, "tam_kernel", m.tam_kernel);
  get_if(j, "senet_reduction", m.senet_reduction);
  get_if(j, "per_block_softmax", m.per_block_softmax);
  get_if(j, "tam_exact_printed_form", m.tam_exact_printed_form);
  get_if(j, "backbone_query_skip", m.backbone_query_skip);
  return m;
}

nlohmann::ordered_json model_config_to_json(const ModelConfig& m) {
  ordered_json j;
  j["width"] = m.width;
  j["n_support"] = m.n_support;
  j["feature_channels"] = m.feature_channels;
  j["extractor_hidden"] = m.extractor_hidden;
  j["reduction"] = m.reduction;
  j["tau"] = m.tau;
  j["backbone_n"] = m.backbone_n;
  j["backbone_hidden"] = m.backbone_hidden;
  j["backbone_kernel"] = m.backbone_kernel;
  j["cin_hidden"] = m.cin_hidden;
  j["cin_kernel"] = m.cin_kernel;
  j["cin_head_kernel"] = m.cin_head_kernel;
  j["tam_channels"] = m.tam_channels;
  j["tam_kernel"] = m.tam_kernel;
  j["senet_reduction"] = m.senet_reduction;
  j["per_block_softmax"] = m.per_block_softmax;
  j["tam_exact_printed_form"] = m.tam_exact_printed_form;
  j["backbone_query_skip"] = m.backbone_query_skip;
  return j;
}

AppConfig app_config_from_json(const nlohmann::json& j) {
  require_keys(j, {"dataset_dir", "dataset", "model", "train", "train_model_kind", "eval"},
               "config root");
  AppConfig cfg = desk_default_config();
  get_if(j, "dataset_dir", cfg.dataset_dir);
  if (j.contains("dataset")) cfg.dataset = dataset_from_json(j.at("dataset"));
  if (j.contains("model")) cfg.model = model_config_from_json(j.at("model"));
  if (j.contains("train")) cfg.train = train_from_json(j.at("train"));
  if (j.contains("train_model_kind")) {
    cfg.train_model_kind = j.at("train_model_kind").get<std::string>();
    if (cfg.train_model_kind != "switchnet")
      model_kind_from_name(cfg.train_model_kind);  // validates
  }
  if (j.contains("eval")) cfg.eval = eval_from_json(j.at("eval"));
  return cfg;
}

nlohmann::ordered_json app_config_to_json(const AppConfig& cfg) {
  ordered_json j;
  j["dataset_dir"] = cfg.dataset_dir;
  j["dataset"] = dataset_to_json(cfg.dataset);
  j["model"] = model_config_to_json(cfg.model);
  j["train"] = train_to_json(cfg.train);
  j["train_model_kind"] = cfg.train_model_kind;
  j["eval"] = eval_to_json(cfg.eval);
  return j;
}

AppConfig load_app_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const std::exception& e) {
    throw ConfigError("config parse error in " + path.string() + ": " + e.what());
  }
  return app_config_from_json(j);
}

std::string config_hash(const nlohmann::ordered_json& j) {
  // FNV-1a over the canonical dump
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace fsce
