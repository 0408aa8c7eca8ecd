#include "fsce/channel/dataset.hpp"

#include "fsce/core/rng.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace fsce {

namespace {

constexpr int kFormatVersion = 1;
constexpr std::uint64_t kEpisodeQueryIdx = 0xE1;
constexpr std::uint64_t kEpisodeSupportIdx = 0xE2;

void write_f64_le(std::ofstream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  if constexpr (std::endian::native == std::endian::big)
    bits = __builtin_bswap64(bits);
  os.write(reinterpret_cast<const char*>(&bits), 8);
}

double read_f64_le(std::ifstream& is) {
  std::uint64_t bits = 0;
  is.read(reinterpret_cast<char*>(&bits), 8);
  if constexpr (std::endian::native == std::endian::big)
    bits = __builtin_bswap64(bits);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::string scenario_file_name(int idx, const std::string& name) {
  return "scenario_" + std::to_string(idx) + "_" + name + ".f64";
}

int global_pdp_id(int scenario, int pdp) { return scenario * 10000 + pdp; }

}  // namespace

void DatasetConfig::validate() const {
  if (scenarios.empty() && (pdps_per_scenario > 0 || realizations_per_pdp > 0)) {
    // an empty spec list is allowed and produces an empty manifest
  }
  for (const auto& s : scenarios) s.validate(l_pad);
  if (pdps_per_scenario < 0 || realizations_per_pdp < 0)
    throw std::invalid_argument("dataset: negative counts");
  if (width < l_pad) throw std::invalid_argument("dataset: width must be >= l_pad");
  if (train_pdp_fraction <= 0.0 || train_pdp_fraction > 1.0)
    throw std::invalid_argument("dataset: train_pdp_fraction must be in (0,1]");
}

std::uint64_t Dataset::pdp_seed(std::uint64_t dataset_seed, int scenario, int pdp) {
  return mix_seed(mix_seed(dataset_seed, 0x9D90, static_cast<std::uint64_t>(scenario)),
                  static_cast<std::uint64_t>(pdp) + 1);
}

std::uint64_t Dataset::realization_seed(std::uint64_t dataset_seed, int scenario, int pdp, int r) {
  return mix_seed(mix_seed(dataset_seed, 0x5EA1, static_cast<std::uint64_t>(scenario)),
                  static_cast<std::uint64_t>(pdp) + 1,
                  static_cast<std::uint64_t>(r) + 1);
}

void Dataset::generate(const DatasetConfig& cfg, const std::filesystem::path& dir) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);

  nlohmann::ordered_json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["seed"] = cfg.seed;
  manifest["l_pad"] = cfg.l_pad;
  manifest["width"] = cfg.width;
  manifest["pdps_per_scenario"] = cfg.pdps_per_scenario;
  manifest["realizations_per_pdp"] = cfg.realizations_per_pdp;
  manifest["train_pdp_fraction"] = cfg.train_pdp_fraction;
  manifest["record_layout"] =
      "little-endian f64 records: [pdp_id, realization_id, 144 tap reals "
      "(re/im interleaved, l_pad taps)]";
  manifest["scenarios"] = nlohmann::ordered_json::array();

  for (std::size_t si = 0; si < cfg.scenarios.size(); ++si) {
    const auto& spec = cfg.scenarios[si];
    const int s = static_cast<int>(si);
    nlohmann::ordered_json js;
    js["name"] = spec.name;
    js["tap_count_range"] = {spec.tap_count_min, spec.tap_count_max};
    js["delay_spread_range"] = {spec.delay_spread_min, spec.delay_spread_max};
    js["decay_exponent_range"] = {spec.decay_exp_min, spec.decay_exp_max};
    js["tap_jitter"] = spec.tap_jitter;
    js["file"] = scenario_file_name(s, spec.name);
    manifest["scenarios"].push_back(js);

    std::ofstream os(dir / scenario_file_name(s, spec.name), std::ios::binary);
    if (!os) throw std::runtime_error("dataset: cannot open " +
                                      (dir / scenario_file_name(s, spec.name)).string());
    for (int p = 0; p < cfg.pdps_per_scenario; ++p) {
      PowerDelayProfile pdp = sample_pdp(spec, pdp_seed(cfg.seed, s, p));
      pdp.pdp_id = global_pdp_id(s, p);
      for (int r = 0; r < cfg.realizations_per_pdp; ++r) {
        const ChannelRealization h =
            realize_channel(pdp, realization_seed(cfg.seed, s, p, r), cfg.l_pad);
        write_f64_le(os, static_cast<double>(pdp.pdp_id));
        write_f64_le(os, static_cast<double>(r));
        for (const auto& tap : h.taps) {
          write_f64_le(os, tap.real());
          write_f64_le(os, tap.imag());
        }
      }
    }
    if (!os) throw std::runtime_error("dataset: write failure in scenario file " +
                                      scenario_file_name(s, spec.name));
  }

  std::ofstream mf(dir / "manifest.json");
  if (!mf) throw std::runtime_error("dataset: cannot open manifest at " + dir.string());
  mf << manifest.dump(2) << "\n";
}

Dataset Dataset::load(const std::filesystem::path& dir) {
  const auto manifest_path =
      std::filesystem::is_directory(dir) ? dir / "manifest.json" : dir;
  std::ifstream mf(manifest_path);
  if (!mf) throw std::runtime_error("dataset: cannot read manifest " + manifest_path.string());
  nlohmann::json manifest = nlohmann::json::parse(mf);
  if (manifest.at("format_version").get<int>() != kFormatVersion)
    throw std::runtime_error("dataset: unsupported format version");

  Dataset ds;
  ds.cfg_.seed = manifest.at("seed").get<std::uint64_t>();
  ds.cfg_.l_pad = manifest.at("l_pad").get<int>();
  ds.cfg_.width = manifest.at("width").get<int>();
  ds.cfg_.pdps_per_scenario = manifest.at("pdps_per_scenario").get<int>();
  ds.cfg_.realizations_per_pdp = manifest.at("realizations_per_pdp").get<int>();
  ds.cfg_.train_pdp_fraction = manifest.at("train_pdp_fraction").get<double>();

  const auto base = manifest_path.parent_path();
  for (const auto& js : manifest.at("scenarios")) {
    ScenarioSpec spec;
    spec.name = js.at("name").get<std::string>();
    spec.tap_count_min = js.at("tap_count_range")[0].get<int>();
    spec.tap_count_max = js.at("tap_count_range")[1].get<int>();
    spec.delay_spread_min = js.at("delay_spread_range")[0].get<int>();
    spec.delay_spread_max = js.at("delay_spread_range")[1].get<int>();
    spec.decay_exp_min = js.at("decay_exponent_range")[0].get<double>();
    spec.decay_exp_max = js.at("decay_exponent_range")[1].get<double>();
    spec.tap_jitter = js.at("tap_jitter").get<double>();
    ds.cfg_.scenarios.push_back(spec);

    const int s = static_cast<int>(ds.cfg_.scenarios.size()) - 1;
    std::ifstream is(base / js.at("file").get<std::string>(), std::ios::binary);
    if (!is)
      throw std::runtime_error("dataset: cannot read " + js.at("file").get<std::string>());
    for (int p = 0; p < ds.cfg_.pdps_per_scenario; ++p) {
      PowerDelayProfile pdp = sample_pdp(spec, pdp_seed(ds.cfg_.seed, s, p));
      pdp.pdp_id = global_pdp_id(s, p);
      std::vector<ChannelRealization> reals;
      reals.reserve(static_cast<std::size_t>(ds.cfg_.realizations_per_pdp));
      std::vector<double> buf(static_cast<std::size_t>(2 * ds.cfg_.l_pad));
      for (int r = 0; r < ds.cfg_.realizations_per_pdp; ++r) {
        const double id = read_f64_le(is);
        const double rid = read_f64_le(is);
        if (!is || static_cast<int>(id) != pdp.pdp_id || static_cast<int>(rid) != r)
          throw std::runtime_error("dataset: corrupt record in scenario file " + spec.name);
        for (auto& v : buf) v = read_f64_le(is);
        reals.push_back(ChannelRealization::from_flat(buf.data(), ds.cfg_.l_pad, pdp.pdp_id));
      }
      ds.pdps_.push_back(std::move(pdp));
      ds.scenario_idx_.push_back(s);
      ds.realizations_.push_back(std::move(reals));
    }
  }
  return ds;
}

const ChannelRealization& Dataset::realization(int pdp_index, int realization_index) const {
  return realizations_[static_cast<std::size_t>(pdp_index)][static_cast<std::size_t>(realization_index)];
}

std::vector<int> Dataset::train_pdp_indices() const {
  std::vector<int> out;
  const int cut = static_cast<int>(std::lround(cfg_.train_pdp_fraction * cfg_.pdps_per_scenario));
  for (int i = 0; i < pdp_count(); ++i)
    if (i % cfg_.pdps_per_scenario < cut) out.push_back(i);
  return out;
}

std::vector<int> Dataset::heldout_pdp_indices() const {
  std::vector<int> out;
  const int cut = static_cast<int>(std::lround(cfg_.train_pdp_fraction * cfg_.pdps_per_scenario));
  for (int i = 0; i < pdp_count(); ++i)
    if (i % cfg_.pdps_per_scenario >= cut) out.push_back(i);
  return out;
}

std::vector<int> Dataset::heldout_pdp_indices(int scenario) const {
  std::vector<int> out;
  for (int i : heldout_pdp_indices())
    if (scenario_of_pdp(i) == scenario) out.push_back(i);
  return out;
}

int Dataset::index_of_pdp_id(int pdp_id) const {
  for (int i = 0; i < pdp_count(); ++i)
    if (pdps_[static_cast<std::size_t>(i)].pdp_id == pdp_id) return i;
  throw std::invalid_argument("dataset: unknown pdp_id " + std::to_string(pdp_id));
}

Episode Dataset::episode(int pdp_index, int n, double snr_db, std::uint64_t seed) const {
  return mismatch_episode(pdp_index, pdp_index, n, snr_db, seed);
}

Episode Dataset::mismatch_episode(int query_pdp_index, int support_pdp_index, int n,
                                  double snr_db, std::uint64_t seed) const {
  const auto& qpool = realizations_[static_cast<std::size_t>(query_pdp_index)];
  const auto& spool = realizations_[static_cast<std::size_t>(support_pdp_index)];
  if (qpool.empty() || (n > 0 && spool.empty()))
    throw std::invalid_argument("dataset: no stored realizations for episode");
  const int avail = static_cast<int>(spool.size()) - (query_pdp_index == support_pdp_index ? 1 : 0);
  if (n > avail)
    throw std::invalid_argument("dataset: episode needs " + std::to_string(n) +
                                " support realizations, pool has " + std::to_string(avail));

  Rng qrng(mix_seed(seed, kEpisodeQueryIdx));
  const int qi = qrng.uniform_int(0, static_cast<int>(qpool.size()) - 1);

  Rng srng(mix_seed(seed, kEpisodeSupportIdx));
  std::vector<int> chosen;
  chosen.reserve(static_cast<std::size_t>(n));
  const bool same_pool = query_pdp_index == support_pdp_index;
  while (static_cast<int>(chosen.size()) < n) {
    const int c = srng.uniform_int(0, static_cast<int>(spool.size()) - 1);
    bool dup = same_pool && c == qi;
    for (int prev : chosen) dup = dup || prev == c;
    if (!dup) chosen.push_back(c);
  }

  std::vector<const ChannelRealization*> sup;
  sup.reserve(chosen.size());
  for (int c : chosen) sup.push_back(&spool[static_cast<std::size_t>(c)]);
  Episode ep = assemble_episode(qpool[static_cast<std::size_t>(qi)], sup,
                                comb_mask(cfg_.width), snr_db, seed);
  ep.mismatched = !same_pool;
  return ep;
}

}  // namespace fsce
