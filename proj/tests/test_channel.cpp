#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fsce/channel/dataset.hpp"
#include "fsce/core/rng.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace fsce;

namespace {

ScenarioSpec tiny_spec(const std::string& name = "tiny") {
  ScenarioSpec s;
  s.name = name;
  s.tap_count_min = 3;
  s.tap_count_max = 5;
  s.delay_spread_min = 6;
  s.delay_spread_max = 10;
  s.decay_exp_min = 0.2;
  s.decay_exp_max = 0.4;
  s.tap_jitter = 0.2;
  return s;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("sample_pdp: single tap collapses to delay 0 with power 1") {
  ScenarioSpec s = tiny_spec();
  s.tap_count_min = s.tap_count_max = 1;
  const PowerDelayProfile pdp = sample_pdp(s, 42);
  REQUIRE(pdp.tap_count() == 1);
  CHECK(pdp.delays[0] == 0);
  CHECK(pdp.powers[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("sample_pdp: powers follow the exponential decay law (oracle) and normalize") {
  ScenarioSpec s = tiny_spec();
  s.decay_exp_min = s.decay_exp_max = 10.0;  // steep decay
  s.tap_jitter = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const PowerDelayProfile pdp = sample_pdp(s, seed);
    // independent oracle: evaluate the decay expression directly
    double total = 0;
    for (int d : pdp.delays) total += std::exp(-10.0 * d);
    for (int l = 0; l < pdp.tap_count(); ++l)
      CHECK(pdp.powers[static_cast<std::size_t>(l)] ==
            doctest::Approx(std::exp(-10.0 * pdp.delays[static_cast<std::size_t>(l)]) / total)
                .epsilon(1e-12));
    CHECK(pdp.powers[0] > 0.99);  // first tap dominates at gamma = 10

    double sum = 0;
    for (double p : pdp.powers) sum += p;
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("sample_pdp: power normalization holds with jitter, always") {
  ScenarioSpec s = tiny_spec();
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const PowerDelayProfile pdp = sample_pdp(s, seed);
    double sum = 0;
    for (double p : pdp.powers) {
      CHECK(p > 0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
    for (std::size_t i = 1; i < pdp.delays.size(); ++i)
      CHECK(pdp.delays[i] > pdp.delays[i - 1]);
    CHECK(pdp.delays[0] == 0);
  }
}

TEST_CASE("sample_pdp: deterministic in the seed; infeasible specs rejected") {
  ScenarioSpec s = tiny_spec();
  const PowerDelayProfile a = sample_pdp(s, 1234);
  const PowerDelayProfile b = sample_pdp(s, 1234);
  CHECK(a.delays == b.delays);
  CHECK(a.powers == b.powers);

  ScenarioSpec bad = tiny_spec();
  bad.tap_count_min = bad.tap_count_max = 9;
  bad.delay_spread_min = 4;  // 9 taps cannot fit into delays 0..4
  CHECK_THROWS_AS(sample_pdp(bad, 1), std::invalid_argument);
}

TEST_CASE("realize_channel: off-profile taps are exactly zero, shared support across seeds") {
  const PowerDelayProfile pdp = sample_pdp(tiny_spec(), 7);
  const ChannelRealization h1 = realize_channel(pdp, 100);
  const ChannelRealization h2 = realize_channel(pdp, 101);
  REQUIRE(h1.l_pad() == kLPad);
  std::vector<bool> active(kLPad, false);
  for (int d : pdp.delays) active[static_cast<std::size_t>(d)] = true;
  bool any_diff = false;
  for (int i = 0; i < kLPad; ++i) {
    if (!active[static_cast<std::size_t>(i)]) {
      CHECK(h1.taps[static_cast<std::size_t>(i)] == std::complex<double>(0, 0));
      CHECK(h2.taps[static_cast<std::size_t>(i)] == std::complex<double>(0, 0));
    } else {
      CHECK(h1.taps[static_cast<std::size_t>(i)] != std::complex<double>(0, 0));
      any_diff =
          any_diff || h1.taps[static_cast<std::size_t>(i)] != h2.taps[static_cast<std::size_t>(i)];
    }
  }
  CHECK(any_diff);
}

TEST_CASE("realize_channel: Monte-Carlo per-tap power matches the PDP within 3% at 1e5 draws") {
  const PowerDelayProfile pdp = sample_pdp(tiny_spec(), 11);
  const int draws = 100000;
  std::vector<double> acc(pdp.delays.size(), 0.0);
  for (int d = 0; d < draws; ++d) {
    const ChannelRealization h = realize_channel(pdp, mix_seed(555, d));
    for (std::size_t l = 0; l < pdp.delays.size(); ++l)
      acc[l] += std::norm(h.taps[static_cast<std::size_t>(pdp.delays[l])]);
  }
  for (std::size_t l = 0; l < pdp.delays.size(); ++l) {
    const double mean = acc[l] / draws;
    CHECK(std::abs(mean - pdp.powers[l]) / pdp.powers[l] < 0.03);
  }
}

TEST_CASE("freq_response: delta channels") {
  ChannelRealization h;
  h.taps.assign(kLPad, {0, 0});
  h.taps[0] = {1, 0};
  const Eigen::MatrixX2d flat = freq_response(h, kWidth);
  for (int k = 0; k < kWidth; ++k) {
    CHECK(flat(k, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(flat(k, 1)) < 1e-12);
  }

  const int d = 5;
  ChannelRealization hd;
  hd.taps.assign(kLPad, {0, 0});
  hd.taps[d] = {1, 0};
  const Eigen::MatrixX2d resp = freq_response(hd, kWidth);
  for (int k = 0; k < kWidth; ++k) {
    const std::complex<double> v(resp(k, 0), resp(k, 1));
    CHECK(std::abs(std::abs(v) - 1.0) < 1e-12);
    const double expected_phase = -2.0 * std::numbers::pi * k * d / kWidth;
    const double diff = std::arg(v * std::polar(1.0, -expected_phase));
    CHECK(std::abs(diff) < 1e-12);
  }

  CHECK_THROWS_AS(freq_response(h, kLPad - 1), std::invalid_argument);
}

TEST_CASE("freq_response matches a brute-force DFT oracle on 100 random channels") {
  Rng seeds(909);
  for (int trial = 0; trial < 100; ++trial) {
    const PowerDelayProfile pdp = sample_pdp(tiny_spec(), seeds.next_u64());
    const ChannelRealization h = realize_channel(pdp, seeds.next_u64());
    const Eigen::MatrixX2d resp = freq_response(h, kWidth);

    double parseval_freq = 0, parseval_time = 0;
    for (int k = 0; k < kWidth; ++k) {
      // oracle: naive O(w*L) double loop
      std::complex<double> acc(0, 0);
      for (int d = 0; d < kLPad; ++d)
        acc += h.taps[static_cast<std::size_t>(d)] *
               std::polar(1.0, -2.0 * std::numbers::pi * k * d / kWidth);
      CHECK(std::abs(acc.real() - resp(k, 0)) < 1e-10);
      CHECK(std::abs(acc.imag() - resp(k, 1)) < 1e-10);
      parseval_freq += std::norm(acc);
    }
    for (const auto& t : h.taps) parseval_time += std::norm(t);
    CHECK(std::abs(parseval_freq / kWidth - parseval_time) < 1e-9);

    // inverse transform recovers the taps
    const auto taps = time_taps_from_response(resp);
    for (int d = 0; d < kLPad; ++d)
      CHECK(std::abs(taps[static_cast<std::size_t>(d)] - h.taps[static_cast<std::size_t>(d)]) <
            1e-10);
  }
}

TEST_CASE("transmit_and_ls: noiseless LS equals the true response at pilots, zero elsewhere") {
  const PowerDelayProfile pdp = sample_pdp(tiny_spec(), 3);
  const ChannelRealization h = realize_channel(pdp, 4);
  const Eigen::MatrixX2d truth = freq_response(h, kWidth);
  const auto mask = comb_mask(kWidth);
  const PilotBlock block = transmit_and_ls(h, mask, std::numeric_limits<double>::infinity(), 99);
  REQUIRE(block.width == kWidth);
  for (int k = 0; k < kWidth; ++k) {
    if (mask[static_cast<std::size_t>(k)]) {
      CHECK(std::abs(block.ls(k, 0) - truth(k, 0)) < 1e-10);
      CHECK(std::abs(block.ls(k, 1) - truth(k, 1)) < 1e-10);
    } else {
      CHECK(block.ls(k, 0) == 0.0);
      CHECK(block.ls(k, 1) == 0.0);
    }
  }
}

TEST_CASE("transmit_and_ls: LS error variance at 20 dB matches the noise power (Monte-Carlo)") {
  const PowerDelayProfile pdp = sample_pdp(tiny_spec(), 5);
  const ChannelRealization h = realize_channel(pdp, 6);
  const Eigen::MatrixX2d truth = freq_response(h, kWidth);
  const auto mask = full_mask(kWidth);
  const int trials = 10000;
  double acc = 0;
  long count = 0;
  for (int t = 0; t < trials; ++t) {
    const PilotBlock block = transmit_and_ls(h, mask, 20.0, mix_seed(777, t));
    for (int k = 0; k < kWidth; k += 8) {  // subsample subcarriers for speed
      const double er = block.ls(k, 0) - truth(k, 0);
      const double ei = block.ls(k, 1) - truth(k, 1);
      acc += er * er + ei * ei;
      count += 1;
    }
  }
  const double mean_sq = acc / static_cast<double>(count);
  CHECK(mean_sq == doctest::Approx(0.01).epsilon(0.10));
}

TEST_CASE("make_episode: shapes, masks and counts") {
  const PowerDelayProfile pdp = sample_pdp(tiny_spec(), 21);
  const Episode e0 = make_episode(pdp, 0, comb_mask(kWidth), 20.0, 1);
  CHECK(e0.support.empty());
  CHECK(e0.n_support() == 0);

  const Episode e16 = make_episode(pdp, 16, comb_mask(kWidth), 20.0, 1);
  REQUIRE(e16.n_support() == 16);
  for (const auto& b : e16.support) {
    CHECK(b.kind == BlockKind::Support);
    CHECK(b.pilot_count() == kWidth);  // whole-w pilots
    CHECK(b.ls.rows() == kWidth);
    CHECK(b.ls.cols() == 2);
  }
  CHECK(e16.query.pilot_count() == 18);  // w/4 pilots at stride 4
  CHECK(e16.true_response.rows() == kWidth);
  CHECK(e16.query.kind == BlockKind::Query);
  CHECK_FALSE(e16.mismatched);
  CHECK(e16.pdp_id == e16.support_pdp_id);
}

TEST_CASE("make_mismatch_episode: query side identical to the matched episode, support differs") {
  ScenarioSpec sa = tiny_spec("a");
  ScenarioSpec sb = tiny_spec("b");
  PowerDelayProfile qp = sample_pdp(sa, 31);
  qp.pdp_id = 1;
  PowerDelayProfile sp_same = sample_pdp(sa, 32);
  sp_same.pdp_id = 2;
  PowerDelayProfile sp_cross = sample_pdp(sb, 33);
  sp_cross.pdp_id = 3;

  const std::uint64_t seed = 777;
  const Episode matched = make_episode(qp, 4, comb_mask(kWidth), 20.0, seed);
  const Episode mm_same = make_mismatch_episode(qp, sp_same, 4, 20.0, seed);
  const Episode mm_cross = make_mismatch_episode(qp, sp_cross, 4, 20.0, seed);

  for (const Episode* mm : {&mm_same, &mm_cross}) {
    CHECK(mm->mismatched);
    CHECK(mm->pdp_id == 1);
    CHECK((mm->query.ls - matched.query.ls).cwiseAbs().maxCoeff() == 0.0);
    CHECK((mm->true_response - matched.true_response).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(mm_same.support_pdp_id == 2);
  CHECK(mm_cross.support_pdp_id == 3);
  CHECK((mm_same.support[0].ls - matched.support[0].ls).cwiseAbs().maxCoeff() > 0.0);

  CHECK_THROWS_AS(make_mismatch_episode(qp, qp, 4, 20.0, seed), std::invalid_argument);
}

TEST_CASE("dataset: regeneration is byte-identical; loading round-trips") {
  DatasetConfig cfg;
  cfg.scenarios = {tiny_spec("s0"), tiny_spec("s1")};
  cfg.scenarios[1].delay_spread_min = 12;
  cfg.scenarios[1].delay_spread_max = 20;
  cfg.scenarios[1].tap_count_min = 6;
  cfg.scenarios[1].tap_count_max = 8;
  cfg.pdps_per_scenario = 3;
  cfg.realizations_per_pdp = 5;
  cfg.seed = 99;
  cfg.train_pdp_fraction = 0.67;

  const auto dir1 = std::filesystem::path("build_test_ds1");
  const auto dir2 = std::filesystem::path("build_test_ds2");
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
  Dataset::generate(cfg, dir1);
  Dataset::generate(cfg, dir2);

  for (const char* f : {"manifest.json", "scenario_0_s0.f64", "scenario_1_s1.f64"})
    CHECK(slurp(dir1 / f) == slurp(dir2 / f));

  const Dataset ds = Dataset::load(dir1);
  CHECK(ds.scenario_count() == 2);
  CHECK(ds.pdp_count() == 6);
  CHECK(ds.realization_count() == 5);
  CHECK(ds.pdp(0).pdp_id == 0);
  CHECK(ds.pdp(3).pdp_id == 10000);
  CHECK(ds.scenario_of_pdp(4) == 1);

  // stored realizations equal direct regeneration from the same seeds
  const ChannelRealization direct =
      realize_channel(ds.pdp(1), Dataset::realization_seed(cfg.seed, 0, 1, 2), cfg.l_pad);
  const ChannelRealization& stored = ds.realization(1, 2);
  for (int i = 0; i < cfg.l_pad; ++i)
    CHECK(stored.taps[static_cast<std::size_t>(i)] == direct.taps[static_cast<std::size_t>(i)]);

  // train/held-out split: 2 train + 1 held-out per scenario
  CHECK(ds.train_pdp_indices() == std::vector<int>{0, 1, 3, 4});
  CHECK(ds.heldout_pdp_indices() == std::vector<int>{2, 5});
  CHECK(ds.heldout_pdp_indices(1) == std::vector<int>{5});

  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("dataset: episodes draw distinct stored realizations; query independent of support") {
  DatasetConfig cfg;
  cfg.scenarios = {tiny_spec("s0"), tiny_spec("s1")};
  cfg.pdps_per_scenario = 2;
  cfg.realizations_per_pdp = 9;
  cfg.seed = 5;
  const auto dir = std::filesystem::path("build_test_ds3");
  std::filesystem::remove_all(dir);
  Dataset::generate(cfg, dir);
  const Dataset ds = Dataset::load(dir);

  const Episode a = ds.episode(0, 8, 20.0, 123);
  CHECK(a.n_support() == 8);
  const Episode b = ds.episode(0, 8, 20.0, 123);
  CHECK((a.query.ls - b.query.ls).cwiseAbs().maxCoeff() == 0.0);  // deterministic

  const Episode mm = ds.mismatch_episode(0, 2, 8, 20.0, 123);
  CHECK(mm.mismatched);
  CHECK((mm.query.ls - a.query.ls).cwiseAbs().maxCoeff() == 0.0);
  CHECK((mm.true_response - a.true_response).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(ds.episode(0, 9, 20.0, 1), std::invalid_argument);  // pool exhausted
  std::filesystem::remove_all(dir);
}

TEST_CASE("dataset: empty scenario list produces an empty manifest") {
  DatasetConfig cfg;
  cfg.pdps_per_scenario = 0;
  cfg.realizations_per_pdp = 0;
  const auto dir = std::filesystem::path("build_test_ds_empty");
  std::filesystem::remove_all(dir);
  Dataset::generate(cfg, dir);
  const Dataset ds = Dataset::load(dir);
  CHECK(ds.scenario_count() == 0);
  CHECK(ds.pdp_count() == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("dataset config: paper-scale sizes validate") {
  DatasetConfig cfg;
  for (int i = 0; i < 5; ++i) cfg.scenarios.push_back(tiny_spec("scenario_" + std::to_string(i)));
  cfg.pdps_per_scenario = 500;
  cfg.realizations_per_pdp = 500;
  CHECK_NOTHROW(cfg.validate());
}
