#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fsce/eval/baseline.hpp"
#include "fsce/models/checkpoint.hpp"
#include "fsce/train/trainer.hpp"

#include "test_util.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>

using namespace fsce;
using fsce::test::random_tensor;

namespace {

ScenarioSpec spec_with(const std::string& name, int dmin, int dmax, double gmin, double gmax) {
  ScenarioSpec s;
  s.name = name;
  s.tap_count_min = 3;
  s.tap_count_max = 5;
  s.delay_spread_min = dmin;
  s.delay_spread_max = dmax;
  s.decay_exp_min = gmin;
  s.decay_exp_max = gmax;
  s.tap_jitter = 0.2;
  return s;
}

// generated once per process, reused by several cases
const Dataset& tiny_dataset() {
  static const Dataset ds = [] {
    DatasetConfig cfg;
    cfg.scenarios = {spec_with("s0", 6, 10, 0.25, 0.4), spec_with("s1", 16, 22, 0.12, 0.18),
                     spec_with("s2", 30, 44, 0.05, 0.08)};
    cfg.pdps_per_scenario = 4;
    cfg.realizations_per_pdp = 24;
    cfg.seed = 17;
    cfg.train_pdp_fraction = 0.75;
    const auto dir = std::filesystem::path("build_test_train_ds");
    std::filesystem::remove_all(dir);
    Dataset::generate(cfg, dir);
    Dataset loaded = Dataset::load(dir);
    std::filesystem::remove_all(dir);
    return loaded;
  }();
  return ds;
}

ModelConfig small_model() {
  ModelConfig m;
  m.n_support = 2;
  m.feature_channels = 6;
  m.extractor_hidden = 6;
  m.reduction = 4;
  m.backbone_hidden = 8;
  m.cin_hidden = 3;
  m.tam_channels = 3;
  return m;
}

TrainConfig small_train(std::uint64_t seed, int steps = 4, int batch = 8) {
  TrainConfig t;
  t.batch_size = batch;
  t.episodes_per_epoch = steps * batch;
  t.epochs = 1;
  t.n_support = 2;
  t.seed = seed;
  t.threads = 2;
  return t;
}

struct EpisodeLossProbe {
  double total, init, ce;
};

EpisodeLossProbe probe_losses(const FSLModel& model, const std::vector<Episode>& batch) {
  EpisodeLossProbe p{0, 0, 0};
  for (const auto& ep : batch) {
    const FslOutput out = fsl_forward(model, ep);
    const Tensor truth = Tensor::from_matrix(ep.true_response);
    const double ce = mse_loss(out.h_est, truth).item();
    const double init = out.s_initial.defined() ? mse_loss(out.s_initial, truth).item() : 0.0;
    p.ce += ce / batch.size();
    p.init += init / batch.size();
    p.total += (ce + init) / batch.size();
  }
  return p;
}

}  // namespace

TEST_CASE("sample_batch: counts, single-PDP batches, scenario mixing") {
  const Dataset& ds = tiny_dataset();
  TrainConfig cfg = small_train(1);
  cfg.batch_size = 128;
  Rng rng(5);
  const auto batch = sample_batch(ds, ds.train_pdp_indices(), cfg, rng);
  CHECK(batch.size() == 128);
  for (const auto& ep : batch) CHECK(ep.n_support() == 2);

  // all episodes share the PDP when the pool is a singleton
  Rng rng2(6);
  const auto single = sample_batch(ds, {5}, cfg, rng2);
  for (const auto& ep : single) CHECK(ep.pdp_id == ds.pdp(5).pdp_id);

  CHECK_THROWS_AS(sample_batch(ds, {}, cfg, rng), std::invalid_argument);

  // scenario histogram uniform within 5% over 1e4 draws
  Rng rng3(7);
  cfg.batch_size = 10000;
  cfg.n_support = 0;
  const auto big = sample_batch(ds, ds.train_pdp_indices(), cfg, rng3);
  std::vector<int> counts(3, 0);
  for (const auto& ep : big) counts[static_cast<std::size_t>(ep.pdp_id / 10000)] += 1;
  for (int c : counts)
    CHECK(std::abs(c / 10000.0 - 1.0 / 3.0) < 0.05 / 3.0 + 0.01);
}

TEST_CASE("adam_step: zero gradient leaves parameters untouched; first step is -lr sign(g)") {
  Rng rng(11);
  Tensor p = random_tensor({5}, rng);
  const std::vector<double> before(p.data(), p.data() + p.size());
  std::vector<ParamRef> params = {{"p", &p, 0}};
  AdamState st;
  adam_step(params, {Eigen::ArrayXd::Zero(5)}, st, 1e-3);
  CHECK(std::memcmp(before.data(), p.data(), 5 * 8) == 0);

  Tensor q = random_tensor({4}, rng);
  const std::vector<double> q0(q.data(), q.data() + q.size());
  std::vector<ParamRef> qp = {{"q", &q, 0}};
  AdamState st2;
  Eigen::ArrayXd g(4);
  g << 3.0, -0.5, 10.0, -7.0;
  adam_step(qp, {g}, st2, 0.01);
  for (int i = 0; i < 4; ++i) {
    const double step = q.data()[i] - q0[static_cast<std::size_t>(i)];
    CHECK(std::abs(step + 0.01 * (g[i] > 0 ? 1.0 : -1.0)) < 1e-6);
  }
}

TEST_CASE("adam_step matches a scalar reference over 100 steps to 1e-12") {
  Rng rng(13);
  const int d = 6;
  Tensor p = random_tensor({d}, rng);
  std::vector<double> ref(p.data(), p.data() + d);
  std::vector<double> m(d, 0.0), v(d, 0.0);
  std::vector<ParamRef> params = {{"p", &p, 0}};
  AdamState st;
  const double lr = 3e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (int t = 1; t <= 100; ++t) {
    Eigen::ArrayXd g(d);
    for (int i = 0; i < d; ++i) g[i] = rng.uniform(-2, 2);
    adam_step(params, {g}, st, lr, b1, b2, eps);
    for (int i = 0; i < d; ++i) {
      // scalar-loop reference of the bias-corrected update
      m[static_cast<std::size_t>(i)] = b1 * m[static_cast<std::size_t>(i)] + (1 - b1) * g[i];
      v[static_cast<std::size_t>(i)] =
          b2 * v[static_cast<std::size_t>(i)] + (1 - b2) * g[i] * g[i];
      const double mh = m[static_cast<std::size_t>(i)] / (1 - std::pow(b1, t));
      const double vh = v[static_cast<std::size_t>(i)] / (1 - std::pow(b2, t));
      ref[static_cast<std::size_t>(i)] -= lr * mh / (std::sqrt(vh) + eps);
    }
  }
  for (int i = 0; i < d; ++i) CHECK(std::abs(p.data()[i] - ref[static_cast<std::size_t>(i)]) < 1e-12);
}

TEST_CASE("train_step: zero learning rate leaves every parameter bit-identical") {
  const Dataset& ds = tiny_dataset();
  FSLModel model = FSLModel::init(ModelKind::FslFull, small_model(), 3);
  TrainConfig cfg = small_train(3);
  cfg.learning_rate = 0.0;
  Rng rng(8);
  const auto batch = sample_batch(ds, ds.train_pdp_indices(), cfg, rng);
  std::vector<std::vector<double>> before;
  for (auto& p : model.parameters())
    before.emplace_back(p.tensor->data(), p.tensor->data() + p.tensor->size());
  AdamState st;
  train_step(model, batch, cfg, st);
  auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i)
    CHECK(std::memcmp(before[i].data(), params[i].tensor->data(), before[i].size() * 8) == 0);
}

TEST_CASE("train_step: descent on a singleton batch; both loss terms reported") {
  const Dataset& ds = tiny_dataset();
  FSLModel model = FSLModel::init(ModelKind::FslFull, small_model(), 5);
  TrainConfig cfg = small_train(5);
  cfg.batch_size = 1;
  cfg.learning_rate = 1e-3;
  Rng rng(9);
  const auto batch = sample_batch(ds, ds.train_pdp_indices(), cfg, rng);

  const EpisodeLossProbe before = probe_losses(model, batch);
  AdamState st;
  const StepStats stats = train_step(model, batch, cfg, st);
  CHECK(stats.loss_total == doctest::Approx(before.total).epsilon(1e-12));
  CHECK(stats.loss_init == doctest::Approx(before.init).epsilon(1e-12));
  CHECK(stats.loss_ce == doctest::Approx(before.ce).epsilon(1e-12));
  CHECK(stats.loss_init > 0);
  CHECK(stats.loss_ce > 0);
  CHECK(stats.loss_total == doctest::Approx(stats.loss_init + stats.loss_ce));

  const EpisodeLossProbe after = probe_losses(model, batch);
  CHECK(after.total < before.total);
}

TEST_CASE("gradient additivity: joint backward equals the sum of per-loss backwards") {
  const Dataset& ds = tiny_dataset();
  FSLModel model = FSLModel::init(ModelKind::FslFull, small_model(), 7);
  const Episode ep = ds.episode(0, 2, 20.0, 99);
  const Tensor truth = Tensor::from_matrix(ep.true_response);

  // route A: one backward over the summed loss
  Tape t_joint;
  FSLModel b_joint = model.bind(t_joint);
  {
    const FslOutput out = fsl_forward(b_joint, ep);
    t_joint.backward(add(mse_loss(out.s_initial, truth), mse_loss(out.h_est, truth)));
  }

  // route B: two backwards accumulated on one tape
  Tape t_two;
  FSLModel b_two = model.bind(t_two);
  {
    const FslOutput out = fsl_forward(b_two, ep);
    t_two.backward(mse_loss(out.s_initial, truth));
    t_two.backward(mse_loss(out.h_est, truth));
  }

  auto pj = b_joint.parameters();
  auto pt = b_two.parameters();
  for (std::size_t i = 0; i < pj.size(); ++i) {
    const Eigen::ArrayXd gj = t_joint.grad(*pj[i].tensor);
    const Eigen::ArrayXd gt = t_two.grad(*pt[i].tensor);
    for (Eigen::Index k = 0; k < gj.size(); ++k) CHECK(std::abs(gj[k] - gt[k]) < 1e-12);
  }
}

TEST_CASE("loss routing: the initialization loss drives theta_1 only") {
  const Dataset& ds = tiny_dataset();
  FSLModel model = FSLModel::init(ModelKind::FslFull, small_model(), 11);
  const Episode ep = ds.episode(1, 2, 20.0, 100);
  const Tensor truth = Tensor::from_matrix(ep.true_response);

  Tape tape;
  FSLModel bound = model.bind(tape);
  const FslOutput out = fsl_forward(bound, ep);
  tape.backward(mse_loss(out.s_initial, truth));
  for (auto& p : bound.theta1()) CHECK(tape.has_grad(*p.tensor));
  for (auto& p : bound.theta2()) CHECK_FALSE(tape.has_grad(*p.tensor));

  // the estimation loss reaches everything (shared upstream paths included)
  tape.backward(mse_loss(out.h_est, truth));
  for (auto& p : bound.parameters()) CHECK(tape.has_grad(*p.tensor));
}

TEST_CASE("train: deterministic checkpoints and curves, independent of thread count") {
  const Dataset& ds = tiny_dataset();
  const auto run = [&](int threads) {
    TrainConfig cfg = small_train(21, 3, 6);
    cfg.threads = threads;
    return train(ModelKind::FslFull, ds, ds.train_pdp_indices(), small_model(), cfg);
  };
  const TrainOutput a = run(1);
  const TrainOutput b = run(2);
  REQUIRE(a.curve.size() == b.curve.size());
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    CHECK(a.curve[i].loss_total == b.curve[i].loss_total);
    CHECK(a.curve[i].loss_init == b.curve[i].loss_init);
    CHECK(a.curve[i].loss_ce == b.curve[i].loss_ce);
  }
  auto pa = const_cast<TrainOutput&>(a).model.parameters();
  auto pb = const_cast<TrainOutput&>(b).model.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i)
    CHECK(std::memcmp(pa[i].tensor->data(), pb[i].tensor->data(),
                      static_cast<std::size_t>(pa[i].tensor->size()) * 8) == 0);

  // checkpoint bytes are identical as well
  const auto dir = std::filesystem::path("build_test_train_ckpt");
  std::filesystem::create_directories(dir);
  save_checkpoint(dir / "a.ckpt", a.model);
  save_checkpoint(dir / "b.ckpt", b.model);
  std::ifstream fa(dir / "a.ckpt", std::ios::binary), fb(dir / "b.ckpt", std::ios::binary);
  const std::string ba((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  const std::string bb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  CHECK(ba == bb);
  std::filesystem::remove_all(dir);
}

TEST_CASE("train: non-finite loss aborts with diagnostics") {
  const Dataset& ds = tiny_dataset();
  FSLModel model = FSLModel::init(ModelKind::BackboneOnly, small_model(), 31);
  model.ce.layers[0].kernel.data()[0] = std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg = small_train(31);
  Rng rng(32);
  const auto batch = sample_batch(ds, ds.train_pdp_indices(), cfg, rng);
  AdamState st;
  CHECK_THROWS_AS(train_step(model, batch, cfg, st), std::runtime_error);
}

TEST_CASE("train: a brief run beats the untrained initialization on held-out episodes") {
  const Dataset& ds = tiny_dataset();
  TrainConfig cfg = small_train(41, 30, 12);
  cfg.n_support = 0;
  const FSLModel untrained = FSLModel::init(ModelKind::BackboneOnly, small_model(), cfg.seed);
  const TrainOutput trained =
      train(ModelKind::BackboneOnly, ds, ds.train_pdp_indices(), small_model(), cfg);

  double mse_untrained = 0, mse_trained = 0;
  const auto held = ds.heldout_pdp_indices();
  int count = 0;
  for (int p : held)
    for (int e = 0; e < 20; ++e) {
      const Episode ep = ds.episode(p, 0, 20.0, mix_seed(1000, count));
      mse_untrained += response_mse(estimate_response(untrained, fsl_forward(untrained, ep).h_est),
                                    ep.true_response);
      mse_trained += response_mse(estimate_response(trained.model, fsl_forward(trained.model, ep).h_est),
                                  ep.true_response);
      ++count;
    }
  CHECK(mse_trained < mse_untrained);
}

TEST_CASE("train: scaled-BCE loss option trains and unscales") {
  const Dataset& ds = tiny_dataset();
  TrainConfig cfg = small_train(51, 3, 4);
  cfg.loss = LossKind::BceScaled;
  cfg.n_support = 0;
  const TrainOutput out =
      train(ModelKind::BackboneOnly, ds, ds.train_pdp_indices(), small_model(), cfg);
  CHECK(out.model.loss_kind == LossKind::BceScaled);
  REQUIRE(out.model.bce_lo.defined());
  REQUIRE(out.model.bce_hi.defined());
  for (const auto& row : out.curve) CHECK(std::isfinite(row.loss_total));

  const Episode ep = ds.episode(0, 0, 20.0, 7);
  const Eigen::MatrixX2d est = estimate_response(out.model, fsl_forward(out.model, ep).h_est);
  CHECK(est.allFinite());
  // estimates live inside the learned bounds
  for (int k = 0; k < est.rows(); ++k)
    for (int c = 0; c < 2; ++c) {
      CHECK(est(k, c) >= out.model.bce_lo.at({static_cast<int>(k), c}));
      CHECK(est(k, c) <= out.model.bce_hi.at({static_cast<int>(k), c}));
    }
}

TEST_CASE("switchnet_offline_train: degenerate M, scenario budget errors, compensator value") {
  const Dataset& ds = tiny_dataset();
  TrainConfig cfg = small_train(61, 150, 16);
  cfg.learning_rate = 2e-3;

  CHECK_THROWS_AS(switchnet_offline_train(ds, 3, cfg), std::invalid_argument);  // needs M+1 scenarios

  const SwitchNetTrainOutput out = switchnet_offline_train(ds, 2, cfg);
  CHECK(out.params.m() == 2);

  // per-scenario MSE with that scenario's indicator beats subnet-0 alone there
  for (int scen = 1; scen <= 2; ++scen) {
    SwitchNetParams with_comp = out.params;
    with_comp.alpha = Tensor::zeros({3});  // fresh storage: copies are shallow
    with_comp.alpha.data()[0] = 1.0;
    with_comp.alpha.data()[scen] = 1.0;
    SwitchNetParams base = out.params;
    base.alpha = Tensor::zeros({3});
    base.alpha.data()[0] = 1.0;

    double mse_comp = 0, mse_base = 0;
    const auto held = ds.heldout_pdp_indices(scen);
    int count = 0;
    for (int p : held)
      for (int e = 0; e < 30; ++e) {
        const Episode ep = ds.episode(p, 0, 20.0, mix_seed(62, count++));
        const Tensor x = switchnet_input(ep.query);
        const Tensor truth = flatten_response(ep.true_response);
        mse_comp += (switchnet_forward(with_comp, x).flat() - truth.flat()).square().mean();
        mse_base += (switchnet_forward(base, x).flat() - truth.flat()).square().mean();
      }
    CHECK(mse_comp < mse_base);
  }

  // M = 1 degenerate recipe trains a single compensator
  const SwitchNetTrainOutput m1 = switchnet_offline_train(ds, 1, small_train(63, 2, 4));
  CHECK(m1.params.m() == 1);
}

TEST_CASE("write_curve_csv emits the documented schema") {
  const auto path = std::filesystem::path("build_test_curve.csv");
  write_curve_csv(path, {{0, 0, 1.5, 0.5, 1.0, 12}, {0, 1, 1.2, 0.4, 0.8, 25}});
  std::ifstream is(path);
  std::string header;
  std::getline(is, header);
  CHECK(header == "epoch,step,loss_total,loss_init,loss_ce,wall_ms");
  std::string row;
  std::getline(is, row);
  CHECK(row.rfind("0,0,1.5,0.5,1,", 0) == 0);
  std::filesystem::remove(path);
}
