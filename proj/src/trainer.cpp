#include "fsce/train/trainer.hpp"

#include "fsce/core/parallel.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace fsce {

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (!(learning_rate > 0)) throw std::invalid_argument("train: learning rate must be > 0");
  if (epochs < 1 || episodes_per_epoch < 1)
    throw std::invalid_argument("train: epochs and episodes_per_epoch must be >= 1");
  if (n_support < 0) throw std::invalid_argument("train: n_support must be >= 0");
  if (threads < 1) throw std::invalid_argument("train: threads must be >= 1");
}

void write_curve_csv(const std::filesystem::path& path, const std::vector<CurveRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write curve csv " + path.string());
  os << "epoch,step,loss_total,loss_init,loss_ce,wall_ms\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.10g,%.10g,%.10g,%ld\n", r.epoch, r.step,
                  r.loss_total, r.loss_init, r.loss_ce, r.wall_ms);
    os << buf;
  }
}

std::vector<Episode> sample_batch(const Dataset& ds, const std::vector<int>& pdp_pool,
                                  const TrainConfig& cfg, Rng& rng) {
  if (pdp_pool.empty()) throw std::invalid_argument("sample_batch: empty PDP pool");
  std::vector<Episode> batch;
  batch.reserve(static_cast<std::size_t>(cfg.batch_size));
  for (int i = 0; i < cfg.batch_size; ++i) {
    const int pdp = pdp_pool[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(pdp_pool.size()) - 1))];
    batch.push_back(ds.episode(pdp, cfg.n_support, cfg.train_snr_db, rng.next_u64()));
  }
  return batch;
}

namespace {

Tensor scaled_target(const FSLModel& model, const Eigen::MatrixX2d& truth) {
  Tensor t = Tensor::from_matrix(truth);
  const auto lo = model.bce_lo.flat();
  const auto hi = model.bce_hi.flat();
  auto v = t.flat();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double span = hi[i] - lo[i];
    const double s = span > 0 ? (v[i] - lo[i]) / span : 0.5;
    v[i] = std::min(1.0, std::max(0.0, s));
  }
  return t;
}

struct EpisodeLosses {
  Tensor total, init, ce;
};

EpisodeLosses episode_losses(const FSLModel& bound, const Episode& ep) {
  const FslOutput out = fsl_forward(bound, ep);
  EpisodeLosses l;
  if (bound.loss_kind == LossKind::Mse) {
    Tensor truth = Tensor::from_matrix(ep.true_response);
    l.ce = mse_loss(out.h_est, truth);
    if (out.s_initial.defined()) l.init = mse_loss(out.s_initial, truth);
  } else {
    Tensor t01 = scaled_target(bound, ep.true_response);
    l.ce = bce_loss(sigmoid(out.h_est), t01);
    if (out.s_initial.defined()) l.init = bce_loss(sigmoid(out.s_initial), t01);
  }
  l.total = l.init.defined() ? add(l.init, l.ce) : l.ce;
  return l;
}

struct EpisodeGrad {
  std::vector<Eigen::ArrayXd> g;  // aligned with parameters(); size 0 = untouched
  double total = 0, init = 0, ce = 0;
};

}  // namespace

StepStats train_step(FSLModel& model, const std::vector<Episode>& batch,
                     const TrainConfig& cfg, AdamState& opt) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  auto params = model.parameters();
  const std::size_t np = params.size();
  std::vector<EpisodeGrad> per_ep(batch.size());

  parallel_for(static_cast<int>(batch.size()), cfg.threads, [&](int e) {
    const Episode& ep = batch[static_cast<std::size_t>(e)];
    Tape tape;
    FSLModel bound = model.bind(tape);
    EpisodeLosses losses = episode_losses(bound, ep);
    EpisodeGrad& out = per_ep[static_cast<std::size_t>(e)];
    out.total = losses.total.item();
    out.init = losses.init.defined() ? losses.init.item() : 0.0;
    out.ce = losses.ce.item();
    if (!std::isfinite(out.total)) return;  // reported after the join
    tape.backward(losses.total);
    auto bparams = bound.parameters();
    out.g.resize(np);
    for (std::size_t i = 0; i < np; ++i)
      if (tape.has_grad(*bparams[i].tensor))
        out.g[i] = tape.grad(*bparams[i].tensor);
  });

  StepStats stats;
  std::vector<Eigen::ArrayXd> grads(np);
  std::vector<bool> touched(np, false);
  for (std::size_t i = 0; i < np; ++i) grads[i] = Eigen::ArrayXd::Zero(params[i].tensor->size());
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (std::size_t e = 0; e < per_ep.size(); ++e) {
    const EpisodeGrad& eg = per_ep[e];
    if (!std::isfinite(eg.total))
      throw std::runtime_error("train_step: non-finite loss on episode " + std::to_string(e) +
                               " (pdp_id " + std::to_string(batch[e].pdp_id) + ", loss " +
                               std::to_string(eg.total) + ")");
    stats.loss_total += eg.total * inv_b;
    stats.loss_init += eg.init * inv_b;
    stats.loss_ce += eg.ce * inv_b;
    for (std::size_t i = 0; i < np; ++i) {
      if (eg.g[i].size() == 0) continue;
      grads[i] += eg.g[i];
      touched[i] = true;
    }
  }
  for (std::size_t i = 0; i < np; ++i) {
    if (!touched[i])
      throw std::logic_error("train_step: parameter '" + params[i].name +
                             "' received no gradient");
    grads[i] *= inv_b;
  }

  if (cfg.optimizer == OptimizerKind::Adam)
    adam_step(params, grads, opt, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps);
  else
    sgd_step(params, grads, cfg.learning_rate);
  return stats;
}

void fit_bce_bounds(FSLModel& model, const Dataset& ds, const std::vector<int>& pdp_pool) {
  const int w = ds.config().width;
  Eigen::MatrixX2d lo = Eigen::MatrixX2d::Constant(w, 2, 1e300);
  Eigen::MatrixX2d hi = Eigen::MatrixX2d::Constant(w, 2, -1e300);
  for (int pdp : pdp_pool)
    for (int r = 0; r < ds.realization_count(); ++r) {
      const Eigen::MatrixX2d resp = freq_response(ds.realization(pdp, r), w);
      lo = lo.cwiseMin(resp);
      hi = hi.cwiseMax(resp);
    }
  // headroom for unseen noise and environments
  const Eigen::MatrixX2d span = hi - lo;
  lo -= 0.25 * span;
  hi += 0.25 * span;
  model.bce_lo = Tensor::from_matrix(lo);
  model.bce_hi = Tensor::from_matrix(hi);
}

TrainOutput train(ModelKind kind, const Dataset& ds, const std::vector<int>& pdp_pool,
                  const ModelConfig& mcfg, const TrainConfig& tcfg) {
  tcfg.validate();
  ModelConfig mc = mcfg;
  mc.n_support = tcfg.n_support;
  TrainOutput out{FSLModel::init(kind, mc, tcfg.seed), {}};
  out.model.loss_kind = tcfg.loss;
  if (tcfg.loss == LossKind::BceScaled) fit_bce_bounds(out.model, ds, pdp_pool);

  AdamState opt;
  Rng rng(mix_seed(tcfg.seed, 0xBA7C4));
  const auto t0 = std::chrono::steady_clock::now();
  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    for (int step = 0; step < tcfg.steps_per_epoch(); ++step) {
      auto batch = sample_batch(ds, pdp_pool, tcfg, rng);
      const StepStats s = train_step(out.model, batch, tcfg, opt);
      const auto now = std::chrono::steady_clock::now();
      out.curve.push_back(
          {epoch, step, s.loss_total, s.loss_init, s.loss_ce,
           std::chrono::duration_cast<std::chrono::milliseconds>(now - t0).count()});
    }
  }
  return out;
}

SwitchNetTrainOutput switchnet_offline_train(const Dataset& ds, int m, const TrainConfig& tcfg) {
  tcfg.validate();
  if (m < 0) throw std::invalid_argument("switchnet: M must be >= 0");
  if (m + 1 > ds.scenario_count())
    throw std::invalid_argument("switchnet: M exceeds available training scenarios (need M+1)");

  SwitchNetTrainOutput out{SwitchNetParams::init(ds.config().width, m, tcfg.seed), {}};
  SwitchNetParams& params = out.params;
  const auto train_pool = ds.train_pdp_indices();
  const auto t0 = std::chrono::steady_clock::now();

  for (int subnet = 0; subnet <= m; ++subnet) {
    std::vector<int> pool;
    for (int p : train_pool)
      if (ds.scenario_of_pdp(p) == subnet) pool.push_back(p);
    if (pool.empty())
      throw std::invalid_argument("switchnet: scenario " + std::to_string(subnet) +
                                  " has no training PDPs");

    params.alpha.flat().setZero();
    params.alpha.data()[0] = 1.0;
    if (subnet > 0) params.alpha.data()[subnet] = 1.0;

    AdamState opt;
    Rng rng(mix_seed(tcfg.seed, 0x0FF1CE, static_cast<std::uint64_t>(subnet)));
    const int steps = tcfg.epochs * tcfg.steps_per_epoch();
    for (int step = 0; step < steps; ++step) {
      Tape tape;
      SwitchNetParams bound = params.bind_subnet(tape, subnet);
      Tensor loss;
      for (int i = 0; i < tcfg.batch_size; ++i) {
        const int pdp = pool[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
        const Episode ep = ds.episode(pdp, 0, tcfg.train_snr_db, rng.next_u64());
        Tensor l = mse_loss(switchnet_forward(bound, switchnet_input(ep.query)),
                            flatten_response(ep.true_response));
        loss = i == 0 ? l : add(loss, l);
      }
      loss = scale(loss, 1.0 / tcfg.batch_size);
      const double lv = loss.item();
      if (!std::isfinite(lv))
        throw std::runtime_error("switchnet: non-finite loss at subnet " +
                                 std::to_string(subnet) + " step " + std::to_string(step));
      tape.backward(loss);
      auto bp = bound.subnet_params(subnet);
      auto pp = params.subnet_params(subnet);
      std::vector<Eigen::ArrayXd> grads;
      grads.reserve(bp.size());
      for (auto& p : bp) grads.push_back(tape.grad(*p.tensor));
      adam_step(pp, grads, opt, tcfg.learning_rate, tcfg.beta1, tcfg.beta2, tcfg.adam_eps);
      const auto now = std::chrono::steady_clock::now();
      out.curve.push_back(
          {subnet, step, lv, 0.0, lv,
           std::chrono::duration_cast<std::chrono::milliseconds>(now - t0).count()});
    }
  }

  params.alpha.flat().setZero();
  params.alpha.data()[0] = 1.0;
  return out;
}

}  // namespace fsce
