#include "ccmqd/training.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

namespace ccmqd {

std::string to_string(Strategy s) { return s == Strategy::sqco ? "sqco" : "hqto"; }
std::string to_string(InitKind k) { return k == InitKind::haar ? "haar" : "identity"; }

Strategy strategy_from_string(const std::string& name) {
  if (name == "sqco") return Strategy::sqco;
  if (name == "hqto") return Strategy::hqto;
  throw ConfigError("unknown strategy '" + name + "'");
}

InitKind init_kind_from_string(const std::string& name) {
  if (name == "haar") return InitKind::haar;
  if (name == "identity") return InitKind::identity;
  throw ConfigError("unknown init '" + name + "'");
}

void TrainConfig::validate() const {
  if (n_qubits < 1 || n_qubits > 7) throw ConfigError("n_qubits must be in 1..7");
  schedule.validate();
  if (backward_depth < 1 || backward_kraus < 1) throw ConfigError("L_b and K_b must be >= 1");
  if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (!(convergence_eps > 0.0)) throw ConfigError("convergence_eps must be > 0");
  if (!(tau0 > 0.0) || !std::isfinite(tau0)) throw ConfigError("tau0 must be finite and > 0");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  loss.validate(backward_depth);
  if (strategy == Strategy::sqco && backward_depth != schedule.depth)
    throw ConfigError("sqco requires L_b == L_f");
  if (strategy == Strategy::hqto && loss.kind == LossKind::sqco_step)
    throw ConfigError("hqto trains on loss kind hqto or pc");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

BackwardModel initial_model(const TrainConfig& cfg, Index dim, Rng& rng) {
  return cfg.init == InitKind::haar ? init_backward(cfg.backward_depth, cfg.backward_kraus, dim, rng)
                                    : identity_backward(cfg.backward_depth, cfg.backward_kraus, dim);
}

std::vector<double> clean_fidelities(std::vector<double> f) {
  for (double& x : f)
    if (std::isnan(x)) x = 0.0;
  return f;
}

/// One backtracked Cayley step on a single block. Returns false when no
/// decrease was found within kMaxHalvings halvings.
struct StepState {
  double tau;
  bool converged = false;
  bool stalled = false;
};

template <class LossFn>
bool backtracked_step(StiefelPoint& block, const CMatrix& grad, StepState& st, double current, double& accepted,
                      double tau_cap, int& reprojections, LossFn&& loss_at) {
  for (int h = 0; h <= kMaxHalvings; ++h) {
    try {
      CayleyStats stats;
      StiefelPoint trial = cayley_update(block, grad, st.tau, &stats);
      const double l = loss_at(trial);
      if (l < current) {
        block = std::move(trial);
        accepted = l;
        reprojections += stats.reprojections;
        st.tau = std::min(2.0 * st.tau, tau_cap);
        return true;
      }
    } catch (const SingularMatrixError&) {
    }
    st.tau *= 0.5;
  }
  return false;
}

}  // namespace

TrainOutcome train_hqto(const Trajectory& traj, const TrainConfig& cfg, Rng& rng) {
  const auto start = Clock::now();
  if (cfg.loss.kind == LossKind::sqco_step) throw ConfigError("hqto trains on loss kind hqto or pc");
  const Index dim = traj.dim();
  const LossContext ctx(traj, cfg.loss, cfg.backward_depth);
  BackwardModel model = initial_model(cfg, dim, rng);

  SeedResult res;
  std::vector<CMatrix> kappas = model.kappas();
  LossContext::Gradient g = ctx.gradient(kappas, true);
  double loss = g.eval.loss;
  res.loss_curve.push_back(loss);
  res.fidelity_curves.push_back(clean_fidelities(g.eval.fidelities));

  double tau = cfg.tau0;
  const double tau_cap = 16.0 * cfg.tau0;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    bool accepted = false;
    double trial_loss = loss;
    std::vector<StiefelPoint> trial_blocks;
    CayleyStats stats;
    for (int h = 0; h <= kMaxHalvings && !accepted; ++h) {
      try {
        trial_blocks.clear();
        stats = {};
        for (std::size_t b = 0; b < model.blocks.size(); ++b)
          trial_blocks.push_back(cayley_update(model.blocks[b], g.blocks[b], tau, &stats));
        std::vector<CMatrix> trial_kappas;
        trial_kappas.reserve(trial_blocks.size());
        for (const StiefelPoint& p : trial_blocks) trial_kappas.push_back(p.kappa());
        trial_loss = ctx.evaluate(trial_kappas).loss;
        if (trial_loss < loss) {
          accepted = true;
          kappas = std::move(trial_kappas);
          break;
        }
      } catch (const SingularMatrixError&) {
      }
      tau *= 0.5;
    }
    if (!accepted) {
      double norm = 0.0;
      for (std::size_t b = 0; b < model.blocks.size(); ++b)
        norm = std::max(norm, riemannian_gradient_norm(model.blocks[b], g.blocks[b]));
      res.converged = norm < 1e-7;
      break;
    }
    model.blocks = std::move(trial_blocks);
    res.reprojections += stats.reprojections;
    ++res.iterations;
    tau = std::min(2.0 * tau, tau_cap);

    g = ctx.gradient(kappas, true);
    const double delta = loss - g.eval.loss;
    loss = g.eval.loss;
    res.loss_curve.push_back(loss);
    res.fidelity_curves.push_back(clean_fidelities(g.eval.fidelities));
    if (std::abs(delta) < cfg.convergence_eps) {
      res.converged = true;
      break;
    }
  }

  res.final_fidelity = res.fidelity_curves.back()[0];
  res.wall_time = seconds_since(start);
  return {std::move(model), std::move(res)};
}

TrainOutcome train_sqco(const Trajectory& traj, const TrainConfig& cfg, Rng& rng) {
  const auto start = Clock::now();
  const int depth = cfg.backward_depth;
  if (depth != traj.depth()) throw ConfigError("sqco requires L_b == L_f");
  const Index dim = traj.dim();
  BackwardModel model = initial_model(cfg, dim, rng);

  // Local step contexts plus an end-to-end context used only for reporting.
  std::vector<LossContext> local;
  local.reserve(std::size_t(depth));
  for (int t = 1; t <= depth; ++t) {
    LossSpec spec = cfg.loss;
    spec.kind = LossKind::sqco_step;
    spec.step = t;
    local.emplace_back(traj, spec, depth);
  }
  LossSpec chain_spec = cfg.loss;
  chain_spec.kind = LossKind::hqto;
  const LossContext chain(traj, chain_spec, depth);

  SeedResult res;
  std::vector<CMatrix> kappas = model.kappas();
  std::vector<LossContext::Gradient> grads;
  std::vector<double> losses;
  for (int t = 1; t <= depth; ++t) {
    grads.push_back(local[std::size_t(t - 1)].gradient(kappas));
    losses.push_back(grads.back().eval.loss);
  }
  auto record = [&] {
    res.loss_curve.push_back(std::accumulate(losses.begin(), losses.end(), 0.0));
    res.fidelity_curves.push_back(clean_fidelities(chain.evaluate(kappas, true).fidelities));
  };
  record();

  std::vector<StepState> state(std::size_t(depth), StepState{cfg.tau0});
  const double tau_cap = 16.0 * cfg.tau0;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    bool any_active = false;
    for (int t = 1; t <= depth; ++t) {
      const std::size_t b = std::size_t(t - 1);
      StepState& st = state[b];
      if (st.converged || st.stalled) continue;
      any_active = true;
      const LossContext& ctx = local[b];
      double accepted = losses[b];
      auto loss_at = [&](const StiefelPoint& trial) {
        std::vector<CMatrix> k = kappas;
        k[b] = trial.kappa();
        return ctx.evaluate(k).loss;
      };
      if (!backtracked_step(model.blocks[b], grads[b].blocks[b], st, losses[b], accepted, tau_cap,
                            res.reprojections, loss_at)) {
        st.stalled = true;
        continue;
      }
      kappas[b] = model.blocks[b].kappa();
      grads[b] = ctx.gradient(kappas);
      const double delta = losses[b] - grads[b].eval.loss;
      losses[b] = grads[b].eval.loss;
      if (std::abs(delta) < cfg.convergence_eps) st.converged = true;
    }
    if (!any_active) break;
    ++res.iterations;
    record();
  }

  res.converged = true;
  for (std::size_t b = 0; b < state.size(); ++b) {
    if (state[b].stalled)
      state[b].converged = riemannian_gradient_norm(model.blocks[b], grads[b].blocks[b]) < 1e-7;
    res.converged = res.converged && state[b].converged;
  }
  for (int t = 1; t <= depth; ++t) {
    const std::vector<double> f = local[std::size_t(t - 1)].evaluate(kappas, true).fidelities;
    res.step_fidelities.push_back(f[std::size_t(t - 1)]);
  }
  res.final_fidelity = res.fidelity_curves.back()[0];
  res.wall_time = seconds_since(start);
  return {std::move(model), std::move(res)};
}

double pc_loss(const Trajectory& traj, std::span<const DensityMatrix> backward_states, const LossSpec& spec) {
  if (spec.kind != LossKind::pc) throw ConfigError("pc_loss requires loss kind pc");
  const int depth = int(backward_states.size()) - 1;
  if (depth < 1) throw DimensionError("pc_loss: need at least two backward states");
  const LossContext ctx(traj, spec, depth);
  std::vector<CMatrix> states;
  states.reserve(backward_states.size());
  for (const DensityMatrix& s : backward_states) states.push_back(s.matrix());
  return ctx.loss_of_states(states);
}

SeedSetup seed_setup(const TrainConfig& cfg, std::uint64_t seed) {
  const Rng root(seed);
  Rng target_rng = root.split(1);
  NoiseSchedule schedule = cfg.schedule;
  schedule.seed = root.split(2).next_u64();
  return {make_target(cfg.target, cfg.n_qubits, target_rng), schedule, root.split(3)};
}

SeedResult run_seed(const TrainConfig& cfg, std::uint64_t seed) {
  const auto start = Clock::now();
  SeedResult res;
  try {
    SeedSetup setup = seed_setup(cfg, seed);
    const std::vector<Channel> channels = build_forward_sequence(setup.schedule, cfg.dim());
    const Trajectory traj = run_forward(setup.target, channels, setup.schedule);
    TrainOutcome out = cfg.strategy == Strategy::sqco ? train_sqco(traj, cfg, setup.init_rng)
                                                      : train_hqto(traj, cfg, setup.init_rng);
    res = std::move(out.result);
    if (cfg.keep_states) {
      res.forward_states = traj.states;
      res.backward_states = apply_backward(out.model, traj.states.back());
      res.model = std::move(out.model);
    }
    res.target = setup.target;
    res.forward_seed = setup.schedule.seed;
  } catch (const std::exception& e) {
    res = SeedResult{};
    res.failed = true;
    res.error = e.what();
  }
  res.seed = seed;
  res.wall_time = seconds_since(start);
  return res;
}

RunResult run_experiment(const TrainConfig& cfg, int threads) {
  cfg.validate();
  const auto start = Clock::now();
  RunResult run;
  run.config = cfg;
  run.seeds.resize(cfg.seeds.size());

  int width = threads > 0 ? threads : int(std::max(1u, std::thread::hardware_concurrency()));
  width = std::min<int>(width, int(cfg.seeds.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) run.seeds[i] = run_seed(cfg, cfg.seeds[i]);
  };
  if (width <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < width; ++w) pool.emplace_back(worker);
  }

  std::vector<double> finals;
  for (const SeedResult& s : run.seeds) {
    if (s.failed) run.partial = true;
    else finals.push_back(s.final_fidelity);
  }
  if (!finals.empty()) {
    run.mean = std::accumulate(finals.begin(), finals.end(), 0.0) / double(finals.size());
    double ss = 0.0;
    for (double f : finals) ss += (f - run.mean) * (f - run.mean);
    run.single_sample = finals.size() == 1;
    run.std = finals.size() > 1 ? std::sqrt(ss / double(finals.size() - 1)) : 0.0;
  }
  run.wall_time = seconds_since(start);
  return run;
}

}  // namespace ccmqd
