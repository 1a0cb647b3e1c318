#include "ccmqd/verify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace ccmqd {

namespace {

CMatrix random_mixed(Index dim, Rng& rng) {
  CMatrix g(dim, dim);
  for (Index i = 0; i < g.size(); ++i) g(i) = rng.complex_normal();
  CMatrix rho = g * g.adjoint();
  return rho / rho.trace().real();
}

int capped(const VerifyOptions& opt, int nominal) { return std::max(1, std::min(opt.trials, nominal)); }

std::string fmt(double x) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << x;
  return os.str();
}

}  // namespace

CheckResult check_cptp(const VerifyOptions& opt) {
  CheckResult r{"cptp", true, 0.0, 1e-9, ""};
  Rng rng = Rng(opt.seed).split(1);
  const int n = capped(opt, 1000);
  double worst_trace = 0.0, worst_eig = std::numeric_limits<double>::infinity();
  for (Index dim : {Index(2), Index(4), Index(8)}) {
    for (int i = 0; i < n; ++i) {
      const Index k = 1 + Index(rng.next_u64() % 4);
      const KrausChannel ch = haar_random_channel(dim, k, rng);
      r.measured = std::max(r.measured, verify_cptp(ch.ops(), kCompletenessTol).defect);
      const CMatrix out = ch.apply(random_mixed(dim, rng));
      worst_trace = std::max(worst_trace, std::abs(out.trace().real() - 1.0));
      worst_eig = std::min(worst_eig, herm_eigenvalues(out).minCoeff());
    }
  }
  if (opt.plant_fault) {
    Rng fault_rng = rng.split(99);
    std::vector<CMatrix> ops = haar_random_channel(4, 2, fault_rng).ops();
    ops.push_back(CMatrix::Identity(4, 4));
    r.measured = std::max(r.measured, verify_cptp(ops, kCompletenessTol).defect);
  }
  r.pass = r.measured < 1e-9 && worst_trace < 1e-10 && worst_eig >= -1e-9;
  r.detail = std::to_string(n) + " channels per dim {2,4,8}; trace drift " + fmt(worst_trace) + "; min eigenvalue " +
             fmt(worst_eig) + (opt.plant_fault ? "; planted fault included" : "");
  return r;
}

CheckResult check_stinespring(const VerifyOptions& opt) {
  CheckResult r{"stinespring_equals_kraus", true, 0.0, 1e-9, ""};
  Rng rng = Rng(opt.seed).split(2);
  const int n = capped(opt, 200);
  for (int i = 0; i < n; ++i) {
    const Index dim = Index(1) << (1 + int(rng.next_u64() % 3));
    const Index k = 1 + Index(rng.next_u64() % 4);
    const KrausChannel ch = haar_random_channel(dim, k, rng);
    const DensityMatrix rho = DensityMatrix::from_matrix(random_mixed(dim, rng));
    const CMatrix via_kraus = ch.apply(rho.matrix());
    const CMatrix via_unitary = stinespring_apply(ch, rho).matrix();
    r.measured = std::max(r.measured, (via_kraus - via_unitary).norm());
  }
  r.pass = r.measured < r.threshold;
  r.detail = std::to_string(n) + " random channel/state pairs";
  return r;
}

CheckResult check_gradient(const VerifyOptions& opt) {
  CheckResult r{"gradient_vs_finite_difference", true, 0.0, 1e-5, ""};
  Rng rng = Rng(opt.seed).split(3);
  const int n = capped(opt, 50);
  const LossKind kinds[] = {LossKind::sqco_step, LossKind::hqto, LossKind::pc};
  double worst_abs = 0.0;
  for (int i = 0; i < n; ++i) {
    const int qubits = 1 + i % 2;
    NoiseSchedule sched;
    sched.depth = 2 + int(rng.next_u64() % 3);
    sched.kraus_count = 2;
    sched.seed = rng.next_u64();
    Rng target_rng = rng.split(std::uint64_t(1000 + i));
    const PureState target = random_pure_state(qubits, target_rng);
    const Trajectory traj = run_forward(target, build_forward_sequence(sched, target.dim()), sched);

    LossSpec spec;
    spec.kind = kinds[i % 3];
    spec.lambda = 0.02 + rng.uniform();
    spec.form = (i / 3) % 2 == 0 ? LossForm::one_minus_F : LossForm::neg_sqrt_F;
    const int lb = sched.depth;
    spec.step = 1 + int(rng.next_u64() % std::uint64_t(lb));
    Rng init_rng = rng.split(std::uint64_t(2000 + i));
    const BackwardModel model = init_backward(lb, 2 + int(rng.next_u64() % 2), target.dim(), init_rng);

    const GradientReport rep = fd_oracle(model, traj, spec, 1e-5);
    r.measured = std::max(r.measured, rep.max_relative_deviation);
    worst_abs = std::max(worst_abs, rep.max_abs_deviation);
  }
  r.pass = r.measured < r.threshold;
  r.detail = std::to_string(n) + " configurations (1-2 qubits, sqco_step/hqto/pc); max abs deviation " + fmt(worst_abs);
  return r;
}

CheckResult check_cayley_drift(const VerifyOptions& opt) {
  CheckResult r{"cayley_manifold_drift", true, 0.0, 1e-8, ""};
  Rng rng = Rng(opt.seed).split(4);
  const int n = capped(opt, 1000);
  const Index dim = 4;
  const Index k = 3;
  StiefelPoint point(haar_unitary(dim * k, rng).leftCols(dim), dim);
  CayleyStats stats;
  for (int i = 0; i < n; ++i) {
    CMatrix g(dim * k, dim);
    for (Index e = 0; e < g.size(); ++e) g(e) = rng.complex_normal();
    point = cayley_update(point, g, 0.05, &stats);
  }
  r.measured = point.defect();
  r.pass = r.measured < r.threshold;
  r.detail = std::to_string(n) + " updates, " + std::to_string(stats.reprojections) + " polar re-projections";
  return r;
}

CheckResult check_fidelity_axioms(const VerifyOptions& opt) {
  CheckResult r{"fidelity_axioms", true, 0.0, 1e-9, ""};
  Rng rng = Rng(opt.seed).split(5);
  const int n = capped(opt, 500);
  double self = 0.0, sym = 0.0, orth = 0.0, closed = 0.0;
  for (int i = 0; i < n; ++i) {
    const int qubits = 1 + int(rng.next_u64() % 3);
    const Index dim = Index(1) << qubits;
    const CMatrix a = random_mixed(dim, rng);
    const CMatrix b = random_mixed(dim, rng);
    self = std::max(self, std::abs(uhlmann_fidelity(a, a) - 1.0));
    sym = std::max(sym, std::abs(uhlmann_fidelity(a, b) - uhlmann_fidelity(b, a)));

    const PureState psi = random_pure_state(qubits, rng);
    CVector phi = random_pure_state(qubits, rng).amplitudes();
    phi -= psi.amplitudes() * psi.amplitudes().dot(phi);
    const PureState perp = PureState::normalized(phi);
    orth = std::max(orth, fidelity(DensityMatrix::from_pure(psi), DensityMatrix::from_pure(perp)));

    const double overlap = psi.amplitudes().dot(b * psi.amplitudes()).real();
    closed = std::max(closed, std::abs(uhlmann_fidelity(psi.projector(), b) - overlap));
  }
  r.measured = std::max({self, sym, orth, closed});
  r.pass = r.measured < r.threshold;
  r.detail = std::to_string(n) + " pairs; self " + fmt(self) + ", symmetry " + fmt(sym) + ", orthogonal " + fmt(orth) +
             ", pure-vs-mixed " + fmt(closed);
  return r;
}

CheckResult check_lindblad_order(const VerifyOptions&) {
  CheckResult r{"lindblad_step_order", true, 0.0, 0.2, ""};
  NoiseSchedule sched;
  sched.family = NoiseFamily::lindblad;
  sched.lindblad_omega = 1.0;
  std::vector<double> scaled;
  std::ostringstream detail;
  for (double dt : {0.01, 0.005, 0.0025}) {
    sched.lindblad_dt = dt;
    const LindbladSpec spec = lindblad_schedule_spec(sched, 4);
    const double defect = verify_cptp(lindblad_raw_ops(spec), 1.0).defect;
    scaled.push_back(defect / (dt * dt));
    detail << "dt=" << dt << " defect=" << fmt(defect) << "; ";
  }
  const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
  r.measured = *hi / *lo - 1.0;
  r.pass = r.measured <= r.threshold;
  r.detail = detail.str() + "spread of defect/dt^2";
  return r;
}

TrainConfig tradeoff_regression_config() {
  TrainConfig cfg;
  cfg.n_qubits = 2;
  cfg.schedule.family = NoiseFamily::haar_random;
  cfg.schedule.depth = 10;
  cfg.schedule.kraus_count = 4;
  cfg.backward_depth = 10;
  cfg.backward_kraus = 10;
  cfg.strategy = Strategy::hqto;
  cfg.loss.kind = LossKind::pc;
  cfg.loss.lambda = 0.02;
  cfg.seeds = {0};
  cfg.keep_states = false;
  return cfg;
}

int non_monotone_step(const SeedResult& seed, double delta) {
  if (seed.fidelity_curves.empty()) return -1;
  const int lb = int(seed.fidelity_curves.front().size()) - 1;
  for (int t = 1; t < lb; ++t) {
    double lo = seed.fidelity_curves.front()[std::size_t(t)], hi = lo;
    bool rose = false, fell = false;
    for (const std::vector<double>& row : seed.fidelity_curves) {
      const double f = row[std::size_t(t)];
      rose = rose || f > lo + delta;
      fell = fell || f < hi - delta;
      lo = std::min(lo, f);
      hi = std::max(hi, f);
    }
    if (rose && fell) return t;
  }
  return -1;
}

int decreasing_step(const SeedResult& seed) {
  if (seed.fidelity_curves.empty()) return -1;
  const std::vector<double>& first = seed.fidelity_curves.front();
  const std::vector<double>& last = seed.fidelity_curves.back();
  for (std::size_t t = 1; t + 1 < first.size(); ++t)
    if (last[t] < first[t]) return int(t);
  return -1;
}

CheckResult check_tradeoff(const VerifyOptions&) {
  CheckResult r{"intermediate_fidelity_tradeoff", false, 0.0, 0.99, ""};
  const TrainConfig cfg = tradeoff_regression_config();
  const SeedResult s = run_seed(cfg, cfg.seeds.front());
  if (s.failed) {
    r.detail = "training failed: " + s.error;
    return r;
  }
  const int t = non_monotone_step(s);
  r.measured = s.final_fidelity;
  r.pass = t > 0 && s.final_fidelity > r.threshold;
  r.detail = "final F_0 = " + std::to_string(s.final_fidelity) + ", " +
             (t > 0 ? "non-monotone F_" + std::to_string(t) : std::string("no non-monotone intermediate curve")) +
             " over " + std::to_string(s.iterations) + " iterations";
  return r;
}

std::vector<CheckResult> run_verify_suite(const VerifyOptions& opt) {
  using Check = CheckResult (*)(const VerifyOptions&);
  const std::pair<const char*, Check> checks[] = {
      {"cptp", check_cptp},
      {"stinespring_equals_kraus", check_stinespring},
      {"gradient_vs_finite_difference", check_gradient},
      {"cayley_manifold_drift", check_cayley_drift},
      {"fidelity_axioms", check_fidelity_axioms},
      {"lindblad_step_order", check_lindblad_order},
      {"intermediate_fidelity_tradeoff", check_tradeoff},
  };
  std::vector<CheckResult> out;
  for (const auto& [name, check] : checks) {
    try {
      out.push_back(check(opt));
    } catch (const std::exception& e) {
      out.push_back({name, false, 0.0, 0.0, std::string("exception: ") + e.what()});
    }
  }
  return out;
}

void print_checks(std::ostream& os, const std::vector<CheckResult>& checks) {
  for (const CheckResult& c : checks)
    os << (c.pass ? "PASS" : "FAIL") << "  " << c.name << "  measured=" << fmt(c.measured)
       << " threshold=" << fmt(c.threshold) << "  " << c.detail << '\n';
}

}  // namespace ccmqd
