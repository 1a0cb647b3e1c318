#include "ccmqd/channel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace ccmqd {

CptpReport verify_cptp(std::span<const CMatrix> ops, double tol) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (ops.empty()) return {kInf, false};
  const Index d = ops.front().rows();
  CMatrix sum = CMatrix::Zero(d, d);
  for (const CMatrix& k : ops) {
    if (k.rows() != d || k.cols() != d) return {kInf, false};
    sum.noalias() += k.adjoint() * k;
  }
  const double defect = (sum - CMatrix::Identity(d, d)).norm();
  return {defect, std::isfinite(defect) && defect < tol};
}

KrausChannel::KrausChannel(std::vector<CMatrix> ops, double tol) : ops_(std::move(ops)) {
  if (ops_.empty()) throw InvalidStateError("Kraus channel needs at least one operator");
  dim_ = ops_.front().rows();
  for (const CMatrix& k : ops_)
    if (k.rows() != dim_ || k.cols() != dim_) throw DimensionError("Kraus operators must be square and equal-sized");
  const CptpReport report = verify_cptp(ops_, tol);
  if (!report.pass)
    throw InvalidStateError("Kraus set is not complete (defect " + std::to_string(report.defect) + ")");
}

KrausChannel KrausChannel::from_isometry(const CMatrix& kappa, Index dim, double tol) {
  if (dim < 1 || kappa.cols() != dim || kappa.rows() % dim != 0)
    throw DimensionError("from_isometry: expected a (dim*K) x dim matrix");
  std::vector<CMatrix> ops;
  for (Index i = 0; i < kappa.rows() / dim; ++i) ops.emplace_back(kappa.middleRows(i * dim, dim));
  return KrausChannel(std::move(ops), tol);
}

KrausChannel KrausChannel::identity(Index dim) { return KrausChannel({CMatrix::Identity(dim, dim)}); }

CMatrix KrausChannel::stacked() const {
  CMatrix out(dim_ * size(), dim_);
  for (Index i = 0; i < size(); ++i) out.middleRows(i * dim_, dim_) = ops_[std::size_t(i)];
  return out;
}

CMatrix apply_kraus(std::span<const CMatrix> ops, const CMatrix& rho) {
  CMatrix out = CMatrix::Zero(rho.rows(), rho.cols());
  CMatrix tmp(rho.rows(), rho.cols());
  for (const CMatrix& k : ops) {
    tmp.noalias() = k * rho;
    out.noalias() += tmp * k.adjoint();
  }
  return out;
}

CMatrix KrausChannel::apply(const CMatrix& rho) const {
  if (rho.rows() != dim_ || rho.cols() != dim_) throw DimensionError("channel/state dimension mismatch");
  return apply_kraus(ops_, rho);
}

DensityMatrix apply(const KrausChannel& ch, const DensityMatrix& rho) {
  return DensityMatrix::sanitize(ch.apply(rho.matrix()));
}

KrausChannel compose(const KrausChannel& second, const KrausChannel& first) {
  if (second.dim() != first.dim()) throw DimensionError("compose: dimension mismatch");
  std::vector<CMatrix> ops;
  ops.reserve(std::size_t(second.size() * first.size()));
  for (const CMatrix& b : second.ops())
    for (const CMatrix& a : first.ops()) ops.emplace_back(b * a);
  return KrausChannel(std::move(ops));
}

KrausChannel minimal_kraus(const KrausChannel& ch) {
  const Index d = ch.dim();
  if (ch.size() <= d * d) return ch;
  CMatrix choi = CMatrix::Zero(d * d, d * d);
  for (const CMatrix& k : ch.ops()) {
    const Eigen::Map<const CVector> v(k.data(), d * d);
    choi.noalias() += v * v.adjoint();
  }
  const HermEig eig = herm_eig(choi);
  const double floor = roundoff_floor(eig.eigenvalues);
  std::vector<CMatrix> ops;
  for (Index j = d * d - 1; j >= 0; --j) {
    if (eig.eigenvalues(j) <= floor) continue;
    const CVector v = std::sqrt(eig.eigenvalues(j)) * eig.eigenvectors.col(j);
    ops.emplace_back(Eigen::Map<const CMatrix>(v.data(), d, d));
  }
  return KrausChannel(std::move(ops));
}

DepolarizingMap::DepolarizingMap(Index dim, double p) : dim_(dim), p_(p) {
  if (dim < 1) throw DimensionError("depolarizing map: dim must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("depolarizing strength must lie in [0, 1]");
}

CMatrix DepolarizingMap::apply(const CMatrix& rho) const {
  if (rho.rows() != dim_ || rho.cols() != dim_) throw DimensionError("channel/state dimension mismatch");
  CMatrix out = (1.0 - p_) * rho;
  out.diagonal().array() += p_ * rho.trace() / double(dim_);
  return out;
}

KrausChannel DepolarizingMap::to_kraus() const {
  const Index d = dim_;
  const double d2 = double(d * d);
  CMatrix shift = CMatrix::Zero(d, d);
  CMatrix clock = CMatrix::Zero(d, d);
  for (Index j = 0; j < d; ++j) {
    shift((j + 1) % d, j) = 1.0;
    clock(j, j) = std::polar(1.0, 2.0 * std::numbers::pi * double(j) / double(d));
  }
  std::vector<CMatrix> ops;
  ops.reserve(std::size_t(d * d));
  CMatrix x_pow = CMatrix::Identity(d, d);
  for (Index a = 0; a < d; ++a) {
    CMatrix z_pow = CMatrix::Identity(d, d);
    for (Index b = 0; b < d; ++b) {
      const double weight = (a == 0 && b == 0) ? 1.0 - p_ + p_ / d2 : p_ / d2;
      ops.emplace_back(std::sqrt(weight) * x_pow * z_pow);
      z_pow = (z_pow * clock).eval();
    }
    x_pow = (x_pow * shift).eval();
  }
  return KrausChannel(std::move(ops));
}

Channel::Channel(KrausChannel kraus, int repeats) : impl_(std::move(kraus)), repeats_(repeats) {
  if (repeats < 1) throw ConfigError("channel repeat count must be >= 1");
}

Channel::Channel(DepolarizingMap map) : impl_(std::move(map)) {}

Index Channel::dim() const {
  return std::visit([](const auto& c) { return c.dim(); }, impl_);
}

CMatrix Channel::apply(const CMatrix& rho) const {
  CMatrix out = rho;
  for (int r = 0; r < repeats_; ++r) out = std::visit([&](const auto& c) { return c.apply(out); }, impl_);
  return out;
}

DensityMatrix Channel::apply(const DensityMatrix& rho) const { return DensityMatrix::sanitize(apply(rho.matrix())); }

KrausChannel Channel::to_kraus() const {
  KrausChannel base = depolarizing() ? depolarizing()->to_kraus() : *kraus();
  KrausChannel out = base;
  for (int r = 1; r < repeats_; ++r) out = minimal_kraus(compose(base, out));
  return out;
}

KrausChannel haar_random_channel(Index dim, Index kraus_count, Rng& rng) {
  if (kraus_count < 1) throw ConfigError("haar_random_channel: K must be >= 1");
  const CMatrix u = haar_unitary(dim * kraus_count, rng);
  return KrausChannel::from_isometry(u.leftCols(dim), dim);
}

std::vector<CMatrix> lindblad_raw_ops(const LindbladSpec& spec) {
  const Index d = spec.hamiltonian.rows();
  if (spec.hamiltonian.cols() != d || d < 1) throw DimensionError("Lindblad Hamiltonian must be square");
  if (hermiticity_defect(spec.hamiltonian) > 1e-9) throw InvalidStateError("Lindblad Hamiltonian is not Hermitian");
  if (!(spec.dt > 0.0)) throw ConfigError("Lindblad dt must be positive");

  const Complex i_unit(0.0, 1.0);
  CMatrix h_eff = spec.hamiltonian;
  for (const CMatrix& g : spec.jump_ops) {
    if (g.rows() != d || g.cols() != d) throw DimensionError("jump operator dimension mismatch");
    h_eff -= 0.5 * i_unit * (g.adjoint() * g);
  }
  std::vector<CMatrix> ops;
  ops.reserve(spec.jump_ops.size() + 1);
  ops.emplace_back(CMatrix::Identity(d, d) - i_unit * spec.dt * h_eff);
  const double root_dt = std::sqrt(spec.dt);
  for (const CMatrix& g : spec.jump_ops) ops.emplace_back(root_dt * g);
  return ops;
}

LindbladStep lindblad_step_channel(const LindbladSpec& spec) {
  std::vector<CMatrix> raw = lindblad_raw_ops(spec);
  const double raw_defect = verify_cptp(raw, 0.0).defect;
  if (!(raw_defect < 0.01))
    throw InvalidStateError("Lindblad step: raw completeness defect " + std::to_string(raw_defect) +
                            " >= 0.01, reduce dt");
  const Index d = spec.hamiltonian.rows();
  CMatrix stacked(d * Index(raw.size()), d);
  for (std::size_t i = 0; i < raw.size(); ++i) stacked.middleRows(Index(i) * d, d) = raw[i];
  const CMatrix projected = polar_isometry(stacked);
  KrausChannel channel = KrausChannel::from_isometry(projected, d);
  const double projected_defect = verify_cptp(channel.ops(), 0.0).defect;
  return {std::move(channel), raw_defect, projected_defect};
}

CMatrix stinespring_unitary(const KrausChannel& ch) {
  const Index d = ch.dim();
  const Index env = ch.size();
  const Index total = d * env;
  CMatrix u = CMatrix::Zero(total, total);
  std::vector<bool> filled(std::size_t(total), false);

  // U |s>|e0> = sum_e (k_e |s>) |e>
  for (Index s = 0; s < d; ++s) {
    const Index col = s * env;
    for (Index e = 0; e < env; ++e)
      for (Index r = 0; r < d; ++r) u(r * env + e, col) = ch.ops()[std::size_t(e)](r, s);
    filled[std::size_t(col)] = true;
  }

  Index next_basis = 0;
  for (Index col = 0; col < total; ++col) {
    if (filled[std::size_t(col)]) continue;
    for (; next_basis < total; ++next_basis) {
      CVector v = CVector::Unit(total, next_basis);
      for (int pass = 0; pass < 2; ++pass)
        for (Index c = 0; c < total; ++c)
          if (filled[std::size_t(c)]) v -= u.col(c) * u.col(c).dot(v);
      const double norm = v.norm();
      if (norm > 1e-8) {
        u.col(col) = v / norm;
        filled[std::size_t(col)] = true;
        ++next_basis;
        break;
      }
    }
    if (!filled[std::size_t(col)]) throw NumericalError("stinespring_unitary: isometry completion failed");
  }
  return u;
}

DensityMatrix stinespring_apply(const KrausChannel& ch, const DensityMatrix& rho) {
  if (rho.dim() != ch.dim()) throw DimensionError("channel/state dimension mismatch");
  const Index env = ch.size();
  const CMatrix u = stinespring_unitary(ch);
  CMatrix env0 = CMatrix::Zero(env, env);
  env0(0, 0) = 1.0;
  const CMatrix joint = u * kron(rho.matrix(), env0) * u.adjoint();
  return DensityMatrix::sanitize(partial_trace_env(joint, ch.dim(), env));
}

std::string to_string(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::depolarizing: return "depolarizing";
    case NoiseFamily::haar_random: return "haar_random";
    case NoiseFamily::lindblad: return "lindblad";
  }
  return "haar_random";
}

NoiseFamily noise_family_from_string(const std::string& name) {
  if (name == "depolarizing") return NoiseFamily::depolarizing;
  if (name == "haar_random") return NoiseFamily::haar_random;
  if (name == "lindblad") return NoiseFamily::lindblad;
  throw ConfigError("unknown noise family '" + name + "'");
}

void NoiseSchedule::validate() const {
  if (depth < 1) throw ConfigError("forward depth L_f must be >= 1");
  if (kraus_count < 1) throw ConfigError("forward Kraus count K_f must be >= 1");
  if (!(p_max >= 0.0 && p_max <= 1.0)) throw ConfigError("p_max must lie in [0, 1]");
  if (family == NoiseFamily::lindblad) {
    if (!(lindblad_dt > 0.0) || !(lindblad_gamma >= 0.0)) throw ConfigError("lindblad dt must be > 0, gamma >= 0");
    if (lindblad_substeps < 1) throw ConfigError("lindblad substeps must be >= 1");
  }
}

double depolarizing_strength(int t, int depth, double p_max) { return p_max * double(t) / double(depth); }

LindbladSpec lindblad_schedule_spec(const NoiseSchedule& schedule, Index dim) {
  const int n = qubit_count(dim);
  const Complex i_unit(0.0, 1.0);
  CMatrix px(2, 2), py(2, 2), pz(2, 2);
  px << 0.0, 1.0, 1.0, 0.0;
  py << 0.0, -i_unit, i_unit, 0.0;
  pz << 1.0, 0.0, 0.0, -1.0;

  // Embeds a one-qubit operator at position q (qubit 0 is the most significant factor).
  auto embed = [n](const CMatrix& op, int q) {
    CMatrix out = CMatrix::Identity(1, 1);
    for (int j = 0; j < n; ++j) out = kron(out, j == q ? op : CMatrix(CMatrix::Identity(2, 2)));
    return out;
  };

  LindbladSpec spec;
  spec.dt = schedule.lindblad_dt;
  spec.hamiltonian = CMatrix::Zero(dim, dim);
  const double rate = std::sqrt(schedule.lindblad_gamma);
  for (int q = 0; q < n; ++q) {
    spec.hamiltonian += 0.5 * schedule.lindblad_omega * embed(pz, q);
    for (const CMatrix* pauli : {&px, &py, &pz}) spec.jump_ops.push_back(rate * embed(*pauli, q));
  }
  return spec;
}

std::vector<Channel> build_forward_sequence(const NoiseSchedule& schedule, Index dim) {
  schedule.validate();
  std::vector<Channel> out;
  out.reserve(std::size_t(schedule.depth));
  switch (schedule.family) {
    case NoiseFamily::depolarizing:
      for (int t = 1; t <= schedule.depth; ++t)
        out.emplace_back(DepolarizingMap(dim, depolarizing_strength(t, schedule.depth, schedule.p_max)));
      break;
    case NoiseFamily::haar_random: {
      const Rng root(schedule.seed);
      for (int t = 1; t <= schedule.depth; ++t) {
        Rng step = root.split(std::uint64_t(t));
        out.emplace_back(haar_random_channel(dim, schedule.kraus_count, step));
      }
      break;
    }
    case NoiseFamily::lindblad: {
      const LindbladStep step = lindblad_step_channel(lindblad_schedule_spec(schedule, dim));
      for (int t = 1; t <= schedule.depth; ++t) out.emplace_back(step.channel, schedule.lindblad_substeps);
      break;
    }
  }
  return out;
}

}  // namespace ccmqd
