#include <algorithm>
#include <cmath>

#include "ccmqd/channel.hpp"
#include "ccmqd/errors.hpp"
#include "ccmqd/state.hpp"
#include "test_util.hpp"

using namespace ccmqd;
using namespace ccmqd::test;

TEST(VerifyCptp, Examples) {
  const std::vector<CMatrix> id{CMatrix::Identity(2, 2)};
  const CptpReport ok = verify_cptp(id, 1e-9);
  EXPECT_TRUE(ok.pass);
  EXPECT_EQ(ok.defect, 0.0);

  for (Index d : {2, 4, 8}) {
    const std::vector<CMatrix> doubled{CMatrix::Identity(d, d), CMatrix::Identity(d, d)};
    const CptpReport bad = verify_cptp(doubled, 1e-9);
    EXPECT_FALSE(bad.pass);
    EXPECT_NEAR(bad.defect, std::sqrt(double(d)), 1e-12);
  }

  Rng rng(1);
  const KrausChannel ch = haar_random_channel(4, 3, rng);
  EXPECT_LT(verify_cptp(ch.ops(), 1e-9).defect, 1e-12);
}

TEST(VerifyCptp, MalformedInputFails) {
  const std::vector<CMatrix> ragged{CMatrix::Identity(2, 2), CMatrix::Identity(3, 3)};
  const CptpReport r = verify_cptp(ragged, 1e-9);
  EXPECT_FALSE(r.pass);
  EXPECT_TRUE(std::isinf(r.defect));
  EXPECT_FALSE(verify_cptp(std::vector<CMatrix>{}, 1e-9).pass);
}

TEST(KrausChannel, RejectsIncompleteSet) {
  EXPECT_THROW(KrausChannel(std::vector<CMatrix>{0.5 * CMatrix::Identity(2, 2)}), InvalidStateError);
}

TEST(Apply, IdentityChannel) {
  Rng rng(2);
  const DensityMatrix rho = DensityMatrix::from_matrix(random_mixed(4, rng));
  EXPECT_LT((apply(KrausChannel::identity(4), rho).matrix() - rho.matrix()).norm(), 1e-15);
}

TEST(Apply, RandomChannelIsCptp) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const KrausChannel ch = haar_random_channel(4, 1 + trial % 4, rng);
    const CMatrix out = ch.apply(random_mixed(4, rng));
    EXPECT_NEAR(out.trace().real(), 1.0, 1e-10);
    EXPECT_GE(herm_eigenvalues(out).minCoeff(), -1e-9);
  }
}

TEST(Depolarizing, FixedPointsOfTheRamp) {
  Rng rng(4);
  const CMatrix rho = random_mixed(4, rng);
  EXPECT_LT((DepolarizingMap(4, 0.0).apply(rho) - rho).norm(), 1e-15);
  EXPECT_LT((DepolarizingMap(4, 1.0).apply(rho) - 0.25 * CMatrix::Identity(4, 4)).norm(), 1e-15);
}

TEST(Depolarizing, AffineAndKrausFormsAgree) {
  Rng rng(5);
  for (Index d : {2, 4, 8}) {
    for (double p : {0.0, 0.1, 0.5, 0.93, 1.0}) {
      const DepolarizingMap map(d, p);
      const KrausChannel kraus = map.to_kraus();
      EXPECT_EQ(kraus.size(), d * d);
      EXPECT_LT(verify_cptp(kraus.ops(), 1e-9).defect, 1e-12);
      const CMatrix rho = random_mixed(d, rng);
      EXPECT_LT((map.apply(rho) - kraus.apply(rho)).norm(), 1e-10);
    }
  }
}

TEST(Depolarizing, StrengthOutOfRangeThrows) {
  EXPECT_THROW(DepolarizingMap(2, 1.5), ConfigError);
  EXPECT_THROW(DepolarizingMap(2, -0.1), ConfigError);
}

TEST(HaarRandomChannel, SingleOperatorIsUnitary) {
  Rng rng(6);
  const KrausChannel ch = haar_random_channel(4, 1, rng);
  ASSERT_EQ(ch.size(), 1);
  EXPECT_LT((ch.ops()[0].adjoint() * ch.ops()[0] - CMatrix::Identity(4, 4)).norm(), 1e-12);
}

TEST(HaarRandomChannel, PassesCptpAtTightTolerance) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial)
    EXPECT_TRUE(verify_cptp(haar_random_channel(8, 1 + trial % 5, rng).ops(), 1e-10).pass);
}

TEST(HaarRandomChannel, TenStepsDrivePurityDown) {
  std::vector<double> purities;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    DensityMatrix rho = DensityMatrix::from_pure(random_pure_state(1, rng));
    for (int t = 0; t < 10; ++t) rho = apply(haar_random_channel(2, 4, rng), rho);
    purities.push_back(purity(rho));
  }
  std::nth_element(purities.begin(), purities.begin() + 50, purities.end());
  // Independent numpy sampler: medians 0.566-0.585 over five batches of 100.
  EXPECT_GT(purities[50], 0.55);
  EXPECT_LT(purities[50], 0.61);
}

TEST(MinimalKraus, SameActionWithAtMostDSquaredOperators) {
  Rng rng(9);
  const KrausChannel a = haar_random_channel(2, 3, rng), b = haar_random_channel(2, 4, rng);
  const KrausChannel big = compose(compose(a, b), a);
  ASSERT_EQ(big.size(), 36);
  const KrausChannel small = minimal_kraus(big);
  EXPECT_LE(small.size(), 4);
  EXPECT_LT(verify_cptp(small.ops(), 1e-10).defect, 1e-10);
  for (int trial = 0; trial < 10; ++trial) {
    const CMatrix rho = random_mixed(2, rng);
    EXPECT_LT((apply_kraus(small.ops(), rho) - apply_kraus(big.ops(), rho)).norm(), 1e-12);
  }
  const KrausChannel u = haar_random_channel(4, 1, rng);
  EXPECT_EQ(minimal_kraus(u).ops()[0], u.ops()[0]);
}

TEST(Compose, MatchesSequentialApplication) {
  Rng rng(8);
  const KrausChannel a = haar_random_channel(2, 2, rng);
  const KrausChannel b = haar_random_channel(2, 3, rng);
  const CMatrix rho = random_mixed(2, rng);
  EXPECT_LT((compose(b, a).apply(rho) - b.apply(a.apply(rho))).norm(), 1e-12);
}

namespace {

CMatrix sigma_minus() {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 1) = 1.0;
  return m;
}

}  // namespace

TEST(Lindblad, EmptyGeneratorIsIdentity) {
  LindbladSpec spec{CMatrix::Zero(2, 2), {}, 0.01};
  const LindbladStep step = lindblad_step_channel(spec);
  ASSERT_EQ(step.channel.size(), 1);
  EXPECT_LT((step.channel.ops()[0] - CMatrix::Identity(2, 2)).norm(), 1e-15);
  EXPECT_EQ(step.raw_defect, 0.0);
}

TEST(Lindblad, AmplitudeDampingSmallStep) {
  const double gamma = 1.0, dt = 0.01;
  LindbladSpec spec{CMatrix::Zero(2, 2), {std::sqrt(gamma) * sigma_minus()}, dt};
  const LindbladStep step = lindblad_step_channel(spec);
  EXPECT_LT(step.projected_defect, 1e-12);

  Rng rng(9);
  const CMatrix rho = random_mixed(2, rng);
  const CMatrix out = step.channel.apply(rho);
  EXPECT_NEAR(out.trace().real(), 1.0, 1e-12);
  EXPECT_NEAR(out(1, 1).real(), (1.0 - gamma * dt) * rho(1, 1).real(), 1e-3);
}

TEST(Lindblad, RawDefectIsSecondOrder) {
  LindbladSpec spec{0.5 * pauli_z(), {sigma_minus(), 0.3 * pauli_x()}, 0.02};
  std::vector<double> defects;
  for (double dt : {0.02, 0.01, 0.005}) {
    spec.dt = dt;
    defects.push_back(verify_cptp(lindblad_raw_ops(spec), 1.0).defect);
  }
  for (std::size_t i = 1; i < defects.size(); ++i) EXPECT_NEAR(defects[i - 1] / defects[i], 4.0, 0.8);
}

TEST(Lindblad, LargeStepRejected) {
  LindbladSpec spec{CMatrix::Zero(2, 2), {sigma_minus()}, 0.5};
  EXPECT_THROW(lindblad_step_channel(spec), InvalidStateError);
}

TEST(Stinespring, IdentityAndUnitary) {
  Rng rng(10);
  const DensityMatrix rho = DensityMatrix::from_matrix(random_mixed(4, rng));
  EXPECT_LT((stinespring_apply(KrausChannel::identity(4), rho).matrix() - rho.matrix()).norm(), 1e-12);
  const CMatrix u = haar_unitary(4, rng);
  const KrausChannel uc(std::vector<CMatrix>{u});
  EXPECT_LT((stinespring_apply(uc, rho).matrix() - u * rho.matrix() * u.adjoint()).norm(), 1e-12);
}

TEST(Stinespring, EquivalentToOperatorSum) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Index d = Index(2) << (trial % 3);
    const KrausChannel ch = haar_random_channel(d, 1 + trial % 4, rng);
    const DensityMatrix rho = DensityMatrix::from_matrix(random_mixed(d, rng));
    const CMatrix u = stinespring_unitary(ch);
    EXPECT_LT((u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols())).norm(), 1e-10);
    EXPECT_LT((stinespring_apply(ch, rho).matrix() - ch.apply(rho.matrix())).norm(), 1e-9);
  }
}

TEST(ForwardSequence, DepolarizingRampIncreases) {
  NoiseSchedule s;
  s.family = NoiseFamily::depolarizing;
  const std::vector<Channel> seq = build_forward_sequence(s, 2);
  ASSERT_EQ(seq.size(), 10u);
  for (std::size_t t = 1; t < seq.size(); ++t)
    EXPECT_GT(seq[t].depolarizing()->strength(), seq[t - 1].depolarizing()->strength());
}

TEST(ForwardSequence, SameSeedSameOperators) {
  NoiseSchedule s;
  s.seed = 1234;
  const auto a = build_forward_sequence(s, 4);
  const auto b = build_forward_sequence(s, 4);
  for (std::size_t t = 0; t < a.size(); ++t)
    for (Index k = 0; k < a[t].kraus()->size(); ++k)
      EXPECT_EQ(a[t].kraus()->ops()[std::size_t(k)], b[t].kraus()->ops()[std::size_t(k)]);
  s.seed = 1235;
  EXPECT_NE(build_forward_sequence(s, 4)[0].kraus()->ops()[0], a[0].kraus()->ops()[0]);
}

TEST(ForwardSequence, DepolarizingDefaultsNearlyMixPurity) {
  NoiseSchedule s;
  s.family = NoiseFamily::depolarizing;
  const auto seq = build_forward_sequence(s, 2);
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    DensityMatrix rho = DensityMatrix::from_pure(random_pure_state(1, rng));
    for (const Channel& ch : seq) rho = ch.apply(rho);
    EXPECT_LT(purity(rho), 0.52);
  }
}

TEST(ForwardSequence, LindbladStepIsCompleteAndMixing) {
  NoiseSchedule s;
  s.family = NoiseFamily::lindblad;
  s.depth = 3;
  const auto seq = build_forward_sequence(s, 4);
  ASSERT_EQ(seq.size(), 3u);
  const KrausChannel k = seq[0].to_kraus();
  EXPECT_LT(verify_cptp(k.ops(), 1e-9).defect, 1e-9);
  DensityMatrix rho = DensityMatrix::from_pure(PureState::basis_zero(2));
  for (const Channel& ch : seq) rho = ch.apply(rho);
  EXPECT_LT(purity(rho), 0.5);
}
