#include "doctest.h"
#include "support.hpp"

#include "sfrc/homogenize.hpp"
#include "sfrc/microstructure.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace sfrc;

TEST_CASE("simplex eigenvalues") {
  CHECK((eigenvalues_from_cuts(0.3, 0.7) - Vec3(0.3, 0.4, 0.3)).norm() < 1e-15);
  CHECK((eigenvalues_from_cuts(0.7, 0.3) - Vec3(0.3, 0.4, 0.3)).norm() < 1e-15);
  CHECK((eigenvalues_from_cuts(0.5, 0.5) - Vec3(0.5, 0.0, 0.5)).norm() < 1e-15);

  Rng rng(1);
  Vec3 mean = Vec3::Zero();
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Vec3 l = sample_eigenvalues(rng);
    CHECK(l.minCoeff() >= 0.0);
    CHECK(std::abs(l.sum() - 1.0) < 1e-15);
    mean += l;
  }
  mean /= n;
  CHECK((mean - Vec3::Constant(1.0 / 3)).cwiseAbs().maxCoeff() < 0.01);
}

TEST_CASE("Arvo rotation") {
  const Rotation r = arvo_rotation(0.0, 0.3, 0.0);  // v = e3
  CHECK((r.matrix() - Mat3(Vec3(-1, -1, 1).asDiagonal())).cwiseAbs().maxCoeff() < 1e-15);

  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const Mat3 m = sample_rotation(rng).matrix();
    CHECK((m * m.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(m.determinant() - 1.0) < 1e-12);
  }
}

TEST_CASE("rotation image of the z-axis is uniform on the sphere") {
  // Equal-area bins: 10 bands in z (Archimedes) times 20 sectors in azimuth.
  constexpr int nz = 10, nphi = 20, draws = 100000;
  std::vector<int> counts(nz * nphi, 0);
  Rng rng(2024);
  for (int i = 0; i < draws; ++i) {
    const Vec3 d = sample_rotation(rng).matrix() * Vec3::UnitZ();
    const int iz = std::min(nz - 1, int((d.z() + 1.0) / 2.0 * nz));
    const double phi = std::atan2(d.y(), d.x()) + std::numbers::pi;
    const int ip = std::min(nphi - 1, int(phi / (2 * std::numbers::pi) * nphi));
    ++counts[iz * nphi + ip];
  }
  const double expected = double(draws) / counts.size();
  double chi2 = 0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  const boost::math::chi_squared dist(counts.size() - 1);
  CHECK(chi2 < boost::math::quantile(dist, 0.99));
}

TEST_CASE("orientation tensor sampling") {
  // Uniaxial branch with the identity-like rotation diag(-1,-1,1).
  const Mat3 r = arvo_rotation(0.0, 0.0, 0.0).matrix();
  const Mat3 a1 = r * Vec3(1, 0, 0).asDiagonal() * r.transpose();
  CHECK((OrientationTensor(a1).matrix() - Mat3(Vec3(1, 0, 0).asDiagonal())).norm() < 1e-15);

  Rng rng(7);
  Mat3 mean = Mat3::Zero();
  const int n = 100000;
  int uniaxial = 0;
  for (int i = 0; i < n; ++i) {
    Rng replay = rng;
    const bool is_uni = std::uniform_real_distribution<double>(0, 1)(replay) < 0.1;
    const Vec3 lambda = is_uni ? Vec3(1, 0, 0) : sample_eigenvalues(replay);
    const OrientationTensor a = sample_orientation_tensor(rng, 0.1);
    const Mat3& m = a.matrix();
    CHECK(std::abs(m.trace() - 1.0) < 1e-12);
    CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const Vec3 ev = a.eigenvalues();
    CHECK(ev.minCoeff() >= -1e-12);
    Vec3 sorted = lambda;
    std::sort(sorted.data(), sorted.data() + 3);
    CHECK((ev - sorted).cwiseAbs().maxCoeff() < 1e-10);
    uniaxial += is_uni;
    mean += m;
  }
  mean /= n;
  CHECK((mean - Mat3::Identity() / 3).cwiseAbs().maxCoeff() < 0.01);
  CHECK(std::abs(uniaxial / double(n) - 0.1) < 0.005);
  CHECK_THROWS_AS(sample_orientation_tensor(rng, 1.5), std::invalid_argument);
}

TEST_CASE("orientation tensor validation") {
  CHECK_THROWS_AS(OrientationTensor{Mat3::Identity()}, std::invalid_argument);
  CHECK_THROWS_AS(OrientationTensor::from_components({1.2, -0.2, 0, 0, 0, 0}), std::invalid_argument);
  // Tiny negative eigenvalues are clamped.
  const OrientationTensor t = OrientationTensor::from_components({1.0 + 5e-10, -5e-10, 0, 0, 0, 0});
  CHECK(t.eigenvalues().minCoeff() >= 0.0);
  // Rounded tabulated values with a slightly negative eigenvalue are projected.
  Mat3 rounded;
  rounded << 0.000, 0.015, 0.005, 0.015, 0.919, 0.273, 0.005, 0.273, 0.081;
  CHECK_THROWS_AS(OrientationTensor{rounded}, std::invalid_argument);
  const OrientationTensor projected = OrientationTensor::nearest_valid(rounded);
  CHECK(projected.eigenvalues().minCoeff() >= 0.0);
  CHECK(std::abs(projected.matrix().trace() - 1.0) < 1e-12);
  CHECK((projected.matrix() - rounded).cwiseAbs().maxCoeff() < 2e-3);
}

TEST_CASE("hybrid closure") {
  const SymTensor4 uni = closure_a4(OrientationTensor::from_components({1, 0, 0, 0, 0, 0}));
  Mat6 expect = Mat6::Zero();
  expect(0, 0) = 1.0;
  CHECK((uni.mandel() - expect).cwiseAbs().maxCoeff() < 1e-15);

  // Isotropic: exact fourth moment of the uniform distribution.
  const SymTensor4 iso = closure_a4(OrientationTensor());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          auto dl = [](int a, int b) { return a == b ? 1.0 : 0.0; };
          const double exact = (dl(i, j) * dl(k, l) + dl(i, k) * dl(j, l) + dl(i, l) * dl(j, k)) / 15.0;
          CHECK(iso.component(i, j, k, l) == doctest::Approx(exact).epsilon(1e-13));
        }

  Rng rng(3);
  for (int n = 0; n < 500; ++n) {
    const OrientationTensor a = sample_orientation_tensor(rng, 0.1);
    const SymTensor4 a4 = closure_a4(a);
    CHECK(a4.is_major_symmetric(1e-14));
    const Vec6 contracted = a4.mandel() * SymTensor2::identity().mandel();
    CHECK((contracted - a.as_tensor().mandel()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("orientation average") {
  const SymTensor4 cm = isotropic_stiffness(3100, 0.35);
  const SymTensor4 cf = isotropic_stiffness(76000, 0.22);
  const SymTensor4 ud = mt_tangent_ud(cm, cf, 0.12, 24.0);

  const OrientationTensor aligned = OrientationTensor::from_components({1, 0, 0, 0, 0, 0});
  CHECK(sfrc::testing::rel_diff(orientation_average(ud, aligned).mandel(), ud.mandel()) < 1e-14);
  CHECK(sfrc::testing::rel_diff(orientation_average(cm, OrientationTensor()).mandel(), cm.mandel()) < 1e-14);

  const SymTensor4 avg = orientation_average(ud, OrientationTensor());
  CHECK((avg.mandel() - isotropize(avg).mandel()).norm() / avg.mandel().norm() < 1e-8);

  // Non transversely isotropic input is rejected.
  Mat6 bad = ud.mandel();
  bad(1, 1) += 10.0;
  CHECK_THROWS_AS(orientation_average(SymTensor4(bad), OrientationTensor()), std::invalid_argument);

  Rng rng(5);
  const SymTensor4 ud2 = mt_tangent_ud(cm, cf, 0.3, 5.0);
  for (int n = 0; n < 200; ++n) {
    const OrientationTensor a = sample_orientation_tensor(rng, 0.1);
    const OrientationAverager avg_a(a);
    // Linearity.
    const Mat6 lin = avg_a(SymTensor4(2.0 * ud.mandel() - 0.5 * ud2.mandel())).mandel();
    CHECK(sfrc::testing::rel_diff(lin, 2.0 * avg_a(ud).mandel() - 0.5 * avg_a(ud2).mandel()) < 1e-12);
    // Equivariance under rotation of the orientation state.
    const Rotation q = sample_rotation(rng);
    const OrientationTensor ra(q.matrix() * a.matrix() * q.matrix().transpose());
    const Mat6 lhs = rotate4(avg_a(ud), q).mandel();
    CHECK(sfrc::testing::rel_diff(lhs, orientation_average(ud, ra).mandel()) < 1e-9);
  }
}
