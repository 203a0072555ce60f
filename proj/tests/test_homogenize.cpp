#include "doctest.h"
#include "support.hpp"

#include "sfrc/homogenize.hpp"

#include <cmath>

using namespace sfrc;
using sfrc::testing::rel_diff;

namespace {

const MatrixParams kMatrix{};
const FiberParams kFiber{};

Microstructure micro(const OrientationTensor& a, double vf) {
  Microstructure m;
  m.orientation = a;
  m.volume_fraction = vf;
  return m;
}

OrientationTensor aligned() { return OrientationTensor::from_components({1, 0, 0, 0, 0, 0}); }

bool is_psd(const Mat6& m, double tol) {
  Eigen::SelfAdjointEigenSolver<Mat6> es(0.5 * (m + m.transpose()));
  return es.eigenvalues().minCoeff() >= -tol;
}

LoadProgram uniaxial(int axis, const std::vector<double>& wave, double amp) {
  LoadProgram p;
  p.controls[axis].kind = ComponentControl::Kind::kStrain;
  for (double w : wave) p.controls[axis].values.push_back(amp * w);
  return p;
}

}  // namespace

TEST_CASE("isotropize") {
  const SymTensor4 cm = isotropic_stiffness(3100, 0.35);
  CHECK(rel_diff(isotropize(cm).mandel(), cm.mandel()) < 1e-15);
  const auto parts = isotropic_parts(cm);
  CHECK(parts.bulk == doctest::Approx(3444.4444).epsilon(1e-7));
  CHECK(parts.shear == doctest::Approx(1148.1481).epsilon(1e-7));

  const ReturnMapResult r = return_map(MatrixState{}, SymTensor2::diag(0.02, -0.01, -0.01), kMatrix);
  REQUIRE(r.plastic);
  const auto plastic = isotropic_parts(r.tangent);
  CHECK(plastic.shear < parts.shear);
  CHECK(plastic.bulk == doctest::Approx(parts.bulk));
  const SymTensor4 twice = isotropize(isotropize(r.tangent));
  CHECK(rel_diff(twice.mandel(), isotropize(r.tangent).mandel()) < 1e-14);
}

TEST_CASE("unidirectional Mori-Tanaka tangent") {
  const SymTensor4 cm = isotropic_stiffness(3100, 0.35);
  const SymTensor4 cf = isotropic_stiffness(76000, 0.22);
  CHECK(rel_diff(mt_tangent_ud(cm, cf, 0.0, 24.0).mandel(), cm.mandel()) == 0.0);
  CHECK(rel_diff(mt_tangent_ud(cm, cf, 1.0 - 1e-10, 24.0).mandel(), cf.mandel()) < 1e-6);

  const double v = 0.12;
  const SymTensor4 c = mt_tangent_ud(cm, cf, v, 24.0);
  CHECK(c.is_major_symmetric(1e-12));
  const Mat6 voigt = v * cf.mandel() + (1 - v) * cm.mandel();
  const Mat6 reuss = (v * cf.mandel().inverse() + (1 - v) * cm.mandel().inverse()).inverse();
  CHECK(is_psd(voigt - c.mandel(), 1e-9 * voigt.norm()));
  CHECK(is_psd(c.mandel() - reuss, 1e-9 * voigt.norm()));
  // Axial stiffening dominates for long fibers.
  const Mat6 compliance = c.mandel().inverse();
  CHECK(1 / compliance(0, 0) > 1 / compliance(1, 1));
  CHECK_NOTHROW(transverse_coefficients(c));

  CHECK_THROWS_AS(mt_tangent_ud(c, cf, 0.1, 24.0), std::invalid_argument);
}

TEST_CASE("mean-field step: elastic consistency") {
  Rng rng(4);
  for (int n = 0; n < 20; ++n) {
    const Microstructure m = micro(sample_orientation_tensor(rng, 0.1), 0.10 + 0.05 * n / 20.0);
    const MeanFieldModel model(m, kMatrix);
    const SymTensor4 expected = OrientationAverager(m.orientation)(
        mt_tangent_ud(isotropic_stiffness(3100, 0.35), isotropic_stiffness(76000, 0.22),
                      m.volume_fraction, 24.0));
    CHECK(rel_diff(model.elastic_stiffness().mandel(), expected.mandel()) < 1e-12);

    const StepResult zero = model.step(CompositeState{}, SymTensor2());
    CHECK(zero.state.stress.norm() == 0.0);

    const SymTensor2 e = SymTensor2::diag(1e-3, -4e-4, -4e-4);
    const StepResult r = model.step(CompositeState{}, e);
    CHECK(!r.plastic);
    CHECK((r.state.stress.mandel() - expected.mandel() * e.mandel()).norm() <=
          1e-8 * r.state.stress.norm());
    CHECK(rel_diff(r.tangent.mandel(), expected.mandel()) < 1e-10);
  }
}

TEST_CASE("mean-field step: phase averages and consistent tangent") {
  Rng rng(8);
  std::mt19937_64 trng(9);
  int plastic = 0;
  for (int n = 0; n < 40; ++n) {
    const Microstructure m = micro(sample_orientation_tensor(rng, 0.2), 0.12);
    const MeanFieldModel model(m, kMatrix);
    CompositeState s = model.step(CompositeState{}, sfrc::testing::random_sym(trng, 0.01)).state;
    const SymTensor2 target = s.strain + sfrc::testing::random_sym(trng, n % 4 == 0 ? 1e-4 : 3e-3);
    const StepResult r = model.step(s, target);
    plastic += r.plastic;

    const Vec6 avg = 0.12 * r.state.fiber_strain.mandel() + 0.88 * r.state.matrix.strain.mandel();
    CHECK((avg - target.mandel()).cwiseAbs().maxCoeff() <= 1e-9);

    Mat6 fd;
    const double h = 1e-7;
    for (int b = 0; b < 6; ++b) {
      Vec6 p = target.mandel(), q = target.mandel();
      p(b) += h;
      q(b) -= h;
      fd.col(b) = (model.step(s, SymTensor2(p)).state.stress.mandel() -
                   model.step(s, SymTensor2(q)).state.stress.mandel()) /
                  (2 * h);
    }
    CAPTURE(n);
    CHECK(rel_diff(r.tangent.mandel(), fd) <= 1e-5);
  }
  CHECK(plastic > 20);
}

TEST_CASE("mean-field step: anisotropy of aligned fibers") {
  const MeanFieldModel model(micro(aligned(), 0.12), kMatrix);
  const auto wave = cycle_waveform(1, 50);
  std::vector<double> ramp(wave.begin(), wave.begin() + 51);
  const ProgramResult along = run_program(uniaxial(0, ramp, 0.03), model);
  const ProgramResult across = run_program(uniaxial(1, ramp, 0.03), model);
  CHECK(along.stress[1].mandel()(0) > across.stress[1].mandel()(1));
  CHECK(along.stress.back().mandel()(0) > across.stress.back().mandel()(1));
}

TEST_CASE("mixed control driver") {
  const auto wave = cycle_waveform(1, 50);
  SUBCASE("all strain controlled reduces to steps") {
    const MeanFieldModel model(micro(OrientationTensor(), 0.12), kMatrix);
    std::vector<SymTensor2> path;
    for (double w : wave) path.push_back(SymTensor2::from_components({0.02 * w, -0.01 * w, 0.004 * w, 0, 0.01 * w, 0}));
    const ProgramResult a = run_program(LoadProgram::strain_controlled(path), model);
    const ProgramResult b = run_strain_history(path, model);
    for (std::size_t k = 0; k < path.size(); ++k)
      CHECK((a.stress[k] - b.stress[k]).norm() == 0.0);
  }
  SUBCASE("uniaxial stress cycle on tabulated samples") {
    const std::vector<std::array<double, 6>> samples = {
        {0.477, 0.188, 0.335, -0.080, -0.071, -0.183}, {0.094, 0.692, 0.214, -0.103, 0.012, -0.255},
        {0.649, 0.139, 0.212, 0.011, -0.117, -0.154},  {0.392, 0.225, 0.382, -0.142, 0.080, 0.152},
        {0.000, 0.919, 0.081, 0.015, 0.005, 0.273}};
    for (const auto& c : samples) {
      Mat3 a;
      a << c[0], c[3], c[4], c[3], c[1], c[5], c[4], c[5], c[2];
      const MeanFieldModel model(micro(OrientationTensor::nearest_valid(a), 0.13), kMatrix);
      const ProgramResult r = run_program(uniaxial(0, wave, 0.035), model);
      for (const auto& s : r.stress)
        for (int i = 1; i < 6; ++i) CHECK(std::abs(s.mandel()(i)) <= 1e-6 * 25.0);
      // Elastic unloading slope after the peak equals the initial slope.
      const double e0 = (r.stress[1].mandel()(0)) / (r.strain[1].mandel()(0));
      const double eu = (r.stress[52].mandel()(0) - r.stress[51].mandel()(0)) /
                        (r.strain[52].mandel()(0) - r.strain[51].mandel()(0));
      const double ep = (r.stress[50].mandel()(0) - r.stress[49].mandel()(0)) /
                        (r.strain[50].mandel()(0) - r.strain[49].mandel()(0));
      CHECK(std::abs(eu - e0) <= 0.01 * e0);
      CHECK(ep < 0.5 * e0);
      // Hysteresis: stress at zero strain after the full cycle is compressive-offset.
      CHECK(std::abs(r.stress.back().mandel()(0)) > 1.0);
    }
  }
  SUBCASE("pure shear on isotropic orientation") {
    const MeanFieldModel model(micro(OrientationTensor(), 0.12), kMatrix);
    const ProgramResult r = run_program(uniaxial(5, wave, 0.035), model);
    for (const auto& s : r.stress)
      for (int i = 0; i < 5; ++i) CHECK(std::abs(s.mandel()(i)) <= 1e-6 * 25.0);
    CHECK(std::abs(r.stress[50].mandel()(5)) > 10.0);
  }
  SUBCASE("isotropic orientation responds identically along every axis") {
    const MeanFieldModel model(micro(OrientationTensor(), 0.12), kMatrix);
    std::vector<double> eq[3];
    for (int axis = 0; axis < 3; ++axis) {
      const ProgramResult r = run_program(uniaxial(axis, wave, 0.035), model);
      for (const auto& s : r.stress) eq[axis].push_back(s.mandel()(axis));
    }
    for (std::size_t k = 0; k < wave.size(); ++k) {
      CHECK(std::abs(eq[1][k] - eq[0][k]) <= 1e-6 * std::max(1.0, std::abs(eq[0][k])));
      CHECK(std::abs(eq[2][k] - eq[0][k]) <= 1e-6 * std::max(1.0, std::abs(eq[0][k])));
    }
  }
  SUBCASE("over-constrained or empty programs are rejected") {
    const MeanFieldModel model(micro(OrientationTensor(), 0.12), kMatrix);
    LoadProgram none;
    CHECK_THROWS_AS(run_program(none, model), std::invalid_argument);
    LoadProgram mismatch = uniaxial(0, wave, 0.01);
    mismatch.controls[1].kind = ComponentControl::Kind::kStrain;
    mismatch.controls[1].values = {0.0, 0.1};
    CHECK_THROWS_AS(run_program(mismatch, model), std::invalid_argument);
  }
}

TEST_CASE("rate independence and dilute limit") {
  const MeanFieldModel model(micro(OrientationTensor(), 0.12), kMatrix);
  const ProgramResult coarse = run_program(uniaxial(0, cycle_waveform(1, 100), 0.035), model);
  const ProgramResult fine = run_program(uniaxial(0, cycle_waveform(1, 200), 0.035), model);
  for (std::size_t k = 0; k < coarse.length(); ++k)
    CHECK(std::abs(coarse.stress[k].mandel()(0) - fine.stress[2 * k].mandel()(0)) <= 0.01 * 25.0);

  const MeanFieldModel dilute(micro(OrientationTensor(), 0.001), kMatrix);
  const MeanFieldModel pure(micro(OrientationTensor(), 0.0), kMatrix);
  const auto wave = cycle_waveform(1, 50);
  const ProgramResult a = run_program(uniaxial(0, wave, 0.035), dilute);
  const ProgramResult b = run_program(uniaxial(0, wave, 0.035), pure);
  double peak = 0;
  for (const auto& s : b.stress) peak = std::max(peak, std::abs(s.mandel()(0)));
  for (std::size_t k = 0; k < wave.size(); ++k)
    CHECK(std::abs(a.stress[k].mandel()(0) - b.stress[k].mandel()(0)) <= 0.01 * peak);
}
