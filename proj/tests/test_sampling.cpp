#include "doctest.h"

#include "sfrc/homogenize.hpp"
#include "sfrc/sampling.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <set>

using namespace sfrc;

namespace {

// Independent replay of the walk: same draws, normalized first by the L2 norm
// of the endpoint, then by the peak component.
Series6 replay_path(const PathGenParams& p, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const bool uniaxial = u01(rng) < p.p_uniaxial_strain;
  const int keep = uniaxial ? std::uniform_int_distribution<int>(0, 5)(rng) : -1;
  std::vector<Eigen::Matrix<double, 6, 1>> drift, noise;
  for (int d = 0; d < p.n1; ++d) drift.push_back(sample_unit_6vector(rng));
  for (int k = 0; k < p.steps; ++k) noise.push_back(sample_unit_6vector(rng));
  Series6 out = Series6::Zero(p.steps + 1, 6);
  for (int k = 0; k < p.steps; ++k) {
    Eigen::Matrix<double, 6, 1> step = drift[k / p.n2] + p.gamma * noise[k];
    if (uniaxial)
      for (int c = 0; c < 6; ++c)
        if (c != keep) step(c) = 0.0;
    out.row(k + 1) = out.row(k) + step.transpose();
  }
  out /= out.row(p.steps).norm() + 1.0;
  out *= p.eps_max / out.cwiseAbs().maxCoeff();
  return out;
}

}  // namespace

TEST_CASE("unit 6-vectors are uniform on the sphere") {
  Rng rng(1);
  const int n = 100000;
  Eigen::Matrix<double, 6, 1> mean = Eigen::Matrix<double, 6, 1>::Zero();
  Eigen::Matrix<double, 6, 6> cov = Eigen::Matrix<double, 6, 6>::Zero();
  for (int i = 0; i < n; ++i) {
    const auto v = sample_unit_6vector(rng);
    CHECK(std::abs(v.norm() - 1.0) <= 1e-12);
    mean += v;
    cov += v * v.transpose();
  }
  mean /= n;
  cov /= n;
  CHECK(mean.cwiseAbs().maxCoeff() < 0.01);
  CHECK((cov - Eigen::Matrix<double, 6, 6>::Identity() / 6.0).cwiseAbs().maxCoeff() < 0.01);
}

TEST_CASE("strain path generation") {
  SUBCASE("no noise, single drift is a straight ramp") {
    Rng rng(3);
    PathGenParams p{200, 1, 200, 0.0, 0.03, 0.0};
    const Series6 path = generate_path(p, rng);
    CHECK(path.rows() == 201);
    CHECK(path.row(0).isZero(0.0));
    for (int k = 0; k <= 200; ++k)
      CHECK((path.row(k) - path.row(200) * (k / 200.0)).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(std::abs(path.row(200).cwiseAbs().maxCoeff() - 0.03) <= 1e-12);
  }
  SUBCASE("drift blocks") {
    Rng rng(4);
    PathGenParams p{6, 2, 3, 0.0, 0.02, 0.0};
    const Series6 path = generate_path(p, rng);
    const auto d = [&](int k) { return Eigen::Matrix<double, 1, 6>(path.row(k) - path.row(k - 1)); };
    CHECK((d(2) - d(1)).norm() <= 1e-15);
    CHECK((d(3) - d(1)).norm() <= 1e-15);
    CHECK((d(5) - d(4)).norm() <= 1e-15);
    CHECK((d(6) - d(4)).norm() <= 1e-15);
    CHECK((d(4) - d(1)).norm() > 1e-6);
  }
  SUBCASE("piecewise linear with n1 directions when gamma = 0") {
    Rng rng(5);
    PathGenParams p{200, 10, 20, 0.0, 0.04, 0.0};
    const Series6 path = generate_path(p, rng);
    int changes = 0;
    for (int k = 2; k <= 200; ++k)
      if ((path.row(k) - 2 * path.row(k - 1) + path.row(k - 2)).cwiseAbs().maxCoeff() > 1e-13) ++changes;
    CHECK(changes == 9);
  }
  SUBCASE("rescaling contract, determinism and shape invariance") {
    Rng pick(6);
    for (int i = 0; i < 200; ++i) {
      const int n1s[] = {1, 2, 5, 10, 20, 25, 50, 100, 200};
      PathGenParams p;
      p.n1 = n1s[i % 9];
      p.n2 = 200 / p.n1;
      p.gamma = std::uniform_real_distribution<double>(0, 1)(pick);
      p.eps_max = std::uniform_real_distribution<double>(0.01, 0.05)(pick);
      p.p_uniaxial_strain = 0.3;
      Rng a(100 + i), b(100 + i);
      const Series6 pa = generate_path(p, a);
      const Series6 pb = generate_path(p, b);
      CHECK((pa - pb).cwiseAbs().maxCoeff() == 0.0);
      CHECK(pa.row(0).isZero(0.0));
      CHECK(std::abs(pa.cwiseAbs().maxCoeff() - p.eps_max) <= 1e-12);
      CHECK((pa - replay_path(p, 100 + i)).cwiseAbs().maxCoeff() <= 1e-14);
    }
  }
  SUBCASE("uniaxial branch keeps one component") {
    Rng rng(7);
    PathGenParams p{200, 5, 40, 0.7, 0.02, 1.0};
    const Series6 path = generate_path(p, rng);
    int nonzero = 0;
    for (int c = 0; c < 6; ++c) nonzero += !path.col(c).isZero(0.0);
    CHECK(nonzero == 1);
  }
  SUBCASE("invalid parameters") {
    Rng rng(8);
    CHECK_THROWS_AS(generate_path(PathGenParams{200, 3, 66, 0.5, 0.02, 0.0}, rng), std::invalid_argument);
    CHECK_THROWS_AS(generate_path(PathGenParams{200, 1, 200, 1.5, 0.02, 0.0}, rng), std::invalid_argument);
    CHECK_THROWS_AS(generate_path(PathGenParams{200, 1, 200, 0.5, 0.0, 0.0}, rng), std::invalid_argument);
  }
}

TEST_CASE("record assembly statistics") {
  GenerationConfig cfg;
  cfg.steps = 20;
  cfg.n1_set = {1, 2, 5, 10, 20};
  const int n = 100000;
  double vf = 0.0;
  int uniaxial = 0;
  std::set<std::uint64_t> seeds;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t s = record_seed(cfg.master_seed, i);
    seeds.insert(s);
    const SampleRecord r = assemble_inputs(cfg, s);
    vf += r.volume_fraction;
    CHECK(r.volume_fraction >= 0.10);
    CHECK(r.volume_fraction <= 0.15);
    const double peak = r.strain.cwiseAbs().maxCoeff();
    CHECK(peak >= 0.01);
    CHECK(peak <= 0.05);
    int nonzero = 0;
    for (int c = 0; c < 6; ++c) nonzero += !r.strain.col(c).isZero(0.0);
    uniaxial += nonzero == 1;
  }
  CHECK(seeds.size() == static_cast<std::size_t>(n));
  CHECK(std::abs(vf / n - 0.125) < 0.001);
  CHECK(std::abs(uniaxial / double(n) - 0.10) < 0.005);
}

TEST_CASE("record assembly determinism and admissible n1") {
  GenerationConfig cfg;
  cfg.steps = 2000;
  CHECK_NOTHROW(cfg.validate());
  for (int n1 : cfg.n1_set) CHECK(2000 % n1 == 0);
  cfg.steps = 200;
  const SampleRecord a = assemble_inputs(cfg, 42), b = assemble_inputs(cfg, 42);
  CHECK((a.strain - b.strain).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.orientation.matrix() - b.orientation.matrix()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.volume_fraction == b.volume_fraction);
  cfg.n1_set = {3};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  const Eigen::MatrixXd x = input_features(a.strain, a.orientation, a.volume_fraction);
  CHECK(x.cols() == kFeatureCount);
  CHECK(x.rows() == 201);
  CHECK((x.leftCols<6>() - Eigen::MatrixXd(a.strain)).norm() == 0.0);
  CHECK(x(200, 12) == a.volume_fraction);
  CHECK((from_tensors(to_tensors(a.strain)) - a.strain).cwiseAbs().maxCoeff() <= 1e-17);
}

TEST_CASE("timing probe" * doctest::skip()) {
  GenerationConfig cfg;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 10; ++i) {
    const SampleRecord r = assemble_inputs(cfg, record_seed(1, i));
    Microstructure m;
    m.orientation = r.orientation;
    m.volume_fraction = r.volume_fraction;
    const MeanFieldModel model(m, MatrixParams{});
    run_strain_history(to_tensors(r.strain), model);
  }
  MESSAGE("per record ms: " << std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() / 10);
}
