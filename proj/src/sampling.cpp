#include "sfrc/sampling.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace sfrc {

void PathGenParams::validate() const {
  if (steps < 1 || n1 < 1 || n2 < 1 || n1 * n2 != steps)
    throw std::invalid_argument("PathGenParams: need n1 * n2 = N with all positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("PathGenParams: gamma outside [0, 1]");
  if (!(eps_max > 0.0) || !std::isfinite(eps_max)) throw std::invalid_argument("PathGenParams: eps_max must be positive");
  if (!(p_uniaxial_strain >= 0.0 && p_uniaxial_strain <= 1.0))
    throw std::invalid_argument("PathGenParams: probability outside [0, 1]");
}

Eigen::Matrix<double, 6, 1> sample_unit_6vector(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    Eigen::Matrix<double, 6, 1> v;
    for (int i = 0; i < 6; ++i) v(i) = normal(rng);
    const double n = v.norm();
    if (n > 0.0) return v / n;
  }
}

Series6 generate_path(const PathGenParams& params, Rng& rng) {
  params.validate();
  const int n = params.steps;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const bool uniaxial = u01(rng) < params.p_uniaxial_strain;
  const int keep = uniaxial ? std::uniform_int_distribution<int>(0, 5)(rng) : -1;

  Series6 inc(n, 6);
  for (int d = 0; d < params.n1; ++d) {
    const auto drift = sample_unit_6vector(rng);
    for (int s = 0; s < params.n2; ++s) inc.row(d * params.n2 + s) = drift.transpose();
  }
  for (int k = 0; k < n; ++k) inc.row(k) += params.gamma * sample_unit_6vector(rng).transpose();
  if (uniaxial)
    for (int c = 0; c < 6; ++c)
      if (c != keep) inc.col(c).setZero();

  Series6 path = Series6::Zero(n + 1, 6);
  for (int k = 0; k < n; ++k) path.row(k + 1) = path.row(k) + inc.row(k);

  Eigen::Index r = 0, c = 0;
  const double peak = path.cwiseAbs().maxCoeff(&r, &c);
  if (!(peak > 0.0)) throw std::runtime_error("generate_path: degenerate path");
  path *= params.eps_max / peak;
  path(r, c) = std::copysign(params.eps_max, path(r, c));
  return path;
}

std::vector<SymTensor2> to_tensors(const Series6& series) {
  std::vector<SymTensor2> out;
  out.reserve(series.rows());
  for (Eigen::Index k = 0; k < series.rows(); ++k) {
    std::array<double, 6> c;
    for (int i = 0; i < 6; ++i) c[i] = series(k, i);
    out.push_back(SymTensor2::from_components(c));
  }
  return out;
}

Series6 from_tensors(const std::vector<SymTensor2>& tensors) {
  Series6 out(tensors.size(), 6);
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    const auto c = tensors[k].to_components();
    for (int i = 0; i < 6; ++i) out(k, i) = c[i];
  }
  return out;
}

void GenerationConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("GenerationConfig: N must be positive");
  if (n1_set.empty()) throw std::invalid_argument("GenerationConfig: empty n1 set");
  for (int n1 : n1_set)
    if (n1 < 1 || steps % n1 != 0)
      throw std::invalid_argument("GenerationConfig: every n1 must divide N = " + std::to_string(steps));
  auto check_range = [](const std::array<double, 2>& r, double lo, double hi, const char* what) {
    if (!(r[0] >= lo && r[1] <= hi && r[0] <= r[1]))
      throw std::invalid_argument(std::string("GenerationConfig: invalid ") + what + " range");
  };
  check_range(gamma_range, 0.0, 1.0, "gamma");
  check_range(eps_max_range, 0.0, 1.0, "eps_max");
  if (!(eps_max_range[0] > 0.0)) throw std::invalid_argument("GenerationConfig: eps_max must be positive");
  check_range(vf_range, 0.0, 0.999, "volume fraction");
  if (!(p_uniaxial_strain >= 0.0 && p_uniaxial_strain <= 1.0 && p_uniaxial_fibers >= 0.0 &&
        p_uniaxial_fibers <= 1.0))
    throw std::invalid_argument("GenerationConfig: probability outside [0, 1]");
}

std::uint64_t record_seed(std::uint64_t master_seed, std::uint64_t index) {
  // splitmix64 finalizer over a golden-ratio stride
  std::uint64_t z = master_seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SampleRecord assemble_inputs(const GenerationConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  auto uniform = [&rng](const std::array<double, 2>& r) {
    return r[0] + (r[1] - r[0]) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  };
  PathGenParams p;
  p.steps = config.steps;
  p.gamma = uniform(config.gamma_range);
  p.n1 = config.n1_set[std::uniform_int_distribution<std::size_t>(0, config.n1_set.size() - 1)(rng)];
  p.n2 = config.steps / p.n1;
  p.eps_max = uniform(config.eps_max_range);
  p.p_uniaxial_strain = config.p_uniaxial_strain;

  SampleRecord rec;
  rec.seed = seed;
  rec.strain = generate_path(p, rng);
  rec.orientation = sample_orientation_tensor(rng, config.p_uniaxial_fibers);
  rec.volume_fraction = uniform(config.vf_range);
  return rec;
}

Eigen::MatrixXd input_features(const Series6& strain, const OrientationTensor& a, double volume_fraction) {
  Eigen::MatrixXd x(strain.rows(), kFeatureCount);
  const auto c = a.components();
  x.leftCols<6>() = strain;
  for (int i = 0; i < 6; ++i) x.col(6 + i).setConstant(c[i]);
  x.col(12).setConstant(volume_fraction);
  return x;
}

}  // namespace sfrc
