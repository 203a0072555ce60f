#include "sfrc/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace sfrc {

double ErrorReport::mean_mere() const {
  double s = 0.0;
  for (double v : mere) s += v;
  return s / 6.0;
}

double ErrorReport::mean_mare() const {
  double s = 0.0;
  for (double v : mare) s += v;
  return s / 6.0;
}

ErrorReport mere_mare(const Series6& pred, const Series6& truth, double sigma_y) {
  if (pred.rows() != truth.rows()) throw std::invalid_argument("mere_mare: series lengths differ");
  if (!(sigma_y > 0.0)) throw std::invalid_argument("mere_mare: sigma_y must be positive");
  ErrorReport r;
  r.length = static_cast<std::size_t>(pred.rows());
  if (pred.rows() == 0) return r;
  const Series6 err = pred - truth;
  for (int c = 0; c < 6; ++c) {
    r.mere[c] = std::sqrt(err.col(c).squaredNorm() / static_cast<double>(err.rows())) / sigma_y;
    r.mare[c] = err.col(c).cwiseAbs().maxCoeff() / sigma_y;
  }
  return r;
}

std::vector<VirtualSample> virtual_samples() {
  struct Row {
    const char* label;
    std::array<double, 7> v;  // a11 a22 a33 a12 a13 a23 vF
  };
  static const Row rows[] = {
      {"1", {0.477, 0.188, 0.335, -0.080, -0.071, -0.183, 0.130}},
      {"2", {0.094, 0.692, 0.214, -0.103, 0.012, -0.255, 0.144}},
      {"3", {0.649, 0.139, 0.212, 0.011, -0.117, -0.154, 0.131}},
      {"4", {0.392, 0.225, 0.382, -0.142, 0.080, 0.152, 0.139}},
      {"5", {0.000, 0.919, 0.081, 0.015, 0.005, 0.273, 0.109}},
      {"1D", {1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.120}},
      {"2D", {0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.120}},
      {"3D", {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0, 0.0, 0.0, 0.120}},
  };
  std::vector<VirtualSample> out;
  for (const Row& r : rows) {
    Mat3 a;
    a << r.v[0], r.v[3], r.v[4], r.v[3], r.v[1], r.v[5], r.v[4], r.v[5], r.v[2];
    out.push_back({r.label, OrientationTensor::nearest_valid(a), r.v[6]});
  }
  return out;
}

VirtualSample virtual_sample(const std::string& label) {
  for (auto& s : virtual_samples())
    if (s.label == label) return s;
  throw std::invalid_argument("virtual_sample: unknown label " + label);
}

Series6 resample_series(const Series6& series, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw std::invalid_argument("resample_series: factor must be positive");
  if (series.rows() < 2) return series;
  const Eigen::Index old_steps = series.rows() - 1;
  const Eigen::Index new_steps = std::max<Eigen::Index>(1, std::llround(factor * static_cast<double>(old_steps)));
  Series6 out(new_steps + 1, 6);
  for (Eigen::Index k = 0; k <= new_steps; ++k) {
    const double s = static_cast<double>(k) * static_cast<double>(old_steps) / static_cast<double>(new_steps);
    const Eigen::Index i = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(s)), old_steps);
    const double f = s - static_cast<double>(i);
    if (f == 0.0 || i == old_steps)
      out.row(k) = series.row(i);
    else
      out.row(k) = (1.0 - f) * series.row(i) + f * series.row(i + 1);
  }
  return out;
}

Series6 SurrogatePredictor::predict(const Series6& strain, const OrientationTensor& a, double volume_fraction) const {
  return model_.predict(input_features(strain, a, volume_fraction));
}

Series6 OraclePredictor::predict(const Series6& strain, const OrientationTensor& a, double volume_fraction) const {
  Microstructure m;
  m.orientation = a;
  m.volume_fraction = volume_fraction;
  m.fiber = config_.fiber;
  const MeanFieldModel model(m, config_.matrix, config_.homogenizer);
  return from_tensors(run_strain_history(to_tensors(strain), model, config_.driver).stress);
}

const std::vector<LoadCase>& all_load_cases() {
  static const std::vector<LoadCase> cases = {LoadCase::kUniaxial11, LoadCase::kShear12, LoadCase::kBiaxial11_22,
                                              LoadCase::kBiaxial11_23, LoadCase::kPlaneStrain};
  return cases;
}

std::string to_string(LoadCase c) {
  switch (c) {
    case LoadCase::kUniaxial11: return "uniaxial_11";
    case LoadCase::kShear12: return "shear_12";
    case LoadCase::kBiaxial11_22: return "biaxial_11_22";
    case LoadCase::kBiaxial11_23: return "biaxial_11_23";
    case LoadCase::kPlaneStrain: return "plane_strain_11_22";
  }
  return "unknown";
}

LoadProgram load_case_program(LoadCase c, double eps_c, int cycles, int steps_per_quarter) {
  const auto wave = cycle_waveform(cycles, steps_per_quarter);
  std::vector<double> cycled, zeros(wave.size(), 0.0);
  for (double w : wave) cycled.push_back(eps_c * w);
  LoadProgram p;
  auto impose = [&](int comp, const std::vector<double>& v) {
    p.controls[comp].kind = ComponentControl::Kind::kStrain;
    p.controls[comp].values = v;
  };
  // Voigt slots: 0=11 1=22 2=33 3=23 4=13 5=12
  switch (c) {
    case LoadCase::kUniaxial11: impose(0, cycled); break;
    case LoadCase::kShear12: impose(5, cycled); break;
    case LoadCase::kBiaxial11_22:
      impose(0, cycled);
      impose(1, cycled);
      break;
    case LoadCase::kBiaxial11_23:
      impose(0, cycled);
      impose(3, cycled);
      break;
    case LoadCase::kPlaneStrain:
      impose(0, cycled);
      impose(2, zeros);
      impose(3, zeros);
      impose(4, zeros);
      break;
  }
  return p;
}

namespace {

Series6 components_series(const ProgramResult& r) {
  Series6 out(static_cast<Eigen::Index>(r.length()), 6);
  for (std::size_t k = 0; k < r.length(); ++k)
    for (int c = 0; c < 6; ++c) out(static_cast<Eigen::Index>(k), c) = r.strain_components[k][c];
  return out;
}

Microstructure to_micro(const VirtualSample& s, const OracleConfig& oracle) {
  Microstructure m;
  m.orientation = s.orientation;
  m.volume_fraction = s.volume_fraction;
  m.fiber = oracle.fiber;
  return m;
}

}  // namespace

CaseResult run_case(const StressPredictor& model, const OracleConfig& oracle, const VirtualSample& sample,
                    const LoadProgram& program, const std::string& case_name, double sigma_y) {
  const MeanFieldModel mf(to_micro(sample, oracle), oracle.matrix, oracle.homogenizer);
  const ProgramResult res = run_program(program, mf, oracle.driver);
  CaseResult out;
  out.strain = components_series(res);
  out.truth = from_tensors(res.stress);
  out.prediction = model.predict(out.strain, sample.orientation, sample.volume_fraction);
  out.report = mere_mare(out.prediction, out.truth, sigma_y);
  out.report.sample = sample.label;
  out.report.load_case = case_name;
  return out;
}

std::vector<CaseResult> one_cycle_campaign(const StressPredictor& model, const OracleConfig& oracle,
                                           const std::vector<VirtualSample>& samples, const CampaignOptions& opts) {
  std::vector<CaseResult> out;
  for (const auto& s : samples)
    for (LoadCase c : all_load_cases()) {
      out.push_back(run_case(model, oracle, s, load_case_program(c, opts.eps_c_one_cycle, 1, opts.steps_per_quarter),
                             to_string(c), oracle.matrix.yield_stress));
      out.back().report.parameter = opts.eps_c_one_cycle;
    }
  return out;
}

std::vector<CaseResult> cyclic_campaign(const StressPredictor& model, const OracleConfig& oracle,
                                        const std::vector<VirtualSample>& samples, const CampaignOptions& opts) {
  std::vector<CaseResult> out;
  for (const auto& s : samples)
    for (int n = 1; n <= opts.max_cycles; ++n) {
      out.push_back(run_case(model, oracle, s,
                             load_case_program(LoadCase::kUniaxial11, opts.eps_c_cyclic, n, opts.steps_per_quarter),
                             to_string(LoadCase::kUniaxial11), oracle.matrix.yield_stress));
      out.back().report.parameter = n;
      out.back().report.parameter2 = opts.eps_c_cyclic;
    }
  return out;
}

std::vector<CaseResult> extrapolation_campaign(const StressPredictor& model, const OracleConfig& oracle,
                                               const CampaignOptions& opts) {
  std::vector<CaseResult> out;
  VirtualSample s = virtual_sample("3D");
  for (double vf : opts.vf_grid)
    for (double eps : opts.eps_c_grid) {
      s.volume_fraction = vf;
      out.push_back(run_case(model, oracle, s, load_case_program(LoadCase::kUniaxial11, eps, 1, opts.steps_per_quarter),
                             to_string(LoadCase::kUniaxial11), oracle.matrix.yield_stress));
      out.back().report.parameter = vf;
      out.back().report.parameter2 = eps;
    }
  return out;
}

std::vector<CaseResult> resampling_campaign(const StressPredictor& model, const OracleConfig& oracle,
                                            const std::vector<VirtualSample>& samples, const CampaignOptions& opts) {
  const OraclePredictor replay(oracle);
  std::vector<CaseResult> out;
  for (const auto& s : samples)
    for (LoadCase c : all_load_cases()) {
      const MeanFieldModel mf(to_micro(s, oracle), oracle.matrix, oracle.homogenizer);
      const Series6 base = components_series(
          run_program(load_case_program(c, opts.eps_c_one_cycle, 1, opts.steps_per_quarter), mf, oracle.driver));
      for (double f : opts.resample_factors) {
        CaseResult r;
        r.strain = resample_series(base, f);
        r.truth = replay.predict(r.strain, s.orientation, s.volume_fraction);
        r.prediction = model.predict(r.strain, s.orientation, s.volume_fraction);
        r.report = mere_mare(r.prediction, r.truth, oracle.matrix.yield_stress);
        r.report.sample = s.label;
        r.report.load_case = to_string(c);
        r.report.parameter = f;
        out.push_back(std::move(r));
      }
    }
  return out;
}

LoopFeatures loop_features(const Series6& strain, const Series6& stress, int component, int elastic_points) {
  if (strain.rows() != stress.rows() || strain.rows() < 3)
    throw std::invalid_argument("loop_features: need matching series of at least 3 points");
  const Eigen::VectorXd e = strain.col(component).array() - strain(0, component);
  const Eigen::VectorXd s = stress.col(component).array() - stress(0, component);
  LoopFeatures f;

  Eigen::Index peak_at = 0;
  strain.col(component).cwiseAbs().maxCoeff(&peak_at);
  f.peak_stress = stress(peak_at, component);

  if (elastic_points <= 0) {
    const double first = s(1) / e(1);
    elastic_points = 1;
    for (Eigen::Index k = 2; k <= peak_at; ++k) {
      if (std::abs(s(k) / e(k) - first) > 0.005 * std::abs(first)) break;
      elastic_points = static_cast<int>(k);
    }
  }
  f.elastic_points = elastic_points;
  // Least squares through the first point over the leading elastic points.
  const auto n = std::min<Eigen::Index>(elastic_points, e.size() - 1);
  f.initial_slope = e.segment(1, n).dot(s.segment(1, n)) / e.segment(1, n).squaredNorm();

  f.knee_strain = strain(peak_at, component);
  for (Eigen::Index k = 1; k <= peak_at; ++k)
    if (std::abs(s(k) / e(k)) < 0.98 * std::abs(f.initial_slope)) {
      f.knee_strain = strain(k, component);
      break;
    }
  if (peak_at + 1 < strain.rows()) {
    const double de = strain(peak_at + 1, component) - strain(peak_at, component);
    f.unloading_slope = (stress(peak_at + 1, component) - stress(peak_at, component)) / de;
  }
  return f;
}

void write_series_csv(const std::string& path, const Series6& strain, const Series6& truth, const Series6* prediction) {
  if (strain.rows() != truth.rows() || (prediction && prediction->rows() != strain.rows()))
    throw std::invalid_argument("write_series_csv: series lengths differ");
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_series_csv: cannot open " + path);
  static const char* names[] = {"11", "22", "33", "23", "13", "12"};
  os << "t";
  for (const char* n : names) os << ",eps" << n;
  for (const char* n : names) os << ",sig" << n;
  if (prediction)
    for (const char* n : names) os << ",pred" << n;
  os << '\n' << std::setprecision(12);
  const Eigen::Index steps = std::max<Eigen::Index>(1, strain.rows() - 1);
  for (Eigen::Index k = 0; k < strain.rows(); ++k) {
    os << static_cast<double>(k) / static_cast<double>(steps);
    for (int c = 0; c < 6; ++c) os << ',' << strain(k, c);
    for (int c = 0; c < 6; ++c) os << ',' << truth(k, c);
    if (prediction)
      for (int c = 0; c < 6; ++c) os << ',' << (*prediction)(k, c);
    os << '\n';
  }
}

void write_reports_csv(const std::string& path, const std::string& campaign, const std::vector<CaseResult>& results) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_reports_csv: cannot open " + path);
  static const char* names[] = {"11", "22", "33", "23", "13", "12"};
  os << "campaign,sample,case,parameter,parameter2,length";
  for (const char* n : names) os << ",mere" << n;
  for (const char* n : names) os << ",mare" << n;
  os << ",mere_mean,mare_mean\n" << std::setprecision(8);
  for (const auto& r : results) {
    const ErrorReport& e = r.report;
    os << campaign << ',' << e.sample << ',' << e.load_case << ',' << e.parameter << ',' << e.parameter2 << ','
       << e.length;
    for (double v : e.mere) os << ',' << v;
    for (double v : e.mare) os << ',' << v;
    os << ',' << e.mean_mere() << ',' << e.mean_mare() << '\n';
  }
}

}  // namespace sfrc
