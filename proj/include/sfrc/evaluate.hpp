#pragma once

// Error metrics and the virtual-sample test campaigns comparing a stress
// predictor (the surrogate, or the oracle itself) against the mean-field oracle.

#include "sfrc/homogenize.hpp"
#include "sfrc/sampling.hpp"
#include "sfrc/surrogate.hpp"

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace sfrc {

struct ErrorReport {
  std::array<double, 6> mere{};  // RMS error / sigma_y per component
  std::array<double, 6> mare{};  // max |error| / sigma_y per component
  std::size_t length = 0;
  std::string sample;
  std::string load_case;
  double parameter = 0.0;  // campaign-specific (cycles, resampling factor, v_F, ...)
  double parameter2 = 0.0;

  double mean_mere() const;
  double mean_mare() const;
};

ErrorReport mere_mare(const Series6& pred, const Series6& truth, double sigma_y);

struct VirtualSample {
  std::string label;
  OrientationTensor orientation;
  double volume_fraction = 0.12;
};

/// Samples 1-5 plus 1D, 2D and 3D fiber distributions. The tabulated tensors are
/// rounded to three digits, so each is projected onto the admissible set.
std::vector<VirtualSample> virtual_samples();
VirtualSample virtual_sample(const std::string& label);

/// Linear reinterpolation on uniform pseudo-time to round(factor * steps) steps.
Series6 resample_series(const Series6& series, double factor);

class StressPredictor {
 public:
  virtual ~StressPredictor() = default;
  virtual Series6 predict(const Series6& strain, const OrientationTensor& a, double volume_fraction) const = 0;
  virtual std::string name() const = 0;
};

class SurrogatePredictor : public StressPredictor {
 public:
  explicit SurrogatePredictor(const GruModel& model) : model_(model) {}
  Series6 predict(const Series6& strain, const OrientationTensor& a, double volume_fraction) const override;
  std::string name() const override { return "surrogate"; }

 private:
  const GruModel& model_;
};

enum class LoadCase { kUniaxial11, kShear12, kBiaxial11_22, kBiaxial11_23, kPlaneStrain };
const std::vector<LoadCase>& all_load_cases();
std::string to_string(LoadCase c);

/// Cycle 0 -> eps_c -> -eps_c -> 0 on the controlled components (equal
/// amplitudes for biaxial cases); uncontrolled components are stress free. The
/// plane-strain case cycles eps11, holds eps33 = eps13 = eps23 = 0 and leaves
/// eps22 and eps12 stress free.
LoadProgram load_case_program(LoadCase c, double eps_c, int cycles, int steps_per_quarter);

struct OracleConfig {
  MatrixParams matrix;
  FiberParams fiber;
  HomogenizerOptions homogenizer;
  DriverOptions driver;
};

/// Replays the full strain history through the mean-field model.
class OraclePredictor : public StressPredictor {
 public:
  explicit OraclePredictor(OracleConfig config) : config_(std::move(config)) {}
  Series6 predict(const Series6& strain, const OrientationTensor& a, double volume_fraction) const override;
  std::string name() const override { return "oracle"; }

 private:
  OracleConfig config_;
};

struct CaseResult {
  ErrorReport report;
  Series6 strain;
  Series6 truth;
  Series6 prediction;
};

struct CampaignOptions {
  int steps_per_quarter = 50;
  double eps_c_one_cycle = 0.035;
  double eps_c_cyclic = 0.04;
  int max_cycles = 5;
  std::vector<double> vf_grid{0.001, 0.025, 0.05, 0.075, 0.10, 0.125, 0.15, 0.175, 0.20};
  std::vector<double> eps_c_grid{0.05, 0.075, 0.10};
  std::vector<double> resample_factors{0.5, 1.0, 2.0};
};

/// Runs the oracle under mixed control, then evaluates `model` on the oracle's
/// full strain series.
CaseResult run_case(const StressPredictor& model, const OracleConfig& oracle, const VirtualSample& sample,
                    const LoadProgram& program, const std::string& case_name, double sigma_y);

/// Five load cases on each sample, one cycle at eps_c_one_cycle.
std::vector<CaseResult> one_cycle_campaign(const StressPredictor& model, const OracleConfig& oracle,
                                           const std::vector<VirtualSample>& samples,
                                           const CampaignOptions& opts = {});

/// Uniaxial sigma_11 cycles 1..max_cycles at eps_c_cyclic.
std::vector<CaseResult> cyclic_campaign(const StressPredictor& model, const OracleConfig& oracle,
                                        const std::vector<VirtualSample>& samples, const CampaignOptions& opts = {});

/// 3D sample, one uniaxial cycle over vf_grid x eps_c_grid.
std::vector<CaseResult> extrapolation_campaign(const StressPredictor& model, const OracleConfig& oracle,
                                               const CampaignOptions& opts = {});

/// Each one-cycle case's strain series resampled by each factor; truth is the
/// oracle replay of the resampled strains.
std::vector<CaseResult> resampling_campaign(const StressPredictor& model, const OracleConfig& oracle,
                                            const std::vector<VirtualSample>& samples,
                                            const CampaignOptions& opts = {});

/// Features of a uniaxial stress-strain loop in one component.
struct LoopFeatures {
  double initial_slope = 0.0;
  double unloading_slope = 0.0;  // right after the first reversal
  double peak_stress = 0.0;
  double knee_strain = 0.0;      // first strain where the secant falls 2% below the initial slope
  int elastic_points = 0;        // leading points used for the initial slope
};

/// `elastic_points` = 0 picks them from the curve (points whose secant stays
/// within 0.5% of the first increment's slope).
LoopFeatures loop_features(const Series6& strain, const Series6& stress, int component, int elastic_points = 0);

void write_series_csv(const std::string& path, const Series6& strain, const Series6& truth,
                      const Series6* prediction = nullptr);
void write_reports_csv(const std::string& path, const std::string& campaign, const std::vector<CaseResult>& results);

}  // namespace sfrc
