#pragma once

// Random strain paths (drift + noise walk on the unit 6-sphere) and complete
// dataset input records.

#include "sfrc/microstructure.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <vector>

namespace sfrc {

/// Rows are steps, columns plain tensor components (11, 22, 33, 23, 13, 12).
using Series6 = Eigen::Matrix<double, Eigen::Dynamic, 6, Eigen::RowMajor>;

struct PathGenParams {
  int steps = 200;  // N; the path has N + 1 rows
  int n1 = 1;       // number of drift directions
  int n2 = 200;     // steps per drift direction
  double gamma = 0.5;
  double eps_max = 0.03;
  double p_uniaxial_strain = 0.0;

  void validate() const;
};

Eigen::Matrix<double, 6, 1> sample_unit_6vector(Rng& rng);

/// Row 0 is the origin; the largest |component| over the path equals eps_max.
Series6 generate_path(const PathGenParams& params, Rng& rng);

std::vector<SymTensor2> to_tensors(const Series6& series);
Series6 from_tensors(const std::vector<SymTensor2>& tensors);

struct GenerationConfig {
  int steps = 200;
  std::vector<int> n1_set{1, 2, 5, 10, 20, 25, 50, 100, 200};
  std::array<double, 2> gamma_range{0.0, 1.0};
  std::array<double, 2> eps_max_range{0.01, 0.05};
  double p_uniaxial_strain = 0.1;
  double p_uniaxial_fibers = 0.1;
  std::array<double, 2> vf_range{0.10, 0.15};
  std::uint64_t sample_count = 2000;
  std::uint64_t master_seed = 20230101;

  void validate() const;
};

enum class RecordStatus : std::uint8_t { kOk = 0, kFailed = 1, kPending = 2 };

struct SampleRecord {
  std::uint64_t seed = 0;
  Series6 strain;
  OrientationTensor orientation;
  double volume_fraction = 0.0;
  Series6 stress;  // empty until simulated
  RecordStatus status = RecordStatus::kPending;
};

/// Per-record seed derived from (master seed, record index).
std::uint64_t record_seed(std::uint64_t master_seed, std::uint64_t index);

/// Draws one record's inputs from a generator seeded with `seed`.
SampleRecord assemble_inputs(const GenerationConfig& config, std::uint64_t seed);

/// Network input features per step: 6 strain components, the orientation tensor
/// (a11, a22, a33, a12, a13, a23) and v_F — 13 columns.
constexpr int kFeatureCount = 13;
Eigen::MatrixXd input_features(const Series6& strain, const OrientationTensor& a, double volume_fraction);

}  // namespace sfrc
