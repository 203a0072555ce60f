#pragma once

// Constituent laws: linear-elastic fibers and a J2 elasto-plastic matrix with
// linear-exponential isotropic hardening, integrated by radial return.

#include "sfrc/tensor.hpp"

#include <stdexcept>
#include <string>

namespace sfrc {

struct MatrixParams {
  double youngs = 3100.0;  // MPa
  double poisson = 0.35;
  double yield_stress = 25.0;         // MPa
  double linear_hardening = 150.0;    // H, MPa
  double saturation_hardening = 20.0; // H_inf, MPa
  double hardening_exponent = 325.0;  // m

  void validate() const;
};

struct FiberParams {
  double youngs = 76000.0;  // MPa
  double poisson = 0.22;
  double aspect_ratio = 24.0;  // l / d = 240 um / 10 um

  void validate() const;
};

/// Path-dependent matrix state. `strain` is the last converged total strain.
struct MatrixState {
  SymTensor2 strain;
  SymTensor2 plastic_strain;
  double accumulated_plastic_strain = 0.0;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double hardening_stress(double p, const MatrixParams& params);
/// d(kappa)/dp
double hardening_modulus(double p, const MatrixParams& params);
/// d2(kappa)/dp2
double hardening_curvature(double p, const MatrixParams& params);

double yield_function(const SymTensor2& stress, double p, const MatrixParams& params);

struct ReturnMapResult {
  SymTensor2 stress;
  MatrixState state;
  SymTensor4 tangent;
  bool plastic = false;
  double plastic_increment = 0.0;  // delta p
  double trial_equivalent_stress = 0.0;
  SymTensor2 flow_direction;  // unit Mandel normal of the trial deviator
  int iterations = 0;
};

struct ReturnMapOptions {
  int max_iterations = 50;
  double residual_tol = 1e-10;  // times sigma_y
  double yield_tol = 1e-8;      // times sigma_y
};

/// Implicit radial return for the strain increment `d_strain` applied to `state`.
ReturnMapResult return_map(const MatrixState& state, const SymTensor2& d_strain,
                           const MatrixParams& params, const ReturnMapOptions& opts = {});

SymTensor2 fiber_stress(const SymTensor2& strain, const FiberParams& params);

}  // namespace sfrc
