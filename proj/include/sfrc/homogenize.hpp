#pragma once

// Incremental Mori-Tanaka homogenization of an elastic-fiber / elasto-plastic
// matrix composite with orientation averaging, and a mixed strain/stress
// control driver.

#include "sfrc/matpoint.hpp"
#include "sfrc/microstructure.hpp"
#include "sfrc/tensor.hpp"

#include <array>
#include <optional>
#include <vector>

namespace sfrc {

/// Isotropic projection of a major-symmetric stiffness: K = (I(x)I :: C) / 9,
/// mu = (C :: P_dev) / 10.
IsotropicModuli isotropic_parts(const SymTensor4& c);
SymTensor4 isotropize(const SymTensor4& c);

/// Unidirectional concentration tensors for fibers aligned with axis 1.
struct Concentration {
  SymTensor4 dilute;  // A_dil: inclusion strain per far-field strain
  SymTensor4 matrix;  // A_M = [(1 - v_F) I + v_F A_dil]^-1
  SymTensor4 fiber;   // A_MT = A_dil A_M
};

/// `matrix_stiffness` must be isotropic.
Concentration ud_concentration(const SymTensor4& matrix_stiffness, const SymTensor4& fiber_stiffness,
                               double volume_fraction, double aspect_ratio);

/// C_M + v_F (C_F - C_M) A_MT for aligned fibers.
SymTensor4 mt_tangent_ud(const SymTensor4& matrix_stiffness, const SymTensor4& fiber_stiffness,
                         double volume_fraction, double aspect_ratio);

struct CompositeState {
  SymTensor2 strain;  // macroscopic
  SymTensor2 stress;  // macroscopic
  MatrixState matrix; // matrix.strain is the matrix-phase average strain
  SymTensor2 fiber_strain;
};

struct HomogenizerOptions {
  int max_iterations = 100;
  double strain_tol = 1e-9;
  ReturnMapOptions return_map;
};

struct StepResult {
  CompositeState state;
  SymTensor4 tangent;  // consistent macro tangent d(stress)/d(strain)
  bool plastic = false;
  int iterations = 0;
};

class MeanFieldModel {
 public:
  MeanFieldModel(const Microstructure& micro, const MatrixParams& matrix,
                 const HomogenizerOptions& opts = {});

  /// Advances `state` to the macroscopic strain `strain`. Pure: `state` is untouched.
  StepResult step(const CompositeState& state, const SymTensor2& strain) const;

  /// Effective elastic stiffness (orientation-averaged unidirectional MT).
  const SymTensor4& elastic_stiffness() const { return elastic_; }
  const Microstructure& microstructure() const { return micro_; }
  const MatrixParams& matrix_params() const { return matrix_; }

 private:
  struct Averaged {
    SymTensor4 matrix_concentration;
    SymTensor4 d_matrix_concentration;  // derivative w.r.t. the reference shear modulus
  };
  Averaged averaged_concentration(double shear) const;

  Microstructure micro_;
  MatrixParams matrix_;
  HomogenizerOptions opts_;
  OrientationAverager averager_;
  SymTensor4 fiber_stiffness_;
  IsotropicModuli matrix_moduli_;
  SymTensor4 elastic_;
  SymTensor4 elastic_matrix_concentration_;
};

/// Per-component control: imposed strain history or a zero-stress target.
struct ComponentControl {
  enum class Kind { kStrain, kZeroStress };
  Kind kind = Kind::kZeroStress;
  std::vector<double> values;  // plain tensor strain components, one per step (incl. step 0)
};

/// Components in plain Voigt order (11, 22, 33, 23, 13, 12).
struct LoadProgram {
  std::array<ComponentControl, 6> controls;

  std::size_t length() const;
  void validate() const;

  /// All six components strain controlled.
  static LoadProgram strain_controlled(const std::vector<SymTensor2>& strains);
};

struct ProgramResult {
  std::vector<SymTensor2> strain;
  std::vector<SymTensor2> stress;
  std::vector<std::array<double, 6>> strain_components;  // exactly the components handed to the model
  std::size_t length() const { return strain.size(); }
};

struct DriverOptions {
  int max_iterations = 50;
  double stress_tol = 1e-6;  // times sigma_y
  // Each recorded increment is split into ceil(|d eps| / max_substep) equal
  // straight substeps (Mandel norm); <= 0 disables. The incremental scheme is
  // first-order in the step size, so a fixed substep size makes the response
  // independent of how finely the recorded series is sampled.
  double max_substep = 5e-5;
};

ProgramResult run_program(const LoadProgram& program, const MeanFieldModel& model,
                          const DriverOptions& opts = {});

/// Replays a full strain history (all components imposed). Uses the same
/// substepping as `run_program`, so replaying a program's recorded strains
/// reproduces its stresses exactly.
ProgramResult run_strain_history(const std::vector<SymTensor2>& strains, const MeanFieldModel& model,
                                 const DriverOptions& opts = {});

/// Piecewise-linear cycle 0 -> amp -> -amp -> 0 repeated `cycles` times, with
/// `steps_per_quarter` increments per quarter cycle. Returns the amplitude scale
/// in [-1, 1] at each point.
std::vector<double> cycle_waveform(int cycles, int steps_per_quarter);

}  // namespace sfrc
