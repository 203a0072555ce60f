#pragma once

// Second-order fiber orientation tensors: sampling, closure and orientation
// averaging of transversely isotropic operators.

#include "sfrc/matpoint.hpp"
#include "sfrc/tensor.hpp"

#include <array>
#include <random>

namespace sfrc {

using Rng = std::mt19937_64;

class OrientationTensor {
 public:
  /// Isotropic (3D random) orientation, I/3.
  OrientationTensor();
  /// Validates symmetry, unit trace (1e-10) and eigenvalues >= -1e-9; tiny negative
  /// eigenvalues are clamped to zero.
  explicit OrientationTensor(const Mat3& a);

  /// Components in the order (a11, a22, a33, a12, a13, a23).
  static OrientationTensor from_components(const std::array<double, 6>& c);
  /// Same validation, but the components are kept bit-for-bit (no clamping);
  /// used when reloading stored tensors.
  static OrientationTensor from_stored(const std::array<double, 6>& c);
  /// Projects an approximately valid tensor (e.g. rounded table values) onto the
  /// admissible set: symmetrize, clamp eigenvalues at zero, rescale to unit trace.
  static OrientationTensor nearest_valid(const Mat3& a);

  const Mat3& matrix() const { return a_; }
  std::array<double, 6> components() const;
  Vec3 eigenvalues() const;
  SymTensor2 as_tensor() const { return SymTensor2::from_matrix(a_); }

 private:
  Mat3 a_;
};

struct Microstructure {
  OrientationTensor orientation;
  double volume_fraction = 0.12;
  FiberParams fiber;

  void validate() const;
};

/// Segment lengths of [0, 1] cut at u1 and u2 (any order).
Vec3 eigenvalues_from_cuts(double u1, double u2);
Vec3 sample_eigenvalues(Rng& rng);

/// R' = -H(v) R_z(theta) with v = [cos(phi) sqrt(z), sin(phi) sqrt(z), sqrt(1 - z)].
Rotation arvo_rotation(double theta, double phi, double z);
Rotation sample_rotation(Rng& rng);

OrientationTensor sample_orientation_tensor(Rng& rng, double p_uniaxial);

/// Hybrid closure of the fourth-order orientation tensor.
SymTensor4 closure_a4(const OrientationTensor& a);

/// Invariant coefficients of a transversely isotropic operator about axis 1:
///   T = b1 pppp + b2 pp(x)I + b2t I(x)pp + b3 (p_i p_k d_jl + ...) + b4 I(x)I + b5 (d_ik d_jl + d_il d_jk)
/// b2 == b2t when T has major symmetry.
struct TransverseCoefficients {
  double b1 = 0, b2 = 0, b2t = 0, b3 = 0, b4 = 0, b5 = 0;
};

/// Throws std::invalid_argument when T is not transversely isotropic about axis 1.
TransverseCoefficients transverse_coefficients(const SymTensor4& t, double tol = 1e-8);

/// Advani-Tucker orientation average; precomputes the basis tensors for one `a`.
class OrientationAverager {
 public:
  explicit OrientationAverager(const OrientationTensor& a);

  SymTensor4 operator()(const SymTensor4& aligned) const;
  SymTensor4 average(const TransverseCoefficients& c) const;

 private:
  Mat6 a4_, a_i_, i_a_, mixed_, i_i_, sym_;
};

SymTensor4 orientation_average(const SymTensor4& aligned, const OrientationTensor& a);

}  // namespace sfrc
