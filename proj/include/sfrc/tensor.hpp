#pragma once

// Symmetric second- and fourth-order tensors in the orthonormal Mandel basis
// (11, 22, 33, sqrt2*23, sqrt2*13, sqrt2*12), plus proper rotations.

#include <Eigen/Dense>

#include <array>

namespace sfrc {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

inline constexpr double kSqrt2 = 1.41421356237309504880;

/// Weight that converts a tensor component to its Mandel slot.
inline constexpr std::array<double, 6> kMandelWeight = {1.0, 1.0, 1.0, kSqrt2, kSqrt2, kSqrt2};

/// Index pairs (i, j) for each Mandel slot.
inline constexpr std::array<std::array<int, 2>, 6> kMandelPairs = {
    {{0, 0}, {1, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}}};

int mandel_index(int i, int j);

class SymTensor2 {
 public:
  SymTensor2() : v_(Vec6::Zero()) {}
  explicit SymTensor2(const Vec6& mandel) : v_(mandel) {}

  static SymTensor2 zero() { return SymTensor2(); }
  static SymTensor2 identity();
  static SymTensor2 from_matrix(const Mat3& m);
  /// Plain tensor components in Voigt order (11, 22, 33, 23, 13, 12).
  static SymTensor2 from_components(const std::array<double, 6>& c);
  static SymTensor2 diag(double a, double b, double c);

  Mat3 to_matrix() const;
  std::array<double, 6> to_components() const;
  /// Plain tensor component ij.
  double component(int i, int j) const;

  const Vec6& mandel() const { return v_; }
  Vec6& mandel() { return v_; }

  double trace() const { return v_(0) + v_(1) + v_(2); }
  double dot(const SymTensor2& o) const { return v_.dot(o.v_); }
  double norm() const { return v_.norm(); }
  bool all_finite() const { return v_.allFinite(); }

  SymTensor2& operator+=(const SymTensor2& o) {
    v_ += o.v_;
    return *this;
  }
  SymTensor2& operator-=(const SymTensor2& o) {
    v_ -= o.v_;
    return *this;
  }
  friend SymTensor2 operator+(SymTensor2 a, const SymTensor2& b) { return a += b; }
  friend SymTensor2 operator-(SymTensor2 a, const SymTensor2& b) { return a -= b; }
  friend SymTensor2 operator-(const SymTensor2& a) { return SymTensor2(-a.v_); }
  friend SymTensor2 operator*(double s, const SymTensor2& a) { return SymTensor2(s * a.v_); }
  friend SymTensor2 operator*(const SymTensor2& a, double s) { return SymTensor2(s * a.v_); }

 private:
  Vec6 v_;
};

class SymTensor4 {
 public:
  SymTensor4() : m_(Mat6::Zero()) {}
  explicit SymTensor4(const Mat6& mandel) : m_(mandel) {}

  static SymTensor4 zero() { return SymTensor4(); }
  /// Symmetric fourth-order identity.
  static SymTensor4 identity() { return SymTensor4(Mat6::Identity()); }
  /// I (x) I
  static SymTensor4 identity_dyad();
  /// Volumetric projector I(x)I / 3.
  static SymTensor4 volumetric();
  /// Deviatoric projector.
  static SymTensor4 deviatoric();
  static SymTensor4 dyad(const SymTensor2& a, const SymTensor2& b);

  /// Builds from a full 3x3x3x3 array with minor symmetries (index i*27+j*9+k*3+l).
  static SymTensor4 from_full(const std::array<double, 81>& t);
  std::array<double, 81> to_full() const;
  double component(int i, int j, int k, int l) const;

  const Mat6& mandel() const { return m_; }
  Mat6& mandel() { return m_; }

  SymTensor2 operator()(const SymTensor2& e) const { return SymTensor2(m_ * e.mandel()); }
  /// Double contraction A : B.
  friend SymTensor4 operator*(const SymTensor4& a, const SymTensor4& b) {
    return SymTensor4(a.m_ * b.m_);
  }
  friend SymTensor4 operator+(const SymTensor4& a, const SymTensor4& b) {
    return SymTensor4(a.m_ + b.m_);
  }
  friend SymTensor4 operator-(const SymTensor4& a, const SymTensor4& b) {
    return SymTensor4(a.m_ - b.m_);
  }
  friend SymTensor4 operator*(double s, const SymTensor4& a) { return SymTensor4(s * a.m_); }

  SymTensor4 inverse() const;
  SymTensor4 transpose() const { return SymTensor4(m_.transpose()); }
  bool is_major_symmetric(double tol = 1e-10) const;

 private:
  Mat6 m_;
};

/// Proper orthogonal 3x3 matrix. Construction validates orthogonality and det = +1.
class Rotation {
 public:
  Rotation() : r_(Mat3::Identity()) {}
  explicit Rotation(const Mat3& r, double tol = 1e-12);

  static Rotation about_axis(const Vec3& axis, double angle);

  const Mat3& matrix() const { return r_; }
  Rotation transpose() const { return Rotation(r_.transpose()); }
  /// 6x6 orthogonal matrix Q with mandel(R s R^T) = Q mandel(s).
  Mat6 mandel_matrix() const;

 private:
  Mat3 r_;
};

SymTensor2 deviator(const SymTensor2& s);
double von_mises(const SymTensor2& s);
SymTensor2 rotate(const SymTensor2& s, const Rotation& r);
SymTensor4 rotate4(const SymTensor4& c, const Rotation& r);

struct IsotropicModuli {
  double bulk;
  double shear;
};

IsotropicModuli isotropic_moduli(double youngs, double poisson);
SymTensor4 isotropic_stiffness(double youngs, double poisson);
SymTensor4 isotropic_from_moduli(double bulk, double shear);

}  // namespace sfrc
