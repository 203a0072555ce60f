#include "sfrc/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace sfrc {

int mandel_index(int i, int j) {
  if (i == j) return i;
  const int s = i + j;  // (1,2)->3, (0,2)->2, (0,1)->1
  return s == 3 ? 3 : (s == 2 ? 4 : 5);
}

SymTensor2 SymTensor2::identity() { return diag(1.0, 1.0, 1.0); }

SymTensor2 SymTensor2::diag(double a, double b, double c) {
  Vec6 v = Vec6::Zero();
  v << a, b, c, 0.0, 0.0, 0.0;
  return SymTensor2(v);
}

SymTensor2 SymTensor2::from_matrix(const Mat3& m) {
  Vec6 v;
  for (int a = 0; a < 6; ++a) {
    const auto [i, j] = kMandelPairs[a];
    v(a) = kMandelWeight[a] * 0.5 * (m(i, j) + m(j, i));
  }
  return SymTensor2(v);
}

SymTensor2 SymTensor2::from_components(const std::array<double, 6>& c) {
  Vec6 v;
  for (int a = 0; a < 6; ++a) v(a) = kMandelWeight[a] * c[a];
  return SymTensor2(v);
}

Mat3 SymTensor2::to_matrix() const {
  Mat3 m;
  for (int a = 0; a < 6; ++a) {
    const auto [i, j] = kMandelPairs[a];
    m(i, j) = m(j, i) = v_(a) / kMandelWeight[a];
  }
  return m;
}

std::array<double, 6> SymTensor2::to_components() const {
  std::array<double, 6> c{};
  for (int a = 0; a < 6; ++a) c[a] = v_(a) / kMandelWeight[a];
  return c;
}

double SymTensor2::component(int i, int j) const {
  const int a = mandel_index(i, j);
  return v_(a) / kMandelWeight[a];
}

SymTensor4 SymTensor4::identity_dyad() {
  Mat6 m = Mat6::Zero();
  m.topLeftCorner<3, 3>().setOnes();
  return SymTensor4(m);
}

SymTensor4 SymTensor4::volumetric() { return SymTensor4(identity_dyad().mandel() / 3.0); }

SymTensor4 SymTensor4::deviatoric() {
  return SymTensor4(Mat6::Identity() - volumetric().mandel());
}

SymTensor4 SymTensor4::dyad(const SymTensor2& a, const SymTensor2& b) {
  return SymTensor4(a.mandel() * b.mandel().transpose());
}

SymTensor4 SymTensor4::from_full(const std::array<double, 81>& t) {
  Mat6 m;
  for (int a = 0; a < 6; ++a) {
    const auto [i, j] = kMandelPairs[a];
    for (int b = 0; b < 6; ++b) {
      const auto [k, l] = kMandelPairs[b];
      m(a, b) = kMandelWeight[a] * kMandelWeight[b] * t[i * 27 + j * 9 + k * 3 + l];
    }
  }
  return SymTensor4(m);
}

double SymTensor4::component(int i, int j, int k, int l) const {
  const int a = mandel_index(i, j);
  const int b = mandel_index(k, l);
  return m_(a, b) / (kMandelWeight[a] * kMandelWeight[b]);
}

std::array<double, 81> SymTensor4::to_full() const {
  std::array<double, 81> t{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) t[i * 27 + j * 9 + k * 3 + l] = component(i, j, k, l);
  return t;
}

SymTensor4 SymTensor4::inverse() const {
  Eigen::FullPivLU<Mat6> lu(m_);
  if (!lu.isInvertible()) throw std::domain_error("SymTensor4::inverse: singular operator");
  return SymTensor4(lu.inverse());
}

bool SymTensor4::is_major_symmetric(double tol) const {
  const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
  return (m_ - m_.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

Rotation::Rotation(const Mat3& r, double tol) : r_(r) {
  if (!r.allFinite() || (r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > tol ||
      std::abs(r.determinant() - 1.0) > tol) {
    throw std::invalid_argument("Rotation: matrix is not proper orthogonal");
  }
}

Rotation Rotation::about_axis(const Vec3& axis, double angle) {
  return Rotation(Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix());
}

Mat6 Rotation::mandel_matrix() const {
  Mat6 q;
  for (int b = 0; b < 6; ++b) {
    Vec6 e = Vec6::Zero();
    e(b) = 1.0;
    const Mat3 basis = SymTensor2(e).to_matrix();
    q.col(b) = SymTensor2::from_matrix(r_ * basis * r_.transpose()).mandel();
  }
  return q;
}

SymTensor2 deviator(const SymTensor2& s) {
  return s - (s.trace() / 3.0) * SymTensor2::identity();
}

double von_mises(const SymTensor2& s) {
  const SymTensor2 d = deviator(s);
  return std::sqrt(1.5 * d.dot(d));
}

SymTensor2 rotate(const SymTensor2& s, const Rotation& r) {
  return SymTensor2(r.mandel_matrix() * s.mandel());
}

SymTensor4 rotate4(const SymTensor4& c, const Rotation& r) {
  const Mat6 q = r.mandel_matrix();
  return SymTensor4(q * c.mandel() * q.transpose());
}

IsotropicModuli isotropic_moduli(double youngs, double poisson) {
  if (!(youngs > 0.0)) throw std::invalid_argument("isotropic_moduli: E must be positive");
  if (!(poisson > -1.0 && poisson < 0.5))
    throw std::invalid_argument("isotropic_moduli: Poisson ratio must lie in (-1, 0.5)");
  return {youngs / (3.0 * (1.0 - 2.0 * poisson)), youngs / (2.0 * (1.0 + poisson))};
}

SymTensor4 isotropic_from_moduli(double bulk, double shear) {
  return SymTensor4(3.0 * bulk * SymTensor4::volumetric().mandel() +
                    2.0 * shear * SymTensor4::deviatoric().mandel());
}

SymTensor4 isotropic_stiffness(double youngs, double poisson) {
  const auto [k, mu] = isotropic_moduli(youngs, poisson);
  return isotropic_from_moduli(k, mu);
}

}  // namespace sfrc
