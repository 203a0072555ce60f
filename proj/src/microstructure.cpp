#include "sfrc/microstructure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sfrc {

namespace {

constexpr double kEigenClampTol = 1e-9;

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

using Full4 = std::array<double, 81>;

template <class F>
Full4 build_full(F&& f) {
  Full4 t{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) t[i * 27 + j * 9 + k * 3 + l] = f(i, j, k, l);
  return t;
}

double delta(int i, int j) { return i == j ? 1.0 : 0.0; }

Mat6 mixed_term(const Mat3& a) {
  return SymTensor4::from_full(build_full([&](int i, int j, int k, int l) {
           return a(i, k) * delta(j, l) + a(i, l) * delta(j, k) + a(j, k) * delta(i, l) +
                  a(j, l) * delta(i, k);
         }))
      .mandel();
}

Mat6 dyad6(const Mat3& a, const Mat3& b) {
  return SymTensor2::from_matrix(a).mandel() * SymTensor2::from_matrix(b).mandel().transpose();
}

struct Basis {
  Mat6 a4, a_i, i_a, mixed, i_i, sym;
};

Basis make_basis(const Mat3& a, const Mat6& a4) {
  const Mat3 eye = Mat3::Identity();
  return {a4, dyad6(a, eye), dyad6(eye, a), mixed_term(a), dyad6(eye, eye), 2.0 * Mat6::Identity()};
}

Mat6 combine(const Basis& b, const TransverseCoefficients& c) {
  return c.b1 * b.a4 + c.b2 * b.a_i + c.b2t * b.i_a + c.b3 * b.mixed + c.b4 * b.i_i + c.b5 * b.sym;
}

const Basis& aligned_basis() {
  static const Basis basis = [] {
    Mat3 p = Mat3::Zero();
    p(0, 0) = 1.0;
    Mat6 a4 = Mat6::Zero();
    a4(0, 0) = 1.0;
    return make_basis(p, a4);
  }();
  return basis;
}

}  // namespace

OrientationTensor::OrientationTensor() : a_(Mat3::Identity() / 3.0) {}

OrientationTensor::OrientationTensor(const Mat3& a) : a_(0.5 * (a + a.transpose())) {
  if (!a.allFinite() || (a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("OrientationTensor: matrix must be finite and symmetric");
  if (std::abs(a_.trace() - 1.0) > 1e-10)
    throw std::invalid_argument("OrientationTensor: trace must be unity");
  Eigen::SelfAdjointEigenSolver<Mat3> es(a_);
  Vec3 lambda = es.eigenvalues();
  if (lambda.minCoeff() < -kEigenClampTol || lambda.maxCoeff() > 1.0 + kEigenClampTol)
    throw std::invalid_argument("OrientationTensor: eigenvalues must lie in [0, 1]");
  if (lambda.minCoeff() < 0.0) {
    lambda = lambda.cwiseMax(0.0);
    a_ = es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
    a_ = (0.5 * (a_ + a_.transpose())).eval();
  }
}

OrientationTensor OrientationTensor::from_components(const std::array<double, 6>& c) {
  Mat3 a;
  a << c[0], c[3], c[4], c[3], c[1], c[5], c[4], c[5], c[2];
  return OrientationTensor(a);
}

OrientationTensor OrientationTensor::from_stored(const std::array<double, 6>& c) {
  OrientationTensor t = from_components(c);
  t.a_ << c[0], c[3], c[4], c[3], c[1], c[5], c[4], c[5], c[2];
  return t;
}

OrientationTensor OrientationTensor::nearest_valid(const Mat3& a) {
  const Mat3 sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Mat3> es(sym);
  Vec3 lambda = es.eigenvalues().cwiseMax(0.0);
  const double sum = lambda.sum();
  if (!(sum > 0.0)) throw std::invalid_argument("OrientationTensor::nearest_valid: no admissible projection");
  lambda /= sum;
  Mat3 out = es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
  out = (0.5 * (out + out.transpose())).eval();
  // Eigenvector round-off can leave the trace a few ulps away from 1.
  out.diagonal().array() += (1.0 - out.trace()) / 3.0;
  return OrientationTensor(out);
}

std::array<double, 6> OrientationTensor::components() const {
  return {a_(0, 0), a_(1, 1), a_(2, 2), a_(0, 1), a_(0, 2), a_(1, 2)};
}

Vec3 OrientationTensor::eigenvalues() const {
  return Eigen::SelfAdjointEigenSolver<Mat3>(a_, Eigen::EigenvaluesOnly).eigenvalues();
}

void Microstructure::validate() const {
  if (!(volume_fraction >= 0.0 && volume_fraction < 1.0))
    throw std::invalid_argument("Microstructure: volume fraction must lie in [0, 1)");
  fiber.validate();
}

Vec3 eigenvalues_from_cuts(double u1, double u2) {
  const double lo = std::min(u1, u2);
  const double hi = std::max(u1, u2);
  return Vec3(lo, hi - lo, 1.0 - hi);
}

Vec3 sample_eigenvalues(Rng& rng) {
  const double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return eigenvalues_from_cuts(u1, u2);
}

Rotation arvo_rotation(double theta, double phi, double z) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat3 rz;
  rz << c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0;
  const Vec3 v(std::cos(phi) * std::sqrt(z), std::sin(phi) * std::sqrt(z), std::sqrt(1.0 - z));
  const Mat3 neg_householder = 2.0 * v * v.transpose() - Mat3::Identity();
  return Rotation(neg_householder * rz);
}

Rotation sample_rotation(Rng& rng) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double theta = two_pi * uniform01(rng);
  const double phi = two_pi * uniform01(rng);
  const double z = uniform01(rng);
  return arvo_rotation(theta, phi, z);
}

OrientationTensor sample_orientation_tensor(Rng& rng, double p_uniaxial) {
  if (!(p_uniaxial >= 0.0 && p_uniaxial <= 1.0))
    throw std::invalid_argument("sample_orientation_tensor: probability outside [0, 1]");
  const bool uniaxial = uniform01(rng) < p_uniaxial;
  const Vec3 lambda = uniaxial ? Vec3(1.0, 0.0, 0.0) : sample_eigenvalues(rng);
  const Mat3 r = sample_rotation(rng).matrix();
  Mat3 a = r * lambda.asDiagonal() * r.transpose();
  a = (0.5 * (a + a.transpose())).eval();
  a.diagonal().array() += (1.0 - a.trace()) / 3.0;
  return OrientationTensor(a);
}

SymTensor4 closure_a4(const OrientationTensor& orientation) {
  const Mat3& a = orientation.matrix();
  const double f = 1.0 - 27.0 * a.determinant();
  const Mat6 linear = SymTensor4::from_full(build_full([&](int i, int j, int k, int l) {
                        const double iso = delta(i, j) * delta(k, l) + delta(i, k) * delta(j, l) +
                                           delta(i, l) * delta(j, k);
                        const double aniso = a(i, j) * delta(k, l) + a(i, k) * delta(j, l) +
                                             a(i, l) * delta(j, k) + a(k, l) * delta(i, j) +
                                             a(j, l) * delta(i, k) + a(j, k) * delta(i, l);
                        return -iso / 35.0 + aniso / 7.0;
                      })).mandel();
  const Mat6 quadratic = dyad6(a, a);
  return SymTensor4((1.0 - f) * linear + f * quadratic);
}

TransverseCoefficients transverse_coefficients(const SymTensor4& t, double tol) {
  const Mat6& m = t.mandel();
  TransverseCoefficients c;
  c.b4 = m(1, 2);
  c.b5 = 0.5 * (m(1, 1) - m(1, 2));
  c.b2 = m(0, 1) - c.b4;
  c.b2t = m(1, 0) - c.b4;
  c.b3 = 0.5 * m(5, 5) - c.b5;  // Mandel (5,5) = 2 T1212
  c.b1 = m(0, 0) - c.b2 - c.b2t - 4.0 * c.b3 - c.b4 - 2.0 * c.b5;

  const Mat6 rebuilt = combine(aligned_basis(), c);
  const double scale = std::max(m.norm(), 1e-300);
  if ((rebuilt - m).norm() > tol * scale)
    throw std::invalid_argument("transverse_coefficients: operator is not transversely isotropic about axis 1");
  return c;
}

OrientationAverager::OrientationAverager(const OrientationTensor& a) {
  const Basis b = make_basis(a.matrix(), closure_a4(a).mandel());
  a4_ = b.a4;
  a_i_ = b.a_i;
  i_a_ = b.i_a;
  mixed_ = b.mixed;
  i_i_ = b.i_i;
  sym_ = b.sym;
}

SymTensor4 OrientationAverager::average(const TransverseCoefficients& c) const {
  return SymTensor4(c.b1 * a4_ + c.b2 * a_i_ + c.b2t * i_a_ + c.b3 * mixed_ + c.b4 * i_i_ +
                    c.b5 * sym_);
}

SymTensor4 OrientationAverager::operator()(const SymTensor4& aligned) const {
  return average(transverse_coefficients(aligned));
}

SymTensor4 orientation_average(const SymTensor4& aligned, const OrientationTensor& a) {
  return OrientationAverager(a)(aligned);
}

}  // namespace sfrc
