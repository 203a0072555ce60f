#pragma once

#include "sfrc/tensor.hpp"

#include <random>

namespace sfrc::testing {

inline SymTensor2 random_sym(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) m(i, j) = m(j, i) = n(rng);
  return SymTensor2::from_matrix(m);
}

inline Rotation random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return Rotation(q.toRotationMatrix());
}

inline double rel_diff(const Mat6& a, const Mat6& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace sfrc::testing
