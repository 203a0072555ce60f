#include "sfrc/matpoint.hpp"

#include <cmath>
#include <sstream>

namespace sfrc {

void MatrixParams::validate() const {
  if (!(youngs > 0 && yield_stress > 0 && linear_hardening > 0 && saturation_hardening > 0 &&
        hardening_exponent > 0 && poisson > 0 && poisson < 0.5)) {
    throw std::invalid_argument("MatrixParams: parameters must be positive with nu < 0.5");
  }
}

void FiberParams::validate() const {
  if (!(youngs > 0)) throw std::invalid_argument("FiberParams: E_F must be positive");
  if (!(aspect_ratio >= 1.0)) throw std::invalid_argument("FiberParams: aspect ratio must be >= 1");
  isotropic_moduli(youngs, poisson);
}

double hardening_stress(double p, const MatrixParams& params) {
  if (p < 0.0) throw std::invalid_argument("hardening_stress: negative accumulated plastic strain");
  return params.linear_hardening * p +
         params.saturation_hardening * -std::expm1(-params.hardening_exponent * p);
}

double hardening_modulus(double p, const MatrixParams& params) {
  return params.linear_hardening + params.saturation_hardening * params.hardening_exponent *
                                       std::exp(-params.hardening_exponent * p);
}

double hardening_curvature(double p, const MatrixParams& params) {
  const double m = params.hardening_exponent;
  return -params.saturation_hardening * m * m * std::exp(-m * p);
}

double yield_function(const SymTensor2& stress, double p, const MatrixParams& params) {
  return von_mises(stress) - (params.yield_stress + hardening_stress(p, params));
}

ReturnMapResult return_map(const MatrixState& state, const SymTensor2& d_strain,
                           const MatrixParams& params, const ReturnMapOptions& opts) {
  if (!d_strain.all_finite() || !state.strain.all_finite())
    throw std::invalid_argument("return_map: non-finite strain");

  const auto [bulk, shear] = isotropic_moduli(params.youngs, params.poisson);
  const SymTensor4 elastic = isotropic_from_moduli(bulk, shear);
  const double sigma_y = params.yield_stress;
  const double p_n = state.accumulated_plastic_strain;

  ReturnMapResult out;
  out.state = state;
  out.state.strain = state.strain + d_strain;

  const SymTensor2 trial = elastic(out.state.strain - state.plastic_strain);
  const SymTensor2 trial_dev = deviator(trial);
  const double dev_norm = trial_dev.norm();
  const double q_trial = std::sqrt(1.5) * dev_norm;
  out.trial_equivalent_stress = q_trial;

  const double phi_trial = q_trial - (sigma_y + hardening_stress(p_n, params));
  if (phi_trial <= opts.yield_tol * sigma_y) {
    out.stress = trial;
    out.tangent = elastic;
    return out;
  }

  // Consistency: q_trial - 3 mu dp - sigma_y - kappa(p_n + dp) = 0, decreasing in dp.
  auto residual = [&](double dp) {
    return q_trial - 3.0 * shear * dp - sigma_y - hardening_stress(p_n + dp, params);
  };
  double lo = 0.0;
  double hi = phi_trial / (3.0 * shear);
  double dp = hi * 0.5;
  double r = residual(dp);
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    if (std::abs(r) <= opts.residual_tol * sigma_y) break;
    if (r > 0.0)
      lo = dp;
    else
      hi = dp;
    const double slope = -3.0 * shear - hardening_modulus(p_n + dp, params);
    double next = dp - r / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    dp = next;
    r = residual(dp);
  }
  if (std::abs(r) > opts.residual_tol * sigma_y) {
    std::ostringstream msg;
    msg << "return_map: Newton did not converge after " << opts.max_iterations
        << " iterations (residual " << r << " MPa, q_trial " << q_trial << ", p " << p_n << ")";
    throw ConvergenceError(msg.str());
  }

  const SymTensor2 n = (1.0 / dev_norm) * trial_dev;
  const SymTensor2 d_plastic = (std::sqrt(1.5) * dp) * n;

  out.plastic = true;
  out.iterations = it;
  out.plastic_increment = dp;
  out.flow_direction = n;
  out.state.plastic_strain = state.plastic_strain + d_plastic;
  out.state.accumulated_plastic_strain = p_n + dp;
  out.stress = trial - (2.0 * shear) * d_plastic;

  const double h = hardening_modulus(p_n + dp, params);
  const double theta = 1.0 - 3.0 * shear * dp / q_trial;
  const double beta = 6.0 * shear * shear * (dp / q_trial - 1.0 / (3.0 * shear + h));
  out.tangent = SymTensor4(3.0 * bulk * SymTensor4::volumetric().mandel() +
                           2.0 * shear * theta * SymTensor4::deviatoric().mandel() +
                           beta * n.mandel() * n.mandel().transpose());
  return out;
}

SymTensor2 fiber_stress(const SymTensor2& strain, const FiberParams& params) {
  return isotropic_stiffness(params.youngs, params.poisson)(strain);
}

}  // namespace sfrc
