#include "sfrc/homogenize.hpp"

#include "sfrc/eshelby.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sfrc {

IsotropicModuli isotropic_parts(const SymTensor4& c) {
  const Mat6& m = c.mandel();
  const double bulk = m.topLeftCorner<3, 3>().sum() / 9.0;
  const double shear = (m * SymTensor4::deviatoric().mandel()).trace() / 10.0;
  return {bulk, shear};
}

SymTensor4 isotropize(const SymTensor4& c) {
  const auto [bulk, shear] = isotropic_parts(c);
  return isotropic_from_moduli(bulk, shear);
}

namespace {

constexpr double kMinDamping = 1.0 / 1024.0;

double poisson_from_moduli(double bulk, double shear) {
  return (3.0 * bulk - 2.0 * shear) / (2.0 * (3.0 * bulk + shear));
}

Concentration concentration_from(const SymTensor4& cm, const SymTensor4& cf, double v,
                                 const SymTensor4& eshelby_tensor) {
  const Mat6 eye = Mat6::Identity();
  const Mat6 x = eshelby_tensor.mandel() * cm.mandel().inverse() * (cf.mandel() - cm.mandel());
  Eigen::PartialPivLU<Mat6> lu_dil(eye + x);
  const Mat6 dil = lu_dil.inverse();
  const Mat6 mat = ((1.0 - v) * eye + v * dil).inverse();
  if (!dil.allFinite() || !mat.allFinite())
    throw ConvergenceError("ud_concentration: singular concentration system");
  return {SymTensor4(dil), SymTensor4(mat), SymTensor4(dil * mat)};
}

}  // namespace

Concentration ud_concentration(const SymTensor4& matrix_stiffness, const SymTensor4& fiber_stiffness,
                               double volume_fraction, double aspect_ratio) {
  if (!(volume_fraction >= 0.0 && volume_fraction < 1.0))
    throw std::invalid_argument("ud_concentration: volume fraction outside [0, 1)");
  const auto [bulk, shear] = isotropic_parts(matrix_stiffness);
  if ((isotropic_from_moduli(bulk, shear).mandel() - matrix_stiffness.mandel()).norm() >
      1e-8 * matrix_stiffness.mandel().norm())
    throw std::invalid_argument("ud_concentration: matrix stiffness must be isotropic");
  const SymTensor4 s = eshelby(aspect_ratio, poisson_from_moduli(bulk, shear));
  return concentration_from(matrix_stiffness, fiber_stiffness, volume_fraction, s);
}

SymTensor4 mt_tangent_ud(const SymTensor4& matrix_stiffness, const SymTensor4& fiber_stiffness,
                         double volume_fraction, double aspect_ratio) {
  const Concentration a =
      ud_concentration(matrix_stiffness, fiber_stiffness, volume_fraction, aspect_ratio);
  return SymTensor4(matrix_stiffness.mandel() +
                    volume_fraction * (fiber_stiffness.mandel() - matrix_stiffness.mandel()) *
                        a.fiber.mandel());
}

MeanFieldModel::MeanFieldModel(const Microstructure& micro, const MatrixParams& matrix,
                               const HomogenizerOptions& opts)
    : micro_(micro),
      matrix_(matrix),
      opts_(opts),
      averager_(micro.orientation),
      fiber_stiffness_(isotropic_stiffness(micro.fiber.youngs, micro.fiber.poisson)),
      matrix_moduli_(isotropic_moduli(matrix.youngs, matrix.poisson)) {
  micro_.validate();
  matrix_.validate();
  const SymTensor4 cm = isotropic_from_moduli(matrix_moduli_.bulk, matrix_moduli_.shear);
  elastic_ = averager_(mt_tangent_ud(cm, fiber_stiffness_, micro_.volume_fraction,
                                     micro_.fiber.aspect_ratio));
  elastic_matrix_concentration_ = averaged_concentration(matrix_moduli_.shear).matrix_concentration;
}

MeanFieldModel::Averaged MeanFieldModel::averaged_concentration(double shear) const {
  const double bulk = matrix_moduli_.bulk;
  const double v = micro_.volume_fraction;
  const double ar = micro_.fiber.aspect_ratio;
  const double nu = poisson_from_moduli(bulk, shear);
  const Mat6 eye = Mat6::Identity();
  const Mat6 p_dev = SymTensor4::deviatoric().mandel();
  const Mat6 p_vol = SymTensor4::volumetric().mandel();

  const Mat6 cm = 3.0 * bulk * p_vol + 2.0 * shear * p_dev;
  const Mat6 cm_inv = p_vol / (3.0 * bulk) + p_dev / (2.0 * shear);
  const Mat6 dcm = 2.0 * p_dev;
  const Mat6 dcm_inv = -p_dev / (2.0 * shear * shear);
  const Mat6 s = eshelby(ar, nu).mandel();
  const double dnu = -4.5 * bulk / ((3.0 * bulk + shear) * (3.0 * bulk + shear));
  const Mat6 ds = dnu * eshelby_nu_derivative(ar, nu).mandel();
  const Mat6& cf = fiber_stiffness_.mandel();

  const Mat6 x = s * cm_inv * (cf - cm);
  const Mat6 dx = ds * cm_inv * (cf - cm) + s * dcm_inv * (cf - cm) - s * cm_inv * dcm;
  const Mat6 dil = (eye + x).inverse();
  const Mat6 ddil = -dil * dx * dil;
  const Mat6 mat = ((1.0 - v) * eye + v * dil).inverse();
  const Mat6 dmat = -mat * (v * ddil) * mat;
  if (!mat.allFinite()) throw ConvergenceError("MeanFieldModel: singular concentration system");

  return {averager_(SymTensor4(mat)), averager_(SymTensor4(dmat))};
}

StepResult MeanFieldModel::step(const CompositeState& state, const SymTensor2& strain) const {
  if (!strain.all_finite()) throw std::invalid_argument("MeanFieldModel::step: non-finite strain");
  const SymTensor2 d_strain = strain - state.strain;
  const double v = micro_.volume_fraction;
  const double mu = matrix_moduli_.shear;

  StepResult out;
  out.state.strain = strain;

  if (v == 0.0) {
    const ReturnMapResult rm = return_map(state.matrix, d_strain, matrix_, opts_.return_map);
    out.state.matrix = rm.state;
    out.state.fiber_strain = strain;
    out.state.stress = rm.stress;
    out.tangent = rm.tangent;
    out.plastic = rm.plastic;
    out.iterations = 1;
    return out;
  }

  const Vec6& de = d_strain.mandel();
  Vec6 dem = elastic_matrix_concentration_.mandel() * de;
  ReturnMapResult rm;
  Mat6 conc;
  Mat6 jac;
  const double residual_floor = 1e-15 * (1.0 + de.norm());
  // Newton on the matrix strain increment. Near the elastic/plastic switch the
  // residual is discontinuous and full steps can cycle; a step that does not
  // reduce the residual is halved back towards the last accepted point.
  Vec6 base = dem, step = Vec6::Zero();
  double base_residual = std::numeric_limits<double>::infinity();
  double alpha = 1.0;
  double kink_jump = 0.0;
  double last_correction = std::numeric_limits<double>::infinity();
  bool converged = false;
  int it = 0;
  for (; it < opts_.max_iterations; ++it) {
    rm = return_map(state.matrix, SymTensor2(dem), matrix_, opts_.return_map);
    jac = Mat6::Identity();
    if (!rm.plastic) {
      conc = elastic_matrix_concentration_.mandel();
    } else {
      // Isotropized algorithmic tangent and its sensitivity to the matrix strain increment.
      const double mu_iso = isotropic_parts(rm.tangent).shear;
      const double dp = rm.plastic_increment;
      const double q = rm.trial_equivalent_stress;
      const double h = hardening_modulus(state.matrix.accumulated_plastic_strain + dp, matrix_);
      const double hh = hardening_curvature(state.matrix.accumulated_plastic_strain + dp, matrix_);
      const double denom = 3.0 * mu + h;
      const double dmu_ddp = -3.0 * mu * mu / q + 0.6 * mu * mu * (1.0 / q + hh / (denom * denom));
      const double dmu_dq = 2.4 * mu * mu * dp / (q * q);
      const Vec6 grad =
          (dmu_dq + dmu_ddp / denom) * std::sqrt(6.0) * mu * rm.flow_direction.mandel();
      const Averaged avg = averaged_concentration(mu_iso);
      conc = avg.matrix_concentration.mandel();
      jac -= (avg.d_matrix_concentration.mandel() * de) * grad.transpose();
    }
    const Vec6 residual = dem - conc * de;
    const double r = residual.norm();
    if (rm.plastic) kink_jump = ((conc - elastic_matrix_concentration_.mandel()) * de).norm();
    if (last_correction <= opts_.strain_tol || r <= residual_floor) {
      converged = true;
      break;
    }
    if (r >= base_residual) {
      if (alpha > kMinDamping) {
        alpha *= 0.5;
        dem = base + alpha * step;
        continue;
      }
      // Backtracking collapsed onto the yield surface. The isotropized tangent
      // jumps there, so no exact root may exist; accept the boundary point (from
      // either side) when the residual is within that jump.
      if (r <= kink_jump + opts_.strain_tol) {
        converged = true;
        break;
      }
    }
    base = dem;
    base_residual = r;
    step = -jac.partialPivLu().solve(residual);
    if (!step.allFinite()) break;
    alpha = 1.0;
    dem = base + step;
    last_correction = step.norm();
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "MeanFieldModel::step: matrix strain iteration did not converge in " << it
        << " iterations (|d strain| " << de.norm() << ", p "
        << state.matrix.accumulated_plastic_strain << ", last correction " << last_correction << ")";
    throw ConvergenceError(msg.str());
  }

  out.state.matrix = rm.state;
  out.state.fiber_strain = state.fiber_strain + (1.0 / v) * SymTensor2(de - (1.0 - v) * dem);
  const SymTensor2 sf = fiber_stiffness_(out.state.fiber_strain);
  out.state.stress = (1.0 - v) * rm.stress + v * sf;
  if (!out.state.stress.all_finite()) throw ConvergenceError("MeanFieldModel::step: non-finite stress");

  const Mat6& cf = fiber_stiffness_.mandel();
  const Mat6 d_matrix_strain = jac.partialPivLu().solve(conc);
  out.tangent = SymTensor4(cf + (1.0 - v) * (rm.tangent.mandel() - cf) * d_matrix_strain);
  out.plastic = rm.plastic;
  out.iterations = it + 1;
  return out;
}

std::size_t LoadProgram::length() const {
  for (const auto& c : controls)
    if (c.kind == ComponentControl::Kind::kStrain) return c.values.size();
  return 0;
}

void LoadProgram::validate() const {
  std::size_t n = 0;
  bool any = false;
  for (const auto& c : controls) {
    if (c.kind != ComponentControl::Kind::kStrain) continue;
    if (any && c.values.size() != n)
      throw std::invalid_argument("LoadProgram: strain series lengths differ");
    n = c.values.size();
    any = true;
  }
  if (!any) throw std::invalid_argument("LoadProgram: at least one component must be strain controlled");
  if (n == 0) throw std::invalid_argument("LoadProgram: empty strain series");
  for (const auto& c : controls)
    if (c.kind == ComponentControl::Kind::kZeroStress && !c.values.empty())
      throw std::invalid_argument("LoadProgram: zero-stress component must not carry strain values");
}

LoadProgram LoadProgram::strain_controlled(const std::vector<SymTensor2>& strains) {
  LoadProgram p;
  for (int a = 0; a < 6; ++a) {
    p.controls[a].kind = ComponentControl::Kind::kStrain;
    p.controls[a].values.reserve(strains.size());
    for (const auto& e : strains) p.controls[a].values.push_back(e.mandel()(a) / kMandelWeight[a]);
  }
  return p;
}

namespace {

int substeps_for(const Vec6& d, double max_substep) {
  if (!(max_substep > 0.0)) return 1;
  return std::max(1, static_cast<int>(std::ceil(d.norm() / max_substep)));
}

// Straight segment from state.strain to `target` in `m` equal substeps.
StepResult advance(const MeanFieldModel& model, const CompositeState& state, const SymTensor2& target, int m) {
  if (m <= 1) return model.step(state, target);
  const Vec6 start = state.strain.mandel();
  const Vec6 d = target.mandel() - start;
  CompositeState s = state;
  StepResult r;
  int iterations = 0;
  bool plastic = false;
  for (int j = 1; j <= m; ++j) {
    r = model.step(s, j == m ? target : SymTensor2(start + (static_cast<double>(j) / m) * d));
    s = r.state;
    iterations += r.iterations;
    plastic = plastic || r.plastic;
  }
  r.iterations = iterations;
  r.plastic = plastic;
  return r;
}

}  // namespace

ProgramResult run_program(const LoadProgram& program, const MeanFieldModel& model,
                          const DriverOptions& opts) {
  program.validate();
  const std::size_t n = program.length();
  std::vector<int> fixed, free;
  for (int a = 0; a < 6; ++a)
    (program.controls[a].kind == ComponentControl::Kind::kStrain ? fixed : free).push_back(a);
  const int nf = static_cast<int>(free.size());
  const double tol = opts.stress_tol * model.matrix_params().yield_stress;

  ProgramResult out;
  out.strain.reserve(n);
  out.stress.reserve(n);
  CompositeState state;
  SymTensor4 tangent = model.elastic_stiffness();

  // Iterate on plain tensor components so every strain handed to the model is
  // reproducible bit-for-bit from a component series.
  std::array<double, 6> plain = state.strain.to_components();
  for (std::size_t k = 0; k < n; ++k) {
    for (int a : fixed) plain[a] = program.controls[a].values[k];
    if (k == 0 && std::all_of(plain.begin(), plain.end(), [](double v) { return v == 0.0; })) {
      out.strain.push_back(state.strain);
      out.stress.push_back(state.stress);
      out.strain_components.push_back(plain);
      continue;
    }

    if (nf > 0) {
      // Predictor from the previous tangent with the free stresses held at zero.
      const Vec6 d = SymTensor2::from_components(plain).mandel() - state.strain.mandel();
      Eigen::MatrixXd cff(nf, nf);
      Eigen::VectorXd rhs(nf);
      for (int i = 0; i < nf; ++i) {
        rhs(i) = 0.0;
        for (int b : fixed) rhs(i) -= tangent.mandel()(free[i], b) * d(b);
        for (int j = 0; j < nf; ++j) cff(i, j) = tangent.mandel()(free[i], free[j]);
      }
      const Eigen::VectorXd df = cff.partialPivLu().solve(rhs);
      for (int i = 0; i < nf; ++i) plain[free[i]] += df(i) / kMandelWeight[free[i]];
    }

    // The substep count is frozen during the Newton solve (it would otherwise
    // make the residual discontinuous) and re-synchronized with the converged
    // increment so a replay of the recorded strains takes the same substeps.
    auto count = [&] {
      return substeps_for(SymTensor2::from_components(plain).mandel() - state.strain.mandel(), opts.max_substep);
    };
    int m = count();
    StepResult res;
    bool converged = false;
    for (int it = 0, resyncs = 0; it < opts.max_iterations; ++it) {
      res = advance(model, state, SymTensor2::from_components(plain), m);
      if (nf == 0) {
        converged = true;
        break;
      }
      Eigen::VectorXd r(nf);
      Eigen::MatrixXd cff(nf, nf);
      for (int i = 0; i < nf; ++i) {
        r(i) = res.state.stress.mandel()(free[i]);
        for (int j = 0; j < nf; ++j) cff(i, j) = res.tangent.mandel()(free[i], free[j]);
      }
      if (r.cwiseAbs().maxCoeff() <= tol) {
        if (const int mc = count(); mc != m && resyncs++ < 3) {
          m = mc;
          continue;
        }
        converged = true;
        break;
      }
      const Eigen::VectorXd df = cff.partialPivLu().solve(-r);
      for (int i = 0; i < nf; ++i) plain[free[i]] += df(i) / kMandelWeight[free[i]];
    }
    if (!converged) {
      std::ostringstream msg;
      msg << "run_program: mixed-control Newton did not converge at step " << k;
      throw ConvergenceError(msg.str());
    }
    state = res.state;
    tangent = res.tangent;
    out.strain.push_back(state.strain);
    out.stress.push_back(state.stress);
    out.strain_components.push_back(plain);
  }
  return out;
}

ProgramResult run_strain_history(const std::vector<SymTensor2>& strains, const MeanFieldModel& model,
                                 const DriverOptions& opts) {
  ProgramResult out;
  out.strain.reserve(strains.size());
  out.stress.reserve(strains.size());
  CompositeState state;
  for (std::size_t k = 0; k < strains.size(); ++k) {
    if (!(k == 0 && strains[0].mandel().isZero(0.0))) state = advance(model, state, strains[k],
                      substeps_for(strains[k].mandel() - state.strain.mandel(), opts.max_substep))
                  .state;
    out.strain.push_back(state.strain);
    out.stress.push_back(state.stress);
    out.strain_components.push_back(strains[k].to_components());
  }
  return out;
}

std::vector<double> cycle_waveform(int cycles, int steps_per_quarter) {
  if (cycles < 1 || steps_per_quarter < 1)
    throw std::invalid_argument("cycle_waveform: cycles and steps must be positive");
  std::vector<double> w{0.0};
  const double h = 1.0 / steps_per_quarter;
  for (int c = 0; c < cycles; ++c) {
    for (int i = 1; i <= steps_per_quarter; ++i) w.push_back(i * h);
    for (int i = 1; i <= 2 * steps_per_quarter; ++i) w.push_back(1.0 - i * h);
    for (int i = 1; i <= steps_per_quarter; ++i) w.push_back(-1.0 + i * h);
  }
  return w;
}

}  // namespace sfrc
