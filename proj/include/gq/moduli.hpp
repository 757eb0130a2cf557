#ifndef GQ_MODULI_HPP
#define GQ_MODULI_HPP

#include <memory>
#include <numbers>
#include <random>
#include <variant>

#include "gq/bohr_sommerfeld.hpp"

namespace gq {

/// Tangent vector (psi1, psi2): psi1 generates a normal displacement
/// (d psi1/ds) / omega(N, T) N, psi2 rescales the half-weight by (1 + psi2).
struct ModuliTangent {
  Eigen::VectorXd psi1, psi2;
  Eigen::Index size() const { return psi1.size(); }
  ModuliTangent operator+(const ModuliTangent& o) const { return {psi1 + o.psi1, psi2 + o.psi2}; }
  ModuliTangent operator-(const ModuliTangent& o) const { return {psi1 - o.psi1, psi2 - o.psi2}; }
  ModuliTangent operator*(double c) const { return {c * psi1, c * psi2}; }
  double max_abs() const { return std::max(psi1.cwiseAbs().maxCoeff(), psi2.cwiseAbs().maxCoeff()); }
};

struct ModuliOptions {
  double tau = 0.5;
  DerivativeScheme scheme = DerivativeScheme::FourthOrder;
  /// Holonomy tolerance of the BS check; negative disables the check.
  double bs_tol = 1e-8;
};

inline double tau_for(int level, double planck) { return level * planck / 2.0; }

/// Half-weighted BS loop with cached loop geometry.
class ModuliPoint {
 public:
  ModuliPoint(LagrangianLoop loop, HalfWeight weight, ModuliOptions opt = {});
  /// Weight rescaled to volume r.
  static ModuliPoint normalized(LagrangianLoop loop, const HalfWeight& weight, double r, ModuliOptions opt = {});

  const LagrangianLoop& loop() const { return loop_; }
  const HalfWeight& weight() const { return weight_; }
  const ModuliOptions& options() const { return opt_; }
  int level() const { return loop_.model().level(); }
  double tau() const { return opt_.tau; }
  double volume() const { return weight_.volume(); }
  Eigen::Index size() const { return loop_.size(); }

  const LoopCalculus& calculus() const { return calc_; }
  const Eigen::Matrix3Xd& tangents() const { return t_; }
  const Eigen::Matrix3Xd& normals() const { return n_; }
  /// omega(N, T) per vertex, positive.
  const Eigen::VectorXd& flux() const { return flux_; }
  const Eigen::VectorXd& density() const { return rho_; }

  /// Weighted mean of vertex data.
  double mean(const Eigen::VectorXd& f) const;
  /// Throws InvalidTangent unless both components have weighted zero mean.
  void require_tangent(const ModuliTangent& v, double tol = 1e-10) const;
  ModuliTangent project(const ModuliTangent& v) const;

  /// Cholesky factor of Q^T diag(rho) Q on the zero-mean subspace, built once.
  struct Solver;
  const Solver& solver() const;

 private:
  LagrangianLoop loop_;
  HalfWeight weight_;
  ModuliOptions opt_;
  LoopCalculus calc_;
  Eigen::Matrix3Xd t_, n_;
  Eigen::VectorXd flux_, rho_;
  mutable std::shared_ptr<Solver> solver_;
};

struct KahlerValues {
  double omega;
  double metric;
  ModuliTangent Iv;
};

KahlerValues kahler_eval(const ModuliPoint& pt, const ModuliTangent& v, const ModuliTangent& w);
double moduli_omega(const ModuliPoint& pt, const ModuliTangent& v, const ModuliTangent& w);
double moduli_metric(const ModuliPoint& pt, const ModuliTangent& v, const ModuliTangent& w);
ModuliTangent complex_structure(const ModuliTangent& v);

double induced_function(const Observable& f, const ModuliPoint& pt);

/// Tangential coefficient w_f = -df(N) / omega(N, T) of X_f along the loop,
/// taken against an auxiliary transversal tilted by `tilt` radians from N.
Eigen::VectorXd inner_coefficient(const Observable& f, const ModuliPoint& pt, double tilt = 0.0);

/// (f - mean f, -1/2 (d/ds)(w_f rho) / rho).
ModuliTangent dynamical_field(const Observable& f, const ModuliPoint& pt);

struct Differential {
  Eigen::VectorXd a, b;  // dF(v) = a . psi1 + b . psi2
  double operator()(const ModuliTangent& v) const { return a.dot(v.psi1) + b.dot(v.psi2); }
};
Differential induced_differential(const Observable& f, const ModuliPoint& pt);

/// Solves Omega_k(X, v) = dF_f(v) on the zero-mean subspace, with Omega_k = scale * Omega.
ModuliTangent hamiltonian_field(const Observable& f, const ModuliPoint& pt, double scale = 1.0);

struct BracketCheck {
  double lhs, rhs;
  double pointwise_residual;  // restricted bracket identity along the loop
};
BracketCheck bracket_check(const Observable& f, const Observable& g, const ModuliPoint& pt);

/// max |{f,g} - (df(W_g) - dg(W_f))| along the loop, for the tangential parts W
/// taken against a transversal tilted from the metric normal.
double restricted_bracket_residual(const Observable& f, const Observable& g, const ModuliPoint& pt, double tilt);

double critical_residual(const Observable& f, const ModuliPoint& pt);

/// Realizes a tangent vector: darboux_chart with eps * psi1, weight times (1 + eps psi2),
/// volume restored, then an optional BS shift.
ModuliPoint moduli_step(const ModuliPoint& pt, const ModuliTangent& v, double eps, bool correct_bs = true);

ModuliPoint isodrastic_flow(const Observable& f, const ModuliPoint& pt, double t, int steps);

struct LevelRescale {
  double bracket_k, bracket_1;
};
LevelRescale level_rescale(const Observable& f, const Observable& g, const ModuliPoint& pt, int k);

/// Observable with dynamical_field(f, pt) = target: the extension of psi1 with a
/// linear normal term in a tube around the loop.
Observable surjectivity_witness(const ModuliTangent& target, const ModuliPoint& pt);

struct DeformationField {
  Eigen::VectorXd derivative;    // d(f|_S)/ds
  Eigen::Matrix3Xd displacement;  // normal part of X_f
};
using QuasiclassicalObject = std::variant<double, DeformationField>;

QuasiclassicalObject quasiclassical_object(const Observable& f, const LagrangianLoop& loop, double tol = 1e-10);

/// Normal part of the flow commutator of f and g on the loop over eps^2, Richardson
/// extrapolated, against minus the displacement of {f,g}. Returns the max deviation.
double quasiclassical_bracket_residual(const Observable& f, const Observable& g, const LagrangianLoop& loop,
                                       double eps = 1e-3);

/// FD linearization of the dynamical field at pt on the first `modes` Fourier modes of
/// each component, and ||L I - I L|| / ||L|| there.
struct Linearization {
  Eigen::MatrixXd L;
  double commutator;
  double min_singular;
};
Linearization critical_linearization(const Observable& f, const ModuliPoint& pt, int modes, double eps = 1e-5);

/// Sphere only: moves a BS point by a rigid Hamiltonian rotation until its loop passes through `target`.
ModuliPoint transport_through(const ModuliPoint& pt, const Vec3& target, int steps = 400);

/// Smooth positive half-weight exp(sum of low Fourier modes), volume r.
template <class Rng>
HalfWeight random_half_weight(Rng& rng, Eigen::Index n, double r, int modes = 3, double amplitude = 0.3) {
  std::normal_distribution<double> g(0.0, amplitude);
  Eigen::VectorXd log_theta = Eigen::VectorXd::Zero(n);
  for (int m = 1; m <= modes; ++m) {
    const double a = g(rng), b = g(rng);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double ph = 2.0 * std::numbers::pi * m * static_cast<double>(i) / static_cast<double>(n);
      log_theta(i) += a * std::cos(ph) + b * std::sin(ph);
    }
  }
  return HalfWeight(log_theta.array().exp().matrix()).normalized(r);
}

/// Random sphere point: a BS latitude at the given level, deformed by a short
/// Hamiltonian flow of a random quadratic and a random rotation.
template <class Rng>
ModuliPoint random_sphere_point(Rng& rng, int level, Eigen::Index n, ModuliOptions opt = {}, double r = 2.0,
                                double deform = 0.01) {
  const PhaseModel m = PhaseModel::sphere(level);
  std::uniform_int_distribution<int> pick(1, level - 1);
  std::normal_distribution<double> g(0.0, 1.0);
  const double z0 = 1.0 - 2.0 * pick(rng) / static_cast<double>(level);
  const Observable bend = Polynomial3::random(rng, 2).observable();
  const Vec3 axis = Vec3(g(rng), g(rng), g(rng)).normalized();
  const double angle = std::uniform_real_distribution<double>(0.0, 0.1)(rng);
  const Observable spin = Observable::linear(axis);
  LagrangianLoop loop = LagrangianLoop::latitude(m, z0, n).mapped([&](const Vec3& x) {
    const Vec3 y = hamiltonian_flow(m, bend, x, deform, 100, Integrator::RK4);
    return hamiltonian_flow(m, spin, y, angle, 100, Integrator::RK4);
  });
  loop = bs_correct(loop, level);
  return ModuliPoint(std::move(loop), random_half_weight(rng, n, r), opt);
}

}  // namespace gq

#endif
