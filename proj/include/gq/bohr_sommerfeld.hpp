#ifndef GQ_BOHR_SOMMERFELD_HPP
#define GQ_BOHR_SOMMERFELD_HPP

#include <complex>
#include <optional>
#include <vector>

#include "gq/loop.hpp"

namespace gq {

struct Holonomy {
  double action;       // integral of the potential, defined modulo integers
  double coordinate;   // k * action reduced to [0, 1)
  double defect;       // distance from k * action to the nearest integer
  std::complex<double> phase;
  bool is_bs;
};

/// Integral of the model potential along the loop.
/// Spectral tangents with the trapezoid rule. On the sphere the cap axis is
/// chosen away from the loop unless given.
double loop_action(const LagrangianLoop& loop, std::optional<Vec3> axis = std::nullopt);

Holonomy holonomy_class(const LagrangianLoop& loop, int level, double tol = 1e-8);
inline Holonomy holonomy_class(const LagrangianLoop& loop, double tol = 1e-8) {
  return holonomy_class(loop, loop.model().level(), tol);
}

/// Regular level sets of a single energy function, parametrized by an action base.
/// Sphere: height z with base t = (1 - z) / 2 in (0, 1), poles singular.
/// Torus: momentum p with base p in [0, 1).
class LagrangianFibration {
 public:
  static LagrangianFibration sphere_height();
  static LagrangianFibration torus_momentum();

  const PhaseModel& model() const { return model_; }
  const Observable& energy() const { return energy_; }
  double base_lo() const { return lo_; }
  double base_hi() const { return hi_; }
  /// Whether base_lo is itself a regular fiber (half-open base).
  bool includes_lo() const { return includes_lo_; }
  LagrangianLoop fiber(double t, Eigen::Index n) const;
  /// Action of the fiber in a gauge continuous along the base.
  double action(double t, Eigen::Index n) const;
  std::vector<Vec3> singular_points() const;

 private:
  LagrangianFibration(PhaseModel m, Observable e, double lo, double hi, bool inc);
  PhaseModel model_;
  Observable energy_;
  double lo_, hi_;
  bool includes_lo_;
};

struct BsCensus {
  std::vector<double> base;       // base parameters of the smooth BS fibers
  std::vector<double> residuals;  // holonomy defects
  std::vector<Vec3> singular;     // degenerate fibers (points)
  int smooth() const { return static_cast<int>(base.size()); }
  int total() const { return smooth() + static_cast<int>(singular.size()); }
};

BsCensus bs_fibers(const LagrangianFibration& fib, int level, Eigen::Index n = 256, double tol = 1e-8);

/// Half-weight invariant under the flow of `energy` along a regular fiber,
/// normalized to volume r.
HalfWeight invariant_half_weight(const LagrangianLoop& loop, const Observable& energy, double r);

/// Tangential coefficient of the Hamiltonian field of f along the loop.
Eigen::VectorXd tangential_coefficient(const LagrangianLoop& loop, const Observable& f,
                                       DerivativeScheme scheme = DerivativeScheme::Spectral);

/// max |d/ds (w rho)| for the tangential coefficient w of f.
double flow_invariance_residual(const LagrangianLoop& loop, const HalfWeight& w, const Observable& f,
                                DerivativeScheme scheme = DerivativeScheme::Spectral);

/// Restores the BS condition by a uniform normal shift (Newton on the defect).
LagrangianLoop bs_correct(const LagrangianLoop& loop, int level, double tol = 1e-12, int max_iter = 20);

/// Nearby loop generated by the periodic function psi:
/// normal displacement (d psi / ds) / omega(N, T) along the metric normal N.
LagrangianLoop darboux_chart(const LagrangianLoop& base, const Eigen::VectorXd& psi, double eps,
                             DerivativeScheme scheme = DerivativeScheme::Spectral);

}  // namespace gq

#endif
