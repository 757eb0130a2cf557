#ifndef GQ_BPU_HPP
#define GQ_BPU_HPP

#include <vector>

#include "gq/moduli.hpp"
#include "gq/toeplitz.hpp"

namespace gq {

/// Covariantly constant unit section of the level-k bundle along a sphere loop,
/// written as a phase chi_i in the unitary frame of the holomorphic sections
/// (regular at the north pole). The global phase is pinned by chi_0 = 0.
class PlanckianLift {
 public:
  /// Throws Closure unless the loop is BS at `level` within `tol`.
  PlanckianLift(LagrangianLoop loop, int level, double tol = 1e-8);

  const LagrangianLoop& loop() const { return loop_; }
  int level() const { return k_; }
  const Eigen::VectorXd& phase() const { return chi_; }
  /// |k * action - nearest integer|.
  double closure_defect() const { return defect_; }
  Eigen::VectorXcd unit() const;
  PlanckianLift with_global_phase(double phi) const;

  /// Max over segments of the deviation of the phase increment from the transport
  /// integral, evaluated independently by Gauss quadrature on the loop interpolant.
  double transport_residual(int nodes = 8) const;

 private:
  LagrangianLoop loop_;
  int k_;
  Eigen::VectorXd chi_;
  double defect_;
};

PlanckianLift planckian_lift(const LagrangianLoop& loop, int level, double tol = 1e-8);

/// Coefficients of s -> integral over the lifted loop of s theta^2 in the orthonormal sections.
Eigen::VectorXcd bpu_functional(const ModuliPoint& pt, const HolomorphicModel& m, const PlanckianLift& lift);

/// Ray dual to the loop functional; DegenerateImage when the functional vanishes.
SectionRay bpu_map(const ModuliPoint& pt, const HolomorphicModel& m);
SectionRay bpu_map(const ModuliPoint& pt, const HolomorphicModel& m, const PlanckianLift& lift);

struct EigenstateCheck {
  bool is_critical;
  double critical_residual;
  double eigen_residual;
};
EigenstateCheck eigenstate_check(const Observable& f, const ModuliPoint& pt, const HolomorphicModel& m,
                                 double tol = 1e-8);

/// ||A v - (v^dagger A v) v|| for the unit representative.
double eigen_residual(const HermitianOp& a, const SectionRay& v);

struct MetricWeight {
  double volume;       // round-metric length
  HalfWeight adapted;  // theta^2 = arc length density; sign() is the chosen square root
};
MetricWeight metric_weight(const LagrangianLoop& loop, int sign = 1);

struct WeightedLoop {
  LagrangianLoop loop;
  HalfWeight weight;
};
/// Latitudes of round length r with both adapted half-weights each (empty above the
/// equator length, the equator alone at it).
std::vector<WeightedLoop> metric_level_latitudes(double r, Eigen::Index n);

/// Image of one smooth BS latitude with its invariant weight.
struct FiberImage {
  int index;               // m of the fiber m / k
  double base;             // m / k
  int monomial;            // basis direction of largest overlap
  double overlap;          // fidelity with that basis ray
  double critical_residual;
  double eigen_residual;   // for the height function
};
std::vector<FiberImage> fiber_images(int level, Eigen::Index n = 256);

/// Horizontal derivative of bpu_map along the isodrastic flow of f (central
/// difference in t) next to the projective Hamiltonian field of the Toeplitz matrix.
struct FlowTangent {
  Eigen::VectorXcd observed, predicted;
  /// Real c minimizing ||observed - c predicted||.
  double fitted_constant() const;
  double relative_error(double c) const;
};
FlowTangent bpu_flow_tangent(const Observable& f, const ModuliPoint& pt, const HolomorphicModel& m, double dt = 1e-4,
                             int steps = 20);

}  // namespace gq

#endif
