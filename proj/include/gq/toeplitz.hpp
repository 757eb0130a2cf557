#ifndef GQ_TOEPLITZ_HPP
#define GQ_TOEPLITZ_HPP

#include <complex>
#include <iosfwd>
#include <random>
#include <vector>

#include "gq/phase_space.hpp"
#include "gq/projective.hpp"

namespace gq {

/// Holomorphic sections of the level-k bundle over the unit sphere.
///
/// The monomial w^j, w = (x + iy)/(1 + z), has pointwise norm
/// ((1-z)/2)^{j/2} ((1+z)/2)^{(k-j)/2}; sections are used orthonormalized
/// against the Liouville probability measure, sigma_j = a_j(z) e^{i j phi}.
class HolomorphicModel {
 public:
  /// Zero resolution picks k + 8 latitude bands and 2k + 16 longitudes.
  explicit HolomorphicModel(int level, int bands = 0, int longitudes = 0);

  int level() const { return k_; }
  int dim() const { return k_ + 1; }
  int bands() const { return static_cast<int>(z_.size()); }
  int longitudes() const { return nphi_; }

  /// Analytic squared norm of the monomial w^j: j! (k - j)! / (k + 1)!.
  double analytic_gram(int j) const;
  /// Quadrature Gram matrix of the monomials; construction fails with a resolution
  /// error when it drifts from the analytic diagonal by more than 1e-9 relative.
  const Eigen::MatrixXcd& gram() const { return gram_; }

  double radial(int j, double z) const;
  std::complex<double> section(int j, const Vec3& x) const;
  Eigen::VectorXcd sections(const Vec3& x) const;

  // Quadrature rule: band nodes in z, weights summing to 1 over the sphere.
  const Eigen::VectorXd& band_z() const { return z_; }
  const Eigen::VectorXd& band_weight() const { return w_; }
  /// Radial factors a_j at the band nodes, bands x (k + 1).
  const Eigen::MatrixXd& band_radial() const { return a_; }

 private:
  int k_;
  int nphi_;
  Eigen::VectorXd z_, w_;
  Eigen::MatrixXd a_;
  Eigen::MatrixXcd gram_;
};

using HermitianOp = Hermitian<double>;
using SectionRay = Ray<double>;

HermitianOp toeplitz_operator(const Observable& f, const HolomorphicModel& m);

/// |s(x)|^2 for the unit representative of p.
double coherent_kernel(const Vec3& x, const SectionRay& p, const HolomorphicModel& m);

struct BerezinCheck {
  double matrix_side, integral_side;
};
/// Matrix symbol against a quadrature of f u_k(., p) on a finer, independent grid.
BerezinCheck berezin_symbol_check(const Observable& f, const SectionRay& p, const HolomorphicModel& m);

/// Average of u_k(x, .) over the unitarily invariant probability measure on rays,
/// by the trace identity sum_j |sigma_j(x)|^2 / (k + 1).
double rawnsley_lambda(const Vec3& x, const HolomorphicModel& m);

template <class Rng>
double rawnsley_lambda_mc(const Vec3& x, const HolomorphicModel& m, Rng& rng, int samples = 10000) {
  double acc = 0.0;
  for (int i = 0; i < samples; ++i) acc += coherent_kernel(x, SectionRay::random(rng, m.dim()), m);
  return acc / samples;
}

/// Best complex c with c [A_f, A_g] closest to A_{f,g} in Frobenius norm.
std::complex<double> optimal_scale(const Observable& f, const Observable& g, int level);

/// Relative Frobenius defect of the best per-level scale: zero when the commutator
/// is exactly proportional to the quantized bracket.
double correspondence_defect(const Observable& f, const Observable& g, int level);

/// Frozen c(k) = kappa k, with kappa the slope of the optimal scale between two levels.
struct Calibration {
  std::complex<double> kappa;
  int k1, k2;
};
Calibration calibrate(const Observable& f, const Observable& g, int k1 = 8, int k2 = 16);

/// ||c(k) [A_f, A_g] - A_{f,g}||_op for each k.
std::vector<double> asymptotic_residual(const Observable& f, const Observable& g, const std::vector<int>& levels,
                                        const Calibration& cal);

/// Least-squares slope of log residual against log k.
double loglog_slope(const std::vector<int>& levels, const std::vector<double>& residuals);

/// CSV with columns k, residual, slope (the fitted slope repeated per row).
void write_residual_csv(std::ostream& os, const std::vector<int>& levels, const std::vector<double>& residuals);

}  // namespace gq

#endif
