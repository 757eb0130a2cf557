#ifndef GQ_PREQUANTUM_HPP
#define GQ_PREQUANTUM_HPP

#include <complex>
#include <functional>
#include <iosfwd>
#include <random>
#include <vector>

#include "gq/phase_space.hpp"

namespace gq {

/// Level-k prequantum line bundle over the torus sampled on an n x n grid,
/// p_i = i / n, q_j = j / n.
///
/// Sections live on the universal cover with s(p, q + 1) = s(p, q) and
/// s(p + 1, q) = exp(-2 pi i k q) s(p, q). The connection is d + 2 pi i k p dq,
/// corrected by d(phi)/2 for the hermitian weight e^phi; link variables carry the
/// parallel transport, so each plaquette has holonomy exp(2 pi i k h^2).
class PrequantumBundle {
 public:
  PrequantumBundle(int level, int n, const Observable& weight = Observable::constant(1.0));

  int level() const { return k_; }
  int size() const { return n_; }
  double spacing() const { return 1.0 / n_; }
  const PhaseModel& model() const { return model_; }
  Vec3 point(int i, int j) const { return {i * spacing(), j * spacing(), 0.0}; }
  /// log of the hermitian weight at the grid points.
  const Eigen::MatrixXd& log_weight() const { return phi_; }

  /// Transport factor pulling s(i + 1, j) back to (i, j); includes the twist at the wrap.
  std::complex<double> link_p(int i, int j) const { return lp_(i, j); }
  /// Transport factor pulling s(i, j + 1) back to (i, j).
  std::complex<double> link_q(int i, int j) const { return lq_(i, j); }

  /// Argument of the counterclockwise plaquette holonomy at cell (i, j).
  double plaquette_angle(int i, int j) const;
  /// Sum of plaquette angles over 2 pi.
  double chern_number() const;

 private:
  std::complex<double> compute_link_p(int i, int j) const;
  std::complex<double> compute_link_q(int i, int j) const;

  PhaseModel model_;
  int k_, n_;
  Eigen::MatrixXd phi_;
  Eigen::MatrixXcd lp_, lq_;
};

/// Grid values of a section over the fundamental square.
class DiscretizedSection {
 public:
  DiscretizedSection(const PrequantumBundle& b, Eigen::MatrixXcd values);
  static DiscretizedSection zero(const PrequantumBundle& b);
  /// Samples a function on the universal cover (assumed twist-consistent).
  static DiscretizedSection sample(const PrequantumBundle& b,
                                   const std::function<std::complex<double>(double, double)>& s);

  int level() const { return k_; }
  int size() const { return static_cast<int>(v_.rows()); }
  const Eigen::MatrixXcd& values() const { return v_; }
  /// Value at any lattice index through the twist rule.
  std::complex<double> at(long i, long j) const;

  DiscretizedSection operator+(const DiscretizedSection& o) const;
  DiscretizedSection operator-(const DiscretizedSection& o) const;
  DiscretizedSection operator*(std::complex<double> c) const;

 private:
  int k_;
  Eigen::MatrixXcd v_;
};

/// Liouville-weighted pairing h^2 sum e^phi s1 conj(s2).
std::complex<double> q_inner(const PrequantumBundle& b, const DiscretizedSection& s1, const DiscretizedSection& s2);
double q_norm(const PrequantumBundle& b, const DiscretizedSection& s);

/// Centered covariant differences along p (axis 0) and q (axis 1).
DiscretizedSection covariant_difference(const PrequantumBundle& b, const DiscretizedSection& s, int axis);

/// Q_f = nabla_{X_f} + 2 pi i k f, and the symmetric form i Q_f.
class KostantOperator {
 public:
  /// Throws Resolution unless the field changes across a cell by less than its
  /// maximal size (relative per-cell displacement below one cell).
  KostantOperator(const Observable& f, const PrequantumBundle& b);
  DiscretizedSection apply(const DiscretizedSection& s) const;
  DiscretizedSection apply_hat(const DiscretizedSection& s) const { return apply(s) * std::complex<double>(0, 1); }
  double cell_displacement() const { return cfl_; }

 private:
  const PrequantumBundle* b_;
  Eigen::MatrixXd xp_, xq_, f_;
  double cfl_;
};

KostantOperator kostant_operator(const Observable& f, const PrequantumBundle& b);

/// Smooth quasi-periodic section: Gaussian bumps in p times low q-modes, periodized by the twist.
struct SmoothSection {
  struct Bump {
    std::complex<double> amplitude;
    double center, width;
    std::vector<std::complex<double>> modes;  // q-modes -M..M
  };
  int level;
  std::vector<Bump> bumps;

  std::complex<double> operator()(double p, double q) const;
  /// Grid samples, evaluated separably in p and q.
  DiscretizedSection on(const PrequantumBundle& b) const;

  template <class Rng>
  static SmoothSection random(Rng& rng, int level, int bumps = 2, int max_mode = 2);
};

template <class Rng>
SmoothSection SmoothSection::random(Rng& rng, int level, int nb, int max_mode) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SmoothSection s{level, {}};
  for (int b = 0; b < nb; ++b) {
    Bump bump{{g(rng), g(rng)}, u(rng), 0.1 + 0.05 * u(rng), {}};
    for (int m = -max_mode; m <= max_mode; ++m) bump.modes.emplace_back(g(rng) / (1 + m * m), g(rng) / (1 + m * m));
    s.bumps.push_back(bump);
  }
  return s;
}

/// Reproducible batch of smooth sections, the same functions at every grid size.
std::vector<SmoothSection> smooth_batch(int level, int count, unsigned seed);

std::vector<DiscretizedSection> sample_batch(const PrequantumBundle& b, const std::vector<SmoothSection>& batch);

/// max over the batch of ||([Q_f, Q_g] + Q_{f,g}) s|| / ||s||.
double commutator_residual(const Observable& f, const Observable& g, const Observable& fg, const PrequantumBundle& b,
                           const std::vector<DiscretizedSection>& batch);
double commutator_residual(const Observable& f, const Observable& g, const Observable& fg, const PrequantumBundle& b,
                           const std::vector<SmoothSection>& batch);
double commutator_residual(const Observable& f, const Observable& g, const PrequantumBundle& b,
                           const std::vector<SmoothSection>& batch);

/// |<Q_f s1, s2>_q + <s1, Q_f s2>_q|.
double adjointness_residual(const Observable& f, const PrequantumBundle& b, const DiscretizedSection& s1,
                            const DiscretizedSection& s2);
/// max over batch pairs of |<Q^ s1, s2> - <s1, Q^ s2>| / (||s1|| ||s2||).
double hermiticity_defect(const Observable& f, const PrequantumBundle& b, const std::vector<SmoothSection>& batch);

/// max |D<s1, s2>_h - <D s1, s2>_h - <s1, D s2>_h| over the grid and both axes.
double compatibility_residual(const PrequantumBundle& b, const DiscretizedSection& s1, const DiscretizedSection& s2);

struct HermitianComparison {
  Eigen::MatrixXd phi;                 // log(weight1 / weight2)
  Eigen::MatrixXcd delta_p, delta_q;   // connection difference per link over h
  double discrepancy;                  // max |Re delta - d(phi)/2| (forward differences)
  double imaginary_part;               // max |Im delta|
};
HermitianComparison hermitian_compare(const PrequantumBundle& b1, const PrequantumBundle& b2);

/// Lift of X_f to the circle bundle with connection form dt - k p dq: vertical
/// part g from integrating dg = -i_{X_f} dA over the grid, and the FD size of the
/// Lie derivative of the connection form along the lift.
struct ContactLift {
  Eigen::MatrixXd vertical;  // g on the grid
  double offset;             // mean of g - k f
  double offset_spread;      // max |g - k f - offset|
  double lie_residual;
};
ContactLift contact_lift(const Observable& f, const PrequantumBundle& b);

/// tau * integral of f <s, s>_h over the torus.
double sk_functional(const Observable& f, const PrequantumBundle& b, const DiscretizedSection& s, double tau);

/// Little-endian (re, im) doubles after a one-line JSON header.
void write_section(std::ostream& os, const DiscretizedSection& s);
DiscretizedSection read_section(std::istream& is, const PrequantumBundle& b);

}  // namespace gq

#endif
