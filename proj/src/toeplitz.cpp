#include "gq/toeplitz.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include "gq/quadrature.hpp"

namespace gq {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kGramTol = 1e-9;

double log_gram(int k, int j) { return std::lgamma(j + 1.0) + std::lgamma(k - j + 1.0) - std::lgamma(k + 2.0); }

// Longitude Fourier coefficients c(d) = mean_m f(z, phi_m) e^{i d phi_m}, d = -k..k.
Eigen::VectorXcd longitude_modes(const Observable& f, double z, int nphi, int k) {
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  Eigen::VectorXd vals(nphi);
  for (int m = 0; m < nphi; ++m) {
    const double ph = kTwoPi * m / nphi;
    vals(m) = f(Vec3(s * std::cos(ph), s * std::sin(ph), z));
  }
  Eigen::VectorXcd c(2 * k + 1);
  for (int d = -k; d <= k; ++d) {
    std::complex<double> acc = 0.0;
    for (int m = 0; m < nphi; ++m) acc += vals(m) * std::polar(1.0, kTwoPi * d * m / nphi);
    c(d + k) = acc / static_cast<double>(nphi);
  }
  return c;
}

Eigen::MatrixXcd commutator(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) { return a * b - b * a; }

double op_norm(const Eigen::MatrixXcd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
  return svd.singularValues()(0);
}

}  // namespace

HolomorphicModel::HolomorphicModel(int level, int bands, int longitudes) : k_(level) {
  if (level < 1) throw Error(ErrorKind::Level, "holomorphic model needs level >= 1");
  if (bands <= 0) bands = level + 8;
  if (longitudes <= 0) longitudes = 2 * level + 16;
  if (longitudes <= 2 * level) throw Error(ErrorKind::Resolution, "too few longitudes for the section phases");
  nphi_ = longitudes;
  const GaussRule rule = gauss_legendre(bands);
  z_ = rule.nodes;
  w_ = rule.weights / 2.0;
  a_.resize(bands, dim());
  for (int b = 0; b < bands; ++b)
    for (int j = 0; j <= k_; ++j) a_(b, j) = radial(j, z_(b));

  // Monomial Gram through the same band rule, compared with the Beta integrals.
  const Eigen::MatrixXcd unit = toeplitz_operator(Observable::constant(1.0), *this).matrix();
  Eigen::VectorXd scale(dim());
  for (int j = 0; j <= k_; ++j) scale(j) = std::sqrt(analytic_gram(j));
  gram_ = scale.asDiagonal() * unit * scale.asDiagonal();
  const double drift = (unit - Eigen::MatrixXcd::Identity(dim(), dim())).cwiseAbs().maxCoeff();
  if (!(drift <= kGramTol))
    throw Error(ErrorKind::Resolution, "section Gram drifts from its analytic value; raise the band count");
}

double HolomorphicModel::analytic_gram(int j) const { return std::exp(log_gram(k_, j)); }

double HolomorphicModel::radial(int j, double z) const {
  const double u = std::clamp((1.0 - z) / 2.0, 0.0, 1.0);
  const double v = 1.0 - u;
  if ((u == 0.0 && j > 0) || (v == 0.0 && j < k_)) return 0.0;
  double lg = -0.5 * log_gram(k_, j);
  if (j > 0) lg += 0.5 * j * std::log(u);
  if (j < k_) lg += 0.5 * (k_ - j) * std::log(v);
  return std::exp(lg);
}

std::complex<double> HolomorphicModel::section(int j, const Vec3& x) const {
  const double phi = std::atan2(x.y(), x.x());
  return std::polar(radial(j, x.z() / x.norm()), j * phi);
}

Eigen::VectorXcd HolomorphicModel::sections(const Vec3& x) const {
  Eigen::VectorXcd s(dim());
  for (int j = 0; j <= k_; ++j) s(j) = section(j, x);
  return s;
}

HermitianOp toeplitz_operator(const Observable& f, const HolomorphicModel& m) {
  const int k = m.level();
  Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(m.dim(), m.dim());
  for (int b = 0; b < m.bands(); ++b) {
    const Eigen::VectorXcd c = longitude_modes(f, m.band_z()(b), m.longitudes(), k);
    const double w = m.band_weight()(b);
    for (int j = 0; j <= k; ++j)
      for (int l = 0; l <= k; ++l) t(j, l) += w * m.band_radial()(b, j) * m.band_radial()(b, l) * c(l - j + k);
  }
  return HermitianOp(t);
}

double coherent_kernel(const Vec3& x, const SectionRay& p, const HolomorphicModel& m) {
  if (p.dim() != m.dim()) throw Error(ErrorKind::DimensionMismatch, "ray and section space dimensions differ");
  return std::norm(m.sections(x).dot(p.representative().conjugate()));
}

BerezinCheck berezin_symbol_check(const Observable& f, const SectionRay& p, const HolomorphicModel& m) {
  const double matrix_side = symbol_value(toeplitz_operator(f, m), p);
  // Independent tensor rule at twice the resolution, direct pointwise evaluation.
  const int nz = 2 * m.bands(), nphi = 2 * m.longitudes();
  const GaussRule rule = gauss_legendre(nz);
  double acc = 0.0;
  for (int b = 0; b < nz; ++b) {
    const double z = rule.nodes(b), s = std::sqrt(std::max(0.0, 1.0 - z * z));
    double band = 0.0;
    for (int q = 0; q < nphi; ++q) {
      const double ph = kTwoPi * (q + 0.5) / nphi;
      const Vec3 x(s * std::cos(ph), s * std::sin(ph), z);
      band += f(x) * coherent_kernel(x, p, m);
    }
    acc += rule.weights(b) / 2.0 * band / nphi;
  }
  return {matrix_side, acc};
}

double rawnsley_lambda(const Vec3& x, const HolomorphicModel& m) { return m.sections(x).squaredNorm() / m.dim(); }

namespace {
struct BracketPair {
  Eigen::MatrixXcd commutator, bracket;
  std::complex<double> best_scale() const {
    const double nc = commutator.squaredNorm();
    if (nc == 0.0) return 0.0;
    return (commutator.array().conjugate() * bracket.array()).sum() / nc;
  }
};

BracketPair bracket_pair(const Observable& f, const Observable& g, int level) {
  const HolomorphicModel m(level);
  const PhaseModel sphere = PhaseModel::sphere(level);
  return {commutator(toeplitz_operator(f, m).matrix(), toeplitz_operator(g, m).matrix()),
          toeplitz_operator(bracket_observable(sphere, f, g), m).matrix()};
}
}  // namespace

std::complex<double> optimal_scale(const Observable& f, const Observable& g, int level) {
  return bracket_pair(f, g, level).best_scale();
}

double correspondence_defect(const Observable& f, const Observable& g, int level) {
  const BracketPair p = bracket_pair(f, g, level);
  const double nb = p.bracket.norm();
  if (nb == 0.0) return 0.0;
  return (p.best_scale() * p.commutator - p.bracket).norm() / nb;
}

Calibration calibrate(const Observable& f, const Observable& g, int k1, int k2) {
  if (k2 <= k1) throw Error(ErrorKind::Config, "calibration levels must be increasing");
  const std::complex<double> c1 = optimal_scale(f, g, k1), c2 = optimal_scale(f, g, k2);
  return {(c2 - c1) / static_cast<double>(k2 - k1), k1, k2};
}

std::vector<double> asymptotic_residual(const Observable& f, const Observable& g, const std::vector<int>& levels,
                                        const Calibration& cal) {
  std::vector<double> out;
  out.reserve(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const int k = levels[i];
    if (k < 2) throw Error(ErrorKind::Config, "asymptotic levels must be >= 2");
    if (i > 0 && k <= levels[i - 1]) throw Error(ErrorKind::Config, "asymptotic levels must be ascending");
    const BracketPair p = bracket_pair(f, g, k);
    out.push_back(op_norm(cal.kappa * static_cast<double>(k) * p.commutator - p.bracket));
  }
  return out;
}

double loglog_slope(const std::vector<int>& levels, const std::vector<double>& residuals) {
  if (levels.size() != residuals.size() || levels.size() < 2)
    throw Error(ErrorKind::DimensionMismatch, "slope fit needs matching sequences of length >= 2");
  const auto n = static_cast<Eigen::Index>(levels.size());
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, 0) = std::log(static_cast<double>(levels[i]));
    a(i, 1) = 1.0;
    y(i) = std::log(residuals[i]);
  }
  return a.colPivHouseholderQr().solve(y)(0);
}

void write_residual_csv(std::ostream& os, const std::vector<int>& levels, const std::vector<double>& residuals) {
  const double slope = loglog_slope(levels, residuals);
  os << "k,residual,slope\n";
  os.precision(12);
  for (std::size_t i = 0; i < levels.size(); ++i) os << levels[i] << ',' << residuals[i] << ',' << slope << '\n';
}

}  // namespace gq
