#include "gq/bpu.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "gq/quadrature.hpp"

namespace gq {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const Vec3 kNorth = Vec3::UnitZ();

void require_sphere(const LagrangianLoop& loop, const char* what) {
  if (loop.model().kind() != ModelKind::Sphere) throw Error(ErrorKind::Domain, std::string(what) + " needs a sphere loop");
}

}  // namespace

PlanckianLift::PlanckianLift(LagrangianLoop loop, int level, double tol) : loop_(std::move(loop)), k_(level) {
  require_sphere(loop_, "planckian lift");
  if (level < 1) throw Error(ErrorKind::Level, "level must be a positive integer");
  const Eigen::Index n = loop_.size();
  const Eigen::Matrix3Xd t = loop_.tangents(DerivativeScheme::Spectral);
  Eigen::VectorXd g(n);
  for (Eigen::Index i = 0; i < n; ++i) g(i) = loop_.model().potential(loop_.vertex(i), t.col(i), kNorth);
  const double action = g.mean();
  const double ka = level * action;
  defect_ = std::abs(ka - std::round(ka));
  if (!(defect_ <= tol)) {
    std::ostringstream os;
    os << "loop is not Bohr-Sommerfeld at level " << level << ": defect angle " << kTwoPi * defect_;
    throw Error(ErrorKind::Closure, os.str());
  }
  const LoopCalculus calc(n, DerivativeScheme::Spectral);
  const Eigen::VectorXd periodic = calc.antiderivative((g.array() - action).matrix());
  chi_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
    chi_(i) = kTwoPi * level * (action * static_cast<double>(i) / static_cast<double>(n) + periodic(i) - periodic(0));
}

Eigen::VectorXcd PlanckianLift::unit() const {
  Eigen::VectorXcd u(chi_.size());
  for (Eigen::Index i = 0; i < chi_.size(); ++i) u(i) = std::polar(1.0, chi_(i));
  return u;
}

PlanckianLift PlanckianLift::with_global_phase(double phi) const {
  PlanckianLift out = *this;
  out.chi_.array() += phi;
  return out;
}

double PlanckianLift::transport_residual(int nodes) const {
  const LoopInterpolant curve(loop_);
  const Eigen::Index n = loop_.size();
  const double h = 1.0 / static_cast<double>(n);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = i * h;
    const GaussRule rule = gauss_legendre(nodes, a, a + h);
    double integral = 0.0;
    for (int q = 0; q < nodes; ++q) {
      const double s = rule.nodes(q);
      integral += rule.weights(q) * loop_.model().potential(curve.position(s), curve.tangent(s), kNorth);
    }
    const double step = (i + 1 < n ? chi_(i + 1) : chi_(0)) - chi_(i);
    double d = step - kTwoPi * k_ * integral;
    // The closing segment matches up to a multiple of 2 pi.
    if (i + 1 == n) d = std::remainder(d, kTwoPi);
    worst = std::max(worst, std::abs(d));
  }
  return worst;
}

PlanckianLift planckian_lift(const LagrangianLoop& loop, int level, double tol) { return PlanckianLift(loop, level, tol); }

Eigen::VectorXcd bpu_functional(const ModuliPoint& pt, const HolomorphicModel& m, const PlanckianLift& lift) {
  if (lift.loop().size() != pt.size()) throw Error(ErrorKind::DimensionMismatch, "lift and point sizes differ");
  const Eigen::VectorXd rho = pt.density();
  const Eigen::VectorXd& chi = lift.phase();
  Eigen::VectorXcd ell = Eigen::VectorXcd::Zero(m.dim());
  for (Eigen::Index i = 0; i < pt.size(); ++i)
    ell += std::polar(rho(i), -chi(i)) * m.sections(pt.loop().vertex(i));
  return ell / static_cast<double>(pt.size());
}

SectionRay bpu_map(const ModuliPoint& pt, const HolomorphicModel& m, const PlanckianLift& lift) {
  const Eigen::VectorXcd ell = bpu_functional(pt, m, lift);
  if (!(ell.norm() > 1e-12 * pt.volume()))
    throw Error(ErrorKind::DegenerateImage, "loop functional vanishes on the section space");
  // Orthonormal sections: the Riesz dual of the functional is its conjugate.
  return SectionRay(ell.conjugate());
}

SectionRay bpu_map(const ModuliPoint& pt, const HolomorphicModel& m) {
  if (pt.level() != m.level()) throw Error(ErrorKind::Level, "moduli point and section space levels differ");
  const double tol = pt.options().bs_tol >= 0.0 ? std::max(pt.options().bs_tol, 1e-8) : 1e-6;
  return bpu_map(pt, m, PlanckianLift(pt.loop(), pt.level(), tol));
}

double eigen_residual(const HermitianOp& a, const SectionRay& v) {
  const Eigen::VectorXcd& x = v.representative();
  const Eigen::VectorXcd ax = a.matrix() * x;
  return (ax - x.dot(ax) * x).norm();
}

EigenstateCheck eigenstate_check(const Observable& f, const ModuliPoint& pt, const HolomorphicModel& m, double tol) {
  const double crit = critical_residual(f, pt);
  const double res = eigen_residual(toeplitz_operator(f, m), bpu_map(pt, m));
  return {crit <= tol, crit, res};
}

MetricWeight metric_weight(const LagrangianLoop& loop, int sign) {
  const Eigen::Matrix3Xd t = loop.tangents(DerivativeScheme::Spectral);
  const Eigen::VectorXd speed = t.colwise().norm().transpose();
  HalfWeight w(speed.cwiseSqrt(), sign >= 0 ? 1 : -1);
  return {w.volume(), w};
}

std::vector<WeightedLoop> metric_level_latitudes(double r, Eigen::Index n) {
  const double top = kTwoPi;
  std::vector<WeightedLoop> out;
  if (!(r > 0.0) || r > top * (1.0 + 1e-14)) return out;
  const double z = std::sqrt(std::max(0.0, 1.0 - (r / top) * (r / top)));
  const PhaseModel m = PhaseModel::sphere();
  std::vector<double> heights{z};
  if (z > 0.0) heights.push_back(-z);
  for (double h : heights) {
    const LagrangianLoop loop = LagrangianLoop::latitude(m, h, n);
    for (int s : {1, -1}) out.push_back({loop, metric_weight(loop, s).adapted});
  }
  return out;
}

std::vector<FiberImage> fiber_images(int level, Eigen::Index n) {
  const HolomorphicModel hm(level);
  const PhaseModel sphere = PhaseModel::sphere(level);
  const Observable height = Observable::coordinate(2);
  const HermitianOp az = toeplitz_operator(height, hm);
  std::vector<FiberImage> out;
  for (int j = 1; j < level; ++j) {
    const double t = static_cast<double>(j) / level;
    const LagrangianLoop loop = LagrangianLoop::latitude(sphere, 1.0 - 2.0 * t, n);
    const ModuliPoint pt(loop, invariant_half_weight(loop, height, 1.0));
    const SectionRay v = bpu_map(pt, hm);
    FiberImage img{j, t, 0, 0.0, critical_residual(height, pt), eigen_residual(az, v)};
    for (int b = 0; b <= level; ++b) {
      const double fid = v.fidelity(SectionRay::basis(hm.dim(), b));
      if (fid > img.overlap) {
        img.overlap = fid;
        img.monomial = b;
      }
    }
    out.push_back(img);
  }
  return out;
}

double FlowTangent::fitted_constant() const {
  const double np = predicted.squaredNorm();
  return np > 0.0 ? predicted.dot(observed).real() / np : 0.0;
}

double FlowTangent::relative_error(double c) const {
  const double no = observed.norm();
  return (observed - c * predicted).norm() / (no > 0.0 ? no : 1.0);
}

FlowTangent bpu_flow_tangent(const Observable& f, const ModuliPoint& pt, const HolomorphicModel& m, double dt,
                             int steps) {
  const SectionRay v0 = bpu_map(pt, m);
  const Eigen::VectorXcd& x0 = v0.representative();
  auto aligned = [&](double t) {
    const Eigen::VectorXcd x = bpu_map(isodrastic_flow(f, pt, t, steps), m).representative();
    const std::complex<double> ov = x0.dot(x);
    return Eigen::VectorXcd(x * (std::conj(ov) / std::abs(ov)));
  };
  Eigen::VectorXcd d = (aligned(dt) - aligned(-dt)) / (2.0 * dt);
  d -= x0.dot(d) * x0;
  return {d, symbol_field(toeplitz_operator(f, m), v0)};
}

}  // namespace gq
