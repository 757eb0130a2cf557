#include "gq/bohr_sommerfeld.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gq {

namespace {

double frac01(double a) {
  double r = a - std::floor(a);
  return r >= 1.0 ? 0.0 : r;
}

Vec3 choose_axis(const Eigen::Matrix3Xd& v) {
  auto score = [&](const Vec3& a) { return (1.0 + (a.transpose() * v).array()).minCoeff(); };
  if (score(Vec3::UnitZ()) >= 0.1) return Vec3::UnitZ();
  Vec3 best = Vec3::UnitZ();
  double bs = score(best);
  const Vec3 centroid = v.rowwise().mean();
  std::vector<Vec3> cands{-Vec3::UnitZ(), Vec3::UnitX(), -Vec3::UnitX(), Vec3::UnitY(), -Vec3::UnitY()};
  if (centroid.norm() > 1e-8) cands.push_back(centroid.normalized());
  for (const Vec3& a : cands)
    if (score(a) > bs) {
      bs = score(a);
      best = a;
    }
  if (bs < 1e-6) throw Error(ErrorKind::HolonomyUndefined, "no regular gauge for this loop");
  return best;
}

}  // namespace

double loop_action(const LagrangianLoop& loop, std::optional<Vec3> axis) {
  if (!loop.has_bookkeeping())
    throw Error(ErrorKind::HolonomyUndefined, "loop crosses the chart cut without winding data");
  const PhaseModel& m = loop.model();
  const Eigen::Index n = loop.size();
  const Eigen::Matrix3Xd t = loop.tangents(DerivativeScheme::Spectral);
  const Eigen::Matrix3Xd& v = loop.vertices();
  const double nn = static_cast<double>(n);
  if (m.kind() == ModelKind::Sphere) {
    const Vec3 a = axis ? Vec3(axis->normalized()) : choose_axis(v);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) acc += m.potential(v.col(i), t.col(i), a);
    return acc / nn;
  }
  // p dq on the lift; p carries a linear part when the loop winds in p.
  const double wp = loop.winding().x(), wq = loop.winding().y();
  double periodic = 0.0, qmean = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = static_cast<double>(i) / nn;
    periodic += (v(0, i) - wp * s) * t(1, i);
    qmean += v(1, i) - wq * s;
  }
  periodic /= nn;
  qmean /= nn;
  const double q0 = v(1, 0);
  const double integral = periodic + wp * (q0 + wq - qmean - wq / 2.0);
  return integral - wp * q0;
}

Holonomy holonomy_class(const LagrangianLoop& loop, int level, double tol) {
  if (level < 1) throw Error(ErrorKind::Level, "level must be a positive integer");
  const double a = loop_action(loop);
  const double ka = level * a;
  const double defect = std::abs(ka - std::round(ka));
  return {a, frac01(ka), defect, std::polar(1.0, 2.0 * std::numbers::pi * ka), defect <= tol};
}

// ---------------------------------------------------------------------------

LagrangianFibration::LagrangianFibration(PhaseModel m, Observable e, double lo, double hi, bool inc)
    : model_(std::move(m)), energy_(std::move(e)), lo_(lo), hi_(hi), includes_lo_(inc) {}

LagrangianFibration LagrangianFibration::sphere_height() {
  return LagrangianFibration(PhaseModel::sphere(), Observable::coordinate(2), 0.0, 1.0, false);
}

LagrangianFibration LagrangianFibration::torus_momentum() {
  return LagrangianFibration(PhaseModel::torus(), Observable::coordinate(0), 0.0, 1.0, true);
}

LagrangianLoop LagrangianFibration::fiber(double t, Eigen::Index n) const {
  if (model_.kind() == ModelKind::Sphere) {
    if (!(t > 0.0 && t < 1.0)) throw Error(ErrorKind::DegenerateFiber, "base value is a singular fiber");
    return LagrangianLoop::latitude(model_, 1.0 - 2.0 * t, n);
  }
  return LagrangianLoop::torus_fiber(model_, t, n);
}

double LagrangianFibration::action(double t, Eigen::Index n) const {
  if (model_.kind() == ModelKind::Sphere) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return loop_action(fiber(t, n), Vec3::UnitZ());
  }
  return loop_action(fiber(t, n));
}

std::vector<Vec3> LagrangianFibration::singular_points() const {
  if (model_.kind() == ModelKind::Sphere) return {Vec3::UnitZ(), -Vec3::UnitZ()};
  return {};
}

BsCensus bs_fibers(const LagrangianFibration& fib, int level, Eigen::Index n, double tol) {
  if (level < 1) throw Error(ErrorKind::Level, "level must be a positive integer");
  const double lo = fib.base_lo(), hi = fib.base_hi();
  const double edge = 1e-6 * (hi - lo);
  const double a = fib.includes_lo() ? lo : lo + edge;
  const double b = hi - edge;
  const int samples = 8 * level + 32;
  auto g = [&](double t) { return level * fib.action(t, n); };

  std::vector<double> roots;
  auto add = [&](double t) {
    for (double r : roots)
      if (std::abs(r - t) < 1e-9) return;
    roots.push_back(t);
  };
  std::vector<double> ts(samples + 1), gs(samples + 1);
  for (int j = 0; j <= samples; ++j) {
    ts[j] = a + (b - a) * j / samples;
    gs[j] = g(ts[j]);
  }
  for (int j = 0; j <= samples; ++j)
    if (std::abs(gs[j] - std::round(gs[j])) < 1e-13) add(ts[j]);
  for (int j = 0; j < samples; ++j) {
    const double g0 = std::min(gs[j], gs[j + 1]), g1 = std::max(gs[j], gs[j + 1]);
    for (double m = std::floor(g0) + 1; m < g1; m += 1.0) {
      double x0 = ts[j], x1 = ts[j + 1];
      const bool rising = gs[j + 1] > gs[j];
      for (int it = 0; it < 200 && x1 - x0 > 1e-15; ++it) {
        const double mid = 0.5 * (x0 + x1);
        ((g(mid) < m) == rising ? x0 : x1) = mid;
      }
      add(0.5 * (x0 + x1));
    }
  }
  std::sort(roots.begin(), roots.end());

  BsCensus out;
  for (double t : roots) {
    const Holonomy h = holonomy_class(fib.fiber(t, n), level, tol);
    out.base.push_back(t);
    out.residuals.push_back(h.defect);
  }
  out.singular = fib.singular_points();
  return out;
}

HalfWeight invariant_half_weight(const LagrangianLoop& loop, const Observable& energy, double r) {
  const Eigen::VectorXd e = restrict_to(energy, loop);
  const double scale = 1.0 + e.cwiseAbs().maxCoeff();
  if (e.maxCoeff() - e.minCoeff() > 1e-8 * scale)
    throw Error(ErrorKind::DegenerateFiber, "loop is not a level set of the energy");
  const Eigen::Matrix3Xd t = loop.tangents();
  Eigen::VectorXd theta(loop.size());
  for (Eigen::Index i = 0; i < loop.size(); ++i) {
    const double speed = hamiltonian_field(loop.model(), energy, loop.vertex(i)).norm();
    if (speed < 1e-10) throw Error(ErrorKind::DegenerateFiber, "energy is critical on the loop");
    theta(i) = std::sqrt(t.col(i).norm() / speed);
  }
  return HalfWeight(theta).normalized(r);
}

Eigen::VectorXd tangential_coefficient(const LagrangianLoop& loop, const Observable& f, DerivativeScheme scheme) {
  const Eigen::Matrix3Xd t = loop.tangents(scheme);
  Eigen::VectorXd w(loop.size());
  for (Eigen::Index i = 0; i < loop.size(); ++i) {
    const Vec3 x = hamiltonian_field(loop.model(), f, loop.vertex(i));
    w(i) = x.dot(t.col(i)) / t.col(i).squaredNorm();
  }
  return w;
}

double flow_invariance_residual(const LagrangianLoop& loop, const HalfWeight& w, const Observable& f,
                                DerivativeScheme scheme) {
  const Eigen::VectorXd coef = tangential_coefficient(loop, f, scheme);
  const LoopCalculus d(loop.size(), scheme);
  return d.derivative(coef.cwiseProduct(w.density())).cwiseAbs().maxCoeff();
}

LagrangianLoop darboux_chart(const LagrangianLoop& base, const Eigen::VectorXd& psi, double eps,
                             DerivativeScheme scheme) {
  if (psi.size() != base.size()) throw Error(ErrorKind::DimensionMismatch, "chart function size mismatch");
  const PhaseModel& m = base.model();
  const Eigen::Matrix3Xd t = base.tangents(scheme);
  const Eigen::VectorXd dpsi = LoopCalculus(base.size(), scheme).derivative(psi);
  Eigen::Matrix3Xd v(3, base.size());
  for (Eigen::Index i = 0; i < base.size(); ++i) {
    const Vec3 x = base.vertex(i);
    const Vec3 nrm = m.metric_normal(x, t.col(i));
    const double c = dpsi(i) / m.omega(x, nrm, t.col(i));
    if (std::abs(c) > eps) throw Error(ErrorKind::ChartOverflow, "displacement exceeds the chart radius");
    v.col(i) = m.step(x, c * nrm);
  }
  return LagrangianLoop(m, v, base.winding());
}

LagrangianLoop bs_correct(const LagrangianLoop& loop, int level, double tol, int max_iter) {
  if (level < 1) throw Error(ErrorKind::Level, "level must be a positive integer");
  const PhaseModel& m = loop.model();
  LagrangianLoop cur = loop;
  for (int it = 0; it < max_iter; ++it) {
    const double ka = level * loop_action(cur);
    const double defect = ka - std::round(ka);
    if (std::abs(defect) <= tol) return cur;
    // action grows by delta * integral of omega(N, T) ds under a normal shift delta
    const Eigen::Matrix3Xd t = cur.tangents();
    double flux = 0.0;
    for (Eigen::Index i = 0; i < cur.size(); ++i) {
      const Vec3 x = cur.vertex(i);
      flux += m.omega(x, m.metric_normal(x, t.col(i)), t.col(i));
    }
    flux /= static_cast<double>(cur.size());
    const double delta = -defect / (level * flux);
    cur = cur.mapped([&, i = Eigen::Index(0)](const Vec3& x) mutable {
      const Vec3 nrm = m.metric_normal(x, t.col(i++));
      return m.step(x, delta * nrm);
    });
  }
  throw Error(ErrorKind::HolonomyUndefined, "BS correction did not converge");
}

}  // namespace gq
