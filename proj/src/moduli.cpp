#include "gq/moduli.hpp"

#include <cmath>
#include <numbers>

namespace gq {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double weighted_dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& rho) {
  return (a.array() * b.array() * rho.array()).sum() / static_cast<double>(rho.size());
}

Eigen::VectorXd gradient_along(const ModuliPoint& pt, const Observable& f, const Eigen::Matrix3Xd& dirs) {
  Eigen::VectorXd out(pt.size());
  for (Eigen::Index i = 0; i < pt.size(); ++i) out(i) = f.gradient(pt.loop().vertex(i)).dot(dirs.col(i));
  return out;
}

}  // namespace

struct ModuliPoint::Solver {
  Eigen::MatrixXd Q;
  Eigen::LLT<Eigen::MatrixXd> llt;
};

ModuliPoint::ModuliPoint(LagrangianLoop loop, HalfWeight weight, ModuliOptions opt)
    : loop_(std::move(loop)), weight_(std::move(weight)), opt_(opt), calc_(loop_.size(), opt.scheme) {
  if (weight_.size() != loop_.size()) throw Error(ErrorKind::DimensionMismatch, "weight and loop sizes differ");
  if (!(opt_.tau > 0.0)) throw Error(ErrorKind::Domain, "tau must be positive");
  if (opt_.bs_tol >= 0.0 && !holonomy_class(loop_, level(), opt_.bs_tol).is_bs)
    throw Error(ErrorKind::Level, "loop is not Bohr-Sommerfeld at this level");
  const PhaseModel& m = loop_.model();
  t_ = loop_.tangents(opt_.scheme);
  n_.resize(3, size());
  flux_.resize(size());
  for (Eigen::Index i = 0; i < size(); ++i) {
    const Vec3 x = loop_.vertex(i);
    n_.col(i) = m.metric_normal(x, t_.col(i));
    flux_(i) = m.omega(x, n_.col(i), t_.col(i));
  }
  rho_ = weight_.density();
}

ModuliPoint ModuliPoint::normalized(LagrangianLoop loop, const HalfWeight& weight, double r, ModuliOptions opt) {
  return ModuliPoint(std::move(loop), weight.normalized(r), opt);
}

double ModuliPoint::mean(const Eigen::VectorXd& f) const { return f.dot(rho_) / rho_.sum(); }

void ModuliPoint::require_tangent(const ModuliTangent& v, double tol) const {
  if (v.psi1.size() != size() || v.psi2.size() != size())
    throw Error(ErrorKind::DimensionMismatch, "tangent size differs from the loop");
  const double s1 = 1.0 + v.psi1.cwiseAbs().maxCoeff(), s2 = 1.0 + v.psi2.cwiseAbs().maxCoeff();
  if (std::abs(mean(v.psi1)) > tol * s1 || std::abs(mean(v.psi2)) > tol * s2)
    throw Error(ErrorKind::InvalidTangent, "tangent components must have weighted zero mean");
}

ModuliTangent ModuliPoint::project(const ModuliTangent& v) const {
  return {v.psi1.array() - mean(v.psi1), v.psi2.array() - mean(v.psi2)};
}

const ModuliPoint::Solver& ModuliPoint::solver() const {
  if (solver_) return *solver_;
  auto s = std::make_shared<Solver>();
  const Eigen::Index n = size();
  const Eigen::MatrixXd column = rho_;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(column);
  const Eigen::MatrixXd full = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  s->Q = full.rightCols(n - 1);
  const Eigen::MatrixXd K = s->Q.transpose() * rho_.asDiagonal() * s->Q;
  s->llt.compute(K);
  if (s->llt.info() != Eigen::Success || s->llt.rcond() < 1e-13)
    throw Error(ErrorKind::Solver, "discretized symplectic form is singular");
  solver_ = s;
  return *solver_;
}

// ---------------------------------------------------------------------------

ModuliTangent complex_structure(const ModuliTangent& v) { return {-v.psi2, v.psi1}; }

double moduli_omega(const ModuliPoint& pt, const ModuliTangent& v, const ModuliTangent& w) {
  return weighted_dot(v.psi1, w.psi2, pt.density()) - weighted_dot(v.psi2, w.psi1, pt.density());
}

double moduli_metric(const ModuliPoint& pt, const ModuliTangent& v, const ModuliTangent& w) {
  return weighted_dot(v.psi1, w.psi1, pt.density()) + weighted_dot(v.psi2, w.psi2, pt.density());
}

KahlerValues kahler_eval(const ModuliPoint& pt, const ModuliTangent& v, const ModuliTangent& w) {
  pt.require_tangent(v);
  pt.require_tangent(w);
  return {moduli_omega(pt, v, w), moduli_metric(pt, v, w), complex_structure(v)};
}

double induced_function(const Observable& f, const ModuliPoint& pt) {
  return pt.tau() * weighted_integral(restrict_to(f, pt.loop()), pt.weight());
}

Eigen::VectorXd inner_coefficient(const Observable& f, const ModuliPoint& pt, double tilt) {
  const PhaseModel& m = pt.loop().model();
  Eigen::VectorXd w(pt.size());
  for (Eigen::Index i = 0; i < pt.size(); ++i) {
    const Vec3 x = pt.loop().vertex(i);
    const Vec3 t = pt.tangents().col(i);
    const Vec3 nt = std::cos(tilt) * pt.normals().col(i) + std::sin(tilt) * t.normalized();
    w(i) = -f.gradient(x).dot(nt) / m.omega(x, nt, t);
  }
  return w;
}

ModuliTangent dynamical_field(const Observable& f, const ModuliPoint& pt) {
  const Eigen::VectorXd fs = restrict_to(f, pt.loop());
  const Eigen::VectorXd wr = inner_coefficient(f, pt).cwiseProduct(pt.density());
  return {fs.array() - pt.mean(fs), -0.5 * pt.calculus().derivative(wr).cwiseQuotient(pt.density())};
}

Differential induced_differential(const Observable& f, const ModuliPoint& pt) {
  const double n = static_cast<double>(pt.size());
  const Eigen::VectorXd u =
      gradient_along(pt, f, pt.normals()).cwiseProduct(pt.density()).cwiseQuotient(pt.flux());
  return {-pt.tau() / n * pt.calculus().derivative(u),
          2.0 * pt.tau() / n * restrict_to(f, pt.loop()).cwiseProduct(pt.density())};
}

ModuliTangent hamiltonian_field(const Observable& f, const ModuliPoint& pt, double scale) {
  const auto& s = pt.solver();
  const Differential d = induced_differential(f, pt);
  const double n = static_cast<double>(pt.size());
  const Eigen::VectorXd x1 = n / scale * s.llt.solve(s.Q.transpose() * d.b);
  const Eigen::VectorXd x2 = -n / scale * s.llt.solve(s.Q.transpose() * d.a);
  return {s.Q * x1, s.Q * x2};
}

double restricted_bracket_residual(const Observable& f, const Observable& g, const ModuliPoint& pt, double tilt) {
  const Eigen::VectorXd wf = inner_coefficient(f, pt, tilt), wg = inner_coefficient(g, pt, tilt);
  const Eigen::VectorXd df = gradient_along(pt, f, pt.tangents()), dg = gradient_along(pt, g, pt.tangents());
  double res = 0.0;
  for (Eigen::Index i = 0; i < pt.size(); ++i) {
    const double br = poisson_bracket(pt.loop().model(), f, g, pt.loop().vertex(i));
    res = std::max(res, std::abs(br - (df(i) * wg(i) - dg(i) * wf(i))));
  }
  return res;
}

BracketCheck bracket_check(const Observable& f, const Observable& g, const ModuliPoint& pt) {
  const ModuliTangent xf = hamiltonian_field(f, pt), xg = hamiltonian_field(g, pt);
  Eigen::VectorXd br(pt.size());
  for (Eigen::Index i = 0; i < pt.size(); ++i) br(i) = poisson_bracket(pt.loop().model(), f, g, pt.loop().vertex(i));
  const double rhs = 2.0 * pt.tau() * pt.tau() * weighted_integral(br, pt.weight());
  return {moduli_omega(pt, xf, xg), rhs, restricted_bracket_residual(f, g, pt, 0.0)};
}

double critical_residual(const Observable& f, const ModuliPoint& pt) {
  const Eigen::VectorXd fs = restrict_to(f, pt.loop());
  const Eigen::VectorXd c = fs.array() - pt.mean(fs);
  const double var = weighted_integral(c.cwiseAbs2(), pt.weight()) / pt.volume();
  const Eigen::VectorXd wr = inner_coefficient(f, pt).cwiseProduct(pt.density());
  return var + pt.calculus().derivative(wr).cwiseAbs().maxCoeff();
}

ModuliPoint moduli_step(const ModuliPoint& pt, const ModuliTangent& v, double eps, bool correct_bs) {
  const ModuliTangent p = pt.project(v);
  LagrangianLoop loop = darboux_chart(pt.loop(), eps * p.psi1, 0.25, pt.options().scheme);
  if (correct_bs) loop = bs_correct(loop, pt.level());
  const Eigen::VectorXd theta = pt.weight().theta().cwiseProduct((1.0 + eps * p.psi2.array()).matrix());
  ModuliOptions opt = pt.options();
  if (!correct_bs) opt.bs_tol = -1.0;
  return ModuliPoint::normalized(std::move(loop), HalfWeight(theta, pt.weight().sign()), pt.volume(), opt);
}

ModuliPoint isodrastic_flow(const Observable& f, const ModuliPoint& pt, double t, int steps) {
  if (t == 0.0) return pt;
  const PhaseModel& m = pt.loop().model();
  LagrangianLoop moved =
      pt.loop().mapped([&](const Vec3& x) { return hamiltonian_flow(m, f, x, t, steps, Integrator::RK4); });
  ModuliOptions opt = pt.options();
  if (opt.bs_tol >= 0.0) opt.bs_tol = std::max(opt.bs_tol, 1e-6);
  return ModuliPoint(std::move(moved), pt.weight(), opt);
}

LevelRescale level_rescale(const Observable& f, const Observable& g, const ModuliPoint& pt, int k) {
  if (k < 1) throw Error(ErrorKind::Level, "level must be a positive integer");
  if (!holonomy_class(pt.loop(), 1, 1e-8).is_bs) throw Error(ErrorKind::Level, "loop is not BS at level 1");
  const double b1 = moduli_omega(pt, hamiltonian_field(f, pt), hamiltonian_field(g, pt));
  const double scale = static_cast<double>(k);
  const double bk = scale * moduli_omega(pt, hamiltonian_field(f, pt, scale), hamiltonian_field(g, pt, scale));
  return {bk, b1};
}

// ---------------------------------------------------------------------------

namespace {

// Smooth step: 1 on [0, a], 0 beyond b, C-infinity in between.
struct Cutoff {
  double a, b;
  static double h(double x) { return x > 0 ? std::exp(-1.0 / x) : 0.0; }
  static double dh(double x) { return x > 0 ? std::exp(-1.0 / x) / (x * x) : 0.0; }
  double value(double n) const {
    const double u = (std::abs(n) - a) / (b - a);
    if (u <= 0) return 1.0;
    if (u >= 1) return 0.0;
    return h(1 - u) / (h(1 - u) + h(u));
  }
  double derivative(double n) const {
    const double u = (std::abs(n) - a) / (b - a);
    if (u <= 0 || u >= 1) return 0.0;
    const double p = h(1 - u), q = h(u), dp = -dh(1 - u), dq = dh(u);
    const double ds = (dp * (p + q) - p * (dp + dq)) / ((p + q) * (p + q));
    return ds / (b - a) * (n >= 0 ? 1.0 : -1.0);
  }
};

struct Tube {
  PhaseModel model;
  LoopInterpolant gamma;
  std::vector<PeriodicInterpolant> normal;
  PeriodicInterpolant psi1, beta;
  Eigen::Matrix3Xd vertices;
  Cutoff chi;
  bool sphere;

  Vec3 unit_normal(double s) const {
    const Vec3 raw(normal[0](s), normal[1](s), normal[2](s));
    const Vec3 x = gamma.position(s);
    return (sphere ? model.tangent_part(x, raw) : raw).normalized();
  }
  Vec3 normal_rate(double s) const {
    const double h = 1e-5;
    return (unit_normal(s + h) - unit_normal(s - h)) / (2 * h);
  }
  Vec3 map(double s, double n) const {
    const Vec3 g = gamma.position(s), nn = unit_normal(s);
    return sphere ? Vec3(std::cos(n) * g + std::sin(n) * nn) : Vec3(g + n * nn);
  }
  Eigen::Matrix<double, 3, 2> jacobian(double s, double n) const {
    Eigen::Matrix<double, 3, 2> j;
    const Vec3 g = gamma.position(s), nn = unit_normal(s);
    if (sphere) {
      j.col(0) = std::cos(n) * gamma.tangent(s) + std::sin(n) * normal_rate(s);
      j.col(1) = -std::sin(n) * g + std::cos(n) * nn;
    } else {
      j.col(0) = gamma.tangent(s) + n * normal_rate(s);
      j.col(1) = nn;
    }
    return j;
  }
  // Tube coordinates of y, if y lies inside the tube.
  bool locate(const Vec3& y, double& s, double& n) const {
    const Eigen::Index cnt = vertices.cols();
    Eigen::Index best = 0;
    double bd = INFINITY;
    for (Eigen::Index i = 0; i < cnt; ++i) {
      const double d = model.distance(y, vertices.col(i));
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    if (bd > 2.0 * chi.b) return false;
    s = static_cast<double>(best) / static_cast<double>(cnt);
    // lift y next to the chosen vertex on the torus cover
    Vec3 target = y;
    if (model.kind() == ModelKind::Torus) {
      const Vec3 v = gamma.position(s);
      target.x() -= std::round(target.x() - v.x());
      target.y() -= std::round(target.y() - v.y());
    }
    n = (target - gamma.position(s)).dot(unit_normal(s));
    for (int it = 0; it < 30; ++it) {
      const Vec3 r = target - map(s, n);
      const Eigen::Matrix<double, 3, 2> j = jacobian(s, n);
      const Eigen::Vector2d step = (j.transpose() * j).ldlt().solve(j.transpose() * r);
      s += step(0);
      n += step(1);
      if (step.norm() < 1e-15) break;
    }
    return (target - map(s, n)).norm() < 1e-10 && std::abs(n) < chi.b;
  }
};

}  // namespace

Observable surjectivity_witness(const ModuliTangent& target, const ModuliPoint& pt) {
  pt.require_tangent(target, 1e-8);
  const LagrangianLoop& loop = pt.loop();
  // inner coefficient whose weighted Lie derivative gives psi2
  const Eigen::VectorXd wr = -2.0 * pt.calculus().antiderivative(target.psi2.cwiseProduct(pt.density()));
  const Eigen::VectorXd beta = -wr.cwiseQuotient(pt.density()).cwiseProduct(pt.flux());
  std::vector<PeriodicInterpolant> normal;
  for (int c = 0; c < 3; ++c) normal.emplace_back(Eigen::VectorXd(pt.normals().row(c).transpose()));
  double edge = INFINITY;
  for (Eigen::Index i = 0; i < loop.size(); ++i)
    edge = std::min(edge, loop.model().distance(loop.vertex(i), loop.vertex((i + 1) % loop.size())));
  const double radius = std::max(0.05, 4.0 * edge);
  auto tube = std::make_shared<Tube>(Tube{loop.model(), LoopInterpolant(loop), normal, PeriodicInterpolant(target.psi1),
                                          PeriodicInterpolant(beta), loop.vertices(), Cutoff{radius / 2, radius},
                                          loop.model().kind() == ModelKind::Sphere});
  auto value = [tube](const Vec3& y) {
    double s, n;
    if (!tube->locate(y, s, n)) return 0.0;
    return tube->chi.value(n) * (tube->psi1(s) + n * tube->beta(s));
  };
  auto grad = [tube](const Vec3& y) -> Vec3 {
    double s, n;
    if (!tube->locate(y, s, n)) return Vec3::Zero();
    const double c = tube->chi.value(n), dc = tube->chi.derivative(n);
    const double base = tube->psi1(s) + n * tube->beta(s);
    const Eigen::Vector2d d(c * (tube->psi1.derivative(s) + n * tube->beta.derivative(s)), dc * base + c * tube->beta(s));
    const Eigen::Matrix<double, 3, 2> j = tube->jacobian(s, n);
    return j * (j.transpose() * j).ldlt().solve(d);
  };
  return Observable(value, grad);
}

// ---------------------------------------------------------------------------

QuasiclassicalObject quasiclassical_object(const Observable& f, const LagrangianLoop& loop, double tol) {
  const Eigen::VectorXd fs = restrict_to(f, loop);
  if (fs.maxCoeff() - fs.minCoeff() <= tol) return fs.mean();
  const PhaseModel& m = loop.model();
  const Eigen::Matrix3Xd t = loop.tangents();
  DeformationField out{LoopCalculus(loop.size(), DerivativeScheme::Spectral).derivative(fs),
                       Eigen::Matrix3Xd(3, loop.size())};
  for (Eigen::Index i = 0; i < loop.size(); ++i) {
    const Vec3 x = loop.vertex(i);
    const Vec3 nrm = m.metric_normal(x, t.col(i));
    out.displacement.col(i) = f.gradient(x).dot(t.col(i)) / m.omega(x, nrm, t.col(i)) * nrm;
  }
  return out;
}

double quasiclassical_bracket_residual(const Observable& f, const Observable& g, const LagrangianLoop& loop,
                                       double eps) {
  const PhaseModel& m = loop.model();
  const Eigen::Matrix3Xd t = loop.tangents();
  const Observable fg = bracket_observable(m, f, g);
  auto commutator = [&](const Vec3& x, double e) {
    Vec3 y = hamiltonian_flow(m, f, x, e, 16, Integrator::RK4);
    y = hamiltonian_flow(m, g, y, e, 16, Integrator::RK4);
    y = hamiltonian_flow(m, f, y, -e, 16, Integrator::RK4);
    y = hamiltonian_flow(m, g, y, -e, 16, Integrator::RK4);
    return y;
  };
  double res = 0.0, scale = 1e-300;
  for (Eigen::Index i = 0; i < loop.size(); ++i) {
    const Vec3 x = loop.vertex(i);
    const Vec3 nrm = m.metric_normal(x, t.col(i));
    const double a = (commutator(x, eps) - x).dot(nrm) / (eps * eps);
    const double b = (commutator(x, eps / 2) - x).dot(nrm) / (eps * eps / 4);
    const double extrapolated = 2.0 * b - a;
    const double expected = -fg.gradient(x).dot(t.col(i)) / m.omega(x, nrm, t.col(i));
    res = std::max(res, std::abs(extrapolated - expected));
    scale = std::max(scale, std::abs(expected));
  }
  return res / std::max(1.0, scale);
}

Linearization critical_linearization(const Observable& f, const ModuliPoint& pt, int modes, double eps) {
  const Eigen::Index n = pt.size();
  const int dim = 4 * modes;
  // basis: component c in {psi1, psi2}, cos/sin of mode m
  Eigen::MatrixXd basis(2 * n, dim);
  for (int c = 0; c < 2; ++c)
    for (int mm = 1; mm <= modes; ++mm)
      for (int cs = 0; cs < 2; ++cs) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          const double a = kTwoPi * mm * static_cast<double>(i) / static_cast<double>(n);
          v(i) = cs == 0 ? std::cos(a) : std::sin(a);
        }
        v.array() -= pt.mean(v);
        const int col = c * 2 * modes + 2 * (mm - 1) + cs;
        basis.col(col).setZero();
        basis.col(col).segment(c * n, n) = v;
      }
  auto stack = [&](const ModuliTangent& t) {
    Eigen::VectorXd s(2 * n);
    s << t.psi1, t.psi2;
    return s;
  };
  auto unstack = [&](const Eigen::VectorXd& s) { return ModuliTangent{s.head(n), s.tail(n)}; };
  const auto ls = basis.colPivHouseholderQr();
  Eigen::MatrixXd L(dim, dim);
  for (int j = 0; j < dim; ++j) {
    const ModuliTangent v = unstack(basis.col(j));
    const ModuliTangent plus = dynamical_field(f, moduli_step(pt, v, eps));
    const ModuliTangent minus = dynamical_field(f, moduli_step(pt, v, -eps));
    L.col(j) = ls.solve(stack(plus - minus) / (2 * eps));
  }
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(dim, dim);
  const int half = 2 * modes;
  J.bottomLeftCorner(half, half).setIdentity();
  J.topRightCorner(half, half) = -Eigen::MatrixXd::Identity(half, half);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(L);
  const auto& sv = svd.singularValues();
  return {L, (L * J - J * L).norm() / L.norm(), sv(sv.size() - 1) / sv(0)};
}

ModuliPoint transport_through(const ModuliPoint& pt, const Vec3& target, int steps) {
  const PhaseModel& m = pt.loop().model();
  if (m.kind() != ModelKind::Sphere) throw Error(ErrorKind::Domain, "rigid transport is implemented on the sphere");
  const Vec3 y = target.normalized();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < pt.size(); ++i)
    if (m.distance(pt.loop().vertex(i), y) < m.distance(pt.loop().vertex(best), y)) best = i;
  const Vec3 v = pt.loop().vertex(best);
  const Vec3 axis = v.cross(y);
  if (axis.norm() < 1e-14) return pt;
  const double angle = m.distance(v, y);
  // the field of u.x rotates about u at angular speed 4 pi |u|
  return isodrastic_flow(Observable::linear(axis.normalized()), pt, angle / (4.0 * std::numbers::pi), steps);
}

}  // namespace gq
