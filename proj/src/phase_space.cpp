#include "gq/phase_space.hpp"

#include <cmath>
#include <numbers>

#include "gq/quadrature.hpp"

namespace gq {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kFourPi = 4.0 * std::numbers::pi;
constexpr double kSphereTol = 1e-6;

double wrap01(double a) {
  double r = a - std::floor(a);
  return r >= 1.0 ? 0.0 : r;
}
}  // namespace

PhaseModel PhaseModel::sphere(int level) {
  if (level < 1) throw Error(ErrorKind::Config, "level must be >= 1");
  return PhaseModel(ModelKind::Sphere, level, Rect{0, 0, 0, 0});
}

PhaseModel PhaseModel::torus(int level) {
  if (level < 1) throw Error(ErrorKind::Config, "level must be >= 1");
  return PhaseModel(ModelKind::Torus, level, Rect{0, 1, 0, 1});
}

PhaseModel PhaseModel::darboux(const Rect& r, int level) {
  if (level < 1) throw Error(ErrorKind::Config, "level must be >= 1");
  if (!(r.p1 > r.p0) || !(r.q1 > r.q0)) throw Error(ErrorKind::Config, "empty Darboux rectangle");
  return PhaseModel(ModelKind::Darboux, level, r);
}

PhaseModel PhaseModel::with_level(int k) const {
  if (k < 1) throw Error(ErrorKind::Config, "level must be >= 1");
  PhaseModel m = *this;
  m.level_ = k;
  return m;
}

std::string PhaseModel::name() const {
  switch (kind_) {
    case ModelKind::Sphere: return "sphere";
    case ModelKind::Torus: return "torus";
    case ModelKind::Darboux: return "darboux";
  }
  return "?";
}

double PhaseModel::total_area() const {
  if (kind_ == ModelKind::Darboux) return (rect_.p1 - rect_.p0) * (rect_.q1 - rect_.q0);
  return 1.0;
}

Vec3 PhaseModel::ambient(const PhasePoint& x) const {
  if (!std::isfinite(x.u) || !std::isfinite(x.v)) throw Error(ErrorKind::Domain, "non-finite chart coordinates");
  switch (x.chart) {
    case ChartId::NorthCap:
    case ChartId::SouthCap: {
      if (kind_ != ModelKind::Sphere) throw Error(ErrorKind::Domain, "cap chart on a flat model");
      const double r2 = x.u * x.u + x.v * x.v;
      const double s = 1.0 / (1.0 + r2);
      const double z = (1.0 - r2) * s;
      return {2 * x.u * s, 2 * x.v * s, x.chart == ChartId::NorthCap ? z : -z};
    }
    case ChartId::TorusSquare:
      if (kind_ != ModelKind::Torus) throw Error(ErrorKind::Domain, "torus chart on another model");
      if (x.u < 0 || x.u >= 1 || x.v < 0 || x.v >= 1)
        throw Error(ErrorKind::Domain, "torus chart coordinates outside [0,1)");
      return {x.u, x.v, 0.0};
    case ChartId::DarbouxRect: {
      if (kind_ != ModelKind::Darboux) throw Error(ErrorKind::Domain, "rectangle chart on another model");
      Vec3 a{x.u, x.v, 0.0};
      require_domain(a);
      return a;
    }
  }
  throw Error(ErrorKind::Domain, "unknown chart");
}

PhasePoint PhaseModel::chart_point(const Vec3& x) const {
  require_domain(x);
  switch (kind_) {
    case ModelKind::Sphere:
      if (x.z() >= 0) return {ChartId::NorthCap, x.x() / (1 + x.z()), x.y() / (1 + x.z())};
      return {ChartId::SouthCap, x.x() / (1 - x.z()), x.y() / (1 - x.z())};
    case ModelKind::Torus:
      return {ChartId::TorusSquare, wrap01(x.x()), wrap01(x.y())};
    case ModelKind::Darboux:
      return {ChartId::DarbouxRect, x.x(), x.y()};
  }
  throw Error(ErrorKind::Domain, "unknown model");
}

bool PhaseModel::in_domain(const Vec3& x) const {
  if (!x.allFinite()) return false;
  switch (kind_) {
    case ModelKind::Sphere: return std::abs(x.norm() - 1.0) <= kSphereTol;
    case ModelKind::Torus: return true;
    case ModelKind::Darboux:
      return x.x() >= rect_.p0 && x.x() <= rect_.p1 && x.y() >= rect_.q0 && x.y() <= rect_.q1;
  }
  return false;
}

void PhaseModel::require_domain(const Vec3& x) const {
  if (!in_domain(x)) throw Error(ErrorKind::Domain, "point outside the " + name() + " atlas");
}

Vec3 PhaseModel::tangent_part(const Vec3& x, const Vec3& v) const {
  if (kind_ == ModelKind::Sphere) return v - v.dot(x) * x;
  return {v.x(), v.y(), 0.0};
}

double PhaseModel::omega(const Vec3& x, const Vec3& u, const Vec3& v) const {
  if (kind_ == ModelKind::Sphere) return x.dot(u.cross(v)) / kFourPi;
  return u.x() * v.y() - u.y() * v.x();
}

Vec3 PhaseModel::hamiltonian_vector(const Vec3& x, const Vec3& grad) const {
  if (kind_ == ModelKind::Sphere) return -kFourPi * x.cross(grad);
  return {grad.y(), -grad.x(), 0.0};
}

Vec3 PhaseModel::metric_normal(const Vec3& x, const Vec3& t) const {
  if (kind_ == ModelKind::Sphere) {
    Vec3 tt = tangent_part(x, t);
    return tt.normalized().cross(x);
  }
  Vec3 tt(t.x(), t.y(), 0.0);
  tt.normalize();
  return {tt.y(), -tt.x(), 0.0};
}

Vec3 PhaseModel::step(const Vec3& x, const Vec3& v) const {
  if (kind_ == ModelKind::Sphere) {
    Vec3 vt = tangent_part(x, v);
    const double th = vt.norm();
    if (th < 1e-300) return x;
    return std::cos(th) * x + std::sin(th) * (vt / th);
  }
  return x + Vec3(v.x(), v.y(), 0.0);
}

Vec3 PhaseModel::retract(const Vec3& x) const {
  if (kind_ == ModelKind::Sphere) return x.normalized();
  return {x.x(), x.y(), 0.0};
}

double PhaseModel::distance(const Vec3& a, const Vec3& b) const {
  switch (kind_) {
    case ModelKind::Sphere: return std::atan2(a.cross(b).norm(), a.dot(b));
    case ModelKind::Torus: {
      double dp = a.x() - b.x(), dq = a.y() - b.y();
      dp -= std::round(dp);
      dq -= std::round(dq);
      return std::hypot(dp, dq);
    }
    case ModelKind::Darboux: return std::hypot(a.x() - b.x(), a.y() - b.y());
  }
  return 0.0;
}

double PhaseModel::potential(const Vec3& x, const Vec3& v, const Vec3& axis) const {
  if (kind_ == ModelKind::Sphere) {
    const double den = 1.0 + axis.dot(x);
    if (den < 1e-12) throw Error(ErrorKind::Domain, "potential evaluated at the singular pole of its cap");
    return axis.dot(x.cross(v)) / (kFourPi * den);
  }
  return x.x() * v.y();
}

// --- observables -----------------------------------------------------------

Observable::Observable(Eval f, Grad g, double h_fd) : f_(std::move(f)), g_(std::move(g)), h_fd_(h_fd) {
  if (!f_) throw Error(ErrorKind::Config, "observable without evaluation rule");
  if (!(h_fd_ > 0)) throw Error(ErrorKind::Config, "finite-difference step must be positive");
}

Vec3 Observable::gradient(const Vec3& x) const {
  if (g_) return g_(x);
  const double h = h_fd_ * std::max(1.0, x.norm());
  Vec3 grad;
  for (int i = 0; i < 3; ++i) {
    Vec3 a = x, b = x;
    a(i) += h;
    b(i) -= h;
    grad(i) = (f_(a) - f_(b)) / (2 * h);
  }
  return grad;
}

Observable Observable::constant(double c) {
  return Observable([c](const Vec3&) { return c; }, [](const Vec3&) { return Vec3::Zero().eval(); });
}

Observable Observable::coordinate(int i) {
  if (i < 0 || i > 2) throw Error(ErrorKind::Config, "coordinate index out of range");
  return Observable([i](const Vec3& x) { return x(i); }, [i](const Vec3&) { return Vec3::Unit(i).eval(); });
}

Observable Observable::linear(const Vec3& a) {
  return Observable([a](const Vec3& x) { return a.dot(x); }, [a](const Vec3&) { return a; });
}

namespace {
Observable combine(const Observable& a, const Observable& b, double sa, double sb) {
  Observable::Grad g;
  if (a.has_exact_gradient() && b.has_exact_gradient())
    g = [a, b, sa, sb](const Vec3& x) { return (sa * a.gradient(x) + sb * b.gradient(x)).eval(); };
  return Observable([a, b, sa, sb](const Vec3& x) { return sa * a(x) + sb * b(x); }, g,
                    std::min(a.fd_step(), b.fd_step()));
}
}  // namespace

Observable operator+(const Observable& a, const Observable& b) { return combine(a, b, 1.0, 1.0); }
Observable operator-(const Observable& a, const Observable& b) { return combine(a, b, 1.0, -1.0); }

Observable operator*(double c, const Observable& a) {
  Observable::Grad g;
  if (a.has_exact_gradient()) g = [a, c](const Vec3& x) { return (c * a.gradient(x)).eval(); };
  return Observable([a, c](const Vec3& x) { return c * a(x); }, g, a.fd_step());
}

Observable operator*(const Observable& a, const Observable& b) {
  Observable::Grad g;
  if (a.has_exact_gradient() && b.has_exact_gradient())
    g = [a, b](const Vec3& x) { return (a(x) * b.gradient(x) + b(x) * a.gradient(x)).eval(); };
  return Observable([a, b](const Vec3& x) { return a(x) * b(x); }, g, std::min(a.fd_step(), b.fd_step()));
}

double TrigPolynomial::operator()(double p, double q) const {
  double s = 0;
  for (const auto& t : terms_) {
    const double th = 2 * kPi * (t.m * p + t.n * q);
    s += t.a * std::cos(th) + t.b * std::sin(th);
  }
  return s;
}

Eigen::Vector2d TrigPolynomial::gradient(double p, double q) const {
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (const auto& t : terms_) {
    const double th = 2 * kPi * (t.m * p + t.n * q);
    const double d = 2 * kPi * (t.b * std::cos(th) - t.a * std::sin(th));
    g += d * Eigen::Vector2d(t.m, t.n);
  }
  return g;
}

TrigPolynomial TrigPolynomial::bracket(const TrigPolynomial& g) const {
  std::vector<TrigTerm> out;
  for (const auto& s : terms_)
    for (const auto& t : g.terms_) {
      const double c = 4 * kPi * kPi * (s.m * t.n - s.n * t.m);
      if (c == 0) continue;
      out.push_back({s.m + t.m, s.n + t.n, 0.5 * c * (s.b * t.b - s.a * t.a), -0.5 * c * (s.b * t.a + s.a * t.b)});
      out.push_back({s.m - t.m, s.n - t.n, 0.5 * c * (s.b * t.b + s.a * t.a), 0.5 * c * (s.b * t.a - s.a * t.b)});
    }
  return TrigPolynomial(std::move(out));
}

Observable TrigPolynomial::observable() const {
  TrigPolynomial self = *this;
  return Observable([self](const Vec3& x) { return self(x.x(), x.y()); },
                    [self](const Vec3& x) {
                      Eigen::Vector2d g = self.gradient(x.x(), x.y());
                      return Vec3(g.x(), g.y(), 0.0);
                    });
}

double Polynomial3::operator()(const Vec3& x) const {
  double s = 0;
  for (const auto& t : terms_) s += t.coef * std::pow(x.x(), t.a) * std::pow(x.y(), t.b) * std::pow(x.z(), t.c);
  return s;
}

Vec3 Polynomial3::gradient(const Vec3& x) const {
  Vec3 g = Vec3::Zero();
  for (const auto& t : terms_) {
    const double px = std::pow(x.x(), t.a), py = std::pow(x.y(), t.b), pz = std::pow(x.z(), t.c);
    if (t.a > 0) g.x() += t.coef * t.a * std::pow(x.x(), t.a - 1) * py * pz;
    if (t.b > 0) g.y() += t.coef * t.b * px * std::pow(x.y(), t.b - 1) * pz;
    if (t.c > 0) g.z() += t.coef * t.c * px * py * std::pow(x.z(), t.c - 1);
  }
  return g;
}

Observable Polynomial3::observable() const {
  Polynomial3 self = *this;
  return Observable([self](const Vec3& x) { return self(x); }, [self](const Vec3& x) { return self.gradient(x); });
}

// --- brackets and flows ----------------------------------------------------

Vec3 hamiltonian_field(const PhaseModel& m, const Observable& f, const Vec3& x) {
  return m.hamiltonian_vector(x, f.gradient(x));
}

double poisson_bracket(const PhaseModel& m, const Observable& f, const Observable& g, const Vec3& x) {
  m.require_domain(x);
  return m.omega(x, hamiltonian_field(m, f, x), hamiltonian_field(m, g, x));
}

double poisson_bracket(const PhaseModel& m, const Observable& f, const Observable& g, const PhasePoint& x) {
  return poisson_bracket(m, f, g, m.ambient(x));
}

Observable bracket_observable(const PhaseModel& m, const Observable& f, const Observable& g) {
  return Observable([m, f, g](const Vec3& x) {
    return m.omega(x, hamiltonian_field(m, f, x), hamiltonian_field(m, g, x));
  });
}

namespace {
Vec3 field_at(const PhaseModel& m, const Observable& f, const Vec3& x) { return hamiltonian_field(m, f, x); }
}  // namespace

Vec3 hamiltonian_flow(const PhaseModel& m, const Observable& f, const Vec3& x0, double t, int steps,
                      Integrator integ) {
  if (steps < 1) throw Error(ErrorKind::Config, "flow needs at least one step");
  m.require_domain(x0);
  const double h = t / steps;
  Vec3 y = x0;
  for (int s = 0; s < steps; ++s) {
    Vec3 next;
    if (integ == Integrator::ImplicitMidpoint) {
      next = y + h * field_at(m, f, y);
      for (int it = 0; it < 100; ++it) {
        const Vec3 upd = y + h * field_at(m, f, 0.5 * (y + next));
        const double d = (upd - next).norm();
        next = upd;
        if (d <= 1e-15 * std::max(1.0, y.norm())) break;
      }
      if (m.kind() == ModelKind::Sphere) next.normalize();
    } else {
      const Vec3 k1 = field_at(m, f, y);
      const Vec3 k2 = field_at(m, f, y + 0.5 * h * k1);
      const Vec3 k3 = field_at(m, f, y + 0.5 * h * k2);
      const Vec3 k4 = field_at(m, f, y + h * k3);
      next = m.retract(y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4));
    }
    if (!m.in_domain(next)) throw FlowEscapeError("trajectory left the " + m.name() + " atlas", y);
    y = next;
  }
  return y;
}

PhasePoint hamiltonian_flow(const PhaseModel& m, const Observable& f, const PhasePoint& x, double t, int steps,
                            Integrator integ) {
  return m.chart_point(hamiltonian_flow(m, f, m.ambient(x), t, steps, integ));
}

double liouville_integral(const PhaseModel& m, const Observable& f, int n) {
  if (n < 2) throw Error(ErrorKind::Config, "quadrature resolution must be >= 2");
  double sum = 0;
  switch (m.kind()) {
    case ModelKind::Sphere: {
      const GaussRule gz = gauss_legendre(n);
      const int nphi = 2 * n;
      for (int i = 0; i < n; ++i) {
        const double z = gz.nodes(i), rho = std::sqrt(std::max(0.0, 1 - z * z));
        double band = 0;
        for (int j = 0; j < nphi; ++j) {
          const double ph = 2 * kPi * j / nphi;
          band += f(Vec3(rho * std::cos(ph), rho * std::sin(ph), z));
        }
        sum += 0.5 * gz.weights(i) * band / nphi;
      }
      return sum;
    }
    case ModelKind::Torus: {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) sum += f(Vec3((i + 0.5) / n, (j + 0.5) / n, 0.0));
      return sum / (double(n) * n);
    }
    case ModelKind::Darboux: {
      const Rect& r = m.rect();
      const GaussRule gp = gauss_legendre(n, r.p0, r.p1), gq = gauss_legendre(n, r.q0, r.q1);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) sum += gp.weights(i) * gq.weights(j) * f(Vec3(gp.nodes(i), gq.nodes(j), 0.0));
      return sum;
    }
  }
  return sum;
}

}  // namespace gq
