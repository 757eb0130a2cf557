#ifndef GQ_PHASE_SPACE_HPP
#define GQ_PHASE_SPACE_HPP

#include <Eigen/Dense>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gq/errors.hpp"

namespace gq {

using Vec3 = Eigen::Vector3d;

enum class ModelKind { Sphere, Torus, Darboux };

// Sphere: stereographic caps. Torus: fundamental square. Darboux: the rectangle.
enum class ChartId { NorthCap, SouthCap, TorusSquare, DarbouxRect };

struct PhasePoint {
  ChartId chart;
  double u;
  double v;
};

struct Rect {
  double p0, p1, q0, q1;
};

/// Two-dimensional phase space with ambient coordinates.
///
/// Sphere points are unit vectors of R^3, omega = area / (4 pi), total area 1.
/// Torus and Darboux points are (p, q, 0) with omega = dp ^ dq.
/// Torus coordinates are kept on the universal cover; wrapping happens in charts.
class PhaseModel {
 public:
  static PhaseModel sphere(int level = 1);
  static PhaseModel torus(int level = 1);
  static PhaseModel darboux(const Rect& r, int level = 1);

  ModelKind kind() const { return kind_; }
  int level() const { return level_; }
  const Rect& rect() const { return rect_; }
  PhaseModel with_level(int k) const;
  std::string name() const;

  double total_area() const;

  Vec3 ambient(const PhasePoint& x) const;
  PhasePoint chart_point(const Vec3& x) const;
  bool in_domain(const Vec3& x) const;
  void require_domain(const Vec3& x) const;

  // Geometry at an ambient point.
  Vec3 tangent_part(const Vec3& x, const Vec3& v) const;
  double omega(const Vec3& x, const Vec3& u, const Vec3& v) const;
  /// Solves i_X omega = df for the ambient gradient of f.
  Vec3 hamiltonian_vector(const Vec3& x, const Vec3& grad) const;
  /// Unit normal to a curve with tangent t, oriented so omega(N, t) > 0.
  Vec3 metric_normal(const Vec3& x, const Vec3& t) const;
  /// Exponential map of the flat or round metric.
  Vec3 step(const Vec3& x, const Vec3& v) const;
  Vec3 retract(const Vec3& x) const;
  double distance(const Vec3& a, const Vec3& b) const;

  /// Potential one-form with d(alpha) = omega, paired with v at x.
  /// On the sphere `axis` picks the cap potential regular away from -axis.
  double potential(const Vec3& x, const Vec3& v, const Vec3& axis = Vec3::UnitZ()) const;

 private:
  PhaseModel(ModelKind k, int level, Rect r) : kind_(k), level_(level), rect_(r) {}
  ModelKind kind_;
  int level_;
  Rect rect_;
};

/// Real function on the ambient space with an exact or finite-difference gradient.
class Observable {
 public:
  using Eval = std::function<double(const Vec3&)>;
  using Grad = std::function<Vec3(const Vec3&)>;

  Observable() : Observable(constant(0.0)) {}
  explicit Observable(Eval f, Grad g = {}, double h_fd = 1e-5);

  double operator()(const Vec3& x) const { return f_(x); }
  Vec3 gradient(const Vec3& x) const;
  bool has_exact_gradient() const { return static_cast<bool>(g_); }
  double fd_step() const { return h_fd_; }

  static Observable constant(double c);
  static Observable coordinate(int i);
  static Observable linear(const Vec3& a);

 private:
  Eval f_;
  Grad g_;
  double h_fd_;
};

Observable operator+(const Observable& a, const Observable& b);
Observable operator-(const Observable& a, const Observable& b);
Observable operator*(const Observable& a, const Observable& b);
Observable operator*(double c, const Observable& a);

/// Trigonometric polynomial in (p, q) with period 1; closed under the bracket.
struct TrigTerm {
  int m, n;
  double a, b;  // a cos 2pi(mp+nq) + b sin 2pi(mp+nq)
};

class TrigPolynomial {
 public:
  TrigPolynomial() = default;
  explicit TrigPolynomial(std::vector<TrigTerm> terms) : terms_(std::move(terms)) {}

  double operator()(double p, double q) const;
  Eigen::Vector2d gradient(double p, double q) const;
  const std::vector<TrigTerm>& terms() const { return terms_; }
  TrigPolynomial bracket(const TrigPolynomial& g) const;
  Observable observable() const;

  template <class Rng>
  static TrigPolynomial random(Rng& rng, int max_mode = 2, int nterms = 4);

 private:
  std::vector<TrigTerm> terms_;
};

/// Polynomial in the ambient coordinates with an exact gradient.
struct Monomial {
  int a, b, c;
  double coef;
};

class Polynomial3 {
 public:
  Polynomial3() = default;
  explicit Polynomial3(std::vector<Monomial> terms) : terms_(std::move(terms)) {}
  double operator()(const Vec3& x) const;
  Vec3 gradient(const Vec3& x) const;
  Observable observable() const;

  template <class Rng>
  static Polynomial3 random(Rng& rng, int degree = 3);

 private:
  std::vector<Monomial> terms_;
};

double poisson_bracket(const PhaseModel& m, const Observable& f, const Observable& g, const Vec3& x);
double poisson_bracket(const PhaseModel& m, const Observable& f, const Observable& g, const PhasePoint& x);

/// {f, g} as an observable; its gradient is taken by finite differences.
Observable bracket_observable(const PhaseModel& m, const Observable& f, const Observable& g);

Vec3 hamiltonian_field(const PhaseModel& m, const Observable& f, const Vec3& x);

enum class Integrator { ImplicitMidpoint, RK4 };

class FlowEscapeError : public Error {
 public:
  FlowEscapeError(const std::string& what, const Vec3& last)
      : Error(ErrorKind::FlowEscape, what), last_(last) {}
  const Vec3& last_valid() const { return last_; }

 private:
  Vec3 last_;
};

Vec3 hamiltonian_flow(const PhaseModel& m, const Observable& f, const Vec3& x, double t, int steps,
                      Integrator integ = Integrator::ImplicitMidpoint);
PhasePoint hamiltonian_flow(const PhaseModel& m, const Observable& f, const PhasePoint& x, double t,
                            int steps, Integrator integ = Integrator::ImplicitMidpoint);

/// Product quadrature of f against the Liouville measure.
/// Sphere: Gauss-Legendre in z times uniform longitudes. Torus: periodic midpoint.
double liouville_integral(const PhaseModel& m, const Observable& f, int resolution = 256);

// ---------------------------------------------------------------------------

template <class Rng>
TrigPolynomial TrigPolynomial::random(Rng& rng, int max_mode, int nterms) {
  std::uniform_int_distribution<int> mode(-max_mode, max_mode);
  std::normal_distribution<double> coef(0.0, 1.0);
  std::vector<TrigTerm> t;
  while (static_cast<int>(t.size()) < nterms) {
    TrigTerm term{mode(rng), mode(rng), coef(rng), coef(rng)};
    if (term.m == 0 && term.n == 0) continue;
    t.push_back(term);
  }
  return TrigPolynomial(std::move(t));
}

template <class Rng>
Polynomial3 Polynomial3::random(Rng& rng, int degree) {
  std::normal_distribution<double> coef(0.0, 1.0);
  std::vector<Monomial> t;
  for (int a = 0; a <= degree; ++a)
    for (int b = 0; a + b <= degree; ++b)
      for (int c = 0; a + b + c <= degree; ++c)
        if (a + b + c > 0) t.push_back({a, b, c, coef(rng) / (a + b + c)});
  return Polynomial3(std::move(t));
}

}  // namespace gq

#endif
