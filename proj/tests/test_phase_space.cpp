#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "gq/phase_space.hpp"

using namespace gq;

namespace {
constexpr double kPi = std::numbers::pi;

// Independent chart-level bracket at the north pole: omega = dx^dy / (4 pi) there.
double pole_bracket_oracle(const std::function<double(double, double)>& f,
                           const std::function<double(double, double)>& g) {
  const double h = 1e-5;
  const double fx = (f(h, 0) - f(-h, 0)) / (2 * h), fy = (f(0, h) - f(0, -h)) / (2 * h);
  const double gx = (g(h, 0) - g(-h, 0)) / (2 * h), gy = (g(0, h) - g(0, -h)) / (2 * h);
  return 4 * kPi * (fx * gy - fy * gx);
}

Vec3 random_sphere_point(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  return Vec3(n(rng), n(rng), n(rng)).normalized();
}
}  // namespace

TEST_CASE("torus bracket of the canonical coordinates") {
  const PhaseModel T = PhaseModel::torus();
  const Observable p = Observable::coordinate(0), q = Observable::coordinate(1);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 10; ++i) {
    const Vec3 x(u(rng), u(rng), 0);
    CHECK(poisson_bracket(T, p, q, x) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(poisson_bracket(T, q, p, x) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(poisson_bracket(T, p, p, x) == 0.0);
  }
}

TEST_CASE("torus bracket matches a finite-difference oracle") {
  const PhaseModel T = PhaseModel::torus();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 20; ++i) {
    const TrigPolynomial f = TrigPolynomial::random(rng), g = TrigPolynomial::random(rng);
    const double p = u(rng), q = u(rng), h = 1e-5;
    const double fp = (f(p + h, q) - f(p - h, q)) / (2 * h), fq = (f(p, q + h) - f(p, q - h)) / (2 * h);
    const double gp = (g(p + h, q) - g(p - h, q)) / (2 * h), gq = (g(p, q + h) - g(p, q - h)) / (2 * h);
    const double oracle = fp * gq - fq * gp;
    const double value = poisson_bracket(T, f.observable(), g.observable(), Vec3(p, q, 0));
    CHECK(value == doctest::Approx(oracle).epsilon(1e-6).scale(10));
    // exact trig bracket
    CHECK(f.bracket(g)(p, q) == doctest::Approx(value).epsilon(1e-10).scale(10));
  }
}

TEST_CASE("sphere coordinate brackets fix the normalization constant") {
  const PhaseModel S = PhaseModel::sphere();
  const Observable x = Observable::coordinate(0), y = Observable::coordinate(1), z = Observable::coordinate(2);
  const Vec3 north(0, 0, 1);
  const double oracle = pole_bracket_oracle([](double a, double) { return a; }, [](double, double b) { return b; });
  CHECK(poisson_bracket(S, x, y, north) == doctest::Approx(oracle).epsilon(1e-8));
  CHECK(poisson_bracket(S, x, y, north) == doctest::Approx(4 * kPi).epsilon(1e-14));

  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    const Vec3 pt = random_sphere_point(rng);
    CHECK(poisson_bracket(S, x, y, pt) == doctest::Approx(4 * kPi * pt.z()).epsilon(1e-12).scale(1));
    CHECK(poisson_bracket(S, y, z, pt) == doctest::Approx(4 * kPi * pt.x()).epsilon(1e-12).scale(1));
    CHECK(poisson_bracket(S, z, x, pt) == doctest::Approx(4 * kPi * pt.y()).epsilon(1e-12).scale(1));
  }
}

TEST_CASE("bracket at a point outside the atlas is a domain error") {
  const PhaseModel S = PhaseModel::sphere();
  const Observable x = Observable::coordinate(0);
  CHECK_THROWS_AS(poisson_bracket(S, x, x, Vec3(0, 0, 2)), Error);
  const PhaseModel T = PhaseModel::torus();
  CHECK_THROWS_AS(T.ambient(PhasePoint{ChartId::TorusSquare, 1.5, 0.2}), Error);
  CHECK_THROWS_AS(T.ambient(PhasePoint{ChartId::NorthCap, 0.1, 0.2}), Error);
}

TEST_CASE("charts round trip") {
  const PhaseModel S = PhaseModel::sphere();
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    const Vec3 pt = random_sphere_point(rng);
    const PhasePoint c = S.chart_point(pt);
    CHECK((S.ambient(c) - pt).norm() < 1e-14);
  }
}

TEST_CASE("constant observables have zero differential") {
  const Observable c = Observable::constant(3.5);
  const Observable fd([](const Vec3&) { return -2.0; });
  CHECK(c.gradient(Vec3(0.3, 0.1, 0.9)).norm() == 0.0);
  CHECK(fd.gradient(Vec3(0.3, 0.1, 0.9)).norm() < 1e-9);
}

TEST_CASE("Jacobi identity on trigonometric triples") {
  const PhaseModel T = PhaseModel::torus();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const Observable f = TrigPolynomial::random(rng, 2, 2).observable();
    const Observable g = TrigPolynomial::random(rng, 2, 2).observable();
    const Observable h = TrigPolynomial::random(rng, 2, 2).observable();
    const Observable gh = bracket_observable(T, g, h), hf = bracket_observable(T, h, f),
                     fg = bracket_observable(T, f, g);
    for (int i = 0; i < 20; ++i) {
      const Vec3 x(u(rng), u(rng), 0);
      const double a = poisson_bracket(T, f, gh, x), b = poisson_bracket(T, g, hf, x),
                   c = poisson_bracket(T, h, fg, x);
      const double scale = std::abs(a) + std::abs(b) + std::abs(c) + 1.0;
      CHECK(std::abs(a + b + c) <= 1e-6 * scale);
    }
  }
}

TEST_CASE("Leibniz rule") {
  const PhaseModel S = PhaseModel::sphere();
  std::mt19937_64 rng(6);
  for (int i = 0; i < 20; ++i) {
    const Observable f = Polynomial3::random(rng, 2).observable();
    const Observable g = Polynomial3::random(rng, 2).observable();
    const Observable h = Polynomial3::random(rng, 2).observable();
    const Vec3 x = random_sphere_point(rng);
    const double lhs = poisson_bracket(S, f, g * h, x);
    const double rhs = g(x) * poisson_bracket(S, f, h, x) + h(x) * poisson_bracket(S, f, g, x);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10).scale(1));
  }
}

TEST_CASE("flows: constants, closed orbits and translations") {
  const PhaseModel S = PhaseModel::sphere();
  const Vec3 x0 = Vec3(0.6, 0.0, 0.8);
  CHECK((hamiltonian_flow(S, Observable::constant(2.0), x0, 3.0, 10) - x0).norm() == 0.0);

  // X_z rotates with angular speed 4 pi: period 1/2.
  // implicit midpoint: second-order phase error
  const double e1 = (hamiltonian_flow(S, Observable::coordinate(2), x0, 0.5, 400) - x0).norm();
  const double e2 = (hamiltonian_flow(S, Observable::coordinate(2), x0, 0.5, 4000) - x0).norm();
  CHECK(e1 < 1e-4);
  CHECK(e2 < 1e-6);
  CHECK(e1 / e2 == doctest::Approx(100).epsilon(0.01));
  const Vec3 rk = hamiltonian_flow(S, Observable::coordinate(2), x0, 0.5, 400, Integrator::RK4);
  CHECK((rk - x0).norm() < 1e-8);
  const Vec3 quarter = hamiltonian_flow(S, Observable::coordinate(2), x0, 0.125, 400);
  CHECK(quarter.z() == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(std::abs(quarter.x()) < 1e-4);

  const PhaseModel T = PhaseModel::torus();
  const Vec3 y = hamiltonian_flow(T, Observable::coordinate(0), Vec3(0.3, 0.4, 0), 0.25, 5);
  CHECK(y.x() == doctest::Approx(0.3));
  CHECK(y.y() == doctest::Approx(0.4 - 0.25));

  const PhasePoint c = hamiltonian_flow(T, Observable::coordinate(0), PhasePoint{ChartId::TorusSquare, 0.3, 0.1}, 0.25, 5);
  CHECK(c.v == doctest::Approx(0.85));
}

TEST_CASE("energy drift of both integrators") {
  const PhaseModel S = PhaseModel::sphere();
  std::mt19937_64 rng(7);
  for (int i = 0; i < 5; ++i) {
    const Observable f = Polynomial3::random(rng, 3).observable();
    const Vec3 x = random_sphere_point(rng);
    for (Integrator in : {Integrator::ImplicitMidpoint, Integrator::RK4}) {
      const Vec3 y = hamiltonian_flow(S, f, x, 0.05, 500, in);
      CHECK(std::abs(f(y) - f(x)) < 1e-6);
      CHECK(std::abs(y.norm() - 1) < 1e-12);
    }
  }
}

TEST_CASE("Darboux flow escape reports the last valid point") {
  const PhaseModel D = PhaseModel::darboux(Rect{0, 1, 0, 1});
  try {
    hamiltonian_flow(D, Observable::coordinate(0), Vec3(0.5, 0.5, 0), 1.0, 100);
    FAIL("expected escape");
  } catch (const FlowEscapeError& e) {
    CHECK(D.in_domain(e.last_valid()));
    CHECK(e.last_valid().y() < 0.02);
  }
}

TEST_CASE("flow preserves omega") {
  const PhaseModel S = PhaseModel::sphere();
  std::mt19937_64 rng(8);
  for (int i = 0; i < 5; ++i) {
    const Observable f = Polynomial3::random(rng, 2).observable();
    const Vec3 x = random_sphere_point(rng);
    const Vec3 u = S.tangent_part(x, random_sphere_point(rng)), v = S.tangent_part(x, random_sphere_point(rng));
    const double eps = 1e-5, t = 0.03;
    auto push = [&](const Vec3& w) {
      return ((hamiltonian_flow(S, f, S.step(x, eps * w), t, 200) - hamiltonian_flow(S, f, S.step(x, -eps * w), t, 200)) /
              (2 * eps))
          .eval();
    };
    const Vec3 y = hamiltonian_flow(S, f, x, t, 200);
    CHECK(std::abs(S.omega(y, push(u), push(v)) - S.omega(x, u, v)) < 1e-6);
  }

  const PhaseModel T = PhaseModel::torus();
  const Observable g = TrigPolynomial::random(rng, 1, 3).observable();
  const Vec3 x(0.2, 0.7, 0);
  const double eps = 1e-6;
  Eigen::Matrix2d J;
  for (int c = 0; c < 2; ++c) {
    Vec3 d = Vec3::Zero();
    d(c) = eps;
    const Vec3 a = hamiltonian_flow(T, g, x + d, 0.05, 200), b = hamiltonian_flow(T, g, x - d, 0.05, 200);
    J.col(c) = ((a - b) / (2 * eps)).head<2>();
  }
  Eigen::Matrix2d w;
  w << 0, 1, -1, 0;
  CHECK((J.transpose() * w * J - w).norm() < 1e-6);
}

TEST_CASE("Liouville integrals") {
  const PhaseModel S = PhaseModel::sphere(), T = PhaseModel::torus();
  CHECK(liouville_integral(S, Observable::constant(1.0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(liouville_integral(S, Observable::coordinate(2))) < 1e-14);
  CHECK(std::abs(liouville_integral(T, TrigPolynomial({{0, 1, 1.0, 0.0}}).observable())) < 1e-14);
  CHECK(liouville_integral(T, Observable::constant(1.0)) == doctest::Approx(1.0).epsilon(1e-12));
  // z^2 averages to 1/3 on the round sphere
  const Observable z = Observable::coordinate(2);
  CHECK(liouville_integral(S, z * z, 32) == doctest::Approx(1.0 / 3).epsilon(1e-13));
}

TEST_CASE("flow preserves Liouville integrals") {
  const PhaseModel S = PhaseModel::sphere();
  std::mt19937_64 rng(9);
  const Observable f = Polynomial3::random(rng, 2).observable();
  const Observable g = Polynomial3::random(rng, 3).observable();
  const Observable moved([&](const Vec3& x) { return g(hamiltonian_flow(S, f, x, 0.02, 200, Integrator::RK4)); });
  CHECK(liouville_integral(S, moved, 40) == doctest::Approx(liouville_integral(S, g, 40)).epsilon(1e-8).scale(1));
}

TEST_CASE("potentials integrate to the enclosed area") {
  const PhaseModel S = PhaseModel::sphere();
  std::mt19937_64 rng(10);
  for (int i = 0; i < 5; ++i) {
    Vec3 c = random_sphere_point(rng);
    if (c.z() < -0.5) c = -c;
    const Vec3 e1 = S.tangent_part(c, Vec3(1, 0.3, -0.2)).normalized(), e2 = c.cross(e1);
    const double r = 0.05;
    const int n = 400;
    double loop = 0;
    for (int j = 0; j < n; ++j) {
      const double a = 2 * kPi * j / n;
      const Vec3 x = std::cos(r) * c + std::sin(r) * (std::cos(a) * e1 + std::sin(a) * e2);
      const Vec3 dx = std::sin(r) * (-std::sin(a) * e1 + std::cos(a) * e2) * (2 * kPi / n);
      loop += S.potential(x, dx);
    }
    CHECK(loop == doctest::Approx((1 - std::cos(r)) / 2).epsilon(1e-10));
  }
  const PhaseModel T = PhaseModel::torus();
  // counterclockwise square in the (p, q) plane
  const double a = 0.1, p0 = 0.3, q0 = 0.5;
  const double loop = T.potential(Vec3(p0 + a, q0, 0), Vec3(0, a, 0)) - T.potential(Vec3(p0, q0, 0), Vec3(0, a, 0));
  CHECK(loop == doctest::Approx(a * a));
}
