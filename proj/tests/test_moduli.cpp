#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "gq/moduli.hpp"

using namespace gq;
using std::numbers::pi;

namespace {

Eigen::VectorXd sample(Eigen::Index n, const std::function<double(double)>& f) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = f(double(i) / double(n));
  return v;
}

ModuliPoint latitude_point(int k, int m, Eigen::Index n, const Eigen::VectorXd* theta = nullptr) {
  const auto loop = LagrangianLoop::latitude(PhaseModel::sphere(k), 1.0 - 2.0 * m / k, n);
  const HalfWeight w = theta ? HalfWeight(*theta) : HalfWeight::uniform(n, 1.0);
  return ModuliPoint::normalized(loop, w, 2.0);
}

template <class Rng>
ModuliTangent random_tangent(Rng& rng, const ModuliPoint& pt, int modes = 4) {
  std::normal_distribution<double> g;
  auto trig = [&] {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(pt.size());
    for (int m = 1; m <= modes; ++m) {
      const double a = g(rng) / m, b = g(rng) / m;
      v += sample(pt.size(), [&](double s) { return a * std::cos(2 * pi * m * s) + b * std::sin(2 * pi * m * s); });
    }
    return v;
  };
  return pt.project({trig(), trig()});
}

double rel(const ModuliTangent& a, const ModuliTangent& b) {
  return (a - b).max_abs() / std::max(1e-300, std::max(a.max_abs(), b.max_abs()));
}

}  // namespace

TEST_CASE("Kahler triple") {
  std::mt19937_64 rng(21);
  const ModuliPoint pt = random_sphere_point(rng, 3, 128);
  for (int i = 0; i < 10; ++i) {
    const ModuliTangent v = random_tangent(rng, pt), w = random_tangent(rng, pt);
    const auto kv = kahler_eval(pt, v, w);
    CHECK(kahler_eval(pt, v, v).omega == doctest::Approx(0.0).scale(1));
    CHECK(kv.omega == doctest::Approx(-kahler_eval(pt, w, v).omega).epsilon(1e-14));
    CHECK(kahler_eval(pt, v, v).metric > 0);
    CHECK(kv.metric == doctest::Approx(moduli_omega(pt, v, complex_structure(w))).epsilon(1e-13));
    CHECK((complex_structure(complex_structure(v)) + v).max_abs() == 0.0);
  }
  ModuliTangent bad = random_tangent(rng, pt);
  bad.psi2.array() += 1.0;
  try {
    kahler_eval(pt, bad, bad);
    FAIL("accepted a tangent with nonzero mean");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidTangent);
  }
}

TEST_CASE("ModuliPoint requires the BS condition") {
  const auto loop = LagrangianLoop::latitude(PhaseModel::sphere(3), 0.1, 64);
  try {
    ModuliPoint(loop, HalfWeight::uniform(64, 2.0));
    FAIL("accepted a non-BS loop");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Level);
  }
}

TEST_CASE("induced functions") {
  std::mt19937_64 rng(22);
  const ModuliPoint pt = random_sphere_point(rng, 4, 128);
  CHECK(induced_function(Observable::constant(3.0), pt) == doctest::Approx(0.5 * 2.0 * 3.0).epsilon(1e-13));
  const ModuliPoint lat = ModuliPoint::normalized(LagrangianLoop::latitude(PhaseModel::sphere(4), 0.5, 64),
                                                  random_half_weight(rng, 64, 1.0), 2.0);
  CHECK(induced_function(Observable::coordinate(2), lat) == doctest::Approx(0.5 * 2.0 * 0.5).epsilon(1e-13));
  const Observable far([](const Vec3& x) { return x.z() < -0.9 ? 1.0 : 0.0; });
  CHECK(induced_function(far, lat) == 0.0);
  // linear in f
  const Observable x = Observable::coordinate(0), y = Observable::coordinate(1);
  CHECK(induced_function(2.0 * x + y, pt) ==
        doctest::Approx(2 * induced_function(x, pt) + induced_function(y, pt)).epsilon(1e-13));
}

TEST_CASE("dynamical field examples") {
  const ModuliPoint lat = latitude_point(3, 1, 128);
  CHECK(dynamical_field(Observable::constant(2.0), lat).max_abs() < 1e-14);
  CHECK(dynamical_field(Observable::coordinate(2), lat).max_abs() < 1e-10);
  const ModuliTangent dx = dynamical_field(Observable::coordinate(0), lat);
  const Eigen::VectorXd xs = lat.loop().vertices().row(0).transpose();
  CHECK((dx.psi1 - (xs.array() - xs.mean()).matrix()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(dx.psi1.cwiseAbs().maxCoeff() > 0.5);
  CHECK_NOTHROW(lat.require_tangent(dx));
}

TEST_CASE("Hamiltonian field equals 2 tau times the dynamical field") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 8; ++trial) {
    const ModuliPoint pt = random_sphere_point(rng, 2 + trial % 4, 128);
    const Observable f = Polynomial3::random(rng, 3).observable();
    const ModuliTangent x = hamiltonian_field(f, pt);
    CHECK(rel(x, dynamical_field(f, pt) * (2 * pt.tau())) < 1e-8);
    // the differential against finite differences of the induced function
    for (int j = 0; j < 2; ++j) {
      const ModuliTangent v = random_tangent(rng, pt);
      const double eps = 1e-5;
      const double fd =
          (induced_function(f, moduli_step(pt, v, eps, false)) - induced_function(f, moduli_step(pt, v, -eps, false))) /
          (2 * eps);
      CHECK(moduli_omega(pt, x, v) == doctest::Approx(fd).epsilon(1e-6).scale(1));
    }
  }
  const ModuliPoint lat = latitude_point(3, 1, 64);
  CHECK(hamiltonian_field(Observable::constant(1.0), lat).max_abs() < 1e-13);
  const Observable x = Observable::coordinate(0);
  CHECK(rel(hamiltonian_field(x, lat), dynamical_field(x, lat) * 1.0) < 1e-8);
}

TEST_CASE("bracket theorem examples") {
  const Observable z = Observable::coordinate(2), x = Observable::coordinate(0);
  const auto zero = bracket_check(Observable::constant(1), Observable::constant(2), latitude_point(3, 1, 64));
  CHECK(std::abs(zero.lhs) < 1e-14);
  CHECK(std::abs(zero.rhs) < 1e-14);
  const auto sym = bracket_check(z, x, latitude_point(3, 1, 128));
  CHECK(std::abs(sym.lhs) < 1e-12);
  CHECK(std::abs(sym.rhs) < 1e-12);
  const Eigen::VectorXd theta = sample(128, [](double s) { return std::sqrt(1 + 0.5 * std::sin(2 * pi * s)); });
  const auto b = bracket_check(z, x, latitude_point(3, 1, 128, &theta));
  CHECK(std::abs(b.rhs) > 0.1);
  CHECK(b.lhs == doctest::Approx(b.rhs).epsilon(1e-7));
  // independent oracle: {z, x} = 4 pi y, weight density 2(1 + sin/2)
  const double r0 = std::sqrt(1 - 1.0 / 9);
  CHECK(b.rhs == doctest::Approx(2 * 0.25 * 4 * pi * r0 * 2 * 0.25).epsilon(1e-12));
}

TEST_CASE("bracket theorem converges at fourth order in N") {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 3; ++trial) {
    const auto seed = rng();
    std::vector<double> err;
    for (Eigen::Index n : {64, 128, 256}) {
      std::mt19937_64 r(seed);
      const ModuliPoint pt = random_sphere_point(r, 3, n);
      const Observable f = Polynomial3::random(r, 3).observable(), g = Polynomial3::random(r, 3).observable();
      const auto b = bracket_check(f, g, pt);
      err.push_back(std::abs(b.lhs - b.rhs));
      CHECK(b.pointwise_residual < 1e-9);
    }
    CHECK(std::log2(err[1] / err[2]) > 1.8);
  }
}

TEST_CASE("restricted bracket identity does not depend on the transversal") {
  std::mt19937_64 rng(25);
  const ModuliPoint pt = random_sphere_point(rng, 5, 128);
  const Polynomial3 pf = Polynomial3::random(rng, 3), pg = Polynomial3::random(rng, 3);
  const double a = restricted_bracket_residual(pf.observable(), pg.observable(), pt, 0.0);
  const double b = restricted_bracket_residual(pf.observable(), pg.observable(), pt, 0.5);
  CHECK(a < 1e-10);
  CHECK(b < 1e-10);
  CHECK(std::abs(a - b) < 1e-10);
  // finite-difference gradients: residual of the order of the step
  const Observable ff([pf](const Vec3& x) { return pf(x); }), gf([pg](const Vec3& x) { return pg(x); });
  CHECK(restricted_bracket_residual(ff, gf, pt, 0.3) < 1e-4);
}

TEST_CASE("critical residual") {
  const Observable z = Observable::coordinate(2);
  CHECK(critical_residual(z, latitude_point(4, 1, 128)) < 1e-10);
  const Eigen::VectorXd theta = sample(128, [](double s) { return 1 + 0.2 * std::cos(2 * pi * s); });
  const ModuliPoint nonin = latitude_point(4, 1, 128, &theta);
  CHECK(critical_residual(z, nonin) > 0.1);
  std::mt19937_64 rng(26);
  const ModuliPoint tilted = random_sphere_point(rng, 4, 128);
  const Eigen::VectorXd zs = restrict_to(z, tilted.loop());
  CHECK(zs.maxCoeff() - zs.minCoeff() > 1e-2);
  CHECK(critical_residual(z, tilted) > 1e-5);
}

TEST_CASE("isodrastic flow") {
  const ModuliPoint lat = latitude_point(3, 1, 128);
  const Observable z = Observable::coordinate(2), x = Observable::coordinate(0);
  const Observable y = Observable::coordinate(1);
  CHECK((isodrastic_flow(x, lat, 0.0, 10).loop().vertices() - lat.loop().vertices()).norm() == 0.0);
  // critical point: the loop turns within itself
  const ModuliPoint still = isodrastic_flow(z, lat, 0.013, 100);
  CHECK(restrict_to(z, still.loop()).cwiseAbs().maxCoeff() == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
  CHECK(critical_residual(z, still) < 1e-9);

  const double h0 = holonomy_class(lat.loop()).action;
  const ModuliPoint moved = isodrastic_flow(x, lat, 0.1, 200);
  const Eigen::VectorXd zs = restrict_to(z, moved.loop());
  CHECK(zs.maxCoeff() - zs.minCoeff() > 0.5);
  CHECK(std::abs(std::remainder(holonomy_class(moved.loop()).action - h0, 1.0)) < 1e-9);
  CHECK(induced_function(x, moved) == doctest::Approx(induced_function(x, lat)).epsilon(1e-9));
  CHECK(moved.volume() == doctest::Approx(2.0).epsilon(1e-12));

  // d/dt F_y along the flow of x equals {F_y, F_x} / (2 tau)
  std::mt19937_64 rng(27);
  const ModuliPoint pt = random_sphere_point(rng, 3, 128);
  const double dt = 1e-4;
  const double rate =
      (induced_function(y, isodrastic_flow(x, pt, dt, 4)) - induced_function(y, isodrastic_flow(x, pt, -dt, 4))) /
      (2 * dt);
  const double br = moduli_omega(pt, hamiltonian_field(y, pt), hamiltonian_field(x, pt));
  CHECK(rate == doctest::Approx(br / (2 * pt.tau())).epsilon(1e-6));
}

TEST_CASE("level rescaling") {
  std::mt19937_64 rng(28);
  const auto T = PhaseModel::torus(1);
  const ModuliPoint pt(LagrangianLoop::torus_fiber(T, 0.0, 128), random_half_weight(rng, 128, 2.0));
  const Observable f = TrigPolynomial::random(rng).observable(), g = TrigPolynomial::random(rng).observable();
  const auto one = level_rescale(f, g, pt, 1);
  CHECK(one.bracket_k == doctest::Approx(one.bracket_1).epsilon(1e-12));
  for (int k : {2, 4, 8}) {
    const auto r = level_rescale(f, g, pt, k);
    CHECK(r.bracket_k / r.bracket_1 == doctest::Approx(1.0 / k).epsilon(1e-10));
  }
  const auto c = level_rescale(Observable::constant(1), Observable::constant(2), pt, 4);
  CHECK(std::abs(c.bracket_k) < 1e-14);
  CHECK(tau_for(4, 0.25) == 0.5);
  try {
    level_rescale(f, g, latitude_point(3, 1, 64), 2);
    FAIL("level-1 check skipped");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Level);
  }
}

TEST_CASE("surjectivity witness round trip") {
  const ModuliPoint lat = latitude_point(4, 1, 256);
  const ModuliTangent zero{Eigen::VectorXd::Zero(256), Eigen::VectorXd::Zero(256)};
  const Observable f0 = surjectivity_witness(zero, lat);
  CHECK(dynamical_field(f0, lat).max_abs() < 1e-14);
  const Eigen::VectorXd sine = sample(256, [](double s) { return std::sin(2 * pi * 2 * s); });
  for (const ModuliTangent& target : {ModuliTangent{sine, Eigen::VectorXd::Zero(256)},
                                      ModuliTangent{Eigen::VectorXd::Zero(256), sine}}) {
    const Observable f = surjectivity_witness(target, lat);
    CHECK(rel(dynamical_field(f, lat), target) < 1e-6);
  }
  std::mt19937_64 rng(29);
  const ModuliPoint pt = random_sphere_point(rng, 3, 256);
  const ModuliTangent target = random_tangent(rng, pt);
  const Observable f = surjectivity_witness(target, pt);
  CHECK(rel(dynamical_field(f, pt), target) < 1e-6);
  // supported near the loop
  CHECK(f(-pt.loop().vertex(0)) == 0.0);
}

TEST_CASE("quasi-classical objects") {
  const auto S = PhaseModel::sphere(3);
  const auto lat = LagrangianLoop::latitude(S, 0.4, 64);
  const auto num = quasiclassical_object(Observable::coordinate(2), lat);
  REQUIRE(std::holds_alternative<double>(num));
  CHECK(std::get<double>(num) == doctest::Approx(0.4).epsilon(1e-14));
  const auto field = quasiclassical_object(Observable::coordinate(0), lat);
  REQUIRE(std::holds_alternative<DeformationField>(field));
  CHECK(std::get<DeformationField>(field).displacement.norm() > 0.1);

  const auto tilted = LagrangianLoop::circle(S, Vec3(1, 0.5, 0.8), 0.7, 64);
  CHECK(quasiclassical_bracket_residual(Observable::coordinate(0), Observable::coordinate(1), tilted) < 1e-4);
}

TEST_CASE("critical points are locally isolated") {
  const ModuliPoint lat = latitude_point(4, 1, 128);
  const Observable z = Observable::coordinate(2);
  const double at = std::sqrt(moduli_metric(lat, hamiltonian_field(z, lat), hamiltonian_field(z, lat)));
  CHECK(at < 1e-10);
  std::mt19937_64 rng(30);
  for (int i = 0; i < 20; ++i) {
    const ModuliPoint p = moduli_step(lat, random_tangent(rng, lat), 1e-3);
    const ModuliTangent x = hamiltonian_field(z, p);
    CHECK(std::sqrt(moduli_metric(p, x, x)) > 100 * at);
  }
}

TEST_CASE("linearized critical set is invariant under the complex structure") {
  // the commutator with I is a discretization effect: it decays with N
  double prev = 0;
  for (Eigen::Index n : {64, 128, 256}) {
    const Linearization lin = critical_linearization(Observable::coordinate(2), latitude_point(4, 1, n), 3);
    CHECK(lin.min_singular > 1e-2);
    if (prev > 0) CHECK(lin.commutator < prev / 8);
    prev = lin.commutator;
  }
  CHECK(prev < 1e-4);
}

TEST_CASE("transported BS loops reach every small bump") {
  const ModuliPoint lat = latitude_point(3, 1, 128);
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  for (int i = 0; i < 10; ++i) {
    const Vec3 c = Vec3(g(rng), g(rng), g(rng)).normalized();
    const Observable bump([c](const Vec3& x) {
      const double d2 = (x - c).squaredNorm();
      return d2 < 0.01 ? std::exp(-1.0 / (1.0 - d2 / 0.01)) : 0.0;
    });
    const ModuliPoint p = transport_through(lat, c);
    CHECK(holonomy_class(p.loop()).is_bs);
    CHECK(induced_function(bump, p) > 1e-4);
  }
}
