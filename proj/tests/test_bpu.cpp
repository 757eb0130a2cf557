#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gq/bpu.hpp"

using namespace gq;

namespace {

constexpr double kPi = std::numbers::pi;

Vec3 rotate_z(const Vec3& x, double b) {
  return {std::cos(b) * x.x() - std::sin(b) * x.y(), std::sin(b) * x.x() + std::cos(b) * x.y(), x.z()};
}

ModuliPoint latitude_point(int k, int j, Eigen::Index n = 256) {
  const LagrangianLoop loop = LagrangianLoop::latitude(PhaseModel::sphere(k), 1.0 - 2.0 * j / k, n);
  return ModuliPoint(loop, invariant_half_weight(loop, Observable::coordinate(2), 1.0));
}

}  // namespace

TEST_CASE("planckian lift") {
  SUBCASE("tiny contractible loop has nearly trivial phases") {
    const PhaseModel m = PhaseModel::sphere(1);
    const LagrangianLoop loop = LagrangianLoop::circle(m, Vec3(0, 0, 1), 0.01, 64);
    const PlanckianLift lift(loop, 1, 1e-3);
    CHECK(lift.closure_defect() < 1e-4);
    CHECK((lift.unit().array() - 1.0).abs().maxCoeff() < 1e-3);
  }

  SUBCASE("latitude phase winds at the transport rate") {
    const int k = 7, j = 3;
    const PlanckianLift lift(latitude_point(k, j).loop(), k);
    const Eigen::Index n = lift.phase().size();
    for (Eigen::Index i = 0; i < n; ++i)
      CHECK(lift.phase()(i) == doctest::Approx(2.0 * kPi * j * i / static_cast<double>(n)).epsilon(1e-12));
    CHECK(lift.transport_residual() < 1e-12);
  }

  SUBCASE("transport residual on a deformed loop") {
    std::mt19937_64 rng(2);
    const ModuliPoint pt = random_sphere_point(rng, 5, 256);
    CHECK(planckian_lift(pt.loop(), 5).transport_residual() < 1e-9);
  }

  SUBCASE("non-BS latitude is a closure error with the defect angle") {
    const int k = 4;
    const double t = 0.3;
    const LagrangianLoop loop = LagrangianLoop::latitude(PhaseModel::sphere(k), 1.0 - 2.0 * t, 128);
    const PlanckianLift loose(loop, k, 1.0);
    CHECK(loose.closure_defect() == doctest::Approx(std::abs(k * t - std::round(k * t))).epsilon(1e-10));
    try {
      planckian_lift(loop, k);
      FAIL("expected a closure error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Closure);
      CHECK(std::string(e.what()).find("defect angle") != std::string::npos);
    }
  }

  CHECK_THROWS_AS(planckian_lift(LagrangianLoop::torus_fiber(PhaseModel::torus(), 0.0, 64), 1), Error);
}

TEST_CASE("bpu map of BS latitudes") {
  for (int k = 3; k <= 8; ++k) {
    const HolomorphicModel hm(k);
    for (int j = 1; j < k; ++j) {
      const ModuliPoint pt = latitude_point(k, j);
      const SectionRay v = bpu_map(pt, hm);
      CHECK(v.fidelity(SectionRay::basis(k + 1, j)) >= 1.0 - 1e-8);

      const PlanckianLift lift(pt.loop(), k);
      CHECK(bpu_map(pt, hm, lift.with_global_phase(1.234)).same_as(v, 1e-14));

      // Constant rescaling of the weight keeps the ray.
      const ModuliPoint heavier = ModuliPoint::normalized(pt.loop(), pt.weight(), 3.7);
      CHECK(bpu_map(heavier, hm).same_as(v, 1e-14));
    }
  }
}

TEST_CASE("non-invariant weight leaks by its Fourier modes") {
  // On a latitude the pairing with sigma_j picks the (j - m)-th Fourier mode of theta^2.
  const int k = 6, j0 = 2;
  const Eigen::Index n = 256;
  const HolomorphicModel hm(k);
  const ModuliPoint base = latitude_point(k, j0, n);
  Eigen::VectorXd theta(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = 2.0 * kPi * i / static_cast<double>(n);
    theta(i) = std::sqrt(1.0 + 0.3 * std::cos(s) + 0.1 * std::sin(2.0 * s));
  }
  const ModuliPoint pt(base.loop(), HalfWeight(theta));
  const Eigen::VectorXcd ell = bpu_functional(pt, hm, PlanckianLift(pt.loop(), k));
  const double z0 = 1.0 - 2.0 * j0 / k;
  auto mode = [](int d) { return d == 0 ? 1.0 : std::abs(d) == 1 ? 0.15 : std::abs(d) == 2 ? 0.05 : 0.0; };
  for (int j = 0; j <= k; ++j)
    CHECK(std::abs(ell(j)) == doctest::Approx(hm.radial(j, z0) * mode(j - j0)).epsilon(1e-10));
}

TEST_CASE("bpu equivariance under rotation about the axis") {
  const int k = 5;
  const HolomorphicModel hm(k);
  std::mt19937_64 rng(9);
  const ModuliPoint pt = random_sphere_point(rng, k, 256);
  const SectionRay v = bpu_map(pt, hm);
  for (double b : {0.3, 1.9, -2.5}) {
    const ModuliPoint turned(pt.loop().mapped([b](const Vec3& x) { return rotate_z(x, b); }), pt.weight());
    const SectionRay w = bpu_map(turned, hm);
    // Sections pick up e^{i j b}, so the ray moves by the diagonal phase, not a general unitary.
    Eigen::VectorXcd expect = v.representative();
    for (int j = 0; j <= k; ++j) expect(j) *= std::polar(1.0, -j * b);
    CHECK(w.same_as(SectionRay(expect), 1e-12));
  }
  // Rotating an axis latitude is a reparametrization: the ray does not move.
  const ModuliPoint lat = latitude_point(k, 2);
  const ModuliPoint lat_turned(lat.loop().mapped([](const Vec3& x) { return rotate_z(x, 0.77); }), lat.weight());
  CHECK(bpu_map(lat_turned, hm).same_as(bpu_map(lat, hm), 1e-12));
}

TEST_CASE("degenerate image") {
  const ModuliPoint pt = latitude_point(4, 2);
  const HolomorphicModel low(1);
  try {
    bpu_map(pt, low, PlanckianLift(pt.loop(), 4));
    FAIL("expected a degenerate image");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateImage);
  }
  CHECK_THROWS_AS(bpu_map(pt, low), Error);
}

TEST_CASE("eigenstate check") {
  const int k = 6;
  const HolomorphicModel hm(k);
  const Observable z = Observable::coordinate(2);

  for (int j = 1; j < k; ++j) {
    const auto c = eigenstate_check(z, latitude_point(k, j), hm);
    CHECK(c.is_critical);
    CHECK(c.eigen_residual <= 1e-8);
  }

  std::mt19937_64 rng(4);
  const ModuliPoint tilted = random_sphere_point(rng, k, 256);
  const auto c = eigenstate_check(z, tilted, hm);
  CHECK_FALSE(c.is_critical);
  CHECK(c.eigen_residual > 1e-3);

  const auto flat = eigenstate_check(Observable::constant(2.0), tilted, hm);
  CHECK(flat.is_critical);
  CHECK(flat.eigen_residual < 1e-12);
}

TEST_CASE("fiber images exhaust the interior monomials") {
  for (int k = 3; k <= 12; ++k) {
    const auto imgs = fiber_images(k);
    REQUIRE(imgs.size() == static_cast<std::size_t>(k - 1));
    std::vector<int> seen(k + 1, 0);
    for (const auto& img : imgs) {
      CHECK(img.monomial == img.index);
      CHECK(img.overlap >= 1.0 - 1e-8);
      CHECK(img.critical_residual <= 1e-8);
      CHECK(img.eigen_residual <= 1e-8);
      ++seen[img.monomial];
    }
    // The pole directions 0 and k are the two missing ones.
    CHECK(seen.front() == 0);
    CHECK(seen.back() == 0);
    for (int j = 1; j < k; ++j) CHECK(seen[j] == 1);
  }
}

TEST_CASE("metric weight") {
  const PhaseModel m = PhaseModel::sphere();
  // Length scan over latitudes: the equator is the unique maximizer.
  double best = 0.0, best_z = 2.0;
  for (int i = 1; i < 200; ++i) {
    const double z = -1.0 + i * 0.01;
    const double len = metric_weight(LagrangianLoop::latitude(m, z, 128)).volume;
    CHECK(len == doctest::Approx(2.0 * kPi * std::sqrt(1.0 - z * z)).epsilon(1e-10));
    if (len > best) {
      best = len;
      best_z = z;
    }
  }
  CHECK(std::abs(best_z) < 1e-12);

  const auto at_top = metric_level_latitudes(2.0 * kPi, 64);
  CHECK(at_top.size() == 2);
  CHECK(metric_level_latitudes(7.0, 64).empty());

  const double r = 4.0;
  const auto lifts = metric_level_latitudes(r, 128);
  REQUIRE(lifts.size() == 4);
  int plus = 0;
  for (const auto& wl : lifts) {
    CHECK(metric_weight(wl.loop).volume == doctest::Approx(r).epsilon(1e-10));
    CHECK(wl.weight.volume() == doctest::Approx(r).epsilon(1e-10));
    plus += wl.weight.sign() > 0;
  }
  CHECK(plus == 2);
  CHECK(lifts[0].loop.vertex(0).z() == doctest::Approx(-lifts[2].loop.vertex(0).z()));

  // On a latitude the adapted weight is the invariant weight.
  const LagrangianLoop lat = LagrangianLoop::latitude(m, 0.4, 128);
  const HalfWeight adapted = metric_weight(lat).adapted;
  const HalfWeight inv = invariant_half_weight(lat, Observable::coordinate(2), adapted.volume());
  CHECK((adapted.theta() - inv.theta()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("bpu follows the projective flow of the height with one fitted constant") {
  const int k = 5;
  const HolomorphicModel hm(k);
  const Observable z = Observable::coordinate(2);
  std::mt19937_64 rng(17);
  const double c = bpu_flow_tangent(z, random_sphere_point(rng, k, 256), hm).fitted_constant();
  // Rotation about the axis at rate 4 pi acts on sigma_j by e^{4 pi i j t}.
  CHECK(c == doctest::Approx(-2.0 * kPi * (k + 2)).epsilon(1e-4));
  for (int trial = 0; trial < 3; ++trial) {
    const FlowTangent ft = bpu_flow_tangent(z, random_sphere_point(rng, k, 256), hm);
    CHECK(ft.relative_error(c) <= 0.05);
  }
}
