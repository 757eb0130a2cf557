#ifndef GQ_LOOP_HPP
#define GQ_LOOP_HPP

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <vector>

#include "gq/phase_space.hpp"

namespace gq {

enum class DerivativeScheme { Spectral, FourthOrder };
const char* to_string(DerivativeScheme s);

/// Periodic calculus on N samples of [0, 1).
/// Both schemes are skew-symmetric circulant operators.
class LoopCalculus {
 public:
  LoopCalculus(Eigen::Index n, DerivativeScheme scheme);

  Eigen::Index size() const { return n_; }
  DerivativeScheme scheme() const { return scheme_; }

  Eigen::VectorXd derivative(const Eigen::VectorXd& f) const;
  /// Inverse of `derivative` on mean-zero data; the result has mean zero.
  Eigen::VectorXd antiderivative(const Eigen::VectorXd& f) const;
  /// Fourier multiplier of the operator for the signed mode m.
  std::complex<double> symbol(Eigen::Index m) const;

 private:
  Eigen::Index n_;
  DerivativeScheme scheme_;
};

/// Trigonometric interpolant of periodic samples.
class PeriodicInterpolant {
 public:
  explicit PeriodicInterpolant(const Eigen::VectorXd& samples);
  double operator()(double s) const;
  double derivative(double s) const;

 private:
  std::vector<std::complex<double>> coef_;
  Eigen::Index n_;
};

/// Closed embedded polyline with uniform parameter s_i = i / N.
/// Torus loops keep unwrapped vertices; vertex i + N sits at vertex i + winding.
class LagrangianLoop {
 public:
  LagrangianLoop(const PhaseModel& m, const Eigen::Matrix3Xd& vertices, const Eigen::Vector2i& winding = {0, 0});

  /// Torus loop from wrapped chart coordinates without winding data.
  /// Jumps across the cut leave the holonomy undefined.
  static LagrangianLoop from_wrapped(const PhaseModel& m, const Eigen::Matrix3Xd& wrapped);
  static LagrangianLoop latitude(const PhaseModel& m, double z0, Eigen::Index n, double phase = 0.0);
  static LagrangianLoop torus_fiber(const PhaseModel& m, double p0, Eigen::Index n, double q0 = 0.0);
  static LagrangianLoop circle(const PhaseModel& m, const Vec3& center, double radius, Eigen::Index n);

  const PhaseModel& model() const { return model_; }
  Eigen::Index size() const { return v_.cols(); }
  const Eigen::Matrix3Xd& vertices() const { return v_; }
  Vec3 vertex(Eigen::Index i) const { return v_.col(i); }
  const Eigen::Vector2i& winding() const { return winding_; }
  Vec3 period_shift() const { return {double(winding_.x()), double(winding_.y()), 0.0}; }
  bool has_bookkeeping() const { return bookkeeping_; }

  /// d gamma / ds at the vertices.
  Eigen::Matrix3Xd tangents(DerivativeScheme scheme = DerivativeScheme::Spectral) const;
  LagrangianLoop reversed() const;
  LagrangianLoop mapped(const std::function<Vec3(const Vec3&)>& f) const;
  std::vector<PhasePoint> chart_points() const;

 private:
  LagrangianLoop(const PhaseModel& m, const Eigen::Matrix3Xd& v, const Eigen::Vector2i& w, bool bookkeeping);
  void validate() const;

  PhaseModel model_;
  Eigen::Matrix3Xd v_;
  Eigen::Vector2i winding_;
  bool bookkeeping_ = true;
};

/// Smooth parametrization of a loop through its vertex samples.
class LoopInterpolant {
 public:
  explicit LoopInterpolant(const LagrangianLoop& loop);
  Vec3 position(double s) const;
  Vec3 tangent(double s) const;

 private:
  PhaseModel model_;
  std::vector<PeriodicInterpolant> comp_;
  Vec3 shift_;
};

/// Positive half-density per vertex against ds; theta^2 is a volume form.
class HalfWeight {
 public:
  explicit HalfWeight(const Eigen::VectorXd& theta, int sign = 1);
  static HalfWeight uniform(Eigen::Index n, double volume);

  const Eigen::VectorXd& theta() const { return theta_; }
  Eigen::VectorXd density() const { return theta_.array().square(); }
  Eigen::Index size() const { return theta_.size(); }
  int sign() const { return sign_; }
  double volume() const;
  HalfWeight normalized(double r) const;

 private:
  Eigen::VectorXd theta_;
  int sign_;
};

/// Weighted mean of vertex data against theta^2 ds, over the volume.
double weighted_mean(const Eigen::VectorXd& f, const HalfWeight& w);
/// Trapezoid integral of vertex data against theta^2 ds.
double weighted_integral(const Eigen::VectorXd& f, const HalfWeight& w);

Eigen::VectorXd restrict_to(const Observable& f, const LagrangianLoop& loop);

/// Same geometric loop and measure under a circle diffeomorphism s = phi(u).
/// phi must map [0,1) onto itself increasingly with phi(u + 1) = phi(u) + 1.
std::pair<LagrangianLoop, HalfWeight> reparametrize(const LagrangianLoop& loop, const HalfWeight& w,
                                                    const std::function<double(double)>& phi,
                                                    const std::function<double(double)>& dphi, Eigen::Index n);

}  // namespace gq

#endif
