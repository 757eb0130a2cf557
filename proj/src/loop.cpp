#include "gq/loop.hpp"

#include <cmath>
#include <numbers>
#include <unsupported/Eigen/FFT>

namespace gq {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

using CVec = std::vector<std::complex<double>>;

CVec forward(const Eigen::VectorXd& f) {
  Eigen::FFT<double> fft;
  std::vector<double> in(f.data(), f.data() + f.size());
  CVec out;
  fft.fwd(out, in);
  return out;
}

Eigen::VectorXd inverse(const CVec& c) {
  Eigen::FFT<double> fft;
  std::vector<double> out;
  fft.inv(out, c);
  return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

Eigen::Index signed_mode(Eigen::Index j, Eigen::Index n) { return j <= n / 2 ? j : j - n; }

// Cheap distance used by the embedding check; monotone in the true distance.
double quick_distance(const PhaseModel& m, const Vec3& a, const Vec3& b) {
  if (m.kind() == ModelKind::Torus) return m.distance(a, b);
  return (a - b).norm();
}

}  // namespace

const char* to_string(DerivativeScheme s) {
  return s == DerivativeScheme::Spectral ? "spectral" : "fourth-order";
}

LoopCalculus::LoopCalculus(Eigen::Index n, DerivativeScheme scheme) : n_(n), scheme_(scheme) {
  if (n < 5) throw Error(ErrorKind::Resolution, "loop calculus needs at least 5 samples");
}

std::complex<double> LoopCalculus::symbol(Eigen::Index m) const {
  const double n = static_cast<double>(n_);
  if (scheme_ == DerivativeScheme::Spectral) {
    if (n_ % 2 == 0 && std::abs(m) == n_ / 2) return 0.0;
    return {0.0, kTwoPi * static_cast<double>(m)};
  }
  const double th = kTwoPi * static_cast<double>(m) / n;
  return {0.0, n * (8.0 * std::sin(th) - std::sin(2.0 * th)) / 6.0};
}

Eigen::VectorXd LoopCalculus::derivative(const Eigen::VectorXd& f) const {
  if (f.size() != n_) throw Error(ErrorKind::DimensionMismatch, "derivative: sample count mismatch");
  if (scheme_ == DerivativeScheme::FourthOrder) {
    Eigen::VectorXd d(n_);
    const double s = static_cast<double>(n_) / 12.0;
    for (Eigen::Index i = 0; i < n_; ++i) {
      auto at = [&](Eigen::Index k) { return f((i + k + 2 * n_) % n_); };
      d(i) = s * (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2));
    }
    return d;
  }
  CVec c = forward(f);
  for (Eigen::Index j = 0; j < n_; ++j) c[j] *= symbol(signed_mode(j, n_));
  return inverse(c);
}

Eigen::VectorXd LoopCalculus::antiderivative(const Eigen::VectorXd& f) const {
  if (f.size() != n_) throw Error(ErrorKind::DimensionMismatch, "antiderivative: sample count mismatch");
  CVec c = forward(f);
  for (Eigen::Index j = 0; j < n_; ++j) {
    const auto s = symbol(signed_mode(j, n_));
    c[j] = std::abs(s) > 1e-9 ? c[j] / s : 0.0;
  }
  return inverse(c);
}

PeriodicInterpolant::PeriodicInterpolant(const Eigen::VectorXd& samples) : coef_(forward(samples)), n_(samples.size()) {
  for (auto& c : coef_) c /= static_cast<double>(n_);
}

double PeriodicInterpolant::operator()(double s) const {
  double acc = coef_[0].real();
  for (Eigen::Index j = 1; j <= (n_ - 1) / 2; ++j)
    acc += 2.0 * (coef_[j] * std::polar(1.0, kTwoPi * j * s)).real();
  if (n_ % 2 == 0) acc += (coef_[n_ / 2] * std::cos(kTwoPi * (n_ / 2) * s)).real();
  return acc;
}

double PeriodicInterpolant::derivative(double s) const {
  double acc = 0.0;
  for (Eigen::Index j = 1; j <= (n_ - 1) / 2; ++j)
    acc += 2.0 * (coef_[j] * std::complex<double>(0.0, kTwoPi * j) * std::polar(1.0, kTwoPi * j * s)).real();
  if (n_ % 2 == 0) acc -= (coef_[n_ / 2] * kTwoPi * double(n_ / 2) * std::sin(kTwoPi * (n_ / 2) * s)).real();
  return acc;
}

// ---------------------------------------------------------------------------

LagrangianLoop::LagrangianLoop(const PhaseModel& m, const Eigen::Matrix3Xd& vertices, const Eigen::Vector2i& winding)
    : model_(m), v_(vertices), winding_(winding), bookkeeping_(true) {
  if (v_.cols() >= 2) {
    const Vec3 closing = v_.col(0) + period_shift();
    if ((v_.col(v_.cols() - 1) - closing).norm() < 1e-12) v_.conservativeResize(3, v_.cols() - 1);
  }
  validate();
}

LagrangianLoop::LagrangianLoop(const PhaseModel& m, const Eigen::Matrix3Xd& v, const Eigen::Vector2i& w,
                               bool bookkeeping)
    : model_(m), v_(v), winding_(w), bookkeeping_(bookkeeping) {
  validate();
}

void LagrangianLoop::validate() const {
  const Eigen::Index n = v_.cols();
  if (n < 16) throw Error(ErrorKind::InvalidLoop, "a loop needs at least 16 vertices");
  if (model_.kind() != ModelKind::Torus && winding_ != Eigen::Vector2i::Zero())
    throw Error(ErrorKind::InvalidLoop, "winding data only applies to torus loops");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!model_.in_domain(v_.col(i))) throw Error(ErrorKind::Domain, "loop vertex outside the phase space");
  double min_edge = INFINITY;
  for (Eigen::Index i = 0; i < n; ++i)
    min_edge = std::min(min_edge, quick_distance(model_, v_.col(i), v_.col((i + 1) % n)));
  if (!(min_edge > 0.0)) throw Error(ErrorKind::InvalidLoop, "loop has repeated consecutive vertices");
  const double gap = 0.25 * min_edge;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (quick_distance(model_, v_.col(i), v_.col(j)) <= gap)
        throw Error(ErrorKind::InvalidLoop, "loop is not embedded");
    }
}

LagrangianLoop LagrangianLoop::from_wrapped(const PhaseModel& m, const Eigen::Matrix3Xd& wrapped) {
  bool jumps = false;
  const Eigen::Index n = wrapped.cols();
  if (m.kind() == ModelKind::Torus)
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec3 d = wrapped.col((i + 1) % n) - wrapped.col(i);
      if (std::abs(d.x()) > 0.5 || std::abs(d.y()) > 0.5) jumps = true;
    }
  return LagrangianLoop(m, wrapped, Eigen::Vector2i::Zero(), !jumps);
}

LagrangianLoop LagrangianLoop::latitude(const PhaseModel& m, double z0, Eigen::Index n, double phase) {
  if (m.kind() != ModelKind::Sphere) throw Error(ErrorKind::Domain, "latitudes live on the sphere");
  if (!(std::abs(z0) < 1.0)) throw Error(ErrorKind::DegenerateFiber, "latitude at a pole");
  const double r = std::sqrt(1.0 - z0 * z0);
  Eigen::Matrix3Xd v(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ph = phase + kTwoPi * static_cast<double>(i) / static_cast<double>(n);
    v.col(i) = Vec3(r * std::cos(ph), r * std::sin(ph), z0);
  }
  return LagrangianLoop(m, v);
}

LagrangianLoop LagrangianLoop::torus_fiber(const PhaseModel& m, double p0, Eigen::Index n, double q0) {
  if (m.kind() != ModelKind::Torus) throw Error(ErrorKind::Domain, "torus fibers live on the torus");
  Eigen::Matrix3Xd v(3, n);
  for (Eigen::Index i = 0; i < n; ++i) v.col(i) = Vec3(p0, q0 + static_cast<double>(i) / static_cast<double>(n), 0.0);
  return LagrangianLoop(m, v, Eigen::Vector2i(0, 1));
}

LagrangianLoop LagrangianLoop::circle(const PhaseModel& m, const Vec3& center, double radius, Eigen::Index n) {
  Eigen::Matrix3Xd v(3, n);
  if (m.kind() == ModelKind::Sphere) {
    const Vec3 c = center.normalized();
    const Vec3 e1 = (std::abs(c.z()) < 0.9 ? Vec3::UnitZ().cross(c) : Vec3::UnitX().cross(c)).normalized().cross(c).normalized();
    const Vec3 e2 = c.cross(e1);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double ph = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
      v.col(i) = std::cos(radius) * c + std::sin(radius) * (std::cos(ph) * e1 + std::sin(ph) * e2);
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double ph = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
      v.col(i) = Vec3(center.x() + radius * std::cos(ph), center.y() + radius * std::sin(ph), 0.0);
    }
  }
  return LagrangianLoop(m, v);
}

Eigen::Matrix3Xd LagrangianLoop::tangents(DerivativeScheme scheme) const {
  if (!bookkeeping_) throw Error(ErrorKind::InvalidLoop, "loop crosses the chart cut without winding data");
  const Eigen::Index n = size();
  const LoopCalculus d(n, scheme);
  const Vec3 shift = period_shift();
  Eigen::Matrix3Xd t(3, n);
  for (int c = 0; c < 3; ++c) {
    Eigen::VectorXd periodic(n);
    for (Eigen::Index i = 0; i < n; ++i) periodic(i) = v_(c, i) - shift(c) * static_cast<double>(i) / static_cast<double>(n);
    t.row(c) = (d.derivative(periodic).array() + shift(c)).matrix().transpose();
  }
  if (model_.kind() == ModelKind::Sphere)
    for (Eigen::Index i = 0; i < n; ++i) t.col(i) = model_.tangent_part(v_.col(i), t.col(i));
  return t;
}

LagrangianLoop LagrangianLoop::reversed() const {
  const Eigen::Index n = size();
  Eigen::Matrix3Xd w(3, n);
  w.col(0) = v_.col(0);
  for (Eigen::Index i = 1; i < n; ++i) w.col(i) = v_.col(n - i) - period_shift();
  return LagrangianLoop(model_, w, Eigen::Vector2i(-winding_), bookkeeping_);
}

LagrangianLoop LagrangianLoop::mapped(const std::function<Vec3(const Vec3&)>& f) const {
  Eigen::Matrix3Xd w(3, size());
  for (Eigen::Index i = 0; i < size(); ++i) w.col(i) = f(v_.col(i));
  return LagrangianLoop(model_, w, winding_, bookkeeping_);
}

std::vector<PhasePoint> LagrangianLoop::chart_points() const {
  std::vector<PhasePoint> out;
  out.reserve(static_cast<size_t>(size()));
  for (Eigen::Index i = 0; i < size(); ++i) out.push_back(model_.chart_point(v_.col(i)));
  return out;
}

// ---------------------------------------------------------------------------

LoopInterpolant::LoopInterpolant(const LagrangianLoop& loop) : model_(loop.model()), shift_(loop.period_shift()) {
  if (!loop.has_bookkeeping()) throw Error(ErrorKind::InvalidLoop, "loop crosses the chart cut without winding data");
  const Eigen::Index n = loop.size();
  for (int c = 0; c < 3; ++c) {
    Eigen::VectorXd periodic(n);
    for (Eigen::Index i = 0; i < n; ++i)
      periodic(i) = loop.vertices()(c, i) - shift_(c) * static_cast<double>(i) / static_cast<double>(n);
    comp_.emplace_back(periodic);
  }
}

Vec3 LoopInterpolant::position(double s) const {
  Vec3 y(comp_[0](s), comp_[1](s), comp_[2](s));
  y += shift_ * s;
  return model_.kind() == ModelKind::Sphere ? Vec3(y.normalized()) : y;
}

Vec3 LoopInterpolant::tangent(double s) const {
  Vec3 y(comp_[0](s), comp_[1](s), comp_[2](s));
  Vec3 dy(comp_[0].derivative(s), comp_[1].derivative(s), comp_[2].derivative(s));
  y += shift_ * s;
  dy += shift_;
  if (model_.kind() != ModelKind::Sphere) return dy;
  const double r = y.norm();
  const Vec3 u = y / r;
  return (dy - u * u.dot(dy)) / r;
}

// ---------------------------------------------------------------------------

HalfWeight::HalfWeight(const Eigen::VectorXd& theta, int sign) : theta_(theta), sign_(sign >= 0 ? 1 : -1) {
  if (theta_.size() == 0 || !theta_.allFinite() || (theta_.array() <= 0.0).any())
    throw Error(ErrorKind::Domain, "half-weight must be positive and finite");
}

HalfWeight HalfWeight::uniform(Eigen::Index n, double volume) {
  return HalfWeight(Eigen::VectorXd::Constant(n, std::sqrt(volume)));
}

double HalfWeight::volume() const { return theta_.squaredNorm() / static_cast<double>(theta_.size()); }

HalfWeight HalfWeight::normalized(double r) const {
  if (!(r > 0.0)) throw Error(ErrorKind::Domain, "volume must be positive");
  return HalfWeight(theta_ * std::sqrt(r / volume()), sign_);
}

double weighted_integral(const Eigen::VectorXd& f, const HalfWeight& w) {
  if (f.size() != w.size()) throw Error(ErrorKind::DimensionMismatch, "weight and data sizes differ");
  return f.dot(w.density()) / static_cast<double>(f.size());
}

double weighted_mean(const Eigen::VectorXd& f, const HalfWeight& w) { return weighted_integral(f, w) / w.volume(); }

Eigen::VectorXd restrict_to(const Observable& f, const LagrangianLoop& loop) {
  Eigen::VectorXd out(loop.size());
  for (Eigen::Index i = 0; i < loop.size(); ++i) out(i) = f(loop.vertex(i));
  return out;
}

std::pair<LagrangianLoop, HalfWeight> reparametrize(const LagrangianLoop& loop, const HalfWeight& w,
                                                    const std::function<double(double)>& phi,
                                                    const std::function<double(double)>& dphi, Eigen::Index n) {
  if (w.size() != loop.size()) throw Error(ErrorKind::DimensionMismatch, "weight and loop sizes differ");
  const LoopInterpolant gamma(loop);
  const PeriodicInterpolant rho(w.density());
  Eigen::Matrix3Xd v(3, n);
  Eigen::VectorXd theta(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double u = static_cast<double>(j) / static_cast<double>(n);
    const double s = phi(u);
    v.col(j) = gamma.position(s);
    theta(j) = std::sqrt(std::max(rho(s), 0.0) * dphi(u));
  }
  return {LagrangianLoop(loop.model(), v, loop.winding()), HalfWeight(theta, w.sign())};
}

}  // namespace gq
