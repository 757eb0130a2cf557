#include "gq/prequantum.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <json.hpp>
#include <numbers>
#include <ostream>
#include <string>

namespace gq {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const std::complex<double> kI(0.0, 1.0);

int wrap(long i, int n) { return static_cast<int>(((i % n) + n) % n); }

void require_same_grid(const PrequantumBundle& b, const DiscretizedSection& s) {
  if (s.size() != b.size() || s.level() != b.level())
    throw Error(ErrorKind::DimensionMismatch, "section and bundle grids differ");
}

}  // namespace

PrequantumBundle::PrequantumBundle(int level, int n, const Observable& weight)
    : model_(PhaseModel::torus(level)), k_(level), n_(n) {
  if (level < 1) throw Error(ErrorKind::Level, "prequantum level must be a positive integer");
  if (n < 8) throw Error(ErrorKind::Resolution, "prequantum grid needs n >= 8");
  phi_.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double w = weight(point(i, j));
      if (!(w > 0.0) || !std::isfinite(w))
        throw Error(ErrorKind::InvalidStructure, "hermitian weight must be strictly positive");
      phi_(i, j) = std::log(w);
    }
  lp_.resize(n, n);
  lq_.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      lp_(i, j) = compute_link_p(i, j);
      lq_(i, j) = compute_link_q(i, j);
    }
}

std::complex<double> PrequantumBundle::compute_link_p(int i, int j) const {
  const int ip = wrap(i + 1, n_);
  std::complex<double> u = std::exp(0.5 * (phi_(ip, j) - phi_(i, j)));
  if (ip == 0) u *= std::polar(1.0, -kTwoPi * k_ * j * spacing());
  return u;
}

std::complex<double> PrequantumBundle::compute_link_q(int i, int j) const {
  const int jp = wrap(j + 1, n_);
  const double h = spacing();
  return std::exp(std::complex<double>(0.5 * (phi_(i, jp) - phi_(i, j)), kTwoPi * k_ * i * h * h));
}

double PrequantumBundle::plaquette_angle(int i, int j) const {
  const int ip = wrap(i + 1, n_), jp = wrap(j + 1, n_);
  return std::arg(link_p(i, j) * link_q(ip, j) / (link_p(i, jp) * link_q(i, j)));
}

double PrequantumBundle::chern_number() const {
  double acc = 0.0;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) acc += plaquette_angle(i, j);
  return acc / kTwoPi;
}

// ---------------------------------------------------------------------------

DiscretizedSection::DiscretizedSection(const PrequantumBundle& b, Eigen::MatrixXcd values)
    : k_(b.level()), v_(std::move(values)) {
  if (v_.rows() != b.size() || v_.cols() != b.size())
    throw Error(ErrorKind::DimensionMismatch, "section values do not match the grid");
}

DiscretizedSection DiscretizedSection::zero(const PrequantumBundle& b) {
  return DiscretizedSection(b, Eigen::MatrixXcd::Zero(b.size(), b.size()));
}

DiscretizedSection DiscretizedSection::sample(const PrequantumBundle& b,
                                              const std::function<std::complex<double>(double, double)>& s) {
  Eigen::MatrixXcd v(b.size(), b.size());
  for (int i = 0; i < b.size(); ++i)
    for (int j = 0; j < b.size(); ++j) v(i, j) = s(i * b.spacing(), j * b.spacing());
  return DiscretizedSection(b, std::move(v));
}

std::complex<double> DiscretizedSection::at(long i, long j) const {
  const int n = size();
  const int a = wrap(i, n), c = wrap(j, n);
  const long cells = (i - a) / n;
  if (cells == 0) return v_(a, c);
  return v_(a, c) * std::polar(1.0, -kTwoPi * k_ * static_cast<double>(cells) * c / n);
}

DiscretizedSection DiscretizedSection::operator+(const DiscretizedSection& o) const {
  DiscretizedSection r = *this;
  r.v_ += o.v_;
  return r;
}
DiscretizedSection DiscretizedSection::operator-(const DiscretizedSection& o) const {
  DiscretizedSection r = *this;
  r.v_ -= o.v_;
  return r;
}
DiscretizedSection DiscretizedSection::operator*(std::complex<double> c) const {
  DiscretizedSection r = *this;
  r.v_ *= c;
  return r;
}

std::complex<double> q_inner(const PrequantumBundle& b, const DiscretizedSection& s1, const DiscretizedSection& s2) {
  require_same_grid(b, s1);
  require_same_grid(b, s2);
  const double h = b.spacing();
  return h * h * (b.log_weight().array().exp().cast<std::complex<double>>() * s1.values().array() *
                  s2.values().array().conjugate())
                     .sum();
}

double q_norm(const PrequantumBundle& b, const DiscretizedSection& s) { return std::sqrt(q_inner(b, s, s).real()); }

DiscretizedSection covariant_difference(const PrequantumBundle& b, const DiscretizedSection& s, int axis) {
  require_same_grid(b, s);
  const int n = b.size();
  const double h = b.spacing();
  const Eigen::MatrixXcd& v = s.values();
  Eigen::MatrixXcd d(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (axis == 0) {
        const int ip = wrap(i + 1, n), im = wrap(i - 1, n);
        d(i, j) = (b.link_p(i, j) * v(ip, j) - v(im, j) / b.link_p(im, j)) / (2.0 * h);
      } else {
        const int jp = wrap(j + 1, n), jm = wrap(j - 1, n);
        d(i, j) = (b.link_q(i, j) * v(i, jp) - v(i, jm) / b.link_q(i, jm)) / (2.0 * h);
      }
    }
  return DiscretizedSection(b, std::move(d));
}

// ---------------------------------------------------------------------------

KostantOperator::KostantOperator(const Observable& f, const PrequantumBundle& b) : b_(&b) {
  const int n = b.size();
  xp_.resize(n, n);
  xq_.resize(n, n);
  f_.resize(n, n);
  double top = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Vec3 x = b.point(i, j);
      const Vec3 xf = hamiltonian_field(b.model(), f, x);
      xp_(i, j) = xf.x();
      xq_(i, j) = xf.y();
      f_(i, j) = f(x);
      top = std::max(top, std::hypot(xf.x(), xf.y()));
    }
  // Change of the field across one cell relative to its size: over a step of one
  // cell, neighbouring points must separate by less than a cell.
  double shear = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int ip = wrap(i + 1, n), jp = wrap(j + 1, n);
      shear = std::max({shear, std::hypot(xp_(ip, j) - xp_(i, j), xq_(ip, j) - xq_(i, j)),
                        std::hypot(xp_(i, jp) - xp_(i, j), xq_(i, jp) - xq_(i, j))});
    }
  cfl_ = top > 0.0 ? shear / top : 0.0;
  if (!(cfl_ < 1.0)) throw Error(ErrorKind::Resolution, "Hamiltonian field is not resolved by the grid");
}

DiscretizedSection KostantOperator::apply(const DiscretizedSection& s) const {
  const DiscretizedSection dp = covariant_difference(*b_, s, 0), dq = covariant_difference(*b_, s, 1);
  const std::complex<double> c = kI * (kTwoPi * b_->level());
  Eigen::MatrixXcd out = xp_.cast<std::complex<double>>().cwiseProduct(dp.values()) +
                         xq_.cast<std::complex<double>>().cwiseProduct(dq.values()) +
                         c * f_.cast<std::complex<double>>().cwiseProduct(s.values());
  return DiscretizedSection(*b_, std::move(out));
}

KostantOperator kostant_operator(const Observable& f, const PrequantumBundle& b) { return KostantOperator(f, b); }

// ---------------------------------------------------------------------------

std::complex<double> SmoothSection::operator()(double p, double q) const {
  std::complex<double> acc = 0.0;
  for (int c = -3; c <= 3; ++c) {
    const double pc = p + c;
    std::complex<double> u = 0.0;
    for (const Bump& b : bumps) {
      const double r = (pc - b.center) / b.width;
      const double env = std::exp(-0.5 * r * r);
      if (env < 1e-300) continue;
      const int m0 = -static_cast<int>(b.modes.size() / 2);
      std::complex<double> modes = 0.0;
      for (std::size_t m = 0; m < b.modes.size(); ++m)
        modes += b.modes[m] * std::polar(1.0, kTwoPi * (m0 + static_cast<int>(m)) * q);
      u += b.amplitude * env * modes;
    }
    acc += u * std::polar(1.0, kTwoPi * level * c * q);
  }
  return acc;
}

DiscretizedSection SmoothSection::on(const PrequantumBundle& b) const {
  const int n = b.size();
  const double h = b.spacing();
  Eigen::MatrixXcd v = Eigen::MatrixXcd::Zero(n, n);
  for (const Bump& bump : bumps) {
    const int m0 = -static_cast<int>(bump.modes.size() / 2);
    Eigen::VectorXcd modes = Eigen::VectorXcd::Zero(n);
    for (int j = 0; j < n; ++j)
      for (std::size_t m = 0; m < bump.modes.size(); ++m)
        modes(j) += bump.modes[m] * std::polar(1.0, kTwoPi * (m0 + static_cast<int>(m)) * j * h);
    for (int c = -3; c <= 3; ++c) {
      Eigen::VectorXcd env(n), col(n);
      for (int i = 0; i < n; ++i) {
        const double r = (i * h + c - bump.center) / bump.width;
        env(i) = bump.amplitude * std::exp(-0.5 * r * r);
      }
      for (int j = 0; j < n; ++j) col(j) = modes(j) * std::polar(1.0, kTwoPi * level * c * j * h);
      v += env * col.transpose();
    }
  }
  return DiscretizedSection(b, std::move(v));
}

std::vector<SmoothSection> smooth_batch(int level, int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::vector<SmoothSection> out;
  for (int i = 0; i < count; ++i) out.push_back(SmoothSection::random(rng, level));
  return out;
}

std::vector<DiscretizedSection> sample_batch(const PrequantumBundle& b, const std::vector<SmoothSection>& batch) {
  std::vector<DiscretizedSection> out;
  out.reserve(batch.size());
  for (const SmoothSection& sec : batch) out.push_back(sec.on(b));
  return out;
}

double commutator_residual(const Observable& f, const Observable& g, const Observable& fg, const PrequantumBundle& b,
                           const std::vector<SmoothSection>& batch) {
  return commutator_residual(f, g, fg, b, sample_batch(b, batch));
}

double commutator_residual(const Observable& f, const Observable& g, const Observable& fg, const PrequantumBundle& b,
                           const std::vector<DiscretizedSection>& batch) {
  const KostantOperator qf(f, b), qg(g, b), qfg(fg, b);
  double worst = 0.0;
  for (const DiscretizedSection& s : batch) {
    const DiscretizedSection r = qf.apply(qg.apply(s)) - qg.apply(qf.apply(s)) + qfg.apply(s);
    worst = std::max(worst, q_norm(b, r) / q_norm(b, s));
  }
  return worst;
}

double commutator_residual(const Observable& f, const Observable& g, const PrequantumBundle& b,
                           const std::vector<SmoothSection>& batch) {
  return commutator_residual(f, g, bracket_observable(b.model(), f, g), b, batch);
}

double adjointness_residual(const Observable& f, const PrequantumBundle& b, const DiscretizedSection& s1,
                            const DiscretizedSection& s2) {
  const KostantOperator q(f, b);
  return std::abs(q_inner(b, q.apply(s1), s2) + q_inner(b, s1, q.apply(s2)));
}

double hermiticity_defect(const Observable& f, const PrequantumBundle& b, const std::vector<SmoothSection>& batch) {
  const KostantOperator q(f, b);
  const std::vector<DiscretizedSection> s = sample_batch(b, batch);
  std::vector<DiscretizedSection> qs;
  std::vector<double> norms;
  for (const DiscretizedSection& x : s) {
    qs.push_back(q.apply_hat(x));
    norms.push_back(q_norm(b, x));
  }
  double worst = 0.0;
  for (std::size_t a = 0; a < s.size(); ++a)
    for (std::size_t c = 0; c < s.size(); ++c) {
      const std::complex<double> d = q_inner(b, qs[a], s[c]) - q_inner(b, s[a], qs[c]);
      worst = std::max(worst, std::abs(d) / (norms[a] * norms[c]));
    }
  return worst;
}

double compatibility_residual(const PrequantumBundle& b, const DiscretizedSection& s1, const DiscretizedSection& s2) {
  const int n = b.size();
  const double h = b.spacing();
  const Eigen::ArrayXXd w = b.log_weight().array().exp();
  const Eigen::ArrayXXcd pair = w.cast<std::complex<double>>() * s1.values().array() * s2.values().array().conjugate();
  double worst = 0.0;
  for (int axis = 0; axis < 2; ++axis) {
    const Eigen::ArrayXXcd d1 = covariant_difference(b, s1, axis).values().array();
    const Eigen::ArrayXXcd d2 = covariant_difference(b, s2, axis).values().array();
    const Eigen::ArrayXXcd rhs =
        w.cast<std::complex<double>>() * (d1 * s2.values().array().conjugate() + s1.values().array() * d2.conjugate());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const std::complex<double> lhs =
            axis == 0 ? (pair(wrap(i + 1, n), j) - pair(wrap(i - 1, n), j)) / (2.0 * h)
                      : (pair(i, wrap(j + 1, n)) - pair(i, wrap(j - 1, n))) / (2.0 * h);
        worst = std::max(worst, std::abs(lhs - rhs(i, j)));
      }
  }
  return worst;
}

HermitianComparison hermitian_compare(const PrequantumBundle& b1, const PrequantumBundle& b2) {
  if (b1.size() != b2.size() || b1.level() != b2.level())
    throw Error(ErrorKind::DimensionMismatch, "bundles must share level and grid");
  const int n = b1.size();
  const double h = b1.spacing();
  HermitianComparison out{b1.log_weight() - b2.log_weight(), Eigen::MatrixXcd(n, n), Eigen::MatrixXcd(n, n), 0.0, 0.0};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      out.delta_p(i, j) = std::log(b1.link_p(i, j) / b2.link_p(i, j)) / h;
      out.delta_q(i, j) = std::log(b1.link_q(i, j) / b2.link_q(i, j)) / h;
      const double half_dp = 0.5 * (out.phi(wrap(i + 1, n), j) - out.phi(i, j)) / h;
      const double half_dq = 0.5 * (out.phi(i, wrap(j + 1, n)) - out.phi(i, j)) / h;
      out.discrepancy = std::max({out.discrepancy, std::abs(out.delta_p(i, j).real() - half_dp),
                                  std::abs(out.delta_q(i, j).real() - half_dq)});
      out.imaginary_part =
          std::max({out.imaginary_part, std::abs(out.delta_p(i, j).imag()), std::abs(out.delta_q(i, j).imag())});
    }
  return out;
}

ContactLift contact_lift(const Observable& f, const PrequantumBundle& b) {
  const int n = b.size(), k = b.level();
  const double h = b.spacing();
  // Connection form dt + A_q dq with A_q = -k p on the universal cover.
  auto a_q = [k](double p) { return -k * p; };
  Eigen::MatrixXd xp(n, n), xq(n, n), fv(n, n), curv(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Vec3 x = b.point(i, j);
      const Vec3 xf = hamiltonian_field(b.model(), f, x);
      xp(i, j) = xf.x();
      xq(i, j) = xf.y();
      fv(i, j) = f(x);
      curv(i, j) = (a_q(x.x() + h) - a_q(x.x() - h)) / (2.0 * h);  // (dA)_{pq}
    }
  // dg = -i_X dA: g_p = dA_pq X^q, g_q = -dA_pq X^p. Trapezoid along p, then along q.
  const Eigen::MatrixXd gp = curv.cwiseProduct(xq), gq = -curv.cwiseProduct(xp);
  Eigen::MatrixXd g(n, n);
  g(0, 0) = k * fv(0, 0);
  for (int i = 1; i < n; ++i) g(i, 0) = g(i - 1, 0) + 0.5 * h * (gp(i - 1, 0) + gp(i, 0));
  for (int i = 0; i < n; ++i)
    for (int j = 1; j < n; ++j) g(i, j) = g(i, j - 1) + 0.5 * h * (gq(i, j - 1) + gq(i, j));

  const Eigen::ArrayXXd diff = g.array() - k * fv.array();
  ContactLift out{g, diff.mean(), 0.0, 0.0};
  out.offset_spread = (diff - out.offset).abs().maxCoeff();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double dgp = (g(wrap(i + 1, n), j) - g(wrap(i - 1, n), j)) / (2.0 * h);
      const double dgq = (g(i, wrap(j + 1, n)) - g(i, wrap(j - 1, n))) / (2.0 * h);
      // i_Y dA + d(A(Y)), with A(Y) = g for the horizontal lift plus g d/dt.
      const double lp = -curv(i, j) * xq(i, j) + dgp;
      const double lq = curv(i, j) * xp(i, j) + dgq;
      out.lie_residual = std::max({out.lie_residual, std::abs(lp), std::abs(lq)});
    }
  return out;
}

double sk_functional(const Observable& f, const PrequantumBundle& b, const DiscretizedSection& s, double tau) {
  require_same_grid(b, s);
  const int n = b.size();
  const double h = b.spacing();
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) acc += f(b.point(i, j)) * std::exp(b.log_weight()(i, j)) * std::norm(s.values()(i, j));
  return tau * h * h * acc;
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t to_little(std::uint64_t u) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(u);
  return u;
}

}  // namespace

void write_section(std::ostream& os, const DiscretizedSection& s) {
  const nlohmann::json header = {{"format", "gq-section"},
                                 {"version", 1},
                                 {"n", s.size()},
                                 {"level", s.level()},
                                 {"twist", "s(p+1,q) = exp(-2 pi i k q) s(p,q); s(p,q+1) = s(p,q)"},
                                 {"layout", "row-major in (p, q), p_i = i/n, q_j = j/n; (re, im) float64"},
                                 {"endianness", "little"}};
  os << header.dump() << '\n';
  for (int i = 0; i < s.size(); ++i)
    for (int j = 0; j < s.size(); ++j)
      for (double x : {s.values()(i, j).real(), s.values()(i, j).imag()}) {
        const std::uint64_t u = to_little(std::bit_cast<std::uint64_t>(x));
        os.write(reinterpret_cast<const char*>(&u), sizeof u);
      }
}

DiscretizedSection read_section(std::istream& is, const PrequantumBundle& b) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorKind::Config, "missing section header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, std::string("bad section header: ") + e.what());
  }
  if (header.value("format", "") != "gq-section" || header.value("endianness", "") != "little")
    throw Error(ErrorKind::Config, "unsupported section format");
  if (header.value("n", -1) != b.size() || header.value("level", -1) != b.level())
    throw Error(ErrorKind::DimensionMismatch, "section file does not match the bundle grid or level");
  const int n = b.size();
  Eigen::MatrixXcd v(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double parts[2];
      for (double& x : parts) {
        std::uint64_t u;
        if (!is.read(reinterpret_cast<char*>(&u), sizeof u)) throw Error(ErrorKind::Config, "truncated section data");
        x = std::bit_cast<double>(to_little(u));
      }
      v(i, j) = {parts[0], parts[1]};
    }
  return DiscretizedSection(b, std::move(v));
}

}  // namespace gq
