#ifndef GQ_PROJECTIVE_HPP
#define GQ_PROJECTIVE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "gq/errors.hpp"
#include "gq/quadrature.hpp"

namespace gq {

template <typename Scalar>
using CVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;
template <typename Scalar>
using CMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

/// Planck constant h of the Kahler structure G + i Omega = 2h <.,.>.
struct KahlerConventions {
  double planck = 1.0;
  void validate() const {
    if (!(planck > 0)) throw Error(ErrorKind::Config, "planck constant must be positive");
  }
};

/// Finite-dimensional quantum observable; symmetrized on construction.
template <typename Scalar = double>
class Hermitian {
 public:
  using Complex = std::complex<Scalar>;
  using Matrix = CMatrix<Scalar>;

  explicit Hermitian(const Matrix& m) {
    if (m.rows() != m.cols()) throw Error(ErrorKind::DimensionMismatch, "observable matrix is not square");
    if (m.rows() < 2) throw Error(ErrorKind::DimensionMismatch, "observable dimension must be >= 2");
    m_ = (m + m.adjoint()) / Scalar(2);
  }

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }

  static Hermitian identity(Eigen::Index d) { return Hermitian(Matrix::Identity(d, d)); }
  static Hermitian diagonal(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& d) {
    return Hermitian(d.template cast<Complex>().asDiagonal().toDenseMatrix());
  }
  static Hermitian pauli(int axis) {
    Matrix s(2, 2);
    const Complex i(0, 1);
    if (axis == 0) s << 0, 1, 1, 0;
    else if (axis == 1) s << 0, -i, i, 0;
    else s << 1, 0, 0, -1;
    return Hermitian(s);
  }
  template <class Rng>
  static Hermitian random(Rng& rng, Eigen::Index d) {
    std::normal_distribution<Scalar> n(0, 1);
    Matrix a(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) a(i, j) = Complex(n(rng), n(rng));
    return Hermitian(a);
  }

 private:
  Matrix m_;
};

template <typename Scalar>
Hermitian<Scalar> operator*(Scalar c, const Hermitian<Scalar>& a) { return Hermitian<Scalar>(c * a.matrix()); }

/// Quantum state: unit vector modulo phase.
template <typename Scalar = double>
class Ray {
 public:
  using Complex = std::complex<Scalar>;
  using Vector = CVector<Scalar>;

  explicit Ray(const Vector& v) {
    const Scalar n = v.norm();
    if (!(n > Scalar(1e-300)) || !std::isfinite(double(n))) throw Error(ErrorKind::Domain, "zero vector is not a ray");
    rep_ = v / n;
  }

  Eigen::Index dim() const { return rep_.size(); }
  const Vector& representative() const { return rep_; }

  /// First nonzero component made real-positive.
  Vector canonical() const {
    for (Eigen::Index i = 0; i < rep_.size(); ++i)
      if (std::abs(rep_(i)) > Scalar(1e-12)) return rep_ * (std::conj(rep_(i)) / std::abs(rep_(i)));
    return rep_;
  }

  Scalar fidelity(const Ray& o) const { return std::norm(rep_.dot(o.rep_)); }
  bool same_as(const Ray& o, Scalar tol = Scalar(1e-10)) const {
    return dim() == o.dim() && Scalar(1) - fidelity(o) <= tol;
  }

  template <class Rng>
  static Ray random(Rng& rng, Eigen::Index d) {
    std::normal_distribution<Scalar> n(0, 1);
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = Complex(n(rng), n(rng));
    return Ray(v);
  }
  static Ray basis(Eigen::Index d, Eigen::Index i) { return Ray(Vector::Unit(d, i)); }

 private:
  Vector rep_;
};

namespace detail {
template <typename S>
void require_same_dim(Eigen::Index a, Eigen::Index b) {
  if (a != b) throw Error(ErrorKind::DimensionMismatch, "observable and ray dimensions differ");
}
}  // namespace detail

/// Fubini-Study symplectic and metric pairings of horizontal vectors.
template <typename Scalar>
Scalar fs_omega(const CVector<Scalar>& a, const CVector<Scalar>& b, const KahlerConventions& c = {}) {
  return Scalar(2 * c.planck) * a.dot(b).imag();
}
template <typename Scalar>
Scalar fs_metric(const CVector<Scalar>& a, const CVector<Scalar>& b, const KahlerConventions& c = {}) {
  return Scalar(2 * c.planck) * a.dot(b).real();
}

template <typename Scalar>
Scalar symbol_value(const Hermitian<Scalar>& F, const Ray<Scalar>& p) {
  detail::require_same_dim<Scalar>(F.dim(), p.dim());
  const auto& v = p.representative();
  return v.dot(F.matrix() * v).real();
}

/// Hamiltonian field of the symbol, horizontal at the representative.
template <typename Scalar>
CVector<Scalar> symbol_field(const Hermitian<Scalar>& F, const Ray<Scalar>& p, const KahlerConventions& c = {}) {
  detail::require_same_dim<Scalar>(F.dim(), p.dim());
  c.validate();
  const auto& v = p.representative();
  const CVector<Scalar> Fv = F.matrix() * v;
  const std::complex<Scalar> minus_i_over_h(0, Scalar(-1 / c.planck));
  return minus_i_over_h * (Fv - v.dot(Fv).real() * v);
}

/// (1/ih)[F, K] as an observable.
template <typename Scalar>
Hermitian<Scalar> commutator_observable(const Hermitian<Scalar>& F, const Hermitian<Scalar>& K,
                                        const KahlerConventions& c = {}) {
  detail::require_same_dim<Scalar>(F.dim(), K.dim());
  const std::complex<Scalar> ih(0, Scalar(c.planck));
  return Hermitian<Scalar>((F.matrix() * K.matrix() - K.matrix() * F.matrix()) / ih);
}

template <typename Scalar>
struct Brackets {
  Scalar poisson;
  Scalar riemann;
  Scalar symmetric;
};

template <typename Scalar>
Brackets<Scalar> symbol_brackets(const Hermitian<Scalar>& F, const Hermitian<Scalar>& K, const Ray<Scalar>& p,
                                 const KahlerConventions& c = {}) {
  detail::require_same_dim<Scalar>(F.dim(), K.dim());
  const CVector<Scalar> xf = symbol_field(F, p, c), xk = symbol_field(K, p, c);
  Brackets<Scalar> b;
  b.poisson = fs_omega(xf, xk, c);
  b.riemann = Scalar(c.planck / 2) * fs_metric(xf, xk, c);
  b.symmetric = b.riemann + symbol_value(F, p) * symbol_value(K, p);
  return b;
}

template <typename Scalar>
struct Uncertainty {
  Scalar var_f;
  Scalar var_k;
  Scalar lower_bound;
  bool satisfied;
};

template <typename Scalar>
Uncertainty<Scalar> uncertainty_relation(const Hermitian<Scalar>& F, const Hermitian<Scalar>& K,
                                         const Ray<Scalar>& p, const KahlerConventions& c = {}) {
  const Brackets<Scalar> fk = symbol_brackets(F, K, p, c);
  const Scalar f = symbol_value(F, p), k = symbol_value(K, p);
  Uncertainty<Scalar> u;
  u.var_f = symbol_brackets(F, F, p, c).symmetric - f * f;
  u.var_k = symbol_brackets(K, K, p, c).symmetric - k * k;
  const Scalar half = Scalar(c.planck / 2) * fk.poisson;
  u.lower_bound = half * half + fk.riemann * fk.riemann;
  u.satisfied = u.var_f * u.var_k >= u.lower_bound - Scalar(1e-10);
  return u;
}

template <typename Scalar>
struct Transition {
  Scalar prob;
  Scalar geodesic_check;
  Scalar distance;
};

/// Overlap probability and its geodesic counterpart.
/// The distance is the Fubini-Study length of the connecting great circle,
/// integrated by 64-point Gauss-Legendre quadrature.
template <typename Scalar>
Transition<Scalar> transition_probability(const Ray<Scalar>& p0, const Ray<Scalar>& p,
                                          const KahlerConventions& c = {}) {
  if (p0.dim() != p.dim()) throw Error(ErrorKind::DimensionMismatch, "rays of different dimension");
  c.validate();
  using Complex = std::complex<Scalar>;
  const CVector<Scalar>& a = p0.representative();
  CVector<Scalar> b = p.representative();
  const Complex ov = a.dot(b);
  const Scalar mod = std::abs(ov);
  if (mod > Scalar(0)) b *= std::conj(ov) / mod;
  CVector<Scalar> perp = b - mod * a;
  const Scalar pn = perp.norm();
  const Scalar angle = std::atan2(pn, mod);

  Scalar sigma = 0;
  if (pn > Scalar(1e-300)) {
    perp /= pn;
    const GaussRule rule = gauss_legendre(64, 0.0, 1.0);
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
      const Scalar s = Scalar(rule.nodes(i));
      const CVector<Scalar> g = std::cos(s * angle) * a + std::sin(s * angle) * perp;
      const CVector<Scalar> dg = angle * (-std::sin(s * angle) * a + std::cos(s * angle) * perp);
      const CVector<Scalar> hor = dg - g.dot(dg) * g;
      sigma += Scalar(rule.weights(i)) * std::sqrt(std::max(Scalar(0), fs_metric(hor, hor, c)));
    }
  }
  const Scalar x = std::cos(sigma / std::sqrt(Scalar(2 * c.planck)));
  return {mod * mod, x * x, sigma};
}

template <typename Scalar>
struct SpectralInfo {
  bool is_critical;
  Scalar n_lambda_max;
  Ray<Scalar> projected;
};

/// Criticality, the n_lambda sup over `sample`, and the projection onto the
/// eigenvectors whose eigenvalues lie in [lo, hi].
template <typename Scalar>
SpectralInfo<Scalar> spectrum_tools(const Hermitian<Scalar>& F, Scalar lo, Scalar hi, const Ray<Scalar>& p,
                                    std::span<const Ray<Scalar>> sample, const KahlerConventions& c = {},
                                    Scalar tol = Scalar(1e-10)) {
  if (!(hi >= lo)) throw Error(ErrorKind::Config, "empty spectral interval");
  detail::require_same_dim<Scalar>(F.dim(), p.dim());
  const CVector<Scalar> x = symbol_field(F, p, c);
  const bool critical = std::sqrt(std::max(Scalar(0), fs_metric(x, x, c))) <= tol;

  const Scalar lambda = (lo + hi) / 2;
  Scalar nmax = 0;
  for (const Ray<Scalar>& q : sample) {
    const Scalar f = symbol_value(F, q);
    const Scalar var = symbol_brackets(F, F, q, c).symmetric - f * f;
    const Scalar den = std::max(var, Scalar(0)) + (f - lambda) * (f - lambda);
    nmax = std::max(nmax, den > 0 ? Scalar(1) / den : std::numeric_limits<Scalar>::infinity());
  }

  Eigen::SelfAdjointEigenSolver<CMatrix<Scalar>> es(F.matrix());
  CVector<Scalar> proj = CVector<Scalar>::Zero(F.dim());
  for (Eigen::Index i = 0; i < F.dim(); ++i) {
    const Scalar ev = es.eigenvalues()(i);
    if (ev >= lo - tol && ev <= hi + tol) {
      const auto u = es.eigenvectors().col(i);
      proj += u * u.dot(p.representative());
    }
  }
  if (proj.norm() <= tol) throw Error(ErrorKind::UndefinedProjection, "state has no component in the spectral window");
  return {critical, nmax, Ray<Scalar>(proj)};
}

/// Finite-difference estimate of |Lie_X G| for the Hamiltonian field of f,
/// maximized over the sample. Computed in an affine chart around each ray.
template <typename Scalar>
Scalar killing_residual(const std::function<Scalar(const Ray<Scalar>&)>& f, std::span<const Ray<Scalar>> sample,
                        const KahlerConventions& c = {}, Scalar h = Scalar(1e-3)) {
  using Complex = std::complex<Scalar>;
  using RVec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Scalar worst = 0;
  for (const Ray<Scalar>& base : sample) {
    const Eigen::Index d = base.dim();
    const CVector<Scalar>& psi = base.representative();
    // Orthonormal complement of psi.
    Eigen::HouseholderQR<CMatrix<Scalar>> qr(psi);
    const CMatrix<Scalar> Q = qr.householderQ() * CMatrix<Scalar>::Identity(d, d);
    const CMatrix<Scalar> E = Q.rightCols(d - 1);
    const Eigen::Index n = 2 * (d - 1);

    auto lift = [&](const RVec& x) -> CVector<Scalar> {
      CVector<Scalar> z = psi;
      for (Eigen::Index j = 0; j < d - 1; ++j) z += Complex(x(2 * j), x(2 * j + 1)) * E.col(j);
      return z;
    };
    auto basis = [&](Eigen::Index i) -> CVector<Scalar> {
      return (i % 2 == 0 ? Complex(1, 0) : Complex(0, 1)) * E.col(i / 2);
    };
    auto hform = [&](const RVec& x, Eigen::Index i, Eigen::Index j) {
      const CVector<Scalar> z = lift(x);
      const Scalar n2 = z.squaredNorm();
      const CVector<Scalar> u = basis(i), v = basis(j);
      return Scalar(2 * c.planck) * (u.dot(v) / n2 - u.dot(z) * z.dot(v) / (n2 * n2));
    };
    auto metric = [&](const RVec& x) {
      RMat g(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) g(i, j) = hform(x, i, j).real();
      return g;
    };
    auto omega = [&](const RVec& x) {
      RMat w(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) w(i, j) = hform(x, i, j).imag();
      return w;
    };
    auto fval = [&](const RVec& x) { return f(Ray<Scalar>(lift(x))); };
    auto field = [&](const RVec& x) {
      RVec df(n);
      for (Eigen::Index j = 0; j < n; ++j) {
        RVec a = x, b = x;
        a(j) += h;
        b(j) -= h;
        df(j) = (fval(a) - fval(b)) / (2 * h);
      }
      // i_X omega = df  <=>  omega^T X = df
      return RVec(omega(x).transpose().partialPivLu().solve(df));
    };

    const RVec x0 = RVec::Zero(n);
    const RVec X = field(x0);
    const RMat g0 = metric(x0);
    RMat dX(n, n);  // dX(k, i) = d_i X^k
    std::vector<RMat> dg(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      RVec a = x0, b = x0;
      a(i) += h;
      b(i) -= h;
      dX.col(i) = (field(a) - field(b)) / (2 * h);
      dg[i] = (metric(a) - metric(b)) / (2 * h);
    }
    RMat lie = RMat::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) lie += X(k) * dg[k];
    lie += dX.transpose() * g0 + g0 * dX;
    worst = std::max(worst, lie.norm());
  }
  return worst;
}

}  // namespace gq

#endif
