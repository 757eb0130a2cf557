#include "gq/io.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace gq {

namespace {

const char* chart_name(ChartId c) {
  switch (c) {
    case ChartId::NorthCap: return "north";
    case ChartId::SouthCap: return "south";
    case ChartId::TorusSquare: return "torus";
    case ChartId::DarbouxRect: return "darboux";
  }
  return "?";
}

std::complex<double> pair_value(const nlohmann::json& e) {
  if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
    throw Error(ErrorKind::Config, "expected a [re, im] pair");
  return {e[0].get<double>(), e[1].get<double>()};
}

nlohmann::json pair_json(std::complex<double> z) { return nlohmann::json::array({z.real(), z.imag()}); }

}  // namespace

nlohmann::json to_json(const HermitianOp& a) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < a.dim(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < a.dim(); ++j) row.push_back(pair_json(a.matrix()(i, j)));
    rows.push_back(row);
  }
  return rows;
}

HermitianOp hermitian_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw Error(ErrorKind::Config, "observable must be a non-empty array of rows");
  const auto d = static_cast<Eigen::Index>(j.size());
  CMatrix<double> m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto& row = j[i];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != d)
      throw Error(ErrorKind::Config, "observable rows must have length " + std::to_string(d));
    for (Eigen::Index c = 0; c < d; ++c) m(i, c) = pair_value(row[c]);
  }
  if ((m - m.adjoint()).norm() > 1e-12 * std::max(1.0, m.norm()))
    throw Error(ErrorKind::Config, "observable matrix is not hermitian");
  return HermitianOp(m);
}

nlohmann::json to_json(const SectionRay& p) {
  nlohmann::json out = nlohmann::json::array();
  const auto v = p.canonical();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(pair_json(v(i)));
  return out;
}

SectionRay ray_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw Error(ErrorKind::Config, "ray must be a non-empty array");
  CVector<double> v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = pair_value(j[i]);
  return SectionRay(v);
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

void write_loop_csv(std::ostream& os, const LagrangianLoop& loop, const HalfWeight& w) {
  if (w.size() != loop.size()) throw Error(ErrorKind::DimensionMismatch, "weight and loop sizes differ");
  const auto pts = loop.chart_points();
  const Eigen::VectorXd rho = w.density();
  os << "index,chart,coord1,coord2,density\n";
  for (Eigen::Index i = 0; i < loop.size(); ++i) {
    const PhasePoint& p = pts[static_cast<std::size_t>(i)];
    os << i << ',' << chart_name(p.chart) << ',' << format_number(p.u) << ',' << format_number(p.v) << ','
       << format_number(rho(i)) << '\n';
  }
}

void write_csv(std::ostream& os, const CsvTable& t) {
  for (std::size_t c = 0; c < t.header.size(); ++c) os << (c ? "," : "") << t.header[c];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_number(row[c]);
    os << '\n';
  }
}

nlohmann::json to_json(const std::vector<FiberImage>& images) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& img : images)
    out.push_back({{"fiber", img.index},
                   {"base", img.base},
                   {"monomial", img.monomial},
                   {"overlap", img.overlap},
                   {"critical_residual", img.critical_residual},
                   {"eigen_residual", img.eigen_residual}});
  return out;
}

}  // namespace gq
