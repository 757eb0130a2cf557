#ifndef GQ_ERRORS_HPP
#define GQ_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gq {

enum class ErrorKind {
  Domain,
  DimensionMismatch,
  FlowEscape,
  Resolution,
  UndefinedProjection,
  InvalidStructure,
  HolonomyUndefined,
  DegenerateFiber,
  ChartOverflow,
  InvalidTangent,
  Solver,
  Level,
  Closure,
  DegenerateImage,
  InvalidLoop,
  Config
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::FlowEscape: return "flow escape";
    case ErrorKind::Resolution: return "resolution error";
    case ErrorKind::UndefinedProjection: return "undefined projection";
    case ErrorKind::InvalidStructure: return "invalid structure";
    case ErrorKind::HolonomyUndefined: return "holonomy undefined";
    case ErrorKind::DegenerateFiber: return "degenerate fiber";
    case ErrorKind::ChartOverflow: return "chart overflow";
    case ErrorKind::InvalidTangent: return "invalid tangent";
    case ErrorKind::Solver: return "solver error";
    case ErrorKind::Level: return "level error";
    case ErrorKind::Closure: return "closure error";
    case ErrorKind::DegenerateImage: return "degenerate image";
    case ErrorKind::InvalidLoop: return "invalid loop";
    case ErrorKind::Config: return "config error";
  }
  return "error";
}

}  // namespace gq

#endif
