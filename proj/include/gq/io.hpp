#ifndef GQ_IO_HPP
#define GQ_IO_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "gq/bpu.hpp"

namespace gq {

/// Row-major array of [re, im] pairs.
nlohmann::json to_json(const HermitianOp& a);
/// Throws Config on a ragged, non-square or malformed array.
HermitianOp hermitian_from_json(const nlohmann::json& j);

/// Canonical representative as [re, im] pairs.
nlohmann::json to_json(const SectionRay& p);
SectionRay ray_from_json(const nlohmann::json& j);

/// CSV with columns index, chart, coord1, coord2, density (theta^2).
void write_loop_csv(std::ostream& os, const LagrangianLoop& loop, const HalfWeight& w);

/// Header row plus rows of numbers in shortest round-trip form.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
void write_csv(std::ostream& os, const CsvTable& t);
std::string format_number(double x);

nlohmann::json to_json(const std::vector<FiberImage>& images);

}  // namespace gq

#endif
