#ifndef STEALTHLQ_IO_HPP
#define STEALTHLQ_IO_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "stealthlq/coeffs.hpp"

namespace stealthlq {

// 17 significant digits, '.' decimal separator, locale-independent.
std::string format_double(double v);

std::uint64_t fnv1a64(const std::string& s);
std::string hash_hex(std::uint64_t h);

// CSV layout shared by every emitter: a provenance comment line carrying
// the config hash, one header row, then data rows.
class CsvWriter {
 public:
  CsvWriter(std::string path, std::string config_hash);
  void header(const std::vector<std::string>& names);
  void row(const std::vector<double>& values);
  void write() const;
  std::string text() const;

 private:
  std::string path_;
  std::string config_hash_;
  std::vector<std::string> names_;
  std::vector<std::vector<double>> rows_;
};

// One row per grid node: t plus each named GridFunction flattened
// column-major, headers suffixed _<row><col> (matrices) or _<row> (vectors).
void write_grid_csv(const std::string& path, const std::string& config_hash,
                    const std::vector<std::pair<std::string, const GridFunction*>>& columns);

void write_json_file(const std::string& path, const nlohmann::json& j);

// Attack paths as CSV (t, rho_*, tau_*) so externally designed attacks can
// be exchanged.
void write_attack_csv(const std::string& path, const std::string& config_hash,
                      const GridFunction& rho, const GridFunction& tau);
std::pair<GridFunction, GridFunction> read_attack_csv(const std::string& path,
                                                      const TimeGrid& grid, int d, int m);

}  // namespace stealthlq

#endif  // STEALTHLQ_IO_HPP
