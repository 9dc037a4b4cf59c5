#include "stealthlq/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace stealthlq {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

CsvWriter::CsvWriter(std::string path, std::string config_hash)
    : path_(std::move(path)), config_hash_(std::move(config_hash)) {}

void CsvWriter::header(const std::vector<std::string>& names) { names_ = names; }

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != names_.size()) throw ShapeError("CsvWriter: row width != header width");
  rows_.push_back(values);
}

std::string CsvWriter::text() const {
  std::ostringstream os;
  os << "# config-hash=" << config_hash_ << "\n";
  for (size_t i = 0; i < names_.size(); ++i) {
    os << names_[i] << (i + 1 < names_.size() ? "," : "");
  }
  os << "\n";
  for (const auto& r : rows_) {
    for (size_t i = 0; i < r.size(); ++i) {
      os << format_double(r[i]) << (i + 1 < r.size() ? "," : "");
    }
    os << "\n";
  }
  return os.str();
}

void CsvWriter::write() const {
  std::ofstream out(path_, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path_);
  out << text();
}

namespace {

std::vector<std::string> flat_names(const std::string& base, const GridFunction& g) {
  std::vector<std::string> names;
  if (g.cols() == 1) {
    for (int i = 0; i < g.rows(); ++i) names.push_back(base + "_" + std::to_string(i + 1));
  } else {
    for (int j = 0; j < g.cols(); ++j) {
      for (int i = 0; i < g.rows(); ++i) {
        names.push_back(base + "_" + std::to_string(i + 1) + std::to_string(j + 1));
      }
    }
  }
  return names;
}

}  // namespace

void write_grid_csv(const std::string& path, const std::string& config_hash,
                    const std::vector<std::pair<std::string, const GridFunction*>>& columns) {
  if (columns.empty()) throw ShapeError("write_grid_csv: no columns");
  const TimeGrid& grid = columns.front().second->grid();
  CsvWriter writer(path, config_hash);
  std::vector<std::string> names{"t"};
  for (const auto& [base, g] : columns) {
    if (!(g->grid() == grid)) throw ShapeError("write_grid_csv: mixed grids");
    const auto cols = flat_names(base, *g);
    names.insert(names.end(), cols.begin(), cols.end());
  }
  writer.header(names);
  for (int k = 0; k < grid.n_nodes(); ++k) {
    std::vector<double> row{grid.node(k)};
    for (const auto& [base, g] : columns) {
      const Matrix& v = g->at_node(k);
      for (int j = 0; j < v.cols(); ++j) {
        for (int i = 0; i < v.rows(); ++i) row.push_back(v(i, j));
      }
    }
    writer.row(row);
  }
  writer.write();
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

void write_attack_csv(const std::string& path, const std::string& config_hash,
                      const GridFunction& rho, const GridFunction& tau) {
  write_grid_csv(path, config_hash, {{"rho", &rho}, {"tau", &tau}});
}

std::pair<GridFunction, GridFunction> read_attack_csv(const std::string& path,
                                                      const TimeGrid& grid, int d, int m) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open attack path file: " + path);
  std::string line;
  std::vector<Matrix> rho, tau;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.find("rho") != std::string::npos || line.find("t,") == 0) continue;  // header
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ls, cell, ',')) vals.push_back(std::stod(cell));
    if (static_cast<int>(vals.size()) != 1 + d + m) {
      throw ConfigError("attack path file: expected 1+d+m columns");
    }
    Matrix r(d, 1), t(m, 1);
    for (int i = 0; i < d; ++i) r(i, 0) = vals[static_cast<size_t>(1 + i)];
    for (int i = 0; i < m; ++i) t(i, 0) = vals[static_cast<size_t>(1 + d + i)];
    rho.push_back(std::move(r));
    tau.push_back(std::move(t));
  }
  if (static_cast<int>(rho.size()) != grid.n_nodes()) {
    throw ConfigError("attack path file: row count != grid nodes");
  }
  return {GridFunction(grid, std::move(rho)), GridFunction(grid, std::move(tau))};
}

}  // namespace stealthlq
