#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "stealthlq/io.hpp"

using namespace stealthlq;

TEST_CASE("doubles print with full round-trip precision") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(1.0 / 3.0) == "0.33333333333333331");
  CHECK(std::stod(format_double(M_PI)) == M_PI);
  CHECK(format_double(-0.0).find('-') == 0);
}

TEST_CASE("csv carries provenance and header") {
  CsvWriter w("", "deadbeefdeadbeef");
  w.header({"t", "x"});
  w.row({0.0, 1.5});
  w.row({0.5, -2.0});
  const std::string text = w.text();
  CHECK(text.rfind("# config-hash=deadbeefdeadbeef\n", 0) == 0);
  CHECK(text.find("t,x\n") != std::string::npos);
  CHECK(text.find("0.5,-2\n") != std::string::npos);
}

TEST_CASE("fnv hash is stable") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") != fnv1a64("b"));
  CHECK(hash_hex(0xdeadbeefULL) == "00000000deadbeef");
}

TEST_CASE("attack path csv round trip") {
  TimeGrid grid(0.5, 10);
  std::vector<Matrix> rho(static_cast<size_t>(grid.n_nodes())),
      tau(static_cast<size_t>(grid.n_nodes()));
  for (int k = 0; k < grid.n_nodes(); ++k) {
    rho[static_cast<size_t>(k)] = Matrix::Constant(2, 1, 0.25 * k);
    tau[static_cast<size_t>(k)] = Matrix::Constant(1, 1, -0.5 * k);
  }
  const GridFunction gr(grid, rho), gt(grid, tau);
  const std::string path = "test_attack_roundtrip.csv";
  write_attack_csv(path, "0123456789abcdef", gr, gt);
  const auto [rr, rt] = read_attack_csv(path, grid, 2, 1);
  for (int k = 0; k < grid.n_nodes(); ++k) {
    CHECK((rr.at_node(k) - gr.at_node(k)).norm() == 0.0);
    CHECK((rt.at_node(k) - gt.at_node(k)).norm() == 0.0);
  }
  std::remove(path.c_str());
}

TEST_CASE("grid csv uses column-major flattening with entry-named headers") {
  TimeGrid grid(1.0, 1);
  Matrix m0(2, 2), m1(2, 2);
  m0 << 1, 3, 2, 4;  // column-major flattening must emit 1,2,3,4
  m1 = 2 * m0;
  const GridFunction g(grid, {m0, m1});
  const std::string path = "test_grid.csv";
  write_grid_csv(path, "00", {{"F", &g}});
  std::ifstream in(path);
  std::string comment, header, row0;
  std::getline(in, comment);
  std::getline(in, header);
  std::getline(in, row0);
  CHECK(header == "t,F_11,F_21,F_12,F_22");
  CHECK(row0 == "0,1,2,3,4");
  std::remove(path.c_str());
}
