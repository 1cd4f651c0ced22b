#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "frackap");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = frackap::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string fixture(const std::string& name) { return std::string(FRACKAP_FIXTURE_DIR) + "/" + name; }

std::string temp_json(const std::string& name, const std::string& text) {
  const fs::path p = fs::temp_directory_path() / ("frackap_cli_" + name);
  std::ofstream(p) << text;
  return p.string();
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

struct NoTableDir {
  NoTableDir() { unsetenv("FRACKAP_TABLE_DIR"); }
};

}  // namespace

TEST_CASE_FIXTURE(NoTableDir, "kernel command reproduces the Cauchy kernel") {
  const auto r = cli({"kernel", "--input", fixture("kernel_cauchy.json")});
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 1 + 33);
  CHECK(rows[0][0] == "r (length)");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double x = std::stod(rows[i][0]), t = std::stod(rows[i][1]), v = std::stod(rows[i][2]);
    CHECK(v == doctest::Approx(t / (std::numbers::pi * (t * t + x * x))).epsilon(1e-9));
    CHECK(rows[i][3] == "quadrature");
    CHECK(std::stod(rows[i][4]) >= 0.0);
  }
}

TEST_CASE_FIXTURE(NoTableDir, "series requests outside the region fall back") {
  const auto in = temp_json("series.json", R"({"gamma": 0.5, "n": 1, "t": 1, "r": [0.5, 50], "route": "series"})");
  const auto r = cli({"kernel", "--input", in, "--format", "json"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  REQUIRE(j.size() == 2);
  CHECK(j[0]["route_used"] == "quadrature");
  CHECK(j[1]["route_used"] == "series");
}

TEST_CASE_FIXTURE(NoTableDir, "input errors exit with 2") {
  CHECK(cli({"kernel", "--input", temp_json("bad.json", "{\"gamma\": 1, ")}).code == 2);
  CHECK(cli({"kernel", "--input", temp_json("g2.json", R"({"gamma": 2.5, "n": 1, "t": 1, "r": 1})")}).code == 2);
  CHECK(cli({"kernel", "--input", temp_json("mixed.json", R"({"gamma": 1, "n": 2, "a": [0, 1], "t": 1, "r": 1})")})
            .code == 2);
  CHECK(cli({"kernel", "--input", "/nonexistent/request.json"}).code == 2);
  CHECK(cli({"kernel"}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"verify", "--format", "xml"}).code == 2);
  CHECK(cli({"transform", "--input", temp_json("fam.json", R"({"n": 1, "family": "sinc", "rho": 1})")}).code == 2);
  CHECK(cli({"capacity", "--input", fixture("capacity_bad_tau.json")}).code == 2);
  CHECK(cli({"verify", "--input", temp_json("unk.json", R"({"checks": ["nope"]})")}).code == 2);
}

TEST_CASE_FIXTURE(NoTableDir, "transform command") {
  const auto r = cli({"transform", "--input", fixture("transform_gaussian.json")});
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 26);
  CHECK(rows[0].size() == 3);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(std::stod(rows[i][1]) == doctest::Approx(std::stod(rows[i][2])).epsilon(1e-8));
  }
  const auto one = cli({"transform", "--input", temp_json("mass.json", R"({"n": 1, "a": [1], "family": "gaussian", "rho": 0})")});
  REQUIRE(one.code == 0);
  const auto mass = csv_rows(one.out);
  REQUIRE(mass.size() == 2);
  // int_0^inf exp(-x^2/2) x dx = 1
  CHECK(std::stod(mass[1][1]) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE_FIXTURE(NoTableDir, "capacity command") {
  const auto r = cli({"capacity", "--input", fixture("capacity_singleton.json"), "--format", "json"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["capacity_value"].get<double>() > 0.0);
  CHECK(j["duality_gap"].get<double>() < 1e-4);
  CHECK(j["atoms"].size() == 1);
  CHECK(j["interpretation"].get<std::string>().find("removab") != std::string::npos);
  const auto csv = cli({"capacity", "--input", fixture("capacity_singleton.json")});
  REQUIRE(csv.code == 0);
  CHECK(csv.out.rfind("#", 0) == 0);
}

TEST_CASE_FIXTURE(NoTableDir, "verify command") {
  const auto empty = cli({"verify", "--input", fixture("verify_empty.json")});
  CHECK(empty.code == 0);
  CHECK(csv_rows(empty.out).size() == 1);
  const auto fault = cli({"verify", "--input", fixture("verify_fault.json")});
  CHECK(fault.code == 1);
  CHECK(fault.out.find(",fail,") != std::string::npos);
  const auto ok = cli({"verify", "--input", temp_json("mass.json", R"({"checks": ["kernel_mass"]})")});
  CHECK(ok.code == 0);
}

TEST_CASE_FIXTURE(NoTableDir, "output file and table directory") {
  const fs::path dir = fs::temp_directory_path() / "frackap_cli_tables";
  fs::remove_all(dir);
  fs::create_directories(dir);
  setenv("FRACKAP_TABLE_DIR", dir.c_str(), 1);
  const auto in = temp_json("auto.json", R"({"gamma": 0.5, "n": 1, "a": [1], "t": 1, "r": [0.5, 1], "plot": true})");
  const fs::path out = dir / "kernel.csv";
  const auto r = cli({"kernel", "--input", in, "--output", out.string()});
  unsetenv("FRACKAP_TABLE_DIR");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(out));
  CHECK(fs::exists(out.string() + ".gp"));
  int tables = 0;
  for (const auto& e : fs::directory_iterator(dir)) tables += e.path().extension() == ".table";
  CHECK(tables >= 1);
  std::ifstream f(out);
  std::stringstream ss;
  ss << f.rdbuf();
  CHECK(ss.str().find(",table,") != std::string::npos);
}
