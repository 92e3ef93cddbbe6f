#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"

using namespace properhyp;
using namespace properhyp::cli;
using nlohmann::json;

namespace {

const std::string kData = PROPERHYP_TEST_DATA;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "properhyp");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string temp_file(const std::string& name, const json& doc) {
  auto path = std::filesystem::temp_directory_path() / ("properhyp_" + name + ".json");
  std::ofstream(path) << doc.dump(2);
  return path.string();
}

json wave_doc() {
  std::ifstream in(kData + "/c01_wave.json");
  return json::parse(in);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("check reports pass and the co constant") {
  auto r = invoke({"check", kData + "/c01_wave.json"});
  CHECK(r.code == kPass);
  json rep = json::parse(r.out);
  CHECK(rep["pass"].get<bool>());
  CHECK(rep["hypothesis_B"]["M"].get<double>() == doctest::Approx(0.5));
  CHECK(rep["hypothesis_A"]["tau_max"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("check reports hypothesis C failure near x = 0") {
  auto r = invoke({"check", kData + "/m4_not_decomposable.json"});
  CHECK(r.code == kFail);
  json rep = json::parse(r.out);
  CHECK(rep["hypothesis_B"]["pass"].get<bool>());
  const auto& c3 = rep["hypothesis_C"][3];
  CHECK_FALSE(c3["pass"].get<bool>());
  CHECK(std::abs(c3["x"].get<double>()) < 0.05);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(invoke({}).code == kUsage);
  CHECK(invoke({"frobnicate", "x.json"}).code == kUsage);
  CHECK(invoke({"check", kData + "/missing.json"}).code == kUsage);
  CHECK(invoke({"check", kData + "/c01_wave.json", "--grid", "-3"}).code == kUsage);

  json bad = wave_doc();
  bad["a"][1] = "x^^2";
  auto r = invoke({"check", temp_file("bad_formula", bad)});
  CHECK(r.code == kUsage);
  CHECK(r.err.find("offset 2") != std::string::npos);

  json cfl = wave_doc();
  cfl["grid"]["cfl"] = 0.95;
  auto rc = invoke({"solve", temp_file("bad_cfl", cfl)});
  CHECK(rc.code == kUsage);
  CHECK(rc.out.empty());

  json extra = wave_doc();
  extra["speed"] = 3;
  CHECK(invoke({"check", temp_file("unknown_key", extra)}).code == kUsage);

  json short_phi = wave_doc();
  short_phi["phi"].erase(1);
  CHECK(invoke({"check", temp_file("short_phi", short_phi)}).code == kUsage);

  json outside = wave_doc();
  outside["cone"]["rho0"] = 5;
  CHECK(invoke({"check", temp_file("outside", outside)}).code == kUsage);

  json no_eps = wave_doc();
  no_eps.erase("epsilons");
  CHECK(invoke({"sweep", temp_file("no_eps", no_eps)}).code == kUsage);
}

TEST_CASE("solve writes the trace") {
  auto r = invoke({"solve", kData + "/c01_wave.json", "--grid", "100"});
  CHECK(r.code == kPass);
  std::istringstream csv(r.out);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "t,energy,forcing_norm,dt0_norm,dt1_norm,cone_lo,cone_hi");
  json summary = json::parse(r.err);
  CHECK(summary["pass"].get<bool>());
  CHECK(summary["C_emp"].get<double>() == doctest::Approx(1.0).epsilon(0.1));

  auto path = (std::filesystem::temp_directory_path() / "properhyp_trace.csv").string();
  auto f = invoke({"solve", kData + "/c01_wave.json", "--grid", "100", "--out", path});
  CHECK(f.code == kPass);
  CHECK(json::parse(f.out)["pass"].get<bool>());
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  CHECK(first == header);
}

TEST_CASE("solve with zero data gives a zero trace") {
  json zero = wave_doc();
  zero["phi"] = {"0", "0"};
  auto r = invoke({"solve", temp_file("zero", zero), "--grid", "50"});
  CHECK(r.code == kPass);
  std::istringstream csv(r.out);
  std::string line;
  std::getline(csv, line);
  int rows = 0;
  while (std::getline(csv, line)) {
    std::istringstream fields(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(fields, cell, ',')) v.push_back(std::stod(cell));
    for (int i = 1; i <= 4; ++i) CHECK(v[i] == 0.0);
    ++rows;
  }
  CHECK(rows > 1);
}

TEST_CASE("solve refuses failing hypotheses unless forced") {
  auto r = invoke({"solve", kData + "/c09_not_proper.json", "--grid", "40"});
  CHECK(r.code == kFail);
  auto forced = invoke({"solve", kData + "/c09_not_proper.json", "--grid", "40", "--force"});
  CHECK(forced.code == kPass);
}

TEST_CASE("sweep") {
  auto r = invoke({"sweep", kData + "/c05_double_root.json", "--grid", "100"});
  CHECK(r.code == kPass);
  json rep = json::parse(r.out);
  CHECK(rep["cauchy"].get<bool>());
  const auto& e = rep["entries"];
  REQUIRE(e.size() == 3);
  CHECK(e[0]["dist_prev"].is_null());
  CHECK(e[2]["dist_zero"].get<double>() < e[1]["dist_zero"].get<double>());

  json single = json::parse(std::ifstream(kData + "/c05_double_root.json"));
  single["epsilons"] = {0.1};
  auto s = invoke({"sweep", temp_file("single_eps", single), "--grid", "50"});
  CHECK(s.code == kPass);
  json srep = json::parse(s.out);
  CHECK(srep["entries"].size() == 1);
  CHECK(srep["entries"][0]["dist_prev"].is_null());
}

TEST_CASE("symmetrizer report") {
  auto r = invoke({"symmetrizer", kData + "/c01_wave.json", "--grid", "11", "--seed", "3"});
  CHECK(r.code == kPass);
  json rep = json::parse(r.out);
  CHECK(rep["bounds"]["Gamma2"]["value"].get<double>() <= 2.0 + 1e-9);
  CHECK(rep["bounds"]["QQAp"]["value"].get<double>() == 0.0);
}

TEST_CASE("l1 emits a loadable problem") {
  auto r = invoke({"l1", kData + "/c03_cone.json"});
  CHECK(r.code == kPass);
  json doc = json::parse(r.out);
  CHECK(doc.contains("forcing_correction"));
  ProblemFile next = parse_problem(doc);
  CHECK(next.problem.m == 2);
  // R_1 = tau + x xi + 2x xi
  CHECK(eval_expr(next.problem.r[1][1], 0.0, 0.5) == doctest::Approx(1.5));
  auto again = invoke({"check", temp_file("l1_cone", doc)});
  CHECK(again.code == kPass);
}

TEST_CASE("reports are deterministic") {
  auto a = invoke({"check", kData + "/c06_m3_strict.json", "--seed", "9"});
  auto b = invoke({"check", kData + "/c06_m3_strict.json", "--seed", "9"});
  CHECK(a.out == b.out);
  auto s1 = invoke({"symmetrizer", kData + "/c06_m3_strict.json", "--seed", "9", "--grid", "9"});
  auto s2 = invoke({"symmetrizer", kData + "/c06_m3_strict.json", "--seed", "9", "--grid", "9"});
  CHECK(s1.out == s2.out);
}

}
