#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "fermi/config.hpp"
#include "fermi/io.hpp"
#include "fermi/svg.hpp"

using namespace fermi;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("fermi_io_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string config_error(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("shortest round-trip doubles") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5e-300) == "-2.5e-300");
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    const double x = u(rng) * std::pow(10.0, i % 40 - 20);
    CHECK(std::stod(format_double(x)) == x);
  }
}

TEST_CASE("csv round trip") {
  CsvTable t{{"t", "dp2"}, {{0.0, 0.5, 1.0}, {1.0 / 3.0, 2e-17, -4.25}}};
  const std::string text = to_csv(t);
  CHECK(text.rfind("t,dp2\n", 0) == 0);
  const CsvTable back = parse_csv(text);
  CHECK(back.header == t.header);
  CHECK(back.columns == t.columns);
  CHECK(back.rows() == 3);
  CHECK(back.has("dp2"));
  CHECK_FALSE(back.has("dz"));
  CHECK_THROWS(back.column("dz"));
  CHECK_THROWS(parse_csv("a,b\n1\n"));
}

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("atomic write and verification") {
  const fs::path d = scratch_dir("verify");
  write_atomic(d / "a.csv", "x\n1\n");
  CHECK(read_file(d / "a.csv") == "x\n1\n");
  for (const auto& e : fs::directory_iterator(d)) CHECK(e.path().filename() == "a.csv");

  const FileRecord r = record_file(d, "a.csv");
  CHECK(r.bytes == 4);
  CHECK(r.sha256 == sha256_hex("x\n1\n"));
  write_atomic(d / "manifest.json", "{\"files\": [{\"name\": \"a.csv\", \"bytes\": 4, \"sha256\": \"" + r.sha256 + "\"}]}\n");
  CHECK(verify_directory(d).empty());
  write_atomic(d / "a.csv", "x\n2\n");
  const auto issues = verify_directory(d);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].name == "a.csv");
  fs::remove(d / "a.csv");
  CHECK(verify_directory(d).size() == 1);
}

TEST_CASE("minimal config materializes defaults") {
  const RunConfig c = parse_config_text(R"({"engine": "classical-hard", "lambda": 1.7, "t_final": 300})");
  CHECK(c.engine == Engine::classical_hard);
  REQUIRE(c.lambda);
  CHECK(*c.lambda == 1.7);
  CHECK(c.lambdas() == std::vector<double>{1.7});
  CHECK(c.seed == 0);
  CHECK(c.samples == 301);
  CHECK(c.output_dir == "out");
  CHECK(c.ensemble.z_mean == 6.0);
  CHECK(c.ensemble.p_std == 0.5);
  CHECK(c.quantum.kappa == 4.0);
  CHECK(c.quantum.dt == 2e-3);
  CHECK(c.params(1.7).lambda == 1.7);
}

TEST_CASE("lambda ranges are inclusive and evenly spaced") {
  const RunConfig c = parse_config_text(
      R"({"engine": "classical-hard", "lambda": {"start": 1.0, "stop": 2.0, "count": 5}, "t_final": 10})");
  const auto l = c.lambdas();
  REQUIRE(l.size() == 5);
  CHECK(l.front() == 1.0);
  CHECK(l.back() == 2.0);
  CHECK(l[2] == doctest::Approx(1.5));
}

TEST_CASE("config errors name the key and the line") {
  const std::string typo = config_error("{\n  \"engine\": \"quantum\",\n  \"lamda\": 1.7,\n  \"t_final\": 10\n}");
  CHECK(typo.find("'lamda'") != std::string::npos);
  CHECK(typo.find("line 3") != std::string::npos);
  CHECK(typo.find("did you mean 'lambda'") != std::string::npos);

  const std::string type = config_error(R"({"engine": "quantum", "lambda": "x", "t_final": 10})");
  CHECK(type.find("'lambda'") != std::string::npos);
  CHECK(type.find("expected a number") != std::string::npos);

  CHECK(config_error(R"({"engine": "quantum", "lambda": 1.7})").find("t_final") != std::string::npos);
  CHECK(config_error(R"({"engine": "warp", "lambda": 1.7, "t_final": 1})").find("engine") != std::string::npos);
  CHECK(config_error(R"({"engine": "quantum", "lambda": {"start": 1, "stop": 2, "count": 0}, "t_final": 1})")
            .find("empty") != std::string::npos);
  CHECK(config_error(R"({"engine": "quantum", "lambda": 1.7, "t_final": 1,)").find("not valid JSON") !=
        std::string::npos);
  CHECK(config_error(R"({"engine": "quantum", "lambda": 1, "t_final": 1, "quantum": {"grid": {"z_min": 0, "z_max": 10, "n_points": 1000}}})")
            .find("quantum.grid") != std::string::npos);
  CHECK(suggest_key("ensembel", {"ensemble", "engine"}) == std::optional<std::string>("ensemble"));
  CHECK_FALSE(suggest_key("zzzzzz", {"ensemble", "engine"}));
}

TEST_CASE("physical config derives the scaled parameters") {
  const RunConfig c = parse_config_text(R"({
    "engine": "quantum", "t_final": 10,
    "physical": {"mass": 2.2e-25, "gravity": 9.8, "omega": 5850, "decay_k": 1818181.818,
                 "rabi_eff": 1e7, "epsilon": 1e-6}
  })");
  REQUIRE(c.physical);
  REQUIRE(c.lambda);
  CHECK(*c.lambda == doctest::Approx(5850.0 * 5850.0 * 1e-6 / (2.0 * 1818181.818 * 9.8)));
  CHECK(std::abs(c.quantum.kbar - 1.0) < 0.01);
  CHECK(config_error(R"({"engine": "quantum", "t_final": 10, "lambda": 1,
    "physical": {"mass": 2.2e-25, "gravity": 9.8, "omega": 5850, "decay_k": 1e6, "rabi_eff": 1e7, "epsilon": 1e-6}})")
            .find("must be omitted") != std::string::npos);
}

TEST_CASE("canonical config json round trips") {
  const RunConfig a = parse_config_text(R"({"engine": "quantum", "lambda": {"start": 1.5, "stop": 2.5, "count": 3},
    "t_final": 50, "seed": 9, "quantum": {"kbar": 0.5, "grid": {"z_min": -4, "z_max": 60, "n_points": 4096},
    "absorber": {"on": false}}})");
  const std::string j = config_to_json(a);
  const RunConfig b = parse_config_text(j);
  CHECK(config_to_json(b) == j);
  CHECK(b.quantum.kbar == 0.5);
  CHECK_FALSE(b.quantum.absorber_on);
  REQUIRE(b.quantum.grid);
  CHECK(b.quantum.grid->n_points == 4096);
}

TEST_CASE("svg output is deterministic and shades the windows") {
  std::vector<double> l, dp, n;
  for (int i = 0; i <= 200; ++i) {
    l.push_back(1.0 + 0.02 * i);
    dp.push_back(1.0 + std::sin(l.back()));
    n.push_back(10.0 + l.back());
  }
  const std::string a = fig1_svg(l, dp, n);
  CHECK(a == fig1_svg(l, dp, n));
  CHECK(a.rfind("<?xml", 0) == 0);
  CHECK(a.find("<svg xmlns") != std::string::npos);
  CHECK(a.find("</svg>") != std::string::npos);
  std::size_t bands = 0;
  for (std::size_t pos = a.find("class=\"window\""); pos != std::string::npos; pos = a.find("class=\"window\"", pos + 1)) {
    ++bands;
  }
  CHECK(bands == 3);
  CHECK(a.find("nan") == std::string::npos);
  CHECK_THROWS_AS(fig1_svg(l, dp, {}), InvalidParameter);
  CHECK_THROWS_AS(fig2_svg({}), InvalidParameter);
}

TEST_CASE("bundled configs parse") {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(FERMI_CONFIG_DIR)) {
    if (e.path().extension() != ".json") continue;
    CAPTURE(e.path().string());
    CHECK_NOTHROW(parse_config(e.path()));
    ++n;
  }
  CHECK(n >= 5);
}
