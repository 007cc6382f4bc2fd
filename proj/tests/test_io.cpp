#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "kzclt/clt.hpp"
#include "kzclt/config.hpp"

using namespace kzclt;
namespace fs = std::filesystem;
using njson = nlohmann::ordered_json;

namespace {

fs::path scratch_root() {
  static const fs::path root = [] {
    fs::path p = fs::temp_directory_path() / "kzclt_io_scratch";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
  REQUIRE(out.good());
}

int run_cli(const std::string& args, const fs::path& err_file = {}) {
  std::string cmd = std::string("\"") + KZCLT_CLI_PATH + "\" " + args;
  if (!err_file.empty()) cmd += " 2>\"" + err_file.string() + "\"";
  else cmd += " 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

std::string prefix_of(const std::exception& e, std::size_t n) {
  const std::string w = e.what();
  return w.substr(0, std::min(n, w.size()));
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("minimal config round-trips and fills defaults") {
  const RunConfig cfg = parse_config(R"({"subcommand": "estimate"})");
  CHECK(cfg.model == "tautological");
  CHECK(cfg.driver == "brownian");
  CHECK(cfg.n == 1000);
  CHECK(cfg.t == 50.0);
  CHECK(cfg.dt == 1e-3);
  CHECK(cfg.burn_in == 200.0);
  CHECK(cfg.calibrate);
  CHECK(cfg.t_calibrate == 1e4);
  CHECK(cfg.seed == 1);
  CHECK(cfg.threads == 1);
  CHECK(cfg.out_dir == ".");

  const std::string once = serialize(cfg);
  const std::string twice = serialize(parse_config(once));
  CHECK(once == twice);
}

TEST_CASE("serialization is canonical across key order and spacing") {
  const std::string a = R"({"subcommand":"estimate","n":500,"seed":9,"t":25,"lambda_ref":0.5})";
  const std::string b = R"({
    "t": 25,
    "lambda_ref": 0.5,
    "seed": 9,
    "subcommand": "estimate",
    "n": 500
  })";
  CHECK(serialize(parse_config(a)) == serialize(parse_config(b)));
  CHECK(config_hash(parse_config(a)) == config_hash(parse_config(b)));
  const std::string c = R"({"subcommand":"estimate","n":500,"seed":10,"t":25,"lambda_ref":0.5})";
  CHECK(config_hash(parse_config(a)) != config_hash(parse_config(c)));
}

TEST_CASE("range errors name the offending field") {
  try {
    parse_config(R"({"dt": -1, "lambda_ref": 1})", "estimate");
    FAIL("expected RangeError");
  } catch (const RangeError& e) {
    CHECK(prefix_of(e, 3) == "dt:");
  }
  try {
    parse_config(R"({"n": 0})", "simulate");
    FAIL("expected RangeError");
  } catch (const RangeError& e) {
    CHECK(prefix_of(e, 2) == "n:");
  }
  CHECK_THROWS_AS(parse_config(R"({"threads": 0})", "estimate"), RangeError);
  CHECK_THROWS_AS(parse_config(R"({"driver": "levy"})", "estimate"), RangeError);
  CHECK_THROWS_AS(parse_config(R"({"driver": "brownian-stopped"})", "simulate"), RangeError);
  CHECK_THROWS_AS(parse_config(R"({"theta": 1.0})", "estimate"), RangeError);
  CHECK_THROWS_AS(parse_config(R"({"model": "origami"})", "estimate"), RangeError);
  CHECK_THROWS_AS(parse_config(R"({"origami": "h2"})", "estimate"), RangeError);
  CHECK_THROWS_AS(parse_config(R"({"k": 2})", "estimate"), RangeError);
  CHECK_THROWS_AS(parse_config(R"({"t_calibrate": 10})", "estimate"), RangeError);
}

TEST_CASE("unknown keys and malformed text are rejected") {
  CHECK_THROWS_AS(parse_config(R"({"foo": 3})", "estimate"), UnknownKey);
  CHECK_THROWS_AS(parse_config(R"({"dump_paths": true})", "estimate"), UnknownKey);
  CHECK_THROWS_AS(parse_config(R"({"burn_in": 10})", "simulate"), UnknownKey);
  CHECK_THROWS_AS(parse_config("{not json"), ParseError);
  CHECK_THROWS_AS(parse_config("[1, 2]"), ParseError);
  CHECK_THROWS_AS(parse_config("{}"), ParseError);  // no subcommand anywhere
  CHECK_THROWS_AS(parse_config(R"({"subcommand": "estimate"})", "simulate"), ParseError);
  // parse errors carry the position reported by the json layer
  try {
    parse_config("{\n  \"n\": oops\n}", "simulate");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("poisson job parsing") {
  const std::string text =
      R"({"series": "principal", "s": "i", "c": 1.5, "K": 64, "rhs": {"2": 1.0, "-2": [0.0, 0.25]}})";
  const RunConfig cfg = parse_config(text, "poisson");
  CHECK(cfg.poisson.s == std::complex<double>(0.0, 1.0));
  CHECK(cfg.poisson.c == 1.5);
  CHECK(cfg.poisson.K == 64);
  REQUIRE(cfg.poisson.rhs.size() == 2);
  CHECK(cfg.poisson.rhs[0].first == -2);  // canonical ascending order
  CHECK(cfg.poisson.rhs[1].first == 2);
  CHECK(cfg.poisson.rhs[0].second == std::complex<double>(0.0, 0.25));
  const std::string once = serialize(cfg);
  CHECK(serialize(parse_config(once)) == once);

  CHECK_THROWS_AS(parse_config(R"({"series": "principal", "s": 2.0})", "poisson"), RangeError);
  CHECK_THROWS_AS(parse_config(R"({"series": "complementary", "s": "2i"})", "poisson"),
                  RangeError);
  CHECK_THROWS_AS(parse_config(R"({"series": "complementary", "s": 1.5})", "poisson"),
                  RangeError);
  CHECK_THROWS_AS(parse_config(R"({"series": "weird"})", "poisson"), RangeError);
  CHECK_THROWS_AS(parse_config(R"({"c": 0.5})", "poisson"), RangeError);
  CHECK_THROWS_AS(parse_config(R"({"K": 4})", "poisson"), RangeError);
  CHECK_THROWS_AS(parse_config(R"({"rhs": {"x": 1}})", "poisson"), RangeError);
  CHECK_THROWS_AS(parse_config(R"({"sign": 0})", "poisson"), RangeError);

  const RunConfig disc = parse_config(R"({"series": "discrete", "n": 2, "sign": -1})", "poisson");
  CHECK(disc.poisson.s == std::complex<double>(-3.0, 0.0));
  CHECK(serialize(parse_config(serialize(disc))) == serialize(disc));
}

TEST_CASE("samples csv round trip") {
  CltModel taut;
  CltOptions fast;
  fast.dt = 1e-2;
  fast.burn_in = 20.0;
  const CltSampleSet set = clt_samples(taut, DriverKind::Geodesic, 100, 16.0, 0.5, 1, 8, fast);
  const CltSampleSet back = parse_samples_csv(samples_csv(set));
  CHECK(back.driver == set.driver);
  CHECK(back.n == set.n);
  CHECK(back.t == set.t);
  CHECK(back.k == set.k);
  CHECK(back.lambda_ref == set.lambda_ref);
  CHECK(back.seed == set.seed);
  CHECK(back.not_hit_retries == set.not_hit_retries);
  CHECK(back.values == set.values);

  CHECK_THROWS_AS(parse_samples_csv("value\n1\n"), ParseError);
  CHECK_THROWS_AS(parse_samples_csv("# driver=warp n=1 t=1 k=1 lambda_ref=0 seed=0\nvalue\n1\n"),
                  ParseError);
  // count mismatch against the header
  CHECK_THROWS_AS(
      parse_samples_csv("# driver=brownian n=3 t=1 k=1 lambda_ref=0 seed=0\nvalue\n1\n2\n"),
      ParseError);
}

TEST_CASE("fnv1a matches the reference vectors") {
  CHECK(fnv1a("") == 14695981039346656037ull);
  CHECK(fnv1a("a") == 12638187200555641996ull);
  CHECK(fnv1a("foobar") == 9625390261332436968ull);
}

TEST_CASE("error json is machine readable") {
  const njson j = njson::parse(error_json("RangeError", "dt: must be positive"));
  CHECK(j.at("error") == "RangeError");
  CHECK(j.at("message") == "dt: must be positive");
}

TEST_CASE("run writes the report golden and reruns bit-identically") {
  const fs::path base = scratch_root() / "api_estimate";
  RunConfig cfg = parse_config(
      R"({"driver": "geodesic", "n": 120, "t": 10, "dt": 0.01, "lambda_ref": 1.0, "seed": 5})",
      "estimate");
  cfg.out_dir = (base / "a").string();
  REQUIRE(run(cfg) == 0);

  // exact closed form: every deviation is identically zero, so every byte of
  // the report is pinned
  const std::string golden =
      "{\n"
      "  \"lambda\": 1.0,\n"
      "  \"V\": 0.0,\n"
      "  \"ci\": [\n"
      "    0.0,\n"
      "    0.0\n"
      "  ],\n"
      "  \"ks\": 0.0,\n"
      "  \"n\": 120,\n"
      "  \"t\": 10.0,\n"
      "  \"driver\": \"geodesic\",\n"
      "  \"seed\": 5\n"
      "}\n";
  CHECK(slurp(base / "a" / "report.json") == golden);

  RunConfig again = cfg;
  again.out_dir = (base / "b").string();
  again.threads = 4;
  REQUIRE(run(again) == 0);
  CHECK(slurp(base / "a" / "report.json") == slurp(base / "b" / "report.json"));
  CHECK(slurp(base / "a" / "samples.csv") == slurp(base / "b" / "samples.csv"));

  // manifest echoes the config with defaults filled
  const njson manifest = njson::parse(slurp(base / "a" / "manifest.json"));
  CHECK(manifest.at("version") == toolkit_version());
  CHECK(manifest.at("subcommand") == "estimate");
  CHECK(manifest.at("seed") == 5);
  CHECK(manifest.at("config_hash") == config_hash(cfg));
  CHECK(manifest.at("config").at("burn_in") == 200.0);
  CHECK(manifest.at("config").at("model") == "tautological");
  CHECK(!manifest.at("config").contains("t_calibrate"));
  CHECK(manifest.at("artifacts") == njson::array({"samples.csv", "report.json"}));
}

TEST_CASE("cli estimate, report round trip and seed override") {
  const fs::path base = scratch_root() / "cli_estimate";
  fs::create_directories(base);
  spit(base / "est.json",
       R"({"driver": "brownian", "n": 150, "t": 8, "dt": 0.01, "burn_in": 10,
           "lambda_ref": 1.0, "seed": 7, "out": ")" +
           (base / "r1").string() + R"("})");

  REQUIRE(run_cli("estimate --config \"" + (base / "est.json").string() + "\"") == 0);
  REQUIRE(run_cli("estimate --config \"" + (base / "est.json").string() + "\" --out \"" +
                  (base / "r2").string() + "\" --threads 3") == 0);
  CHECK(slurp(base / "r1" / "report.json") == slurp(base / "r2" / "report.json"));
  CHECK(slurp(base / "r1" / "samples.csv") == slurp(base / "r2" / "samples.csv"));

  // a different master seed must move the samples
  REQUIRE(run_cli("estimate --config \"" + (base / "est.json").string() + "\" --out \"" +
                  (base / "r3").string() + "\" --seed 8") == 0);
  CHECK(slurp(base / "r1" / "samples.csv") != slurp(base / "r3" / "samples.csv"));

  // report recomputed from the stored csv reproduces the estimate report
  spit(base / "rep.json", R"({"samples": ")" + (base / "r1" / "samples.csv").string() +
                              R"(", "out": ")" + (base / "r4").string() + R"("})");
  REQUIRE(run_cli("report --config \"" + (base / "rep.json").string() + "\"") == 0);
  CHECK(slurp(base / "r1" / "report.json") == slurp(base / "r4" / "report.json"));

  const njson rep = njson::parse(slurp(base / "r1" / "report.json"));
  const std::vector<std::string> want = {"lambda", "V", "ci", "ks", "n", "t", "driver", "seed"};
  std::vector<std::string> got;
  for (const auto& item : rep.items()) got.push_back(item.key());
  CHECK(got == want);
}

TEST_CASE("cli error reporting carries type, message and exit code") {
  const fs::path base = scratch_root() / "cli_errors";
  fs::create_directories(base);

  spit(base / "bad_range.json", R"({"dt": -1, "lambda_ref": 1})");
  CHECK(run_cli("estimate --config \"" + (base / "bad_range.json").string() + "\"",
                base / "err1.json") == 2);
  njson err = njson::parse(slurp(base / "err1.json"));
  CHECK(err.at("error") == "RangeError");
  CHECK(std::string(err.at("message")).substr(0, 3) == "dt:");

  spit(base / "bad_key.json", R"({"foo": 1})");
  CHECK(run_cli("estimate --config \"" + (base / "bad_key.json").string() + "\"",
                base / "err2.json") == 2);
  CHECK(njson::parse(slurp(base / "err2.json")).at("error") == "UnknownKey");

  CHECK(run_cli("estimate --config \"" + (base / "nowhere.json").string() + "\"",
                base / "err3.json") == 2);
  CHECK(njson::parse(slurp(base / "err3.json")).at("error") == "IoError");

  // module failure surfaces as a runtime error with exit 1
  spit(base / "torus_est.json",
       R"({"model": "origami", "origami": "torus", "lambda_ref": 0.0, "n": 100, "t": 5, "dt": 0.01})");
  CHECK(run_cli("estimate --config \"" + (base / "torus_est.json").string() + "\"",
                base / "err4.json") == 1);
  CHECK(njson::parse(slurp(base / "err4.json")).at("error") == "RuntimeError");
}

TEST_CASE("cli poisson job") {
  const fs::path base = scratch_root() / "cli_poisson";
  fs::create_directories(base);
  spit(base / "job.json", R"({"series": "principal", "s": "i", "c": 1.0, "K": 128,
                              "rhs": {"0": 1.0}, "out": ")" +
                              (base / "out").string() + R"("})");
  REQUIRE(run_cli("poisson --config \"" + (base / "job.json").string() + "\"") == 0);
  const njson r = njson::parse(slurp(base / "out" / "result.json"));
  CHECK(r.at("kappa").get<double>() > 0.0);
  CHECK(r.at("residual").get<double>() <= 1e-10);
  CHECK(r.at("coefficients").size() == 257);  // full window [-128, 128]

  // out-of-window rhs index is a config-level error
  spit(base / "bad.json", R"({"series": "principal", "s": "i", "c": 1.0, "K": 16,
                              "rhs": {"40": 1.0}})");
  CHECK(run_cli("poisson --config \"" + (base / "bad.json").string() + "\"",
                base / "err.json") == 2);
  CHECK(njson::parse(slurp(base / "err.json")).at("error") == "RangeError");
}

TEST_CASE("cli origami summaries") {
  const fs::path base = scratch_root() / "cli_origami";
  fs::create_directories(base);

  spit(base / "ew.json", R"({"origami": "ew", "out": ")" + (base / "ew").string() + R"("})");
  REQUIRE(run_cli("origami --config \"" + (base / "ew.json").string() + "\"") == 0);
  const njson ew = njson::parse(slurp(base / "ew" / "summary.json"));
  CHECK(ew.at("n") == 8);
  CHECK(ew.at("genus") == 3);
  CHECK(ew.at("h1_dim") == 6);
  CHECK(ew.at("complement").at("dim") == 4);
  CHECK(ew.at("complement").at("divisors") == njson::array({1, 2}));
  CHECK(ew.at("complement").at("orbit") == 96);
  CHECK(ew.at("complement").at("finite_monodromy") == true);

  // the same three-square surface through the file loader
  spit(base / "l_shape.json", R"({"n": 3, "h": [2, 3, 1], "v": [2, 1, 3]})");
  spit(base / "h2file.json", R"({"origami": ")" + (base / "l_shape.json").string() +
                                 R"(", "out": ")" + (base / "h2").string() + R"("})");
  REQUIRE(run_cli("origami --config \"" + (base / "h2file.json").string() + "\"") == 0);
  const njson h2 = njson::parse(slurp(base / "h2" / "summary.json"));
  CHECK(h2.at("n") == 3);
  CHECK(h2.at("genus") == 2);
  CHECK(h2.at("stratum") == njson::array({2}));
  CHECK(h2.at("complement").at("dim") == 2);
  CHECK(h2.at("complement").at("divisors") == njson::array({3}));
  CHECK(h2.at("complement").at("finite_monodromy") == false);

  spit(base / "torus.json",
       R"({"origami": "torus", "out": ")" + (base / "torus").string() + R"("})");
  REQUIRE(run_cli("origami --config \"" + (base / "torus.json").string() + "\"") == 0);
  CHECK(njson::parse(slurp(base / "torus" / "summary.json")).at("complement").is_null());

  spit(base / "mangled.json", R"({"n": 3, "h": [2, 2, 1], "v": [2, 1, 3]})");
  spit(base / "badcfg.json", R"({"origami": ")" + (base / "mangled.json").string() + R"("})");
  CHECK(run_cli("origami --config \"" + (base / "badcfg.json").string() + "\"",
                base / "err.json") == 2);
  const njson err = njson::parse(slurp(base / "err.json"));
  CHECK(err.at("error") == "ParseError");
  CHECK(std::string(err.at("message")).find("appears twice") != std::string::npos);
}

TEST_CASE("cli simulate with binary dump") {
  const fs::path base = scratch_root() / "cli_simulate";
  fs::create_directories(base);
  spit(base / "sim.json", R"({"n": 20, "t": 2, "dt": 0.01, "dump_paths": true, "seed": 3,
                              "out": ")" +
                              (base / "out").string() + R"("})");
  REQUIRE(run_cli("simulate --config \"" + (base / "sim.json").string() + "\"") == 0);
  // 20 paths, 201 records each, 3 doubles per record
  CHECK(fs::file_size(base / "out" / "paths.bin") == 20u * 201u * 24u);
  std::istringstream csv(slurp(base / "out" / "paths.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 22);  // metadata, column header, one row per path

  REQUIRE(run_cli("simulate --config \"" + (base / "sim.json").string() + "\" --out \"" +
                  (base / "out2").string() + "\" --threads 4") == 0);
  CHECK(slurp(base / "out" / "paths.csv") == slurp(base / "out2" / "paths.csv"));
  CHECK(slurp(base / "out" / "paths.bin") == slurp(base / "out2" / "paths.bin"));

  spit(base / "ray.json", R"({"driver": "geodesic", "theta": 0.7, "n": 5, "t": 2, "dt": 0.5,
                              "out": ")" +
                              (base / "ray").string() + R"("})");
  REQUIRE(run_cli("simulate --config \"" + (base / "ray.json").string() + "\"") == 0);
  std::istringstream ray(slurp(base / "ray" / "paths.csv"));
  std::getline(ray, line);
  std::getline(ray, line);
  while (std::getline(ray, line)) {
    if (line.empty()) continue;
    // path,t_final,theta_final,eta_final,...: the ray pins all three
    CHECK(line.find(",2,0.69999999999999996,0,") != std::string::npos);
  }
}

}  // TEST_SUITE
