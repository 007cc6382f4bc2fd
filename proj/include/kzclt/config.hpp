#pragma once
// JSON config layer and artifact writing behind the command line tool.
// Configs are strict: unknown keys are rejected per subcommand and every
// numeric field is range checked, so a typo fails loudly instead of
// silently running defaults.  serialize() is canonical (defaults filled,
// fixed key order) and doubles as the hashing domain for the manifest.

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kzclt/clt.hpp"

namespace kzclt {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnknownKey : ParseError {
  using ParseError::ParseError;
};
struct RangeError : ParseError {
  using ParseError::ParseError;
};

// payload of the poisson subcommand: one representation, one operator
// window, one right hand side given as sparse (index, coefficient) pairs
struct PoissonJob {
  std::string series = "principal";  // principal | complementary | discrete
  std::complex<double> s{0.0, 0.0};
  int n = 1;     // discrete series index
  int sign = 1;  // discrete side, +-1
  double c = 1.0;
  int K = 128;
  std::vector<std::pair<int, std::complex<double>>> rhs;
};

struct RunConfig {
  std::string subcommand;  // simulate | estimate | poisson | origami | report

  // model spec
  std::string model = "tautological";  // tautological | origami
  std::string origami;                 // builtin name (torus | h2 | ew) or a json file path
  int k = 1;

  // driver spec
  std::string driver = "brownian";  // geodesic | brownian | brownian-stopped
  bool has_theta = false;
  double theta = 0.0;  // geodesic direction, only when given

  // sampling
  int n = 1000;
  double t = 50.0;
  double dt = 1e-3;
  double burn_in = 200.0;
  bool calibrate = true;  // no lambda_ref key: run a calibration pass
  double lambda_ref = 0.0;
  double t_calibrate = 1e4;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = ".";
  bool dump_paths = false;  // simulate: also write the binary path records

  std::string samples;  // report: input samples csv

  PoissonJob poisson;
};

// Strict parse; `subcommand` (from the command line) wins over, and must
// agree with, any subcommand key inside the text.
RunConfig parse_config(const std::string& text, const std::string& subcommand = "");

// canonical JSON echo of a validated config; parse(serialize(c)) round-trips
std::string serialize(const RunConfig& cfg);

std::uint64_t fnv1a(const std::string& bytes);
// hex fnv1a of serialize(cfg), the manifest's reproducibility key
std::string config_hash(const RunConfig& cfg);

const char* toolkit_version();

// inverse of samples_csv, used by the report subcommand
CltSampleSet parse_samples_csv(const std::string& text);

// one-line machine readable failure record {"error": ..., "message": ...}
std::string error_json(const std::string& type, const std::string& message);

// Execute the subcommand and write its artifacts under cfg.out_dir
// (estimate: samples.csv + report.json, simulate: paths.csv [+ paths.bin],
// poisson: result.json, origami: summary.json, report: report.json; every
// run also writes manifest.json).  Returns 0 on success; on failure prints
// error_json to stderr and returns 2 for config problems, 1 for module
// failures.  Identical (config, seed) runs produce identical bytes.
int run(const RunConfig& cfg);

}  // namespace kzclt
