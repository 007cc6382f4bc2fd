#include "kzclt/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "json.hpp"
#include "kzclt/brownian.hpp"
#include "kzclt/cocycle.hpp"
#include "kzclt/origami.hpp"
#include "kzclt/parallel.hpp"
#include "kzclt/spectral.hpp"

namespace kzclt {

namespace {

using njson = nlohmann::ordered_json;
namespace fs = std::filesystem;

[[noreturn]] void type_fail(const std::string& field, const char* want) {
  throw ParseError(field + ": expected " + want);
}

double get_double(const njson& j, const std::string& field, double def) {
  if (!j.contains(field)) return def;
  const auto& v = j.at(field);
  if (!v.is_number()) type_fail(field, "a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw RangeError(field + ": must be finite");
  return x;
}

long long get_int(const njson& j, const std::string& field, long long def) {
  if (!j.contains(field)) return def;
  const auto& v = j.at(field);
  if (!v.is_number_integer()) type_fail(field, "an integer");
  return v.get<long long>();
}

std::uint64_t get_u64(const njson& j, const std::string& field, std::uint64_t def) {
  if (!j.contains(field)) return def;
  const auto& v = j.at(field);
  if (!v.is_number_integer()) type_fail(field, "an integer");
  if (!v.is_number_unsigned() && v.get<long long>() < 0)
    throw RangeError(field + ": must be nonnegative");
  return v.get<std::uint64_t>();
}

std::string get_string(const njson& j, const std::string& field, const std::string& def) {
  if (!j.contains(field)) return def;
  const auto& v = j.at(field);
  if (!v.is_string()) type_fail(field, "a string");
  return v.get<std::string>();
}

bool get_bool(const njson& j, const std::string& field, bool def) {
  if (!j.contains(field)) return def;
  const auto& v = j.at(field);
  if (!v.is_boolean()) type_fail(field, "a boolean");
  return v.get<bool>();
}

double parse_real_token(const std::string& text, const std::string& field) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double x = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !std::isfinite(x))
    throw RangeError(field + ": '" + text + "' is not a number");
  return x;
}

// a number, a string like "2i" / "i" / "0.5", or a [re, im] pair
std::complex<double> parse_complex(const njson& v, const std::string& field) {
  if (v.is_number()) {
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw RangeError(field + ": must be finite");
    return {x, 0.0};
  }
  if (v.is_string()) {
    std::string text = v.get<std::string>();
    if (!text.empty() && (text.back() == 'i' || text.back() == 'I')) {
      std::string num = text.substr(0, text.size() - 1);
      if (num.empty() || num == "+") num = "1";
      else if (num == "-") num = "-1";
      return {0.0, parse_real_token(num, field)};
    }
    return {parse_real_token(text, field), 0.0};
  }
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    const double re = v[0].get<double>();
    const double im = v[1].get<double>();
    if (!std::isfinite(re) || !std::isfinite(im)) throw RangeError(field + ": must be finite");
    return {re, im};
  }
  throw ParseError(field + ": expected a number, a string like \"2i\", or [re, im]");
}

const std::set<std::string>& allowed_keys(const std::string& sub) {
  static const std::set<std::string> simulate = {"subcommand", "seed",  "threads",
                                                 "out",        "driver", "theta",
                                                 "n",          "t",      "dt",
                                                 "dump_paths"};
  static const std::set<std::string> estimate = {
      "subcommand", "seed", "threads", "out",     "model",      "origami",
      "k",          "driver", "theta", "n",       "t",          "dt",
      "burn_in",    "lambda_ref",      "t_calibrate"};
  static const std::set<std::string> poisson = {"subcommand", "seed", "threads", "out",
                                                "series",     "s",    "n",       "sign",
                                                "c",          "K",    "rhs"};
  static const std::set<std::string> origami = {"subcommand", "seed", "threads", "out",
                                                "origami"};
  static const std::set<std::string> report = {"subcommand", "seed", "threads", "out",
                                               "samples"};
  if (sub == "simulate") return simulate;
  if (sub == "estimate") return estimate;
  if (sub == "poisson") return poisson;
  if (sub == "origami") return origami;
  return report;
}

RepParams job_rep_params(const PoissonJob& job) {
  if (job.series == "principal") return RepParams::principal(job.s.imag());
  if (job.series == "complementary") return RepParams::complementary(job.s.real());
  return RepParams::discrete(job.n, job.sign);
}

void parse_poisson(const njson& j, PoissonJob& job) {
  job.series = get_string(j, "series", job.series);
  if (job.series != "principal" && job.series != "complementary" && job.series != "discrete")
    throw RangeError("series: must be principal, complementary or discrete");

  const long long n = get_int(j, "n", job.n);
  if (n < 1 || n > 1000) throw RangeError("n: discrete index must be in 1..1000");
  job.n = static_cast<int>(n);
  const long long sign = get_int(j, "sign", job.sign);
  if (sign != 1 && sign != -1) throw RangeError("sign: must be +1 or -1");
  job.sign = static_cast<int>(sign);

  if (j.contains("s")) {
    job.s = parse_complex(j.at("s"), "s");
    if (job.series == "principal" && job.s.real() != 0.0)
      throw RangeError("s: principal series parameter is purely imaginary (write \"2i\")");
    if (job.series == "complementary" && job.s.imag() != 0.0)
      throw RangeError("s: complementary series parameter is real");
    if (job.series == "discrete" &&
        (job.s.imag() != 0.0 || job.s.real() != job.sign * (2.0 * job.n - 1.0)))
      throw RangeError("s: discrete series has s = sign*(2n-1); give n and sign instead");
  } else if (job.series == "discrete") {
    job.s = {job.sign * (2.0 * job.n - 1.0), 0.0};
  }

  job.c = get_double(j, "c", job.c);
  if (job.c < 1.0) throw RangeError("c: must be >= 1");
  const long long K = get_int(j, "K", job.K);
  if (K < 8 || K > 8192) throw RangeError("K: must be in 8..8192");
  job.K = static_cast<int>(K);

  job.rhs.clear();
  if (j.contains("rhs")) {
    const auto& r = j.at("rhs");
    if (!r.is_object()) type_fail("rhs", "an object mapping index to coefficient");
    for (const auto& item : r.items()) {
      const std::string& key = item.key();
      const char* begin = key.c_str();
      char* end = nullptr;
      const long long idx = std::strtoll(begin, &end, 10);
      if (end == begin || *end != '\0')
        throw RangeError("rhs: index '" + key + "' is not an integer");
      job.rhs.emplace_back(static_cast<int>(idx), parse_complex(item.value(), "rhs[" + key + "]"));
    }
    std::sort(job.rhs.begin(), job.rhs.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  }

  try {
    validate(job_rep_params(job));
  } catch (const InadmissibleParams& e) {
    throw RangeError(std::string("s: ") + e.what());
  }
}

njson complex_json(const std::complex<double>& z) { return njson::array({z.real(), z.imag()}); }

std::string read_file(const std::string& path, const std::string& field) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(field + ": cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  out.flush();
  if (!out.good()) throw std::runtime_error("cannot write '" + path.string() + "'");
}

Origami load_origami(const std::string& name) {
  if (name == "torus") return builtin_torus();
  if (name == "h2") return builtin_h2();
  if (name == "ew") return builtin_ew();
  const std::string text = read_file(name, "origami");
  try {
    return origami_from_json(text);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("origami: ") + e.what());
  }
}

DriverKind driver_kind(const std::string& name) {
  if (name == "geodesic") return DriverKind::Geodesic;
  if (name == "brownian") return DriverKind::Brownian;
  return DriverKind::BrownianStopped;
}

njson report_body(double lambda, const VarianceReport& rep, DriverKind driver,
                  std::uint64_t seed) {
  njson j;
  j["lambda"] = lambda;
  j["V"] = rep.v;
  j["ci"] = njson::array({rep.ci.first, rep.ci.second});
  j["ks"] = rep.ks;
  j["n"] = rep.n;
  j["t"] = rep.t;
  j["driver"] = driver_name(driver);
  j["seed"] = seed;
  return j;
}

void write_manifest(const RunConfig& cfg, const std::vector<std::string>& artifacts) {
  njson m;
  m["version"] = toolkit_version();
  m["subcommand"] = cfg.subcommand;
  m["config_hash"] = config_hash(cfg);
  m["seed"] = cfg.seed;
  m["config"] = njson::parse(serialize(cfg));
  m["artifacts"] = artifacts;
  write_file(fs::path(cfg.out_dir) / "manifest.json", m.dump(2) + "\n");
}

CltOptions clt_options(const RunConfig& cfg) {
  CltOptions opts;
  opts.dt = cfg.dt;
  opts.burn_in = cfg.burn_in;
  opts.threads = cfg.threads;
  if (cfg.has_theta) opts.geodesic_theta = cfg.theta;
  return opts;
}

void run_estimate(const RunConfig& cfg) {
  std::optional<Origami> org;
  std::optional<OrigamiCocycle> coc;
  CltModel model;
  if (cfg.model == "origami") {
    org.emplace(load_origami(cfg.origami));
    coc.emplace(*org, true);
    model.cocycle = &*coc;
  }
  const CltOptions opts = clt_options(cfg);
  double lambda = cfg.lambda_ref;
  if (cfg.calibrate)
    lambda = calibrate_lambda(model, cfg.k, cfg.t_calibrate, cfg.seed, opts).lambda;
  const DriverKind driver = driver_kind(cfg.driver);
  const CltSampleSet set =
      clt_samples(model, driver, cfg.n, cfg.t, lambda, cfg.k, cfg.seed, opts);
  const VarianceReport rep = variance_estimate(set);

  write_file(fs::path(cfg.out_dir) / "samples.csv", samples_csv(set));
  write_file(fs::path(cfg.out_dir) / "report.json",
             report_body(lambda, rep, driver, cfg.seed).dump(2) + "\n");
  write_manifest(cfg, {"samples.csv", "report.json"});
}

struct PathSummary {
  double t_final = 0.0;
  double theta_final = 0.0;
  double eta_final = 0.0;
  double w1 = 0.0;
  double w2 = 0.0;
};

void append_records(std::string& sink, const BrownianPath& p) {
  static_assert(sizeof(double) == 8);
  for (std::size_t i = 0; i < p.s.size(); ++i) {
    const double rec[3] = {p.s[i], p.t[i], p.theta[i]};
    sink.append(reinterpret_cast<const char*>(rec), sizeof(rec));
  }
}

void run_simulate(const RunConfig& cfg) {
  std::vector<PathSummary> rows;
  std::string dump;
  const long long steps = static_cast<long long>(std::ceil(cfg.t / cfg.dt));
  if (cfg.driver == "geodesic") {
    // deterministic ray: t(s) = s, angle fixed, eta identically zero
    rows.assign(static_cast<std::size_t>(cfg.n), PathSummary{cfg.t, cfg.theta, 0.0, 0.0, 0.0});
    if (cfg.dump_paths) {
      for (int i = 0; i < cfg.n; ++i)
        for (long long s = 0; s <= steps; ++s) {
          const double time = std::min(static_cast<double>(s) * cfg.dt, cfg.t);
          const double rec[3] = {time, time, cfg.theta};
          dump.append(reinterpret_cast<const char*>(rec), sizeof(rec));
        }
    }
  } else {
    auto summarize = [&](const BrownianPath& p) {
      PathSummary row;
      row.t_final = p.t.back();
      row.theta_final = p.theta.back();
      row.eta_final = p.eta.back();
      row.w1 = p.w1.back();
      row.w2 = p.w2.back();
      return row;
    };
    if (cfg.dump_paths) {
      // the dump wants paths in index order anyway, so stream them serially
      rows.reserve(static_cast<std::size_t>(cfg.n));
      for (int i = 0; i < cfg.n; ++i) {
        SimOptions so;
        so.path_index = static_cast<std::uint64_t>(i);
        const BrownianPath p =
            simulate_path(cfg.seed, cfg.t, cfg.dt, 0.0, SimMode::ItoPolar, so);
        append_records(dump, p);
        rows.push_back(summarize(p));
      }
    } else {
      rows = parallel_map<PathSummary>(
          static_cast<std::size_t>(cfg.n), cfg.threads, [&](std::size_t i) {
            SimOptions so;
            so.path_index = i;
            return summarize(
                simulate_path(cfg.seed, cfg.t, cfg.dt, 0.0, SimMode::ItoPolar, so));
          });
    }
  }

  std::ostringstream csv;
  csv.precision(17);
  csv << "# driver=" << cfg.driver << " n=" << cfg.n << " t=" << cfg.t << " dt=" << cfg.dt
      << " seed=" << cfg.seed << "\n";
  csv << "path,t_final,theta_final,eta_final,w1_final,w2_final\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const PathSummary& r = rows[i];
    csv << i << "," << r.t_final << "," << r.theta_final << "," << r.eta_final << "," << r.w1
        << "," << r.w2 << "\n";
  }
  write_file(fs::path(cfg.out_dir) / "paths.csv", csv.str());
  std::vector<std::string> artifacts = {"paths.csv"};
  if (cfg.dump_paths) {
    write_file(fs::path(cfg.out_dir) / "paths.bin", dump);
    artifacts.push_back("paths.bin");
  }
  write_manifest(cfg, artifacts);
}

void run_poisson(const RunConfig& cfg) {
  const PoissonJob& job = cfg.poisson;
  const RepParams p = job_rep_params(job);
  const Window w = basis_window(p, job.K);
  Eigen::VectorXcd f;
  try {
    f = rhs_from_pairs(w, job.rhs);
  } catch (const std::invalid_argument& e) {
    throw RangeError(std::string("rhs: ") + e.what());
  }
  const double kappa = coercivity_constant(p, job.c, job.K);
  const SpectralSolution sol = solve_poisson(p, job.c, job.K, f);

  njson coeffs;
  for (int i = 0; i < w.size(); ++i)
    coeffs[std::to_string(w.k[static_cast<std::size_t>(i)])] =
        complex_json(sol.u[i]);
  njson j;
  j["kappa"] = kappa;
  j["residual"] = sol.residual;
  j["coefficients"] = std::move(coeffs);
  write_file(fs::path(cfg.out_dir) / "result.json", j.dump(2) + "\n");
  write_manifest(cfg, {"result.json"});
}

void run_origami(const RunConfig& cfg) {
  const Origami o = load_origami(cfg.origami);
  njson j;
  j["n"] = o.n;
  j["genus"] = o.genus;
  j["stratum"] = o.stratum;
  j["h1_dim"] = 2 * o.genus;
  const MonodromyRep full = build_monodromy(o, false);
  j["markings"] = full.marking_h.size();
  try {
    const ComplementRep comp = tautological_complement(o);
    const long long orbit = monodromy_orbit_size(comp.rep);
    njson c;
    c["dim"] = comp.rep.dim;
    c["divisors"] = comp.divisors;
    c["orbit"] = orbit;
    c["finite_monodromy"] = orbit >= 0;
    j["complement"] = std::move(c);
  } catch (const TrivialComplement&) {
    j["complement"] = nullptr;
  }
  write_file(fs::path(cfg.out_dir) / "summary.json", j.dump(2) + "\n");
  write_manifest(cfg, {"summary.json"});
}

void run_report(const RunConfig& cfg) {
  const std::string text = read_file(cfg.samples, "samples");
  const CltSampleSet set = parse_samples_csv(text);
  VarianceReport rep;
  try {
    rep = variance_estimate(set);
  } catch (const std::invalid_argument& e) {
    throw RangeError(std::string("samples: ") + e.what());
  }
  write_file(fs::path(cfg.out_dir) / "report.json",
             report_body(set.lambda_ref, rep, set.driver, set.seed).dump(2) + "\n");
  write_manifest(cfg, {"report.json"});
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& subcommand) {
  njson j;
  try {
    j = njson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("config: top level must be an object");

  RunConfig cfg;
  cfg.subcommand = subcommand;
  if (j.contains("subcommand")) {
    const std::string file_sub = get_string(j, "subcommand", "");
    if (cfg.subcommand.empty()) cfg.subcommand = file_sub;
    else if (cfg.subcommand != file_sub)
      throw ParseError("subcommand: config says '" + file_sub + "' but the command line says '" +
                       cfg.subcommand + "'");
  }
  if (cfg.subcommand.empty()) throw ParseError("subcommand: missing");
  if (cfg.subcommand != "simulate" && cfg.subcommand != "estimate" &&
      cfg.subcommand != "poisson" && cfg.subcommand != "origami" && cfg.subcommand != "report")
    throw RangeError("subcommand: must be simulate, estimate, poisson, origami or report");

  const auto& allowed = allowed_keys(cfg.subcommand);
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      throw UnknownKey(item.key() + ": unknown key for subcommand " + cfg.subcommand);

  cfg.seed = get_u64(j, "seed", cfg.seed);
  const long long threads = get_int(j, "threads", cfg.threads);
  if (threads < 1 || threads > 4096) throw RangeError("threads: must be in 1..4096");
  cfg.threads = static_cast<int>(threads);
  cfg.out_dir = get_string(j, "out", cfg.out_dir);
  if (cfg.out_dir.empty()) throw RangeError("out: must be a nonempty path");

  if (cfg.subcommand == "poisson") {
    parse_poisson(j, cfg.poisson);
    return cfg;
  }
  if (cfg.subcommand == "origami") {
    cfg.origami = get_string(j, "origami", "");
    if (cfg.origami.empty()) throw RangeError("origami: required (builtin name or file path)");
    return cfg;
  }
  if (cfg.subcommand == "report") {
    cfg.samples = get_string(j, "samples", "");
    if (cfg.samples.empty()) throw RangeError("samples: required (path to a samples csv)");
    return cfg;
  }

  // simulate and estimate share the sampling block
  cfg.driver = get_string(j, "driver", cfg.driver);
  const bool stopped_ok = cfg.subcommand == "estimate";
  if (cfg.driver != "geodesic" && cfg.driver != "brownian" &&
      !(stopped_ok && cfg.driver == "brownian-stopped"))
    throw RangeError(std::string("driver: must be geodesic or brownian") +
                     (stopped_ok ? " or brownian-stopped" : ""));
  if (j.contains("theta")) {
    if (cfg.driver != "geodesic") throw RangeError("theta: only valid for the geodesic driver");
    cfg.has_theta = true;
    cfg.theta = get_double(j, "theta", 0.0);
  }

  const long long n = get_int(j, "n", cfg.n);
  if (n < 1 || n > 100000000) throw RangeError("n: must be in 1..1e8");
  cfg.n = static_cast<int>(n);
  cfg.t = get_double(j, "t", cfg.t);
  if (cfg.t <= 0.0 || cfg.t > 1e6) throw RangeError("t: must be in (0, 1e6]");
  cfg.dt = get_double(j, "dt", cfg.dt);
  if (cfg.dt <= 0.0 || cfg.dt > cfg.t) throw RangeError("dt: must be positive and at most t");

  if (cfg.subcommand == "simulate") {
    cfg.dump_paths = get_bool(j, "dump_paths", false);
    return cfg;
  }

  cfg.model = get_string(j, "model", cfg.model);
  if (cfg.model != "tautological" && cfg.model != "origami")
    throw RangeError("model: must be tautological or origami");
  cfg.origami = get_string(j, "origami", "");
  if (cfg.model == "origami" && cfg.origami.empty())
    throw RangeError("origami: required when model is origami");
  if (cfg.model == "tautological" && !cfg.origami.empty())
    throw RangeError("origami: only valid for the origami model");
  const long long k = get_int(j, "k", cfg.k);
  if (k < 1 || k > 64) throw RangeError("k: must be in 1..64");
  if (cfg.model == "tautological" && k != 1)
    throw RangeError("k: the tautological model is rank one");
  cfg.k = static_cast<int>(k);
  cfg.burn_in = get_double(j, "burn_in", cfg.burn_in);
  if (cfg.burn_in < 0.0) throw RangeError("burn_in: must be nonnegative");
  if (j.contains("lambda_ref")) {
    cfg.calibrate = false;
    cfg.lambda_ref = get_double(j, "lambda_ref", 0.0);
  }
  cfg.t_calibrate = get_double(j, "t_calibrate", cfg.t_calibrate);
  if (cfg.calibrate && cfg.t_calibrate < 1000.0)
    throw RangeError("t_calibrate: calibration needs at least 1000 time units");
  return cfg;
}

std::string serialize(const RunConfig& cfg) {
  njson j;
  j["subcommand"] = cfg.subcommand;
  if (cfg.subcommand == "estimate") {
    j["model"] = cfg.model;
    if (cfg.model == "origami") j["origami"] = cfg.origami;
    j["k"] = cfg.k;
  }
  if (cfg.subcommand == "simulate" || cfg.subcommand == "estimate") {
    j["driver"] = cfg.driver;
    if (cfg.has_theta) j["theta"] = cfg.theta;
    j["n"] = cfg.n;
    j["t"] = cfg.t;
    j["dt"] = cfg.dt;
  }
  if (cfg.subcommand == "estimate") {
    j["burn_in"] = cfg.burn_in;
    if (cfg.calibrate) j["t_calibrate"] = cfg.t_calibrate;
    else j["lambda_ref"] = cfg.lambda_ref;
  }
  if (cfg.subcommand == "simulate") j["dump_paths"] = cfg.dump_paths;
  if (cfg.subcommand == "poisson") {
    const PoissonJob& job = cfg.poisson;
    j["series"] = job.series;
    if (job.series == "discrete") {
      j["n"] = job.n;
      j["sign"] = job.sign;
    } else {
      j["s"] = complex_json(job.s);
    }
    j["c"] = job.c;
    j["K"] = job.K;
    njson rhs = njson::object();
    for (const auto& [idx, coeff] : job.rhs) rhs[std::to_string(idx)] = complex_json(coeff);
    j["rhs"] = std::move(rhs);
  }
  if (cfg.subcommand == "origami") j["origami"] = cfg.origami;
  if (cfg.subcommand == "report") j["samples"] = cfg.samples;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["out"] = cfg.out_dir;
  return j.dump(2) + "\n";
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_hash(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(serialize(cfg))));
  return buf;
}

const char* toolkit_version() { return "0.1.0"; }

CltSampleSet parse_samples_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw ParseError("samples csv: missing '# key=value ...' metadata header");

  CltSampleSet set;
  std::set<std::string> found;
  std::istringstream header(line.substr(2));
  std::string token;
  while (header >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos)
      throw ParseError("samples csv: malformed header token '" + token + "'");
    const std::string key = token.substr(0, eq);
    const std::string val = token.substr(eq + 1);
    if (key == "driver") {
      if (val != "geodesic" && val != "brownian" && val != "brownian-stopped")
        throw ParseError("samples csv: unknown driver '" + val + "'");
      set.driver = driver_kind(val);
    } else if (key == "n") {
      set.n = static_cast<int>(parse_real_token(val, "samples csv: n"));
    } else if (key == "t") {
      set.t = parse_real_token(val, "samples csv: t");
    } else if (key == "k") {
      set.k = static_cast<int>(parse_real_token(val, "samples csv: k"));
    } else if (key == "lambda_ref") {
      set.lambda_ref = parse_real_token(val, "samples csv: lambda_ref");
    } else if (key == "seed") {
      set.seed = static_cast<std::uint64_t>(std::strtoull(val.c_str(), nullptr, 10));
    } else if (key == "not_hit_retries") {
      set.not_hit_retries = static_cast<int>(parse_real_token(val, "samples csv: not_hit_retries"));
    } else {
      throw ParseError("samples csv: unknown header key '" + key + "'");
    }
    found.insert(key);
  }
  for (const char* need : {"driver", "n", "t", "k", "lambda_ref", "seed"})
    if (!found.count(need))
      throw ParseError(std::string("samples csv: header is missing '") + need + "'");

  if (!std::getline(in, line) || line != "value")
    throw ParseError("samples csv: expected the 'value' column header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    set.values.push_back(parse_real_token(line, "samples csv: value"));
  }
  if (static_cast<int>(set.values.size()) != set.n)
    throw ParseError("samples csv: header says n=" + std::to_string(set.n) + " but found " +
                     std::to_string(set.values.size()) + " values");
  return set;
}

std::string error_json(const std::string& type, const std::string& message) {
  njson j;
  j["error"] = type;
  j["message"] = message;
  return j.dump() + "\n";
}

int run(const RunConfig& cfg) {
  try {
    fs::create_directories(cfg.out_dir);
    if (cfg.subcommand == "simulate") run_simulate(cfg);
    else if (cfg.subcommand == "estimate") run_estimate(cfg);
    else if (cfg.subcommand == "poisson") run_poisson(cfg);
    else if (cfg.subcommand == "origami") run_origami(cfg);
    else if (cfg.subcommand == "report") run_report(cfg);
    else throw RangeError("subcommand: must be simulate, estimate, poisson, origami or report");
    return 0;
  } catch (const UnknownKey& e) {
    std::cerr << error_json("UnknownKey", e.what());
    return 2;
  } catch (const RangeError& e) {
    std::cerr << error_json("RangeError", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::cerr << error_json("ParseError", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::cerr << error_json("RuntimeError", e.what());
    return 1;
  }
}

}  // namespace kzclt
