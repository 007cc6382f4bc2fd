#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "kzclt/config.hpp"

namespace {

struct SubFlags {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 1;
  CLI::App* app = nullptr;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulation and estimation toolkit for cocycle growth over "
               "hyperbolic geodesic and Brownian drivers"};
  app.set_version_flag("--version", kzclt::toolkit_version());
  app.require_subcommand(1);

  const std::pair<const char*, const char*> subs[] = {
      {"simulate", "integrate hyperbolic Brownian or geodesic paths"},
      {"estimate", "run a CLT sample set and write its variance report"},
      {"poisson", "coercivity constant and truncated Poisson solve for one representation"},
      {"origami", "validate a square-tiled surface and summarize its monodromy"},
      {"report", "recompute a variance report from a stored samples csv"},
  };
  std::vector<SubFlags> flags(std::size(subs));
  for (std::size_t i = 0; i < std::size(subs); ++i) {
    CLI::App* sub = app.add_subcommand(subs[i].first, subs[i].second);
    sub->add_option("--config", flags[i].config_path, "JSON config file")
        ->required();
    sub->add_option("--out", flags[i].out_dir, "output directory (overrides config)");
    sub->add_option("--seed", flags[i].seed, "master seed (overrides config)");
    sub->add_option("--threads", flags[i].threads, "worker threads (must not change results)")
        ->check(CLI::Range(1, 4096));
    flags[i].app = sub;
  }

  CLI11_PARSE(app, argc, argv);

  const SubFlags* chosen = nullptr;
  for (const auto& f : flags)
    if (f.app->parsed()) chosen = &f;
  if (!chosen) return 2;  // unreachable behind require_subcommand

  std::ifstream in(chosen->config_path, std::ios::binary);
  if (!in) {
    std::cerr << kzclt::error_json("IoError",
                                   "cannot read config '" + chosen->config_path + "'");
    return 2;
  }
  std::ostringstream buf;
  buf << in.rdbuf();

  kzclt::RunConfig cfg;
  try {
    cfg = kzclt::parse_config(buf.str(), chosen->app->get_name());
  } catch (const kzclt::UnknownKey& e) {
    std::cerr << kzclt::error_json("UnknownKey", e.what());
    return 2;
  } catch (const kzclt::RangeError& e) {
    std::cerr << kzclt::error_json("RangeError", e.what());
    return 2;
  } catch (const kzclt::ParseError& e) {
    std::cerr << kzclt::error_json("ParseError", e.what());
    return 2;
  }
  if (chosen->app->count("--out")) cfg.out_dir = chosen->out_dir;
  if (chosen->app->count("--seed")) cfg.seed = chosen->seed;
  if (chosen->app->count("--threads")) cfg.threads = chosen->threads;
  return kzclt::run(cfg);
}
