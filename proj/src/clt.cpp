#include "kzclt/clt.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "kzclt/brownian.hpp"
#include "kzclt/parallel.hpp"
#include "kzclt/rng.hpp"
#include "kzclt/stats.hpp"

namespace kzclt {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose_tag, std::uint64_t index) {
  return Rng(seed, purpose_tag, index).next_u64();
}

// Gaussian matrix with orthonormalized columns: Haar on the k-frame bundle.
Eigen::MatrixXd haar_frame(int dim, int k, std::uint64_t seed, std::uint64_t index) {
  Rng rng(seed, purpose::frame, index);
  Eigen::MatrixXd g(dim, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < dim; ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(dim, k);
}

// Base point for one origami run: evolve the standard base frame by an
// auxiliary Brownian segment keyed by (seed, burnin, index), discarding the
// homology it accumulates.
CocycleState burned_base(const OrigamiCocycle& coc, std::uint64_t seed, std::uint64_t index,
                         const CltOptions& opts) {
  CocycleState st = coc.initial_state();
  if (opts.burn_in <= 0.0) return st;
  const std::uint64_t bs = derive_seed(seed, purpose::burnin, index);
  WienerPair noise(bs, 0, opts.dt, SimMode::ItoPolar, SimOptions{});
  const auto steps = static_cast<long long>(std::ceil(opts.burn_in / opts.dt));
  for (long long i = 0; i < steps; ++i) {
    auto [dw1, dw2] = noise.next();
    coc.step(st, brownian_increment(dw1, dw2));
    if (coc.wants_flush(st)) (void)coc.flush(st);
  }
  (void)coc.flush(st);
  st.stats = CuspStats{};
  return st;
}

struct RunOut {
  double value = 0.0;
  double sigma = 0.0;
  double tau = 0.0;
  double w1 = 0.0;
  double w2 = 0.0;
  double exit_theta = 0.0;
  int retries = 0;
};

// Chart point of the unreduced increment product, kept as the half-plane
// orbit w = free^T i in (x, log y) coordinates.  The raw 2x2 product loses
// its determinant to cancellation once the radius passes ~18 (entries grow
// like e^r), while the log-domain Moebius update stays accurate to radius
// ~350: the imaginary part of (a w + c) conj(b w + d) telescopes to
// y det(u), so log y accumulates without forming the large product.
struct ChartTracker {
  double x = 0.0;
  double logy = 0.0;

  void apply(const GroupElement& u) {
    const double y = std::exp(logy);
    const double rn = u.a * x + u.c;   // real part of the numerator
    const double rd = u.b * x + u.d;   // real part of the denominator
    const double den2 = rd * rd + u.b * u.b * y * y;
    const double det = u.a * u.d - u.b * u.c;
    if (!(den2 > 0.0) || !(det > 0.0)) throw NonFinite("chart point left the half plane");
    x = (rn * rd + u.a * u.b * y * y) / den2;
    logy += std::log(det) - std::log(den2);
    if (!std::isfinite(x) || !std::isfinite(logy))
      throw NonFinite("chart point left the finite range");
  }

  // hyperbolic distance (curvature -4) from i, exact in the log domain
  double radius() const {
    const double y = std::exp(logy);
    const double q = (x * x + (y - 1.0) * (y - 1.0)) / (2.0 * y);
    return 0.5 * std::acosh(1.0 + q);
  }

  // boundary angle in the convention of GeodesicSpec: the increment word of
  // geodesic_increment(theta, dt) exits the disk at arg = -theta, so negate
  // the disk argument of (w - i)/(w + i)
  double exit_angle() const {
    const double y = std::exp(logy);
    return std::atan2(y + 1.0, x) - std::atan2(y - 1.0, x);
  }
};

double interp(double lo, double hi, double w) { return lo + w * (hi - lo); }

// How far to let a stopped run wander before counting a horizon extension:
// the crossing sits near T with sqrt(T) fluctuation.
double first_horizon(double t) { return t + 4.0 * std::sqrt(t) + 8.0; }

RunOut taut_fixed(DriverKind driver, std::uint64_t seed, std::uint64_t index, double t,
                  double lambda_ref, const CltOptions& opts) {
  RunOut out;
  if (driver == DriverKind::Geodesic) {
    out.sigma = t;  // sigma(g_t) = t exactly, any direction
  } else {
    SimOptions o;
    o.path_index = index;
    const BrownianPath p = simulate_path(seed, t, opts.dt, 0.0, SimMode::ItoPolar, o);
    out.sigma = p.t.back();
  }
  out.value = (out.sigma - lambda_ref * t) / std::sqrt(t);
  return out;
}

RunOut taut_stopped(std::uint64_t seed, std::uint64_t index, double t, double lambda_ref,
                    const CltOptions& opts) {
  SimOptions o;
  o.path_index = index;
  double horizon = first_horizon(t);
  for (int attempt = 0;; ++attempt) {
    // re-simulating with a longer horizon replays the same Wiener draws, so
    // the retry only appends to the path
    const BrownianPath p = simulate_path(seed, horizon, opts.dt, 0.0, SimMode::ItoPolar, o);
    try {
      const StoppingRecord rec = stopping_time(p, t);
      RunOut out;
      out.sigma = t;  // the radius at the crossing is T by definition
      out.tau = rec.tau;
      out.w1 = rec.w1_at_tau;
      const std::size_t i = rec.index;
      out.w2 = i == 0 ? p.w2[0] : interp(p.w2[i - 1], p.w2[i], rec.weight);
      out.exit_theta = i == 0 ? p.theta[0] : interp(p.theta[i - 1], p.theta[i], rec.weight);
      out.value = (out.sigma - lambda_ref * t) / std::sqrt(t);
      out.retries = attempt;
      return out;
    } catch (const NotHit&) {
      if (attempt >= 8) throw;
      horizon *= 2.0;
    }
  }
}

RunOut origami_fixed(const OrigamiCocycle& coc, int k, DriverKind driver, std::uint64_t seed,
                     std::uint64_t index, double t, double lambda_ref, const CltOptions& opts,
                     const double* forced_theta = nullptr) {
  const CocycleState base = burned_base(coc, seed, index, opts);
  const Eigen::MatrixXd v0 = haar_frame(coc.dim(), k, seed, index);
  DriverSpec spec;
  if (driver == DriverKind::Geodesic) {
    double theta;
    if (forced_theta) {
      theta = *forced_theta;
    } else {
      Rng dir(seed, purpose::direction, index);
      theta = kTwoPi * dir.uniform01();
    }
    spec = GeodesicSpec{theta};
  } else {
    spec = ChartBrownianSpec{seed, index};
  }
  // match the series step count so the single stride lands on the last step
  const auto steps = static_cast<int>(std::llround(t / opts.dt));
  const SigmaSeries series = sigma_series(coc, base, v0, spec, t, opts.dt, std::max(1, steps));
  RunOut out;
  out.sigma = series.value.back();
  out.value = (out.sigma - lambda_ref * t) / std::sqrt(t);
  return out;
}

RunOut origami_stopped(const OrigamiCocycle& coc, int k, std::uint64_t seed,
                       std::uint64_t index, double t, double lambda_ref,
                       const CltOptions& opts) {
  CocycleState st = burned_base(coc, seed, index, opts);
  SigmaTracker tracker(haar_frame(coc.dim(), k, seed, index));
  WienerPair noise(seed, index, opts.dt, SimMode::ItoPolar, SimOptions{});
  ChartTracker chart;  // unreduced displacement from the base point
  double cap = first_horizon(t);
  const double hard_cap = 1e6;
  const double recon_floor = 0.05;  // skip the coth singularity near the base
  double s = 0.0, w1 = 0.0, w2 = 0.0;
  double prev_r = 0.0, prev_sigma = tracker.sigma, prev_w1 = 0.0, prev_w2 = 0.0;
  int retries = 0;
  while (true) {
    auto [dw1, dw2] = noise.next();
    const GroupElement u = brownian_increment(dw1, dw2);
    chart.apply(u);
    coc.step(st, u);
    tracker.absorb(coc.flush(st));
    s += opts.dt;
    // The radius of a chart run is driven by an angle-dependent mixture of
    // the two raw streams, so the covariance pairing needs the radial
    // Wiener of the polar decomposition, recovered Levy-style from the
    // radius increments themselves.  The raw second stream is kept as a
    // diagnostic stand-in for the angular driver.
    w2 += dw2;
    const double r = chart.radius();
    if (prev_r > recon_floor)
      w1 += (r - prev_r) - 1.0 / std::tanh(2.0 * prev_r) * opts.dt;
    if (!std::isfinite(r)) throw NonFinite("stopped run radius left the finite range");
    if (r >= t) {
      const double w = r > prev_r ? (t - prev_r) / (r - prev_r) : 1.0;
      RunOut out;
      out.tau = s - opts.dt + w * opts.dt;
      out.sigma = interp(prev_sigma, tracker.sigma, w);
      out.w1 = interp(prev_w1, w1, w);
      out.w2 = interp(prev_w2, w2, w);
      out.exit_theta = chart.exit_angle();
      out.value = (out.sigma - lambda_ref * t) / std::sqrt(t);
      out.retries = retries;
      return out;
    }
    prev_r = r;
    prev_sigma = tracker.sigma;
    prev_w1 = w1;
    prev_w2 = w2;
    if (s >= cap) {
      if (cap >= hard_cap) throw NotHit("stopped run never reached the target radius");
      cap *= 2.0;
      ++retries;
    }
  }
}

RunOut one_run(const CltModel& model, int k, DriverKind driver, std::uint64_t seed,
               std::uint64_t index, double t, double lambda_ref, const CltOptions& opts) {
  if (!model.cocycle) {
    return driver == DriverKind::BrownianStopped
               ? taut_stopped(seed, index, t, lambda_ref, opts)
               : taut_fixed(driver, seed, index, t, lambda_ref, opts);
  }
  if (driver == DriverKind::BrownianStopped)
    return origami_stopped(*model.cocycle, k, seed, index, t, lambda_ref, opts);
  const double* forced =
      opts.geodesic_theta && driver == DriverKind::Geodesic ? &*opts.geodesic_theta : nullptr;
  return origami_fixed(*model.cocycle, k, driver, seed, index, t, lambda_ref, opts, forced);
}

std::vector<double> block_slopes(const SigmaSeries& series, int nblocks) {
  // series sampled at block boundaries: nblocks + 1 points including time 0
  if (static_cast<int>(series.value.size()) < nblocks + 1)
    throw std::invalid_argument("calibration series shorter than the block count");
  std::vector<double> slopes(nblocks);
  for (int b = 0; b < nblocks; ++b) {
    const double dtb = series.time[b + 1] - series.time[b];
    slopes[b] = (series.value[b + 1] - series.value[b]) / dtb;
  }
  return slopes;
}

}  // namespace

const char* driver_name(DriverKind d) {
  switch (d) {
    case DriverKind::Geodesic: return "geodesic";
    case DriverKind::Brownian: return "brownian";
    case DriverKind::BrownianStopped: return "brownian-stopped";
  }
  return "unknown";
}

LambdaEstimate calibrate_lambda(const CltModel& model, int k, double t_long,
                                std::uint64_t seed, const CltOptions& opts) {
  if (t_long < 1e3) throw std::invalid_argument("calibration horizon must be >= 1000");
  const std::uint64_t cal_seed = derive_seed(seed, purpose::calibrate, 0);
  const int nblocks = 20;
  SigmaSeries series;
  if (!model.cocycle) {
    SimOptions o;
    const BrownianPath p = simulate_path(cal_seed, t_long, opts.dt, 0.0, SimMode::ItoPolar, o);
    const int steps = static_cast<int>(p.s.size()) - 1;
    series = sigma_series_tautological_brownian(p, std::max(1, steps / nblocks));
  } else {
    const OrigamiCocycle& coc = *model.cocycle;
    if (k < 1 || k > coc.dim()) throw std::invalid_argument("frame size out of range");
    const CocycleState base = coc.initial_state();
    const Eigen::MatrixXd v0 = haar_frame(coc.dim(), k, cal_seed, 0);
    const auto steps = static_cast<int>(std::llround(t_long / opts.dt));
    series = sigma_series(coc, base, v0, ChartBrownianSpec{cal_seed, 0}, t_long, opts.dt,
                          std::max(1, steps / nblocks));
  }
  const std::vector<double> slopes = block_slopes(series, nblocks);
  LambdaEstimate est;
  est.lambda = mean(slopes);
  est.se = std::sqrt(variance(slopes) / nblocks);
  est.t_long = series.time.back();
  return est;
}

CltSampleSet clt_samples(const CltModel& model, DriverKind driver, int n, double t,
                         double lambda_ref, int k, std::uint64_t seed,
                         const CltOptions& opts) {
  if (n < 100) throw std::invalid_argument("need at least 100 runs");
  if (t <= 0.0 || opts.dt <= 0.0) throw std::invalid_argument("need positive T and dt");
  if (model.cocycle && (k < 1 || k > model.cocycle->dim()))
    throw std::invalid_argument("frame size out of range");
  const auto runs = parallel_map<RunOut>(
      static_cast<std::size_t>(n), opts.threads, [&](std::size_t i) {
        return one_run(model, k, driver, seed, static_cast<std::uint64_t>(i), t, lambda_ref,
                       opts);
      });
  CltSampleSet set;
  set.driver = driver;
  set.n = n;
  set.t = t;
  set.k = model.cocycle ? k : 1;
  set.lambda_ref = lambda_ref;
  set.seed = seed;
  set.values.reserve(runs.size());
  const bool stopped = driver == DriverKind::BrownianStopped;
  for (const RunOut& r : runs) {
    if (!std::isfinite(r.value)) throw NonFinite("non-finite deviation sample");
    set.values.push_back(r.value);
    if (stopped) {
      set.sigmas.push_back(r.sigma);
      set.taus.push_back(r.tau);
      set.w1s.push_back(r.w1);
      set.w2s.push_back(r.w2);
      set.not_hit_retries += r.retries;
    }
  }
  return set;
}

VarianceReport variance_estimate(const CltSampleSet& samples) {
  if (samples.n < 100 || static_cast<int>(samples.values.size()) != samples.n)
    throw std::invalid_argument("variance estimate needs a sample set with N >= 100");
  VarianceReport rep;
  rep.n = samples.n;
  rep.t = samples.t;
  rep.v = variance(samples.values);
  Rng rng(samples.seed, purpose::bootstrap, 0);
  rep.ci = bootstrap_ci(
      samples.values, [](const std::vector<double>& xs) { return variance(xs); }, 2000, 0.95,
      rng);
  // the percentile CI practically always straddles the point estimate;
  // widen in the rare resampling corner so the containment contract holds
  rep.ci.first = std::min(rep.ci.first, rep.v);
  rep.ci.second = std::max(rep.ci.second, rep.v);
  if (rep.v < 1e-12) {
    std::size_t off = 0;
    for (double x : samples.values)
      if (x != 0.0) ++off;
    rep.ks = static_cast<double>(off) / static_cast<double>(samples.n);
  } else {
    rep.ks = ks_distance_normal(samples.values, 0.0, std::sqrt(rep.v));
  }
  return rep;
}

RelationReport variance_relation(const VarianceReport& report_g,
                                 const VarianceReport& report_rho, double lambda) {
  RelationReport rel;
  const double l2 = lambda * lambda;
  rel.residual = report_g.v - (report_rho.v - l2);
  rel.ci = {report_g.ci.first - (report_rho.ci.second - l2),
            report_g.ci.second - (report_rho.ci.first - l2)};
  rel.violated = !(rel.ci.first <= 0.0 && 0.0 <= rel.ci.second);
  return rel;
}

CovarianceReport covariance_check(const CltModel& model, int n, double t, double lambda,
                                  std::uint64_t seed, bool swap_stream,
                                  const CltOptions& opts) {
  const CltSampleSet set =
      clt_samples(model, DriverKind::BrownianStopped, n, t, lambda, 1, seed, opts);
  const double rt = std::sqrt(t);
  std::vector<double> xs(set.values.size()), ys(set.values.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = (set.sigmas[i] - lambda * set.taus[i]) / rt;
    ys[i] = -lambda * (swap_stream ? set.w2s[i] : set.w1s[i]) / rt;
  }
  const auto cov_of = [](const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = mean(a), mb = mean(b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - ma) * (b[i] - mb);
    return acc / static_cast<double>(a.size() - 1);
  };
  CovarianceReport rep;
  rep.n = n;
  rep.t = t;
  rep.not_hit_retries = set.not_hit_retries;
  rep.cov = cov_of(xs, ys);
  // paired bootstrap: resample run indices, recompute the covariance
  Rng rng(seed, purpose::bootstrap, 1);
  std::vector<double> stats(2000);
  std::vector<double> ax(xs.size()), ay(ys.size());
  for (int r = 0; r < 2000; ++r) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const std::size_t j = rng.below(xs.size());
      ax[i] = xs[j];
      ay[i] = ys[j];
    }
    stats[r] = cov_of(ax, ay);
  }
  rep.ci = {quantile(stats, 0.025), quantile(stats, 0.975)};
  rep.ci.first = std::min(rep.ci.first, rep.cov);
  rep.ci.second = std::max(rep.ci.second, rep.cov);
  return rep;
}

double interval_sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("empty sample set");
  constexpr int kGrid = 20;
  std::array<double, kGrid> grid;
  for (int j = 0; j < kGrid; ++j)
    grid[j] = -5.0 + 10.0 * static_cast<double>(j) / (kGrid - 1);
  // count once per endpoint, then interval probabilities differ by prefix sums
  const auto cdf_at = [&](const std::vector<double>& xs) {
    std::array<double, kGrid> c{};
    for (double x : xs)
      for (int j = 0; j < kGrid; ++j)
        if (x <= grid[j]) ++c[j];
    for (int j = 0; j < kGrid; ++j) c[j] /= static_cast<double>(xs.size());
    return c;
  };
  const std::array<double, kGrid> ca = cdf_at(a), cb = cdf_at(b);
  double sup = 0.0;
  for (int i = 0; i < kGrid; ++i)
    for (int j = i + 1; j < kGrid; ++j) {
      // P(x in (g_i, g_j]) empirically; the open/closed choice is shared by
      // both sets so identical sets give exactly zero
      const double pa = ca[j] - ca[i];
      const double pb = cb[j] - cb[i];
      sup = std::max(sup, std::abs(pa - pb));
    }
  return sup;
}

double stopped_vs_fixed_check(const CltModel& model, int n, double t, std::uint64_t seed,
                              const CltOptions& opts) {
  if (n < 100) throw std::invalid_argument("need at least 100 runs");
  double lambda;
  if (!model.cocycle) {
    lambda = TautologicalModel::lambda();
  } else {
    lambda = calibrate_lambda(model, 1, std::max(1e3, 10.0 * t), seed, opts).lambda;
  }
  const auto runs = parallel_map<std::pair<double, double>>(
      static_cast<std::size_t>(n), opts.threads, [&](std::size_t i) {
        const auto idx = static_cast<std::uint64_t>(i);
        RunOut stop = !model.cocycle
                          ? taut_stopped(seed, idx, t, lambda, opts)
                          : origami_stopped(*model.cocycle, 1, seed, idx, t, lambda, opts);
        const double stopped_value = stop.value;
        double geodesic_value;
        if (!model.cocycle) {
          geodesic_value = (t - lambda * t) / std::sqrt(t);
        } else {
          const RunOut geo = origami_fixed(*model.cocycle, 1, DriverKind::Geodesic, seed, idx,
                                           t, lambda, opts, &stop.exit_theta);
          geodesic_value = geo.value;
        }
        return std::pair<double, double>{geodesic_value, stopped_value};
      });
  std::vector<double> gs(runs.size()), rs(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    gs[i] = runs[i].first;
    rs[i] = runs[i].second;
  }
  return interval_sup_diff(gs, rs);
}

std::string samples_csv(const CltSampleSet& samples) {
  std::ostringstream out;
  out.precision(17);
  out << "# driver=" << driver_name(samples.driver) << " n=" << samples.n
      << " t=" << samples.t << " k=" << samples.k << " lambda_ref=" << samples.lambda_ref
      << " seed=" << samples.seed << " not_hit_retries=" << samples.not_hit_retries << "\n";
  out << "value\n";
  for (double v : samples.values) out << v << "\n";
  return out.str();
}

}  // namespace kzclt
