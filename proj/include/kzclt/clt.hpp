// Monte Carlo harness for the central limit statistics of the log-norm
// cocycle.  A "model" is either the tautological closed form (sigma = the
// hyperbolic radius, lambda = 1) or an origami cocycle restricted to a
// k-frame bundle.  The harness produces normalized deviation samples
// (sigma_k - lambda_ref T) / sqrt(T) under three drivers (geodesic to time
// T, Brownian to time T, Brownian stopped at radius T), estimates the
// limiting variances with bootstrap intervals, and probes two structural
// identities: V_g = V_rho - lambda^2 and the stopping-time covariance
// Cov(M_tau / sqrt(T), -lambda W^(1)_tau / sqrt(T)) -> -lambda^2.
//
// lambda_ref is always a plug-in from an independent calibration run;
// samples are never centered by an estimate computed from themselves.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kzclt/cocycle.hpp"

namespace kzclt {

// cocycle == nullptr selects the tautological model, whose statistic is the
// radius itself (any k argument is ignored).  The caller keeps the cocycle
// alive for the duration of the runs.
struct CltModel {
  const OrigamiCocycle* cocycle = nullptr;
};

enum class DriverKind { Geodesic, Brownian, BrownianStopped };

const char* driver_name(DriverKind d);

struct CltOptions {
  double dt = 1e-3;
  // auxiliary Brownian segment run from the standard base frame to sample
  // the base point of each origami run (time units, not steps)
  double burn_in = 200.0;
  int threads = 1;
  // fixed direction for geodesic runs; unset means one uniform draw per run
  std::optional<double> geodesic_theta{};
};

struct LambdaEstimate {
  double lambda = 0.0;
  double se = 0.0;      // block-averaged standard error
  double t_long = 0.0;
};

// Long-orbit Brownian average of sigma_k / T with block error bars.  Uses a
// seed stream separate from the CLT runs so the plug-in center stays
// independent of the deviation samples.  Requires t_long >= 1000.
LambdaEstimate calibrate_lambda(const CltModel& model, int k, double t_long,
                                std::uint64_t seed, const CltOptions& opts = {});

struct CltSampleSet {
  std::vector<double> values;  // (sigma_k - lambda_ref * T) / sqrt(T)
  // stopped runs also record the raw ingredients per run (else empty):
  std::vector<double> sigmas;  // sigma at the stopping point
  std::vector<double> taus;    // hitting time of radius T
  // w1s holds the radial Wiener of the polar decomposition at tau: the
  // native stream for polar runs, the Levy reconstruction (radius increment
  // minus coth drift) for chart runs whose radius mixes both raw streams.
  // w2s holds the angular stream (raw second stream for chart runs, where
  // it serves only as an independence diagnostic).
  std::vector<double> w1s;
  std::vector<double> w2s;
  DriverKind driver = DriverKind::Brownian;
  int n = 0;
  double t = 0.0;
  int k = 1;
  double lambda_ref = 0.0;
  std::uint64_t seed = 0;
  int not_hit_retries = 0;     // horizon extensions across all stopped runs
};

// N independent runs of the chosen driver.  Origami base points come from a
// burn-in segment per run, fiber frames are Haar on the k-frame bundle,
// geodesic directions are uniform on the circle; run i draws every stream
// from (seed, purpose, i) so the set is reproducible bit for bit and
// independent of the thread count.
CltSampleSet clt_samples(const CltModel& model, DriverKind driver, int n, double t,
                         double lambda_ref, int k, std::uint64_t seed,
                         const CltOptions& opts = {});

struct VarianceReport {
  double v = 0.0;
  std::pair<double, double> ci{0.0, 0.0};  // bootstrap 95%, widened to contain v
  // KS distance against the mean-zero Gaussian with variance v.  When v is
  // degenerate (< 1e-12) this is the empirical mass off zero.  Note the
  // reference is centered, not fitted; fit the mean separately when the
  // deviation of interest has a finite-T bias.
  double ks = 0.0;
  int n = 0;
  double t = 0.0;
};

// Unbiased sample variance with a 2000-resample percentile bootstrap CI.
VarianceReport variance_estimate(const CltSampleSet& samples);

struct RelationReport {
  double residual = 0.0;               // V_g - (V_rho - lambda^2)
  std::pair<double, double> ci{0.0, 0.0};
  bool violated = false;               // true when 0 is outside the CI
};

RelationReport variance_relation(const VarianceReport& report_g,
                                 const VarianceReport& report_rho, double lambda);

struct CovarianceReport {
  double cov = 0.0;
  std::pair<double, double> ci{0.0, 0.0};  // paired bootstrap 95%
  int n = 0;
  double t = 0.0;
  int not_hit_retries = 0;
};

// Empirical covariance of ((sigma(rho_tau) - tau lambda)/sqrt(T),
// -lambda W^(1)_tau / sqrt(T)) over stopped runs at k = 1; the limit is
// -lambda^2.  swap_stream replaces W^(1) by the independent W^(2), sending
// it to 0.
CovarianceReport covariance_check(const CltModel& model, int n, double t, double lambda,
                                  std::uint64_t seed, bool swap_stream = false,
                                  const CltOptions& opts = {});

// sup over interval pairs [g_i, g_j] from a fixed 20-point grid on [-5, 5]
// of |empirical P(a in [g_i,g_j]) - empirical P(b in [g_i,g_j])|.
double interval_sup_diff(const std::vector<double>& a, const std::vector<double>& b);

// Compares the geodesic-at-time-T law against the Brownian-stopped-at-
// radius-T law (k = 1) on the interval grid, with the geodesic direction
// of run i matched to the exit direction of its stopped run.  Both laws
// use the fixed centering (sigma - lambda T)/sqrt(T): stopping at radius T
// trades the clock fluctuation for the radius, which is exactly why the
// stopped law approaches the geodesic one instead of the wider fixed-time
// Brownian law.  For the tautological model both collapse to the same
// point mass and the difference is identically zero.
double stopped_vs_fixed_check(const CltModel& model, int n, double t, std::uint64_t seed,
                              const CltOptions& opts = {});

// One value per line after '#' metadata header lines.
std::string samples_csv(const CltSampleSet& samples);

}  // namespace kzclt
