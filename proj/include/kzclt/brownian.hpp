#pragma once
// Leafwise hyperbolic Brownian motion in polar coordinates, curvature -4.
//
// The radial and angular parts solve
//     dt(s)     = dW^(1)_s + coth(2 t(s)) ds
//     dtheta(s) = (2 / sinh(2 t(s))) dW^(2)_s
// integrated by Euler-Maruyama while t >= epsilon.  Below epsilon the
// coth drift is stiff (it behaves like the 2D Bessel term 1/(2t)), so each
// step there uses a Euclidean chart aligned with the current direction:
// advance to (t + dW1 + resid(t) dt, dW2) with resid(t) = coth(2t) - 1/(2t),
// then read the new radius and angle increment off that planar point.  The
// chart realizes the 1/(2t) part of the drift geometrically (so the radius
// can never go negative) and its angular distortion is O(t^2).
//
// The eta process t(s) - W^(1)_s - s is tracked by recurrence, not by
// subtraction: a polar step adds 2 dt / expm1(4t) (the exact positive
// integrand (coth(2t) - 1) dt), and the stored radius is then *defined* as
// s + W1 + eta, so the identity eta = t - W1 - s is exact by construction
// and tail increments far below the absolute resolution of eta itself stay
// meaningful (see eta_increment).  A chart step instead measures its eta
// increment from the realized radius; those increments have random sign
// (the Bessel part of the drift arrives through the noise), so eta is only
// guaranteed nondecreasing across polar steps.
//
// In ode-frozen mode both Wiener streams are zero.  Above epsilon that is
// the ODE dt/ds = coth(2t) with closed form cosh(2 t(s)) = cosh(2 t0) e^{2s};
// below epsilon the frozen chart follows dt/ds = coth(2t) - 1/(2t) because
// the noise that would realize the Bessel term is switched off (in
// particular a frozen path started at t = 0 stays at 0).

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "kzclt/rng.hpp"

namespace kzclt {

struct NonFinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotHit : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TooShort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SimMode { ItoPolar, OdeFrozen };

struct SimOptions {
  std::uint64_t path_index = 0;  // keys the per-path Wiener substreams
  double epsilon = 0.05;         // polar/chart switch radius
  double theta_init = 0.0;
  double noise_scale = 1.0;      // scales both streams (testing knob)
  bool radial_noise = true;      // W^(1) on/off (testing knob)
  bool angular_noise = true;     // W^(2) on/off (testing knob)
};

// Two independent Wiener increment streams, derived from
// (seed, stream purpose, path_index).  Disabling one stream or changing the
// path count never perturbs the draws of the other.
struct WienerPair {
  WienerPair(std::uint64_t seed, std::uint64_t path_index, double dt, SimMode mode,
             const SimOptions& opts)
      : radial(seed, purpose::radial, path_index),
        angular(seed, purpose::angular, path_index) {
    const double base = std::sqrt(dt) * opts.noise_scale;
    const bool frozen = mode == SimMode::OdeFrozen;
    scale1 = (frozen || !opts.radial_noise) ? 0.0 : base;
    scale2 = (frozen || !opts.angular_noise) ? 0.0 : base;
  }

  std::pair<double, double> next() {
    return {scale1 == 0.0 ? 0.0 : scale1 * radial.normal(),
            scale2 == 0.0 ? 0.0 : scale2 * angular.normal()};
  }

  Rng radial;
  Rng angular;
  double scale1 = 0.0;
  double scale2 = 0.0;
};

struct BrownianPath {
  std::vector<double> s;      // sample times, s[i] = i * dt
  std::vector<double> t;      // hyperbolic radius, >= 0
  std::vector<double> theta;  // angle in [0, 2pi)
  std::vector<double> w1;     // cumulative W^(1)
  std::vector<double> w2;     // cumulative W^(2)
  std::vector<double> eta;    // eta[i] = t[i] - w1[i] - s[i] by construction
  // polar_step[i] == 1 if the step from i-1 to i used the polar scheme
  // (polar_step[0] is unused filler).
  std::vector<std::uint8_t> polar_step;
  double dt = 0.0;
  double t_init = 0.0;
  SimMode mode = SimMode::ItoPolar;
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
  double epsilon = 0.05;
};

// Integrate over [0, n dt] with n = ceil(horizon / dt).  Throws NonFinite if
// the state leaves the finite range (step size too large for the noise
// scale); reduce dt in that case.
BrownianPath simulate_path(std::uint64_t seed, double horizon, double dt, double t_init,
                           SimMode mode, const SimOptions& opts = {});

struct StoppingRecord {
  double tau = 0.0;
  std::size_t index = 0;  // first sample index with t >= T (0 when T <= t_init)
  double weight = 0.0;    // linear interpolation weight toward `index`
  double w1_at_tau = 0.0;
  double eta_at_tau = 0.0;
};

// First crossing of radius T, linearly interpolated between the bracketing
// samples.  The same weight is applied to tau, W1 and eta, so the identity
// tau + W1(tau) + eta(tau) = T carries over exactly up to rounding.
// T <= t(0) returns the s = 0 record.  Throws NotHit when the path never
// reaches radius T within its horizon (extend the horizon and retry).
StoppingRecord stopping_time(const BrownianPath& path, double T);

inline const std::vector<double>& eta_series(const BrownianPath& path) { return path.eta; }

// Signed eta increment accumulated over sample times in (s_lo, s_hi], built
// from the per-step recurrence.  Unlike differencing the stored eta values
// (which sit on top of an O(1) offset and lose everything below ~1e-16 of
// it), this resolves tails of order e^{-2s}.
double eta_increment(const BrownianPath& path, double s_lo, double s_hi);

// Circular mean of the angle over the trailing 10% of samples.  Throws
// TooShort when the final radius is below radius_threshold.
double exit_direction(const BrownianPath& path, double radius_threshold = 10.0);

// Hyperbolic distance (curvature -4) from the point with polar coordinates
// (t, theta) to the geodesic ray from the origin in direction ray_angle:
// (1/2) arcsinh(sinh(2t) sin|dtheta|) when |dtheta| <= pi/2, else t (the
// nearest ray point is the origin).
double point_ray_distance(double t, double theta, double ray_angle);

struct TrackingDeviation {
  double sup_deviation = 0.0;    // max over samples up to the stopping index
  double final_deviation = 0.0;  // at the interpolated stopping point itself
};

// Deviation of the path from the geodesic ray toward its own exit direction,
// measured up to the first crossing of radius T.  Angle offsets against the
// ray are rebuilt backward from per-step increments rather than read off the
// stored wrapped angles, which keeps them resolvable at radii where the
// increments fall below the ulp of theta (see eta_increment for the same
// idea on the radial side).  Propagates NotHit and TooShort from
// stopping_time / exit_direction.
TrackingDeviation tracking_deviation(const BrownianPath& path, double T,
                                     double radius_threshold = 10.0);

}  // namespace kzclt
