#include "kzclt/brownian.hpp"

#include <cmath>
#include <cstddef>
#include <string>

namespace kzclt {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kTwoPi = 2.0 * kPi;

double wrap_angle(double th) {
  double r = std::fmod(th, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r -= kTwoPi;
  return r;
}

// coth(2t) - 1/(2t): the bounded remainder of the radial drift once the
// Bessel part is split off.  Series below x = 2t = 0.1 avoids the
// cancellation of two ~1/x terms.
double drift_residual(double t) {
  const double x = 2.0 * t;
  if (x < 0.1) {
    const double x2 = x * x;
    return x * (1.0 / 3.0 - x2 * (1.0 / 45.0 - x2 * (2.0 / 945.0)));
  }
  return 1.0 + 2.0 / std::expm1(2.0 * x) - 1.0 / x;
}
}  // namespace

BrownianPath simulate_path(std::uint64_t seed, double horizon, double dt, double t_init,
                           SimMode mode, const SimOptions& opts) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("simulate_path: bad dt");
  if (!(horizon >= dt) || !std::isfinite(horizon))
    throw std::invalid_argument("simulate_path: horizon must be >= dt");
  if (!(t_init >= 0.0) || !std::isfinite(t_init))
    throw std::invalid_argument("simulate_path: t_init must be >= 0");

  const auto n = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-12));
  WienerPair noise(seed, opts.path_index, dt, mode, opts);

  BrownianPath p;
  p.dt = dt;
  p.t_init = t_init;
  p.mode = mode;
  p.seed = seed;
  p.path_index = opts.path_index;
  p.epsilon = opts.epsilon;
  p.s.reserve(n + 1);
  p.t.reserve(n + 1);
  p.theta.reserve(n + 1);
  p.w1.reserve(n + 1);
  p.w2.reserve(n + 1);
  p.eta.reserve(n + 1);
  p.polar_step.reserve(n + 1);

  double t = t_init;
  double theta = wrap_angle(opts.theta_init);
  double w1 = 0.0, w2 = 0.0;
  double eta = t_init;
  p.s.push_back(0.0);
  p.t.push_back(t);
  p.theta.push_back(theta);
  p.w1.push_back(w1);
  p.w2.push_back(w2);
  p.eta.push_back(eta);
  p.polar_step.push_back(0);

  for (std::size_t i = 1; i <= n; ++i) {
    const double s_new = static_cast<double>(i) * dt;
    const auto [dw1, dw2] = noise.next();
    const double w1_new = w1 + dw1;
    const double w2_new = w2 + dw2;
    double t_new = 0.0, theta_new = 0.0, eta_new = 0.0;

    bool polar = t >= opts.epsilon;
    if (polar) {
      const double e4 = std::expm1(4.0 * t);  // +inf for large t is fine
      eta_new = eta + 2.0 * dt / e4;
      t_new = (s_new + w1_new) + eta_new;
      if (t_new > 0.0) {
        const double ang = e4 > 1e300 ? 0.0 : 4.0 * std::sqrt(e4 + 1.0) / e4;  // 2/sinh(2t)
        theta_new = wrap_angle(theta + ang * dw2);
      } else {
        // a deep negative noise excursion from just above the cutoff would
        // cross zero; redo this step in the chart (same increments), which
        // keeps the radius nonnegative by construction
        polar = false;
      }
    }
    if (!polar) {
      const double x = t + dw1 + drift_residual(t) * dt;
      const double y = dw2;
      t_new = std::hypot(x, y);
      theta_new = wrap_angle(theta + std::atan2(y, x));
      eta_new = t_new - s_new - w1_new;
    }

    if (!std::isfinite(t_new) || !std::isfinite(theta_new))
      throw NonFinite("simulate_path: non-finite state at s = " + std::to_string(s_new) +
                      " (reduce dt or the noise scale)");

    t = t_new;
    theta = theta_new;
    w1 = w1_new;
    w2 = w2_new;
    eta = eta_new;
    p.s.push_back(s_new);
    p.t.push_back(t);
    p.theta.push_back(theta);
    p.w1.push_back(w1);
    p.w2.push_back(w2);
    p.eta.push_back(eta);
    p.polar_step.push_back(polar ? 1 : 0);
  }
  return p;
}

StoppingRecord stopping_time(const BrownianPath& path, double T) {
  if (path.t.empty()) throw std::invalid_argument("stopping_time: empty path");
  if (T <= path.t[0]) return {0.0, 0, 0.0, path.w1[0], path.eta[0]};
  for (std::size_t i = 1; i < path.t.size(); ++i) {
    if (path.t[i] >= T) {
      const double w = (T - path.t[i - 1]) / (path.t[i] - path.t[i - 1]);
      StoppingRecord rec;
      rec.index = i;
      rec.weight = w;
      rec.tau = path.s[i - 1] + w * path.dt;
      rec.w1_at_tau = path.w1[i - 1] + w * (path.w1[i] - path.w1[i - 1]);
      rec.eta_at_tau = path.eta[i - 1] + w * (path.eta[i] - path.eta[i - 1]);
      return rec;
    }
  }
  throw NotHit("stopping_time: radius " + std::to_string(T) +
               " not reached within horizon " + std::to_string(path.s.back()));
}

double eta_increment(const BrownianPath& path, double s_lo, double s_hi) {
  double sum = 0.0;
  for (std::size_t i = 1; i < path.s.size(); ++i) {
    if (path.s[i] <= s_lo + 1e-12 * path.dt) continue;
    if (path.s[i] > s_hi + 1e-12 * path.dt) break;
    if (path.polar_step[i])
      sum += 2.0 * path.dt / std::expm1(4.0 * path.t[i - 1]);
    else
      sum += path.eta[i] - path.eta[i - 1];
  }
  return sum;
}

double exit_direction(const BrownianPath& path, double radius_threshold) {
  if (path.t.empty()) throw std::invalid_argument("exit_direction: empty path");
  if (path.t.back() < radius_threshold)
    throw TooShort("exit_direction: final radius " + std::to_string(path.t.back()) +
                   " below threshold " + std::to_string(radius_threshold));
  const std::size_t n = path.theta.size();
  const std::size_t k = std::max<std::size_t>(1, n / 10);
  double cs = 0.0, sn = 0.0;
  for (std::size_t i = n - k; i < n; ++i) {
    cs += std::cos(path.theta[i]);
    sn += std::sin(path.theta[i]);
  }
  return wrap_angle(std::atan2(sn, cs));
}

namespace {

double ray_distance_delta(double t, double delta) {
  const double d = std::abs(delta);
  if (d > 0.5 * kPi) return t;  // nearest ray point is the origin
  const double sd = std::sin(d);
  if (sd == 0.0 || t == 0.0) return 0.0;
  if (2.0 * t < 700.0) return 0.5 * std::asinh(std::sinh(2.0 * t) * sd);
  // asinh(y) = log(2y) up to O(1/y^2); sinh(2t) = e^{2t}/2 up to e^{-4t}
  return std::max(0.0, t + 0.5 * std::log(sd));
}

}  // namespace

double point_ray_distance(double t, double theta, double ray_angle) {
  return ray_distance_delta(t, std::remainder(theta - ray_angle, kTwoPi));
}

TrackingDeviation tracking_deviation(const BrownianPath& path, double T,
                                     double radius_threshold) {
  const StoppingRecord rec = stopping_time(path, T);
  // keeps the escaped-path precondition (and its TooShort throw)
  (void)exit_direction(path, radius_threshold);

  // The ray is the path's own limiting direction, and comparing stored
  // wrapped angles against it stops working near radius 18: the angular
  // increments drop below the ulp of theta while sinh(2t) amplifies any
  // fixed angular discrepancy into a deviation growing like t itself.  So
  // theta_end - theta_j is rebuilt backward from per-step increments (polar
  // steps recomputed from w2 with the integrator's own coefficient, chart
  // steps from the stored angles, which resolve fine at small radius).
  // Same recurrence idea that keeps eta increments meaningful in the tail.
  const auto increment = [&path](std::size_t i) {
    if (!path.polar_step[i])
      return std::remainder(path.theta[i] - path.theta[i - 1], kTwoPi);
    const double e4 = std::expm1(4.0 * path.t[i - 1]);
    const double ang = e4 > 1e300 ? 0.0 : 4.0 * std::sqrt(e4 + 1.0) / e4;
    return ang * (path.w2[i] - path.w2[i - 1]);
  };

  double d = 0.0;  // running theta_end - theta_j
  for (std::size_t i = path.s.size() - 1; i > rec.index; --i) d += increment(i);

  TrackingDeviation dev;
  double d_tau = d;  // at the interpolated stopping point
  if (rec.index > 0) d_tau += (1.0 - rec.weight) * increment(rec.index);
  dev.final_deviation = ray_distance_delta(T, std::remainder(d_tau, kTwoPi));
  dev.sup_deviation = dev.final_deviation;
  for (std::size_t j = rec.index;; --j) {
    dev.sup_deviation =
        std::max(dev.sup_deviation, ray_distance_delta(path.t[j], std::remainder(d, kTwoPi)));
    if (j == 0) break;
    d += increment(j);
  }
  return dev;
}

}  // namespace kzclt
