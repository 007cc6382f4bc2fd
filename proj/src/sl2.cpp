#include "kzclt/sl2.hpp"

#include <cmath>

namespace kzclt {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;

double wrap_nonneg(double theta, double period) {
  double r = std::fmod(theta, period);
  if (r < 0) r += period;
  // fmod can return the period itself after the correction when theta is a
  // tiny negative number.
  if (r >= period) r -= period;
  return r;
}
}  // namespace

GroupElement compose(const GroupElement& g, const GroupElement& h) {
  GroupElement p{g.a * h.a + g.b * h.c, g.a * h.b + g.b * h.d,
                 g.c * h.a + g.d * h.c, g.c * h.b + g.d * h.d};
  // Correct slow determinant drift in long products.  Only near-unimodular
  // results are touched: compose is also used on Lie algebra elements and
  // other non-group matrices, which must pass through unchanged.
  const double det = p.det();
  const double err = det - 1.0;
  if (std::abs(err) > 1e-14 && std::abs(err) < 1e-6) {
    const double f = 1.0 / std::sqrt(det);
    p.a *= f;
    p.b *= f;
    p.c *= f;
    p.d *= f;
  }
  return p;
}

GroupElement geodesic(double t) {
  const double e = std::exp(t);
  return {e, 0.0, 0.0, 1.0 / e};
}

GroupElement rotation(double theta) {
  const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
  return {c, -s, s, c};
}

GroupElement lie_X() { return {0.5, 0.0, 0.0, -0.5}; }
GroupElement lie_Y() { return {0.0, 0.5, 0.5, 0.0}; }
GroupElement lie_Theta() { return {0.0, -0.5, 0.5, 0.0}; }

GroupElement mat_exp_traceless(double a, double b, double c) {
  // A = [[a, b], [c, -a]], A^2 = (a^2 + bc) I.
  const double q2 = a * a + b * c;
  double ch, sh_over;  // cosh(q) and sinh(q)/q, or the trig versions
  if (q2 > 1e-24) {
    const double q = std::sqrt(q2);
    ch = std::cosh(q);
    sh_over = std::sinh(q) / q;
  } else if (q2 < -1e-24) {
    const double w = std::sqrt(-q2);
    ch = std::cos(w);
    sh_over = std::sin(w) / w;
  } else {
    ch = 1.0 + 0.5 * q2;
    sh_over = 1.0 + q2 / 6.0;
  }
  return {ch + sh_over * a, sh_over * b, sh_over * c, ch - sh_over * a};
}

DiskPoint act_disk(const GroupElement& g, DiskPoint z) {
  // Cayley transform to the upper half plane, Moebius action of g^T, back.
  const std::complex<double> i(0.0, 1.0);
  const std::complex<double> w = i * (1.0 + z) / (1.0 - z);
  const std::complex<double> w2 = (g.a * w + g.c) / (g.b * w + g.d);
  return (w2 - i) / (w2 + i);
}

double dist(DiskPoint z, DiskPoint w) {
  const double num = std::abs(z - w);
  const double den = std::abs(1.0 - std::conj(z) * w);
  return std::atanh(num / den);
}

CartanTriple cartan(const GroupElement& g) {
  // B = g g^T is symmetric positive definite with det 1; its eigenframe
  // carries theta1 and its eigenvalues carry t.
  const double p = g.a * g.a + g.b * g.b;
  const double q = g.a * g.c + g.b * g.d;
  const double r = g.c * g.c + g.d * g.d;

  if (std::abs(q) < 1e-14 && std::abs(p - r) < 1e-14) {
    // g is (numerically) a rotation: put the whole angle in theta1 when it
    // fits in [0, 2pi), otherwise spill one full turn into theta2.
    const double theta = wrap_nonneg(2.0 * std::atan2(g.c, g.a), 4.0 * kPi);
    if (theta < 2.0 * kPi) return {theta, 0.0, 0.0};
    return {theta - 2.0 * kPi, 0.0, 2.0 * kPi};
  }

  // Major axis direction of B and the top eigenvalue e^{2t}.
  double alpha = 0.5 * std::atan2(2.0 * q, p - r);
  const double half_diff = 0.5 * (p - r);
  const double lam_max = 0.5 * (p + r) + std::sqrt(half_diff * half_diff + q * q);
  const double t = 0.5 * std::log(lam_max);

  // theta1 = 2 alpha in [0, 2pi); flipping the axis by pi flips the sign of
  // the residual rotation, which theta2 absorbs below.
  alpha = wrap_nonneg(alpha, kPi);
  const double theta1 = 2.0 * alpha;

  // K2 = g_t^{-1} r_{theta1}^T g should be the rotation r_{theta2}.
  const GroupElement k2 =
      compose(geodesic(-t), compose(rotation(theta1).transpose(), g));
  const double theta2 = wrap_nonneg(2.0 * std::atan2(k2.c, k2.a), 4.0 * kPi);
  return {theta1, t, theta2};
}

}  // namespace kzclt
