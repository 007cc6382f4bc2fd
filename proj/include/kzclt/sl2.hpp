#pragma once
// SL(2,R), its one-parameter subgroups, and the unit-disk model.
//
// Conventions used throughout:
//   * g_t = diag(e^t, e^{-t}) is the geodesic flow direction,
//     r_theta = [[cos(theta/2), -sin(theta/2)], [sin(theta/2), cos(theta/2)]]
//     (half-angle parametrization: theta runs over [0, 4pi) in Cartan
//     decompositions so that the angle is a genuine group coordinate).
//   * The Lie algebra basis is X = [[1/2, 0], [0, -1/2]],
//     Y = [[0, 1/2], [1/2, 0]], Theta = [[0, -1/2], [1/2, 0]] with brackets
//     [Theta, X] = Y, [Theta, Y] = -X, [X, Y] = -Theta.  All entries are
//     dyadic, so the brackets hold exactly in doubles.
//   * The disk carries the metric of constant curvature -4.  The hyperbolic
//     distance from 0 to r in [0,1) is atanh(r) = (1/2) log((1+r)/(1-r)),
//     and in general d(z, w) = atanh(|z - w| / |1 - conj(z) w|).  With this
//     normalization act_disk(g_t r_theta, 0) = tanh(t) e^{i theta}.
//   * act_disk(g, z) conjugates the Moebius action of g^T on the upper half
//     plane by the Cayley map C(w) = (w - i)/(w + i).  The transpose makes
//     the Cartan angle theta_2 of g = r_{theta_1} g_t r_{theta_2} appear as
//     the disk angle of the orbit of 0, which is what the polar Brownian
//     bookkeeping needs.  The price is that act_disk is a right action:
//     act_disk(g, act_disk(h, z)) = act_disk(h * g, z).

#include <complex>
#include <stdexcept>

namespace kzclt {

struct GroupElement {
  // Row-major entries [[a, b], [c, d]], determinant 1.
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

  double det() const { return a * d - b * c; }
  double frobenius_sq() const { return a * a + b * b + c * c + d * d; }
  GroupElement transpose() const { return {a, c, b, d}; }
  GroupElement inverse() const { return {d, -b, -c, a}; }
};

using DiskPoint = std::complex<double>;

struct CartanTriple {
  double theta1 = 0.0;  // in [0, 2pi)
  double t = 0.0;       // >= 0
  double theta2 = 0.0;  // in [0, 4pi)
};

// Matrix product: (compose(g, h)) v = g (h v).
GroupElement compose(const GroupElement& g, const GroupElement& h);

// Generators.
GroupElement geodesic(double t);   // g_t
GroupElement rotation(double theta);  // r_theta, half-angle convention

// Lie algebra elements as matrices (for exponentials and tests).
GroupElement lie_X();
GroupElement lie_Y();
GroupElement lie_Theta();

// exp(A) for traceless 2x2 A, closed form via A^2 = -det(A) I.
GroupElement mat_exp_traceless(double a, double b, double c);

// Action on the open unit disk, right action (see header comment).
DiskPoint act_disk(const GroupElement& g, DiskPoint z);

// Hyperbolic distance, curvature -4 normalization.
double dist(DiskPoint z, DiskPoint w);

// Cartan decomposition g = r_{theta1} g_t r_{theta2}.  For rotations the
// decomposition is not unique; the convention here is theta1 = theta mod 2pi
// shifted into [0, 2pi) with the remainder pushed into theta2, matching
// cartan(rotation(theta)) == (theta, 0, 0) for theta in [0, 2pi).
CartanTriple cartan(const GroupElement& g);

}  // namespace kzclt
