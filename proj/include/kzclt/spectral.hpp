#pragma once
// Ladder-operator model of a single irreducible unitary SL(2,R)
// representation, truncated to the Theta-eigenbasis window [-K, K].
//
// The basis {u_k} diagonalizes Theta (Theta u_k = i k u_k) and the geodesic
// generator acts by
//   X u_k = ((2k+1+s)/4) u_{k+1} - ((2k-1-s)/4) u_{k-1},
//   Y u_k = i ((2k+1+s)/4) u_{k+1} + i ((2k-1-s)/4) u_{k-1},
// with u_k = 0 outside the admissible index set.  The basis is orthogonal
// but not orthonormal away from the principal series; norms follow the
// recursion ||u_k||^2 = ((2|k|-1-s)/(2|k|-1+conj(s))) ||u_{k-1}||^2 applied
// outward from the lowest-|k| index, which is exactly the weight pattern
// that makes X and Y skew-adjoint in the weighted inner product
// <f,g> = sum_k f_k conj(g_k) ||u_k||^2.
//
// Truncation corrupts only the two rows nearest each window edge, so all
// assertions and solves restrict to the interior |k| <= K-2.  Conditioning
// is kept bounded by working in scaled coordinates f~_k = f_k ||u_k||.

#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace kzclt {

struct InadmissibleParams : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct Singular : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Series { Principal, Complementary, Discrete };

// principal: s purely imaginary; complementary: s real in (-1,1);
// discrete: s = +-(2n-1) with indices k >= n (s > 0) or k <= -n (s < 0)
struct RepParams {
  Series series = Series::Principal;
  std::complex<double> s{0.0, 0.0};

  static RepParams principal(double t);       // s = i t
  static RepParams complementary(double sr);  // -1 < sr < 1
  static RepParams discrete(int n, int sign); // n >= 1, sign = +-1

  int lowest() const;  // anchor index: 0, n or -n
};

void validate(const RepParams& p);  // throws InadmissibleParams

double casimir_value(const RepParams& p);  // (1 - s^2)/4, real for admissible s

// ascending index window [-K, K] intersected with the admissible set,
// with positive weights ||u_k||^2 normalized to 1 at the anchor
struct Window {
  int K = 0;
  std::vector<int> k;
  Eigen::VectorXd weight;
  int lo_interior = 0;  // first position with |k| <= K-2
  int n_interior = 0;   // count of interior positions

  int size() const { return static_cast<int>(k.size()); }
  int pos(int idx) const;  // -1 when idx is outside the window
};

Window basis_window(const RepParams& p, int K);

enum class Op { Theta, X, Y, Casimir, Lc };

struct TruncatedOperator {
  Eigen::MatrixXcd m;
  Window w;
};

// raw (unscaled) matrix of the operator on the window; Lc needs c >= 0 and
// means -(X^2 + Y^2 + c^2 Theta^2) - 2c Y Theta
TruncatedOperator build_operator(const RepParams& p, int K, Op which, double c = 0.0);

// interior Frobenius-norm difference between the two assemblies
// -(X^2+Y^2+c^2 Theta^2) - 2c Y Theta and -X^2 - (Y+c Theta)^2 - c X
double lc_identity_check(const RepParams& p, double c, int K);

// smallest generalized Rayleigh quotient of the Hermitian part of Lc
// against X*X + Y*Y + Theta*Theta in the weighted product, over interior
// vectors; needs c >= 1.  The constant is positive at every finite K.  For
// c > 1 it converges to a K-independent limit; at c = 1 exactly the
// operators X and Y + Theta share a null symbol direction (alternating-sign
// coefficient vectors drive the quotient to zero like 1/K^2), so no uniform
// constant survives truncation refinement at the endpoint.
double coercivity_constant(const RepParams& p, double c, int K);

struct SpectralSolution {
  Eigen::VectorXcd u;       // coefficients over the window
  double residual = 0.0;    // weighted interior residual of Lc u - f
  Window w;
};

// rhs vector over the window from (index, coefficient) pairs; entries must
// lie in the interior
Eigen::VectorXcd rhs_from_pairs(const Window& w,
                                const std::vector<std::pair<int, std::complex<double>>>& entries);

// direct solve of Lc u = f over the window in scaled coordinates, one step
// of iterative refinement, interior residual reported; c >= 1
SpectralSolution solve_poisson(const RepParams& p, double c, int K, const Eigen::VectorXcd& f);

// weighted Sobolev-type seminorms of a solved coefficient vector
double weighted_norm(const Window& w, const Eigen::VectorXcd& f);

}  // namespace kzclt
