#pragma once
// Exterior-power log-norms, Lyapunov spectrum estimation via QR deflation,
// Oseledets unstable frames, and the Phi/Psi formula layer for complex
// symmetric form matrices.

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace kzclt {

struct Degenerate : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GapTooSmall : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// k linearly independent columns in R^n with the log-volume of their
// parallelepiped cached (half the log Gram determinant).
struct KFrame {
  explicit KFrame(const Eigen::MatrixXd& columns);
  Eigen::MatrixXd cols;
  double log_volume = 0.0;
};

// log of the volume growth factor of the frame under A:
// (1/2) (log det Gram(A V) - log det Gram(V)).  Throws Degenerate when A V
// loses rank numerically.
double wedge_lognorm(const Eigen::MatrixXd& A, const KFrame& V);

// Largest principal angle between the column spans (a metric on the
// Grassmannian).
double projective_distance(const Eigen::MatrixXd& F1, const Eigen::MatrixXd& F2);

// One renormalization unit of a matrix cocycle: next() fills M with the
// cocycle matrix accumulated over the unit (at most ~10 generator moves or
// ~1 unit of driver time, so conditioning stays bounded) and returns the
// driver time it covers.
struct MatrixDriver {
  virtual ~MatrixDriver() = default;
  virtual int dim() const = 0;
  virtual double next(Eigen::MatrixXd& M) = 0;
};

struct SpectrumEstimate {
  std::vector<double> lambda;  // sorted descending
  std::vector<double> se;      // block-averaged standard errors
  double time = 0.0;
};

// Benettin QR deflation along the driver for total time T, starting from a
// random orthonormal k_max-frame drawn from `seed`.  Standard errors come
// from ~100 equal-time blocks of the per-block growth rates.
SpectrumEstimate lyapunov_spectrum(MatrixDriver& driver, double T, int k_max,
                                   std::uint64_t seed);

// Push a random k-frame through the given forward cocycle word (a backward
// orbit recorded and replayed forward, word[0] applied first), orthonormalizing
// as it goes.  The result spans the top-k unstable space at the word's endpoint
// provided the spectrum has a gap at k; the caller supplies its gap estimate
// and anything below min_gap is refused.
KFrame oseledets_unstable(const std::vector<Eigen::MatrixXd>& forward_word, int k,
                          double estimated_gap, std::uint64_t seed, double min_gap = 0.02);

// Complex symmetric form matrix B with derived curvature H = B conj(B).
struct FormMatrix {
  explicit FormMatrix(const Eigen::MatrixXcd& b);
  Eigen::MatrixXcd B;
  Eigen::MatrixXcd H;  // Hermitian nonnegative
};

struct PhiPsi {
  double phi = 0.0;
  std::complex<double> psi{0.0, 0.0};
};

// Phi_k = 2 tr(H_sub) - tr(B_sub conj(B_sub)), Psi_k = tr(B_sub), with the
// restriction to the coordinate sub-frame selected by `indices` (0-based,
// distinct).
PhiPsi phi_psi(const FormMatrix& form, const std::vector<int>& indices);

// Same formulas for a general frame F (h x k, unitary columns):
// B_sub = F^T B F, H_sub = F^H H F.
PhiPsi phi_psi_frame(const FormMatrix& form, const Eigen::MatrixXcd& F);

}  // namespace kzclt
