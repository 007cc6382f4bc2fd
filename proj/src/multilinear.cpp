#include "kzclt/multilinear.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "kzclt/rng.hpp"
#include "kzclt/stats.hpp"

namespace kzclt {

namespace {

// |diag(R)| logs from a QR factorization; the relative guard catches frames
// that lost rank under the applied matrix.
Eigen::VectorXd qr_logdiag(const Eigen::HouseholderQR<Eigen::MatrixXd>& qr, int k) {
  double dmax = 0.0;
  for (int i = 0; i < k; ++i) dmax = std::max(dmax, std::abs(qr.matrixQR()(i, i)));
  Eigen::VectorXd logs(k);
  for (int i = 0; i < k; ++i) {
    const double d = std::abs(qr.matrixQR()(i, i));
    if (!(d > 1e-13 * dmax)) throw Degenerate("frame lost rank in QR factorization");
    logs(i) = std::log(d);
  }
  return logs;
}

Eigen::MatrixXd thin_q(const Eigen::HouseholderQR<Eigen::MatrixXd>& qr, int n, int k) {
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
}

Eigen::MatrixXd random_orthonormal(int n, int k, std::uint64_t seed, std::uint64_t stream) {
  Rng rng(seed, purpose::frame, stream);
  Eigen::MatrixXd g(n, k);
  for (int c = 0; c < k; ++c)
    for (int r = 0; r < n; ++r) g(r, c) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  (void)qr_logdiag(qr, k);
  return thin_q(qr, n, k);
}

}  // namespace

KFrame::KFrame(const Eigen::MatrixXd& columns) : cols(columns) {
  if (cols.cols() < 1 || cols.rows() < cols.cols())
    throw Degenerate("frame needs 1 <= k <= n columns");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(cols);
  log_volume = qr_logdiag(qr, static_cast<int>(cols.cols())).sum();
}

double wedge_lognorm(const Eigen::MatrixXd& A, const KFrame& V) {
  if (A.rows() != A.cols() || A.cols() != V.cols.rows())
    throw Degenerate("matrix and frame dimensions do not match");
  const Eigen::MatrixXd W = A * V.cols;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(W);
  return qr_logdiag(qr, static_cast<int>(W.cols())).sum() - V.log_volume;
}

double projective_distance(const Eigen::MatrixXd& F1, const Eigen::MatrixXd& F2) {
  if (F1.rows() != F2.rows() || F1.cols() != F2.cols())
    throw Degenerate("frames must have matching shape");
  const int n = static_cast<int>(F1.rows()), k = static_cast<int>(F1.cols());
  Eigen::HouseholderQR<Eigen::MatrixXd> qr1(F1), qr2(F2);
  (void)qr_logdiag(qr1, k);
  (void)qr_logdiag(qr2, k);
  const Eigen::MatrixXd C = thin_q(qr1, n, k).transpose() * thin_q(qr2, n, k);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C);
  const double smin = std::clamp(svd.singularValues().minCoeff(), 0.0, 1.0);
  return std::acos(smin);
}

SpectrumEstimate lyapunov_spectrum(MatrixDriver& driver, double T, int k_max,
                                   std::uint64_t seed) {
  const int n = driver.dim();
  if (k_max < 1 || k_max > n) throw Degenerate("spectrum depth out of range");
  if (!(T > 0.0)) throw Degenerate("spectrum horizon must be positive");

  Eigen::MatrixXd Q = random_orthonormal(n, k_max, seed, 0);
  Eigen::MatrixXd M(n, n);
  std::vector<Eigen::VectorXd> unit_logs;
  std::vector<double> unit_dt;
  double elapsed = 0.0;
  while (elapsed < T) {
    const double dt = driver.next(M);
    if (!(dt > 0.0)) throw Degenerate("driver reported a nonpositive time step");
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(M * Q);
    unit_logs.push_back(qr_logdiag(qr, k_max));
    Q = thin_q(qr, n, k_max);
    unit_dt.push_back(dt);
    elapsed += dt;
  }

  const int units = static_cast<int>(unit_logs.size());
  Eigen::VectorXd total = Eigen::VectorXd::Zero(k_max);
  for (const auto& l : unit_logs) total += l;

  SpectrumEstimate est;
  est.time = elapsed;
  est.lambda.resize(k_max);
  est.se.assign(k_max, 0.0);
  for (int i = 0; i < k_max; ++i) est.lambda[i] = total(i) / elapsed;

  // per-exponent standard errors from contiguous blocks of renormalization
  // units (block growth rates treated as an iid proxy)
  const int nb = std::min(100, units);
  if (nb >= 2) {
    for (int i = 0; i < k_max; ++i) {
      std::vector<double> rates(nb);
      for (int b = 0; b < nb; ++b) {
        const int lo = b * units / nb, hi = (b + 1) * units / nb;
        double ls = 0.0, ts = 0.0;
        for (int u = lo; u < hi; ++u) {
          ls += unit_logs[u](i);
          ts += unit_dt[u];
        }
        rates[b] = ls / ts;
      }
      est.se[i] = std::sqrt(variance(rates) / static_cast<double>(nb));
    }
  }

  // QR deflation orders the exponents up to finite-time fluctuation; report
  // them sorted with their errors attached
  std::vector<int> order(k_max);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return est.lambda[a] > est.lambda[b]; });
  SpectrumEstimate sorted;
  sorted.time = est.time;
  for (int i : order) {
    sorted.lambda.push_back(est.lambda[i]);
    sorted.se.push_back(est.se[i]);
  }
  return sorted;
}

KFrame oseledets_unstable(const std::vector<Eigen::MatrixXd>& forward_word, int k,
                          double estimated_gap, std::uint64_t seed, double min_gap) {
  if (!(estimated_gap >= min_gap)) {
    std::ostringstream msg;
    msg << "spectral gap " << estimated_gap << " below threshold " << min_gap;
    throw GapTooSmall(msg.str());
  }
  if (forward_word.empty()) throw Degenerate("empty cocycle word");
  const int n = static_cast<int>(forward_word.front().rows());
  if (k < 1 || k > n) throw Degenerate("frame dimension out of range");

  Eigen::MatrixXd F = random_orthonormal(n, k, seed, 1);
  int since_qr = 0;
  for (const auto& M : forward_word) {
    if (M.rows() != n || M.cols() != n) throw Degenerate("ragged cocycle word");
    F = M * F;
    if (++since_qr == 10) {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(F);
      (void)qr_logdiag(qr, k);
      F = thin_q(qr, n, k);
      since_qr = 0;
    }
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(F);
  (void)qr_logdiag(qr, k);
  return KFrame(thin_q(qr, n, k));
}

FormMatrix::FormMatrix(const Eigen::MatrixXcd& b) : B(b) {
  if (B.rows() != B.cols() || B.rows() < 1) throw Degenerate("form matrix must be square");
  const double asym = (B - B.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= 1e-12)) throw Degenerate("form matrix is not symmetric");
  H = B * B.conjugate();
  const double herm = (H - H.adjoint()).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (H + H.adjoint()),
                                                     Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  if (!(herm <= 1e-10) || !(lo >= -1e-10))
    throw Degenerate("curvature matrix is not Hermitian nonnegative");
}

PhiPsi phi_psi_frame(const FormMatrix& form, const Eigen::MatrixXcd& F) {
  const int h = static_cast<int>(form.B.rows());
  const int k = static_cast<int>(F.cols());
  if (F.rows() != h || k < 1 || k > h) throw Degenerate("sub-frame shape does not match form");
  const double ortho =
      (F.adjoint() * F - Eigen::MatrixXcd::Identity(k, k)).cwiseAbs().maxCoeff();
  if (!(ortho <= 1e-8)) throw Degenerate("sub-frame is not orthonormal");

  const Eigen::MatrixXcd Bsub = F.transpose() * form.B * F;
  const Eigen::MatrixXcd Hsub = F.adjoint() * form.H * F;
  PhiPsi out;
  out.psi = Bsub.trace();
  out.phi = 2.0 * Hsub.trace().real() - (Bsub * Bsub.conjugate()).trace().real();
  return out;
}

PhiPsi phi_psi(const FormMatrix& form, const std::vector<int>& indices) {
  const int h = static_cast<int>(form.B.rows());
  const int k = static_cast<int>(indices.size());
  if (k < 1 || k > h) throw Degenerate("index set size out of range");
  Eigen::MatrixXcd F = Eigen::MatrixXcd::Zero(h, k);
  for (int j = 0; j < k; ++j) {
    const int i = indices[j];
    if (i < 0 || i >= h) throw Degenerate("frame index out of range");
    for (int p = 0; p < j; ++p)
      if (indices[p] == i) throw Degenerate("repeated frame index");
    F(i, j) = 1.0;
  }
  return phi_psi_frame(form, F);
}

}  // namespace kzclt
