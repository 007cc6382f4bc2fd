#include "kzclt/spectral.hpp"

#include <cmath>
#include <string>

namespace kzclt {

namespace {

using cplx = std::complex<double>;

constexpr int kMinK = 8;
constexpr int kMaxK = 8192;

int discrete_n(const RepParams& p) {
  return static_cast<int>(std::lround((std::abs(p.s.real()) + 1.0) / 2.0));
}

// outward weight ratio at target index k (|k| = distance from the anchor
// side), same formula on both sides of the window
double weight_ratio(const RepParams& p, int target_k) {
  const double m = 2.0 * std::abs(target_k) - 1.0;
  const cplx num = m - p.s;
  const cplx den = m + std::conj(p.s);
  const cplx r = num / den;
  if (!(std::abs(r.imag()) <= 1e-14 * (1.0 + std::abs(r.real()))))
    throw InadmissibleParams("weight recursion left the real axis");
  return r.real();
}

cplx up_coeff(const RepParams& p, int k) { return (2.0 * k + 1.0 + p.s) / 4.0; }
cplx down_coeff(const RepParams& p, int k) { return (2.0 * k - 1.0 - p.s) / 4.0; }

Eigen::MatrixXcd raw_matrix(const RepParams& p, const Window& w, Op which, double c);

Eigen::MatrixXcd interior_block(const Eigen::MatrixXcd& m, const Window& w) {
  return m.block(w.lo_interior, w.lo_interior, w.n_interior, w.n_interior);
}

struct ScaledOps {
  Eigen::MatrixXcd x, y, theta, lc;
};

ScaledOps scaled_ops(const RepParams& p, const Window& w, double c) {
  const Eigen::VectorXd d = w.weight.cwiseSqrt();
  const Eigen::VectorXd dinv = d.cwiseInverse();
  auto scale = [&](const Eigen::MatrixXcd& m) -> Eigen::MatrixXcd {
    return d.asDiagonal() * m * dinv.asDiagonal();
  };
  ScaledOps ops;
  ops.x = scale(raw_matrix(p, w, Op::X, 0.0));
  ops.y = scale(raw_matrix(p, w, Op::Y, 0.0));
  ops.theta = scale(raw_matrix(p, w, Op::Theta, 0.0));
  ops.lc = -(ops.x * ops.x + ops.y * ops.y + (c * c) * ops.theta * ops.theta)
           - 2.0 * c * (ops.y * ops.theta);
  return ops;
}

Eigen::MatrixXcd raw_matrix(const RepParams& p, const Window& w, Op which, double c) {
  const int m = w.size();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(m, m);
  switch (which) {
    case Op::Theta:
      for (int j = 0; j < m; ++j) out(j, j) = cplx(0.0, static_cast<double>(w.k[j]));
      break;
    case Op::X:
      for (int j = 0; j < m; ++j) {
        const int k = w.k[j];
        if (const int up = w.pos(k + 1); up >= 0) out(up, j) += up_coeff(p, k);
        if (const int dn = w.pos(k - 1); dn >= 0) out(dn, j) -= down_coeff(p, k);
      }
      break;
    case Op::Y:
      for (int j = 0; j < m; ++j) {
        const int k = w.k[j];
        const cplx i1(0.0, 1.0);
        if (const int up = w.pos(k + 1); up >= 0) out(up, j) += i1 * up_coeff(p, k);
        if (const int dn = w.pos(k - 1); dn >= 0) out(dn, j) += i1 * down_coeff(p, k);
      }
      break;
    case Op::Casimir: {
      const Eigen::MatrixXcd x = raw_matrix(p, w, Op::X, 0.0);
      const Eigen::MatrixXcd y = raw_matrix(p, w, Op::Y, 0.0);
      const Eigen::MatrixXcd th = raw_matrix(p, w, Op::Theta, 0.0);
      out = -(x * x + y * y - th * th);
      break;
    }
    case Op::Lc: {
      const Eigen::MatrixXcd x = raw_matrix(p, w, Op::X, 0.0);
      const Eigen::MatrixXcd y = raw_matrix(p, w, Op::Y, 0.0);
      const Eigen::MatrixXcd th = raw_matrix(p, w, Op::Theta, 0.0);
      out = -(x * x + y * y + (c * c) * (th * th)) - 2.0 * c * (y * th);
      break;
    }
  }
  return out;
}

}  // namespace

RepParams RepParams::principal(double t) {
  RepParams p;
  p.series = Series::Principal;
  p.s = cplx(0.0, t);
  return p;
}

RepParams RepParams::complementary(double sr) {
  RepParams p;
  p.series = Series::Complementary;
  p.s = cplx(sr, 0.0);
  return p;
}

RepParams RepParams::discrete(int n, int sign) {
  RepParams p;
  p.series = Series::Discrete;
  p.s = cplx(static_cast<double>(sign) * (2.0 * n - 1.0), 0.0);
  return p;
}

int RepParams::lowest() const {
  if (series != Series::Discrete) return 0;
  const int n = discrete_n(*this);
  return s.real() > 0.0 ? n : -n;
}

void validate(const RepParams& p) {
  if (!std::isfinite(p.s.real()) || !std::isfinite(p.s.imag()))
    throw InadmissibleParams("representation parameter is not finite");
  switch (p.series) {
    case Series::Principal:
      if (p.s.real() != 0.0)
        throw InadmissibleParams("principal series needs purely imaginary parameter");
      break;
    case Series::Complementary:
      if (p.s.imag() != 0.0 || std::abs(p.s.real()) >= 1.0)
        throw InadmissibleParams("complementary series needs a real parameter in (-1, 1)");
      break;
    case Series::Discrete: {
      if (p.s.imag() != 0.0)
        throw InadmissibleParams("discrete series needs a real parameter");
      const double a = std::abs(p.s.real());
      const int n = static_cast<int>(std::lround((a + 1.0) / 2.0));
      if (n < 1 || a != 2.0 * n - 1.0)
        throw InadmissibleParams("discrete series parameter must be an odd integer");
      break;
    }
  }
}

double casimir_value(const RepParams& p) {
  validate(p);
  const cplx v = (1.0 - p.s * p.s) / 4.0;
  return v.real();
}

int Window::pos(int idx) const {
  if (k.empty() || idx < k.front() || idx > k.back()) return -1;
  return idx - k.front();
}

Window basis_window(const RepParams& p, int K) {
  validate(p);
  if (K < kMinK || K > kMaxK) throw InadmissibleParams("window size out of range");
  Window w;
  w.K = K;
  int lo = -K, hi = K;
  if (p.series == Series::Discrete) {
    const int n = discrete_n(p);
    if (K < n + kMinK) throw InadmissibleParams("window too small for the discrete anchor");
    if (p.s.real() > 0.0) lo = n; else hi = -n;
  }
  w.k.reserve(hi - lo + 1);
  for (int k = lo; k <= hi; ++k) w.k.push_back(k);

  const int m = w.size();
  w.weight.resize(m);
  const int anchor = w.pos(p.lowest());
  w.weight[anchor] = 1.0;
  for (int j = anchor + 1; j < m; ++j)
    w.weight[j] = w.weight[j - 1] * weight_ratio(p, w.k[j]);
  for (int j = anchor - 1; j >= 0; --j)
    w.weight[j] = w.weight[j + 1] * weight_ratio(p, w.k[j]);
  for (int j = 0; j < m; ++j)
    if (!(w.weight[j] > 0.0) || !std::isfinite(w.weight[j]))
      throw InadmissibleParams("weight recursion produced a nonpositive norm");

  w.lo_interior = m;
  int hi_int = -1;
  for (int j = 0; j < m; ++j) {
    if (std::abs(w.k[j]) <= K - 2) {
      w.lo_interior = std::min(w.lo_interior, j);
      hi_int = j;
    }
  }
  w.n_interior = hi_int >= w.lo_interior ? hi_int - w.lo_interior + 1 : 0;
  return w;
}

TruncatedOperator build_operator(const RepParams& p, int K, Op which, double c) {
  if (which == Op::Lc && !(c >= 0.0))
    throw InadmissibleParams("Lc needs a nonnegative twist");
  TruncatedOperator t;
  t.w = basis_window(p, K);
  t.m = raw_matrix(p, t.w, which, c);
  return t;
}

double lc_identity_check(const RepParams& p, double c, int K) {
  if (!(c >= 0.0) || !std::isfinite(c))
    throw InadmissibleParams("Lc needs a nonnegative twist");
  const Window w = basis_window(p, K);
  const Eigen::MatrixXcd x = raw_matrix(p, w, Op::X, 0.0);
  const Eigen::MatrixXcd y = raw_matrix(p, w, Op::Y, 0.0);
  const Eigen::MatrixXcd th = raw_matrix(p, w, Op::Theta, 0.0);
  const Eigen::MatrixXcd a = -(x * x + y * y + (c * c) * (th * th)) - 2.0 * c * (y * th);
  const Eigen::MatrixXcd yct = y + c * th;
  const Eigen::MatrixXcd b = -(x * x) - yct * yct - c * x;
  return interior_block(a - b, w).norm();
}

double coercivity_constant(const RepParams& p, double c, int K) {
  if (!(c >= 1.0))
    throw InadmissibleParams("coercivity range needs c >= 1");
  const Window w = basis_window(p, K);
  if (w.n_interior < 2) throw InadmissibleParams("window too small for the interior form");
  const ScaledOps ops = scaled_ops(p, w, c);
  const Eigen::MatrixXcd h_full = 0.5 * (ops.lc + ops.lc.adjoint());
  const Eigen::MatrixXcd g_full = ops.x.adjoint() * ops.x + ops.y.adjoint() * ops.y
                                  + ops.theta.adjoint() * ops.theta;
  const Eigen::MatrixXcd h = interior_block(h_full, w);
  const Eigen::MatrixXcd g = interior_block(g_full, w);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, g);
  if (es.info() != Eigen::Success)
    throw Singular("generalized eigensolve failed on the coercivity pencil");
  return es.eigenvalues().minCoeff();
}

Eigen::VectorXcd rhs_from_pairs(const Window& w,
                                const std::vector<std::pair<int, std::complex<double>>>& entries) {
  Eigen::VectorXcd f = Eigen::VectorXcd::Zero(w.size());
  for (const auto& [k, v] : entries) {
    const int j = w.pos(k);
    if (j < 0 || std::abs(k) > w.K - 2)
      throw std::invalid_argument("rhs index " + std::to_string(k) + " is not interior");
    f[j] += v;
  }
  return f;
}

SpectralSolution solve_poisson(const RepParams& p, double c, int K, const Eigen::VectorXcd& f) {
  if (!(c >= 1.0)) throw InadmissibleParams("poisson solve needs c >= 1");
  SpectralSolution sol;
  sol.w = basis_window(p, K);
  const int m = sol.w.size();
  if (f.size() != m) throw std::invalid_argument("rhs length does not match the window");
  for (int j = 0; j < m; ++j)
    if (f[j] != cplx(0.0, 0.0) && std::abs(sol.w.k[j]) > K - 2)
      throw std::invalid_argument("rhs must be supported on the interior");

  const Eigen::VectorXd d = sol.w.weight.cwiseSqrt();
  const ScaledOps ops = scaled_ops(p, sol.w, c);
  const Eigen::VectorXcd ft = d.asDiagonal() * f;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(ops.lc);
  qr.setThreshold(1e-13);
  if (qr.rank() < m) throw Singular("truncated operator is numerically singular");
  Eigen::VectorXcd ut = qr.solve(ft);
  ut += qr.solve(ft - ops.lc * ut);

  sol.u = d.cwiseInverse().asDiagonal() * ut;
  const Eigen::VectorXcd r = ops.lc * ut - ft;
  sol.residual = r.segment(sol.w.lo_interior, sol.w.n_interior).norm();
  if (!std::isfinite(sol.residual)) throw Singular("solve produced a nonfinite residual");
  return sol;
}

double weighted_norm(const Window& w, const Eigen::VectorXcd& f) {
  double acc = 0.0;
  for (int j = 0; j < w.size(); ++j) acc += w.weight[j] * std::norm(f[j]);
  return std::sqrt(acc);
}

}  // namespace kzclt
