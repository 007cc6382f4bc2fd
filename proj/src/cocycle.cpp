#include "kzclt/cocycle.hpp"

#include <cmath>
#include <cstdlib>
#include <optional>

namespace kzclt {

namespace {

constexpr std::int64_t kEntryLimit = std::int64_t{1} << 62;
constexpr std::int64_t kFlushEntry = std::int64_t{1} << 30;
constexpr std::int64_t kMoveCap = 1000000;

std::int64_t checked_add_mul(std::int64_t base, std::int64_t s, std::int64_t n) {
  const __int128 v = static_cast<__int128>(base) + static_cast<__int128>(s) * n;
  if (v > kEntryLimit || v < -kEntryLimit)
    throw ReductionDiverged("shear bulk overflowed the integer accumulator");
  return static_cast<std::int64_t>(v);
}

bool sign_canonical(const GroupElement& f) {
  for (double v : {f.a, f.b, f.c, f.d}) {
    if (v > 0.0) return true;
    if (v < 0.0) return false;
  }
  return true;
}

// shared by sigma_series and backward_word; the MatrixDriver keeps its own
// copy of the same two cases so it can live in the header
struct IncrementSource {
  IncrementSource(const DriverSpec& spec, double dt) {
    if (const auto* g = std::get_if<GeodesicSpec>(&spec)) {
      u = geodesic_increment(g->theta, dt);
    } else {
      const auto& b = std::get<ChartBrownianSpec>(spec);
      SimOptions opts;
      opts.path_index = b.path_index;
      wiener.emplace(b.seed, b.path_index, std::abs(dt), SimMode::ItoPolar, opts);
    }
  }

  GroupElement next() {
    if (!wiener) return u;
    const auto dw = wiener->next();
    return brownian_increment(dw.first, dw.second);
  }

  GroupElement u;
  std::optional<WienerPair> wiener;
};

Eigen::MatrixXd orthonormalized(const Eigen::MatrixXd& v) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(v);
  return qr.householderQ() * Eigen::MatrixXd::Identity(v.rows(), v.cols());
}

}  // namespace

std::complex<double> half_plane_point(const GroupElement& f) {
  return std::complex<double>(f.b, f.a) / std::complex<double>(f.d, f.c);
}

double frame_radius(const GroupElement& f) {
  const std::complex<double> z = half_plane_point(f);
  if (!(z.imag() > 0.0))
    throw std::invalid_argument("frame_radius: point not in the upper half plane");
  const double dx = z.real();
  const double dy = z.imag() - 1.0;
  return 0.5 * std::acosh(1.0 + (dx * dx + dy * dy) / (2.0 * z.imag()));
}

GroupElement geodesic_increment(double theta, double dt) {
  return compose(rotation(theta), compose(geodesic(dt), rotation(-theta)));
}

GroupElement brownian_increment(double dw1, double dw2) {
  return mat_exp_traceless(dw1, dw2, dw2);
}

OrigamiCocycle::OrigamiCocycle(const Origami& o, bool complement)
    : rep_(complement ? tautological_complement(o).rep : build_monodromy(o, false)) {
  const int d = rep_.dim;
  const int markings = static_cast<int>(rep_.marking_h.size());
  const IntMat id = IntMat::Identity(d, d);
  const IntMat zero = IntMat::Zero(d, d);
  cycle_len_.reserve(markings);
  cycle_nilp_.reserve(markings);
  minus_marking_.reserve(markings);
  minus_matrix_.reserve(markings);
  for (int mk = 0; mk < markings; ++mk) {
    IntMat p = id;
    int cur = mk;
    int len = 0;
    do {
      const auto mv = rep_.step(cur, Gen::T, true);
      p = imat_mul(*mv.m, p);
      cur = mv.to;
      ++len;
    } while (cur != mk);
    cycle_len_.push_back(len);
    IntMat n = p - id;
    if (!imat_eq(imat_mul(n, n), zero))
      throw std::logic_error("T-cycle product is not unipotent of index <= 2");
    cycle_nilp_.push_back(std::move(n));

    const auto s1 = rep_.step(mk, Gen::S, true);
    const auto s2 = rep_.step(s1.to, Gen::S, true);
    minus_marking_.push_back(s2.to);
    minus_matrix_.push_back(imat_mul(*s2.m, *s1.m));
  }
}

CocycleState OrigamiCocycle::initial_state(const GroupElement& frame0) const {
  CocycleState st;
  st.frame = frame0;
  st.marking = 0;
  st.acc = IntMat::Identity(dim(), dim());
  reduce(st);
  st.acc = IntMat::Identity(dim(), dim());
  st.segment_moves = 0;
  st.stats = CuspStats{};
  return st;
}

void OrigamiCocycle::step(CocycleState& st, const GroupElement& u) const {
  st.frame = compose(st.frame, u);
  reduce(st);
}

void OrigamiCocycle::reduce(CocycleState& st) const {
  // |z|^2 within kBandTol of 1 counts as the boundary circle; ties there go
  // to the Re <= 0 half, and Re = 1/2 shears to -1/2 via floor(re + 1/2)
  constexpr double kBandTol = 2e-12;
  constexpr double kReTol = 1e-12;
  std::int64_t moves_here = 0;
  for (;;) {
    if (moves_here > kMoveCap)
      throw ReductionDiverged("reduction exceeded the move cap");
    const std::complex<double> z = half_plane_point(st.frame);
    const double re = z.real();
    const double im = z.imag();
    if (!std::isfinite(re) || !std::isfinite(im) || im <= 0.0)
      throw ReductionDiverged("chart point left the upper half plane");
    if (im > st.stats.max_height) st.stats.max_height = im;
    const double shift = std::floor(re + 0.5);
    if (shift != 0.0) {
      if (std::abs(shift) > 9.0e15)
        throw ReductionDiverged("shear block beyond integer range");
      const std::int64_t m = static_cast<std::int64_t>(shift);
      apply_t_block(st, m);
      moves_here += std::llabs(m);
      if (std::llabs(m) > st.stats.max_shear) st.stats.max_shear = std::llabs(m);
      continue;
    }
    const double n2 = re * re + im * im;
    if (n2 < 1.0 - kBandTol || (std::abs(n2 - 1.0) <= kBandTol && re > kReTol)) {
      apply_s(st);
      ++moves_here;
      continue;
    }
    break;
  }
  if (!sign_canonical(st.frame)) {
    apply_minus(st);
    ++moves_here;
  }
  st.stats.moves += moves_here;
  st.segment_moves += moves_here;
}

void OrigamiCocycle::apply_t_block(CocycleState& st, std::int64_t m) const {
  const double mm = static_cast<double>(m);
  st.frame = GroupElement{st.frame.a - mm * st.frame.c, st.frame.b - mm * st.frame.d,
                          st.frame.c, st.frame.d};
  const bool fwd = m > 0;
  const std::int64_t cnt = fwd ? m : -m;
  const int len = cycle_len_[st.marking];
  const std::int64_t q = cnt / len;
  const std::int64_t r = cnt % len;
  if (q > 0) {
    // q full T-cycles act by P^q = I + qN (or I - qN backward), N = P - I
    const IntMat& n = cycle_nilp_[st.marking];
    const int d = dim();
    IntMat p = IntMat::Identity(d, d);
    const std::int64_t sq = fwd ? q : -q;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (n(i, j) != 0) p(i, j) = checked_add_mul(p(i, j), sq, n(i, j));
    st.acc = imat_mul(p, st.acc);
  }
  for (std::int64_t i = 0; i < r; ++i) {
    const auto mv = rep_.step(st.marking, Gen::T, fwd);
    st.acc = imat_mul(*mv.m, st.acc);
    st.marking = mv.to;
  }
}

void OrigamiCocycle::apply_s(CocycleState& st) const {
  st.frame = GroupElement{st.frame.c, st.frame.d, -st.frame.a, -st.frame.b};
  const auto mv = rep_.step(st.marking, Gen::S, true);
  st.acc = imat_mul(*mv.m, st.acc);
  st.marking = mv.to;
}

void OrigamiCocycle::apply_minus(CocycleState& st) const {
  st.frame = GroupElement{-st.frame.a, -st.frame.b, -st.frame.c, -st.frame.d};
  st.acc = imat_mul(minus_matrix_[st.marking], st.acc);
  st.marking = minus_marking_[st.marking];
}

Eigen::MatrixXd OrigamiCocycle::flush(CocycleState& st) const {
  Eigen::MatrixXd m = st.acc.cast<double>();
  st.acc = IntMat::Identity(dim(), dim());
  st.segment_moves = 0;
  return m;
}

IntMat OrigamiCocycle::flush_exact(CocycleState& st) const {
  IntMat m = st.acc;
  st.acc = IntMat::Identity(dim(), dim());
  st.segment_moves = 0;
  return m;
}

bool OrigamiCocycle::wants_flush(const CocycleState& st) const {
  if (st.segment_moves >= 10) return true;
  return st.acc.cwiseAbs().maxCoeff() >= kFlushEntry;
}

CocycleMatrixDriver::CocycleMatrixDriver(const OrigamiCocycle& coc, CocycleState start,
                                         DriverSpec spec, double dt)
    : coc_(&coc), st_(std::move(start)), dt_(dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("driver needs dt > 0");
  if (const auto* g = std::get_if<GeodesicSpec>(&spec)) {
    geo_u_ = geodesic_increment(g->theta, dt);
    geodesic_ = true;
  } else {
    const auto& b = std::get<ChartBrownianSpec>(spec);
    SimOptions opts;
    opts.path_index = b.path_index;
    wiener_ = std::make_unique<WienerPair>(b.seed, b.path_index, dt, SimMode::ItoPolar, opts);
    geodesic_ = false;
  }
}

GroupElement CocycleMatrixDriver::increment() {
  if (geodesic_) return geo_u_;
  const auto dw = wiener_->next();
  return brownian_increment(dw.first, dw.second);
}

double CocycleMatrixDriver::next(Eigen::MatrixXd& m) {
  double elapsed = 0.0;
  while (elapsed + 1e-12 < 1.0 && !coc_->wants_flush(st_)) {
    coc_->step(st_, increment());
    elapsed += dt_;
  }
  m = coc_->flush(st_);
  return elapsed;
}

SigmaTracker::SigmaTracker(const Eigen::MatrixXd& v0) : q(orthonormalized(v0)) {}

void SigmaTracker::absorb(const Eigen::MatrixXd& seg) {
  sigma += wedge_lognorm(seg, KFrame(q));
  q = orthonormalized(seg * q);
}

SigmaSeries sigma_series(const OrigamiCocycle& coc, const CocycleState& base,
                         const Eigen::MatrixXd& v0, const DriverSpec& spec, double horizon,
                         double dt, int stride) {
  if (!(horizon > 0.0) || !(dt > 0.0) || stride < 1)
    throw std::invalid_argument("sigma_series: need horizon > 0, dt > 0, stride >= 1");
  CocycleState st = base;
  st.acc = IntMat::Identity(coc.dim(), coc.dim());
  st.segment_moves = 0;
  SigmaTracker tracker(v0);
  IncrementSource src(spec, dt);
  SigmaSeries out;
  out.time.push_back(0.0);
  out.value.push_back(0.0);
  const long long n = std::llround(horizon / dt);
  for (long long i = 1; i <= n; ++i) {
    coc.step(st, src.next());
    if (coc.wants_flush(st)) tracker.absorb(coc.flush(st));
    if (i % stride == 0) {
      tracker.absorb(coc.flush(st));
      out.time.push_back(static_cast<double>(i) * dt);
      out.value.push_back(tracker.sigma);
    }
  }
  return out;
}

SigmaSeries sigma_series_tautological_geodesic(double horizon, double dt, int stride) {
  if (!(horizon > 0.0) || !(dt > 0.0) || stride < 1)
    throw std::invalid_argument("sigma_series: need horizon > 0, dt > 0, stride >= 1");
  SigmaSeries out;
  out.time.push_back(0.0);
  out.value.push_back(0.0);
  const long long n = std::llround(horizon / dt);
  for (long long i = stride; i <= n; i += stride) {
    const double tau = static_cast<double>(i) * dt;
    out.time.push_back(tau);
    out.value.push_back(tau);  // sigma(g_t 0) = t, exactly
  }
  return out;
}

SigmaSeries sigma_series_tautological_brownian(const BrownianPath& path, int stride) {
  if (stride < 1) throw std::invalid_argument("sigma_series: stride >= 1");
  SigmaSeries out;
  for (std::size_t i = 0; i < path.t.size(); i += static_cast<std::size_t>(stride)) {
    out.time.push_back(path.s[i]);
    out.value.push_back(path.t[i]);  // sigma = hyperbolic radius of the leafwise point
  }
  return out;
}

double TautologicalModel::sigma(const DiskPoint& z) { return dist(DiskPoint{0.0, 0.0}, z); }

double TautologicalModel::laplacian_sigma(double t) {
  if (!(t > 0.0)) throw std::invalid_argument("laplacian_sigma needs t > 0");
  return 2.0 / std::tanh(2.0 * t);
}

std::vector<Eigen::MatrixXd> backward_word(const OrigamiCocycle& coc, CocycleState base,
                                           const DriverSpec& reversed_spec, double horizon,
                                           double dt) {
  if (!(horizon > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("backward_word: need horizon > 0, dt > 0");
  base.acc = IntMat::Identity(coc.dim(), coc.dim());
  base.segment_moves = 0;
  // geodesics are reversed by flowing with -dt; a reversed Brownian driver is
  // just an independent Brownian driver, so its spec is used as given
  const double dt_eff = std::holds_alternative<GeodesicSpec>(reversed_spec) ? -dt : dt;
  IncrementSource src(reversed_spec, dt_eff);
  std::vector<IntMat> segs;
  const long long n = std::llround(horizon / dt);
  for (long long i = 1; i <= n; ++i) {
    coc.step(base, src.next());
    if (coc.wants_flush(base)) segs.push_back(coc.flush_exact(base));
  }
  segs.push_back(coc.flush_exact(base));
  std::vector<Eigen::MatrixXd> word;
  word.reserve(segs.size());
  for (auto it = segs.rbegin(); it != segs.rend(); ++it)
    word.push_back(int_inverse(*it).cast<double>());
  return word;
}

std::vector<long long> cf_digits(double x, int count) {
  std::vector<long long> out;
  long double v = x;
  for (int i = 0; i < count; ++i) {
    const long double fl = std::floor(v);
    if (fl > 9.0e17L || fl < -9.0e17L) break;
    out.push_back(static_cast<long long>(fl));
    const long double frac = v - fl;
    if (frac < 1e-15L) break;
    v = 1.0L / frac;
  }
  return out;
}

double cf_slope_oracle(double x, double horizon) {
  if (!(horizon > 0.0)) throw std::invalid_argument("cf_slope_oracle needs horizon > 0");
  long double v = x;
  long double q_prev = 0.0L;  // q_{-1}
  long double q_cur = 1.0L;   // q_0
  long double best = 0.0L;    // log q_0
  long double frac = v - std::floor(v);
  int guard = 0;
  while (frac > 1e-15L && guard++ < 200) {
    v = 1.0L / frac;
    const long double digit = std::floor(v);
    frac = v - digit;
    const long double q_next = digit * q_cur + q_prev;
    const long double lq = std::log(q_next);
    if (lq > static_cast<long double>(horizon)) break;
    best = lq;
    q_prev = q_cur;
    q_cur = q_next;
  }
  return static_cast<double>(best) / horizon;
}

}  // namespace kzclt
