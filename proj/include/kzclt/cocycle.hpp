#pragma once
// Kontsevich-Zorich cocycle over the Teichmueller disk of an origami.
//
// The state is a frame F in SL(2,R) together with a marking of the origami
// (a vertex of its SL(2,Z)-orbit graph) and an exact integer matrix that
// accumulates the induced action on homology coordinates.  Driver increments
// (geodesic or Brownian) multiply the frame on the right; reduction to the
// standard fundamental domain |Re z| <= 1/2, |z| >= 1 of the upper half
// plane multiplies it on the left by integer generators, and each such move
// simultaneously advances the marking and left-multiplies the accumulator by
// the corresponding homology matrix.  The chart point is z = F i (Moebius);
// the pair (F, marking) and (g^-1 F, g . marking) describe the same surface,
// which is what makes the accumulated matrix a cocycle over the driver.
//
// log-norm observables use the Euclidean norm on homology coordinates, not
// the Hodge norm; the two differ inside cusp excursions, so the reducer
// records excursion statistics (max chart height, largest shear block) for
// diagnostics.  Asymptotic quantities (exponents, variances) are unaffected.
//
// Markings are exact permutation pairs, so the generator action is an action
// of the free group on {S, T}.  Stepping by u and then by u^{-1} undoes the
// reduction word exactly as long as the chart point interacts with one wall
// at a time (any depth of shear included); a round trip around a corner of
// the domain can spell a braid relator instead, which lands on a relabeled
// copy of the same pair with the exact relabeling base change accumulated.
// Such states stay equivalent for every observable built on log norms.

#include <complex>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "kzclt/brownian.hpp"
#include "kzclt/multilinear.hpp"
#include "kzclt/origami.hpp"
#include "kzclt/sl2.hpp"

namespace kzclt {

struct ReductionDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// z = F i in the upper half plane, computed as (ai + b) / (ci + d).
std::complex<double> half_plane_point(const GroupElement& f);

// Hyperbolic distance (curvature -4) from i to F i.  For F = geodesic(t)
// this is |t|, matching the disk-model radius of the tautological flow.
double frame_radius(const GroupElement& f);

// One driver increment.  geodesic_increment(theta, dt) is the time-dt flow
// along the unit-speed geodesic leaving i toward boundary angle theta
// (conjugated diagonal flow, so increments with equal theta telescope).
// brownian_increment is exp of the sampled Lie-algebra element
// 2 (dw1 X + dw2 Y); the exact exponential makes the scheme Stratonovich,
// so no explicit drift correction appears and the chart radius develops
// the coth(2t) drift of the polar model on its own.
GroupElement geodesic_increment(double theta, double dt);
GroupElement brownian_increment(double dw1, double dw2);

struct CuspStats {
  double max_height = 0.0;    // sup of Im z seen during reductions
  std::int64_t max_shear = 0; // largest single |m| in a T^m block
  std::int64_t moves = 0;     // total generator moves applied
};

struct CocycleState {
  GroupElement frame;            // reduced representative, sign-canonical
  int marking = 0;               // vertex of the orbit graph
  IntMat acc;                    // homology matrix since the last flush
  std::int64_t segment_moves = 0;
  CuspStats stats;
};

// Immutable per-origami tables driving the reduction bookkeeping.  Shared
// by every state and driver over the same model, safe to use from several
// threads as long as each CocycleState stays on one thread.
class OrigamiCocycle {
 public:
  // complement = true restricts to the 2g-2 dimensional symplectic
  // complement of the tautological plane; false keeps all of H_1.
  OrigamiCocycle(const Origami& o, bool complement);

  int dim() const { return rep_.dim; }
  const MonodromyRep& rep() const { return rep_; }
  const IntMat& j_form() const { return rep_.j_form; }

  // Reduce frame0 into the fundamental domain, then start with identity
  // accumulator and clean stats in whatever marking the reduction lands in.
  CocycleState initial_state(const GroupElement& frame0 = GroupElement{}) const;

  // frame <- frame * u followed by reduction.  Throws ReductionDiverged if
  // the chart point leaves the upper half plane, exceeds integer range, or
  // needs more than 10^6 generator moves (bulk T^m counts as |m| moves).
  void step(CocycleState& st, const GroupElement& u) const;

  // Hand out the accumulated homology matrix and reset it to the identity.
  // flush() casts to double for norm work, flush_exact() keeps int64.
  Eigen::MatrixXd flush(CocycleState& st) const;
  IntMat flush_exact(CocycleState& st) const;

  // Cadence helper: true once the segment holds ~10 moves or the entries
  // approach 2^30 (so products of two segments stay far from overflow).
  bool wants_flush(const CocycleState& st) const;

 private:
  void reduce(CocycleState& st) const;
  void apply_t_block(CocycleState& st, std::int64_t m) const;
  void apply_s(CocycleState& st) const;
  void apply_minus(CocycleState& st) const;

  MonodromyRep rep_;
  std::vector<int> cycle_len_;       // T-orbit length per marking
  std::vector<IntMat> cycle_nilp_;   // P - I for the marking's T-cycle, N^2 = 0
  std::vector<int> minus_marking_;   // chart move for -I = S^2
  std::vector<IntMat> minus_matrix_;
};

// Driver specs for evolving a cocycle state.  The Brownian driver draws its
// two Wiener streams from (seed, path_index) exactly like the polar model,
// so radial laws can be cross-validated stream for stream.
struct GeodesicSpec {
  double theta = 0.0;
};
struct ChartBrownianSpec {
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
};
using DriverSpec = std::variant<GeodesicSpec, ChartBrownianSpec>;

// MatrixDriver adapter: next() advances until the segment holds ~10 moves,
// ~1 time unit, or large entries, then flushes into M.
class CocycleMatrixDriver : public MatrixDriver {
 public:
  CocycleMatrixDriver(const OrigamiCocycle& coc, CocycleState start, DriverSpec spec,
                      double dt);

  int dim() const override { return coc_->dim(); }
  double next(Eigen::MatrixXd& m) override;

  const CocycleState& state() const { return st_; }

 private:
  GroupElement increment();

  const OrigamiCocycle* coc_;
  CocycleState st_;
  double dt_;
  GroupElement geo_u_;
  bool geodesic_ = true;
  std::unique_ptr<WienerPair> wiener_;
};

// Running log-norm of the k-th exterior power along flushed segments.
// Keeps an orthonormal frame; absorbing segment A adds the wedge log-norm
// of A on the current frame and pushes the frame forward, so the total
// telescopes to the log-norm of the full product on the initial frame.
struct SigmaTracker {
  explicit SigmaTracker(const Eigen::MatrixXd& v0);
  void absorb(const Eigen::MatrixXd& seg);

  Eigen::MatrixXd q;   // orthonormal columns
  double sigma = 0.0;
};

struct SigmaSeries {
  std::vector<double> time;
  std::vector<double> value;
};

// sigma sampled every `stride` steps of size dt up to horizon T, starting
// from `base` (whose accumulator is consumed; pass a freshly flushed state).
SigmaSeries sigma_series(const OrigamiCocycle& coc, const CocycleState& base,
                         const Eigen::MatrixXd& v0, const DriverSpec& spec, double horizon,
                         double dt, int stride);

// Tautological model closed forms: sigma(g_t 0) = t exactly for the
// geodesic; for Brownian paths sigma equals the polar radius process.
SigmaSeries sigma_series_tautological_geodesic(double horizon, double dt, int stride);
SigmaSeries sigma_series_tautological_brownian(const BrownianPath& path, int stride);

struct TautologicalModel {
  static double lambda() { return 1.0; }
  static double sigma(const DiskPoint& z);        // = dist(0, z)
  static double laplacian_sigma(double t);        // = 2 coth(2t)
};

// Backward word for Oseledets extraction: run the time-reversed driver for
// horizon units, then return the exact inverses of the flushed segments in
// replay order (word[0] is applied first when replayed forward).
std::vector<Eigen::MatrixXd> backward_word(const OrigamiCocycle& coc, CocycleState base,
                                           const DriverSpec& reversed_spec, double horizon,
                                           double dt);

// Continued fraction slope oracle: expand the boundary endpoint x with the
// Gauss map, take denominators q_n while log q_n <= horizon, and return
// log q_N / horizon for the last admissible N.  The top exponent of the
// torus cocycle along the geodesic toward x matches this slope.
double cf_slope_oracle(double x, double horizon);
std::vector<long long> cf_digits(double x, int count);

}  // namespace kzclt
