#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace kzclt {

using IntMat = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using IntVec = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

// exact integer matrix product with overflow checking
IntMat imat_mul(const IntMat& a, const IntMat& b);

inline bool imat_eq(const IntMat& a, const IntMat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return a.size() == 0 || (a - b).cwiseAbs().maxCoeff() == 0;
}

struct NotConnected : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TrivialComplement : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// permutations on {0..n-1}, stored as image arrays
using Perm = std::vector<int>;

Perm perm_inverse(const Perm& p);
// (f o g)(x) = f(g(x))
Perm perm_compose(const Perm& f, const Perm& g);
std::vector<std::vector<int>> perm_cycles(const Perm& p);
bool is_permutation(const Perm& p);

// Smith normal form with tracked transforms: u * a * v = d, all unimodular.
struct Snf {
  IntMat d, u, uinv, v, vinv;
  int rank = 0;
};
Snf smith_normal_form(const IntMat& a);
// one exact solution of a x = b given the decomposition of a; throws if none
IntVec snf_solve(const Snf& s, const IntVec& b);
// columns spanning ker(a) as a saturated sublattice
IntMat snf_kernel(const Snf& s);
// inverse of a unimodular square matrix (throws if not unimodular)
IntMat int_inverse(const IntMat& m);

// congruence reduction of an antisymmetric integer matrix:
// e^T p e = [[0, D], [-D, 0]] (zero rows/cols trailing if p is degenerate),
// D diagonal positive with d_1 | d_2 | ...
struct PairingForm {
  IntMat e;
  std::vector<std::int64_t> divisors;
};
PairingForm antisymmetric_normal_form(const IntMat& p);

// exact intersection number of two 1-cycles given in edge coordinates
// (first n entries: x_i coefficients, last n: y_i)
std::int64_t intersection_pairing(const Perm& h, const Perm& v,
                                  const IntVec& a, const IntVec& b);

struct Origami {
  int n = 0;
  Perm h, v;  // right and top neighbour of each square
  std::vector<std::vector<int>> vertex_cycles;
  std::vector<int> stratum;  // cone point orders, descending, order >= 1
  int genus = 0;
  // columns: symplectic homology basis in edge coordinates (2n x 2g)
  IntMat basis;
  // pairing in that basis, [[0, I], [-I, 0]] after normalization
  IntMat j_form;
  // decomposition of [basis | cone-point loops], for coordinate extraction
  Snf coord_snf;

  // coordinates of a cycle in the homology basis, modulo the cone loops
  IntVec homology_coords(const IntVec& cycle) const;
};

Origami origami_build(const Perm& h, const Perm& v);
// {"n": ..., "h": [...], "v": [...]} with 1-indexed entries
Origami origami_from_json(const std::string& text);

Origami builtin_torus();
Origami builtin_h2();  // 3-square L in H(2)
Origami builtin_ew();  // 8-square Eierlegende Wollmilchsau

enum class Gen { T = 0, S = 1 };

// marking image under one affine generator
Perm gen_target_h(Gen g, const Perm& h, const Perm& v);
Perm gen_target_v(Gen g, const Perm& h, const Perm& v);
// induced chain map on edge vectors, landing in the target marking
IntVec chain_map(Gen g, const Perm& h, const Perm& v, const IntVec& z);

struct HomologyAction {
  IntMat matrix;  // source basis -> target basis
  Perm new_h, new_v;
};
HomologyAction homology_action(const Origami& o, Gen g);

// the finite S,T-orbit of markings with one integer matrix per move
struct MonodromyRep {
  int dim = 0;
  IntMat j_form;
  std::vector<std::int64_t> divisors;
  std::vector<Perm> marking_h, marking_v;
  std::vector<IntMat> marking_basis;  // 2n x dim, per marking
  std::vector<std::array<int, 2>> target;            // [marking][gen]
  std::vector<std::array<IntMat, 2>> matrix;         // [marking][gen]
  std::vector<std::array<int, 2>> backward;          // inverse moves
  std::vector<std::array<IntMat, 2>> backward_matrix;

  int find_marking(const Perm& h, const Perm& v) const;  // -1 if absent
  struct Move {
    int to;
    const IntMat* m;
  };
  Move step(int marking, Gen g, bool forward) const;
};

MonodromyRep build_monodromy(const Origami& o, bool complement,
                             std::size_t max_markings = 10000);

// J-orthogonal complement of the tautological plane, with the restricted rep
struct ComplementRep {
  IntMat basis;  // 2n x (2g-2), marking 0
  IntMat j_form;
  std::vector<std::int64_t> divisors;
  MonodromyRep rep;
};
ComplementRep tautological_complement(const Origami& o);

// Closure of (marking, accumulated matrix) pairs under forward and backward
// generator moves starting from (0, I).  Returns the number of distinct
// pairs when the enumeration terminates, -1 when it exceeds `cap` states or
// any matrix entry passes `entry_cap` (either one certifies an infinite
// monodromy group on desk-size examples).
long long monodromy_orbit_size(const MonodromyRep& rep, long long cap = 100000,
                               std::int64_t entry_cap = 1 << 20);

}  // namespace kzclt
