#include "kzclt/origami.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <utility>

#include "json.hpp"

namespace kzclt {

namespace {

constexpr std::int64_t kLimit = std::int64_t{1} << 62;

std::int64_t checked(__int128 x, const char* ctx) {
  if (x > kLimit || x < -kLimit)
    throw std::overflow_error(std::string("integer overflow in ") + ctx);
  return static_cast<std::int64_t>(x);
}

// row dst += q * row src
void axpy_row(IntMat& m, int dst, int src, std::int64_t q) {
  for (int j = 0; j < m.cols(); ++j)
    m(dst, j) = checked(static_cast<__int128>(m(dst, j)) +
                            static_cast<__int128>(q) * m(src, j),
                        "row update");
}

// col dst += q * col src
void axpy_col(IntMat& m, int dst, int src, std::int64_t q) {
  for (int i = 0; i < m.rows(); ++i)
    m(i, dst) = checked(static_cast<__int128>(m(i, dst)) +
                            static_cast<__int128>(q) * m(i, src),
                        "column update");
}

}  // namespace

IntMat imat_mul(const IntMat& a, const IntMat& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("imat_mul: shape mismatch");
  IntMat out(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      __int128 acc = 0;
      for (int k = 0; k < a.cols(); ++k)
        acc += static_cast<__int128>(a(i, k)) * b(k, j);
      out(i, j) = checked(acc, "matrix product");
    }
  return out;
}

bool is_permutation(const Perm& p) {
  const int n = static_cast<int>(p.size());
  std::vector<char> seen(n, 0);
  for (int x : p) {
    if (x < 0 || x >= n || seen[x]) return false;
    seen[x] = 1;
  }
  return n > 0;
}

Perm perm_inverse(const Perm& p) {
  Perm inv(p.size());
  for (int i = 0; i < static_cast<int>(p.size()); ++i) inv[p[i]] = i;
  return inv;
}

Perm perm_compose(const Perm& f, const Perm& g) {
  if (f.size() != g.size())
    throw std::invalid_argument("perm_compose: size mismatch");
  Perm out(f.size());
  for (int i = 0; i < static_cast<int>(f.size()); ++i) out[i] = f[g[i]];
  return out;
}

std::vector<std::vector<int>> perm_cycles(const Perm& p) {
  std::vector<std::vector<int>> cycles;
  std::vector<char> seen(p.size(), 0);
  for (int i = 0; i < static_cast<int>(p.size()); ++i) {
    if (seen[i]) continue;
    std::vector<int> cyc;
    int j = i;
    while (!seen[j]) {
      seen[j] = 1;
      cyc.push_back(j);
      j = p[j];
    }
    cycles.push_back(std::move(cyc));
  }
  return cycles;
}

Snf smith_normal_form(const IntMat& a) {
  Snf s;
  const int m = static_cast<int>(a.rows());
  const int k = static_cast<int>(a.cols());
  s.d = a;
  s.u = IntMat::Identity(m, m);
  s.uinv = IntMat::Identity(m, m);
  s.v = IntMat::Identity(k, k);
  s.vinv = IntMat::Identity(k, k);
  IntMat& d = s.d;

  auto row_swap = [&](int x, int y) {
    if (x == y) return;
    d.row(x).swap(d.row(y));
    s.u.row(x).swap(s.u.row(y));
    s.uinv.col(x).swap(s.uinv.col(y));
  };
  auto row_neg = [&](int x) {
    d.row(x) = -d.row(x);
    s.u.row(x) = -s.u.row(x);
    s.uinv.col(x) = -s.uinv.col(x);
  };
  auto row_add = [&](int dst, int src, std::int64_t q) {
    if (q == 0) return;
    axpy_row(d, dst, src, q);
    axpy_row(s.u, dst, src, q);
    axpy_col(s.uinv, src, dst, -q);
  };
  auto col_swap = [&](int x, int y) {
    if (x == y) return;
    d.col(x).swap(d.col(y));
    s.v.col(x).swap(s.v.col(y));
    s.vinv.row(x).swap(s.vinv.row(y));
  };
  auto col_add = [&](int dst, int src, std::int64_t q) {
    if (q == 0) return;
    axpy_col(d, dst, src, q);
    axpy_col(s.v, dst, src, q);
    axpy_row(s.vinv, src, dst, -q);
  };

  const int mn = std::min(m, k);
  int t = 0;
  while (t < mn) {
    int pi = -1, pj = -1;
    std::int64_t best = 0;
    for (int i = t; i < m; ++i)
      for (int j = t; j < k; ++j) {
        std::int64_t x = d(i, j);
        if (x == 0) continue;
        std::int64_t ax = x < 0 ? -x : x;
        if (pi < 0 || ax < best) {
          best = ax;
          pi = i;
          pj = j;
        }
      }
    if (pi < 0) break;
    row_swap(t, pi);
    col_swap(t, pj);
    bool redo = true;
    while (redo) {
      redo = false;
      for (int i = t + 1; i < m; ++i) {
        if (d(i, t) == 0) continue;
        row_add(i, t, -(d(i, t) / d(t, t)));
        if (d(i, t) != 0) {  // remainder is a smaller pivot
          row_swap(t, i);
          redo = true;
          break;
        }
      }
      if (redo) continue;
      for (int j = t + 1; j < k; ++j) {
        if (d(t, j) == 0) continue;
        col_add(j, t, -(d(t, j) / d(t, t)));
        if (d(t, j) != 0) {
          col_swap(t, j);
          redo = true;
          break;
        }
      }
    }
    bool divides = true;
    for (int i = t + 1; i < m && divides; ++i)
      for (int j = t + 1; j < k && divides; ++j)
        if (d(i, j) % d(t, t) != 0) {
          row_add(t, i, 1);
          divides = false;
        }
    if (!divides) continue;  // redo the block with the mixed-in row
    if (d(t, t) < 0) row_neg(t);
    ++t;
  }
  s.rank = t;
  return s;
}

IntVec snf_solve(const Snf& s, const IntVec& b) {
  const int m = static_cast<int>(s.d.rows());
  const int k = static_cast<int>(s.d.cols());
  if (b.size() != m) throw std::invalid_argument("snf_solve: size mismatch");
  IntVec y = imat_mul(s.u, b);
  IntVec z = IntVec::Zero(k);
  for (int i = 0; i < m; ++i) {
    std::int64_t di = (i < std::min(m, k)) ? s.d(i, i) : 0;
    if (di != 0) {
      if (y(i) % di != 0)
        throw std::runtime_error("snf_solve: no integral solution");
      z(i) = y(i) / di;
    } else if (y(i) != 0) {
      throw std::runtime_error("snf_solve: inconsistent system");
    }
  }
  return imat_mul(s.v, z);
}

IntMat snf_kernel(const Snf& s) {
  const int k = static_cast<int>(s.d.cols());
  return s.v.rightCols(k - s.rank);
}

IntMat int_inverse(const IntMat& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("int_inverse: matrix must be square");
  Snf s = smith_normal_form(m);
  const int n = static_cast<int>(m.rows());
  if (s.rank != n)
    throw std::invalid_argument("int_inverse: matrix is singular");
  for (int i = 0; i < n; ++i)
    if (s.d(i, i) != 1)
      throw std::invalid_argument("int_inverse: matrix is not unimodular");
  // u m v = 1 so the inverse is v u
  return imat_mul(s.v, s.u);
}

PairingForm antisymmetric_normal_form(const IntMat& pIn) {
  const int m = static_cast<int>(pIn.rows());
  if (pIn.cols() != m)
    throw std::invalid_argument("antisymmetric_normal_form: must be square");
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (pIn(i, j) != -pIn(j, i))
        throw std::invalid_argument(
            "antisymmetric_normal_form: matrix is not antisymmetric");

  IntMat p = pIn;
  IntMat e = IntMat::Identity(m, m);
  // congruence ops keep p = e^T pIn e
  auto cswap = [&](int a, int b) {
    if (a == b) return;
    p.col(a).swap(p.col(b));
    p.row(a).swap(p.row(b));
    e.col(a).swap(e.col(b));
  };
  auto cneg = [&](int a) {
    p.col(a) = -p.col(a);
    p.row(a) = -p.row(a);
    e.col(a) = -e.col(a);
  };
  auto cadd = [&](int dst, int src, std::int64_t q) {
    if (q == 0) return;
    axpy_col(p, dst, src, q);
    axpy_row(p, dst, src, q);
    axpy_col(e, dst, src, q);
  };

  auto reduce = [&]() {
    int t = 0;
    while (t + 1 < m) {
      int pi = -1, pj = -1;
      std::int64_t best = 0;
      for (int i = t; i < m; ++i)
        for (int j = t; j < m; ++j) {
          std::int64_t x = p(i, j);
          if (x == 0) continue;
          std::int64_t ax = x < 0 ? -x : x;
          if (pi < 0 || ax < best) {
            best = ax;
            pi = i;
            pj = j;
          }
        }
      if (pi < 0) break;
      cswap(t, pi);
      int nj = (pj == t) ? pi : pj;
      cswap(t + 1, nj);
      if (p(t, t + 1) < 0) cneg(t + 1);
      bool clean = true;
      for (int j = t + 2; j < m; ++j) {
        if (p(t, j) != 0) {
          cadd(j, t + 1, -(p(t, j) / p(t, t + 1)));
          if (p(t, j) != 0) clean = false;
        }
        if (p(t + 1, j) != 0) {
          cadd(j, t, -(p(t + 1, j) / p(t + 1, t)));
          if (p(t + 1, j) != 0) clean = false;
        }
      }
      if (!clean) continue;
      t += 2;
    }
    return t / 2;  // reduced blocks
  };

  int blocks = reduce();
  for (int round = 0; round < 200; ++round) {
    bool ok = true;
    for (int b = 0; b + 1 < blocks && ok; ++b)
      if (p(2 * b + 2, 2 * b + 3) % p(2 * b, 2 * b + 1) != 0) {
        cadd(2 * b, 2 * b + 2, 1);  // mix the blocks, then re-reduce
        blocks = reduce();
        ok = false;
      }
    if (ok) break;
    if (round == 199)
      throw std::logic_error(
          "antisymmetric_normal_form: divisor chain did not settle");
  }

  PairingForm out;
  for (int b = 0; b < blocks; ++b) out.divisors.push_back(p(2 * b, 2 * b + 1));
  // reorder interleaved pairs to the [[0, D], [-D, 0]] layout
  std::vector<int> order;
  for (int b = 0; b < blocks; ++b) order.push_back(2 * b);
  for (int b = 0; b < blocks; ++b) order.push_back(2 * b + 1);
  for (int j = 2 * blocks; j < m; ++j) order.push_back(j);
  IntMat e2(m, m), p2(m, m);
  for (int c = 0; c < m; ++c) e2.col(c) = e.col(order[c]);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) p2(r, c) = p(order[r], order[c]);
  // sanity: exact block shape
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) {
      std::int64_t want = 0;
      if (r < blocks && c == r + blocks) want = out.divisors[r];
      if (c < blocks && r == c + blocks) want = -out.divisors[c];
      if (p2(r, c) != want)
        throw std::logic_error("antisymmetric_normal_form: bad block shape");
    }
  out.e = std::move(e2);
  return out;
}

std::int64_t intersection_pairing(const Perm& h, const Perm& v,
                                  const IntVec& a, const IntVec& b) {
  const int n = static_cast<int>(h.size());
  if (v.size() != h.size() || a.size() != 2 * n || b.size() != 2 * n)
    throw std::invalid_argument("intersection_pairing: size mismatch");
  Perm hinv = perm_inverse(h);
  Perm vinv = perm_inverse(v);
  // train-track crossings: one per square between the two channel crosses
  __int128 acc = 0;
  for (int i = 0; i < n; ++i) {
    acc += static_cast<__int128>(a(i)) * b(n + vinv[i]);
    acc -= static_cast<__int128>(a(n + i)) * b(hinv[i]);
  }
  return checked(acc, "intersection pairing");
}

namespace {

// small loops around the cone points, one edge chain per vertex cycle
IntMat vertex_loop_chains(const Perm& h, const Perm& v,
                          const std::vector<std::vector<int>>& cycles) {
  const int n = static_cast<int>(h.size());
  Perm hinv = perm_inverse(h);
  Perm vinv = perm_inverse(v);
  IntMat loops = IntMat::Zero(2 * n, static_cast<int>(cycles.size()));
  for (int q = 0; q < static_cast<int>(cycles.size()); ++q)
    for (int j : cycles[q]) {
      int a = hinv[j];
      int b = vinv[a];
      loops(a, q) -= 1;
      loops(n + b, q) -= 1;
      loops(b, q) += 1;
      loops(n + h[b], q) += 1;
    }
  return loops;
}

IntMat standard_j(int g) {
  IntMat j = IntMat::Zero(2 * g, 2 * g);
  for (int i = 0; i < g; ++i) {
    j(i, g + i) = 1;
    j(g + i, i) = -1;
  }
  return j;
}

IntMat block_j(const std::vector<std::int64_t>& divisors) {
  const int r = static_cast<int>(divisors.size());
  IntMat j = IntMat::Zero(2 * r, 2 * r);
  for (int i = 0; i < r; ++i) {
    j(i, r + i) = divisors[i];
    j(r + i, i) = -divisors[i];
  }
  return j;
}

IntMat pairing_matrix(const Perm& h, const Perm& v, const IntMat& cols) {
  const int k = static_cast<int>(cols.cols());
  IntMat p(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      p(a, b) = intersection_pairing(h, v, cols.col(a), cols.col(b));
  return p;
}

void check_symplectic(const IntMat& mat, const IntMat& j, const char* ctx) {
  IntMat lhs = imat_mul(imat_mul(IntMat(mat.transpose()), j), mat);
  if (lhs.rows() != j.rows() || (lhs - j).cwiseAbs().maxCoeff() != 0)
    throw std::logic_error(std::string(ctx) +
                           ": matrix does not preserve the pairing");
}

}  // namespace

Origami origami_build(const Perm& h, const Perm& v) {
  const int n = static_cast<int>(h.size());
  if (n == 0 || v.size() != h.size() || !is_permutation(h) ||
      !is_permutation(v))
    throw std::invalid_argument(
        "origami_build: h and v must be permutations of the same degree");

  // the squares must form one surface
  std::vector<char> reach(n, 0);
  std::vector<int> stack{0};
  reach[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    for (int j : {h[i], v[i]})
      if (!reach[j]) {
        reach[j] = 1;
        ++count;
        stack.push_back(j);
      }
  }
  if (count != n)
    throw NotConnected("origami is not connected: " + std::to_string(count) +
                       " of " + std::to_string(n) + " squares reachable");

  Origami o;
  o.n = n;
  o.h = h;
  o.v = v;
  Perm hinv = perm_inverse(h);
  Perm vinv = perm_inverse(v);

  Perm c = perm_compose(v, perm_compose(h, perm_compose(vinv, hinv)));
  o.vertex_cycles = perm_cycles(c);
  const int nv = static_cast<int>(o.vertex_cycles.size());
  if ((n - nv + 2) % 2 != 0)
    throw std::logic_error("origami_build: odd Euler characteristic");
  o.genus = (n - nv + 2) / 2;
  if (o.genus < 1) throw std::logic_error("origami_build: nonpositive genus");
  int order_sum = 0;
  for (const auto& cyc : o.vertex_cycles)
    if (cyc.size() > 1) {
      o.stratum.push_back(static_cast<int>(cyc.size()) - 1);
      order_sum += static_cast<int>(cyc.size()) - 1;
    }
  std::sort(o.stratum.rbegin(), o.stratum.rend());
  if (order_sum != 2 * o.genus - 2)
    throw std::logic_error("origami_build: cone angles do not match genus");

  // centerline graph boundary: x_i joins i to h(i), y_i joins i to v(i)
  IntMat bd = IntMat::Zero(n, 2 * n);
  for (int i = 0; i < n; ++i) {
    bd(h[i], i) += 1;
    bd(i, i) -= 1;
    bd(v[i], n + i) += 1;
    bd(i, n + i) -= 1;
  }
  Snf sbd = smith_normal_form(bd);
  IntMat kernel = snf_kernel(sbd);
  if (kernel.cols() != n + 1)
    throw std::logic_error("origami_build: unexpected cycle rank");

  IntMat loops = vertex_loop_chains(h, v, o.vertex_cycles);
  // they must sit in the radical of the punctured-surface pairing
  for (int p = 0; p < nv; ++p)
    for (int q = 0; q < kernel.cols(); ++q)
      if (intersection_pairing(h, v, loops.col(p), kernel.col(q)) != 0)
        throw std::logic_error("origami_build: cone loop escapes the radical");

  Snf sk = smith_normal_form(kernel);
  IntMat rel(n + 1, nv);
  for (int q = 0; q < nv; ++q) rel.col(q) = snf_solve(sk, loops.col(q));
  Snf srel = smith_normal_form(rel);
  if (srel.rank != nv - 1)
    throw std::logic_error("origami_build: unexpected relation rank");
  for (int i = 0; i < srel.rank; ++i)
    if (srel.d(i, i) != 1)
      throw std::logic_error("origami_build: homology has torsion");

  IntMat free_part = srel.uinv.rightCols(n + 1 - srel.rank);
  IntMat braw = imat_mul(kernel, free_part);
  if (braw.cols() != 2 * o.genus)
    throw std::logic_error("origami_build: basis dimension mismatch");

  PairingForm nf = antisymmetric_normal_form(pairing_matrix(h, v, braw));
  if (static_cast<int>(nf.divisors.size()) != o.genus)
    throw std::logic_error("origami_build: degenerate surface pairing");
  for (std::int64_t d : nf.divisors)
    if (d != 1)
      throw std::logic_error("origami_build: surface pairing not unimodular");

  o.basis = imat_mul(braw, nf.e);
  o.j_form = standard_j(o.genus);
  if ((pairing_matrix(h, v, o.basis) - o.j_form).cwiseAbs().maxCoeff() != 0)
    throw std::logic_error("origami_build: basis normalization failed");
  Snf sb = smith_normal_form(o.basis);
  for (int i = 0; i < sb.rank; ++i)
    if (sb.d(i, i) != 1)
      throw std::logic_error("origami_build: homology basis is not primitive");
  // cycles are expressed against the basis plus the cone-loop relations
  IntMat aug(2 * n, 2 * o.genus + nv);
  aug.leftCols(2 * o.genus) = o.basis;
  aug.rightCols(nv) = loops;
  o.coord_snf = smith_normal_form(aug);
  return o;
}

IntVec Origami::homology_coords(const IntVec& cycle) const {
  IntVec full = snf_solve(coord_snf, cycle);
  return full.head(basis.cols());
}

Perm gen_target_h(Gen g, const Perm& h, const Perm& v) {
  return g == Gen::T ? h : perm_inverse(v);
}

Perm gen_target_v(Gen g, const Perm& h, const Perm& v) {
  return g == Gen::T ? perm_compose(v, perm_inverse(h)) : h;
}

IntVec chain_map(Gen g, const Perm& h, const Perm& v, const IntVec& z) {
  const int n = static_cast<int>(h.size());
  if (z.size() != 2 * n) throw std::invalid_argument("chain_map: bad size");
  IntVec out = IntVec::Zero(2 * n);
  if (g == Gen::T) {
    // shear: x_i -> x_{h(i)}, y_i -> y_{h(i)} + x_{v(i)}
    for (int i = 0; i < n; ++i) {
      out(h[i]) = checked(static_cast<__int128>(out(h[i])) + z(i), "chain map");
      out(n + h[i]) = checked(
          static_cast<__int128>(out(n + h[i])) + z(n + i), "chain map");
      out(v[i]) =
          checked(static_cast<__int128>(out(v[i])) + z(n + i), "chain map");
    }
  } else {
    // quarter turn: x_i -> y_i, y_i -> -x_{v(i)}
    for (int i = 0; i < n; ++i) {
      out(n + i) = checked(static_cast<__int128>(out(n + i)) + z(i),
                           "chain map");
      out(v[i]) =
          checked(static_cast<__int128>(out(v[i])) - z(n + i), "chain map");
    }
  }
  return out;
}

namespace {

struct MarkingData {
  Origami og;
  IntMat basis;
  Snf aug_snf;  // [basis | cone loops]
  IntMat j_form;
  std::vector<std::int64_t> divisors;

  IntVec coords(const IntVec& cycle) const {
    IntVec full = snf_solve(aug_snf, cycle);
    return full.head(basis.cols());
  }
};

MarkingData make_marking(const Perm& h, const Perm& v, bool complement) {
  MarkingData md;
  md.og = origami_build(h, v);
  if (!complement) {
    md.basis = md.og.basis;
    md.aug_snf = md.og.coord_snf;
    md.j_form = md.og.j_form;
    md.divisors.assign(md.og.genus, 1);
    return md;
  }
  if (md.og.genus < 2)
    throw TrivialComplement(
        "tautological complement is empty for a genus one origami");
  const int n = md.og.n;
  const int d2 = 2 * md.og.genus;
  // holonomy of each basis class
  IntMat proj(2, d2);
  for (int p = 0; p < d2; ++p) {
    __int128 sx = 0, sy = 0;
    for (int i = 0; i < n; ++i) {
      sx += md.og.basis(i, p);
      sy += md.og.basis(n + i, p);
    }
    proj(0, p) = checked(sx, "holonomy");
    proj(1, p) = checked(sy, "holonomy");
  }
  Snf sp = smith_normal_form(proj);
  if (sp.rank != 2)
    throw std::logic_error("tautological complement: holonomy rank is not 2");
  IntMat craw = imat_mul(md.og.basis, snf_kernel(sp));
  PairingForm nf = antisymmetric_normal_form(pairing_matrix(h, v, craw));
  if (2 * static_cast<int>(nf.divisors.size()) != craw.cols())
    throw std::logic_error("tautological complement: degenerate pairing");
  md.basis = imat_mul(craw, nf.e);
  md.divisors = nf.divisors;
  md.j_form = block_j(nf.divisors);
  IntMat loops = vertex_loop_chains(h, v, md.og.vertex_cycles);
  IntMat aug(2 * n, md.basis.cols() + loops.cols());
  aug.leftCols(md.basis.cols()) = md.basis;
  aug.rightCols(loops.cols()) = loops;
  md.aug_snf = smith_normal_form(aug);
  return md;
}

}  // namespace

HomologyAction homology_action(const Origami& o, Gen g) {
  HomologyAction act;
  act.new_h = gen_target_h(g, o.h, o.v);
  act.new_v = gen_target_v(g, o.h, o.v);
  Origami target = origami_build(act.new_h, act.new_v);
  const int d2 = 2 * o.genus;
  act.matrix = IntMat(d2, d2);
  for (int p = 0; p < d2; ++p)
    act.matrix.col(p) =
        target.homology_coords(chain_map(g, o.h, o.v, o.basis.col(p)));
  check_symplectic(act.matrix, o.j_form, "homology_action");
  return act;
}

int MonodromyRep::find_marking(const Perm& h, const Perm& v) const {
  for (int m = 0; m < static_cast<int>(marking_h.size()); ++m)
    if (marking_h[m] == h && marking_v[m] == v) return m;
  return -1;
}

MonodromyRep::Move MonodromyRep::step(int marking, Gen g, bool forward) const {
  const int gi = static_cast<int>(g);
  if (forward) return {target[marking][gi], &matrix[marking][gi]};
  return {backward[marking][gi], &backward_matrix[marking][gi]};
}

MonodromyRep build_monodromy(const Origami& o, bool complement,
                             std::size_t max_markings) {
  // enumerate the finite S,T-orbit of markings first
  std::vector<std::pair<Perm, Perm>> marks{{o.h, o.v}};
  std::map<std::pair<Perm, Perm>, int> index{{marks[0], 0}};
  std::vector<std::array<int, 2>> target;
  for (std::size_t m = 0; m < marks.size(); ++m) {
    target.push_back({-1, -1});
    for (Gen g : {Gen::T, Gen::S}) {
      auto key = std::make_pair(gen_target_h(g, marks[m].first, marks[m].second),
                                gen_target_v(g, marks[m].first, marks[m].second));
      auto it = index.find(key);
      int to;
      if (it != index.end()) {
        to = it->second;
      } else {
        if (marks.size() >= max_markings)
          throw std::runtime_error(
              "build_monodromy: marking orbit exceeds the enumeration cap");
        marks.push_back(key);
        to = static_cast<int>(marks.size()) - 1;
        index.emplace(std::move(key), to);
      }
      target[m][static_cast<int>(g)] = to;
    }
  }

  const int count = static_cast<int>(marks.size());
  std::vector<MarkingData> data;
  data.reserve(count);
  for (int m = 0; m < count; ++m)
    data.push_back(make_marking(marks[m].first, marks[m].second, complement));
  for (int m = 1; m < count; ++m) {
    if (data[m].og.genus != data[0].og.genus ||
        data[m].og.stratum != data[0].og.stratum ||
        data[m].divisors != data[0].divisors)
      throw std::logic_error(
          "build_monodromy: marking orbit mixes inequivalent surfaces");
  }

  MonodromyRep rep;
  rep.dim = static_cast<int>(data[0].basis.cols());
  rep.j_form = data[0].j_form;
  rep.divisors = data[0].divisors;
  rep.target = std::move(target);
  for (int m = 0; m < count; ++m) {
    rep.marking_h.push_back(marks[m].first);
    rep.marking_v.push_back(marks[m].second);
    rep.marking_basis.push_back(data[m].basis);
  }
  rep.matrix.resize(count);
  for (int m = 0; m < count; ++m)
    for (Gen g : {Gen::T, Gen::S}) {
      const int gi = static_cast<int>(g);
      const int to = rep.target[m][gi];
      IntMat mat(rep.dim, rep.dim);
      for (int p = 0; p < rep.dim; ++p)
        mat.col(p) = data[to].coords(
            chain_map(g, marks[m].first, marks[m].second, data[m].basis.col(p)));
      check_symplectic(mat, rep.j_form, "build_monodromy");
      rep.matrix[m][gi] = std::move(mat);
    }

  rep.backward.assign(count, {-1, -1});
  rep.backward_matrix.resize(count);
  for (int m = 0; m < count; ++m)
    for (int gi = 0; gi < 2; ++gi) {
      const int to = rep.target[m][gi];
      rep.backward[to][gi] = m;
      rep.backward_matrix[to][gi] = int_inverse(rep.matrix[m][gi]);
    }
  for (int m = 0; m < count; ++m)
    if (rep.backward[m][0] < 0 || rep.backward[m][1] < 0)
      throw std::logic_error("build_monodromy: orbit moves are not invertible");
  return rep;
}

ComplementRep tautological_complement(const Origami& o) {
  if (o.genus < 2)
    throw TrivialComplement(
        "tautological complement is empty for a genus one origami");
  ComplementRep c;
  c.rep = build_monodromy(o, true);
  c.basis = c.rep.marking_basis[0];
  c.j_form = c.rep.j_form;
  c.divisors = c.rep.divisors;
  return c;
}

Origami origami_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("origami json: ") + e.what());
  }
  if (!j.is_object())
    throw std::invalid_argument("origami json: top level must be an object");
  for (const auto& item : j.items())
    if (item.key() != "n" && item.key() != "h" && item.key() != "v")
      throw std::invalid_argument("origami json: unknown field '" +
                                  item.key() + "'");
  if (!j.contains("n") || !j["n"].is_number_integer())
    throw std::invalid_argument("origami json: field 'n' must be an integer");
  const long long n = j["n"].get<long long>();
  if (n < 1 || n > 4096)
    throw std::invalid_argument("origami json: field 'n' must be in 1..4096");

  auto read_perm = [&](const char* name) {
    if (!j.contains(name) || !j[name].is_array())
      throw std::invalid_argument(std::string("origami json: field '") + name +
                                  "' must be an array");
    const auto& arr = j[name];
    if (static_cast<long long>(arr.size()) != n)
      throw std::invalid_argument(
          std::string("origami json: field '") + name + "' must have " +
          std::to_string(n) + " entries, got " + std::to_string(arr.size()));
    Perm p(n);
    std::vector<char> seen(n, 0);
    for (long long i = 0; i < n; ++i) {
      if (!arr[i].is_number_integer())
        throw std::invalid_argument(std::string("origami json: ") + name +
                                    "[" + std::to_string(i + 1) +
                                    "] must be an integer");
      const long long x = arr[i].get<long long>();
      if (x < 1 || x > n)
        throw std::invalid_argument(
            std::string("origami json: ") + name + "[" + std::to_string(i + 1) +
            "] = " + std::to_string(x) + " is outside 1.." + std::to_string(n));
      if (seen[x - 1])
        throw std::invalid_argument(std::string("origami json: ") + name +
                                    ": value " + std::to_string(x) +
                                    " appears twice");
      seen[x - 1] = 1;
      p[i] = static_cast<int>(x - 1);
    }
    return p;
  };
  Perm h = read_perm("h");
  Perm v = read_perm("v");
  return origami_build(h, v);
}

long long monodromy_orbit_size(const MonodromyRep& rep, long long cap,
                               std::int64_t entry_cap) {
  if (rep.dim == 0) return 1;
  using Key = std::pair<int, std::vector<std::int64_t>>;
  auto key_of = [&](int marking, const IntMat& m) {
    std::vector<std::int64_t> flat(m.data(), m.data() + m.size());
    return Key{marking, std::move(flat)};
  };
  const IntMat id = IntMat::Identity(rep.dim, rep.dim);
  std::set<Key> seen;
  std::vector<std::pair<int, IntMat>> frontier;
  seen.insert(key_of(0, id));
  frontier.emplace_back(0, id);
  while (!frontier.empty()) {
    auto [marking, acc] = frontier.back();
    frontier.pop_back();
    for (Gen g : {Gen::T, Gen::S}) {
      for (bool forward : {true, false}) {
        const auto move = rep.step(marking, g, forward);
        IntMat next = imat_mul(*move.m, acc);
        if (next.cwiseAbs().maxCoeff() > entry_cap) return -1;
        Key k = key_of(move.to, next);
        if (seen.insert(std::move(k)).second) {
          if (static_cast<long long>(seen.size()) > cap) return -1;
          frontier.emplace_back(move.to, std::move(next));
        }
      }
    }
  }
  return static_cast<long long>(seen.size());
}

Origami builtin_torus() { return origami_build({0}, {0}); }

Origami builtin_h2() { return origami_build({1, 2, 0}, {1, 0, 2}); }

Origami builtin_ew() {
  return origami_build({1, 2, 3, 0, 5, 6, 7, 4}, {4, 7, 6, 5, 2, 1, 0, 3});
}

}  // namespace kzclt
