#include "lorentz/scatterers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "lorentz/error.hpp"
#include "lorentz/rng.hpp"

namespace lorentz {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kExpMinusOne = std::exp(-1.0);

// ---------------------------------------------------------------------------
// Small dense linear algebra on Matrix (n <= 8).

double det_n(Matrix a) {
  const std::size_t n = a.size();
  double d = 1;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (a[piv][c] == 0) return 0;
    if (piv != c) {
      std::swap(a[piv], a[c]);
      d = -d;
    }
    d *= a[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  return d;
}

Matrix inverse_n(const Matrix& m) {
  const std::size_t n = m.size();
  Matrix a = m, inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (a[piv][c] == 0) throw ConfigError("singular matrix");
    std::swap(a[piv], a[c]);
    std::swap(inv[piv], inv[c]);
    const double p = a[c][c];
    for (std::size_t k = 0; k < n; ++k) {
      a[c][k] /= p;
      inv[c][k] /= p;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c];
      if (f == 0) continue;
      for (std::size_t k = 0; k < n; ++k) {
        a[r][k] -= f * a[c][k];
        inv[r][k] -= f * inv[c][k];
      }
    }
  }
  return inv;
}

// Row vector times matrix.
std::vector<double> row_times(const std::vector<double>& v, const Matrix& m) {
  std::vector<double> out(m[0].size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += v[i] * m[i][j];
  return out;
}

void check_square(const Matrix& m, std::size_t n, const char* what) {
  if (m.size() != n) {
    std::ostringstream msg;
    msg << what << ": expected " << n << " rows, got " << m.size();
    throw ConfigError(msg.str());
  }
  for (const auto& row : m)
    if (row.size() != n) {
      std::ostringstream msg;
      msg << what << ": expected rows of length " << n;
      throw ConfigError(msg.str());
    }
  for (const auto& row : m)
    for (double x : row)
      if (!std::isfinite(x)) throw ConfigError(std::string(what) + ": non-finite entry");
}

template <int D>
Vec<D> to_vec(const std::vector<double>& v, const char* what) {
  if (v.empty()) return Vec<D>{};
  if (static_cast<int>(v.size()) != D) {
    std::ostringstream msg;
    msg << what << ": expected " << D << " components, got " << v.size();
    throw ConfigError(msg.str());
  }
  Vec<D> out;
  for (int i = 0; i < D; ++i) out[i] = v[i];
  return out;
}

template <int D>
Mat<D> to_mat(const Matrix& m, const char* what) {
  check_square(m, D, what);
  Mat<D> out;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) out[i][j] = m[i][j];
  return out;
}

// Shortest nonzero vector length of Z^D M (searched over small coefficients
// after the enumeration bound).
template <int D>
double shortest_vector(const Mat<D>& M) {
  double best = kInf;
  for (int i = 0; i < D; ++i) best = std::min(best, norm(M[i]));
  Matrix G(D, std::vector<double>(D));
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) G[i][j] = dot(M[i], M[j]) / (best * best);
  enumerate_ellipsoid(G, std::vector<double>(D, 0.0), [&](const std::vector<long>& k) {
    Vec<D> x;
    bool zero = true;
    for (int i = 0; i < D; ++i) {
      x += M[i] * static_cast<double>(k[i]);
      zero = zero && k[i] == 0;
    }
    if (!zero) best = std::min(best, norm(x));
  });
  return best;
}

// ---------------------------------------------------------------------------
// Candidate test shared by all ray searches.

template <int D>
inline void test_center(const Vec<D>& q, const Vec<D>& v, double r, const Vec<D>& c,
                        const Colour& colour, HitSearch<D>& best) {
  const double rr = r * r;
  // The ball just left; its centre may be recomputed with different rounding.
  if (best.exclude && norm2(c - *best.exclude) < 1e-12 * rr) return;
  const Vec<D> f = q - c;
  const double b = dot(f, v);
  const Vec<D> p = f - b * v;
  const double p2 = norm2(p);
  constexpr double graze = (1 - kTangencyTol) * (1 - kTangencyTol);
  if (p2 >= rr * graze) return;
  if (norm2(f) < rr * (1 - 1e-6)) {
    std::ostringstream msg;
    msg << "start point lies inside the scatterer at distance " << norm(f) << " < r = " << r;
    throw PreconditionError(msg.str());
  }
  if (b >= 0) return;
  const double t = -b - std::sqrt(rr - p2);
  if (!(t > 0) || t > best.limit) return;
  if (best.found && t >= best.t) return;
  best.found = true;
  best.t = t;
  best.center = c;
  best.colour = colour;
  best.p = p;
}

template <int D>
void test_all(const Vec<D>& q, const Vec<D>& v, double r, const std::vector<Scatterer<D>>& pts,
              HitSearch<D>& best) {
  for (const auto& s : pts) test_center(q, v, r, s.x, s.colour, best);
}

// ---------------------------------------------------------------------------
// Affine lattice Z^D M + s.

template <int D>
struct LatticeComponent {
  Mat<D> M, Minv;
  Vec<D> shift;
  Colour colour;

  LatticeComponent(const Mat<D>& m, const Vec<D>& s, int index) : M(m), shift(s) {
    const double d = det(M);
    if (!(std::abs(d) > 1e-300) || !std::isfinite(d)) throw ConfigError("degenerate lattice basis");
    Minv = inverse(M);
    colour.index = index;
  }

  double covolume() const { return std::abs(det(M)); }

  void collect_ball(const Vec<D>& c, double R, std::vector<Scatterer<D>>& out) const {
    Matrix G(D, std::vector<double>(D));
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) G[i][j] = dot(M[i], M[j]) / (R * R);
    const Vec<D> k0 = (c - shift) * Minv;
    std::vector<double> k0v(k0.x.begin(), k0.x.end());
    const double R2 = R * R * (1 + 1e-12);
    enumerate_ellipsoid(G, k0v, [&](const std::vector<long>& k) {
      Vec<D> x = shift;
      for (int i = 0; i < D; ++i) x += M[i] * static_cast<double>(k[i]);
      if (norm2(x - c) <= R2) out.push_back({x, colour});
    });
  }

  // Walks the lattice planes k_i = n crossed by the ray, i the coordinate
  // moving fastest along the ray; inside each plane only the few points
  // whose offset from the crossing lies in the r-tube are tested.
  void scan(const Vec<D>& q, const Vec<D>& v, double r, HitSearch<D>& best) const {
    const Vec<D> g = v * Minv;
    int i = 0;
    for (int a = 1; a < D; ++a)
      if (std::abs(g[a]) > std::abs(g[i])) i = a;
    std::array<int, D - 1> J{};
    for (int a = 0, n = 0; a < D; ++a)
      if (a != i) J[n++] = a;

    // Bounding box of the tube cross-section in plane coordinates.
    std::array<Vec<D>, D - 1> perp;
    for (int a = 0; a < D - 1; ++a) perp[a] = M[J[a]] - dot(M[J[a]], v) * v;
    std::array<double, D - 1> amax{};
    if constexpr (D == 2) {
      amax[0] = r / norm(perp[0]);
    } else {
      const double g00 = dot(perp[0], perp[0]), g01 = dot(perp[0], perp[1]),
                   g11 = dot(perp[1], perp[1]);
      const double dd = g00 * g11 - g01 * g01;
      amax[0] = r * std::sqrt(g11 / dd);
      amax[1] = r * std::sqrt(g00 / dd);
    }
    double dt = 0;
    for (int a = 0; a < D - 1; ++a) {
      amax[a] = amax[a] * (1 + 1e-9) + 1e-12;
      dt += amax[a] * std::abs(dot(M[J[a]], v));
    }

    const Vec<D> kappa = (q - shift) * Minv;
    const double gi = g[i];
    const double lead = dt + r;  // closest approach may precede the plane crossing by this much
    const long dir = gi > 0 ? 1 : -1;
    long n = gi > 0 ? static_cast<long>(std::ceil(kappa[i] - lead * gi))
                    : static_cast<long>(std::floor(kappa[i] - lead * gi));
    for (;; n += dir) {
      const double tn = (static_cast<double>(n) - kappa[i]) / gi;
      const double stop = best.found ? std::min(best.t, best.limit) : best.limit;
      if (tn - lead > stop) break;
      Vec<D> base = shift + M[i] * static_cast<double>(n);
      if constexpr (D == 2) {
        const double c = kappa[J[0]] + tn * g[J[0]];
        const long lo = static_cast<long>(std::ceil(c - amax[0]));
        const long hi = static_cast<long>(std::floor(c + amax[0]));
        for (long k = lo; k <= hi; ++k)
          test_center(q, v, r, base + M[J[0]] * static_cast<double>(k), colour, best);
      } else {
        const double c0 = kappa[J[0]] + tn * g[J[0]], c1 = kappa[J[1]] + tn * g[J[1]];
        const long lo0 = static_cast<long>(std::ceil(c0 - amax[0]));
        const long hi0 = static_cast<long>(std::floor(c0 + amax[0]));
        const long lo1 = static_cast<long>(std::ceil(c1 - amax[1]));
        const long hi1 = static_cast<long>(std::floor(c1 + amax[1]));
        for (long k0 = lo0; k0 <= hi0; ++k0)
          for (long k1 = lo1; k1 <= hi1; ++k1)
            test_center(q, v, r,
                        base + M[J[0]] * static_cast<double>(k0) +
                            M[J[1]] * static_cast<double>(k1),
                        colour, best);
      }
    }
  }
};

template <int D>
class LatticeSet : public ScattererSet<D> {
 public:
  explicit LatticeSet(LatticeComponent<D> c) : c_(std::move(c)), rmax_(shortest_vector(c_.M) / 2) {}

  void points_in_ball(const Vec<D>& center, double radius,
                      std::vector<Scatterer<D>>& out) const override {
    c_.collect_ball(center, radius, out);
  }
  double nominal_density() const override { return 1 / c_.covolume(); }
  double max_radius() const override { return rmax_; }
  std::optional<Mat<D>> period() const override { return c_.M; }

 protected:
  void scan(const Vec<D>& q, const Vec<D>& v, double r, HitSearch<D>& best) const override {
    c_.scan(q, v, r, best);
  }

 private:
  LatticeComponent<D> c_;
  double rmax_;
};

// Finite union of affine lattices; colour = member index.
template <int D>
class UnionSet : public ScattererSet<D> {
 public:
  explicit UnionSet(std::vector<LatticeComponent<D>> members) : m_(std::move(members)) {
    rmax_ = kInf;
    for (const auto& c : m_) rmax_ = std::min(rmax_, shortest_vector(c.M) / 2);
  }

  void points_in_ball(const Vec<D>& center, double radius,
                      std::vector<Scatterer<D>>& out) const override {
    for (const auto& c : m_) c.collect_ball(center, radius, out);
  }
  double nominal_density() const override {
    double s = 0;
    for (const auto& c : m_) s += 1 / c.covolume();
    return s;
  }
  double max_radius() const override { return rmax_; }
  int colour_count() const override { return static_cast<int>(m_.size()); }
  const std::vector<LatticeComponent<D>>& members() const { return m_; }

 protected:
  void scan(const Vec<D>& q, const Vec<D>& v, double r, HitSearch<D>& best) const override {
    for (const auto& c : m_) c.scan(q, v, r, best);
  }

 private:
  std::vector<LatticeComponent<D>> m_;
  double rmax_;
};

// ---------------------------------------------------------------------------
// Cell-structured sets: Amanatides-Woo traversal of cubic cells of side L.

template <int D>
using CellIndex = std::array<long, D>;

template <int D>
class CellSet : public ScattererSet<D> {
 public:
  explicit CellSet(double cell) : L_(cell) {}
  double max_radius() const override { return L_ / 2; }

  void points_in_ball(const Vec<D>& center, double radius,
                      std::vector<Scatterer<D>>& out) const override {
    CellIndex<D> lo, hi;
    for (int a = 0; a < D; ++a) {
      lo[a] = static_cast<long>(std::floor((center[a] - radius) / L_));
      hi[a] = static_cast<long>(std::floor((center[a] + radius) / L_));
    }
    std::vector<Scatterer<D>> buf;
    const double R2 = radius * radius * (1 + 1e-12);
    CellIndex<D> c = lo;
    for (;;) {
      buf.clear();
      cell_points(c, buf);
      for (const auto& s : buf)
        if (norm2(s.x - center) <= R2) out.push_back(s);
      int a = 0;
      for (; a < D; ++a) {
        if (++c[a] <= hi[a]) break;
        c[a] = lo[a];
      }
      if (a == D) break;
    }
  }

 protected:
  // All points whose coordinates lie in the half-open cell [c L, (c + 1) L).
  virtual void cell_points(const CellIndex<D>& c, std::vector<Scatterer<D>>& out) const = 0;

  void scan(const Vec<D>& q, const Vec<D>& v, double r, HitSearch<D>& best) const override {
    if (r > L_ / 2) throw PreconditionError("scatterer radius exceeds half the cell size");
    thread_local std::vector<Scatterer<D>> buf;
    CellIndex<D> cell;
    std::array<double, D> tmax, tdelta;
    std::array<long, D> step;
    for (int a = 0; a < D; ++a) {
      cell[a] = static_cast<long>(std::floor(q[a] / L_));
      if (v[a] > 0) {
        step[a] = 1;
        tdelta[a] = L_ / v[a];
        tmax[a] = ((cell[a] + 1) * L_ - q[a]) / v[a];
      } else if (v[a] < 0) {
        step[a] = -1;
        tdelta[a] = -L_ / v[a];
        tmax[a] = (cell[a] * L_ - q[a]) / v[a];
      } else {
        step[a] = 0;
        tdelta[a] = kInf;
        tmax[a] = kInf;
      }
    }
    // Cells already tested; the face just crossed is always within r.
    std::array<CellIndex<D>, 8> recent;
    recent.fill(CellIndex<D>{std::numeric_limits<long>::min()});
    std::size_t next_slot = 0;
    double t0 = 0;
    for (;;) {
      const double stop = best.found ? std::min(best.t, best.limit) : best.limit;
      if (t0 - r > stop) break;
      double t1 = kInf;
      int axis = 0;
      for (int a = 0; a < D; ++a)
        if (tmax[a] < t1) {
          t1 = tmax[a];
          axis = a;
        }
      const double te = std::min(t1, stop + r);
      // Neighbour offsets per axis: a ball reaching across a face only
      // matters when the ray passes within r of it.
      std::array<std::array<int, 3>, D> offs;
      std::array<int, D> noff;
      for (int a = 0; a < D; ++a) {
        const double x0 = q[a] + t0 * v[a], x1 = q[a] + te * v[a];
        const double lo = cell[a] * L_, hi = lo + L_;
        noff[a] = 0;
        offs[a][noff[a]++] = 0;
        if (std::min(x0, x1) - lo < r) offs[a][noff[a]++] = -1;
        if (hi - std::max(x0, x1) < r) offs[a][noff[a]++] = 1;
      }
      std::array<int, D> idx{};
      for (;;) {
        CellIndex<D> c = cell;
        for (int a = 0; a < D; ++a) c[a] += offs[a][idx[a]];
        bool seen = false;
        for (const auto& rc : recent) {
          bool same = true;
          for (int a = 0; a < D; ++a) same = same && rc[a] == c[a];
          if (same) {
            seen = true;
            break;
          }
        }
        if (!seen) {
          recent[next_slot++ & 7] = c;
          buf.clear();
          cell_points(c, buf);
          test_all(q, v, r, buf, best);
        }
        int a = 0;
        for (; a < D; ++a) {
          if (++idx[a] < noff[a]) break;
          idx[a] = 0;
        }
        if (a == D) break;
      }
      if (!std::isfinite(t1)) break;
      cell[axis] += step[axis];
      t0 = t1;
      tmax[axis] += tdelta[axis];
    }
  }

  double L_;
};

template <int D>
class PoissonSet : public CellSet<D> {
 public:
  explicit PoissonSet(const PoissonSpec& s)
      : CellSet<D>(std::pow(1.0 / s.intensity, 1.0 / D)), seed_(s.seed), intensity_(s.intensity) {}

  double nominal_density() const override { return intensity_; }

 protected:
  // Cell counts are Poisson with mean one (cell volume 1/intensity).
  void cell_points(const CellIndex<D>& c, std::vector<Scatterer<D>>& out) const override {
    std::uint64_t key = splitmix64(seed_);
    for (int a = 0; a < D; ++a) key = splitmix64(key ^ static_cast<std::uint64_t>(c[a]));
    HashStream rng(key);
    // Poisson(1) by inversion.
    const double u = rng.uniform();
    double p = kExpMinusOne, cdf = p;
    unsigned n = 0;
    while (u > cdf && n < 64) {
      ++n;
      p /= n;
      cdf += p;
    }
    const double L = this->L_;
    for (unsigned k = 0; k < n; ++k) {
      Vec<D> x;
      for (int a = 0; a < D; ++a) x[a] = (static_cast<double>(c[a]) + rng.uniform()) * L;
      out.push_back({x, Colour{}});
    }
  }

 private:
  std::uint64_t seed_;
  double intensity_;
};

// ---------------------------------------------------------------------------
// Cut-and-project sets.

// Convex polygon (m = 2) or interval (m = 1) as intersection of half-spaces
// n . y <= h.
struct ConvexWindow {
  int m = 0;
  std::vector<std::array<double, 3>> halfspaces;  // (n0, n1, h)
  double lo = 0, hi = 0;                           // m = 1
  double measure = 0;
  std::vector<double> center;
  double radius = 0;

  bool contains(const double* y) const {
    if (m == 1) return y[0] >= lo && y[0] <= hi;
    for (const auto& h : halfspaces)
      if (h[0] * y[0] + h[1] * y[1] > h[2]) return false;
    return true;
  }
};

double cross2(const std::vector<double>& o, const std::vector<double>& a,
              const std::vector<double>& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

ConvexWindow make_convex_window(int m, const std::vector<std::vector<double>>& vertices) {
  ConvexWindow w;
  w.m = m;
  for (const auto& p : vertices)
    if (static_cast<int>(p.size()) != m) throw ConfigError("window vertex has wrong dimension");
  if (m == 1) {
    if (vertices.size() < 2) throw ConfigError("interval window needs two endpoints");
    w.lo = kInf;
    w.hi = -kInf;
    for (const auto& p : vertices) {
      w.lo = std::min(w.lo, p[0]);
      w.hi = std::max(w.hi, p[0]);
    }
    w.measure = w.hi - w.lo;
    w.center = {0.5 * (w.lo + w.hi)};
    w.radius = 0.5 * (w.hi - w.lo);
  } else if (m == 2) {
    // Monotone-chain convex hull, counter-clockwise.
    auto pts = vertices;
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) throw ConfigError("polygon window has empty interior");
    std::vector<std::vector<double>> hull(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      while (k >= 2 && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
      hull[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
      while (k >= t && cross2(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
      hull[k++] = pts[i - 1];
    }
    hull.resize(k - 1);
    double area = 0, cx = 0, cy = 0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
      const auto& a = hull[i];
      const auto& b = hull[(i + 1) % hull.size()];
      const double cr = a[0] * b[1] - b[0] * a[1];
      area += cr;
      cx += (a[0] + b[0]) * cr;
      cy += (a[1] + b[1]) * cr;
      const double nx = b[1] - a[1], ny = a[0] - b[0];  // outward normal for ccw order
      w.halfspaces.push_back({nx, ny, nx * a[0] + ny * a[1]});
    }
    area *= 0.5;
    if (!(area > 1e-14)) throw ConfigError("polygon window has empty interior");
    w.measure = area;
    w.center = {cx / (6 * area), cy / (6 * area)};
    for (const auto& p : hull)
      w.radius = std::max(w.radius, std::hypot(p[0] - w.center[0], p[1] - w.center[1]));
  } else {
    throw ConfigError("polytope windows are supported for internal dimension 1 or 2");
  }
  return w;
}

long gcd_l(long a, long b) { return std::gcd(std::abs(a), std::abs(b)); }

// Covolume of the Z-span of integer row vectors in Z^m: gcd of the m x m minors.
long integer_covolume(const std::vector<std::vector<long>>& rows, int m) {
  const int n = static_cast<int>(rows.size());
  long g = 0;
  std::vector<int> pick(m);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == m) {
      Matrix sub(m, std::vector<double>(m));
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) sub[i][j] = static_cast<double>(rows[pick[i]][j]);
      g = gcd_l(g, std::lround(det_n(sub)));
      return;
    }
    for (int i = start; i < n; ++i) {
      pick[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return g;
}

template <int D>
class CutProjectSet : public CellSet<D> {
 public:
  explicit CutProjectSet(const CutProjectSpec& s) : CellSet<D>(1.0) {
    if (s.dim != D) throw ConfigError("cut-and-project dimension mismatch");
    n_ = static_cast<int>(s.basis.size());
    m_ = n_ - D;
    if (m_ < 1) throw ConfigError("cut-and-project needs total dimension n > d");
    check_square(s.basis, n_, "cut-and-project basis");
    B_ = s.basis;
    const double d = det_n(B_);
    if (!(std::abs(d) > 1e-12)) throw ConfigError("degenerate cut-and-project basis");
    Binv_ = inverse_n(B_);
    offset_ = to_vec<D>(s.offset, "cut-and-project offset");
    discrete_ = s.window.kind == Window::Kind::points;
    if (discrete_) {
      if (s.window.vertices.empty()) throw ConfigError("empty point window");
      if (m_ > 3) throw ConfigError("discrete windows are supported for internal dimension <= 3");
      std::vector<std::vector<long>> rows;
      for (const auto& row : B_) {
        std::vector<long> ir;
        for (int j = D; j < n_; ++j) {
          const long k = std::lround(row[j]);
          if (std::abs(row[j] - static_cast<double>(k)) > 1e-9)
            throw ConfigError("discrete window needs integer internal coordinates");
          ir.push_back(k);
        }
        rows.push_back(ir);
      }
      const long cov = integer_covolume(rows, m_);
      if (cov == 0) throw ConfigError("internal projection of the lattice is not of full rank");
      points_ = s.window.vertices;
      window_center_.assign(m_, 0.0);
      for (const auto& p : points_) {
        if (static_cast<int>(p.size()) != m_) throw ConfigError("window point has wrong dimension");
        for (int j = 0; j < m_; ++j) window_center_[j] += p[j] / points_.size();
      }
      window_radius_ = 0;
      for (const auto& p : points_) {
        double s2 = 0;
        for (int j = 0; j < m_; ++j) s2 += (p[j] - window_center_[j]) * (p[j] - window_center_[j]);
        window_radius_ = std::max(window_radius_, std::sqrt(s2));
      }
      window_radius_ += 0.5;
      // Counting measure on the discrete group over the covolume of L cap V.
      density_ = static_cast<double>(points_.size()) * static_cast<double>(cov) / std::abs(d);
    } else {
      win_ = make_convex_window(m_, s.window.vertices);
      window_center_ = win_.center;
      window_radius_ = win_.radius * (1 + 1e-9) + 1e-12;
      density_ = win_.measure / std::abs(d);
    }
    this->L_ = 2.0 / std::pow(density_, 1.0 / D);
    check_injective();
  }

  double nominal_density() const override { return density_; }
  int colour_count() const override {
    return discrete_ ? static_cast<int>(points_.size()) : 0;
  }

  void points_in_ball(const Vec<D>& center, double radius,
                      std::vector<Scatterer<D>>& out) const override {
    enumerate(center, radius, [&](const Scatterer<D>& s) {
      if (norm2(s.x - center) <= radius * radius * (1 + 1e-12)) out.push_back(s);
    });
  }

 protected:
  void cell_points(const CellIndex<D>& c, std::vector<Scatterer<D>>& out) const override {
    const double L = this->L_;
    Vec<D> mid;
    for (int a = 0; a < D; ++a) mid[a] = (static_cast<double>(c[a]) + 0.5) * L;
    enumerate(mid, 0.5 * L * std::sqrt(static_cast<double>(D)) * (1 + 1e-9), [&](const Scatterer<D>& s) {
      for (int a = 0; a < D; ++a) {
        const double lo = static_cast<double>(c[a]) * L;
        if (s.x[a] < lo || s.x[a] >= lo + L) return;
      }
      out.push_back(s);
    });
  }

 private:
  // Lattice points in the ellipsoid |x - c|^2 / (2R^2) + |y - y_c|^2 / (2 rho^2) <= 1,
  // which contains the slab ball x window.
  template <class F>
  void enumerate(const Vec<D>& center, double R, F&& emit) const {
    std::vector<double> wdiag(n_);
    for (int j = 0; j < D; ++j) wdiag[j] = 1 / (2 * R * R);
    for (int j = D; j < n_; ++j) wdiag[j] = 1 / (2 * window_radius_ * window_radius_);
    Matrix G(n_, std::vector<double>(n_, 0.0));
    for (int i = 0; i < n_; ++i)
      for (int k = 0; k < n_; ++k) {
        double s = 0;
        for (int j = 0; j < n_; ++j) s += B_[i][j] * wdiag[j] * B_[k][j];
        G[i][k] = s;
      }
    std::vector<double> cfull(n_);
    for (int j = 0; j < D; ++j) cfull[j] = center[j] - offset_[j];
    for (int j = D; j < n_; ++j) cfull[j] = window_center_[j - D];
    const std::vector<double> k0 = row_times(cfull, Binv_);
    std::vector<double> ell(n_);
    enumerate_ellipsoid(G, k0, [&](const std::vector<long>& k) {
      std::fill(ell.begin(), ell.end(), 0.0);
      for (int i = 0; i < n_; ++i) {
        if (k[i] == 0) continue;
        const double ki = static_cast<double>(k[i]);
        for (int j = 0; j < n_; ++j) ell[j] += ki * B_[i][j];
      }
      Scatterer<D> s;
      for (int j = 0; j < D; ++j) s.x[j] = ell[j] + offset_[j];
      const double* y = ell.data() + D;
      if (discrete_) {
        for (std::size_t p = 0; p < points_.size(); ++p) {
          bool match = true;
          for (int j = 0; j < m_ && match; ++j) match = std::abs(y[j] - points_[p][j]) < 1e-7;
          if (match) {
            s.colour.index = static_cast<int>(p);
            emit(s);
            return;
          }
        }
      } else if (win_.contains(y)) {
        s.colour.internal_dim = m_;
        for (int j = 0; j < m_ && j < 3; ++j) s.colour.internal[j] = y[j];
        emit(s);
      }
    });
  }

  // Coincident projections would break the colour chart.
  void check_injective() const {
    std::vector<Scatterer<D>> pts;
    points_in_ball(offset_, 8 / std::pow(density_, 1.0 / D), pts);
    std::sort(pts.begin(), pts.end(),
              [](const Scatterer<D>& a, const Scatterer<D>& b) { return a.x.x < b.x.x; });
    const double tol = 1e-9 / std::pow(density_, 1.0 / D);
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size() && pts[j].x[0] - pts[i].x[0] <= tol; ++j)
        if (norm(pts[j].x - pts[i].x) <= tol)
          throw ConfigError("cut-and-project projection is not injective on the window");
  }

  int n_ = 0, m_ = 0;
  Matrix B_, Binv_;
  Vec<D> offset_;
  bool discrete_ = false;
  ConvexWindow win_;
  std::vector<std::vector<double>> points_;
  std::vector<double> window_center_;
  double window_radius_ = 0;
  double density_ = 0;
};

// Periodic Delone set: enumeration through the cut-and-project construction,
// ray queries through the equivalent union of translates.
template <int D>
class DeloneSet : public ScattererSet<D> {
 public:
  DeloneSet(const CutProjectSpec& cp, std::vector<LatticeComponent<D>> members)
      : cp_(cp), members_(std::move(members)), rmax_(shortest_vector(members_.front().M) / 2) {}

  void points_in_ball(const Vec<D>& center, double radius,
                      std::vector<Scatterer<D>>& out) const override {
    cp_.points_in_ball(center, radius, out);
  }
  double nominal_density() const override { return cp_.nominal_density(); }
  // Translates may sit closer than the lattice spacing.
  double max_radius() const override {
    double d = 2 * rmax_;
    for (std::size_t i = 0; i < members_.size(); ++i)
      for (std::size_t j = i + 1; j < members_.size(); ++j) {
        std::vector<Scatterer<D>> near;
        members_[j].collect_ball(members_[i].shift, 2 * rmax_, near);
        for (const auto& s : near) d = std::min(d, norm(s.x - members_[i].shift));
      }
    return d / 2;
  }
  int colour_count() const override { return static_cast<int>(members_.size()); }
  std::optional<Mat<D>> period() const override { return members_.front().M; }

 protected:
  void scan(const Vec<D>& q, const Vec<D>& v, double r, HitSearch<D>& best) const override {
    for (const auto& c : members_) c.scan(q, v, r, best);
  }

 private:
  CutProjectSet<D> cp_;
  std::vector<LatticeComponent<D>> members_;
  double rmax_;
};

template <int D>
class FiniteSet : public ScattererSet<D> {
 public:
  explicit FiniteSet(std::vector<Scatterer<D>> pts) : pts_(std::move(pts)) {}
  void points_in_ball(const Vec<D>& center, double radius,
                      std::vector<Scatterer<D>>& out) const override {
    for (const auto& s : pts_)
      if (norm2(s.x - center) <= radius * radius * (1 + 1e-12)) out.push_back(s);
  }
  double nominal_density() const override { return 0; }
  double max_radius() const override { return kInf; }
  int colour_count() const override { return static_cast<int>(pts_.size()); }

 protected:
  void scan(const Vec<D>& q, const Vec<D>& v, double r, HitSearch<D>& best) const override {
    test_all(q, v, r, pts_, best);
  }

 private:
  std::vector<Scatterer<D>> pts_;
};

// Rejects pairs of lattices sharing a short nonzero vector.
template <int D>
void check_incommensurable(const LatticeComponent<D>& a, const LatticeComponent<D>& b) {
  constexpr long K = 6;
  std::array<long, D> k{};
  for (int i = 0; i < D; ++i) k[i] = -K;
  for (;;) {
    bool zero = true;
    for (int i = 0; i < D; ++i) zero = zero && k[i] == 0;
    if (!zero) {
      Vec<D> x;
      for (int i = 0; i < D; ++i) x += a.M[i] * static_cast<double>(k[i]);
      const Vec<D> y = x * b.Minv;
      bool integral = true;
      for (int i = 0; i < D; ++i) integral = integral && std::abs(y[i] - std::round(y[i])) < 1e-9;
      if (integral) throw ConfigError("union members are commensurable");
    }
    int i = 0;
    for (; i < D; ++i) {
      if (++k[i] <= K) break;
      k[i] = -K;
    }
    if (i == D) break;
  }
}

template <int D>
std::vector<LatticeComponent<D>> union_members(const UnionSpec& u) {
  if (u.members.empty()) throw ConfigError("union has no members");
  std::vector<LatticeComponent<D>> out;
  double total = 0;
  for (std::size_t i = 0; i < u.members.size(); ++i) {
    const auto& mem = u.members[i];
    out.emplace_back(to_mat<D>(mem.lattice.lattice.basis, "union member basis"),
                     to_vec<D>(mem.lattice.shift, "union member shift"), static_cast<int>(i));
    const double dens = 1 / out.back().covolume();
    if (mem.density && std::abs(*mem.density - dens) > 1e-6 * dens) {
      std::ostringstream msg;
      msg << "union member " << i << ": declared density " << *mem.density
          << " differs from 1/|det M| = " << dens;
      throw ConfigError(msg.str());
    }
    total += dens;
  }
  if (u.normalize) {
    // Scaling every basis by lambda divides the total density by lambda^d.
    const double lambda = std::pow(total, 1.0 / D);
    for (auto& c : out) {
      Mat<D> M = c.M;
      for (int i = 0; i < D; ++i) M[i] *= lambda;
      c = LatticeComponent<D>(M, c.shift * lambda, c.colour.index);
    }
  }
  if (u.incommensurable)
    for (std::size_t i = 0; i < out.size(); ++i)
      for (std::size_t j = i + 1; j < out.size(); ++j) check_incommensurable(out[i], out[j]);
  return out;
}

CutProjectSpec delone_as_cut_project(const DeloneSpec& s, int d) {
  const int K = static_cast<int>(s.translates.size());
  if (K < 1) throw ConfigError("Delone set needs at least one translate");
  check_square(s.lattice.basis, d, "Delone lattice basis");
  const int m = std::max(K - 1, 1);
  CutProjectSpec cp;
  cp.dim = d;
  const int n = d + m;
  cp.basis.assign(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) cp.basis[i][j] = s.lattice.basis[i][j];
  for (const auto& t : s.translates)
    if (static_cast<int>(t.size()) != d) throw ConfigError("Delone translate has wrong dimension");
  cp.offset = s.translates[0];
  cp.window.kind = Window::Kind::points;
  cp.window.vertices.push_back(std::vector<double>(m, 0.0));
  // Row d + j - 1 carries translate j in physical space and e_j internally.
  for (int j = 1; j < K; ++j) {
    for (int a = 0; a < d; ++a) cp.basis[d + j - 1][a] = s.translates[j][a] - s.translates[0][a];
    cp.basis[d + j - 1][d + j - 1] = 1;
    std::vector<double> e(m, 0.0);
    e[j - 1] = 1;
    cp.window.vertices.push_back(e);
  }
  if (K == 1) cp.basis[d][d] = 1;  // one translate: trivial internal factor Z
  return cp;
}

}  // namespace

// ---------------------------------------------------------------------------

void enumerate_ellipsoid(const Matrix& G, const std::vector<double>& k0,
                         const std::function<void(const std::vector<long>&)>& visit) {
  const int n = static_cast<int>(G.size());
  // Upper-triangular R with G = R^T R, stored as diag q_ii = R_ii^2 and
  // mu_ij = R_ij / R_ii (j > i).
  Matrix L(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      double s = G[i][j];
      for (int k = 0; k < j; ++k) s -= L[i][k] * L[j][k];
      if (i == j) {
        if (!(s > 0)) throw ConfigError("ellipsoid form is not positive definite");
        L[i][i] = std::sqrt(s);
      } else {
        L[i][j] = s / L[j][j];
      }
    }
  // R = L^T: R_ij = L_ji.
  std::vector<double> rii(n);
  Matrix mu(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    rii[i] = L[i][i];
    for (int j = i + 1; j < n; ++j) mu[i][j] = L[j][i] / L[i][i];
  }
  std::vector<long> k(n);
  std::vector<double> x(n);
  const double budget0 = 1 + 1e-9;
  std::function<void(int, double)> rec = [&](int i, double budget) {
    double s = 0;
    for (int j = i + 1; j < n; ++j) s += mu[i][j] * x[j];
    const double half = std::sqrt(std::max(budget, 0.0)) / rii[i];
    const double c = k0[i] - s;
    const long lo = static_cast<long>(std::ceil(c - half - 1e-12));
    const long hi = static_cast<long>(std::floor(c + half + 1e-12));
    for (long ki = lo; ki <= hi; ++ki) {
      k[i] = ki;
      x[i] = static_cast<double>(ki) - k0[i];
      const double term = rii[i] * (x[i] + s);
      const double rest = budget - term * term;
      if (rest < -1e-12) continue;
      if (i == 0)
        visit(k);
      else
        rec(i - 1, rest);
    }
  };
  rec(n - 1, budget0);
}

template <int D>
std::optional<ScattererHit<D>> ScattererSet<D>::first_hit(const Vec<D>& q, const Vec<D>& v,
                                                          double r, double t_max,
                                                          const Vec<D>* exclude) const {
  if (!(r > 0)) throw PreconditionError("scatterer radius must be positive");
  if (!(t_max > 0) || !std::isfinite(t_max)) throw PreconditionError("t_max must be finite and positive");
  if (std::abs(norm(v) - 1) > 1e-9) throw PreconditionError("velocity must be a unit vector");
  HitSearch<D> best;
  best.limit = t_max;
  best.exclude = exclude;
  scan(q, v, r, best);
  if (!best.found) return std::nullopt;
  ScattererHit<D> h;
  h.center = best.center;
  h.colour = best.colour;
  h.entry_time = best.t;
  h.b = best.p * (1 / r);
  if constexpr (D == 2) {
    h.impact[0] = cross(v, h.b);
  } else {
    const Vec<D> bf = h.b * frame(v);
    h.impact[0] = bf[1];
    h.impact[1] = bf[2];
  }
  return h;
}

int config_dimension(const ScattererConfig& config) {
  return std::visit(
      [](const auto& s) -> int {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, LatticeSpec>) return static_cast<int>(s.basis.size());
        else if constexpr (std::is_same_v<T, AffineLatticeSpec>)
          return static_cast<int>(s.lattice.basis.size());
        else if constexpr (std::is_same_v<T, UnionSpec>)
          return s.members.empty() ? 0 : static_cast<int>(s.members[0].lattice.lattice.basis.size());
        else if constexpr (std::is_same_v<T, DeloneSpec>) return static_cast<int>(s.lattice.basis.size());
        else return s.dim;
      },
      config);
}

std::string config_kind(const ScattererConfig& config) {
  static const char* names[] = {"lattice", "lattice", "poisson", "union", "cut_project", "delone", "finite"};
  return names[config.index()];
}

template <int D>
std::unique_ptr<ScattererSet<D>> make_scatterers(const ScattererConfig& config) {
  if (config_dimension(config) != D) {
    std::ostringstream msg;
    msg << config_kind(config) << " configuration has dimension " << config_dimension(config)
        << ", expected " << D;
    throw ConfigError(msg.str());
  }
  return std::visit(
      [](const auto& s) -> std::unique_ptr<ScattererSet<D>> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, LatticeSpec>) {
          return std::make_unique<LatticeSet<D>>(
              LatticeComponent<D>(to_mat<D>(s.basis, "lattice basis"), Vec<D>{}, 0));
        } else if constexpr (std::is_same_v<T, AffineLatticeSpec>) {
          return std::make_unique<LatticeSet<D>>(LatticeComponent<D>(
              to_mat<D>(s.lattice.basis, "lattice basis"), to_vec<D>(s.shift, "lattice shift"), 0));
        } else if constexpr (std::is_same_v<T, PoissonSpec>) {
          if (!(s.intensity > 0) || !std::isfinite(s.intensity))
            throw ConfigError("Poisson intensity must be positive");
          return std::make_unique<PoissonSet<D>>(s);
        } else if constexpr (std::is_same_v<T, UnionSpec>) {
          return std::make_unique<UnionSet<D>>(union_members<D>(s));
        } else if constexpr (std::is_same_v<T, CutProjectSpec>) {
          return std::make_unique<CutProjectSet<D>>(s);
        } else if constexpr (std::is_same_v<T, DeloneSpec>) {
          const CutProjectSpec cp = delone_as_cut_project(s, D);
          std::vector<LatticeComponent<D>> members;
          const Mat<D> M = to_mat<D>(s.lattice.basis, "Delone lattice basis");
          for (std::size_t i = 0; i < s.translates.size(); ++i)
            members.emplace_back(M, to_vec<D>(s.translates[i], "Delone translate"),
                                 static_cast<int>(i));
          return std::make_unique<DeloneSet<D>>(cp, std::move(members));
        } else {
          std::vector<Scatterer<D>> pts;
          for (std::size_t i = 0; i < s.points.size(); ++i) {
            Colour c;
            c.index = static_cast<int>(i);
            pts.push_back({to_vec<D>(s.points[i], "finite point"), c});
            if (s.points[i].empty()) throw ConfigError("finite point has no coordinates");
          }
          return std::make_unique<FiniteSet<D>>(std::move(pts));
        }
      },
      config);
}

template <int D>
std::vector<Scatterer<D>> points_in_ball(const ScattererSet<D>& set, const Vec<D>& center,
                                         double radius) {
  if (!(radius >= 0) || !std::isfinite(radius)) throw PreconditionError("radius must be finite");
  std::vector<Scatterer<D>> out;
  set.points_in_ball(center, radius, out);
  return out;
}

template <int D>
double density_of(const ScattererSet<D>& set, double R, const Vec<D>& lo, const Vec<D>& hi) {
  Vec<D> c;
  double vol = 1, rad2 = 0;
  for (int a = 0; a < D; ++a) {
    if (!(hi[a] > lo[a])) throw PreconditionError("region must have positive volume");
    c[a] = 0.5 * R * (lo[a] + hi[a]);
    vol *= R * (hi[a] - lo[a]);
    rad2 += 0.25 * R * R * (hi[a] - lo[a]) * (hi[a] - lo[a]);
  }
  std::vector<Scatterer<D>> pts;
  set.points_in_ball(c, std::sqrt(rad2), pts);
  long count = 0;
  for (const auto& s : pts) {
    bool in = true;
    for (int a = 0; a < D; ++a) in = in && s.x[a] >= R * lo[a] && s.x[a] < R * hi[a];
    count += in;
  }
  return static_cast<double>(count) / vol;
}

template <int D>
double density_of_ball(const ScattererSet<D>& set, double R) {
  std::vector<Scatterer<D>> pts;
  set.points_in_ball(Vec<D>{}, R, pts);
  const double vol = D == 2 ? M_PI * R * R : 4.0 / 3.0 * M_PI * R * R * R;
  return static_cast<double>(pts.size()) / vol;
}

namespace presets {

LatticeSpec square_lattice() { return {{{1, 0}, {0, 1}}}; }

UnionSpec rotated_union(const std::vector<double>& densities) {
  UnionSpec u;
  u.incommensurable = true;
  // Generic shifts away from any lattice-aligned position.
  const double shifts[][2] = {{0, 0}, {0.3183098861837907, 0.5772156649015329},
                              {0.1415926535897932, 0.7071067811865476},
                              {0.6180339887498949, 0.2718281828459045}};
  for (std::size_t i = 0; i < densities.size(); ++i) {
    const double a = static_cast<double>(i);
    const double s = 1 / std::sqrt(densities[i]);
    UnionMember m;
    m.lattice.lattice.basis = {{s * std::cos(a), s * std::sin(a)}, {-s * std::sin(a), s * std::cos(a)}};
    m.lattice.shift = {shifts[i % 4][0] * s, shifts[i % 4][1] * s};
    m.density = densities[i];
    u.members.push_back(m);
  }
  return u;
}

namespace {
// Triangular lattice whose two-point honeycomb has unit density.
Matrix honeycomb_basis() {
  const double s = std::sqrt(4 / std::sqrt(3.0));
  return {{s, 0}, {s / 2, s * std::sqrt(3.0) / 2}};
}
std::vector<double> honeycomb_second() {
  const Matrix b = honeycomb_basis();
  return {(b[0][0] + b[1][0]) / 3, (b[0][1] + b[1][1]) / 3};
}
}  // namespace

DeloneSpec honeycomb_delone() { return {{honeycomb_basis()}, {{0, 0}, honeycomb_second()}}; }

UnionSpec honeycomb_union() {
  UnionSpec u;
  u.incommensurable = false;
  u.members.push_back({{{honeycomb_basis()}, {0, 0}}, std::nullopt});
  u.members.push_back({{{honeycomb_basis()}, honeycomb_second()}, std::nullopt});
  return u;
}

CutProjectSpec ammann_beenker(bool unit_density) {
  CutProjectSpec s;
  s.dim = 2;
  // Physical image e_k -> angle k pi/4, internal image e_k -> angle 3 k pi/4.
  const double scale = unit_density ? std::sqrt((1 + std::sqrt(2.0)) / 2) : 1.0;
  for (int k = 0; k < 4; ++k) {
    const double a = k * M_PI / 4, b = 3 * k * M_PI / 4;
    s.basis.push_back({scale * std::cos(a), scale * std::sin(a), std::cos(b), std::sin(b)});
  }
  // Window: internal projection of the unit 4-cube centred at the origin,
  // nudged off the origin so no lattice point falls on its boundary.
  s.window.kind = Window::Kind::polytope;
  for (int mask = 0; mask < 16; ++mask) {
    double y0 = 1e-4 * std::sqrt(2.0), y1 = 1e-4 * std::sqrt(3.0);
    for (int k = 0; k < 4; ++k) {
      const double e = (mask >> k & 1) ? 0.5 : -0.5;
      y0 += e * std::cos(3 * k * M_PI / 4);
      y1 += e * std::sin(3 * k * M_PI / 4);
    }
    s.window.vertices.push_back({y0, y1});
  }
  s.offset = {0, 0};
  return s;
}

}  // namespace presets

template class ScattererSet<2>;
template class ScattererSet<3>;
template std::unique_ptr<ScattererSet<2>> make_scatterers<2>(const ScattererConfig&);
template std::unique_ptr<ScattererSet<3>> make_scatterers<3>(const ScattererConfig&);
template std::vector<Scatterer<2>> points_in_ball<2>(const ScattererSet<2>&, const Vec<2>&, double);
template std::vector<Scatterer<3>> points_in_ball<3>(const ScattererSet<3>&, const Vec<3>&, double);
template double density_of<2>(const ScattererSet<2>&, double, const Vec<2>&, const Vec<2>&);
template double density_of<3>(const ScattererSet<3>&, double, const Vec<3>&, const Vec<3>&);
template double density_of_ball<2>(const ScattererSet<2>&, double);
template double density_of_ball<3>(const ScattererSet<3>&, double);

}  // namespace lorentz
