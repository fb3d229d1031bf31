#include "lorentz/kernels.hpp"

#include <algorithm>
#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <memory>
#include <mutex>
#include <numeric>
#include <string>

#include "lorentz/constants.hpp"
#include "lorentz/error.hpp"
#include "lorentz/numerics.hpp"

namespace lorentz {

namespace lattice2d {

namespace {

const double kC = [] {
  const Constants c = constants(2);
  return 1.0 / (c.xi_bar * c.zeta);
}();

const double kA = constants(2).tail_A;

void check_w(double w) {
  if (!(std::abs(w) < 1.0)) throw DomainError("impact parameter must satisfy |w| < 1");
}

struct Geometry {
  double a, b, xi1, xi2;
};

Geometry geometry(double wp, double w) {
  Geometry g;
  g.a = 1.0 + std::max(std::abs(w), std::abs(wp));
  g.b = std::abs(w - wp);
  g.xi1 = 1.0 / g.a;
  g.xi2 = 1.0 / (g.a - g.b);
  return g;
}

double upsilon(double x) { return x <= 0 ? 0.0 : (x < 1 ? x : 1.0); }

// Breakpoints in the integration variable where the kernel, viewed as a
// function of one impact parameter at fixed partner u and flight x, changes
// form.
std::vector<double> kink_points(double u, double x) {
  std::vector<double> pts{u, std::abs(u), -std::abs(u), 0.0};
  if (x > 0) {
    const double t = 1.0 / x - 1.0;
    pts.insert(pts.end(), {t, -t});
  }
  return pts;
}

}  // namespace

double plateau() { return kC; }

double k(double wp, double xi, double w) {
  check_w(wp);
  check_w(w);
  if (!(xi > 0)) throw DomainError("flight time must be positive");
  const double m = std::max(std::abs(w), std::abs(wp));
  const double b = std::abs(w - wp);
  if (b == 0) return xi < 1.0 / (1.0 + m) ? kC : 0.0;
  return kC * upsilon(1.0 + (1.0 / xi - m - 1.0) / b);
}

double xi_support_max(double wp, double w) {
  check_w(wp);
  check_w(w);
  return geometry(wp, w).xi2;
}

double marginal_w(double wp, double w) {
  check_w(wp);
  check_w(w);
  const Geometry g = geometry(wp, w);
  if (g.b == 0) return kC / g.a;
  return -kC / g.b * std::log1p(-g.b / g.a);
}

double tail_mass(double wp, double w, double xi) {
  check_w(wp);
  check_w(w);
  const Geometry g = geometry(wp, w);
  if (xi >= g.xi2) return 0.0;
  double out = 0;
  if (xi < g.xi1) out += kC * (g.xi1 - xi);
  if (g.b > 0) {
    // (C/b)(z - 1 - ln z), z = lo/xi2
    const double t = xi < g.xi1 ? -g.b / g.a : xi * (g.a - g.b) - 1.0;
    out += kC / g.b * x_minus_log1p(t);
  }
  return out;
}

double tail_first_moment(double wp, double w, double x) {
  check_w(wp);
  check_w(w);
  const Geometry g = geometry(wp, w);
  if (x >= g.xi2) return 0.0;
  double out = 0;
  if (x < g.xi1) out += 0.5 * kC * (g.xi1 - x) * (g.xi1 - x);
  if (g.b > 0) {
    const double t = x < g.xi1 ? -g.b / g.a : x * (g.a - g.b) - 1.0;
    out += kC / g.b * (0.5 * g.xi2 * t * t - x * x_minus_log1p(t));
  }
  return out;
}

double first_moment(double wp, double w) {
  check_w(wp);
  check_w(w);
  const Geometry g = geometry(wp, w);
  return kC / (2.0 * g.a * (g.a - g.b));
}

bool kernel_bounds_check(double wp, double xi, double w) {
  const double v = k(wp, xi, w);
  return v <= kC && v >= kC * (1.0 - 4.0 * xi);
}

double k_w_integral(double wp, double xi) {
  check_w(wp);
  const double c = 1.0 / xi - 1.0;
  const double u = std::abs(wp);
  std::vector<double> pts{-1.0, 1.0, wp, u, -u, 0.0};
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  double total = 0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double l = pts[i], r = pts[i + 1];
    if (!(r > l)) continue;
    const double mid = 0.5 * (l + r);
    const double s = mid > wp ? 1.0 : -1.0;
    // On this piece the Upsilon argument is p + D / (w - wp).
    double p, D;
    if (std::abs(mid) <= u) {
      p = 1.0;
      D = (c - u) / s;
    } else {
      const double sigma = mid > 0 ? 1.0 : -1.0;
      p = 1.0 - sigma / s;
      D = (c - sigma * wp) / s;
    }
    std::vector<double> sub{l, r};
    if (p != 0) sub.push_back(wp - D / p);
    if (p != 1) sub.push_back(wp + D / (1.0 - p));
    std::sort(sub.begin(), sub.end());
    double prev = l;
    for (double q : sub) {
      if (q <= prev) continue;
      const double hi = std::min(q, r);
      if (hi <= prev) continue;
      const double m2 = 0.5 * (prev + hi);
      const double gm = p + D / (m2 - wp);
      const double len = hi - prev;
      if (gm >= 1.0) {
        total += len;
      } else if (gm > 0.0) {
        total += p * len;
        if (D != 0) total += D * std::log1p(len / (prev - wp));
      }
      prev = hi;
      if (prev >= r) break;
    }
  }
  return kC * total;
}

double psi0(double xi) {
  if (!(xi > 0)) throw DomainError("flight time must be positive");
  if (xi <= 0.5) return kC;
  if (xi < 1.0) {
    const double t = 1.0 / xi - 1.0;
    auto f = [xi](double wp) { return wp < 1.0 ? k_w_integral(wp, xi) : 0.0; };
    return 0.5 * integrate(f, 0.0, 1.0, {t}, 1e-10, 1e-300).value;
  }
  // For xi >= 1 only |w'| > 1 - eps contributes (eps = 1/xi). With
  // u = 1 - eps + d, the w-integral reduces to
  //   d log1p(z) + d^2/2u + (u + 1 - eps)(log1p(-y) + y),  z = (eps - d)/2u, y = d/2u,
  // regrouped so that the canceling O(d) and O(d^2) parts never appear.
  const double eps = 1.0 / xi;
  auto f = [eps](double d) {
    const double u = 1.0 - eps + d;
    const double z = (eps - d) / (2.0 * u), y = d / (2.0 * u);
    return d * (eps / (2.0 * u) - x_minus_log1p(z)) - (u + 1.0 - eps) * x_minus_log1p(-y);
  };
  return 0.5 * kC * integrate(f, 0.0, eps, {}, 1e-11, 1e-300).value;
}

namespace {

double double_average(double (*g)(double, double, double), double x) {
  // (1/4) of the integral over the square, using the (w', w) -> (-w', -w)
  // symmetry to fold w' onto [0, 1).
  auto inner = [&](double wp) {
    if (!(wp < 1.0)) return 0.0;
    auto f = [&](double w) { return std::abs(w) < 1.0 ? g(wp, w, x) : 0.0; };
    // Near the corners |w'| -> 1 the integrand is resolved only to the
    // spacing of doubles next to 1; the outer estimate still controls accuracy.
    return integrate(f, -1.0, 1.0, kink_points(wp, x), 1e-11, 1e-300, false).value;
  };
  std::vector<double> outer_pts;
  if (x > 0) outer_pts = {std::abs(1.0 / x - 1.0)};
  return 0.5 * integrate(inner, 0.0, 1.0, outer_pts, 1e-10, 1e-300).value;
}

}  // namespace

double survival_direct(double x) { return double_average(&tail_mass, x); }

double survival_integral_direct(double x) { return double_average(&tail_first_moment, x); }

namespace {

// Tables of survival and its integral on a log grid over [1/2, x_max],
// assembled from Gauss-Legendre panels of psi0 summed from the right.
struct SurvivalTables {
  static constexpr double x_min = 0.5;
  static constexpr double x_max = 1.0e4;
  double s0_end = 0, s1_end = 0;
  std::unique_ptr<boost::math::interpolators::cubic_hermite<std::vector<double>>> s0, s1;

  SurvivalTables() {
    const int n = 480;
    std::vector<double> x(n + 1);
    for (int i = 0; i <= n; ++i) x[i] = x_min * std::pow(x_max / x_min, double(i) / n);
    x[n] = x_max;
    // x = 1 is a kink of psi0; put it on the grid.
    auto it = std::min_element(x.begin(), x.end(), [](double p, double q) {
      return std::abs(p - 1.0) < std::abs(q - 1.0);
    });
    *it = 1.0;

    using GL = boost::math::quadrature::gauss<double, 20>;
    const auto& nodes = GL::abscissa();
    const auto& weights = GL::weights();

    std::vector<double> mass(n), moment(n);
    for (int i = 0; i < n; ++i) {
      const double h = 0.5 * (x[i + 1] - x[i]), c = 0.5 * (x[i + 1] + x[i]);
      double m0 = 0, m1 = 0;
      for (std::size_t j = 0; j < nodes.size(); ++j) {
        for (double sgn : {-1.0, 1.0}) {
          if (nodes[j] == 0 && sgn > 0) continue;
          const double xi = c + sgn * h * nodes[j];
          const double p = psi0(xi);
          m0 += weights[j] * p;
          m1 += weights[j] * xi * p;
        }
      }
      mass[i] = h * m0;
      moment[i] = h * m1;
    }

    // Beyond x_max the leading tail A / xi^3 is used.
    std::vector<double> S0(n + 1), T1(n + 1), P(n + 1);
    S0[n] = kA / (2.0 * x_max * x_max);
    T1[n] = kA / x_max;
    for (int i = n - 1; i >= 0; --i) {
      S0[i] = S0[i + 1] + mass[i];
      T1[i] = T1[i + 1] + moment[i];
    }
    for (int i = 0; i <= n; ++i) P[i] = psi0(x[i]);

    std::vector<double> lx(n + 1), y0(n + 1), d0(n + 1), y1(n + 1), d1(n + 1);
    for (int i = 0; i <= n; ++i) {
      const double s1 = T1[i] - x[i] * S0[i];
      lx[i] = std::log(x[i]);
      y0[i] = std::log(S0[i]);
      d0[i] = -x[i] * P[i] / S0[i];
      y1[i] = std::log(s1);
      d1[i] = -x[i] * S0[i] / s1;
    }
    s0_end = S0[n];
    s1_end = T1[n] - x_max * S0[n];
    auto lx1 = lx;
    s0 = std::make_unique<boost::math::interpolators::cubic_hermite<std::vector<double>>>(
        std::move(lx), std::move(y0), std::move(d0));
    s1 = std::make_unique<boost::math::interpolators::cubic_hermite<std::vector<double>>>(
        std::move(lx1), std::move(y1), std::move(d1));
  }
};

const SurvivalTables& tables() {
  static std::once_flag flag;
  static std::unique_ptr<SurvivalTables> t;
  std::call_once(flag, [] { t = std::make_unique<SurvivalTables>(); });
  return *t;
}

}  // namespace

double survival(double x) {
  if (x <= 0) return 1.0;
  if (x <= 0.5) return 1.0 - kC * x;
  const SurvivalTables& t = tables();
  if (x >= t.x_max) return t.s0_end * (t.x_max / x) * (t.x_max / x);
  return std::exp((*t.s0)(std::log(x)));
}

double survival_integral(double x) {
  if (x <= 0) return 0.5 - x;
  if (x <= 0.5) return 0.5 - x + 0.5 * kC * x * x;
  const SurvivalTables& t = tables();
  if (x >= t.x_max) return t.s1_end * (t.x_max / x);
  return std::exp((*t.s1)(std::log(x)));
}

double bigK(double xi, double w) {
  check_w(w);
  if (xi < 0) throw DomainError("flight time must be nonnegative");
  auto f = [&](double wp) { return std::abs(wp) < 1.0 ? tail_mass(wp, w, xi) : 0.0; };
  return integrate(f, -1.0, 1.0, kink_points(w, xi), 1e-11, 1e-17).value;
}

double bigK_w_density(double w) {
  check_w(w);
  const double u = std::abs(w);
  const double ln2 = std::log(2.0);
  // Half of the integral of first_moment over w', split by quadrant.
  return 0.25 * kC *
         (ln2 / (1.0 + u) - std::log1p(-u) / (1.0 + u) + std::log(2.0 / (1.0 + u)) / (1.0 - u));
}

namespace {

struct WCdfTable {
  std::vector<double> u, F;
  std::unique_ptr<boost::math::interpolators::cubic_hermite<std::vector<double>>> spline;

  WCdfTable() {
    // Grid in u = |w| on [0, 1), refined geometrically toward 1 where the
    // density has a logarithmic spike.
    std::vector<double> g;
    for (int i = 0; i <= 400; ++i) g.push_back(0.9 * i / 400.0);
    for (int i = 1; i <= 400; ++i) g.push_back(1.0 - 0.1 * std::pow(1e-13, i / 400.0));
    std::vector<double> F(g.size()), d(g.size());
    F[0] = 0;
    for (std::size_t i = 1; i < g.size(); ++i)
      F[i] = F[i - 1] + integrate(bigK_w_density, g[i - 1], g[i], {}, 1e-13, 1e-300).value;
    for (std::size_t i = 0; i < g.size(); ++i) d[i] = bigK_w_density(g[i]);
    u = g;
    spline = std::make_unique<boost::math::interpolators::cubic_hermite<std::vector<double>>>(
        std::move(g), std::move(F), std::move(d));
  }
};

const WCdfTable& w_table() {
  static std::once_flag flag;
  static std::unique_ptr<WCdfTable> t;
  std::call_once(flag, [] { t = std::make_unique<WCdfTable>(); });
  return *t;
}

}  // namespace

double bigK_w_cdf(double w) {
  if (w <= -1) return 0.0;
  if (w >= 1) return 1.0;
  const WCdfTable& t = w_table();
  const double u = std::min(std::abs(w), t.u.back());
  const double half = std::clamp((*t.spline)(u), 0.0, 0.5);
  return w >= 0 ? 0.5 + half : 0.5 - half;
}

double bigK_xi_cdf(double xi) { return 1.0 - 2.0 * survival_integral(xi); }

}  // namespace lattice2d

namespace {

const double kXiBar2 = constants(2).xi_bar;

template <class... F>
struct overload : F... {
  using F::operator()...;
};
template <class... F>
overload(F...) -> overload<F...>;

void check_colour(const UnionKernel& u, int c) {
  if (c < 0 || c >= static_cast<int>(u.densities.size()))
    throw DomainError("colour index out of range: " + std::to_string(c));
}

// Survival of a random affine lattice scaled to density n: Psi-bar(n xi).
double psi_bar(double x) { return 2.0 * lattice2d::survival_integral(x); }
double psi_one(double x) { return 2.0 * lattice2d::survival(x); }

}  // namespace

KernelModel normalized(KernelModel model) {
  if (auto* p = std::get_if<PoissonKernel>(&model)) {
    if (p->dim != 2 && p->dim != 3) throw ConfigError("Poisson kernel dimension must be 2 or 3");
  }
  if (auto* u = std::get_if<UnionKernel>(&model)) {
    if (u->densities.empty()) throw ConfigError("union kernel needs at least one lattice");
    double s = 0;
    for (double n : u->densities) {
      if (!(n > 0) || !std::isfinite(n)) throw ConfigError("union densities must be positive");
      s += n;
    }
    for (double& n : u->densities) n /= s;
  }
  return model;
}

double xi_bar(const KernelModel& model) {
  if (auto* p = std::get_if<PoissonKernel>(&model)) return constants(p->dim).xi_bar;
  return kXiBar2;
}

int dimension(const KernelModel& model) {
  if (auto* p = std::get_if<PoissonKernel>(&model)) return p->dim;
  return 2;
}

int colour_count(const KernelModel& model) {
  if (auto* u = std::get_if<UnionKernel>(&model)) return static_cast<int>(u->densities.size());
  return 1;
}

double k_eval(const KernelModel& model, const Omega& from, double xi, const Omega& to) {
  if (!(xi > 0)) throw DomainError("flight time must be positive");
  return std::visit(
      overload{
          [&](const PoissonKernel& p) {
            if (!(std::abs(from.w) < 1) || !(std::abs(to.w) < 1))
              throw DomainError("impact parameter must satisfy |w| < 1");
            const double xb = constants(p.dim).xi_bar;
            return std::exp(-xi / xb) / xb;
          },
          [&](const Lattice2DKernel&) { return lattice2d::k(from.w, xi, to.w); },
          [&](const UnionKernel& u) {
            check_colour(u, from.colour);
            check_colour(u, to.colour);
            const auto& n = u.densities;
            const int jp = from.colour, j = to.colour;
            double out;
            if (jp == j) {
              out = lattice2d::k(from.w, n[j] * xi, to.w);
            } else {
              out = kXiBar2 * lattice2d::bigK(n[jp] * xi, from.w) * lattice2d::bigK(n[j] * xi, to.w);
            }
            for (int i = 0; i < static_cast<int>(n.size()); ++i)
              if (i != j && i != jp && out > 0) out *= psi_bar(n[i] * xi);
            return out;
          }},
      model);
}

double psi0(const KernelModel& model, double xi) {
  if (!(xi > 0)) throw DomainError("flight time must be positive");
  return std::visit(overload{
                        [&](const PoissonKernel& p) {
                          const double xb = constants(p.dim).xi_bar;
                          return std::exp(-xi / xb) / xb;
                        },
                        [&](const Lattice2DKernel&) { return lattice2d::psi0(xi); },
                        [&](const UnionKernel& u) {
                          const auto& n = u.densities;
                          const int N = static_cast<int>(n.size());
                          std::vector<double> pb(N), ps(N);
                          for (int i = 0; i < N; ++i) {
                            pb[i] = psi_bar(n[i] * xi);
                            ps[i] = psi_one(n[i] * xi);
                          }
                          double out = 0;
                          for (int j = 0; j < N; ++j) {
                            double same = n[j] * n[j] * lattice2d::psi0(n[j] * xi);
                            for (int i = 0; i < N; ++i)
                              if (i != j) same *= pb[i];
                            out += same;
                            for (int jp = 0; jp < N; ++jp) {
                              if (jp == j) continue;
                              double cross = n[jp] * n[j] * kXiBar2 * ps[jp] * ps[j];
                              for (int i = 0; i < N; ++i)
                                if (i != j && i != jp) cross *= pb[i];
                              out += cross;
                            }
                          }
                          return out;
                        }},
                    model);
}

double psi0_survival(const KernelModel& model, double xi) {
  if (xi <= 0) return 1.0;
  return std::visit(overload{
                        [&](const PoissonKernel& p) { return std::exp(-xi / constants(p.dim).xi_bar); },
                        [&](const Lattice2DKernel&) { return lattice2d::survival(xi); },
                        [&](const UnionKernel& u) {
                          const auto& n = u.densities;
                          const int N = static_cast<int>(n.size());
                          double out = 0;
                          for (int j = 0; j < N; ++j) {
                            double term = n[j] * lattice2d::survival(n[j] * xi);
                            for (int i = 0; i < N; ++i)
                              if (i != j) term *= psi_bar(n[i] * xi);
                            out += term;
                          }
                          return out;
                        }},
                    model);
}

double bigK(const KernelModel& model, double xi, const Omega& to) {
  if (xi < 0) throw DomainError("flight time must be nonnegative");
  return std::visit(overload{
                        [&](const PoissonKernel& p) {
                          const double xb = constants(p.dim).xi_bar;
                          return std::exp(-xi / xb) / xb;
                        },
                        [&](const Lattice2DKernel&) { return lattice2d::bigK(xi, to.w); },
                        [&](const UnionKernel& u) {
                          check_colour(u, to.colour);
                          const auto& n = u.densities;
                          double out = lattice2d::bigK(n[to.colour] * xi, to.w);
                          for (int i = 0; i < static_cast<int>(n.size()); ++i)
                            if (i != to.colour) out *= psi_bar(n[i] * xi);
                          return out;
                        }},
                    model);
}

double union_tail_exponent(int n) {
  if (n < 1) throw DomainError("union needs at least one lattice");
  return n + 2.0;
}

}  // namespace lorentz
