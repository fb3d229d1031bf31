#include "lorentz/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/quadrature/gauss.hpp>

#include "lorentz/error.hpp"
#include "lorentz/tolerances.hpp"

namespace lorentz {

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> values,
                                             std::vector<double> censored)
    : values_(std::move(values)), sorted_(values_), censored_(std::move(censored)) {
  std::sort(sorted_.begin(), sorted_.end());
  if (!censored_.empty()) cutoff_ = *std::min_element(censored_.begin(), censored_.end());
}

double EmpiricalDistribution::cdf(double x) const {
  if (size() == 0) return 0;
  const auto k = std::upper_bound(sorted_.begin(), sorted_.end(), x) - sorted_.begin();
  return static_cast<double>(k) / static_cast<double>(size());
}

double EmpiricalDistribution::quantile(double p) const {
  if (sorted_.empty()) throw EstimationError("quantile of an empty sample");
  const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(sorted_.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= sorted_.size()) return sorted_.back();
  const double f = pos - static_cast<double>(i);
  return sorted_[i] + f * (sorted_[i + 1] - sorted_[i]);
}

std::vector<double> EmpiricalDistribution::km_survival(const std::vector<double>& xs) const {
  std::vector<double> cens = censored_;
  std::sort(cens.begin(), cens.end());
  std::vector<double> out(xs.size());
  double s = 1.0;
  double at_risk = static_cast<double>(size());
  std::size_t i = 0, c = 0;
  for (std::size_t q = 0; q < xs.size(); ++q) {
    while (i < sorted_.size() && sorted_[i] <= xs[q]) {
      const double t = sorted_[i];
      // Observations censored strictly before t have left the risk set.
      while (c < cens.size() && cens[c] < t) {
        at_risk -= 1;
        ++c;
      }
      std::size_t j = i;
      while (j < sorted_.size() && sorted_[j] == t) ++j;
      const double d = static_cast<double>(j - i);
      s *= 1.0 - d / at_risk;
      at_risk -= d;
      i = j;
    }
    out[q] = s;
  }
  return out;
}

double EmpiricalDistribution::km_survival(double x) const { return km_survival(std::vector<double>{x})[0]; }

long EmpiricalDistribution::count_in(double lo, double hi) const {
  return std::upper_bound(sorted_.begin(), sorted_.end(), hi) -
         std::lower_bound(sorted_.begin(), sorted_.end(), lo);
}

KsResult ks_distance(const EmpiricalDistribution& emp, const std::function<double(double)>& cdf) {
  if (emp.uncensored() < tolerances::kMinKsSamples)
    throw EstimationError("KS distance needs at least 100 uncensored samples, got " +
                          std::to_string(emp.uncensored()));
  const auto& s = emp.sorted();
  const double N = static_cast<double>(emp.size());
  const double cut = emp.cutoff();
  double D = 0;
  std::size_t i = 0;
  while (i < s.size() && s[i] < cut) {
    std::size_t j = i;
    while (j < s.size() && s[j] == s[i]) ++j;
    const double F = cdf(s[i]);
    D = std::max({D, std::abs(F - static_cast<double>(i) / N), std::abs(F - static_cast<double>(j) / N)});
    i = j;
  }
  if (std::isfinite(cut)) D = std::max(D, std::abs(cdf(cut) - static_cast<double>(i) / N));
  return {D, emp.uncensored(), emp.censored_count(), cut};
}

double ks_critical(long n, double alpha) {
  return std::sqrt(-std::log(alpha / 2.0) / 2.0) / std::sqrt(static_cast<double>(n));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

template <int D>
EmpiricalDistribution free_paths(const std::vector<MacroTrajectory<D>>& ensemble) {
  std::vector<double> values, censored;
  if (ensemble.empty()) return EmpiricalDistribution{};
  const double r = ensemble.front().r;
  for (const auto& tr : ensemble) {
    if (tr.r != r) throw PreconditionError("trajectories with different radii in one ensemble");
    for (std::size_t k = 1; k < tr.records.size(); ++k)
      values.push_back(tr.records[k].T - tr.records[k - 1].T);
    if (tr.censored && !tr.records.empty()) censored.push_back(tr.T_final - tr.records.back().T);
  }
  return EmpiricalDistribution(std::move(values), std::move(censored));
}

FreePathComparison freepath_compare(const EmpiricalDistribution& flights, const KernelModel& model,
                                    double r) {
  FreePathComparison out;
  out.r = r;
  out.ks = ks_distance(flights, [&](double x) { return 1.0 - psi0_survival(model, x); });
  const auto& v = flights.values();
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  return out;
}

template <int D>
FreePathComparison freepath_compare(const std::vector<MacroTrajectory<D>>& ensemble,
                                    const KernelModel& model) {
  return freepath_compare(free_paths(ensemble), model, ensemble.empty() ? 0.0 : ensemble.front().r);
}

namespace {

int bin_of(double x, double lo, double hi, int n) {
  const int k = static_cast<int>(std::floor((x - lo) / (hi - lo) * n));
  return std::clamp(k, 0, n - 1);
}

// Inverse of the lattice Psi_0 survival by bisection.
double survival_inverse(double target) {
  double lo = 0, hi = 1e4;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (lattice2d::survival(mid) > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Gauss-Legendre rule on [a, b], split into `panels` pieces.
template <class F>
void gauss_panels(double a, double b, int panels, F&& visit) {
  using GL = boost::math::quadrature::gauss<double, 8>;
  const auto& x = GL::abscissa();
  const auto& wt = GL::weights();
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double c = a + (p + 0.5) * h, half = 0.5 * h;
    for (std::size_t i = 0; i < x.size(); ++i) {
      visit(c + half * x[i], half * wt[i]);
      if (x[i] != 0) visit(c - half * x[i], half * wt[i]);
    }
  }
}

KernelComparison compare_lattice(const std::vector<KernelSample>& samples,
                                 const KernelCompareOptions& o) {
  KernelComparison out;
  const int nb = o.wbins, nx = o.xi_cells, nw = o.w_cells;
  for (int b = 0; b <= nb; ++b) out.wp_edges.push_back(-1.0 + 2.0 * b / nb);
  for (int j = 0; j <= nw; ++j) out.w_edges.push_back(-1.0 + 2.0 * j / nw);
  out.xi_edges.push_back(0.0);
  for (int i = 1; i < nx; ++i) out.xi_edges.push_back(survival_inverse(1.0 - static_cast<double>(i) / nx));
  out.xi_edges.push_back(std::numeric_limits<double>::infinity());

  std::vector<double> observed(static_cast<std::size_t>(nb) * nx * nw, 0.0);
  out.bin_counts.assign(nb, 0);
  for (const auto& s : samples) {
    const int b = bin_of(s.wp, -1.0, 1.0, nb);
    const int i = static_cast<int>(std::upper_bound(out.xi_edges.begin(), out.xi_edges.end(), s.xi) -
                                   out.xi_edges.begin()) - 1;
    const int j = bin_of(s.w, -1.0, 1.0, nw);
    ++out.bin_counts[b];
    observed[(static_cast<std::size_t>(b) * nx + std::clamp(i, 0, nx - 1)) * nw + j] += 1;
  }

  std::vector<double> tail(nx + 1);
  for (int b = 0; b < nb; ++b) {
    const long count = out.bin_counts[b];
    if (count < o.min_bin_samples) out.undersampled_bins.push_back(b);
    // Cell probabilities averaged over w' uniform in the bin.
    std::vector<double> prob(static_cast<std::size_t>(nx) * nw, 0.0);
    const double a = out.wp_edges[b], c = out.wp_edges[b + 1];
    gauss_panels(a, c, 4, [&](double wp, double wwp) {
      for (int j = 0; j < nw; ++j) {
        std::vector<double> cuts = {out.w_edges[j]};
        for (double k : {-std::abs(wp), std::abs(wp)})
          if (k > out.w_edges[j] && k < out.w_edges[j + 1]) cuts.push_back(k);
        cuts.push_back(out.w_edges[j + 1]);
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
          gauss_panels(cuts[p], cuts[p + 1], 2, [&](double w, double ww) {
            tail[0] = lattice2d::marginal_w(wp, w);
            for (int i = 1; i < nx; ++i) tail[i] = lattice2d::tail_mass(wp, w, out.xi_edges[i]);
            tail[nx] = 0.0;
            const double f = wwp / (c - a) * ww * 0.5;
            for (int i = 0; i < nx; ++i) prob[static_cast<std::size_t>(i) * nw + j] += f * (tail[i] - tail[i + 1]);
          });
        }
      }
    });
    const double mass = std::accumulate(prob.begin(), prob.end(), 0.0);
    out.mass_defect = std::max(out.mass_defect, std::abs(mass - 1.0));
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < nw; ++j) {
        KernelCell cell{b, i, j, observed[(static_cast<std::size_t>(b) * nx + i) * nw + j],
                        static_cast<double>(count) * prob[static_cast<std::size_t>(i) * nw + j]};
        if (cell.expected >= o.min_expected) {
          const double z = (cell.observed - cell.expected) / std::sqrt(cell.expected);
          ++out.adequate_cells;
          if (std::abs(z) <= o.se_limit) ++out.within;
          out.chi2 += z * z;
          out.worst_z = std::max(out.worst_z, std::abs(z));
        }
        out.cells.push_back(cell);
      }
  }
  out.dof = std::max<long>(out.adequate_cells - nb, 0);
  out.fraction_within =
      out.adequate_cells > 0 ? static_cast<double>(out.within) / static_cast<double>(out.adequate_cells) : 0.0;
  return out;
}

KernelComparison compare_poisson(const std::vector<KernelSample>& samples, const KernelModel& model) {
  KernelComparison out;
  std::vector<double> xs, ws;
  for (const auto& s : samples) {
    xs.push_back(s.xi);
    ws.push_back(s.w);
  }
  const double mean = xi_bar(model);
  out.ks_xi = ks_distance(EmpiricalDistribution(xs), [&](double x) { return -std::expm1(-x / mean); }).distance;
  out.ks_w = ks_distance(EmpiricalDistribution(ws), [](double w) { return std::clamp(0.5 * (w + 1.0), 0.0, 1.0); })
                 .distance;
  return out;
}

}  // namespace

KernelComparison kernel_compare(const std::vector<KernelSample>& samples, const KernelModel& model,
                                const KernelCompareOptions& options) {
  if (std::holds_alternative<Lattice2DKernel>(model)) return compare_lattice(samples, options);
  if (const auto* p = std::get_if<PoissonKernel>(&model); p && p->dim == 2)
    return compare_poisson(samples, model);
  throw ConfigError("kernel comparison supports the planar lattice and planar Poisson models");
}

template <int D>
std::vector<MsdPoint> msd_curve(const std::vector<double>& times,
                                const std::vector<std::vector<Vec<D>>>& displacements) {
  if (times.size() != displacements.size())
    throw PreconditionError("one displacement set per time is required");
  std::vector<MsdPoint> out;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto& dq = displacements[i];
    MsdPoint p;
    p.t = times[i];
    p.n = static_cast<long>(dq.size());
    if (dq.empty()) throw EstimationError("no paths for the MSD estimate");
    double s = 0, s2 = 0;
    std::vector<double> comps;
    comps.reserve(dq.size() * D);
    for (const auto& x : dq) {
      const double m = norm2(x);
      s += m;
      s2 += m * m;
      for (int k = 0; k < D; ++k) comps.push_back(x[k]);
    }
    const double n = static_cast<double>(dq.size());
    p.msd = s / n;
    p.msd_se = std::sqrt(std::max(s2 / n - p.msd * p.msd, 0.0) / n);
    p.q75 = EmpiricalDistribution(std::move(comps)).quantile(0.75);
    out.push_back(p);
  }
  return out;
}

template <int D>
std::vector<MsdPoint> msd_curve(const std::vector<FlightPath<D>>& paths,
                                const std::vector<double>& times) {
  std::vector<std::vector<Vec<D>>> disp(times.size());
  for (std::size_t i = 0; i < times.size(); ++i)
    for (const auto& p : paths) disp[i].push_back(eval_path(p, times[i]).Q - p.Q0);
  return msd_curve<D>(times, disp);
}

GaussianityResult gaussianity_test(const std::vector<double>& components, double t,
                                   const Normalisation& norm) {
  if (static_cast<long>(components.size()) < tolerances::kMinGaussianPaths)
    throw PreconditionError("gaussianity test needs at least 10^4 values");
  GaussianityResult out;
  out.t = t;
  if (norm.kind == Normalisation::Kind::self_sqrt_t) {
    const double n = static_cast<double>(components.size());
    const double mean = std::accumulate(components.begin(), components.end(), 0.0) / n;
    double v = 0;
    for (double x : components) v += (x - mean) * (x - mean);
    out.scale = std::sqrt(v / (n - 1));
  } else {
    out.scale = t > 1 ? norm.sigma * std::sqrt(t * std::log(t)) : 0.0;
  }
  std::vector<double> z(components.size(), 0.0);
  if (out.scale > 0)
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = components[i] / out.scale;
  out.ks = ks_distance(EmpiricalDistribution(std::move(z)), normal_cdf);
  return out;
}

namespace {

struct LineFit {
  double slope = 0;
  bool ok = false;
};

LineFit fit_survival(const EmpiricalDistribution& emp, const std::vector<double>& grid) {
  const auto S = emp.km_survival(grid);
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(S[i] > 0)) continue;
    const double x = std::log(grid[i]), y = std::log(S[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    n += 1;
  }
  if (n < 3) return {};
  return {(n * sxy - sx * sy) / (n * sxx - sx * sx), true};
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  return g;
}

}  // namespace

TailFit tail_exponent_fit(const EmpiricalDistribution& emp, double lo, double hi) {
  if (!(lo > 0) || !(hi > lo)) throw PreconditionError("tail fit needs 0 < lo < hi");
  TailFit out;
  out.lo = lo;
  out.hi = hi;
  out.n_in_range = emp.count_in(lo, hi);
  if (out.n_in_range < tolerances::kMinTailSamples)
    throw EstimationError("tail fit needs at least 10^3 samples in range, got " +
                          std::to_string(out.n_in_range));
  const int points = 24;
  const auto full = fit_survival(emp, log_grid(lo, hi, points));
  const double mid = std::sqrt(lo * hi);
  const auto low = fit_survival(emp, log_grid(lo, mid, points / 2));
  const auto high = fit_survival(emp, log_grid(mid, hi, points / 2));
  out.exponent = -full.slope;
  out.slope_low = -low.slope;
  out.slope_high = -high.slope;

  // Interleaved sub-samples in sampling order give the spread of the fit.
  constexpr int kGroups = 10;
  std::vector<std::vector<double>> gv(kGroups), gc(kGroups);
  for (std::size_t i = 0; i < emp.values().size(); ++i) gv[i % kGroups].push_back(emp.values()[i]);
  for (std::size_t i = 0; i < emp.censored().size(); ++i) gc[i % kGroups].push_back(emp.censored()[i]);
  std::vector<double> slopes;
  for (int g = 0; g < kGroups; ++g) {
    const auto f = fit_survival(EmpiricalDistribution(gv[g], gc[g]), log_grid(lo, hi, points));
    if (f.ok) slopes.push_back(-f.slope);
  }
  if (slopes.size() >= 2) {
    const double m = std::accumulate(slopes.begin(), slopes.end(), 0.0) / static_cast<double>(slopes.size());
    double v = 0;
    for (double s : slopes) v += (s - m) * (s - m);
    v /= static_cast<double>(slopes.size() - 1);
    out.stderr_ = std::sqrt(v / static_cast<double>(slopes.size()));
  }
  // A power law has the same slope on both halves of the range.
  const double gap = std::abs(out.slope_high - out.slope_low);
  out.curved = gap > std::max(0.25 * std::abs(out.exponent), 3.0 * out.stderr_ * std::sqrt(2.0 * kGroups));
  return out;
}

std::vector<double> running_second_moment(const std::vector<double>& xs,
                                          const std::vector<long>& checkpoints) {
  std::vector<double> out;
  double s = 0;
  long n = 0;
  for (long cp : checkpoints) {
    if (cp > static_cast<long>(xs.size()) || cp <= 0)
      throw PreconditionError("checkpoint beyond the sample size");
    for (; n < cp; ++n) s += xs[n] * xs[n];
    out.push_back(s / static_cast<double>(n));
  }
  return out;
}

void ExperimentReport::check(std::string name, double value, std::string relation, double target,
                             double tolerance, bool pass) {
  checks.push_back({std::move(name), value, std::move(relation), target, tolerance, pass});
}

bool ExperimentReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

nlohmann::ordered_json ExperimentReport::to_json() const {
  nlohmann::ordered_json j;
  j["experiment"] = id;
  j["criterion"] = criterion;
  j["config_digest"] = config_digest;
  j["seed"] = seed;
  j["config"] = config;
  j["counts"] = counts;
  j["statistics"] = statistics;
  auto cj = nlohmann::ordered_json::array();
  for (const auto& c : checks)
    cj.push_back({{"name", c.name},
                  {"value", c.value},
                  {"relation", c.relation},
                  {"target", c.target},
                  {"tolerance", c.tolerance},
                  {"pass", c.pass}});
  j["checks"] = cj;
  j["notes"] = notes;
  j["report_only"] = checks.empty();
  j["pass"] = pass();
  return j;
}

template EmpiricalDistribution free_paths<2>(const std::vector<MacroTrajectory<2>>&);
template EmpiricalDistribution free_paths<3>(const std::vector<MacroTrajectory<3>>&);
template FreePathComparison freepath_compare<2>(const std::vector<MacroTrajectory<2>>&, const KernelModel&);
template FreePathComparison freepath_compare<3>(const std::vector<MacroTrajectory<3>>&, const KernelModel&);
template std::vector<MsdPoint> msd_curve<2>(const std::vector<double>&, const std::vector<std::vector<Vec<2>>>&);
template std::vector<MsdPoint> msd_curve<3>(const std::vector<double>&, const std::vector<std::vector<Vec<3>>>&);
template std::vector<MsdPoint> msd_curve<2>(const std::vector<FlightPath<2>>&, const std::vector<double>&);
template std::vector<MsdPoint> msd_curve<3>(const std::vector<FlightPath<3>>&, const std::vector<double>&);

}  // namespace lorentz
