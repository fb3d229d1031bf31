#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "lorentz/kernels.hpp"
#include "lorentz/limitprocess.hpp"
#include "lorentz/microdynamics.hpp"

namespace lorentz {

// Sample with right censoring. `values` are exact observations; each entry of
// `censored` is a censoring time, i.e. the observation is only known to
// exceed it.
class EmpiricalDistribution {
 public:
  EmpiricalDistribution() = default;
  explicit EmpiricalDistribution(std::vector<double> values, std::vector<double> censored = {});

  long size() const { return static_cast<long>(sorted_.size() + censored_.size()); }
  long uncensored() const { return static_cast<long>(sorted_.size()); }
  long censored_count() const { return static_cast<long>(censored_.size()); }
  // Smallest censoring time; +inf without censoring. The empirical CDF is
  // exact below it.
  double cutoff() const { return cutoff_; }
  // Observations in input order.
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& sorted() const { return sorted_; }
  const std::vector<double>& censored() const { return censored_; }

  // #{values <= x} / size().
  double cdf(double x) const;
  // Quantile of the uncensored values.
  double quantile(double p) const;
  // Kaplan-Meier survival estimate at each (ascending) x.
  std::vector<double> km_survival(const std::vector<double>& xs) const;
  double km_survival(double x) const;
  long count_in(double lo, double hi) const;

 private:
  std::vector<double> values_, sorted_, censored_;
  double cutoff_ = std::numeric_limits<double>::infinity();
};

struct KsResult {
  double distance = 0;
  long n = 0;
  long censored = 0;
  double cutoff = std::numeric_limits<double>::infinity();
};

// Sup distance between the empirical CDF and `cdf`, taken over x below the
// censoring cutoff. Throws EstimationError with fewer than 100 uncensored
// samples.
KsResult ks_distance(const EmpiricalDistribution& emp, const std::function<double(double)>& cdf);

// Asymptotic Kolmogorov critical value sqrt(-log(alpha/2)/2)/sqrt(n).
double ks_critical(long n, double alpha);

double normal_cdf(double x);

// Free flights between consecutive collisions of macroscopic trajectories.
// The flight before the first collision is skipped (its law is not Psi_0);
// the open final flight of a censored trajectory is a censored observation.
// Throws PreconditionError when the trajectories do not share r.
template <int D>
EmpiricalDistribution free_paths(const std::vector<MacroTrajectory<D>>& ensemble);

struct FreePathComparison {
  double r = 0;
  KsResult ks;
  double mean = 0;  // of the uncensored flights
};

template <int D>
FreePathComparison freepath_compare(const std::vector<MacroTrajectory<D>>& ensemble,
                                    const KernelModel& model);
FreePathComparison freepath_compare(const EmpiricalDistribution& flights, const KernelModel& model,
                                    double r);

// One observed collision pair: exit parameter w_n, next flight, next impact.
struct KernelSample {
  double wp = 0;
  double xi = 0;
  double w = 0;
};

struct KernelCell {
  int wbin = 0, xi_cell = 0, w_cell = 0;
  double observed = 0, expected = 0;
};

struct KernelComparison {
  std::vector<double> wp_edges, xi_edges, w_edges;
  std::vector<long> bin_counts;
  std::vector<int> undersampled_bins;  // flagged, not failed
  std::vector<KernelCell> cells;
  long adequate_cells = 0;
  long within = 0;      // adequate cells with |obs - exp| <= se_limit * sqrt(exp)
  double fraction_within = 0;
  double chi2 = 0;      // over adequate cells
  long dof = 0;
  double worst_z = 0;
  // Largest deviation of the summed cell probabilities from 1 over the bins.
  double mass_defect = 0;
  // Poisson model: marginal KS distances (w uniform, xi exponential).
  double ks_w = 0, ks_xi = 0;
};

struct KernelCompareOptions {
  int wbins = 8, xi_cells = 32, w_cells = 32;
  double min_expected = 20;
  double se_limit = 3;
  long min_bin_samples = 1000;
};

// Lattice2D: per w'-bin (xi, w) histograms against cell probabilities of k,
// with xi cells of equal Psi_0 mass and uniform w cells. Poisson: marginal
// KS distances only. Throws ConfigError for other models.
KernelComparison kernel_compare(const std::vector<KernelSample>& samples, const KernelModel& model,
                                const KernelCompareOptions& options = {});

struct MsdPoint {
  double t = 0;
  double msd = 0;
  double msd_se = 0;
  double q75 = 0;  // 0.75-quantile of the pooled displacement components
  long n = 0;
};

// displacements[i][p] is the displacement of path p at times[i].
template <int D>
std::vector<MsdPoint> msd_curve(const std::vector<double>& times,
                                const std::vector<std::vector<Vec<D>>>& displacements);
// Throws RangeError when a path horizon is shorter than a requested time.
template <int D>
std::vector<MsdPoint> msd_curve(const std::vector<FlightPath<D>>& paths,
                                const std::vector<double>& times);

struct Normalisation {
  enum class Kind { self_sqrt_t, sqrt_t_log_t };
  Kind kind = Kind::self_sqrt_t;
  double sigma = 0;  // used by sqrt_t_log_t
};

struct GaussianityResult {
  double t = 0;
  double scale = 0;
  KsResult ks;
};

// KS distance of displacement components / scale against the standard
// normal CDF. Self normalisation divides by the sample standard deviation;
// otherwise scale = sigma sqrt(t log t). Throws PreconditionError with fewer
// than 10^4 values.
GaussianityResult gaussianity_test(const std::vector<double>& components, double t,
                                   const Normalisation& norm);

struct TailFit {
  double lo = 0, hi = 0;
  long n_in_range = 0;
  double exponent = 0;    // -(slope of log S against log x)
  double stderr_ = 0;     // spread of the fit over 10 interleaved sub-samples
  double slope_low = 0, slope_high = 0;  // fits on the two halves of the range
  bool curved = false;
};

// Least-squares slope of the Kaplan-Meier survival on a logarithmic grid of
// [lo, hi]. Throws EstimationError with fewer than 10^3 samples in range.
TailFit tail_exponent_fit(const EmpiricalDistribution& emp, double lo, double hi);

// Running mean of x^2 after the first n_k samples, for each checkpoint n_k.
std::vector<double> running_second_moment(const std::vector<double>& xs,
                                          const std::vector<long>& checkpoints);

struct Check {
  std::string name;
  double value = 0;
  std::string relation;  // "<=", ">=", "in", "decreasing", ...
  double target = 0;
  double tolerance = 0;
  bool pass = false;
};

struct ExperimentReport {
  std::string id;
  int criterion = 0;  // 0: report only
  std::string config_digest;
  std::uint64_t seed = 0;
  nlohmann::ordered_json config;
  std::map<std::string, long> counts;
  nlohmann::ordered_json statistics = nlohmann::ordered_json::object();
  std::vector<Check> checks;
  std::vector<std::string> notes;

  void check(std::string name, double value, std::string relation, double target,
             double tolerance, bool pass);
  bool pass() const;
  nlohmann::ordered_json to_json() const;
};

}  // namespace lorentz
