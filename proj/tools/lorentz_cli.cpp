// Command-line front end: experiment runner, kernel tables, limit-process and
// billiard simulations, scatterer export.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lorentz/config_io.hpp"
#include "lorentz/constants.hpp"
#include "lorentz/error.hpp"
#include "lorentz/experiments.hpp"
#include "lorentz/kernels.hpp"
#include "lorentz/limitprocess.hpp"
#include "lorentz/microdynamics.hpp"
#include "lorentz/numerics.hpp"
#include "lorentz/scatterers.hpp"

using namespace lorentz;

namespace {

enum Exit { kPass = 0, kFail = 2, kInput = 3, kInternal = 4, kOutput = 5 };

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// A model given as a name ("lattice2d", "poisson", "union") or inline JSON.
KernelModel parse_model(const std::string& text, const std::vector<double>& densities, int dim) {
  if (!text.empty() && text.front() == '{') return kernel_model_from_json(Json::parse(text));
  if (text == "union") return kernel_model_from_json({{"kind", "union"}, {"densities", densities}});
  if (text == "poisson") return kernel_model_from_json({{"kind", "poisson"}, {"dim", dim}});
  return kernel_model_from_json(text);
}

// Output stream: a file when a path is given, stdout otherwise.
struct Sink {
  std::ofstream file;
  std::ostream* os = &std::cout;
  explicit Sink(const std::string& path) {
    if (path.empty() || path == "-") return;
    file.open(path);
    if (!file) throw OutputError("cannot open " + path + " for writing");
    os = &file;
  }
  std::ostream& operator*() { return *os; }
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<double> grid_or_list(const std::vector<double>& list, const std::vector<double>& grid) {
  if (!list.empty()) return list;
  if (grid.size() != 3) throw ConfigError("grid takes lo,hi,n");
  const int n = static_cast<int>(grid[2]);
  if (n < 1) throw ConfigError("grid needs n >= 1");
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(n == 1 ? grid[0] : grid[0] + (grid[1] - grid[0]) * i / (n - 1));
  return out;
}

// ---------------------------------------------------------------------------

struct RunArgs {
  std::string spec_file, preset_name, out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool list = false;
  bool quiet = false;
  bool print_spec = false;
};

int cmd_run(const RunArgs& a) {
  if (a.list) {
    for (const auto& s : experiment_presets())
      std::cout << s.name << "\t" << (s.criterion ? "criterion " + std::to_string(s.criterion) : "report-only") << "\n";
    return kPass;
  }
  if (a.spec_file.empty() == a.preset_name.empty())
    throw ConfigError("give exactly one of --spec and --preset (or --list-presets)");
  ExperimentSpec spec;
  if (a.spec_file.empty()) {
    spec = preset(a.preset_name);
  } else {
    std::ifstream in(a.spec_file);
    if (!in) throw ConfigError("cannot read " + a.spec_file);
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::ordered_json::parse_error& e) {
      throw ConfigError(a.spec_file + ": " + e.what());
    }
    spec = experiment_spec_from_json(j);
  }
  if (a.seed) spec.seed = *a.seed;
  if (!a.out.empty()) spec.out_dir = a.out;
  if (spec.out_dir.empty()) spec.out_dir = "out/" + spec.name;
  if (a.print_spec) {
    std::cout << to_json(spec).dump(2) << "\n";
    return kPass;
  }
  RunOptions opt;
  opt.threads = a.threads;
  opt.log = a.quiet ? nullptr : stderr;
  const ExperimentReport report = run(spec, opt);
  for (const auto& c : report.checks)
    std::cout << (c.pass ? "PASS " : "FAIL ") << report.id << " " << c.name << " = " << num(c.value) << " ("
              << c.relation << ", target " << num(c.target) << ", tol " << num(c.tolerance) << ")\n";
  if (report.checks.empty()) std::cout << "REPORT " << report.id << " (no pass/fail)\n";
  std::cout << "report: " << spec.out_dir << "/report.json\n";
  return report.pass() ? kPass : kFail;
}

// ---------------------------------------------------------------------------

struct KernelEvalArgs {
  std::string model = "lattice2d";
  std::vector<double> densities;
  std::vector<double> wp, xi, w, wp_grid{-0.9, 0.9, 7}, xi_grid{0.0, 3.0, 31}, w_grid{-0.9, 0.9, 7};
  bool constants = false;
  std::string out;
};

int cmd_kernel_eval(const KernelEvalArgs& a) {
  Sink sink(a.out);
  if (a.constants) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    for (int d : {2, 3}) {
      const Constants c = constants(d);
      j["dimension_" + std::to_string(d)] = {{"ball_volume", c.ball_volume},
                                             {"xi_bar", c.xi_bar},
                                             {"zeta", c.zeta},
                                             {"tail_A", c.tail_A},
                                             {"sigma2", c.sigma2}};
    }
    j["lattice2d"] = {{"plateau", lattice2d::plateau()},
                      {"mean_free_path", xi_bar(Lattice2DKernel{})},
                      {"marginal_w(0,0.5)", lattice2d::marginal_w(0.0, 0.5)}};
    j["union_tail_exponent"] = {{"2", union_tail_exponent(2)}, {"3", union_tail_exponent(3)}};
    *sink << j.dump(2) << "\n";
    return kPass;
  }
  const KernelModel model = parse_model(a.model, a.densities, 2);
  if (dimension(model) != 2) throw ConfigError("kernel-eval tabulates planar models");
  const auto wps = grid_or_list(a.wp, a.wp_grid), xis = grid_or_list(a.xi, a.xi_grid), ws = grid_or_list(a.w, a.w_grid);
  const bool lattice = std::holds_alternative<Lattice2DKernel>(model);
  *sink << "wp,xi,w,k,marginal_w,psi0,K\n";
  for (double wp : wps)
    for (double w : ws) {
      const double marg = lattice ? lattice2d::marginal_w(wp, w)
                                  : integrate_to_inf([&](double x) { return k_eval(model, {0, wp}, x, {0, w}); }, 0.0,
                                                     1e-10, 1e-13)
                                        .value;
      for (double x : xis)
        *sink << num(wp) << "," << num(x) << "," << num(w) << "," << num(k_eval(model, {0, wp}, x, {0, w})) << ","
              << num(marg) << "," << num(psi0(model, x)) << "," << num(bigK(model, x, {0, w})) << "\n";
    }
  return kPass;
}

// ---------------------------------------------------------------------------

struct LimitArgs {
  std::string model = "lattice2d";
  std::vector<double> densities;
  std::uint64_t seed = 1;
  long paths = 1000;
  double horizon = 100;
  std::vector<double> times;
  std::string out, vertices;
  int threads = 1;
};

int cmd_simulate_limit(const LimitArgs& a) {
  const KernelModel model = parse_model(a.model, a.densities, 2);
  if (dimension(model) != 2) throw ConfigError("simulate-limit runs planar models");
  std::vector<double> times = a.times.empty() ? std::vector<double>{a.horizon} : a.times;
  for (double t : times)
    if (t < 0 || t > a.horizon) throw ConfigError("snapshot times must lie in [0, horizon]");
  std::sort(times.begin(), times.end());
  const LimitSampler<2> sampler(model);
  const ScatteringMap map = ScatteringMap::specular();
  std::vector<FlightPath<2>> paths(a.paths);
  parallel_chunks(a.paths, a.threads, [&](long p) {
    Stream rng(a.seed, {static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(p >> 32), 0u});
    const Vec2 V0 = random_direction<2>(rng);
    StopRule stop;
    stop.t_max = a.horizon;
    paths[p] = run_chain<2>(sampler, map, Vec2{}, V0, stop, rng);
  });
  Sink sink(a.out);
  *sink << "path,t,dx,dy\n";
  for (long p = 0; p < a.paths; ++p)
    for (double t : times) {
      const auto pt = eval_path(paths[p], t);
      *sink << p << "," << num(t) << "," << num(pt.Q[0]) << "," << num(pt.Q[1]) << "\n";
    }
  if (!a.vertices.empty()) {
    Sink vs(a.vertices);
    *vs << "path,n,T,Qx,Qy,Vx,Vy,colour,h\n";
    for (long p = 0; p < a.paths; ++p)
      for (const auto& s : paths[p].states)
        *vs << p << "," << s.n << "," << num(s.T) << "," << num(s.Q[0]) << "," << num(s.Q[1]) << "," << num(s.V[0])
            << "," << num(s.V[1]) << "," << s.colour << "," << num(s.h[0]) << "\n";
  }
  return kPass;
}

// ---------------------------------------------------------------------------

struct MicroArgs {
  std::string config;
  double r = 1e-2;
  std::vector<double> q, v;
  long n_max = 100;
  double t_max = -1;
  long paths = 0;
  double side = 1;
  std::uint64_t seed = 1;
  std::string out;
};

template <int D>
int simulate_micro(const ScattererConfig& config, const MicroArgs& a) {
  const auto set = make_scatterers<D>(config);
  const ScatteringMap map = ScatteringMap::specular();
  MicroStop stop;
  stop.t_max = a.t_max;
  stop.n_max = a.n_max;
  Sink sink(a.out);
  const char* axes = "xyz";
  if (a.paths <= 0) {
    Vec<D> q, v;
    if (static_cast<int>(a.q.size()) != D || static_cast<int>(a.v.size()) != D)
      throw ConfigError("--q and --v need one entry per dimension (or use --paths)");
    for (int i = 0; i < D; ++i) {
      q[i] = a.q[i];
      v[i] = a.v[i];
    }
    *sink << "n,tau";
    for (int i = 0; i < D; ++i) *sink << ",y" << axes[i];
    for (int i = 0; i < D - 1; ++i) *sink << ",w" << i;
    *sink << ",colour";
    for (int i = 0; i < D; ++i) *sink << ",v" << axes[i];
    *sink << "\n";
    const auto res = evolve_stream<D>(*set, map, a.r, q, v, stop, [&](const CollisionRecord<D>& c) {
      *sink << c.n << "," << num(c.tau);
      for (int i = 0; i < D; ++i) *sink << "," << num(c.y[i]);
      for (int i = 0; i < D - 1; ++i) *sink << "," << num(c.w[i]);
      *sink << "," << c.colour.index;
      for (int i = 0; i < D; ++i) *sink << "," << num(c.v[i]);
      *sink << "\n";
    });
    std::cerr << "collisions " << res.records.size() << (res.censored ? ", censored" : "") << "\n";
    return kPass;
  }
  // Ensemble: one row per completed flight, rescaled to macroscopic units.
  *sink << "path,n,xi";
  for (int i = 0; i < D - 1; ++i) *sink << ",w_in" << i;
  *sink << ",colour\n";
  const double scale = std::pow(a.r, D - 1);
  for (long p = 0; p < a.paths; ++p) {
    Stream rng(a.seed, {static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(p >> 32), 0u});
    auto [q, v] = random_start<D>(*set, a.r, a.side, rng);
    double tprev = 0;
    evolve_stream<D>(*set, map, a.r, q, v, stop, [&](const CollisionRecord<D>& c) {
      *sink << p << "," << c.n << "," << num(scale * (c.tau - tprev));
      for (int i = 0; i < D - 1; ++i) *sink << "," << num(c.w[i]);
      *sink << "," << c.colour.index << "\n";
      tprev = c.tau;
    });
  }
  return kPass;
}

ScattererConfig load_config(const std::string& spec) {
  if (spec == "square") return presets::square_lattice();
  if (spec == "honeycomb") return presets::honeycomb_delone();
  if (spec == "union2") return presets::rotated_union({0.5, 0.5});
  if (spec == "ammann-beenker") return presets::ammann_beenker(true);
  return scatterer_config_from_json(read_json_file(spec));
}

int cmd_simulate_micro(const MicroArgs& a) {
  const ScattererConfig config = load_config(a.config);
  return config_dimension(config) == 3 ? simulate_micro<3>(config, a) : simulate_micro<2>(config, a);
}

struct PointsArgs {
  std::string config;
  std::vector<double> center;
  double radius = 10;
  std::string out;
};

template <int D>
int export_points(const ScattererConfig& config, const PointsArgs& a) {
  const auto set = make_scatterers<D>(config);
  Vec<D> c;
  if (!a.center.empty() && static_cast<int>(a.center.size()) != D) throw ConfigError("--center needs one entry per dimension");
  for (int i = 0; i < static_cast<int>(a.center.size()); ++i) c[i] = a.center[i];
  Sink sink(a.out);
  *sink << (D == 2 ? "x,y,colour\n" : "x,y,z,colour\n");
  for (const auto& s : points_in_ball<D>(*set, c, a.radius)) {
    for (int i = 0; i < D; ++i) *sink << num(s.x[i]) << ",";
    *sink << s.colour.index << "\n";
  }
  return kPass;
}

int cmd_points(const PointsArgs& a) {
  const ScattererConfig config = load_config(a.config);
  return config_dimension(config) == 3 ? export_points<3>(config, a) : export_points<2>(config, a);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boltzmann-Grad limit of the periodic Lorentz gas: experiments and tools"};
  app.require_subcommand(0, 1);

  RunArgs run_args;
  app.add_option("--spec", run_args.spec_file, "Experiment spec (JSON)");
  app.add_option("--preset", run_args.preset_name, "Shipped experiment preset");
  app.add_option("--seed", run_args.seed, "Override the experiment seed");
  app.add_option("--threads", run_args.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", run_args.out, "Output directory");
  app.add_flag("--list-presets", run_args.list, "List presets and exit");
  app.add_flag("--quiet", run_args.quiet, "No progress lines");
  app.add_flag("--print-spec", run_args.print_spec, "Print the resolved spec as JSON and exit");

  KernelEvalArgs ke;
  auto* ke_cmd = app.add_subcommand("kernel-eval", "Tabulate k, marginal, Psi_0 and K as CSV");
  ke_cmd->add_option("--model", ke.model, "lattice2d | poisson | union | inline JSON");
  ke_cmd->add_option("--densities", ke.densities, "Union densities")->delimiter(',');
  ke_cmd->add_option("--wp", ke.wp, "w' values")->delimiter(',');
  ke_cmd->add_option("--xi", ke.xi, "xi values")->delimiter(',');
  ke_cmd->add_option("--w", ke.w, "w values")->delimiter(',');
  ke_cmd->add_option("--wp-grid", ke.wp_grid, "lo,hi,n")->delimiter(',');
  ke_cmd->add_option("--xi-grid", ke.xi_grid, "lo,hi,n")->delimiter(',');
  ke_cmd->add_option("--w-grid", ke.w_grid, "lo,hi,n")->delimiter(',');
  ke_cmd->add_flag("--constants", ke.constants, "Print the constants as JSON instead");
  ke_cmd->add_option("--out", ke.out, "Output file (default stdout)");

  LimitArgs la;
  auto* la_cmd = app.add_subcommand("simulate-limit", "Sample the limiting random flight");
  la_cmd->add_option("--model", la.model, "lattice2d | poisson | union | inline JSON");
  la_cmd->add_option("--densities", la.densities, "Union densities")->delimiter(',');
  la_cmd->add_option("--seed", la.seed);
  la_cmd->add_option("--paths", la.paths)->check(CLI::PositiveNumber);
  la_cmd->add_option("--horizon", la.horizon)->check(CLI::NonNegativeNumber);
  la_cmd->add_option("--times", la.times, "Snapshot times (default: horizon)")->delimiter(',');
  la_cmd->add_option("--out", la.out, "Displacement CSV (default stdout)");
  la_cmd->add_option("--vertices", la.vertices, "Also dump every collision to this CSV");
  la_cmd->add_option("--threads", la.threads)->check(CLI::PositiveNumber);

  MicroArgs ma;
  auto* ma_cmd = app.add_subcommand("simulate-micro", "Billiard trajectories among balls of radius r");
  ma_cmd->add_option("--config", ma.config, "Scatterer config file, or square | honeycomb | union2 | ammann-beenker")
      ->required();
  ma_cmd->add_option("--r", ma.r)->check(CLI::PositiveNumber);
  ma_cmd->add_option("--q", ma.q, "Start point")->delimiter(',');
  ma_cmd->add_option("--v", ma.v, "Unit velocity")->delimiter(',');
  ma_cmd->add_option("--n-max", ma.n_max);
  ma_cmd->add_option("--t-max", ma.t_max, "Time cap (default 1e3 r^(1-d))");
  ma_cmd->add_option("--paths", ma.paths, "Random starts; per-flight summary output");
  ma_cmd->add_option("--side", ma.side, "Start box side for --paths");
  ma_cmd->add_option("--seed", ma.seed);
  ma_cmd->add_option("--out", ma.out, "Output CSV (default stdout)");

  PointsArgs pa;
  auto* pa_cmd = app.add_subcommand("points", "Export scatterers in a ball as CSV");
  pa_cmd->add_option("--config", pa.config, "Scatterer config file, or square | honeycomb | union2 | ammann-beenker")
      ->required();
  pa_cmd->add_option("--center", pa.center)->delimiter(',');
  pa_cmd->add_option("--radius", pa.radius)->check(CLI::PositiveNumber);
  pa_cmd->add_option("--out", pa.out, "Output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInput;
  }

  try {
    if (*ke_cmd) return cmd_kernel_eval(ke);
    if (*la_cmd) return cmd_simulate_limit(la);
    if (*ma_cmd) return cmd_simulate_micro(ma);
    if (*pa_cmd) return cmd_points(pa);
    return cmd_run(run_args);
  } catch (const ConfigError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const DomainError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const PreconditionError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const Json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const OutputError& e) {
    std::cerr << "output error: " << e.what() << "\n";
    return kOutput;
  } catch (const std::exception& e) {
    std::cerr << "internal fault: " << e.what() << "\n";
    return kInternal;
  }
}
