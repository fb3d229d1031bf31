#include "lorentz/limitprocess.hpp"

#include <algorithm>
#include <cmath>

#include "lorentz/error.hpp"

namespace lorentz {

namespace lattice2d {

namespace {

// Accept a proposal (xi, w) from the envelope plateau * 1{xi <= xi2}.
inline bool accept(double wp, double xi, double w, double u) {
  const double m = std::max(std::abs(w), std::abs(wp));
  const double b = std::abs(w - wp);
  if (b == 0) return xi < 1.0 / (1.0 + m);
  const double x = 1.0 + (1.0 / xi - m - 1.0) / b;
  return u < x;  // Upsilon(x) >= 1 always accepts, <= 0 never does
}

}  // namespace

Flight<2> sample_transition(double wp, Stream& rng) {
  if (!(std::abs(wp) < 1.0)) throw DomainError("impact parameter must satisfy |w'| < 1");
  const double u = std::abs(wp);
  const double sg = wp < 0 ? -1.0 : 1.0;
  // Proposal mass of w is proportional to xi2(w', w) = 1/(a - b), split into
  // same/opposite side and |w| below/above |w'|.
  const double m1 = std::log1p(u);
  const double m2 = (1.0 - u) / (1.0 + u);
  const double m3 = -std::log1p(-u);
  const double m4 = 1.0;
  const double total = m1 + m2 + m3 + m4;
  for (long it = 0; it < kMaxRejections; ++it) {
    // One uniform picks the piece; its position inside the piece is the
    // uniform used to place w.
    double pick = rng.uniform() * total;
    double t, xi2, w;
    if (pick < m1) {
      t = std::expm1(pick);
      w = sg * t;
      xi2 = 1.0 / (1.0 + t);
    } else if ((pick -= m1) < m2) {
      t = u + pick / m2 * (1.0 - u);
      w = sg * t;
      xi2 = 1.0 / (1.0 + u);
    } else if ((pick -= m2) < m3) {
      t = -std::expm1(-pick);
      w = -sg * t;
      xi2 = 1.0 / (1.0 - t);
    } else {
      pick -= m3;
      t = u + pick / m4 * (1.0 - u);
      w = -sg * t;
      xi2 = 1.0 / (1.0 - u);
    }
    if (!(t < 1.0)) continue;
    const double xi = rng.uniform() * xi2;
    if (accept(wp, xi, w, rng.uniform())) return {xi, 0, Impact<2>{{w}}};
  }
  throw SamplerFault("lattice transition sampler exceeded the rejection budget");
}

Flight<2> sample_initial(Stream& rng) {
  // (w', w) with density proportional to the first moment C / (2 a (a - b)),
  // then xi' from xi' k(w', xi', w) and xi uniform on (0, xi').
  const double ln2 = std::log(2.0);
  const double p_same = ln2 * ln2 / (M_PI * M_PI / 6.0);
  double wp, w;
  if (rng.uniform() < p_same) {
    // (1 + max)(1 + min) = (1 + |w'|)(1 + |w|): independent magnitudes.
    const double s = rng.uniform() < 0.5 ? 1.0 : -1.0;
    wp = s * std::expm1(rng.uniform() * ln2);
    w = s * std::expm1(rng.uniform() * ln2);
  } else {
    double M = 0;
    long it = 0;
    for (;; ++it) {
      if (it >= kMaxRejections) throw SamplerFault("initial sampler exceeded the rejection budget");
      M = 1.0 - rng.uniform() * rng.uniform();
      if (rng.uniform() * (1.0 + M) < 1.0) break;
    }
    const double m = -std::expm1(rng.uniform() * std::log1p(-M));
    const double s = rng.uniform() < 0.5 ? 1.0 : -1.0;
    if (rng.uniform() < 0.5) {
      wp = s * M;
      w = -s * m;
    } else {
      wp = s * m;
      w = -s * M;
    }
  }
  if (!(std::abs(wp) < 1.0) || !(std::abs(w) < 1.0)) return sample_initial(rng);

  const double a = 1.0 + std::max(std::abs(w), std::abs(wp));
  const double b = std::abs(w - wp);
  const double xi1 = 1.0 / a;
  double xip;
  // Masses C xi1^2/2 and C b / (2 a^2 (a - b)), common factor C/(2a^2) dropped.
  const double mass1 = 1.0, mass2 = b / (a - b);
  if (rng.uniform() * (mass1 + mass2) < mass1) {
    xip = xi1 * std::sqrt(rng.uniform());
  } else {
    const double xi2 = 1.0 / (a - b);
    xip = xi2 - (xi2 - xi1) * std::sqrt(rng.uniform());
  }
  return {rng.uniform() * xip, 0, Impact<2>{{w}}};
}

}  // namespace lattice2d

namespace {

template <int D>
Impact<D> uniform_ball(Stream& rng) {
  Impact<D> w;
  if constexpr (D == 2) {
    w[0] = rng.uniform(-1.0, 1.0);
  } else {
    do {
      w[0] = rng.uniform(-1.0, 1.0);
      w[1] = rng.uniform(-1.0, 1.0);
    } while (norm2(w) >= 1.0);
  }
  return w;
}

}  // namespace

template <int D>
LimitSampler<D>::LimitSampler(KernelModel model) : model_(normalized(std::move(model))) {
  if (dimension(model_) != D) throw ConfigError("kernel model dimension does not match sampler");
  xi_bar_ = xi_bar(model_);
}

template <int D>
Flight<D> LimitSampler<D>::stationary_omega(Stream& rng) const {
  Flight<D> f;
  if (auto* u = std::get_if<UnionKernel>(&model_)) {
    double x = rng.uniform();
    const int N = static_cast<int>(u->densities.size());
    f.colour = N - 1;
    for (int i = 0; i < N; ++i) {
      if (x < u->densities[i]) {
        f.colour = i;
        break;
      }
      x -= u->densities[i];
    }
  }
  f.w = uniform_ball<D>(rng);
  return f;
}

template <int D>
Flight<D> LimitSampler<D>::initial(Stream& rng) const {
  if (std::holds_alternative<PoissonKernel>(model_)) {
    Flight<D> f;
    f.xi = rng.exponential(xi_bar_);
    f.w = uniform_ball<D>(rng);
    return f;
  }
  if constexpr (D == 2) {
    if (std::holds_alternative<Lattice2DKernel>(model_)) return lattice2d::sample_initial(rng);
    // Union: the first hit is the earliest of independent hits on each
    // lattice, each distributed by K on its own density scale.
    const auto& n = std::get<UnionKernel>(model_).densities;
    Flight<D> best;
    best.xi = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(n.size()); ++i) {
      Flight<D> f = lattice2d::sample_initial(rng);
      f.xi /= n[i];
      if (f.xi < best.xi) {
        best = f;
        best.colour = i;
      }
    }
    return best;
  }
  throw ConfigError("unsupported kernel model for this dimension");
}

template <int D>
Flight<D> LimitSampler<D>::transition(int colour, const Impact<D>& w, Stream& rng) const {
  if (std::holds_alternative<PoissonKernel>(model_)) {
    if (!(norm2(w) < 1.0)) throw DomainError("impact parameter must satisfy |w'| < 1");
    Flight<D> f;
    f.xi = rng.exponential(xi_bar_);
    f.w = uniform_ball<D>(rng);
    return f;
  }
  if constexpr (D == 2) {
    if (std::holds_alternative<Lattice2DKernel>(model_)) return lattice2d::sample_transition(w[0], rng);
    // Union: the own lattice is seen from one of its points (transition
    // kernel), the others as random affine lattices (initial kernel).
    const auto& n = std::get<UnionKernel>(model_).densities;
    if (colour < 0 || colour >= static_cast<int>(n.size()))
      throw DomainError("colour index out of range");
    Flight<D> best = lattice2d::sample_transition(w[0], rng);
    best.xi /= n[colour];
    best.colour = colour;
    for (int i = 0; i < static_cast<int>(n.size()); ++i) {
      if (i == colour) continue;
      Flight<D> f = lattice2d::sample_initial(rng);
      f.xi /= n[i];
      if (f.xi < best.xi) {
        best = f;
        best.colour = i;
      }
    }
    return best;
  }
  throw ConfigError("unsupported kernel model for this dimension");
}

template <int D>
ChainStepper<D>::ChainStepper(const LimitSampler<D>& sampler, const ScatteringMap& map,
                              const Vec<D>& Q0, const Vec<D>& V0, Stream rng)
    : sampler_(&sampler), map_(&map), rng_(rng), frame_(V0) {
  cur_.Q = Q0;
  cur_.V = V0;
  draw_next(sampler_->initial(rng_));
}

template <int D>
void ChainStepper<D>::draw_next(const Flight<D>& f) {
  next_.n = cur_.n + 1;
  next_.xi = f.xi;
  next_.T = cur_.T + f.xi;
  next_.Q = cur_.Q + cur_.V * f.xi;
  next_.colour = f.colour;
  next_.h = f.w;
  frame_.push(f.w, *map_);
  next_.V = frame_.velocity();
}

template <int D>
const ChainState<D>& ChainStepper<D>::step() {
  cur_ = next_;
  // The exit parameter in the outgoing frame equals the impact parameter.
  draw_next(sampler_->transition(cur_.colour, cur_.h, rng_));
  return cur_;
}

template <int D>
Vec<D> ChainStepper<D>::position_at(double t) {
  while (next_.T <= t) step();
  return cur_.Q + cur_.V * (t - cur_.T);
}

template <int D>
FlightPath<D> run_chain(const LimitSampler<D>& sampler, const ScatteringMap& map, const Vec<D>& Q0,
                        const Vec<D>& V0, const StopRule& stop, Stream rng) {
  if (std::abs(norm(V0) - 1.0) > 1e-12) throw PreconditionError("initial velocity must be a unit vector");
  FlightPath<D> path;
  path.Q0 = Q0;
  path.V0 = V0;
  ChainStepper<D> chain(sampler, map, Q0, V0, rng);
  path.states.push_back(chain.current());
  if (stop.n_max <= 0) {
    path.horizon = std::numeric_limits<double>::infinity();
    return path;
  }
  while (true) {
    const ChainState<D>& next = chain.pending();
    if (next.T > stop.t_max) {
      path.states.push_back(next);  // lookahead
      path.horizon = stop.t_max;
      return path;
    }
    path.states.push_back(chain.step());
    if (chain.current().n >= stop.n_max) {
      path.horizon = std::numeric_limits<double>::infinity();
      return path;
    }
  }
}

namespace {

template <int D>
std::size_t vertex_index(const FlightPath<D>& path, double t) {
  if (t < 0 || t > path.horizon) throw RangeError("time outside the covered horizon");
  // Largest n with T_n <= t.
  auto it = std::upper_bound(path.states.begin(), path.states.end(), t,
                             [](double x, const ChainState<D>& s) { return x < s.T; });
  return static_cast<std::size_t>(it - path.states.begin()) - 1;
}

}  // namespace

template <int D>
PathPoint<D> eval_path(const FlightPath<D>& path, double t) {
  const auto& s = path.states[vertex_index(path, t)];
  return {s.Q + s.V * (t - s.T), s.V};
}

template <int D>
ExtendedState<D> extended_state(const FlightPath<D>& path, double t) {
  const std::size_t i = vertex_index(path, t);
  if (i + 1 >= path.states.size()) throw RangeError("next collision beyond the stored path");
  const auto& s = path.states[i];
  const auto& nx = path.states[i + 1];
  return {s.Q + s.V * (t - s.T), s.V, nx.T - t, nx.colour, nx.h, nx.V};
}

template class LimitSampler<2>;
template class LimitSampler<3>;
template class ChainStepper<2>;
template class ChainStepper<3>;
template FlightPath<2> run_chain<2>(const LimitSampler<2>&, const ScatteringMap&, const Vec<2>&,
                                    const Vec<2>&, const StopRule&, Stream);
template FlightPath<3> run_chain<3>(const LimitSampler<3>&, const ScatteringMap&, const Vec<3>&,
                                    const Vec<3>&, const StopRule&, Stream);
template PathPoint<2> eval_path<2>(const FlightPath<2>&, double);
template PathPoint<3> eval_path<3>(const FlightPath<3>&, double);
template ExtendedState<2> extended_state<2>(const FlightPath<2>&, double);
template ExtendedState<3> extended_state<3>(const FlightPath<3>&, double);

}  // namespace lorentz
