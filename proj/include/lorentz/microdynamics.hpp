#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "lorentz/rng.hpp"
#include "lorentz/scatterers.hpp"
#include "lorentz/scattering.hpp"

namespace lorentz {

template <int D>
struct CollisionRecord {
  long n = 0;
  double tau = 0;     // collision time (microscopic units)
  Vec<D> y{};         // scatterer centre
  Colour colour;
  Impact<D> w{};      // impact parameter in the frame R(v_in)
  Vec<D> s{};         // exit parameter, ambient coordinates, units of r
  Vec<D> v{};         // outgoing velocity
  Vec<D> q{};         // exit point on the sphere
};

struct MicroStop {
  // Total time cap; a negative value selects 1e3 r^{-(d-1)}.
  double t_max = -1;
  long n_max = std::numeric_limits<long>::max();
};

template <int D>
struct MicroResult {
  double r = 0;
  Vec<D> q0{}, v0{};
  std::vector<CollisionRecord<D>> records;
  Vec<D> q_final{}, v_final{};
  double t_final = 0;
  // True when t_max was reached before the next collision.
  bool censored = false;
};

template <int D>
double default_t_max(double r);

// Exact billiard flow outside the balls of radius r. Throws
// PreconditionError when q0 is inside a ball or r exceeds the radius the
// ray search supports.
template <int D>
MicroResult<D> evolve(const ScattererSet<D>& set, const ScatteringMap& map, double r,
                      const Vec<D>& q0, const Vec<D>& v0, const MicroStop& stop);

// Streaming variant: records are passed to the callback and not stored.
template <int D>
MicroResult<D> evolve_stream(const ScattererSet<D>& set, const ScatteringMap& map, double r,
                             const Vec<D>& q0, const Vec<D>& v0, const MicroStop& stop,
                             const std::function<void(const CollisionRecord<D>&)>& on_collision);

template <int D>
struct MacroRecord {
  double T = 0;
  Vec<D> Q{}, V{};
  Impact<D> w{};
  Colour colour;
};

template <int D>
struct MacroTrajectory {
  double r = 0;
  Vec<D> Q0{}, V0{};
  std::vector<MacroRecord<D>> records;
  double T_final = 0;
  bool censored = false;
};

// T_n = r^{d-1} tau_n, Q_n = r^{d-1} q_n.
template <int D>
MacroTrajectory<D> rescale(const MicroResult<D>& micro);

// Uniform start in the box [0, side)^D with isotropic velocity, resampled
// until it lies outside every ball.
template <int D>
std::pair<Vec<D>, Vec<D>> random_start(const ScattererSet<D>& set, double r, double side,
                                       Stream& rng);

template <int D>
Vec<D> random_direction(Stream& rng);

}  // namespace lorentz
