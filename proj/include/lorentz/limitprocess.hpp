#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "lorentz/kernels.hpp"
#include "lorentz/rng.hpp"
#include "lorentz/scattering.hpp"
#include "lorentz/vec.hpp"

namespace lorentz {

// One flight of the limit chain: duration and the data (colour, impact) of
// the scatterer it ends on.
template <int D>
struct Flight {
  double xi = 0;
  int colour = 0;
  Impact<D> w{};
};

// Iteration cap of every rejection loop.
inline constexpr long kMaxRejections = 1000000;

namespace lattice2d {
// Exact draw from k(wp, ., .) against dxi dw/2.
Flight<2> sample_transition(double wp, Stream& rng);
// Exact draw from K(., .) against dxi dw/2.
Flight<2> sample_initial(Stream& rng);
}  // namespace lattice2d

template <int D>
class LimitSampler {
 public:
  // Throws ConfigError if the model does not live in dimension D.
  explicit LimitSampler(KernelModel model);

  Flight<D> initial(Stream& rng) const;
  Flight<D> transition(int colour, const Impact<D>& w, Stream& rng) const;
  // Draw from p: colour with probability n_i, impact uniform on the unit ball.
  Flight<D> stationary_omega(Stream& rng) const;
  const KernelModel& model() const { return model_; }

 private:
  KernelModel model_;
  double xi_bar_;
};

template <int D>
struct ChainState {
  long n = 0;
  double xi = 0;      // flight time ending at this collision
  int colour = 0;
  Impact<D> h{};      // impact parameter at this collision
  Vec<D> V{};         // velocity after this collision
  Vec<D> Q{};         // position of this collision
  double T = 0;       // cumulative time
};

template <int D>
struct FlightPath {
  Vec<D> Q0{}, V0{};
  // states[0] is the initial point (n = 0, T = 0).
  std::vector<ChainState<D>> states;
  // Paths are valid on [0, horizon]. A final state with T > horizon is kept
  // as lookahead for the residual-time observables.
  double horizon = 0;
};

struct StopRule {
  double t_max = std::numeric_limits<double>::infinity();
  long n_max = std::numeric_limits<long>::max();
};

// Streaming chain: draws flights on demand without storing the path. The
// next collision is always drawn one step ahead.
template <int D>
class ChainStepper {
 public:
  ChainStepper(const LimitSampler<D>& sampler, const ScatteringMap& map, const Vec<D>& Q0,
               const Vec<D>& V0, Stream rng);
  // Applies the pending collision and draws a new one.
  const ChainState<D>& step();
  const ChainState<D>& current() const { return cur_; }
  const ChainState<D>& pending() const { return next_; }
  // Position at time t >= current().T, advancing as needed.
  Vec<D> position_at(double t);

 private:
  void draw_next(const Flight<D>& f);

  const LimitSampler<D>* sampler_;
  const ScatteringMap* map_;
  Stream rng_;
  FrameTracker<D> frame_;
  ChainState<D> cur_, next_;
};

template <int D>
FlightPath<D> run_chain(const LimitSampler<D>& sampler, const ScatteringMap& map, const Vec<D>& Q0,
                        const Vec<D>& V0, const StopRule& stop, Stream rng);

template <int D>
struct PathPoint {
  Vec<D> Q, V;
};

// Q(t) = Q_n + (t - T_n) V_n with n the number of collisions up to t.
// Throws RangeError beyond the horizon.
template <int D>
PathPoint<D> eval_path(const FlightPath<D>& path, double t);

template <int D>
struct ExtendedState {
  Vec<D> Q, V;
  double T_next;     // residual time to the next collision
  int colour_next;
  Impact<D> h_next;
  Vec<D> V_plus;     // velocity after the next collision
};

// Throws RangeError if the next collision is not stored.
template <int D>
ExtendedState<D> extended_state(const FlightPath<D>& path, double t);

}  // namespace lorentz
