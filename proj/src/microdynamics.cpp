#include "lorentz/microdynamics.hpp"

#include <cmath>
#include <sstream>

#include "lorentz/error.hpp"

namespace lorentz {

template <int D>
double default_t_max(double r) {
  return 1e3 * std::pow(r, -(D - 1));
}

template <int D>
MicroResult<D> evolve_stream(const ScattererSet<D>& set, const ScatteringMap& map, double r,
                             const Vec<D>& q0, const Vec<D>& v0, const MicroStop& stop,
                             const std::function<void(const CollisionRecord<D>&)>& on_collision) {
  if (!(r > 0)) throw PreconditionError("scatterer radius must be positive");
  if (r > set.max_radius()) {
    std::ostringstream msg;
    msg << "r = " << r << " exceeds the supported radius " << set.max_radius();
    throw PreconditionError(msg.str());
  }
  if (std::abs(norm(v0) - 1) > 1e-9) throw PreconditionError("initial velocity must be a unit vector");
  const double t_max = stop.t_max < 0 ? default_t_max<D>(r) : stop.t_max;

  MicroResult<D> out;
  out.r = r;
  out.q0 = q0;
  out.v0 = v0;

  // Periodic sets are followed in a fundamental domain to keep coordinates
  // small; origin holds the lattice translation removed so far.
  const std::optional<Mat<D>> period = set.period();
  Mat<D> period_inv{};
  if (period) period_inv = inverse(*period);
  Vec<D> origin{}, q = q0, v = normalized(v0), excl{};
  bool has_excl = false;
  auto reduce = [&] {
    if (!period) return;
    const Vec<D> k = q * period_inv;
    Vec<D> delta{};
    bool moved = false;
    for (int i = 0; i < D; ++i) {
      const double f = std::floor(k[i]);
      if (f != 0) {
        delta += (*period)[i] * f;
        moved = true;
      }
    }
    if (!moved) return;
    q -= delta;
    excl -= delta;
    origin += delta;
  };
  reduce();

  double t = 0;
  for (long n = 1; n <= stop.n_max; ++n) {
    const double remaining = t_max - t;
    if (!(remaining > 0)) {
      out.censored = true;
      break;
    }
    const auto hit = set.first_hit(q, v, r, remaining, has_excl ? &excl : nullptr);
    if (!hit) {
      q += remaining * v;
      t = t_max;
      out.censored = true;
      break;
    }
    t += hit->entry_time;
    const double along = std::sqrt(std::max(0.0, 1 - norm2(hit->b)));
    const Vec<D> entry = hit->center + r * (hit->b - along * v);
    Vec<D> s;
    Vec<D> vout = scatter_ambient<D>(v, hit->b, map, &s);
    vout = vout * (1 / norm(vout));
    // Specular collisions are instantaneous; other maps leave the sphere at
    // the exit point with offset s in the outgoing frame.
    const Vec<D> exit =
        map.kind() == ScatteringMap::Kind::specular ? entry : hit->center + r * (s + along * vout);

    CollisionRecord<D> rec;
    rec.n = n;
    rec.tau = t;
    rec.y = hit->center + origin;
    rec.colour = hit->colour;
    rec.w = hit->impact;
    rec.s = s;
    rec.v = vout;
    rec.q = exit + origin;
    on_collision(rec);

    q = exit;
    v = vout;
    excl = hit->center;
    has_excl = true;
    reduce();
  }
  out.q_final = q + origin;
  out.v_final = v;
  out.t_final = t;
  return out;
}

template <int D>
MicroResult<D> evolve(const ScattererSet<D>& set, const ScatteringMap& map, double r,
                      const Vec<D>& q0, const Vec<D>& v0, const MicroStop& stop) {
  std::vector<CollisionRecord<D>> records;
  MicroResult<D> out = evolve_stream<D>(set, map, r, q0, v0, stop,
                                        [&](const CollisionRecord<D>& c) { records.push_back(c); });
  out.records = std::move(records);
  return out;
}

template <int D>
MacroTrajectory<D> rescale(const MicroResult<D>& micro) {
  const double f = std::pow(micro.r, D - 1);
  MacroTrajectory<D> m;
  m.r = micro.r;
  m.Q0 = micro.q0 * f;
  m.V0 = micro.v0;
  m.T_final = micro.t_final * f;
  m.censored = micro.censored;
  m.records.reserve(micro.records.size());
  for (const auto& c : micro.records) m.records.push_back({c.tau * f, c.q * f, c.v, c.w, c.colour});
  return m;
}

template <int D>
Vec<D> random_direction(Stream& rng) {
  if constexpr (D == 2) {
    const double a = rng.uniform(0, 2 * M_PI);
    return Vec2{{std::cos(a), std::sin(a)}};
  } else {
    const double z = rng.uniform(-1, 1), a = rng.uniform(0, 2 * M_PI);
    const double s = std::sqrt(std::max(0.0, 1 - z * z));
    return Vec3{{s * std::cos(a), s * std::sin(a), z}};
  }
}

template <int D>
std::pair<Vec<D>, Vec<D>> random_start(const ScattererSet<D>& set, double r, double side,
                                       Stream& rng) {
  for (long attempt = 0; attempt < 1000000; ++attempt) {
    Vec<D> q;
    for (int a = 0; a < D; ++a) q[a] = rng.uniform(0, side);
    std::vector<Scatterer<D>> near;
    set.points_in_ball(q, r, near);
    if (near.empty()) return {q, random_direction<D>(rng)};
  }
  throw SamplerFault("no admissible start point found");
}

template double default_t_max<2>(double);
template double default_t_max<3>(double);
template MicroResult<2> evolve_stream<2>(const ScattererSet<2>&, const ScatteringMap&, double,
                                         const Vec<2>&, const Vec<2>&, const MicroStop&,
                                         const std::function<void(const CollisionRecord<2>&)>&);
template MicroResult<3> evolve_stream<3>(const ScattererSet<3>&, const ScatteringMap&, double,
                                         const Vec<3>&, const Vec<3>&, const MicroStop&,
                                         const std::function<void(const CollisionRecord<3>&)>&);
template MicroResult<2> evolve<2>(const ScattererSet<2>&, const ScatteringMap&, double,
                                  const Vec<2>&, const Vec<2>&, const MicroStop&);
template MicroResult<3> evolve<3>(const ScattererSet<3>&, const ScatteringMap&, double,
                                  const Vec<3>&, const Vec<3>&, const MicroStop&);
template MacroTrajectory<2> rescale<2>(const MicroResult<2>&);
template MacroTrajectory<3> rescale<3>(const MicroResult<3>&);
template Vec<2> random_direction<2>(Stream&);
template Vec<3> random_direction<3>(Stream&);
template std::pair<Vec<2>, Vec<2>> random_start<2>(const ScattererSet<2>&, double, double, Stream&);
template std::pair<Vec<3>, Vec<3>> random_start<3>(const ScattererSet<3>&, double, double, Stream&);

}  // namespace lorentz
