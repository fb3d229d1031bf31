#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lorentz/scattering.hpp"
#include "lorentz/vec.hpp"

namespace lorentz {

using Matrix = std::vector<std::vector<double>>;

// Rows of the basis are the lattice generators: L = Z^d M.
struct LatticeSpec {
  Matrix basis;
};

struct AffineLatticeSpec {
  LatticeSpec lattice;
  std::vector<double> shift;  // empty means zero
};

// Fixed realisation of a Poisson process, generated per cell from (seed, cell).
struct PoissonSpec {
  int dim = 2;
  std::uint64_t seed = 0;
  double intensity = 1;
};

struct UnionMember {
  AffineLatticeSpec lattice;
  // Declared density; checked against 1/|det M| when present.
  std::optional<double> density;
};

struct UnionSpec {
  std::vector<UnionMember> members;
  bool incommensurable = true;
  // Rescale all members by one common factor so the total density is 1.
  bool normalize = false;
};

// Window in internal space R^m: a convex polytope (m = 1: interval, m = 2:
// polygon given by its vertices) or a finite point list on a discrete
// internal group (integer internal coordinates).
struct Window {
  enum class Kind { polytope, points };
  Kind kind = Kind::polytope;
  std::vector<std::vector<double>> vertices;
};

struct CutProjectSpec {
  int dim = 2;         // physical dimension d
  Matrix basis;        // n x n, rows generate L in R^d x R^m
  Window window;
  std::vector<double> offset;  // physical translation of the projected set
};

// Periodic Delone set: finite union of translates of one lattice, realised
// as a cut-and-project set with a discrete internal group.
struct DeloneSpec {
  LatticeSpec lattice;
  std::vector<std::vector<double>> translates;
};

// Explicit finite point set; colours are the list indices.
struct FiniteSpec {
  int dim = 2;
  std::vector<std::vector<double>> points;
};

using ScattererConfig =
    std::variant<LatticeSpec, AffineLatticeSpec, PoissonSpec, UnionSpec, CutProjectSpec, DeloneSpec,
                 FiniteSpec>;

int config_dimension(const ScattererConfig& config);
std::string config_kind(const ScattererConfig& config);

// Colour of a scatterer: a member/translate index, or the internal-space
// coordinate for cut-and-project sets with a polytope window.
struct Colour {
  int index = 0;
  int internal_dim = 0;
  std::array<double, 3> internal{};
};

template <int D>
struct Scatterer {
  Vec<D> x;
  Colour colour;
};

template <int D>
struct ScattererHit {
  Vec<D> center;
  Colour colour;
  double entry_time = 0;
  Impact<D> impact{};  // in the frame R(v) of the incoming velocity
  Vec<D> b{};          // ambient impact vector (entry point - center) / r, orthogonal to v
};

// Grazing hits with |w| >= 1 - kTangencyTol are misses.
inline constexpr double kTangencyTol = 1e-12;

// Running minimum of a ray search.
template <int D>
struct HitSearch {
  double limit = 0;
  const Vec<D>* exclude = nullptr;
  bool found = false;
  double t = 0;
  Vec<D> center{};
  Colour colour{};
  Vec<D> p{};  // perpendicular offset of the ray from the center
};

template <int D>
class ScattererSet {
 public:
  virtual ~ScattererSet() = default;
  // All points within the closed ball, each with its colour.
  virtual void points_in_ball(const Vec<D>& center, double radius,
                              std::vector<Scatterer<D>>& out) const = 0;
  // First ball of radius r entered by q + t v, t in (0, t_max], ignoring the
  // ball centred at *exclude. Throws PreconditionError if q lies strictly
  // inside a ball.
  std::optional<ScattererHit<D>> first_hit(const Vec<D>& q, const Vec<D>& v, double r,
                                           double t_max, const Vec<D>* exclude = nullptr) const;
  // Asymptotic density of the set (closed form for every kind).
  virtual double nominal_density() const = 0;
  // Largest r supported by the ray search.
  virtual double max_radius() const = 0;
  virtual int colour_count() const { return 1; }
  // Basis of a translation group leaving the set and its colours invariant.
  virtual std::optional<Mat<D>> period() const { return std::nullopt; }

 protected:
  virtual void scan(const Vec<D>& q, const Vec<D>& v, double r, HitSearch<D>& best) const = 0;
};

// Throws ConfigError on invalid configurations (singular basis, dimension
// mismatch, empty window, coincident projections, commensurable members
// when incommensurability is requested).
template <int D>
std::unique_ptr<ScattererSet<D>> make_scatterers(const ScattererConfig& config);

template <int D>
std::vector<Scatterer<D>> points_in_ball(const ScattererSet<D>& set, const Vec<D>& center,
                                         double radius);

// #(P cap R*region) / vol(R*region) for a box [lo, hi] (scaled by R about the origin).
template <int D>
double density_of(const ScattererSet<D>& set, double R, const Vec<D>& lo, const Vec<D>& hi);
// Same for the ball of radius R about the origin.
template <int D>
double density_of_ball(const ScattererSet<D>& set, double R);

// Enumerates integer vectors k with (k - k0) G (k - k0)^T <= 1, G symmetric
// positive definite (Fincke-Pohst).
void enumerate_ellipsoid(const Matrix& G, const std::vector<double>& k0,
                         const std::function<void(const std::vector<long>&)>& visit);

// Shipped configurations, all of unit density unless stated.
namespace presets {
LatticeSpec square_lattice();
// Member i is the unit-density square lattice rotated by i radians, scaled
// to density n_i and shifted generically.
UnionSpec rotated_union(const std::vector<double>& densities);
// Honeycomb: two translates of a triangular lattice, as a Delone set and as
// a union of affine lattices (same point set).
DeloneSpec honeycomb_delone();
UnionSpec honeycomb_union();
// Ammann-Beenker vertex set: Z^4 with the octagonal star projections and the
// projected unit 4-cube as window. Density (1 + sqrt 2)/2 before scaling.
CutProjectSpec ammann_beenker(bool unit_density = true);
}  // namespace presets

}  // namespace lorentz
