#pragma once

#include <vector>

#include "lorentz/vec.hpp"

namespace lorentz {

// Spherically symmetric scattering map, described by the scattering angle
// theta(|w|) on [0, 1).
class ScatteringMap {
 public:
  enum class Kind { specular, tabulated };

  static ScatteringMap specular();
  // theta sampled at increasing abscissae w[0] = 0 < ... < w[n-1] < 1 and
  // linearly interpolated; beyond the last node the last segment is
  // extrapolated. Throws ConfigError unless the samples are strictly
  // decreasing from pi and positive, or strictly increasing from -pi and
  // negative.
  static ScatteringMap tabulated(std::vector<double> w, std::vector<double> theta);

  Kind kind() const { return kind_; }
  double theta(double abs_w) const;
  // cos(theta), sin(theta) for |w| in [0, 1).
  void cos_sin(double abs_w, double& c, double& s) const;

  const std::vector<double>& table_w() const { return w_; }
  const std::vector<double>& table_theta() const { return theta_; }

 private:
  Kind kind_ = Kind::specular;
  std::vector<double> w_, theta_;
};

// Frame map: a rotation with v * frame(v) = e1. Smooth on the circle in d = 2;
// in d = 3 it is the minimal rotation taking v to e1, singular only at v = -e1.
Mat<2> frame(const Vec2& v);
Mat<3> frame(const Vec3& v);

// Impact parameter representation: a scalar in d = 2, a 2-vector in d = 3.
template <int D>
using Impact = Vec<D - 1>;

// Scattering rotation S(w) in SO(d).
template <int D>
Mat<D> scattering_matrix(const Impact<D>& w, const ScatteringMap& map);

// Outgoing velocity v_in * cos(theta) + (0, w_hat) * sin(theta), written in
// the frame where v_in = e1, i.e. e1 * S(w)^{-1}.
template <int D>
Vec<D> scatter_in_frame(const Impact<D>& w, const ScatteringMap& map);

// Ambient-coordinate scattering: v_in unit, b the impact vector (units of r,
// orthogonal to v_in, |b| = |w| < 1). Returns v_out; sets s to the ambient
// exit parameter.
template <int D>
Vec<D> scatter_ambient(const Vec<D>& v_in, const Vec<D>& b, const ScatteringMap& map, Vec<D>* s);

// Frame-based entry points using the canonical frame of v_in. Throw
// DomainError when |w| >= 1.
template <int D>
Vec<D> scatter(const Vec<D>& v_in, const Impact<D>& w, const ScatteringMap& map);
template <int D>
Vec<D> exit_parameter(const Vec<D>& v_in, const Impact<D>& w, const ScatteringMap& map);

// Running product R_n = R(v_0) S(w_1) ... S(w_n).
template <int D>
class FrameTracker {
 public:
  explicit FrameTracker(const Vec<D>& v0);
  // Impact of an ambient vector b in the current frame (components 2..d).
  Impact<D> to_frame(const Vec<D>& b) const;
  Vec<D> from_frame(const Impact<D>& w) const;
  void push(const Impact<D>& w, const ScatteringMap& map);
  Vec<D> velocity() const;  // e1 * R_n^{-1}
  const Mat<D>& matrix() const { return R_; }

 private:
  Mat<D> R_;
  int steps_ = 0;
};

}  // namespace lorentz
