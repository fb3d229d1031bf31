#include "lorentz/scattering.hpp"

#include <algorithm>
#include <cmath>

#include "lorentz/error.hpp"

namespace lorentz {

ScatteringMap ScatteringMap::specular() { return ScatteringMap{}; }

ScatteringMap ScatteringMap::tabulated(std::vector<double> w, std::vector<double> theta) {
  if (w.size() != theta.size() || w.size() < 2)
    throw ConfigError("tabulated scattering map needs at least two (w, theta) samples");
  if (w.front() != 0.0) throw ConfigError("tabulated scattering map must start at w = 0");
  for (std::size_t i = 1; i < w.size(); ++i)
    if (!(w[i] > w[i - 1]) || w[i] >= 1.0)
      throw ConfigError("tabulated w samples must increase strictly inside [0, 1)");

  const bool decreasing = theta[1] < theta[0];
  const double start = decreasing ? M_PI : -M_PI;
  if (std::abs(theta[0] - start) > 1e-12)
    throw ConfigError("tabulated theta must start at +pi (decreasing) or -pi (increasing)");
  for (std::size_t i = 1; i < theta.size(); ++i) {
    const bool ok = decreasing ? (theta[i] < theta[i - 1] && theta[i] > 0)
                               : (theta[i] > theta[i - 1] && theta[i] < 0);
    if (!ok) throw ConfigError("tabulated theta is not strictly monotone and sign-definite");
  }

  ScatteringMap m;
  m.kind_ = Kind::tabulated;
  m.w_ = std::move(w);
  m.theta_ = std::move(theta);
  return m;
}

double ScatteringMap::theta(double abs_w) const {
  if (kind_ == Kind::specular) return M_PI - 2.0 * std::asin(abs_w);
  auto it = std::upper_bound(w_.begin(), w_.end(), abs_w);
  std::size_t i = it == w_.begin() ? 0 : static_cast<std::size_t>(it - w_.begin()) - 1;
  i = std::min(i, w_.size() - 2);
  const double t = (abs_w - w_[i]) / (w_[i + 1] - w_[i]);
  return theta_[i] + t * (theta_[i + 1] - theta_[i]);
}

void ScatteringMap::cos_sin(double abs_w, double& c, double& s) const {
  if (kind_ == Kind::specular) {
    // theta = pi - 2 asin(w): no trigonometry needed.
    c = 2.0 * abs_w * abs_w - 1.0;
    s = 2.0 * abs_w * std::sqrt(std::max(0.0, 1.0 - abs_w * abs_w));
    return;
  }
  const double th = theta(abs_w);
  c = std::cos(th);
  s = std::sin(th);
}

Mat<2> frame(const Vec2& v) {
  Mat<2> R;
  R[0] = {{v[0], -v[1]}};
  R[1] = {{v[1], v[0]}};
  return R;
}

Mat<3> frame(const Vec3& v) {
  const double c = v[0];
  if (c < -1.0 + 1e-14) {
    Mat<3> R;
    R[0][0] = -1;
    R[1][1] = -1;
    R[2][2] = 1;
    return R;
  }
  // Rodrigues rotation about k = v x e1, transposed for row vectors.
  const Vec3 k{{0.0, v[2], -v[1]}};
  Mat<3> K;  // skew(k), K u^T = k x u
  K[0] = {{0, -k[2], k[1]}};
  K[1] = {{k[2], 0, -k[0]}};
  K[2] = {{-k[1], k[0], 0}};
  const Mat<3> K2 = K * K;
  const double f = 1.0 / (1.0 + c);
  Mat<3> R = Mat<3>::identity();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) R[i][j] += -K[i][j] + f * K2[i][j];
  return R;
}

namespace {

void check_impact(double abs_w) {
  if (!(abs_w < 1.0)) throw DomainError("impact parameter must satisfy |w| < 1");
}

}  // namespace

template <>
Mat<2> scattering_matrix<2>(const Impact<2>& w, const ScatteringMap& map) {
  const double aw = std::abs(w[0]);
  check_impact(aw);
  double c, s;
  map.cos_sin(aw, c, s);
  if (w[0] < 0) s = -s;
  Mat<2> S;
  S[0] = {{c, -s}};
  S[1] = {{s, c}};
  return S;
}

template <>
Mat<3> scattering_matrix<3>(const Impact<3>& w, const ScatteringMap& map) {
  const double aw = norm(w);
  check_impact(aw);
  double c, s;
  map.cos_sin(aw, c, s);
  // Any unit direction works at w = 0 since sin(theta(0)) = 0.
  const double u1 = aw > 0 ? w[0] / aw : 1.0, u2 = aw > 0 ? w[1] / aw : 0.0;
  // exp of [[0, -theta u], [theta u^T, 0]] via Rodrigues.
  Mat<3> S;
  S[0] = {{c, -s * u1, -s * u2}};
  S[1] = {{s * u1, 1 + (c - 1) * u1 * u1, (c - 1) * u1 * u2}};
  S[2] = {{s * u2, (c - 1) * u1 * u2, 1 + (c - 1) * u2 * u2}};
  return S;
}

template <int D>
Vec<D> scatter_in_frame(const Impact<D>& w, const ScatteringMap& map) {
  // e1 S^{-1} is the first column of S.
  const Mat<D> S = scattering_matrix<D>(w, map);
  Vec<D> v;
  for (int i = 0; i < D; ++i) v[i] = S[i][0];
  return v;
}

template <int D>
Vec<D> scatter_ambient(const Vec<D>& v_in, const Vec<D>& b, const ScatteringMap& map, Vec<D>* s) {
  const double aw = norm(b);
  check_impact(aw);
  double c, sn;
  map.cos_sin(aw, c, sn);
  Vec<D> bhat;
  if (aw > 0) bhat = b * (1.0 / aw);
  const Vec<D> out = v_in * c + bhat * sn;
  if (s) *s = v_in * (-aw * sn) + b * c;
  return out;
}

template <int D>
Vec<D> scatter(const Vec<D>& v_in, const Impact<D>& w, const ScatteringMap& map) {
  const Mat<D> R = frame(v_in);
  return scatter_in_frame<D>(w, map) * transpose(R);
}

template <int D>
Vec<D> exit_parameter(const Vec<D>& v_in, const Impact<D>& w, const ScatteringMap& map) {
  const Mat<D> R = frame(v_in);
  Vec<D> b0;
  for (int i = 1; i < D; ++i) b0[i] = w[i - 1];
  const Vec<D> b = b0 * transpose(R);
  Vec<D> s;
  scatter_ambient<D>(v_in, b, map, &s);
  return s;
}

template <int D>
FrameTracker<D>::FrameTracker(const Vec<D>& v0) : R_(frame(v0)) {}

template <int D>
Impact<D> FrameTracker<D>::to_frame(const Vec<D>& b) const {
  const Vec<D> f = b * R_;
  Impact<D> w;
  for (int i = 1; i < D; ++i) w[i - 1] = f[i];
  return w;
}

template <int D>
Vec<D> FrameTracker<D>::from_frame(const Impact<D>& w) const {
  Vec<D> f;
  for (int i = 1; i < D; ++i) f[i] = w[i - 1];
  return f * transpose(R_);
}

template <int D>
void FrameTracker<D>::push(const Impact<D>& w, const ScatteringMap& map) {
  R_ = R_ * scattering_matrix<D>(w, map);
  // Rows drift off orthonormality after many products.
  if (++steps_ % 16 == 0) R_ = transpose(orthonormalize(transpose(R_)));
}

template <int D>
Vec<D> FrameTracker<D>::velocity() const {
  Vec<D> v;
  for (int i = 0; i < D; ++i) v[i] = R_[i][0];
  return v;
}

template Vec<2> scatter_in_frame<2>(const Impact<2>&, const ScatteringMap&);
template Vec<3> scatter_in_frame<3>(const Impact<3>&, const ScatteringMap&);
template Vec<2> scatter_ambient<2>(const Vec<2>&, const Vec<2>&, const ScatteringMap&, Vec<2>*);
template Vec<3> scatter_ambient<3>(const Vec<3>&, const Vec<3>&, const ScatteringMap&, Vec<3>*);
template Vec<2> scatter<2>(const Vec<2>&, const Impact<2>&, const ScatteringMap&);
template Vec<3> scatter<3>(const Vec<3>&, const Impact<3>&, const ScatteringMap&);
template Vec<2> exit_parameter<2>(const Vec<2>&, const Impact<2>&, const ScatteringMap&);
template Vec<3> exit_parameter<3>(const Vec<3>&, const Impact<3>&, const ScatteringMap&);
template class FrameTracker<2>;
template class FrameTracker<3>;

}  // namespace lorentz
