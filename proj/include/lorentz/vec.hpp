#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace lorentz {

// Row vector in R^D. Matrices act from the right: v * M.
template <int D>
struct Vec {
  std::array<double, D> x{};

  double& operator[](int i) { return x[i]; }
  double operator[](int i) const { return x[i]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < D; ++i) x[i] += o.x[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < D; ++i) x[i] -= o.x[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < D; ++i) x[i] *= s;
    return *this;
  }
  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(Vec a, double s) { return a *= s; }
  friend Vec operator*(double s, Vec a) { return a *= s; }
  friend Vec operator-(Vec a) { return a *= -1.0; }
  friend bool operator==(const Vec&, const Vec&) = default;
};

using Vec2 = Vec<2>;
using Vec3 = Vec<3>;

template <int D>
double dot(const Vec<D>& a, const Vec<D>& b) {
  double s = 0;
  for (int i = 0; i < D; ++i) s += a[i] * b[i];
  return s;
}

template <int D>
double norm2(const Vec<D>& a) { return dot(a, a); }

template <int D>
double norm(const Vec<D>& a) { return std::sqrt(dot(a, a)); }

template <int D>
Vec<D> normalized(const Vec<D>& a) { return a * (1.0 / norm(a)); }

inline double cross(const Vec2& a, const Vec2& b) { return a[0] * b[1] - a[1] * b[0]; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]}};
}

template <int D>
Vec<D> unit(int i) {
  Vec<D> e;
  e[i] = 1.0;
  return e;
}

// Row-major D x D matrix; m[i] is the i-th row.
template <int D>
struct Mat {
  std::array<Vec<D>, D> r{};

  Vec<D>& operator[](int i) { return r[i]; }
  const Vec<D>& operator[](int i) const { return r[i]; }

  static Mat identity() {
    Mat m;
    for (int i = 0; i < D; ++i) m.r[i][i] = 1.0;
    return m;
  }
};

template <int D>
Vec<D> operator*(const Vec<D>& v, const Mat<D>& m) {
  Vec<D> out;
  for (int i = 0; i < D; ++i) out += m[i] * v[i];
  return out;
}

template <int D>
Mat<D> operator*(const Mat<D>& a, const Mat<D>& b) {
  Mat<D> out;
  for (int i = 0; i < D; ++i) out[i] = a[i] * b;
  return out;
}

template <int D>
Mat<D> transpose(const Mat<D>& a) {
  Mat<D> t;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) t[i][j] = a[j][i];
  return t;
}

inline double det(const Mat<2>& m) { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

inline double det(const Mat<3>& m) { return dot(m[0], cross(m[1], m[2])); }

inline Mat<2> inverse(const Mat<2>& m) {
  const double d = det(m);
  Mat<2> out;
  out[0] = {{m[1][1] / d, -m[0][1] / d}};
  out[1] = {{-m[1][0] / d, m[0][0] / d}};
  return out;
}

inline Mat<3> inverse(const Mat<3>& m) {
  // Columns of the inverse are cross products of rows.
  const double d = det(m);
  const Vec3 c0 = cross(m[1], m[2]), c1 = cross(m[2], m[0]), c2 = cross(m[0], m[1]);
  Mat<3> out;
  for (int i = 0; i < 3; ++i) out[i] = Vec3{{c0[i] / d, c1[i] / d, c2[i] / d}};
  return out;
}

// Gram-Schmidt on rows, keeping the orientation of the first row.
template <int D>
Mat<D> orthonormalize(Mat<D> m) {
  for (int i = 0; i < D; ++i) {
    for (int j = 0; j < i; ++j) m[i] -= m[j] * dot(m[i], m[j]);
    m[i] = normalized(m[i]);
  }
  return m;
}

}  // namespace lorentz
