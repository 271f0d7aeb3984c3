#include "pose6d/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pose6d {

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

bool is_finite(const Vec3& a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

Mat3 Mat3::identity() {
  Mat3 r;
  r.m[0][0] = r.m[1][1] = r.m[2][2] = 1.0;
  return r;
}

Mat3 operator+(const Mat3& a, const Mat3& b) {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.m[i][j] = a.m[i][j] + b.m[i][j];
  return r;
}

Mat3 operator-(const Mat3& a, const Mat3& b) {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.m[i][j] = a.m[i][j] - b.m[i][j];
  return r;
}

Mat3 operator*(double s, const Mat3& a) {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.m[i][j] = s * a.m[i][j];
  return r;
}

Mat3 operator*(const Mat3& a, const Mat3& b) {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      r.m[i][j] = a.m[i][0] * b.m[0][j] + a.m[i][1] * b.m[1][j] + a.m[i][2] * b.m[2][j];
  return r;
}

Vec3 operator*(const Mat3& a, const Vec3& v) {
  return {a.m[0][0] * v.x + a.m[0][1] * v.y + a.m[0][2] * v.z,
          a.m[1][0] * v.x + a.m[1][1] * v.y + a.m[1][2] * v.z,
          a.m[2][0] * v.x + a.m[2][1] * v.y + a.m[2][2] * v.z};
}

Mat3 transpose(const Mat3& a) {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.m[i][j] = a.m[j][i];
  return r;
}

double det(const Mat3& a) {
  return a.m[0][0] * (a.m[1][1] * a.m[2][2] - a.m[1][2] * a.m[2][1]) -
         a.m[0][1] * (a.m[1][0] * a.m[2][2] - a.m[1][2] * a.m[2][0]) +
         a.m[0][2] * (a.m[1][0] * a.m[2][1] - a.m[1][1] * a.m[2][0]);
}

Mat3 inverse(const Mat3& a) {
  const double d = det(a);
  if (std::abs(d) < 1e-300) throw std::invalid_argument("Mat3 inverse: singular matrix");
  Mat3 r;
  r.m[0][0] = (a.m[1][1] * a.m[2][2] - a.m[1][2] * a.m[2][1]) / d;
  r.m[0][1] = (a.m[0][2] * a.m[2][1] - a.m[0][1] * a.m[2][2]) / d;
  r.m[0][2] = (a.m[0][1] * a.m[1][2] - a.m[0][2] * a.m[1][1]) / d;
  r.m[1][0] = (a.m[1][2] * a.m[2][0] - a.m[1][0] * a.m[2][2]) / d;
  r.m[1][1] = (a.m[0][0] * a.m[2][2] - a.m[0][2] * a.m[2][0]) / d;
  r.m[1][2] = (a.m[0][2] * a.m[1][0] - a.m[0][0] * a.m[1][2]) / d;
  r.m[2][0] = (a.m[1][0] * a.m[2][1] - a.m[1][1] * a.m[2][0]) / d;
  r.m[2][1] = (a.m[0][1] * a.m[2][0] - a.m[0][0] * a.m[2][1]) / d;
  r.m[2][2] = (a.m[0][0] * a.m[1][1] - a.m[0][1] * a.m[1][0]) / d;
  return r;
}

double frobenius_norm(const Mat3& a) {
  double s = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s += a.m[i][j] * a.m[i][j];
  return std::sqrt(s);
}

double frobenius_distance(const Mat3& a, const Mat3& b) { return frobenius_norm(a - b); }

Mat3 hat(const Vec3& r) {
  Mat3 s;
  s.m[0][1] = -r.z;
  s.m[0][2] = r.y;
  s.m[1][0] = r.z;
  s.m[1][2] = -r.x;
  s.m[2][0] = -r.y;
  s.m[2][1] = r.x;
  return s;
}

Vec3 vee(const Mat3& s) { return {s.m[2][1], s.m[0][2], s.m[1][0]}; }

Mat3 exp_map(const Vec3& r) {
  if (!is_finite(r)) throw std::invalid_argument("exp_map: non-finite rotation vector");
  const double theta2 = norm2(r);
  const double theta = std::sqrt(theta2);
  double a;  // sin(theta)/theta
  double b;  // (1 - cos(theta))/theta^2
  if (theta < 1e-4) {
    a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0;
    b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  const Mat3 k = hat(r);
  return Mat3::identity() + a * k + b * (k * k);
}

bool is_rotation(const Mat3& r, double tol) {
  const Mat3 gram = transpose(r) * r;
  if (frobenius_distance(gram, Mat3::identity()) > tol) return false;
  return std::abs(det(r) - 1.0) <= tol;
}

Vec3 log_map(const Mat3& r) {
  if (!is_rotation(r)) throw std::invalid_argument("log_map: input is not a rotation matrix");

  // Antisymmetric part gives sin(theta) * axis; trace gives cos(theta).
  const Vec3 a = {(r.m[2][1] - r.m[1][2]) / 2.0, (r.m[0][2] - r.m[2][0]) / 2.0,
                  (r.m[1][0] - r.m[0][1]) / 2.0};
  const double s = norm(a);
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double theta = std::atan2(s, c);

  if (theta < 1e-4) {
    // r = a * theta/sin(theta), expanded to 4th order.
    const double t2 = theta * theta;
    return a * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0);
  }
  if (theta < kPi - 1e-4) return a * (theta / s);

  // Near pi the antisymmetric part degenerates; recover the axis from the
  // symmetric part of (R + I)/2, pivoting on the largest diagonal.
  const double c2 = (1.0 + c) / 2.0;  // cos^2(theta/2)
  const double s2 = (1.0 - c) / 2.0;  // sin^2(theta/2)
  double bmat[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double bij = (r.m[i][j] + r.m[j][i]) / 2.0 + (i == j ? 1.0 : 0.0);
      bmat[i][j] = (bij / 2.0 - (i == j ? c2 : 0.0)) / s2;  // = n_i * n_j
    }
  int piv = 0;
  if (bmat[1][1] > bmat[piv][piv]) piv = 1;
  if (bmat[2][2] > bmat[piv][piv]) piv = 2;
  double n[3];
  n[piv] = std::sqrt(std::max(0.0, bmat[piv][piv]));
  for (int j = 0; j < 3; ++j)
    if (j != piv) n[j] = bmat[piv][j] / n[piv];
  Vec3 axis = {n[0], n[1], n[2]};
  const double an = norm(axis);
  axis = axis * (1.0 / an);

  // Orient the axis from the antisymmetric part when it is usable; at
  // exactly pi both signs are valid, pick a deterministic one.
  const double orient = dot(axis, a);
  if (orient < -1e-12) {
    axis = -axis;
  } else if (orient <= 1e-12) {
    double big = axis.x;
    if (std::abs(axis.y) > std::abs(big)) big = axis.y;
    if (std::abs(axis.z) > std::abs(big)) big = axis.z;
    if (big < 0) axis = -axis;
  }
  return axis * theta;
}

Mat3 nearest_rotation(const Mat3& m) {
  if (det(m) <= 0) throw std::invalid_argument("nearest_rotation: requires det > 0");
  Mat3 x = m;
  for (int iter = 0; iter < 100; ++iter) {
    const Mat3 y = 0.5 * (x + transpose(inverse(x)));
    if (frobenius_distance(y, x) < 1e-15) return y;
    x = y;
  }
  return x;
}

double angular_distance(const Mat3& r1, const Mat3& r2) {
  const Mat3 rel = r1 * transpose(r2);
  return std::acos(std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0));
}

Pose compose(const Pose& outer, const Pose& inner) {
  Pose p;
  p.rotation = outer.rotation * inner.rotation;
  p.translation = outer.rotation * inner.translation + outer.translation;
  return p;
}

Vec3 transform_point(const Pose& pose, const Vec3& p) {
  return pose.rotation * p + pose.translation;
}

std::vector<Vec3> transform_points(const Pose& pose, const std::vector<Vec3>& pts) {
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const Vec3& p : pts) out.push_back(transform_point(pose, p));
  return out;
}

Vec2 project_point(const Vec3& p_cam, const Intrinsics& k) {
  if (!(p_cam.z > 0.0))
    throw std::invalid_argument("project_point: point behind camera (z <= 0)");
  return {k.fx * p_cam.x / p_cam.z + k.cx, k.fy * p_cam.y / p_cam.z + k.cy};
}

std::vector<Vec2> project_points(const std::vector<Vec3>& pts_cam, const Intrinsics& k) {
  std::vector<Vec2> out;
  out.reserve(pts_cam.size());
  for (const Vec3& p : pts_cam) out.push_back(project_point(p, k));
  return out;
}

}  // namespace pose6d
