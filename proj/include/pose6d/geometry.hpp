#pragma once

#include <vector>

// Rotation-vector <-> rotation-matrix maps (so(3)/SO(3)), rigid transforms
// and the pinhole projection. Everything here is a pure function on value
// types; angles are radians, translations metres, pixels continuous.

namespace pose6d {

inline constexpr double kPi = 3.14159265358979323846;

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

// so(3) element as axis*angle; |r| is the rotation angle.
using RotationVector = Vec3;

struct Vec2 {
  double x = 0.0, y = 0.0;
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
inline Vec3 operator*(const Vec3& a, double s) { return s * a; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
double norm(const Vec3& a);
inline double norm2(const Vec3& a) { return dot(a, a); }
bool is_finite(const Vec3& a);

struct Mat3 {
  double m[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};

  static Mat3 identity();
  double trace() const { return m[0][0] + m[1][1] + m[2][2]; }
};
using RotationMatrix = Mat3;

Mat3 operator+(const Mat3& a, const Mat3& b);
Mat3 operator-(const Mat3& a, const Mat3& b);
Mat3 operator*(double s, const Mat3& a);
Mat3 operator*(const Mat3& a, const Mat3& b);
Vec3 operator*(const Mat3& a, const Vec3& v);
Mat3 transpose(const Mat3& a);
double det(const Mat3& a);
Mat3 inverse(const Mat3& a);
double frobenius_norm(const Mat3& a);
double frobenius_distance(const Mat3& a, const Mat3& b);

// Rigid transform: x_cam = rotation * x_obj + translation (metres).
struct Pose {
  Mat3 rotation = Mat3::identity();
  Vec3 translation;
};

// Pinhole camera: u = fx*x/z + cx, v = fy*y/z + cy.
struct Intrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
};

// Skew-symmetric cross-product matrix: hat(r) * v == cross(r, v).
Mat3 hat(const Vec3& r);
Vec3 vee(const Mat3& s);

// Rodrigues exponential. Total on finite input; theta -> 0 is handled by a
// 4th-order series so there is no 0/0.
Mat3 exp_map(const Vec3& r);

// Rodrigues logarithm, |result| in [0, pi]. Throws std::invalid_argument if
// R fails the orthonormality / determinant tolerance (signals corrupt data).
Vec3 log_map(const Mat3& r);

bool is_rotation(const Mat3& r, double tol = 1e-9);

// Nearest rotation in Frobenius norm (polar factor via Higham iteration).
// Explicit repair operation for near-rotations; requires det > 0.
Mat3 nearest_rotation(const Mat3& m);

// arccos((tr(R1*R2^T) - 1) / 2), in [0, pi].
double angular_distance(const Mat3& r1, const Mat3& r2);

Pose compose(const Pose& outer, const Pose& inner);  // outer applied after inner

Vec3 transform_point(const Pose& pose, const Vec3& p);
std::vector<Vec3> transform_points(const Pose& pose, const std::vector<Vec3>& pts);

// Throws std::invalid_argument if the point has z <= 0 (behind camera).
Vec2 project_point(const Vec3& p_cam, const Intrinsics& k);
std::vector<Vec2> project_points(const std::vector<Vec3>& pts_cam, const Intrinsics& k);

}  // namespace pose6d
