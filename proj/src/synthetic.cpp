#include "pose6d/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pose6d {

namespace {

constexpr double kBoxSide = 0.1;
constexpr double kCylRadius = 0.035;
constexpr double kCylHeight = 0.12;
constexpr int kCylRings = 24;  // points per ring; 2*pi/24 yaw is an exact symmetry

// Blob geometry: body ellipsoid plus an off-axis lobe. The lobe breaks every
// rotational self-symmetry of the ellipsoid, including the half-turn flips.
constexpr Vec3 kBlobBody = {0.065, 0.048, 0.034};     // semi-axes
constexpr Vec3 kBlobLobe = {0.030, 0.026, 0.021};     // lobe semi-axes
constexpr Vec3 kBlobLobeCenter = {0.045, 0.018, 0.028};

ObjectModel finalize(std::vector<Vec3> pts) {
  // Recenter on the centroid so the frame origin is the object center.
  Vec3 c{0, 0, 0};
  for (const Vec3& p : pts) c = c + p;
  c = c * (1.0 / static_cast<double>(pts.size()));
  for (Vec3& p : pts) p = p - c;
  ObjectModel m;
  m.points = std::move(pts);
  m.diameter = model_diameter(m.points);
  return m;
}

std::vector<Vec3> box_points(int n, SplitMix64& rng) {
  const double h = kBoxSide / 2.0;
  std::vector<Vec3> pts;
  for (int sx = -1; sx <= 1; sx += 2)
    for (int sy = -1; sy <= 1; sy += 2)
      for (int sz = -1; sz <= 1; sz += 2) pts.push_back({sx * h, sy * h, sz * h});
  while (static_cast<int>(pts.size()) < n) {
    const int face = static_cast<int>(rng.next_below(6));
    const double u = rng.uniform(-h, h);
    const double v = rng.uniform(-h, h);
    switch (face) {
      case 0: pts.push_back({h, u, v}); break;
      case 1: pts.push_back({-h, u, v}); break;
      case 2: pts.push_back({u, h, v}); break;
      case 3: pts.push_back({u, -h, v}); break;
      case 4: pts.push_back({u, v, h}); break;
      default: pts.push_back({u, v, -h}); break;
    }
  }
  return pts;
}

std::vector<Vec3> cylinder_points(int n) {
  const int n_z = std::max(2, static_cast<int>(std::lround((n - 2) / double(kCylRings))));
  std::vector<Vec3> pts;
  for (int iz = 0; iz < n_z; ++iz) {
    const double z = -kCylHeight / 2.0 + kCylHeight * iz / double(n_z - 1);
    for (int it = 0; it < kCylRings; ++it) {
      const double a = 2.0 * kPi * it / double(kCylRings);
      pts.push_back({kCylRadius * std::cos(a), kCylRadius * std::sin(a), z});
    }
  }
  pts.push_back({0, 0, -kCylHeight / 2.0});
  pts.push_back({0, 0, kCylHeight / 2.0});
  return pts;
}

double ellipsoid_radius(const Vec3& dir, const Vec3& semi) {
  const double q = (dir.x / semi.x) * (dir.x / semi.x) + (dir.y / semi.y) * (dir.y / semi.y) +
                   (dir.z / semi.z) * (dir.z / semi.z);
  return 1.0 / std::sqrt(q);
}

std::vector<Vec3> blob_points(int n, SplitMix64& rng) {
  std::vector<Vec3> pts;
  const int n_body = (2 * n) / 3;
  // Fibonacci sphere directions give even deterministic coverage.
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n_body; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / double(n_body);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double a = golden * i;
    const Vec3 dir = {r * std::cos(a), r * std::sin(a), z};
    Vec3 p = dir * ellipsoid_radius(dir, kBlobBody);
    p = p + rng.gaussian3(0.0012);
    pts.push_back(p);
  }
  for (int i = 0; i < n - n_body; ++i) {
    const int m = n - n_body;
    const double z = 1.0 - 2.0 * (i + 0.5) / double(m);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double a = golden * i + 1.0;
    const Vec3 dir = {r * std::cos(a), r * std::sin(a), z};
    Vec3 p = kBlobLobeCenter + dir * ellipsoid_radius(dir, kBlobLobe);
    p = p + rng.gaussian3(0.0012);
    pts.push_back(p);
  }
  return pts;
}

}  // namespace

ObjectModel make_model(ShapeKind shape, int n_points, std::uint64_t seed) {
  if (n_points < 8) throw std::invalid_argument("make_model: n_points must be >= 8");
  SplitMix64 rng(seed);
  switch (shape) {
    case ShapeKind::box: return finalize(box_points(n_points, rng));
    case ShapeKind::cylinder: return finalize(cylinder_points(n_points));
    case ShapeKind::asymmetric_blob: return finalize(blob_points(n_points, rng));
  }
  throw std::invalid_argument("make_model: unknown shape");
}

Pose sample_pose(const PoseSampleParams& p, const Intrinsics& k, int image_w, int image_h,
                 SplitMix64& rng) {
  if (!(p.tz_min > 0) || !(p.tz_max >= p.tz_min))
    throw std::invalid_argument("sample_pose: bad t_z range");
  if (!(p.theta_max >= 0) || p.theta_max > kPi)
    throw std::invalid_argument("sample_pose: theta_max must be in [0, pi]");
  if (2.0 * p.margin_px >= image_w || 2.0 * p.margin_px >= image_h)
    throw std::invalid_argument("sample_pose: margin leaves no image area");

  Pose pose;
  pose.rotation = exp_map(rng.in_ball(p.theta_max));
  if (p.yaw_full) {
    const double psi = rng.uniform(-p.yaw_max, p.yaw_max);
    pose.rotation = pose.rotation * exp_map({0, 0, psi});
  }
  const double tz = rng.uniform(p.tz_min, p.tz_max);
  const double u = rng.uniform(p.margin_px, image_w - p.margin_px);
  const double v = rng.uniform(p.margin_px, image_h - p.margin_px);
  pose.translation = {(u - k.cx) * tz / k.fx, (v - k.cy) * tz / k.fy, tz};
  return pose;
}

Pose sample_pose(const PoseSampleParams& p, const Intrinsics& k, int image_w, int image_h,
                 std::uint64_t seed) {
  SplitMix64 rng(seed);
  return sample_pose(p, k, image_w, image_h, rng);
}

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec2& a, const Vec2& b) { return a.x == b.x && a.y == b.y; }),
            pts.end());
  const std::size_t n = pts.size();
  if (n < 3) return pts;
  const auto cross2 = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
  };
  std::vector<Vec2> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {  // lower
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {  // upper
    while (k >= t && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

namespace {

bool point_in_convex(const std::vector<Vec2>& hull, double px, double py) {
  const std::size_t n = hull.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = hull[i];
    const Vec2& b = hull[(i + 1) % n];
    const double c = (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
    if (c < -1e-12) return false;
  }
  return true;
}

}  // namespace

GroundTruthInstance render_instance(const ObjectModel& model, const Pose& pose,
                                    const Intrinsics& k, int image_w, int image_h,
                                    int class_id) {
  if (model.points.size() < 3) throw std::invalid_argument("render_instance: model too small");
  std::vector<Vec3> cam = transform_points(pose, model.points);
  for (const Vec3& p : cam)
    if (!(p.z > 0)) throw std::invalid_argument("render_instance: point behind camera");
  const std::vector<Vec2> px = project_points(cam, k);

  std::vector<Vec2> hull = convex_hull(px);
  if (hull.size() < 3) throw std::invalid_argument("render_instance: degenerate projection");

  double hx0 = hull[0].x, hy0 = hull[0].y, hx1 = hull[0].x, hy1 = hull[0].y;
  for (const Vec2& p : hull) {
    hx0 = std::min(hx0, p.x);
    hy0 = std::min(hy0, p.y);
    hx1 = std::max(hx1, p.x);
    hy1 = std::max(hy1, p.y);
  }
  if (hx0 < 0 || hy0 < 0 || hx1 > image_w || hy1 > image_h)
    throw std::invalid_argument("render_instance: silhouette leaves the image");

  GroundTruthInstance inst;
  inst.class_id = class_id;
  inst.mask = Mask(image_w, image_h);
  int bx0 = image_w, by0 = image_h, bx1 = -1, by1 = -1;
  const int x_lo = std::max(0, static_cast<int>(std::floor(hx0)));
  const int x_hi = std::min(image_w - 1, static_cast<int>(std::ceil(hx1)));
  const int y_lo = std::max(0, static_cast<int>(std::floor(hy0)));
  const int y_hi = std::min(image_h - 1, static_cast<int>(std::ceil(hy1)));
  for (int y = y_lo; y <= y_hi; ++y) {
    for (int x = x_lo; x <= x_hi; ++x) {
      if (point_in_convex(hull, x + 0.5, y + 0.5)) {
        inst.mask.set(x, y, true);
        bx0 = std::min(bx0, x);
        by0 = std::min(by0, y);
        bx1 = std::max(bx1, x);
        by1 = std::max(by1, y);
      }
    }
  }
  if (bx1 < 0) throw std::invalid_argument("render_instance: empty mask (sub-pixel object)");
  inst.bbox = {double(bx0), double(by0), double(bx1 + 1), double(by1 + 1)};
  inst.pose = pose;
  inst.pose_code = encode_pose(pose);
  return inst;
}

Pose perturb_pose(const Pose& pose, double rot_sigma, double trans_sigma, std::uint64_t seed) {
  if (rot_sigma < 0 || trans_sigma < 0)
    throw std::invalid_argument("perturb_pose: sigmas must be >= 0");
  SplitMix64 rng(seed);
  const Vec3 eps_r = rng.gaussian3(rot_sigma);
  const Vec3 eps_t = rng.gaussian3(trans_sigma);
  Pose out;
  out.rotation = exp_map(eps_r) * pose.rotation;
  out.translation = pose.translation + eps_t;
  return out;
}

Pose perturb_pose_exact(const Pose& pose, double rot_angle, double trans_dist,
                        std::uint64_t seed) {
  SplitMix64 rng(seed);
  auto unit = [&rng]() {
    for (;;) {
      const Vec3 v = rng.gaussian3(1.0);
      const double n = norm(v);
      if (n > 1e-6) return v * (1.0 / n);
    }
  };
  const Vec3 axis = unit();
  const Vec3 dir = unit();
  Pose out;
  out.rotation = exp_map(axis * rot_angle) * pose.rotation;
  out.translation = pose.translation + dir * trans_dist;
  return out;
}

std::vector<GroundTruthInstance> generate_scene(const SceneSpec& spec) {
  std::vector<GroundTruthInstance> out;
  out.reserve(spec.objects.size());
  for (const SceneObject& obj : spec.objects)
    out.push_back(
        render_instance(obj.model, obj.pose, spec.intrinsics, spec.image_w, spec.image_h,
                        obj.class_id));
  return out;
}

std::vector<double> instance_features(const GroundTruthInstance& inst, int image_w,
                                      int image_h) {
  const BBox& b = inst.bbox;
  const Mask& m = inst.mask;
  if (!b.valid()) throw std::invalid_argument("instance_features: invalid bbox");

  // Mask centroid and central moments over on-pixel centers.
  double area = 0, su = 0, sv = 0;
  const int x0 = static_cast<int>(b.x_min), x1 = static_cast<int>(b.x_max);
  const int y0 = static_cast<int>(b.y_min), y1 = static_cast<int>(b.y_max);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      if (m.at(x, y)) {
        area += 1.0;
        su += x + 0.5;
        sv += y + 0.5;
      }
  if (area == 0) throw std::invalid_argument("instance_features: empty mask");
  const double cu = su / area, cv = sv / area;

  double mu[4][4] = {};
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      if (m.at(x, y)) {
        const double du = x + 0.5 - cu, dv = y + 0.5 - cv;
        mu[2][0] += du * du;
        mu[0][2] += dv * dv;
        mu[1][1] += du * dv;
        mu[3][0] += du * du * du;
        mu[2][1] += du * du * dv;
        mu[1][2] += du * dv * dv;
        mu[0][3] += dv * dv * dv;
      }
  const auto eta = [&](int p, int q) {
    return mu[p][q] / std::pow(area, 1.0 + (p + q) / 2.0);
  };

  std::vector<double> f;
  f.reserve(kFeatureDim);
  const Vec2 c = b.center();
  f.push_back(c.x / image_w);
  f.push_back(c.y / image_h);
  f.push_back(b.width() / image_w);
  f.push_back(b.height() / image_h);
  f.push_back(std::log(b.width() / b.height()));
  f.push_back(image_w / (b.width() + b.height()) * 0.1);
  f.push_back((cu - c.x) / b.width());
  f.push_back((cv - c.y) / b.height());
  f.push_back(eta(2, 0));
  f.push_back(eta(0, 2));
  f.push_back(eta(1, 1));
  f.push_back(eta(3, 0));
  f.push_back(eta(2, 1));
  f.push_back(eta(1, 2));
  f.push_back(eta(0, 3));

  // 7x7 occupancy over the box.
  const int g = 7;
  std::vector<double> on(g * g, 0.0), tot(g * g, 0.0);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) {
      int gx = static_cast<int>((x + 0.5 - b.x_min) / b.width() * g);
      int gy = static_cast<int>((y + 0.5 - b.y_min) / b.height() * g);
      gx = std::clamp(gx, 0, g - 1);
      gy = std::clamp(gy, 0, g - 1);
      tot[static_cast<std::size_t>(gy) * g + gx] += 1.0;
      if (m.at(x, y)) on[static_cast<std::size_t>(gy) * g + gx] += 1.0;
    }
  for (int i = 0; i < g * g; ++i)
    f.push_back(tot[static_cast<std::size_t>(i)] > 0
                    ? on[static_cast<std::size_t>(i)] / tot[static_cast<std::size_t>(i)]
                    : 0.0);

  return f;
}

std::vector<ToySample> make_toy_dataset(const ToyDatasetParams& p) {
  const ObjectModel model = make_model(p.shape, p.n_points, mix_seed(p.seed, 0));
  std::vector<ToySample> out;
  out.reserve(static_cast<std::size_t>(p.n_samples));
  SplitMix64 rng(mix_seed(p.seed, 1));
  for (int i = 0; i < p.n_samples; ++i) {
    for (int attempt = 0;; ++attempt) {
      const Pose pose = sample_pose(p.pose, p.k, p.image_w, p.image_h, rng);
      try {
        const GroundTruthInstance inst =
            render_instance(model, pose, p.k, p.image_w, p.image_h, 0);
        out.push_back({instance_features(inst, p.image_w, p.image_h), inst.pose_code});
        break;
      } catch (const std::invalid_argument&) {
        if (attempt > 64)
          throw std::runtime_error(
              "make_toy_dataset: cannot place object in frame; increase margin_px");
      }
    }
  }
  return out;
}

}  // namespace pose6d
