#include "pose6d/io.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace pose6d {

namespace {

std::string basename_of(const std::string& path) {
  return std::filesystem::path(path).filename().string();
}

}  // namespace

ParseError::ParseError(const std::string& path, int line, const std::string& msg)
    : std::runtime_error(basename_of(path) + ":" + std::to_string(line) + ": " + msg) {}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

class LineReader {
 public:
  explicit LineReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) throw ParseError(path, 0, "cannot open file");
  }

  // Next non-blank line split on whitespace; false at end of file.
  bool next(std::vector<std::string>& tokens) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      tokens.clear();
      std::istringstream ss(line);
      std::string tok;
      while (ss >> tok) tokens.push_back(tok);
      if (!tokens.empty()) return true;
    }
    return false;
  }

  std::vector<std::string> expect(std::size_t n_tokens, const std::string& what) {
    std::vector<std::string> tokens;
    if (!next(tokens)) fail("unexpected end of file, expected " + what);
    if (tokens.size() != n_tokens)
      fail("expected " + what + " (" + std::to_string(n_tokens) + " fields, got " +
           std::to_string(tokens.size()) + ")");
    return tokens;
  }

  // First token fixed, total token count at least min_tokens.
  std::vector<std::string> expect_tag(const std::string& tag, std::size_t min_tokens) {
    std::vector<std::string> tokens;
    if (!next(tokens)) fail("unexpected end of file, expected '" + tag + "'");
    if (tokens[0] != tag || tokens.size() < min_tokens)
      fail("expected '" + tag + "' line");
    return tokens;
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(path_, line_no_, msg); }

  double to_double(const std::string& s) const {
    if (s.empty()) fail("empty numeric field");
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE) fail("bad float '" + s + "'");
    if (!std::isfinite(v)) fail("non-finite float '" + s + "'");
    return v;
  }

  long long to_int(const std::string& s) const {
    if (s.empty()) fail("empty integer field");
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size() || errno == ERANGE) fail("bad integer '" + s + "'");
    return v;
  }

  std::uint64_t to_u64(const std::string& s) const {
    if (s.empty()) fail("empty integer field");
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size() || errno == ERANGE) fail("bad integer '" + s + "'");
    return v;
  }

  void expect_header(const std::string& magic) {
    const std::vector<std::string> t = expect(2, "header");
    if (t[0] != magic || t[1] != "v1") fail("expected header '" + magic + " v1'");
  }

 private:
  std::string path_;
  std::ifstream in_;
  int line_no_ = 0;
};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

}  // namespace

// --- model --------------------------------------------------------------------

ObjectModel read_model(const std::string& path) {
  LineReader lr(path);
  lr.expect_header("pose6d-model");
  const auto np = lr.expect(2, "points count");
  if (np[0] != "points") lr.fail("expected 'points N'");
  const long long n = lr.to_int(np[1]);
  if (n < 2) lr.fail("model needs at least 2 points");
  const auto dl = lr.expect(2, "diameter");
  if (dl[0] != "diameter") lr.fail("expected 'diameter D'");
  ObjectModel m;
  m.diameter = lr.to_double(dl[1]);
  m.points.reserve(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) {
    const auto t = lr.expect(3, "point coordinates");
    m.points.push_back({lr.to_double(t[0]), lr.to_double(t[1]), lr.to_double(t[2])});
  }
  if (!(m.diameter > 0)) lr.fail("diameter must be positive");
  return m;
}

void write_model(const std::string& path, const ObjectModel& m) {
  std::ofstream out = open_out(path);
  out << "pose6d-model v1\n";
  out << "points " << m.points.size() << "\n";
  out << "diameter " << fmt_double(m.diameter) << "\n";
  for (const Vec3& p : m.points)
    out << fmt_double(p.x) << " " << fmt_double(p.y) << " " << fmt_double(p.z) << "\n";
}

// --- intrinsics -----------------------------------------------------------------

Intrinsics read_intrinsics(const std::string& path) {
  LineReader lr(path);
  lr.expect_header("pose6d-intrinsics");
  const auto t = lr.expect(4, "fx fy cx cy");
  Intrinsics k{lr.to_double(t[0]), lr.to_double(t[1]), lr.to_double(t[2]), lr.to_double(t[3])};
  if (!(k.fx > 0) || !(k.fy > 0)) lr.fail("focal lengths must be positive");
  return k;
}

void write_intrinsics(const std::string& path, const Intrinsics& k) {
  std::ofstream out = open_out(path);
  out << "pose6d-intrinsics v1\n";
  out << fmt_double(k.fx) << " " << fmt_double(k.fy) << " " << fmt_double(k.cx) << " "
      << fmt_double(k.cy) << "\n";
}

// --- pose -----------------------------------------------------------------------

Pose read_pose(const std::string& path) {
  LineReader lr(path);
  lr.expect_header("pose6d-pose");
  Pose p;
  for (int i = 0; i < 3; ++i) {
    const auto t = lr.expect(4, "pose row (R|t)");
    for (int j = 0; j < 3; ++j) p.rotation.m[i][j] = lr.to_double(t[static_cast<std::size_t>(j)]);
    const double tv = lr.to_double(t[3]);
    (i == 0 ? p.translation.x : i == 1 ? p.translation.y : p.translation.z) = tv;
  }
  if (!is_rotation(p.rotation, 1e-6)) lr.fail("rotation block is not orthonormal");
  return p;
}

void write_pose(const std::string& path, const Pose& p) {
  std::ofstream out = open_out(path);
  out << "pose6d-pose v1\n";
  const double t[3] = {p.translation.x, p.translation.y, p.translation.z};
  for (int i = 0; i < 3; ++i)
    out << fmt_double(p.rotation.m[i][0]) << " " << fmt_double(p.rotation.m[i][1]) << " "
        << fmt_double(p.rotation.m[i][2]) << " " << fmt_double(t[i]) << "\n";
}

// --- mlp checkpoint ----------------------------------------------------------------

MLP read_mlp(const std::string& path) {
  LineReader lr(path);
  lr.expect_header("pose6d-mlp");
  const auto wt = lr.expect_tag("widths", 2);
  const long long nw = lr.to_int(wt[1]);
  if (static_cast<std::size_t>(nw) + 2 != wt.size()) lr.fail("widths count mismatch");
  std::vector<int> widths;
  for (long long i = 0; i < nw; ++i)
    widths.push_back(static_cast<int>(lr.to_int(wt[static_cast<std::size_t>(2 + i)])));
  MLP mlp;
  mlp.widths = widths;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const auto lt = lr.expect(4, "layer header");
    if (lt[0] != "layer" || lr.to_int(lt[1]) != static_cast<long long>(l))
      lr.fail("expected 'layer " + std::to_string(l) + " in out'");
    MLP::Layer ly;
    ly.in = static_cast<int>(lr.to_int(lt[2]));
    ly.out = static_cast<int>(lr.to_int(lt[3]));
    if (ly.in != widths[l] || ly.out != widths[l + 1]) lr.fail("layer dims disagree with widths");
    ly.w.reserve(static_cast<std::size_t>(ly.in) * ly.out);
    for (int o = 0; o < ly.out; ++o) {
      const auto row = lr.expect(static_cast<std::size_t>(ly.in) + 1, "weight row");
      if (row[0] != "w") lr.fail("expected weight row");
      for (int i = 0; i < ly.in; ++i) ly.w.push_back(lr.to_double(row[static_cast<std::size_t>(i + 1)]));
    }
    const auto bias = lr.expect(static_cast<std::size_t>(ly.out) + 1, "bias row");
    if (bias[0] != "b") lr.fail("expected bias row");
    for (int o = 0; o < ly.out; ++o) ly.b.push_back(lr.to_double(bias[static_cast<std::size_t>(o + 1)]));
    mlp.layers.push_back(std::move(ly));
  }
  if (mlp.layers.size() != kMlpLayers || widths.back() != kMlpOutputs)
    lr.fail("checkpoint must describe a 4-layer head with 4 outputs");
  return mlp;
}

void write_mlp(const std::string& path, const MLP& mlp) {
  std::ofstream out = open_out(path);
  out << "pose6d-mlp v1\n";
  out << "widths " << mlp.widths.size();
  for (int w : mlp.widths) out << " " << w;
  out << "\n";
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const MLP::Layer& ly = mlp.layers[l];
    out << "layer " << l << " " << ly.in << " " << ly.out << "\n";
    for (int o = 0; o < ly.out; ++o) {
      out << "w";
      for (int i = 0; i < ly.in; ++i)
        out << " " << fmt_double(ly.w[static_cast<std::size_t>(o) * ly.in + i]);
      out << "\n";
    }
    out << "b";
    for (double b : ly.b) out << " " << fmt_double(b);
    out << "\n";
  }
}

// --- RLE masks -----------------------------------------------------------------------

std::vector<long long> mask_to_rle(const Mask& m) {
  std::vector<long long> runs;
  long long count = 0;
  std::uint8_t current = 0;  // runs start with the off value
  for (std::uint8_t v : m.data) {
    const std::uint8_t bit = v ? 1 : 0;
    if (bit == current) {
      ++count;
    } else {
      runs.push_back(count);
      current = bit;
      count = 1;
    }
  }
  runs.push_back(count);
  return runs;
}

Mask rle_to_mask(int w, int h, const std::vector<long long>& runs) {
  Mask m(w, h);
  std::size_t pos = 0;
  std::uint8_t current = 0;
  for (long long run : runs) {
    if (run < 0 || pos + static_cast<std::size_t>(run) > m.data.size())
      throw std::invalid_argument("rle_to_mask: runs exceed mask size");
    for (long long i = 0; i < run; ++i) m.data[pos++] = current;
    current = current ? 0 : 1;
  }
  if (pos != m.data.size()) throw std::invalid_argument("rle_to_mask: runs do not cover mask");
  return m;
}

// --- detections -------------------------------------------------------------------------

std::vector<DetectionRecord> read_detections(const std::string& path) {
  LineReader lr(path);
  lr.expect_header("pose6d-detections");
  const auto rc = lr.expect(2, "records count");
  if (rc[0] != "records") lr.fail("expected 'records N'");
  const long long n = lr.to_int(rc[1]);
  std::vector<DetectionRecord> dets;
  dets.reserve(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) {
    const auto t = lr.expect_tag("det", 13);
    DetectionRecord d;
    d.image_id = static_cast<int>(lr.to_int(t[1]));
    d.class_id = static_cast<int>(lr.to_int(t[2]));
    d.score = lr.to_double(t[3]);
    if (d.score < 0.0 || d.score > 1.0) lr.fail("score must be in [0, 1]");
    d.box = {lr.to_double(t[4]), lr.to_double(t[5]), lr.to_double(t[6]), lr.to_double(t[7])};
    if (!d.box.valid()) lr.fail("invalid bbox");
    d.code.r = {lr.to_double(t[8]), lr.to_double(t[9]), lr.to_double(t[10])};
    d.code.t_z = lr.to_double(t[11]);
    if (t[12] == "nomask") {
      if (t.size() != 13) lr.fail("unexpected fields after 'nomask'");
    } else if (t[12] == "rle") {
      if (t.size() < 16) lr.fail("truncated rle mask");
      const int w = static_cast<int>(lr.to_int(t[13]));
      const int h = static_cast<int>(lr.to_int(t[14]));
      const long long k = lr.to_int(t[15]);
      if (static_cast<long long>(t.size()) != 16 + k) lr.fail("rle count mismatch");
      std::vector<long long> runs;
      for (long long r = 0; r < k; ++r)
        runs.push_back(lr.to_int(t[static_cast<std::size_t>(16 + r)]));
      try {
        d.mask = rle_to_mask(w, h, runs);
      } catch (const std::invalid_argument& e) {
        lr.fail(e.what());
      }
    } else {
      lr.fail("expected 'rle' or 'nomask', got '" + t[12] + "'");
    }
    dets.push_back(std::move(d));
  }
  return dets;
}

void write_detections(const std::string& path, const std::vector<DetectionRecord>& dets) {
  std::ofstream out = open_out(path);
  out << "pose6d-detections v1\n";
  out << "records " << dets.size() << "\n";
  for (const DetectionRecord& d : dets) {
    out << "det " << d.image_id << " " << d.class_id << " " << fmt_double(d.score) << " "
        << fmt_double(d.box.x_min) << " " << fmt_double(d.box.y_min) << " "
        << fmt_double(d.box.x_max) << " " << fmt_double(d.box.y_max) << " "
        << fmt_double(d.code.r.x) << " " << fmt_double(d.code.r.y) << " "
        << fmt_double(d.code.r.z) << " " << fmt_double(d.code.t_z);
    if (d.mask) {
      const std::vector<long long> runs = mask_to_rle(*d.mask);
      out << " rle " << d.mask->w << " " << d.mask->h << " " << runs.size();
      for (long long r : runs) out << " " << r;
    } else {
      out << " nomask";
    }
    out << "\n";
  }
}

// --- scene ground truth ---------------------------------------------------------------------

SceneGt read_scene_gt(const std::string& path) {
  LineReader lr(path);
  lr.expect_header("pose6d-scene-gt");
  const auto idl = lr.expect(2, "image id");
  if (idl[0] != "image_id") lr.fail("expected 'image_id I'");
  SceneGt scene;
  scene.image_id = static_cast<int>(lr.to_int(idl[1]));
  const auto cnt = lr.expect(2, "instances count");
  if (cnt[0] != "instances") lr.fail("expected 'instances K'");
  const long long n = lr.to_int(cnt[1]);
  for (long long i = 0; i < n; ++i) {
    GroundTruthInstance inst;
    const auto hd = lr.expect(2, "instance header");
    if (hd[0] != "instance") lr.fail("expected 'instance CLASS'");
    inst.class_id = static_cast<int>(lr.to_int(hd[1]));
    const auto bb = lr.expect(5, "bbox");
    if (bb[0] != "bbox") lr.fail("expected bbox line");
    inst.bbox = {lr.to_double(bb[1]), lr.to_double(bb[2]), lr.to_double(bb[3]),
                 lr.to_double(bb[4])};
    if (!inst.bbox.valid()) lr.fail("invalid bbox");
    const auto ps = lr.expect(13, "pose (12 floats)");
    if (ps[0] != "pose") lr.fail("expected pose line");
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c)
        inst.pose.rotation.m[r][c] = lr.to_double(ps[static_cast<std::size_t>(1 + r * 4 + c)]);
      const double tv = lr.to_double(ps[static_cast<std::size_t>(1 + r * 4 + 3)]);
      (r == 0 ? inst.pose.translation.x
              : r == 1 ? inst.pose.translation.y : inst.pose.translation.z) = tv;
    }
    if (!is_rotation(inst.pose.rotation, 1e-6)) lr.fail("pose rotation is not orthonormal");
    const auto cd = lr.expect(5, "pose code");
    if (cd[0] != "code") lr.fail("expected code line");
    inst.pose_code.r = {lr.to_double(cd[1]), lr.to_double(cd[2]), lr.to_double(cd[3])};
    inst.pose_code.t_z = lr.to_double(cd[4]);
    const auto mk = lr.expect_tag("mask", 5);
    if (mk[1] != "rle") lr.fail("expected 'mask rle W H K counts...'");
    const int w = static_cast<int>(lr.to_int(mk[2]));
    const int h = static_cast<int>(lr.to_int(mk[3]));
    const long long k = lr.to_int(mk[4]);
    if (static_cast<long long>(mk.size()) != 5 + k) lr.fail("rle count mismatch");
    std::vector<long long> runs;
    for (long long r = 0; r < k; ++r) runs.push_back(lr.to_int(mk[static_cast<std::size_t>(5 + r)]));
    try {
      inst.mask = rle_to_mask(w, h, runs);
    } catch (const std::invalid_argument& e) {
      lr.fail(e.what());
    }
    scene.instances.push_back(std::move(inst));
  }
  return scene;
}

void write_scene_gt(const std::string& path, const SceneGt& scene) {
  std::ofstream out = open_out(path);
  out << "pose6d-scene-gt v1\n";
  out << "image_id " << scene.image_id << "\n";
  out << "instances " << scene.instances.size() << "\n";
  for (const GroundTruthInstance& inst : scene.instances) {
    out << "instance " << inst.class_id << "\n";
    out << "bbox " << fmt_double(inst.bbox.x_min) << " " << fmt_double(inst.bbox.y_min) << " "
        << fmt_double(inst.bbox.x_max) << " " << fmt_double(inst.bbox.y_max) << "\n";
    out << "pose";
    const double t[3] = {inst.pose.translation.x, inst.pose.translation.y,
                         inst.pose.translation.z};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out << " " << fmt_double(inst.pose.rotation.m[r][c]);
      out << " " << fmt_double(t[r]);
    }
    out << "\n";
    out << "code " << fmt_double(inst.pose_code.r.x) << " " << fmt_double(inst.pose_code.r.y)
        << " " << fmt_double(inst.pose_code.r.z) << " " << fmt_double(inst.pose_code.t_z)
        << "\n";
    const std::vector<long long> runs = mask_to_rle(inst.mask);
    out << "mask rle " << inst.mask.w << " " << inst.mask.h << " " << runs.size();
    for (long long r : runs) out << " " << r;
    out << "\n";
  }
}

namespace {

std::string scene_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%04d.txt", index);
  return buf;
}

}  // namespace

DatasetGt read_dataset(const std::string& dir) {
  const std::filesystem::path root(dir);
  LineReader lr((root / "dataset.txt").string());
  lr.expect_header("pose6d-dataset");
  const auto img = lr.expect(3, "image dims");
  if (img[0] != "image") lr.fail("expected 'image W H'");
  DatasetGt data;
  data.image_w = static_cast<int>(lr.to_int(img[1]));
  data.image_h = static_cast<int>(lr.to_int(img[2]));
  const auto sc = lr.expect(2, "scenes count");
  if (sc[0] != "scenes") lr.fail("expected 'scenes N'");
  const long long n_scenes = lr.to_int(sc[1]);
  const auto cc = lr.expect(2, "classes count");
  if (cc[0] != "classes") lr.fail("expected 'classes K'");
  const long long n_classes = lr.to_int(cc[1]);
  std::vector<std::pair<int, std::string>> class_files;
  for (long long i = 0; i < n_classes; ++i) {
    const auto cl = lr.expect(3, "class entry");
    if (cl[0] != "class") lr.fail("expected 'class ID FILE'");
    class_files.emplace_back(static_cast<int>(lr.to_int(cl[1])), cl[2]);
  }

  data.k = read_intrinsics((root / "intrinsics.txt").string());
  for (const auto& [cid, file] : class_files) data.models[cid] = read_model((root / file).string());
  for (long long i = 0; i < n_scenes; ++i) {
    SceneGt scene = read_scene_gt((root / scene_file_name(static_cast<int>(i))).string());
    for (const GroundTruthInstance& inst : scene.instances) {
      if (inst.mask.w != data.image_w || inst.mask.h != data.image_h)
        throw std::runtime_error(scene_file_name(static_cast<int>(i)) +
                                 ": mask resolution disagrees with dataset image size");
      if (!data.models.count(inst.class_id))
        throw std::runtime_error(scene_file_name(static_cast<int>(i)) +
                                 ": instance references unknown class " +
                                 std::to_string(inst.class_id));
    }
    data.scenes.push_back(std::move(scene));
  }
  return data;
}

void write_dataset(const std::string& dir, const DatasetGt& data) {
  const std::filesystem::path root(dir);
  std::filesystem::create_directories(root);
  {
    std::ofstream out = open_out((root / "dataset.txt").string());
    out << "pose6d-dataset v1\n";
    out << "image " << data.image_w << " " << data.image_h << "\n";
    out << "scenes " << data.scenes.size() << "\n";
    out << "classes " << data.models.size() << "\n";
    for (const auto& [cid, model] : data.models)
      out << "class " << cid << " model_" << cid << ".txt\n";
  }
  write_intrinsics((root / "intrinsics.txt").string(), data.k);
  for (const auto& [cid, model] : data.models)
    write_model((root / ("model_" + std::to_string(cid) + ".txt")).string(), model);
  for (std::size_t i = 0; i < data.scenes.size(); ++i)
    write_scene_gt((root / scene_file_name(static_cast<int>(i))).string(), data.scenes[i]);
}

// --- synthesis -------------------------------------------------------------------------------

ShapeKind parse_shape(const std::string& name) {
  if (name == "box") return ShapeKind::box;
  if (name == "cylinder") return ShapeKind::cylinder;
  if (name == "blob" || name == "asymmetric-blob") return ShapeKind::asymmetric_blob;
  throw std::invalid_argument("unknown shape '" + name + "' (box|cylinder|blob)");
}

std::string shape_name(ShapeKind shape) {
  switch (shape) {
    case ShapeKind::box: return "box";
    case ShapeKind::cylinder: return "cylinder";
    case ShapeKind::asymmetric_blob: return "blob";
  }
  return "?";
}

SynthSpec read_synth_spec(const std::string& path) {
  LineReader lr(path);
  lr.expect_header("pose6d-synth");
  SynthSpec spec;
  spec.classes.clear();
  std::vector<std::string> t;
  while (lr.next(t)) {
    const std::string& key = t[0];
    if (key == "image" && t.size() == 3) {
      spec.image_w = static_cast<int>(lr.to_int(t[1]));
      spec.image_h = static_cast<int>(lr.to_int(t[2]));
    } else if (key == "intrinsics" && t.size() == 5) {
      spec.k = {lr.to_double(t[1]), lr.to_double(t[2]), lr.to_double(t[3]), lr.to_double(t[4])};
    } else if (key == "seed" && t.size() == 2) {
      spec.seed = lr.to_u64(t[1]);
    } else if (key == "scenes" && t.size() == 2) {
      spec.n_scenes = static_cast<int>(lr.to_int(t[1]));
    } else if (key == "tz" && t.size() == 3) {
      spec.pose.tz_min = lr.to_double(t[1]);
      spec.pose.tz_max = lr.to_double(t[2]);
    } else if (key == "theta_max" && t.size() == 2) {
      spec.pose.theta_max = lr.to_double(t[1]);
    } else if (key == "yaw_full" && t.size() == 2) {
      spec.pose.yaw_full = lr.to_int(t[1]) != 0;
    } else if (key == "margin" && t.size() == 2) {
      spec.pose.margin_px = lr.to_double(t[1]);
    } else if (key == "class" && t.size() == 4) {
      SynthClassSpec c;
      c.class_id = static_cast<int>(lr.to_int(t[1]));
      try {
        c.shape = parse_shape(t[2]);
      } catch (const std::invalid_argument& e) {
        lr.fail(e.what());
      }
      c.n_points = static_cast<int>(lr.to_int(t[3]));
      spec.classes.push_back(c);
    } else {
      lr.fail("unknown or malformed spec line '" + key + "'");
    }
  }
  if (spec.classes.empty()) lr.fail("spec declares no classes");
  return spec;
}

DatasetGt synthesize_dataset(const SynthSpec& spec, const std::string& out_dir) {
  if (spec.n_scenes < 1) throw std::invalid_argument("synthesize: need at least one scene");
  for (std::size_t i = 0; i < spec.classes.size(); ++i)
    for (std::size_t j = i + 1; j < spec.classes.size(); ++j)
      if (spec.classes[i].class_id == spec.classes[j].class_id)
        throw std::invalid_argument("synthesize: duplicate class id");

  DatasetGt data;
  data.image_w = spec.image_w;
  data.image_h = spec.image_h;
  data.k = spec.k;
  for (const SynthClassSpec& c : spec.classes)
    data.models[c.class_id] =
        make_model(c.shape, c.n_points, mix_seed(spec.seed, 1000 + static_cast<std::uint64_t>(c.class_id)));

  for (int s = 0; s < spec.n_scenes; ++s) {
    SceneGt scene;
    scene.image_id = s;
    for (const SynthClassSpec& c : spec.classes) {
      SplitMix64 rng(mix_seed(mix_seed(spec.seed, 3000 + static_cast<std::uint64_t>(s)),
                              500 + static_cast<std::uint64_t>(c.class_id)));
      const ObjectModel& model = data.models[c.class_id];
      bool placed = false;
      for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
        const Pose pose = sample_pose(spec.pose, spec.k, spec.image_w, spec.image_h, rng);
        try {
          scene.instances.push_back(
              render_instance(model, pose, spec.k, spec.image_w, spec.image_h, c.class_id));
          placed = true;
        } catch (const std::invalid_argument&) {
        }
      }
      if (!placed)
        throw std::runtime_error("synthesize: cannot place class " +
                                 std::to_string(c.class_id) + " in frame; increase margin");
    }
    data.scenes.push_back(std::move(scene));
  }
  write_dataset(out_dir, data);
  return data;
}

// --- perturbed detections -----------------------------------------------------------------------

std::vector<DetectionRecord> perturb_to_detections(const DatasetGt& data,
                                                   const PerturbOptions& opt) {
  const bool identity = !opt.gaussian && opt.rot_angle_rad == 0 && opt.trans_dist_m == 0;
  std::vector<DetectionRecord> dets;
  for (const SceneGt& scene : data.scenes) {
    for (std::size_t i = 0; i < scene.instances.size(); ++i) {
      const GroundTruthInstance& inst = scene.instances[i];
      DetectionRecord rec;
      rec.image_id = scene.image_id;
      rec.class_id = inst.class_id;
      rec.score = opt.score;
      if (identity) {
        rec.box = inst.bbox;
        rec.code = inst.pose_code;
        rec.mask = inst.mask;
      } else {
        const std::uint64_t base =
            mix_seed(opt.seed, static_cast<std::uint64_t>(scene.image_id) * 4096 + i);
        const ObjectModel& model = data.models.at(inst.class_id);
        bool done = false;
        for (int attempt = 0; attempt < 16 && !done; ++attempt) {
          const std::uint64_t s = mix_seed(base, static_cast<std::uint64_t>(attempt));
          const Pose p2 = opt.gaussian
                              ? perturb_pose(inst.pose, opt.rot_angle_rad, opt.trans_dist_m, s)
                              : perturb_pose_exact(inst.pose, opt.rot_angle_rad,
                                                   opt.trans_dist_m, s);
          try {
            const GroundTruthInstance r2 =
                render_instance(model, p2, data.k, data.image_w, data.image_h, inst.class_id);
            rec.box = r2.bbox;
            rec.code = r2.pose_code;
            rec.mask = r2.mask;
            done = true;
          } catch (const std::invalid_argument&) {
          }
        }
        if (!done)
          throw std::runtime_error("perturb: perturbed pose never fits the frame (scene " +
                                   std::to_string(scene.image_id) + ")");
      }
      dets.push_back(std::move(rec));
    }
  }
  return dets;
}

// --- evaluation -----------------------------------------------------------------------------------

namespace {

struct SceneAccum {
  std::map<int, MatchCounts> det05, det09, seg05, seg09;
  std::map<int, int> gt_count, matched, acc2d, acc5, accadd;
  int kept = 0;
};

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic_int next{0};
  const int workers = std::min(threads, n);
  for (int t = 0; t < workers; ++t)
    pool.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  for (std::thread& th : pool) th.join();
}

// Greedy score-ordered pairing of kept detections with gt instances of the
// same class; returns pairs of (det index, instance index).
std::vector<std::pair<int, int>> pair_for_pose(const std::vector<DetectionRecord>& dets,
                                               const std::vector<GroundTruthInstance>& insts,
                                               double pair_iou) {
  std::vector<int> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return dets[static_cast<std::size_t>(a)].score >
                                              dets[static_cast<std::size_t>(b)].score; });
  std::vector<char> used(insts.size(), 0);
  std::vector<std::pair<int, int>> pairs;
  for (int di : order) {
    const DetectionRecord& d = dets[static_cast<std::size_t>(di)];
    double best = 0;
    int best_gt = -1;
    for (std::size_t gi = 0; gi < insts.size(); ++gi) {
      if (used[gi] || insts[gi].class_id != d.class_id) continue;
      const double v = iou(d.box, insts[gi].bbox);
      if (v > best) {
        best = v;
        best_gt = static_cast<int>(gi);
      }
    }
    if (best_gt >= 0 && best >= pair_iou) {
      used[static_cast<std::size_t>(best_gt)] = 1;
      pairs.emplace_back(di, best_gt);
    }
  }
  return pairs;
}

void accumulate(std::map<int, MatchCounts>& into, const std::map<int, MatchCounts>& from) {
  for (const auto& [cid, c] : from) {
    MatchCounts& dst = into[cid];
    dst.tp += c.tp;
    dst.fp += c.fp;
    dst.fn += c.fn;
  }
}

}  // namespace

EvalReport evaluate_detections(const DatasetGt& data, const std::vector<DetectionRecord>& dets,
                               const EvalOptions& opt) {
  if (!(data.k.fx > 0) || !(data.k.fy > 0))
    throw std::invalid_argument("evaluate: missing or invalid intrinsics");
  std::map<int, std::size_t> scene_of_image;
  for (std::size_t i = 0; i < data.scenes.size(); ++i)
    scene_of_image[data.scenes[i].image_id] = i;

  // Score filter and grouping; unknown image or class references are errors.
  std::vector<std::vector<DetectionRecord>> per_scene(data.scenes.size());
  for (const DetectionRecord& d : dets) {
    const auto it = scene_of_image.find(d.image_id);
    if (it == scene_of_image.end())
      throw std::invalid_argument("evaluate: detection references unknown image id " +
                                  std::to_string(d.image_id));
    if (!data.models.count(d.class_id))
      throw std::invalid_argument("evaluate: detection references unknown class " +
                                  std::to_string(d.class_id) + " (no model)");
    if (d.score > opt.score_thresh) per_scene[it->second].push_back(d);
  }

  std::vector<SceneAccum> accums(data.scenes.size());
  parallel_for(static_cast<int>(data.scenes.size()), opt.threads, [&](int si) {
    const SceneGt& scene = data.scenes[static_cast<std::size_t>(si)];
    SceneAccum& acc = accums[static_cast<std::size_t>(si)];
    std::vector<DetectionRecord>& cand = per_scene[static_cast<std::size_t>(si)];

    // Per-class NMS.
    std::vector<DetectionRecord> kept;
    std::map<int, std::vector<int>> by_class;
    for (std::size_t i = 0; i < cand.size(); ++i)
      by_class[cand[i].class_id].push_back(static_cast<int>(i));
    for (const auto& [cid, idxs] : by_class) {
      std::vector<BBox> boxes;
      std::vector<double> scores;
      for (int i : idxs) {
        boxes.push_back(cand[static_cast<std::size_t>(i)].box);
        scores.push_back(cand[static_cast<std::size_t>(i)].score);
      }
      for (int k : nms(boxes, scores, opt.nms_thresh))
        kept.push_back(cand[static_cast<std::size_t>(idxs[static_cast<std::size_t>(k)])]);
    }
    acc.kept = static_cast<int>(kept.size());

    std::map<int, std::vector<GroundTruthInstance const*>> gt_by_class;
    for (const GroundTruthInstance& inst : scene.instances) {
      gt_by_class[inst.class_id].push_back(&inst);
      acc.gt_count[inst.class_id] += 1;
    }
    std::map<int, std::vector<DetectionRecord const*>> det_by_class;
    for (const DetectionRecord& d : kept) det_by_class[d.class_id].push_back(&d);

    std::vector<int> class_ids;
    for (const auto& [cid, _] : gt_by_class) class_ids.push_back(cid);
    for (const auto& [cid, _] : det_by_class)
      if (!gt_by_class.count(cid)) class_ids.push_back(cid);

    for (int cid : class_ids) {
      std::vector<Detection> preds;
      std::vector<GtBox> gts;
      std::vector<MaskDetection> mpreds;
      std::vector<GtMaskInstance> mgts;
      if (det_by_class.count(cid))
        for (const DetectionRecord* d : det_by_class[cid]) {
          preds.push_back({cid, d->score, d->box});
          if (d->mask) mpreds.push_back({cid, d->score, *d->mask});
        }
      if (gt_by_class.count(cid))
        for (const GroundTruthInstance* g : gt_by_class[cid]) {
          gts.push_back({cid, g->bbox});
          mgts.push_back({cid, g->mask});
        }
      acc.det05[cid] = match_detections(preds, gts, 0.5);
      acc.det09[cid] = match_detections(preds, gts, 0.9);
      acc.seg05[cid] = match_masks(mpreds, mgts, 0.5);
      acc.seg09[cid] = match_masks(mpreds, mgts, 0.9);
    }

    // Pose metrics over matched pairs only.
    const std::vector<std::pair<int, int>> pairs =
        pair_for_pose(kept, scene.instances, opt.pair_iou);
    for (const auto& [di, gi] : pairs) {
      const DetectionRecord& d = kept[static_cast<std::size_t>(di)];
      const GroundTruthInstance& g = scene.instances[static_cast<std::size_t>(gi)];
      const Pose est = decode_pose(d.code, d.box, data.k);
      const PoseJudgement j = judge_pose(data.models.at(g.class_id), g.pose, est, data.k);
      acc.matched[g.class_id] += 1;
      acc.acc2d[g.class_id] += j.accepted_2d;
      acc.acc5[g.class_id] += j.accepted_5cm5deg;
      acc.accadd[g.class_id] += j.accepted_add;
    }
  });

  // Deterministic merge in scene order.
  std::map<int, MatchCounts> det05, det09, seg05, seg09;
  std::map<int, int> gt_count, matched, acc2d, acc5, accadd;
  EvalReport rep;
  rep.score_thresh = opt.score_thresh;
  rep.nms_thresh = opt.nms_thresh;
  rep.n_scenes = static_cast<int>(data.scenes.size());
  for (const SceneAccum& acc : accums) {
    rep.n_detections_kept += acc.kept;
    accumulate(det05, acc.det05);
    accumulate(det09, acc.det09);
    accumulate(seg05, acc.seg05);
    accumulate(seg09, acc.seg09);
    for (const auto& [cid, v] : acc.gt_count) gt_count[cid] += v;
    for (const auto& [cid, v] : acc.matched) matched[cid] += v;
    for (const auto& [cid, v] : acc.acc2d) acc2d[cid] += v;
    for (const auto& [cid, v] : acc.acc5) acc5[cid] += v;
    for (const auto& [cid, v] : acc.accadd) accadd[cid] += v;
  }

  for (const auto& [cid, model] : data.models) {
    ClassEval ce;
    ce.class_id = cid;
    ce.n_gt = gt_count.count(cid) ? gt_count[cid] : 0;
    ce.n_matched = matched.count(cid) ? matched[cid] : 0;
    const double denom = ce.n_gt > 0 ? ce.n_gt : 1;
    ce.acc_2d = acc2d[cid] / denom;
    ce.acc_5cm5deg = acc5[cid] / denom;
    ce.acc_add = accadd[cid] / denom;
    ce.det_f1_05 = f1_from_counts(det05[cid]);
    ce.det_f1_09 = f1_from_counts(det09[cid]);
    ce.seg_f1_05 = f1_from_counts(seg05[cid]);
    ce.seg_f1_09 = f1_from_counts(seg09[cid]);
    rep.n_gt += ce.n_gt;
    rep.classes.push_back(ce);
  }

  rep.mean.class_id = -1;
  if (!rep.classes.empty()) {
    for (const ClassEval& ce : rep.classes) {
      rep.mean.n_gt += ce.n_gt;
      rep.mean.n_matched += ce.n_matched;
      rep.mean.acc_2d += ce.acc_2d;
      rep.mean.acc_5cm5deg += ce.acc_5cm5deg;
      rep.mean.acc_add += ce.acc_add;
      rep.mean.det_f1_05 += ce.det_f1_05;
      rep.mean.det_f1_09 += ce.det_f1_09;
      rep.mean.seg_f1_05 += ce.seg_f1_05;
      rep.mean.seg_f1_09 += ce.seg_f1_09;
    }
    const double nc = static_cast<double>(rep.classes.size());
    rep.mean.acc_2d /= nc;
    rep.mean.acc_5cm5deg /= nc;
    rep.mean.acc_add /= nc;
    rep.mean.det_f1_05 /= nc;
    rep.mean.det_f1_09 /= nc;
    rep.mean.seg_f1_05 /= nc;
    rep.mean.seg_f1_09 /= nc;
  }
  return rep;
}

namespace {

void report_row(std::string& out, const std::string& label, const ClassEval& ce) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%-6s %6d %8d  %8.6f %8.6f %8.6f  %8.6f %8.6f  %8.6f %8.6f\n", label.c_str(),
                ce.n_gt, ce.n_matched, ce.acc_2d, ce.acc_5cm5deg, ce.acc_add, ce.det_f1_05,
                ce.det_f1_09, ce.seg_f1_05, ce.seg_f1_09);
  out += buf;
}

}  // namespace

std::string EvalReport::to_text() const {
  std::string out = "pose6d evaluation report\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf), "scenes %d  gt instances %d  detections kept %d\n", n_scenes,
                n_gt, n_detections_kept);
  out += buf;
  std::snprintf(buf, sizeof(buf), "score threshold %.6f  nms threshold %.6f\n\n", score_thresh,
                nms_thresh);
  out += buf;
  out +=
      "class    n_gt  matched    pose2d  5cm5deg      add   det@0.5  det@0.9  seg@0.5  seg@0.9\n";
  for (const ClassEval& ce : classes) report_row(out, std::to_string(ce.class_id), ce);
  report_row(out, "mean", mean);
  return out;
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["score_thresh"] = score_thresh;
  j["nms_thresh"] = nms_thresh;
  j["scenes"] = n_scenes;
  j["gt_instances"] = n_gt;
  j["detections_kept"] = n_detections_kept;
  const auto class_json = [](const ClassEval& ce) {
    nlohmann::json c;
    c["class_id"] = ce.class_id;
    c["n_gt"] = ce.n_gt;
    c["n_matched"] = ce.n_matched;
    c["pose2d"] = ce.acc_2d;
    c["acc5cm5deg"] = ce.acc_5cm5deg;
    c["add"] = ce.acc_add;
    c["det_f1_iou05"] = ce.det_f1_05;
    c["det_f1_iou09"] = ce.det_f1_09;
    c["seg_f1_iou05"] = ce.seg_f1_05;
    c["seg_f1_iou09"] = ce.seg_f1_09;
    return c;
  };
  j["classes"] = nlohmann::json::array();
  for (const ClassEval& ce : classes) j["classes"].push_back(class_json(ce));
  j["mean"] = class_json(mean);
  return j.dump(2) + "\n";
}

// --- toy config ------------------------------------------------------------------------------------

ToyRunConfig default_toy_config() {
  ToyRunConfig cfg;
  cfg.data.shape = ShapeKind::asymmetric_blob;
  cfg.data.n_samples = 2000;
  cfg.data.n_points = 700;
  cfg.data.pose.tz_min = 0.5;
  cfg.data.pose.tz_max = 0.9;
  cfg.data.pose.theta_max = 0.5;
  cfg.data.pose.yaw_full = false;
  cfg.data.pose.margin_px = 100;
  cfg.data.k = {580, 580, 320, 240};
  cfg.data.seed = 1;
  return cfg;
}

ToyRunConfig read_toy_config(const std::string& path) {
  LineReader lr(path);
  lr.expect_header("pose6d-toy-config");
  ToyRunConfig cfg = default_toy_config();
  std::vector<std::string> t;
  while (lr.next(t)) {
    const std::string& key = t[0];
    if (key == "shape" && t.size() == 2) {
      try {
        cfg.data.shape = parse_shape(t[1]);
      } catch (const std::invalid_argument& e) {
        lr.fail(e.what());
      }
    } else if (key == "n_samples" && t.size() == 2) {
      cfg.data.n_samples = static_cast<int>(lr.to_int(t[1]));
    } else if (key == "n_points" && t.size() == 2) {
      cfg.data.n_points = static_cast<int>(lr.to_int(t[1]));
    } else if (key == "tz" && t.size() == 3) {
      cfg.data.pose.tz_min = lr.to_double(t[1]);
      cfg.data.pose.tz_max = lr.to_double(t[2]);
    } else if (key == "theta_max" && t.size() == 2) {
      cfg.data.pose.theta_max = lr.to_double(t[1]);
    } else if (key == "yaw_full" && t.size() == 2) {
      cfg.data.pose.yaw_full = lr.to_int(t[1]) != 0;
    } else if (key == "yaw_max" && t.size() == 2) {
      cfg.data.pose.yaw_max = lr.to_double(t[1]);
    } else if (key == "margin" && t.size() == 2) {
      cfg.data.pose.margin_px = lr.to_double(t[1]);
    } else if (key == "image" && t.size() == 3) {
      cfg.data.image_w = static_cast<int>(lr.to_int(t[1]));
      cfg.data.image_h = static_cast<int>(lr.to_int(t[2]));
    } else if (key == "intrinsics" && t.size() == 5) {
      cfg.data.k = {lr.to_double(t[1]), lr.to_double(t[2]), lr.to_double(t[3]),
                    lr.to_double(t[4])};
    } else if (key == "data_seed" && t.size() == 2) {
      cfg.data.seed = lr.to_u64(t[1]);
    } else if (key == "widths" && t.size() >= 2) {
      cfg.train.widths.clear();
      for (std::size_t i = 1; i < t.size(); ++i)
        cfg.train.widths.push_back(static_cast<int>(lr.to_int(t[i])));
    } else if (key == "learning_rate" && t.size() == 2) {
      cfg.train.learning_rate = lr.to_double(t[1]);
    } else if (key == "momentum" && t.size() == 2) {
      cfg.train.momentum = lr.to_double(t[1]);
    } else if (key == "weight_decay" && t.size() == 2) {
      cfg.train.weight_decay = lr.to_double(t[1]);
    } else if (key == "iterations" && t.size() == 2) {
      cfg.train.iterations = static_cast<int>(lr.to_int(t[1]));
    } else if (key == "lr_decay_step" && t.size() == 2) {
      cfg.train.lr_decay_step = static_cast<int>(lr.to_int(t[1]));
    } else if (key == "lr_decay_factor" && t.size() == 2) {
      cfg.train.lr_decay_factor = lr.to_double(t[1]);
    } else if (key == "batch_size" && t.size() == 2) {
      cfg.train.batch_size = static_cast<int>(lr.to_int(t[1]));
    } else if (key == "seed" && t.size() == 2) {
      cfg.train.seed = lr.to_u64(t[1]);
    } else if (key == "holdout" && t.size() == 2) {
      cfg.train.holdout_fraction = lr.to_double(t[1]);
    } else if (key == "p" && t.size() == 2) {
      cfg.loss.p = static_cast<int>(lr.to_int(t[1]));
    } else if (key == "beta" && t.size() == 2) {
      cfg.loss.beta = lr.to_double(t[1]);
    } else if (key == "out_checkpoint" && t.size() == 2) {
      cfg.out_checkpoint = t[1];
    } else if (key == "out_report" && t.size() == 2) {
      cfg.out_report = t[1];
    } else {
      lr.fail("unknown or malformed config line '" + key + "'");
    }
  }
  return cfg;
}

std::string error_report_text(const ErrorReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "toy pose head report\n"
                "train samples %d\n"
                "eval samples %d\n"
                "initial train loss %.6f\n"
                "final train loss %.6f\n"
                "median angular error deg %.6f\n"
                "median t_z error m %.6f\n"
                "median yaw error deg %.6f\n"
                "median off-axis error deg %.6f\n",
                r.n_train, r.n_eval, r.initial_loss, r.final_loss,
                r.median_ang_rad * 180.0 / kPi, r.median_tz_m, r.median_yaw_rad * 180.0 / kPi,
                r.median_offaxis_rad * 180.0 / kPi);
  return buf;
}

// --- gradient check suite -----------------------------------------------------------------------------

namespace {

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(1e-8, std::abs(a) + std::abs(b));
}

// Central finite differences of fn over x; compares against analytic.
template <typename Fn>
double fd_max_rel_err(std::vector<double>& x, const std::vector<double>& analytic, double eps,
                      Fn&& fn) {
  double worst = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double up = fn();
    x[i] = saved - eps;
    const double dn = fn();
    x[i] = saved;
    worst = std::max(worst, rel_err(analytic[i], (up - dn) / (2 * eps)));
  }
  return worst;
}

}  // namespace

bool run_gradcheck(double eps, std::ostream& out) {
  constexpr double kTol = 1e-4;
  constexpr int kTrials = 100;
  bool ok = true;
  const auto line = [&](const char* name, double worst) {
    out << name << " max rel err " << fmt_double(worst) << (worst <= kTol ? "" : "  FAIL")
        << "\n";
    if (worst > kTol) ok = false;
  };

  {  // pose loss, both norms, away from kinks
    for (int p = 1; p <= 2; ++p) {
      SplitMix64 rng(40 + static_cast<std::uint64_t>(p));
      LossWeights w;
      w.p = p;
      double worst = 0;
      for (int trial = 0; trial < kTrials; ++trial) {
        std::vector<double> x(4);
        PoseCode gt{{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)},
                    rng.uniform(0.5, 1.5)};
        for (int i = 0; i < 4; ++i) {
          double d = rng.uniform(0.05, 0.5) * (rng.next_double() < 0.5 ? -1 : 1);
          x[static_cast<std::size_t>(i)] = (i < 3 ? (i == 0   ? gt.r.x
                                                     : i == 1 ? gt.r.y
                                                              : gt.r.z)
                                                  : gt.t_z) +
                                           d;
        }
        const auto eval = [&]() {
          return pose_loss({{x[0], x[1], x[2]}, x[3]}, gt, w).loss;
        };
        const PoseLossResult res = pose_loss({{x[0], x[1], x[2]}, x[3]}, gt, w);
        const std::vector<double> analytic(res.grad.begin(), res.grad.end());
        worst = std::max(worst, fd_max_rel_err(x, analytic, eps, eval));
      }
      line(p == 1 ? "pose_loss p=1" : "pose_loss p=2", worst);
    }
  }

  {  // softmax cross entropy
    SplitMix64 rng(42);
    double worst = 0;
    for (int trial = 0; trial < kTrials; ++trial) {
      const int n = 4 + static_cast<int>(rng.next_below(7));
      std::vector<double> x(static_cast<std::size_t>(n));
      for (double& v : x) v = rng.uniform(-3, 3);
      const int label = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
      const auto eval = [&]() { return softmax_cross_entropy(x, label).loss; };
      worst = std::max(worst, fd_max_rel_err(x, softmax_cross_entropy(x, label).grad, eps, eval));
    }
    line("softmax_cross_entropy", worst);
  }

  {  // smooth l1
    SplitMix64 rng(43);
    double worst = 0;
    for (int trial = 0; trial < kTrials; ++trial) {
      std::vector<double> x(4), gt(4);
      for (int i = 0; i < 4; ++i) {
        gt[static_cast<std::size_t>(i)] = rng.uniform(-2, 2);
        x[static_cast<std::size_t>(i)] = gt[static_cast<std::size_t>(i)] + rng.uniform(-2, 2);
      }
      const auto eval = [&]() { return smooth_l1(x, gt).loss; };
      worst = std::max(worst, fd_max_rel_err(x, smooth_l1(x, gt).grad, eps, eval));
    }
    line("smooth_l1", worst);
  }

  {  // binary cross entropy on 28x28 masks
    SplitMix64 rng(44);
    double worst = 0;
    for (int trial = 0; trial < kTrials; ++trial) {
      std::vector<double> x(28 * 28);
      std::vector<std::uint8_t> gt(28 * 28);
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.uniform(0.05, 0.95);
        gt[i] = rng.next_double() < 0.5 ? 0 : 1;
      }
      const auto eval = [&]() { return binary_cross_entropy_mask(x, gt).loss; };
      worst = std::max(worst, fd_max_rel_err(x, binary_cross_entropy_mask(x, gt).grad, eps, eval));
    }
    line("binary_cross_entropy_mask", worst);
  }

  {  // full MLP backprop on small heads
    SplitMix64 rng(45);
    LossWeights w;
    w.p = 2;
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
      const MLP mlp = init_mlp({6, 8, 10, 6, 4}, rng.next_u64());
      ToySample s;
      s.features.resize(6);
      for (double& v : s.features) v = rng.uniform(-1, 1);
      s.target = {{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)},
                  rng.uniform(0.5, 1.5)};
      worst = std::max(worst, grad_check(mlp, s, eps, w));
    }
    line("mlp_backprop", worst);
  }

  out << (ok ? "gradcheck PASS\n" : "gradcheck FAIL\n");
  return ok;
}

}  // namespace pose6d
