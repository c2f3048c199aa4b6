#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "waveplanes/errors.hpp"
#include "waveplanes/image_io.hpp"
#include "waveplanes/render.hpp"

namespace wvpl {

enum class Split : uint8_t { Train = 0, Val, Test };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

struct FrameRecord {
  std::string file_path;  // as stored in the json, no extension
  std::array<double, 16> pose{};
  double time = 0.0;
  Split split = Split::Train;
};

/// Frames plus decoded targets. `raw` keeps the 8-bit RGBA exactly as on
/// disk; `images` holds the floats composited over `background`.
struct Dataset {
  double camera_angle_x = 0.0;
  int width = 0;
  int height = 0;
  Background background = Background::White;
  std::vector<FrameRecord> frames;
  std::vector<PngImage> raw;
  std::vector<std::vector<float>> images;  // w*h*3 composited rgb
  std::vector<std::vector<float>> alphas;  // w*h

  std::vector<size_t> split_indices(Split s) const {
    std::vector<size_t> idx;
    for (size_t i = 0; i < frames.size(); ++i)
      if (frames[i].split == s) idx.push_back(i);
    return idx;
  }
};

namespace detail {

inline void composite_frame(const PngImage& raw, Background bg,
                            std::vector<float>& rgb, std::vector<float>& alpha) {
  const auto bgc = background_rgb(bg);
  const size_t n = static_cast<size_t>(raw.width) * raw.height;
  rgb.resize(n * 3);
  alpha.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const uint8_t* px = raw.pixels.data() + i * raw.channels;
    const float a = raw.channels == 4 ? px[3] / 255.0f : 1.0f;
    alpha[i] = a;
    for (int c = 0; c < 3; ++c)
      rgb[i * 3 + c] = a * (px[c] / 255.0f) + (1.0f - a) * float(bgc[c]);
  }
}

inline std::array<double, 16> parse_pose(const nlohmann::json& m,
                                         const std::string& where) {
  if (!m.is_array() || m.size() != 4)
    throw DatasetError("transform_matrix must be 4x4 in " + where);
  std::array<double, 16> pose{};
  for (int r = 0; r < 4; ++r) {
    const auto& row = m[r];
    if (!row.is_array() || row.size() != 4)
      throw DatasetError("transform_matrix must be 4x4 in " + where);
    for (int c = 0; c < 4; ++c) {
      pose[r * 4 + c] = row[c].get<double>();
      if (!std::isfinite(pose[r * 4 + c]))
        throw DatasetError("non-finite transform entry in " + where);
    }
  }
  return pose;
}

}  // namespace detail

/// D-NeRF-style directory: transforms_{train,val,test}.json, each frame with
/// file_path (extension-less), transform_matrix, and time in [0,1].
inline Dataset load_dnerf(const std::string& dir, Background background) {
  namespace fs = std::filesystem;
  Dataset ds;
  ds.background = background;
  bool have_angle = false;
  for (Split split : {Split::Train, Split::Val, Split::Test}) {
    const fs::path jpath = fs::path(dir) / ("transforms_" + std::string(split_name(split)) + ".json");
    std::ifstream in(jpath);
    if (!in) throw DatasetError("missing dataset file: " + jpath.string());
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw DatasetError("invalid json in " + jpath.string() + ": " + e.what());
    }
    if (!doc.contains("camera_angle_x"))
      throw DatasetError("camera_angle_x missing in " + jpath.string());
    const double angle = doc["camera_angle_x"].get<double>();
    if (!have_angle) {
      ds.camera_angle_x = angle;
      have_angle = true;
    } else if (std::abs(angle - ds.camera_angle_x) > 1e-9) {
      throw DatasetError("camera_angle_x differs across splits in " + dir);
    }
    for (const auto& fr : doc.value("frames", nlohmann::json::array())) {
      FrameRecord rec;
      rec.split = split;
      if (!fr.contains("file_path"))
        throw DatasetError("frame without file_path in " + jpath.string());
      rec.file_path = fr["file_path"].get<std::string>();
      rec.pose = detail::parse_pose(fr.at("transform_matrix"), jpath.string());
      rec.time = fr.value("time", 0.0);
      if (rec.time < 0.0 || rec.time > 1.0)
        throw DatasetError("frame time outside [0,1] in " + jpath.string());
      const fs::path img_path = fs::path(dir) / (rec.file_path + ".png");
      PngImage img = read_png(img_path.lexically_normal().string());
      if (ds.width == 0) {
        ds.width = img.width;
        ds.height = img.height;
      } else if (img.width != ds.width || img.height != ds.height) {
        throw DatasetError("image size mismatch at " + img_path.string());
      }
      ds.frames.push_back(std::move(rec));
      ds.images.emplace_back();
      ds.alphas.emplace_back();
      detail::composite_frame(img, background, ds.images.back(), ds.alphas.back());
      ds.raw.push_back(std::move(img));
    }
  }
  return ds;
}

/// Writes the dataset back out in the same layout (8-bit RGBA + three jsons).
inline void save_dnerf(const Dataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (Split split : {Split::Train, Split::Val, Split::Test}) {
    nlohmann::json doc;
    doc["camera_angle_x"] = ds.camera_angle_x;
    doc["frames"] = nlohmann::json::array();
    for (size_t i : ds.split_indices(split)) {
      const auto& rec = ds.frames[i];
      nlohmann::json fr;
      fr["file_path"] = rec.file_path;
      fr["time"] = rec.time;
      auto m = nlohmann::json::array();
      for (int r = 0; r < 4; ++r) {
        auto row = nlohmann::json::array();
        for (int c = 0; c < 4; ++c) row.push_back(rec.pose[r * 4 + c]);
        m.push_back(row);
      }
      fr["transform_matrix"] = m;
      doc["frames"].push_back(fr);
      const fs::path img_path = fs::path(dir) / (rec.file_path + ".png");
      fs::create_directories(img_path.parent_path());
      write_png(img_path.lexically_normal().string(), ds.raw[i]);
    }
    std::ofstream out(fs::path(dir) /
                      ("transforms_" + std::string(split_name(split)) + ".json"));
    out << doc.dump(2) << '\n';
    if (!out) throw DatasetError("cannot write transforms json under " + dir);
  }
}

// ---------------------------------------------------------------------------
// Synthetic scene: a Gaussian density blob moving on a line, with a constant
// or axis-gradient color field. Ground truth comes from the same rendering
// sum as the model, densely sampled.

struct SyntheticSceneSpec {
  std::array<double, 3> center_start{-0.5, 0.0, 0.0};
  std::array<double, 3> center_end{0.5, 0.0, 0.0};
  double radius = 0.35;
  double peak_density = 15.0;
  std::array<double, 3> color_a{0.9, 0.35, 0.2};
  std::array<double, 3> color_b{0.2, 0.4, 0.9};
  bool gradient = true;  // blend a->b along x, else constant color_a
  std::array<double, 3> bbox_min{-1.5, -1.5, -1.5};
  std::array<double, 3> bbox_max{1.5, 1.5, 1.5};
  int train_frames = 8;
  int test_frames = 2;
  int width = 32;
  int height = 32;
  double fov_x = 0.8;
  double cam_distance = 4.0;
  double cam_elevation = 0.3;  // radians above the equator
  double near = 2.0;
  double far = 6.0;
  Background background = Background::White;
  int gt_samples = 192;  // 4x the training default
};

inline std::array<double, 3> blob_center(const SyntheticSceneSpec& s, double t) {
  std::array<double, 3> c;
  for (int i = 0; i < 3; ++i)
    c[i] = s.center_start[i] + t * (s.center_end[i] - s.center_start[i]);
  return c;
}

inline double blob_density(const SyntheticSceneSpec& s, const std::array<double, 3>& p,
                           double t) {
  const auto c = blob_center(s, t);
  double d2 = 0;
  for (int i = 0; i < 3; ++i) d2 += (p[i] - c[i]) * (p[i] - c[i]);
  return s.peak_density * std::exp(-d2 / (2.0 * s.radius * s.radius));
}

inline std::array<double, 3> blob_color(const SyntheticSceneSpec& s,
                                        const std::array<double, 3>& p) {
  if (!s.gradient) return s.color_a;
  const double span = s.bbox_max[0] - s.bbox_min[0];
  double u = (p[0] - s.bbox_min[0]) / span;
  u = u < 0 ? 0 : (u > 1 ? 1 : u);
  std::array<double, 3> c;
  for (int i = 0; i < 3; ++i) c[i] = s.color_a[i] + u * (s.color_b[i] - s.color_a[i]);
  return c;
}

inline void validate_scene_spec(const SyntheticSceneSpec& s) {
  for (double t : {0.0, 1.0}) {
    const auto c = blob_center(s, t);
    for (int i = 0; i < 3; ++i)
      if (c[i] - s.radius < s.bbox_min[i] || c[i] + s.radius > s.bbox_max[i])
        throw ConfigError("synthetic blob leaves the bounding box");
  }
  if (s.train_frames < 1 || s.width < 1 || s.height < 1 || s.gt_samples < 1 ||
      !(s.near < s.far))
    throw ConfigError("invalid synthetic scene spec");
}

/// Orbit camera at the given azimuth, looking at the origin (OpenGL -z).
inline std::array<double, 16> orbit_pose(const SyntheticSceneSpec& s, double azimuth) {
  const double ce = std::cos(s.cam_elevation), se = std::sin(s.cam_elevation);
  const std::array<double, 3> eye{s.cam_distance * ce * std::sin(azimuth),
                                  s.cam_distance * se,
                                  s.cam_distance * ce * std::cos(azimuth)};
  std::array<double, 3> zc;  // camera +z points away from the target
  double n = 0;
  for (int i = 0; i < 3; ++i) n += eye[i] * eye[i];
  n = std::sqrt(n);
  for (int i = 0; i < 3; ++i) zc[i] = eye[i] / n;
  const std::array<double, 3> up{0, 1, 0};
  std::array<double, 3> xc{up[1] * zc[2] - up[2] * zc[1],
                           up[2] * zc[0] - up[0] * zc[2],
                           up[0] * zc[1] - up[1] * zc[0]};
  n = std::sqrt(xc[0] * xc[0] + xc[1] * xc[1] + xc[2] * xc[2]);
  for (auto& v : xc) v /= n;
  const std::array<double, 3> yc{zc[1] * xc[2] - zc[2] * xc[1],
                                 zc[2] * xc[0] - zc[0] * xc[2],
                                 zc[0] * xc[1] - zc[1] * xc[0]};
  std::array<double, 16> pose{};
  for (int r = 0; r < 3; ++r) {
    pose[r * 4 + 0] = xc[r];
    pose[r * 4 + 1] = yc[r];
    pose[r * 4 + 2] = zc[r];
    pose[r * 4 + 3] = eye[r];
  }
  pose[15] = 1.0;
  return pose;
}

namespace detail {

/// Renders one analytic frame: straight (non-composited) rgb plus alpha,
/// using the model's own ray generation, stratification and compositing.
inline void render_synthetic_frame(const SyntheticSceneSpec& s,
                                   const std::array<double, 16>& pose, double t,
                                   std::vector<float>& straight,
                                   std::vector<float>& alpha) {
  Camera cam = make_camera(pose, s.fov_x, s.width, s.height, s.background);
  validate_camera(cam);
  straight.resize(static_cast<size_t>(s.width) * s.height * 3);
  alpha.resize(static_cast<size_t>(s.width) * s.height);
  std::vector<double> ts;
  std::vector<double> sigma(s.gt_samples), rgb(static_cast<size_t>(s.gt_samples) * 3),
      delta(s.gt_samples);
  for (int py = 0; py < s.height; ++py)
    for (int px = 0; px < s.width; ++px) {
      const Ray ray = generate_ray(cam, px, py, s.near, s.far);
      double d;
      stratified_samples(ray.near, ray.far, s.gt_samples, false, 0, ts, d);
      for (int i = 0; i < s.gt_samples; ++i) {
        const std::array<double, 3> p{ray.origin[0] + ts[i] * ray.dir[0],
                                      ray.origin[1] + ts[i] * ray.dir[1],
                                      ray.origin[2] + ts[i] * ray.dir[2]};
        sigma[i] = blob_density(s, p, t);
        const auto c = blob_color(s, p);
        for (int ch = 0; ch < 3; ++ch) rgb[i * 3 + ch] = c[ch];
        delta[i] = d;
      }
      double out[3], resid;
      render_ray(sigma.data(), rgb.data(), delta.data(), s.gt_samples,
                 {0.0, 0.0, 0.0}, out, resid);
      const size_t idx = static_cast<size_t>(py) * s.width + px;
      const double a = 1.0 - resid;
      alpha[idx] = static_cast<float>(a);
      for (int ch = 0; ch < 3; ++ch)
        straight[idx * 3 + ch] = static_cast<float>(a > 0 ? out[ch] / a : 0.0);
    }
}

}  // namespace detail

/// Generates the scene as a dataset: targets are quantized to 8-bit RGBA the
/// way they would live on disk, then composited over the background, so a
/// save/load round trip reproduces them bit-exactly.
inline Dataset gen_synthetic(const SyntheticSceneSpec& s) {
  validate_scene_spec(s);
  Dataset ds;
  ds.camera_angle_x = s.fov_x;
  ds.width = s.width;
  ds.height = s.height;
  ds.background = s.background;
  const int total = s.train_frames + s.test_frames;
  std::vector<float> straight, alpha;
  for (int i = 0; i < total; ++i) {
    const bool test = i >= s.train_frames;
    const int j = test ? i - s.train_frames : i;
    FrameRecord rec;
    rec.split = test ? Split::Test : Split::Train;
    // Test frames reuse training-ring azimuths but hold out interior times,
    // the usual protocol for monocular dynamic captures.  A handful of orbit
    // views cannot constrain geometry between azimuths, so a novel-view test
    // split would score view sparsity rather than the time model.
    const double az = 2.0 * M_PI * (test ? j % s.train_frames : j) / s.train_frames;
    rec.time = test ? (j + 0.5) / double(s.test_frames)
                    : (s.train_frames > 1 ? j / double(s.train_frames - 1) : 0.0);
    rec.pose = orbit_pose(s, az);
    rec.file_path = std::string(test ? "./test/r_" : "./train/r_") + std::to_string(j);
    detail::render_synthetic_frame(s, rec.pose, rec.time, straight, alpha);
    PngImage img;
    img.width = s.width;
    img.height = s.height;
    img.channels = 4;
    img.pixels.resize(static_cast<size_t>(s.width) * s.height * 4);
    for (size_t p = 0; p < alpha.size(); ++p) {
      for (int c = 0; c < 3; ++c)
        img.pixels[p * 4 + c] = quantize_u8(straight[p * 3 + c]);
      img.pixels[p * 4 + 3] = quantize_u8(alpha[p]);
    }
    ds.frames.push_back(std::move(rec));
    ds.images.emplace_back();
    ds.alphas.emplace_back();
    detail::composite_frame(img, s.background, ds.images.back(), ds.alphas.back());
    ds.raw.push_back(std::move(img));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Metrics.

constexpr double kPsnrCap = 99.0;

inline double psnr(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size() || a.empty())
    throw MetricError("psnr inputs must be nonempty and equal-sized");
  double sq = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = double(a[i]) - double(b[i]);
    sq += d * d;
  }
  const double mse = sq / double(a.size());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

/// PSNR over the pixels selected by `mask` (all three channels per pixel).
inline double psnr_masked(const std::vector<float>& a, const std::vector<float>& b,
                          const std::vector<uint8_t>& mask) {
  if (a.size() != b.size() || a.size() != mask.size() * 3)
    throw MetricError("psnr_masked inputs disagree on shape");
  double sq = 0;
  size_t n = 0;
  for (size_t p = 0; p < mask.size(); ++p) {
    if (!mask[p]) continue;
    n += 3;
    for (int c = 0; c < 3; ++c) {
      const double d = double(a[p * 3 + c]) - double(b[p * 3 + c]);
      sq += d * d;
    }
  }
  if (n == 0) return kPsnrCap;  // empty region: nothing to penalize
  const double mse = sq / double(n);
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

/// Foreground = alpha > 0.5 dilated by a square structuring element of the
/// given radius; background is the complement, so the masks partition.
inline std::pair<std::vector<uint8_t>, std::vector<uint8_t>> split_fg_bg(
    const std::vector<float>& alpha, int width, int height, int radius = 5) {
  if (alpha.size() != static_cast<size_t>(width) * height)
    throw MetricError("alpha size does not match image dims");
  std::vector<uint8_t> seed(alpha.size());
  for (size_t i = 0; i < alpha.size(); ++i) seed[i] = alpha[i] > 0.5f ? 1 : 0;
  // square SE separates into a horizontal then a vertical run-max
  std::vector<uint8_t> tmp(alpha.size(), 0), fg(alpha.size(), 0);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      uint8_t v = 0;
      for (int dx = -radius; dx <= radius && !v; ++dx) {
        const int xx = x + dx;
        if (xx >= 0 && xx < width && seed[y * width + xx]) v = 1;
      }
      tmp[y * width + x] = v;
    }
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      uint8_t v = 0;
      for (int dy = -radius; dy <= radius && !v; ++dy) {
        const int yy = y + dy;
        if (yy >= 0 && yy < height && tmp[yy * width + x]) v = 1;
      }
      fg[y * width + x] = v;
    }
  std::vector<uint8_t> bg(alpha.size());
  for (size_t i = 0; i < alpha.size(); ++i) bg[i] = fg[i] ? 0 : 1;
  return {fg, bg};
}

struct EvalOptions {
  int samples_per_ray = 48;
  double near = 2.0;
  double far = 6.0;
  int workers = 1;
  int dilation_radius = 5;
};

struct EvalReport {
  std::vector<size_t> frame_indices;
  std::vector<double> frame_times;
  std::vector<double> psnr_whole, psnr_fg, psnr_bg;
  double mean_whole = 0, mean_fg = 0, mean_bg = 0;
};

/// Renders every test frame at its time and scores it against the stored
/// targets; fg/bg masks come from the ground-truth alpha.
template <typename T>
EvalReport evaluate(const ModelConfig& cfg, const FeaturePlaneCache<T>& cache,
                    const ColorBasisDecoder<T>& dec, const Dataset& ds,
                    const EvalOptions& opt) {
  const auto test = ds.split_indices(Split::Test);
  if (test.empty()) throw DatasetError("dataset has no test frames");
  EvalReport rep;
  const double focal = focal_from_fov(ds.camera_angle_x, ds.width);
  for (size_t i : test) {
    Camera cam;
    cam.pose = ds.frames[i].pose;
    cam.focal = focal;
    cam.width = ds.width;
    cam.height = ds.height;
    cam.background = ds.background;
    validate_camera(cam);
    RenderOptions ropt;
    ropt.samples_per_ray = opt.samples_per_ray;
    ropt.near = opt.near;
    ropt.far = opt.far;
    ropt.jitter = false;
    ropt.workers = opt.workers;
    const Image img = render_image(cfg, cache, dec, cam, ds.frames[i].time, ropt);
    const auto [fg, bg] =
        split_fg_bg(ds.alphas[i], ds.width, ds.height, opt.dilation_radius);
    rep.frame_indices.push_back(i);
    rep.frame_times.push_back(ds.frames[i].time);
    rep.psnr_whole.push_back(psnr(img.rgb, ds.images[i]));
    rep.psnr_fg.push_back(psnr_masked(img.rgb, ds.images[i], fg));
    rep.psnr_bg.push_back(psnr_masked(img.rgb, ds.images[i], bg));
  }
  const auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / double(v.size());
  };
  rep.mean_whole = mean(rep.psnr_whole);
  rep.mean_fg = mean(rep.psnr_fg);
  rep.mean_bg = mean(rep.psnr_bg);
  return rep;
}

inline nlohmann::json eval_report_json(const EvalReport& rep) {
  nlohmann::json doc;
  doc["frames"] = nlohmann::json::array();
  for (size_t i = 0; i < rep.frame_indices.size(); ++i) {
    doc["frames"].push_back({{"frame", rep.frame_indices[i]},
                             {"time", rep.frame_times[i]},
                             {"psnr", rep.psnr_whole[i]},
                             {"psnr_fg", rep.psnr_fg[i]},
                             {"psnr_bg", rep.psnr_bg[i]}});
  }
  doc["mean"] = {{"psnr", rep.mean_whole},
                 {"psnr_fg", rep.mean_fg},
                 {"psnr_bg", rep.mean_bg}};
  return doc;
}

/// Float image to 8-bit RGB(A) rows for PNG export.
inline PngImage to_png_image(const Image& img, bool with_alpha = false) {
  PngImage out;
  out.width = img.width;
  out.height = img.height;
  out.channels = with_alpha ? 4 : 3;
  const size_t n = static_cast<size_t>(img.width) * img.height;
  out.pixels.resize(n * out.channels);
  for (size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c)
      out.pixels[i * out.channels + c] = quantize_u8(img.rgb[i * 3 + c]);
    if (with_alpha) out.pixels[i * 4 + 3] = quantize_u8(img.alpha[i]);
  }
  return out;
}

}  // namespace wvpl
