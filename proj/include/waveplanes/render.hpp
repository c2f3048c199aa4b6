#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "waveplanes/decoder.hpp"
#include "waveplanes/errors.hpp"
#include "waveplanes/field.hpp"
#include "waveplanes/rng.hpp"
#include "waveplanes/threading.hpp"

namespace wvpl {

enum class Background : uint8_t { White = 0, Black };

inline const char* background_name(Background b) {
  return b == Background::White ? "white" : "black";
}

inline Background background_from_name(const std::string& s) {
  if (s == "white") return Background::White;
  if (s == "black") return Background::Black;
  throw ConfigError("background must be white or black, got " + s);
}

inline std::array<double, 3> background_rgb(Background b) {
  return b == Background::White ? std::array<double, 3>{1, 1, 1}
                                : std::array<double, 3>{0, 0, 0};
}

/// Pinhole camera, OpenGL convention: camera looks down its local -z axis.
struct Camera {
  std::array<double, 16> pose{};  // row-major camera-to-world
  double focal = 0;               // pixels
  int width = 0;
  int height = 0;
  Background background = Background::White;
};

inline double focal_from_fov(double fov_x, int width) {
  return 0.5 * width / std::tan(0.5 * fov_x);
}

inline Camera make_camera(const std::array<double, 16>& pose, double fov_x, int width,
                          int height, Background bg) {
  Camera cam;
  cam.pose = pose;
  cam.focal = focal_from_fov(fov_x, width);
  cam.width = width;
  cam.height = height;
  cam.background = bg;
  return cam;
}

/// Rotation block must be orthonormal to 1e-4.
inline void validate_camera(const Camera& cam) {
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      double dot = 0;
      for (int r = 0; r < 3; ++r) dot += cam.pose[r * 4 + a] * cam.pose[r * 4 + b];
      const double want = a == b ? 1.0 : 0.0;
      if (std::abs(dot - want) > 1e-4)
        throw DatasetError("camera rotation block is not orthonormal");
    }
  for (double v : cam.pose)
    if (!std::isfinite(v)) throw DatasetError("camera pose contains non-finite values");
}

struct Ray {
  std::array<double, 3> origin{};
  std::array<double, 3> dir{};  // unit length
  double near = 0;
  double far = 0;
};

/// Ray through the center of pixel (px, py); py indexes rows from the top.
inline Ray generate_ray(const Camera& cam, int px, int py, double near, double far) {
  const double x = (px + 0.5 - 0.5 * cam.width) / cam.focal;
  const double y = -(py + 0.5 - 0.5 * cam.height) / cam.focal;
  const double z = -1.0;
  const double inv_len = 1.0 / std::sqrt(x * x + y * y + z * z);
  const double dc[3] = {x * inv_len, y * inv_len, z * inv_len};
  Ray r;
  for (int i = 0; i < 3; ++i) {
    r.dir[i] = cam.pose[i * 4 + 0] * dc[0] + cam.pose[i * 4 + 1] * dc[1] +
               cam.pose[i * 4 + 2] * dc[2];
    r.origin[i] = cam.pose[i * 4 + 3];
  }
  r.near = near;
  r.far = far;
  return r;
}

/// n equal bins over [near, far]; bin centers when jitter is off (evaluation),
/// uniform within each bin when on (training). delta is the shared bin width.
inline void stratified_samples(double near, double far, int n, bool jitter,
                               uint64_t seed, std::vector<double>& ts, double& delta) {
  delta = (far - near) / n;
  ts.resize(n);
  for (int i = 0; i < n; ++i) {
    const double u = jitter ? hash_unit(seed, static_cast<uint64_t>(i)) : 0.5;
    ts[i] = near + (i + u) * delta;
  }
}

/// Absorption-emission compositing:
///   C = sum_i T_i (1 - exp(-sigma_i delta_i)) c_i,  T_i = exp(-sum_{j<i} ...)
/// Pixel = C + residual transmittance * background; alpha = 1 - residual.
template <typename T>
void render_ray(const T* sigma, const T* rgb, const T* delta, int n,
                const std::array<double, 3>& background, T out[3], T& residual_t) {
  double transmittance = 1.0;
  double c[3] = {0, 0, 0};
  for (int i = 0; i < n; ++i) {
    const double att = std::exp(-double(sigma[i]) * double(delta[i]));
    const double weight = transmittance * (1.0 - att);
    for (int ch = 0; ch < 3; ++ch) c[ch] += weight * double(rgb[i * 3 + ch]);
    transmittance *= att;
  }
  for (int ch = 0; ch < 3; ++ch)
    out[ch] = static_cast<T>(c[ch] + transmittance * background[ch]);
  residual_t = static_cast<T>(transmittance);
}

struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> rgb;    // (row * width + col) * 3
  std::vector<float> alpha;  // row * width + col

  Image() = default;
  Image(int w, int h)
      : width(w), height(h), rgb(static_cast<size_t>(w) * h * 3, 0.f),
        alpha(static_cast<size_t>(w) * h, 0.f) {}
};

struct RenderOptions {
  int samples_per_ray = 48;
  double near = 2.0;
  double far = 6.0;
  bool jitter = false;  // evaluation renders use bin centers
  uint64_t seed = 0;
  int workers = 1;
};

/// Renders one frame at time t. Pure over an immutable cache + decoder
/// snapshot; rows are processed in parallel, each pixel independently.
template <typename T>
Image render_image(const ModelConfig& cfg, const FeaturePlaneCache<T>& cache,
                   const ColorBasisDecoder<T>& dec, const Camera& cam, double t,
                   const RenderOptions& opt) {
  Image img(cam.width, cam.height);
  const auto bg = background_rgb(cam.background);
  parallel_chunks(cam.height, opt.workers, [&](int row_begin, int row_end, int) {
    std::vector<double> ts;
    std::vector<T> sigma(opt.samples_per_ray);
    std::vector<T> rgb(static_cast<size_t>(opt.samples_per_ray) * 3);
    std::vector<T> delta(opt.samples_per_ray);
    BasisEval<T> ev;
    for (int py = row_begin; py < row_end; ++py) {
      for (int px = 0; px < cam.width; ++px) {
        const Ray ray = generate_ray(cam, px, py, opt.near, opt.far);
        const uint64_t pixel_seed =
            splitmix64(opt.seed ^ (static_cast<uint64_t>(py) << 32) ^
                       static_cast<uint64_t>(px));
        double d;
        stratified_samples(ray.near, ray.far, opt.samples_per_ray, opt.jitter,
                           pixel_seed, ts, d);
        const T dir[3] = {static_cast<T>(ray.dir[0]), static_cast<T>(ray.dir[1]),
                          static_cast<T>(ray.dir[2])};
        compute_basis(dec, dir, ev);
        for (int i = 0; i < opt.samples_per_ray; ++i) {
          const double px3 = ray.origin[0] + ts[i] * ray.dir[0];
          const double py3 = ray.origin[1] + ts[i] * ray.dir[1];
          const double pz3 = ray.origin[2] + ts[i] * ray.dir[2];
          const SamplePoint q = normalize_point(cfg, px3, py3, pz3, t);
          auto fused = sample_field(cfg, cache, q);
          T s;
          decode_with_basis(dec, fused.data(), ev, &rgb[i * 3], s);
          sigma[i] = s;
          delta[i] = static_cast<T>(d);
        }
        T out[3], resid;
        render_ray(sigma.data(), rgb.data(), delta.data(), opt.samples_per_ray, bg, out,
                   resid);
        const size_t idx = static_cast<size_t>(py) * cam.width + px;
        for (int ch = 0; ch < 3; ++ch)
          img.rgb[idx * 3 + ch] = static_cast<float>(out[ch]);
        img.alpha[idx] = static_cast<float>(T(1) - resid);
      }
    }
  });
  return img;
}

/// Zeroes every space-time pyramid so their features reconstruct to exactly 1,
/// isolating the static component of the scene.
template <typename T>
WaveletField<T> static_decomposition(const WaveletField<T>& field) {
  WaveletField<T> out = field;
  const auto ids = active_planes(out.config);
  for (size_t p = 0; p < ids.size(); ++p)
    if (is_space_time(ids[p]))
      for_each_grid(out.planes[p], [](Grid<T>& g) { g.fill(T(0)); });
  return out;
}

}  // namespace wvpl
