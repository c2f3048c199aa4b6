#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "waveplanes/errors.hpp"
#include "waveplanes/grid.hpp"
#include "waveplanes/wavelets.hpp"

namespace wvpl {

/// Plane order is fixed everywhere (iteration, serialization, gradients).
enum class PlaneId : uint8_t { XY = 0, XZ, YZ, XT, YT, ZT };

inline bool is_space_time(PlaneId c) { return c >= PlaneId::XT; }

inline const char* plane_name(PlaneId c) {
  static const char* names[] = {"xy", "xz", "yz", "xt", "yt", "zt"};
  return names[static_cast<int>(c)];
}

enum class Fusion : uint8_t { HP = 0, ZMM, ZAM };

inline const char* fusion_name(Fusion f) {
  static const char* names[] = {"hp", "zmm", "zam"};
  return names[static_cast<int>(f)];
}

inline Fusion fusion_from_name(const std::string& s) {
  if (s == "hp") return Fusion::HP;
  if (s == "zmm") return Fusion::ZMM;
  if (s == "zam") return Fusion::ZAM;
  throw ConfigError("unknown fusion scheme: " + s);
}

/// Model hyperparameters shared by the field, decoder, codec, and trainer.
struct ModelConfig {
  int feature_len = 16;  // B
  int levels = 2;        // N
  int spatial_rows = 64;
  int spatial_cols = 64;
  int time_res = 64;
  std::vector<int> scales = {1, 2};  // S, ascending subset of 1..N
  std::string family = "db2";
  Fusion fusion = Fusion::ZMM;
  std::vector<double> k;  // per-level scaling, k[0] = 1 for the father
  std::array<double, 3> bbox_min = {-1.5, -1.5, -1.5};
  std::array<double, 3> bbox_max = {1.5, 1.5, 1.5};
  double t_min = 0.0;
  double t_max = 1.0;
  bool static_mode = false;
  int decoder_hidden_layers = 3;  // 3 or 4

  int fused_len() const { return feature_len * static_cast<int>(scales.size()); }
};

/// k[0] = 1, k[j] = (2/5) * 2^(1-j): reproduces [1, 2/5, 1/5] at N = 2 and
/// keeps halving for deeper decompositions (finest level gets the smallest k).
inline std::vector<double> default_k(int levels) {
  std::vector<double> k(levels + 1, 1.0);
  for (int j = 1; j <= levels; ++j) k[j] = 0.4 * std::pow(2.0, 1 - j);
  return k;
}

inline void validate_config(ModelConfig& cfg) {
  if (cfg.feature_len < 1) throw ConfigError("feature_len must be >= 1");
  if (cfg.levels < 1) throw ConfigError("levels must be >= 1");
  const int min_res = 2 << cfg.levels;
  for (int r : {cfg.spatial_rows, cfg.spatial_cols, cfg.time_res}) {
    if (!is_power_of_two(r))
      throw ConfigError("plane resolutions must be powers of two, got " +
                        std::to_string(r));
    if (r < min_res)
      throw ConfigError("resolution " + std::to_string(r) + " too small for " +
                        std::to_string(cfg.levels) + " levels");
  }
  if (cfg.scales.empty()) throw ConfigError("scales must be nonempty");
  for (size_t i = 0; i < cfg.scales.size(); ++i) {
    if (cfg.scales[i] < 1 || cfg.scales[i] > cfg.levels)
      throw ConfigError("scale outside 1..levels");
    if (i > 0 && cfg.scales[i] <= cfg.scales[i - 1])
      throw ConfigError("scales must be strictly ascending");
  }
  if (cfg.k.empty()) cfg.k = default_k(cfg.levels);
  if (static_cast<int>(cfg.k.size()) != cfg.levels + 1)
    throw ConfigError("k must have length levels+1");
  if (cfg.k[0] != 1.0) throw ConfigError("k[0] must be 1");
  for (int a = 0; a < 3; ++a)
    if (!(cfg.bbox_min[a] < cfg.bbox_max[a]))
      throw ConfigError("bbox min must be < max per axis");
  if (!(cfg.t_min <= cfg.t_max)) throw ConfigError("t_range inverted");
  if (cfg.decoder_hidden_layers != 3 && cfg.decoder_hidden_layers != 4)
    throw ConfigError("decoder_hidden_layers must be 3 or 4");
  wavelet_family(cfg.family);  // throws on unknown name
}

inline std::vector<PlaneId> active_planes(const ModelConfig& cfg) {
  if (cfg.static_mode) return {PlaneId::XY, PlaneId::XZ, PlaneId::YZ};
  return {PlaneId::XY, PlaneId::XZ, PlaneId::YZ,
          PlaneId::XT, PlaneId::YT, PlaneId::ZT};
}

/// Grid shape of one plane: u (first named coordinate) indexes cols, v rows.
/// Space-time planes put time on the row axis with time_res rows.
inline std::pair<int, int> plane_shape(const ModelConfig& cfg, PlaneId c) {
  if (is_space_time(c)) return {cfg.time_res, cfg.spatial_cols};
  return {cfg.spatial_rows, cfg.spatial_cols};
}

struct SamplePoint {
  double x = 0, y = 0, z = 0, t = 0;  // normalized to [0,1] after clamping
};

/// Affine map by bbox/t_range into [0,1]^4 with clamping.
inline SamplePoint normalize_point(const ModelConfig& cfg, double x, double y, double z,
                                   double t) {
  auto clamp01 = [](double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); };
  SamplePoint q;
  q.x = clamp01((x - cfg.bbox_min[0]) / (cfg.bbox_max[0] - cfg.bbox_min[0]));
  q.y = clamp01((y - cfg.bbox_min[1]) / (cfg.bbox_max[1] - cfg.bbox_min[1]));
  q.z = clamp01((z - cfg.bbox_min[2]) / (cfg.bbox_max[2] - cfg.bbox_min[2]));
  const double span = cfg.t_max - cfg.t_min;
  q.t = span > 0.0 ? clamp01((t - cfg.t_min) / span) : 0.0;
  return q;
}

/// Coordinate pair named by the plane, in name order (XT -> (x, t)).
inline std::pair<double, double> project(const SamplePoint& q, PlaneId c) {
  switch (c) {
    case PlaneId::XY: return {q.x, q.y};
    case PlaneId::XZ: return {q.x, q.z};
    case PlaneId::YZ: return {q.y, q.z};
    case PlaneId::XT: return {q.x, q.t};
    case PlaneId::YT: return {q.y, q.t};
    case PlaneId::ZT: return {q.z, q.t};
  }
  return {0.0, 0.0};
}

/// The learnable representation: one coefficient pyramid per active plane.
template <typename T>
struct WaveletField {
  ModelConfig config;
  std::vector<CoefficientPyramid<T>> planes;  // active_planes(config) order
};

/// Space planes start as small uniform noise; space-time planes start at
/// exactly zero so their reconstructed features are exactly 1 (static start).
template <typename T>
WaveletField<T> init_field(const ModelConfig& cfg, uint64_t seed) {
  WaveletField<T> field;
  field.config = cfg;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.01, 0.01);
  for (PlaneId c : active_planes(cfg)) {
    auto [rows, cols] = plane_shape(cfg, c);
    auto pyr = make_zero_pyramid<T>(cfg.feature_len, rows, cols, cfg.levels);
    if (!is_space_time(c)) {
      for_each_grid(pyr, [&](Grid<T>& g) {
        for (auto& v : g.v) v = static_cast<T>(dist(rng));
      });
    }
    field.planes.push_back(std::move(pyr));
  }
  return field;
}

/// idwt2(k (*) pyramid, use_levels = s), plus 1 on space-time planes.
/// k scales the father by k[0] and mother level j by k[j].
template <typename T>
Grid<T> reconstruct_plane(const CoefficientPyramid<T>& pyr, int s, bool space_time,
                          const std::vector<double>& k, const WaveletFamily& fam) {
  CoefficientPyramid<T> scaled = make_zero_pyramid<T>(
      pyr.father.channels, pyr.target_rows, pyr.target_cols, pyr.levels);
  for (size_t i = 0; i < pyr.father.v.size(); ++i)
    scaled.father.v[i] = static_cast<T>(k[0] * pyr.father.v[i]);
  for (int j = 1; j <= s; ++j) {  // levels above s never reach the output
    const auto& src = pyr.mothers[j - 1];
    auto& dst = scaled.mothers[j - 1];
    for (size_t i = 0; i < src.horiz.v.size(); ++i) {
      dst.horiz.v[i] = static_cast<T>(k[j] * src.horiz.v[i]);
      dst.vert.v[i] = static_cast<T>(k[j] * src.vert.v[i]);
      dst.diag.v[i] = static_cast<T>(k[j] * src.diag.v[i]);
    }
  }
  Grid<T> out = idwt2(scaled, s, fam);
  if (space_time)
    for (auto& v : out.v) v += T(1);
  return out;
}

/// Adjoint of reconstruct_plane with respect to the pyramid (the +1 shift has
/// zero derivative; k scales the cotangent per level).
template <typename T>
CoefficientPyramid<T> reconstruct_plane_vjp(const Grid<T>& cot, const PyramidShape& shape,
                                            int s, const std::vector<double>& k,
                                            const WaveletFamily& fam) {
  CoefficientPyramid<T> g = idwt2_vjp(cot, shape, s, fam);
  for (auto& v : g.father.v) v = static_cast<T>(k[0] * v);
  for (int j = 1; j <= s; ++j) {
    auto& m = g.mothers[j - 1];
    for (auto& v : m.horiz.v) v = static_cast<T>(k[j] * v);
    for (auto& v : m.vert.v) v = static_cast<T>(k[j] * v);
    for (auto& v : m.diag.v) v = static_cast<T>(k[j] * v);
  }
  return g;
}

/// Reconstructed feature planes for every active plane and scale in S.
/// Immutable snapshot; readers sample it concurrently during an epoch.
template <typename T>
struct FeaturePlaneCache {
  std::vector<std::vector<Grid<T>>> planes;  // [plane index][scale index]
  uint64_t stamp = 0;
};

template <typename T>
FeaturePlaneCache<T> refresh_cache(const WaveletField<T>& field, uint64_t stamp = 0) {
  const auto& cfg = field.config;
  const auto fam = wavelet_family(cfg.family);
  const auto ids = active_planes(cfg);
  FeaturePlaneCache<T> cache;
  cache.stamp = stamp;
  cache.planes.resize(ids.size());
  for (size_t p = 0; p < ids.size(); ++p) {
    cache.planes[p].reserve(cfg.scales.size());
    for (int s : cfg.scales)
      cache.planes[p].push_back(
          reconstruct_plane(field.planes[p], s, is_space_time(ids[p]), cfg.k, fam));
  }
  return cache;
}

/// Corner-aligned bilinear sample: grid coords (u*(cols-1), v*(rows-1)).
template <typename T>
void sample_bilinear(const Grid<T>& g, double u, double v, T* out) {
  const double gx = u * (g.cols - 1);
  const double gy = v * (g.rows - 1);
  int j0 = static_cast<int>(gx);
  int i0 = static_cast<int>(gy);
  if (j0 > g.cols - 2) j0 = g.cols - 2;
  if (i0 > g.rows - 2) i0 = g.rows - 2;
  const double fx = gx - j0;
  const double fy = gy - i0;
  const double w00 = (1 - fx) * (1 - fy), w01 = fx * (1 - fy);
  const double w10 = (1 - fx) * fy, w11 = fx * fy;
  for (int c = 0; c < g.channels; ++c) {
    out[c] = static_cast<T>(w00 * g.at(c, i0, j0) + w01 * g.at(c, i0, j0 + 1) +
                            w10 * g.at(c, i0 + 1, j0) + w11 * g.at(c, i0 + 1, j0 + 1));
  }
}

/// Scatter the feature cotangent back to the four sampled grid nodes.
template <typename T>
void sample_bilinear_vjp(Grid<T>& g_cot, double u, double v, const T* feat_cot) {
  const double gx = u * (g_cot.cols - 1);
  const double gy = v * (g_cot.rows - 1);
  int j0 = static_cast<int>(gx);
  int i0 = static_cast<int>(gy);
  if (j0 > g_cot.cols - 2) j0 = g_cot.cols - 2;
  if (i0 > g_cot.rows - 2) i0 = g_cot.rows - 2;
  const double fx = gx - j0;
  const double fy = gy - i0;
  const double w00 = (1 - fx) * (1 - fy), w01 = fx * (1 - fy);
  const double w10 = (1 - fx) * fy, w11 = fx * fy;
  for (int c = 0; c < g_cot.channels; ++c) {
    const double gc = feat_cot[c];
    g_cot.at(c, i0, j0) += static_cast<T>(w00 * gc);
    g_cot.at(c, i0, j0 + 1) += static_cast<T>(w01 * gc);
    g_cot.at(c, i0 + 1, j0) += static_cast<T>(w10 * gc);
    g_cot.at(c, i0 + 1, j0 + 1) += static_cast<T>(w11 * gc);
  }
}

/// Elementwise product over all active planes.
template <typename T>
void fuse_hp(const std::vector<const T*>& feats, int b, T* out) {
  for (int ch = 0; ch < b; ++ch) {
    T prod = T(1);
    for (const T* f : feats) prod *= f[ch];
    out[ch] = prod;
  }
}

/// Zero-masked multiplication. Per channel, with Q_c = 1 where the time
/// feature is exactly 0: f' = f + Q, Qinv = |1 - prod(Q)|, space-time factor =
/// Qinv * prod(f'), output = factor * prod(space). The channel vanishes only
/// when all three time features agree on zero (or a space feature is zero).
template <typename T>
void fuse_zmm(const std::array<const T*, 3>& space, const std::array<const T*, 3>& time,
              int b, T* out) {
  for (int ch = 0; ch < b; ++ch) {
    T fprod = T(1);
    int qprod = 1;
    for (int c = 0; c < 3; ++c) {
      const T tv = time[c][ch];
      const int q = (tv == T(0)) ? 1 : 0;
      fprod *= tv + T(q);
      qprod *= q;
    }
    const T qinv = T(1 - qprod);  // |1 - prod(Q)| with Q binary
    T sprod = T(1);
    for (int c = 0; c < 3; ++c) sprod *= space[c][ch];
    out[ch] = qinv * fprod * sprod;
  }
}

/// Zero-agreement addition: (1/3) * sum(time) * prod(space).
template <typename T>
void fuse_zam(const std::array<const T*, 3>& space, const std::array<const T*, 3>& time,
              int b, T* out) {
  for (int ch = 0; ch < b; ++ch) {
    T tsum = T(0);
    for (int c = 0; c < 3; ++c) tsum += time[c][ch];
    T sprod = T(1);
    for (int c = 0; c < 3; ++c) sprod *= space[c][ch];
    out[ch] = tsum / T(3) * sprod;
  }
}

/// Per-plane feature cotangents for one fused channel vector.
/// ZMM masks are constants under differentiation; gradients flow through the
/// shifted features and the products only.
template <typename T>
void fuse_vjp(Fusion fusion, bool static_mode,
              const std::vector<const T*>& feats,  // active-plane order
              int b, const T* out_cot, const std::vector<T*>& feat_cots) {
  const int n = static_cast<int>(feats.size());
  if (static_mode || fusion == Fusion::HP) {
    for (int ch = 0; ch < b; ++ch) {
      for (int p = 0; p < n; ++p) {
        T others = T(1);
        for (int q = 0; q < n; ++q)
          if (q != p) others *= feats[q][ch];
        feat_cots[p][ch] += out_cot[ch] * others;
      }
    }
    return;
  }
  // Dynamic ZMM/ZAM: planes 0..2 are space, 3..5 are time.
  for (int ch = 0; ch < b; ++ch) {
    T sp[3], tv[3];
    for (int c = 0; c < 3; ++c) {
      sp[c] = feats[c][ch];
      tv[c] = feats[3 + c][ch];
    }
    T sprod = sp[0] * sp[1] * sp[2];
    if (fusion == Fusion::ZMM) {
      T fp[3];
      int qprod = 1;
      for (int c = 0; c < 3; ++c) {
        const int q = (tv[c] == T(0)) ? 1 : 0;
        fp[c] = tv[c] + T(q);
        qprod *= q;
      }
      const T qinv = T(1 - qprod);
      const T fprod = fp[0] * fp[1] * fp[2];
      for (int c = 0; c < 3; ++c) {
        T others = T(1);
        for (int d = 0; d < 3; ++d)
          if (d != c) others *= fp[d];
        feat_cots[3 + c][ch] += out_cot[ch] * qinv * others * sprod;
      }
      const T factor = qinv * fprod;
      for (int c = 0; c < 3; ++c) {
        T others = T(1);
        for (int d = 0; d < 3; ++d)
          if (d != c) others *= sp[d];
        feat_cots[c][ch] += out_cot[ch] * factor * others;
      }
    } else {  // ZAM
      const T tsum = (tv[0] + tv[1] + tv[2]) / T(3);
      for (int c = 0; c < 3; ++c) feat_cots[3 + c][ch] += out_cot[ch] * sprod / T(3);
      for (int c = 0; c < 3; ++c) {
        T others = T(1);
        for (int d = 0; d < 3; ++d)
          if (d != c) others *= sp[d];
        feat_cots[c][ch] += out_cot[ch] * tsum * others;
      }
    }
  }
}

/// Fused feature of length B*|S|: per scale, project + bilinear-sample every
/// active plane and fuse; scales are concatenated in S order.
template <typename T>
std::vector<T> sample_field(const ModelConfig& cfg, const FeaturePlaneCache<T>& cache,
                            const SamplePoint& q) {
  const auto ids = active_planes(cfg);
  const int b = cfg.feature_len;
  std::vector<T> out(cfg.fused_len());
  std::vector<T> feats(ids.size() * b);
  for (size_t si = 0; si < cfg.scales.size(); ++si) {
    std::vector<const T*> ptrs(ids.size());
    for (size_t p = 0; p < ids.size(); ++p) {
      auto [u, v] = project(q, ids[p]);
      sample_bilinear(cache.planes[p][si], u, v, &feats[p * b]);
      ptrs[p] = &feats[p * b];
    }
    T* seg = &out[si * b];
    if (cfg.static_mode || cfg.fusion == Fusion::HP) {
      fuse_hp(ptrs, b, seg);
    } else {
      std::array<const T*, 3> space = {ptrs[0], ptrs[1], ptrs[2]};
      std::array<const T*, 3> time = {ptrs[3], ptrs[4], ptrs[5]};
      if (cfg.fusion == Fusion::ZMM)
        fuse_zmm(space, time, b, seg);
      else
        fuse_zam(space, time, b, seg);
    }
  }
  return out;
}

/// Backward of sample_field: accumulates cotangents into per-plane, per-scale
/// grids shaped like the cache. Recomputes the cheap per-plane features.
template <typename T>
void sample_field_vjp(const ModelConfig& cfg, const FeaturePlaneCache<T>& cache,
                      const SamplePoint& q, const T* fused_cot,
                      std::vector<std::vector<Grid<T>>>& plane_cots) {
  const auto ids = active_planes(cfg);
  const int b = cfg.feature_len;
  std::vector<T> feats(ids.size() * b);
  std::vector<T> fcots(ids.size() * b);
  for (size_t si = 0; si < cfg.scales.size(); ++si) {
    std::vector<const T*> ptrs(ids.size());
    std::vector<T*> cot_ptrs(ids.size());
    std::fill(fcots.begin(), fcots.end(), T(0));
    for (size_t p = 0; p < ids.size(); ++p) {
      auto [u, v] = project(q, ids[p]);
      sample_bilinear(cache.planes[p][si], u, v, &feats[p * b]);
      ptrs[p] = &feats[p * b];
      cot_ptrs[p] = &fcots[p * b];
    }
    fuse_vjp(cfg.fusion, cfg.static_mode, ptrs, b, &fused_cot[si * b], cot_ptrs);
    for (size_t p = 0; p < ids.size(); ++p) {
      auto [u, v] = project(q, ids[p]);
      sample_bilinear_vjp(plane_cots[p][si], u, v, cot_ptrs[p]);
    }
  }
}

}  // namespace wvpl
