#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "waveplanes/decoder.hpp"
#include "waveplanes/errors.hpp"
#include "waveplanes/field.hpp"
#include "waveplanes/render.hpp"
#include "waveplanes/rng.hpp"
#include "waveplanes/threading.hpp"

namespace wvpl {

struct RegWeights {
  double tv = 1e-5;
  double sst = 0.1;
  double ts = 1e-5;
  double time_smooth = 0.0;  // failed-design variant, off by default
};

// ---------------------------------------------------------------------------
// Regularizers. TV and the second-difference pair act on reconstructed
// feature planes (the cache), TS acts on raw wavelet coefficients. Each plane
// is normalized by its own cell count; the result is the mean over planes.

/// Squared forward differences, each family over its own valid range:
/// rows i>=1 for vertical and cols j>=1 for horizontal, no wraparound.
template <typename T>
double reg_tv(const std::vector<const Grid<T>*>& grids) {
  if (grids.empty()) return 0.0;
  double total = 0.0;
  for (const auto* g : grids) {
    double s = 0.0;
    for (int c = 0; c < g->channels; ++c) {
      for (int i = 1; i < g->rows; ++i)
        for (int j = 0; j < g->cols; ++j) {
          const double d = double(g->at(c, i, j)) - double(g->at(c, i - 1, j));
          s += d * d;
        }
      for (int i = 0; i < g->rows; ++i)
        for (int j = 1; j < g->cols; ++j) {
          const double d = double(g->at(c, i, j)) - double(g->at(c, i, j - 1));
          s += d * d;
        }
    }
    total += s / (double(g->rows) * g->cols);
  }
  return total / double(grids.size());
}

/// Adds scale * d(reg_tv)/dP into the matching cotangent grids.
template <typename T>
void reg_tv_backward(const std::vector<const Grid<T>*>& grids, double scale,
                     const std::vector<Grid<T>*>& cots) {
  if (grids.empty()) return;
  const double per_grid = scale / double(grids.size());
  for (size_t gi = 0; gi < grids.size(); ++gi) {
    const auto& g = *grids[gi];
    auto& cot = *cots[gi];
    const double f = 2.0 * per_grid / (double(g.rows) * g.cols);
    for (int c = 0; c < g.channels; ++c) {
      for (int i = 1; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) {
          const double d = f * (double(g.at(c, i, j)) - double(g.at(c, i - 1, j)));
          cot.at(c, i, j) += static_cast<T>(d);
          cot.at(c, i - 1, j) -= static_cast<T>(d);
        }
      for (int i = 0; i < g.rows; ++i)
        for (int j = 1; j < g.cols; ++j) {
          const double d = f * (double(g.at(c, i, j)) - double(g.at(c, i, j - 1)));
          cot.at(c, i, j) += static_cast<T>(d);
          cot.at(c, i, j - 1) -= static_cast<T>(d);
        }
    }
  }
}

namespace detail {

// Squared 1-D Laplacian along one axis; along_rows picks the row (time) axis.
template <typename T>
double second_diff_reg(const std::vector<const Grid<T>*>& grids, bool along_rows) {
  if (grids.empty()) return 0.0;
  double total = 0.0;
  for (const auto* g : grids) {
    double s = 0.0;
    const int ilim = along_rows ? g->rows : g->cols;
    const int olim = along_rows ? g->cols : g->rows;
    for (int c = 0; c < g->channels; ++c)
      for (int o = 0; o < olim; ++o)
        for (int i = 1; i + 1 < ilim; ++i) {
          const double a = along_rows ? g->at(c, i - 1, o) : g->at(c, o, i - 1);
          const double b = along_rows ? g->at(c, i, o) : g->at(c, o, i);
          const double d = along_rows ? g->at(c, i + 1, o) : g->at(c, o, i + 1);
          const double lap = a - 2.0 * b + d;
          s += lap * lap;
        }
    total += s / (double(g->rows) * g->cols);
  }
  return total / double(grids.size());
}

template <typename T>
void second_diff_backward(const std::vector<const Grid<T>*>& grids, bool along_rows,
                          double scale, const std::vector<Grid<T>*>& cots) {
  if (grids.empty()) return;
  const double per_grid = scale / double(grids.size());
  for (size_t gi = 0; gi < grids.size(); ++gi) {
    const auto& g = *grids[gi];
    auto& cot = *cots[gi];
    const double f = 2.0 * per_grid / (double(g.rows) * g.cols);
    const int ilim = along_rows ? g.rows : g.cols;
    const int olim = along_rows ? g.cols : g.rows;
    auto ref = [&](Grid<T>& t, int c, int i, int o) -> T& {
      return along_rows ? t.at(c, i, o) : t.at(c, o, i);
    };
    auto val = [&](int c, int i, int o) {
      return along_rows ? double(g.at(c, i, o)) : double(g.at(c, o, i));
    };
    for (int c = 0; c < g.channels; ++c)
      for (int o = 0; o < olim; ++o)
        for (int i = 1; i + 1 < ilim; ++i) {
          const double lap =
              f * (val(c, i - 1, o) - 2.0 * val(c, i, o) + val(c, i + 1, o));
          ref(cot, c, i - 1, o) += static_cast<T>(lap);
          ref(cot, c, i, o) -= static_cast<T>(2.0 * lap);
          ref(cot, c, i + 1, o) += static_cast<T>(lap);
        }
  }
}

}  // namespace detail

/// Smooth-in-space regularizer for space-time planes: second difference along
/// the spatial axis (columns; rows index time).
template <typename T>
double reg_sst(const std::vector<const Grid<T>*>& grids) {
  return detail::second_diff_reg(grids, /*along_rows=*/false);
}

template <typename T>
void reg_sst_backward(const std::vector<const Grid<T>*>& grids, double scale,
                      const std::vector<Grid<T>*>& cots) {
  detail::second_diff_backward(grids, false, scale, cots);
}

/// Same form along the time axis. Kept as an opt-in variant; it over-smooths
/// motion, which is why it ships disabled.
template <typename T>
double reg_time_smooth(const std::vector<const Grid<T>*>& grids) {
  return detail::second_diff_reg(grids, /*along_rows=*/true);
}

template <typename T>
void reg_time_smooth_backward(const std::vector<const Grid<T>*>& grids, double scale,
                              const std::vector<Grid<T>*>& cots) {
  detail::second_diff_backward(grids, true, scale, cots);
}

/// L1 over raw space-time wavelet coefficients; drives them to exact zero so
/// thresholding later keeps almost nothing.
template <typename T>
double reg_ts(const WaveletField<T>& field) {
  const auto ids = active_planes(field.config);
  double total = 0.0;
  for (size_t p = 0; p < ids.size(); ++p) {
    if (!is_space_time(ids[p])) continue;
    for_each_grid(field.planes[p], [&](const Grid<T>& g) {
      for (const T v : g.v) total += std::abs(double(v));
    });
  }
  return total;
}

/// Subgradient: scale * sign(coefficient), with sign(0) = 0.
template <typename T>
void reg_ts_backward(const WaveletField<T>& field, double scale,
                     std::vector<CoefficientPyramid<T>>& cots) {
  const auto ids = active_planes(field.config);
  for (size_t p = 0; p < ids.size(); ++p) {
    if (!is_space_time(ids[p])) continue;
    size_t gi = 0;
    std::vector<Grid<T>*> cot_grids;
    for_each_grid(cots[p], [&](Grid<T>& g) { cot_grids.push_back(&g); });
    for_each_grid(field.planes[p], [&](const Grid<T>& g) {
      auto& cg = *cot_grids[gi++];
      for (size_t i = 0; i < g.v.size(); ++i) {
        if (g.v[i] > T(0)) cg.v[i] += static_cast<T>(scale);
        else if (g.v[i] < T(0)) cg.v[i] -= static_cast<T>(scale);
      }
    });
  }
}

// ---------------------------------------------------------------------------
// Loss and gradients.

struct LossBreakdown {
  double mse = 0.0;
  double tv = 0.0;
  double sst = 0.0;
  double ts = 0.0;
  double time_smooth = 0.0;
  double total = 0.0;
};

template <typename T>
struct TrainRay {
  std::array<double, 3> origin{};
  std::array<double, 3> dir{};  // unit
  double t = 0;
  std::array<T, 3> target{};
  uint64_t jitter_seed = 0;
};

struct BatchOptions {
  int samples_per_ray = 48;
  double near = 2.0;
  double far = 6.0;
  bool jitter = true;
  std::array<double, 3> background{1, 1, 1};
  int workers = 1;
};

/// Cotangents for every trainable parameter, shaped like the model.
template <typename T>
struct ModelGrads {
  std::vector<CoefficientPyramid<T>> planes;
  DecoderGrads<T> decoder;

  ModelGrads(const WaveletField<T>& field, const ColorBasisDecoder<T>& dec)
      : decoder(dec) {
    planes.reserve(field.planes.size());
    for (const auto& p : field.planes)
      planes.push_back(make_zero_pyramid<T>(p.father.channels, p.target_rows,
                                            p.target_cols, p.levels));
  }
};

namespace detail {

template <typename T>
std::vector<std::vector<Grid<T>>> make_plane_cots(const FeaturePlaneCache<T>& cache) {
  std::vector<std::vector<Grid<T>>> cots(cache.planes.size());
  for (size_t p = 0; p < cache.planes.size(); ++p) {
    cots[p].reserve(cache.planes[p].size());
    for (const auto& g : cache.planes[p])
      cots[p].emplace_back(g.channels, g.rows, g.cols);
  }
  return cots;
}

template <typename T>
struct RayScratch {
  std::vector<double> ts;
  BasisEval<T> ev;
  std::vector<T> fused;   // n * F
  std::vector<T> rgb;     // n * 3
  std::vector<T> sigma;   // n
  std::vector<double> trans;  // n + 1 running transmittance, trans[0] = 1
  std::vector<T> basis_cot;
  std::vector<T> fused_cot;
  std::vector<SamplePoint> qs;
};

/// Forward pass for one ray; fills the scratch and returns the composite.
template <typename T>
std::array<double, 3> forward_ray(const ModelConfig& cfg,
                                  const FeaturePlaneCache<T>& cache,
                                  const ColorBasisDecoder<T>& dec, const TrainRay<T>& ray,
                                  const BatchOptions& opt, double& delta,
                                  RayScratch<T>& s) {
  const int n = opt.samples_per_ray;
  const int f = dec.fused_len;
  stratified_samples(opt.near, opt.far, n, opt.jitter, ray.jitter_seed, s.ts, delta);
  s.fused.resize(static_cast<size_t>(n) * f);
  s.rgb.resize(static_cast<size_t>(n) * 3);
  s.sigma.resize(n);
  s.trans.assign(n + 1, 1.0);
  s.qs.resize(n);
  const T dir[3] = {static_cast<T>(ray.dir[0]), static_cast<T>(ray.dir[1]),
                    static_cast<T>(ray.dir[2])};
  compute_basis(dec, dir, s.ev);
  std::array<double, 3> out{};
  for (int i = 0; i < n; ++i) {
    s.qs[i] = normalize_point(cfg, ray.origin[0] + s.ts[i] * ray.dir[0],
                              ray.origin[1] + s.ts[i] * ray.dir[1],
                              ray.origin[2] + s.ts[i] * ray.dir[2], ray.t);
    auto fv = sample_field(cfg, cache, s.qs[i]);
    std::copy(fv.begin(), fv.end(), s.fused.begin() + static_cast<size_t>(i) * f);
    decode_with_basis(dec, &s.fused[static_cast<size_t>(i) * f], s.ev, &s.rgb[i * 3],
                      s.sigma[i]);
    const double att = std::exp(-double(s.sigma[i]) * delta);
    const double weight = s.trans[i] * (1.0 - att);
    for (int ch = 0; ch < 3; ++ch) out[ch] += weight * double(s.rgb[i * 3 + ch]);
    s.trans[i + 1] = s.trans[i] * att;
  }
  for (int ch = 0; ch < 3; ++ch) out[ch] += s.trans[n] * opt.background[ch];
  return out;
}

/// Backward pass for one ray given d(loss)/d(composite). Scatters plane
/// cotangents through bilinear sampling and fusion; decoder gradients are
/// accumulated via one basis_backward call per ray.
template <typename T>
void backward_ray(const ModelConfig& cfg, const FeaturePlaneCache<T>& cache,
                  const ColorBasisDecoder<T>& dec, const BatchOptions& opt,
                  const std::array<double, 3>& dout, double delta, RayScratch<T>& s,
                  std::vector<std::vector<Grid<T>>>& plane_cots,
                  DecoderGrads<T>& dgrads) {
  const int n = opt.samples_per_ray;
  const int f = dec.fused_len;
  s.basis_cot.assign(static_cast<size_t>(3) * f, T(0));
  s.fused_cot.resize(f);
  // suffix = d<out,dout> contribution of everything after sample i
  double suffix = s.trans[n] * (dout[0] * opt.background[0] +
                                dout[1] * opt.background[1] +
                                dout[2] * opt.background[2]);
  for (int i = n - 1; i >= 0; --i) {
    const double cs = dout[0] * double(s.rgb[i * 3]) + dout[1] * double(s.rgb[i * 3 + 1]) +
                      dout[2] * double(s.rgb[i * 3 + 2]);
    const double dsigma = delta * (s.trans[i + 1] * cs - suffix);
    const double weight = s.trans[i] - s.trans[i + 1];
    suffix += weight * cs;

    const T* fused = &s.fused[static_cast<size_t>(i) * f];
    // color head: rgb = sigmoid(dot), d(dot) = drgb * rgb * (1 - rgb)
    double ddot[3];
    for (int ch = 0; ch < 3; ++ch) {
      const double r = s.rgb[i * 3 + ch];
      ddot[ch] = dout[ch] * weight * r * (1.0 - r);
    }
    // density head: sigma = softplus(dot), softplus'(x) = 1 - exp(-softplus(x))
    const double ddotd = dsigma * (1.0 - std::exp(-double(s.sigma[i])));
    for (int c = 0; c < f; ++c) {
      double acc = ddotd * double(dec.density_basis[c]);
      for (int ch = 0; ch < 3; ++ch) acc += ddot[ch] * double(s.ev.basis[ch * f + c]);
      s.fused_cot[c] = static_cast<T>(acc);
      dgrads.density_basis[c] += static_cast<T>(ddotd * double(fused[c]));
      for (int ch = 0; ch < 3; ++ch)
        s.basis_cot[ch * f + c] += static_cast<T>(ddot[ch] * double(fused[c]));
    }
    sample_field_vjp(cfg, cache, s.qs[i], s.fused_cot.data(), plane_cots);
  }
  basis_backward(dec, s.ev, s.basis_cot, dgrads);
}

template <typename T>
void gather_cached(const ModelConfig& cfg, const FeaturePlaneCache<T>& cache,
                   std::vector<std::vector<Grid<T>>>* cots, bool space_time,
                   std::vector<const Grid<T>*>& grids, std::vector<Grid<T>*>& cgrids) {
  grids.clear();
  cgrids.clear();
  const auto ids = active_planes(cfg);
  for (size_t p = 0; p < ids.size(); ++p) {
    if (is_space_time(ids[p]) != space_time) continue;
    for (size_t si = 0; si < cache.planes[p].size(); ++si) {
      grids.push_back(&cache.planes[p][si]);
      if (cots) cgrids.push_back(&(*cots)[p][si]);
    }
  }
}

}  // namespace detail

/// Loss over a ray batch plus weighted regularizers, no gradients. MSE is the
/// mean over all 3K color scalars.
template <typename T>
LossBreakdown evaluate_batch(const WaveletField<T>& field,
                             const FeaturePlaneCache<T>& cache,
                             const ColorBasisDecoder<T>& dec,
                             const std::vector<TrainRay<T>>& batch,
                             const BatchOptions& opt, const RegWeights& w) {
  LossBreakdown lb;
  const auto& cfg = field.config;
  detail::RayScratch<T> scratch;
  double sq = 0.0;
  for (const auto& ray : batch) {
    double delta;
    const auto out = detail::forward_ray(cfg, cache, dec, ray, opt, delta, scratch);
    for (int ch = 0; ch < 3; ++ch) {
      const double e = out[ch] - double(ray.target[ch]);
      sq += e * e;
    }
  }
  lb.mse = batch.empty() ? 0.0 : sq / (3.0 * double(batch.size()));
  std::vector<const Grid<T>*> grids;
  std::vector<Grid<T>*> cgrids;
  detail::gather_cached(cfg, cache, static_cast<std::vector<std::vector<Grid<T>>>*>(nullptr),
                        false, grids, cgrids);
  lb.tv = reg_tv(grids);
  detail::gather_cached(cfg, cache, static_cast<std::vector<std::vector<Grid<T>>>*>(nullptr),
                        true, grids, cgrids);
  lb.sst = reg_sst(grids);
  lb.time_smooth = w.time_smooth > 0 ? reg_time_smooth(grids) : 0.0;
  lb.ts = reg_ts(field);
  lb.total = lb.mse + w.tv * lb.tv + w.sst * lb.sst + w.ts * lb.ts +
             w.time_smooth * lb.time_smooth;
  return lb;
}

/// Full reverse-mode pass: per-ray forward + backward into plane cotangents
/// (deterministic reduction in ray order), regularizer gradients on the cached
/// planes, then one shared IDWT adjoint per plane and scale. TS acts on raw
/// coefficients after that.
template <typename T>
LossBreakdown compute_gradients(const WaveletField<T>& field,
                                const FeaturePlaneCache<T>& cache,
                                const ColorBasisDecoder<T>& dec,
                                const std::vector<TrainRay<T>>& batch,
                                const BatchOptions& opt, const RegWeights& w,
                                ModelGrads<T>& grads) {
  const auto& cfg = field.config;
  const int workers = opt.workers < 1 ? 1 : opt.workers;
  const size_t k = batch.size();
  const double mse_scale = k ? 2.0 / (3.0 * double(k)) : 0.0;

  std::vector<std::vector<std::vector<Grid<T>>>> worker_cots(workers);
  std::vector<DecoderGrads<T>> worker_dec(workers, DecoderGrads<T>(dec));
  std::vector<double> worker_sq(workers, 0.0);
  for (int wi = 0; wi < workers; ++wi)
    worker_cots[wi] = detail::make_plane_cots(cache);

  parallel_chunks(static_cast<int>(k), workers, [&](int begin, int end, int wi) {
    detail::RayScratch<T> scratch;
    for (int r = begin; r < end; ++r) {
      const auto& ray = batch[r];
      double delta;
      const auto out = detail::forward_ray(cfg, cache, dec, ray, opt, delta, scratch);
      std::array<double, 3> dout;
      for (int ch = 0; ch < 3; ++ch) {
        const double e = out[ch] - double(ray.target[ch]);
        worker_sq[wi] += e * e;
        dout[ch] = mse_scale * e;
      }
      detail::backward_ray(cfg, cache, dec, opt, dout, delta, scratch,
                           worker_cots[wi], worker_dec[wi]);
    }
  });

  // ordered reduction keeps results independent of thread timing
  auto plane_cots = std::move(worker_cots[0]);
  auto dec_grads = std::move(worker_dec[0]);
  double sq = worker_sq[0];
  for (int wi = 1; wi < workers; ++wi) {
    for (size_t p = 0; p < plane_cots.size(); ++p)
      for (size_t si = 0; si < plane_cots[p].size(); ++si) {
        auto& dst = plane_cots[p][si];
        const auto& src = worker_cots[wi][p][si];
        for (size_t i = 0; i < dst.v.size(); ++i) dst.v[i] += src.v[i];
      }
    dec_grads.add(worker_dec[wi]);
    sq += worker_sq[wi];
  }

  LossBreakdown lb;
  lb.mse = k ? sq / (3.0 * double(k)) : 0.0;

  std::vector<const Grid<T>*> grids;
  std::vector<Grid<T>*> cgrids;
  detail::gather_cached(cfg, cache, &plane_cots, false, grids, cgrids);
  lb.tv = reg_tv(grids);
  if (w.tv != 0.0) reg_tv_backward(grids, w.tv, cgrids);
  detail::gather_cached(cfg, cache, &plane_cots, true, grids, cgrids);
  lb.sst = reg_sst(grids);
  if (w.sst != 0.0) reg_sst_backward(grids, w.sst, cgrids);
  if (w.time_smooth > 0.0) {
    lb.time_smooth = reg_time_smooth(grids);
    reg_time_smooth_backward(grids, w.time_smooth, cgrids);
  }

  // one IDWT adjoint per plane and scale, shared by every consumer above
  const auto fam = wavelet_family(cfg.family);
  const auto ids = active_planes(cfg);
  for (size_t p = 0; p < ids.size(); ++p) {
    PyramidShape shape{cfg.feature_len, field.planes[p].target_rows,
                       field.planes[p].target_cols, cfg.levels};
    for (size_t si = 0; si < cfg.scales.size(); ++si) {
      const int s = cfg.scales[si];
      auto pyr = reconstruct_plane_vjp(plane_cots[p][si], shape, s, cfg.k, fam);
      int gi = 0;
      std::vector<Grid<T>*> dst;
      for_each_grid(grads.planes[p], [&](Grid<T>& g) { dst.push_back(&g); });
      for_each_grid(pyr, [&](const Grid<T>& g) {
        auto& d = *dst[gi++];
        for (size_t i = 0; i < g.v.size(); ++i) d.v[i] += g.v[i];
      });
    }
  }

  lb.ts = reg_ts(field);
  if (w.ts != 0.0) reg_ts_backward(field, w.ts, grads.planes);
  grads.decoder.add(dec_grads);

  lb.total = lb.mse + w.tv * lb.tv + w.sst * lb.sst + w.ts * lb.ts +
             w.time_smooth * lb.time_smooth;
  return lb;
}

// ---------------------------------------------------------------------------
// Adam with linear warmup then cosine annealing.

/// 1-indexed step; ramps to base over `warmup` steps, then cosine to ~0.
inline double scheduled_lr(double base, int warmup, int total_steps, int step) {
  double lr = base * std::min(1.0, double(step) / double(warmup));
  if (step > warmup && total_steps > warmup) {
    const double u = double(step - warmup) / double(total_steps - warmup);
    lr = base * 0.5 * (1.0 + std::cos(u * M_PI));
  }
  return lr;
}

namespace detail {

/// Canonical flat traversal of all trainable arrays: planes in active order
/// (grids in pyramid order), then per-layer weights and biases, then the
/// density basis. Parameter and gradient structures share this order.
template <typename T>
std::vector<std::pair<T*, size_t>> param_spans(std::vector<CoefficientPyramid<T>>& planes,
                                               std::vector<DenseLayer<T>>& layers,
                                               std::vector<T>& density) {
  std::vector<std::pair<T*, size_t>> spans;
  for (auto& pyr : planes)
    for_each_grid(pyr, [&](Grid<T>& g) { spans.emplace_back(g.v.data(), g.v.size()); });
  for (auto& l : layers) {
    spans.emplace_back(l.w.data(), l.w.size());
    spans.emplace_back(l.b.data(), l.b.size());
  }
  spans.emplace_back(density.data(), density.size());
  return spans;
}

}  // namespace detail

template <typename T>
struct OptimState {
  double base_lr = 0.01;
  int warmup = 512;
  int total_steps = 2000;
  int step = 0;  // completed steps
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  ModelGrads<T> m, v;

  OptimState(const WaveletField<T>& field, const ColorBasisDecoder<T>& dec,
             double lr, int steps)
      : base_lr(lr), total_steps(steps), m(field, dec), v(field, dec) {}
};

/// One Adam update with the scheduled learning rate; increments the counter.
template <typename T>
double adam_step(WaveletField<T>& field, ColorBasisDecoder<T>& dec,
                 ModelGrads<T>& grads, OptimState<T>& state) {
  state.step += 1;
  const int k = state.step;
  const double lr = scheduled_lr(state.base_lr, state.warmup, state.total_steps, k);
  const double c1 = 1.0 - std::pow(state.beta1, k);
  const double c2 = 1.0 - std::pow(state.beta2, k);

  auto p = detail::param_spans(field.planes, dec.layers, dec.density_basis);
  auto g = detail::param_spans(grads.planes, grads.decoder.layers,
                               grads.decoder.density_basis);
  auto ms = detail::param_spans(state.m.planes, state.m.decoder.layers,
                                state.m.decoder.density_basis);
  auto vs = detail::param_spans(state.v.planes, state.v.decoder.layers,
                                state.v.decoder.density_basis);
  for (size_t s = 0; s < p.size(); ++s) {
    T* pv = p[s].first;
    const T* gv = g[s].first;
    T* mv = ms[s].first;
    T* vv = vs[s].first;
    for (size_t i = 0; i < p[s].second; ++i) {
      const double gr = gv[i];
      const double m1 = state.beta1 * double(mv[i]) + (1.0 - state.beta1) * gr;
      const double m2 = state.beta2 * double(vv[i]) + (1.0 - state.beta2) * gr * gr;
      mv[i] = static_cast<T>(m1);
      vv[i] = static_cast<T>(m2);
      pv[i] -= static_cast<T>(lr * (m1 / c1) / (std::sqrt(m2 / c2) + state.eps));
    }
  }
  return lr;
}

// ---------------------------------------------------------------------------
// Training loop.

struct TrainOptions {
  int steps = 2000;
  int batch_size = 1024;
  double lr = 0.01;
  int warmup = 512;
  RegWeights weights;
  uint64_t seed = 0;
  BatchOptions batch;
};

/// Uniform ray batch for one step, deterministic in (seed, step).
template <typename T>
void sample_batch(const std::vector<TrainRay<T>>& rays, int batch_size, uint64_t seed,
                  int step, std::vector<TrainRay<T>>& out) {
  out.resize(batch_size);
  for (int i = 0; i < batch_size; ++i) {
    const uint64_t h =
        splitmix64(seed ^ splitmix64(static_cast<uint64_t>(step) * 0x9e3779b97f4a7c15ULL +
                                     static_cast<uint64_t>(i)));
    out[i] = rays[h % rays.size()];
    out[i].jitter_seed = splitmix64(h ^ 0xa5a5a5a5a5a5a5a5ULL);
  }
}

/// Trains in place. Writes one CSV line per step when `log` is non-null and
/// invokes `on_step` after each update. Throws DivergenceError (with the step
/// and loss terms) when the loss stops being finite.
template <typename T>
LossBreakdown fit(WaveletField<T>& field, ColorBasisDecoder<T>& dec,
                  const std::vector<TrainRay<T>>& rays, const TrainOptions& opt,
                  std::ostream* log = nullptr,
                  const std::function<void(int, double, const LossBreakdown&)>& on_step =
                      nullptr) {
  if (rays.empty()) throw DatasetError("training ray set is empty");
  OptimState<T> state(field, dec, opt.lr, opt.steps);
  state.warmup = opt.warmup;
  if (log) *log << "step,lr,mse,reg_tv,reg_sst,reg_ts,total\n";
  LossBreakdown lb;
  std::vector<TrainRay<T>> batch;
  for (int step = 1; step <= opt.steps; ++step) {
    const auto cache = refresh_cache(field, static_cast<uint64_t>(step));
    sample_batch(rays, opt.batch_size, opt.seed, step, batch);
    ModelGrads<T> grads(field, dec);
    lb = compute_gradients(field, cache, dec, batch, opt.batch, opt.weights, grads);
    if (!std::isfinite(lb.total)) {
      std::ostringstream msg;
      msg << "non-finite loss at step " << step << ": mse=" << lb.mse
          << " tv=" << lb.tv << " sst=" << lb.sst << " ts=" << lb.ts;
      throw DivergenceError(msg.str());
    }
    const double lr = adam_step(field, dec, grads, state);
    if (log)
      *log << step << ',' << lr << ',' << lb.mse << ',' << lb.tv << ',' << lb.sst
           << ',' << lb.ts << ',' << lb.total << '\n';
    if (on_step) on_step(step, lr, lb);
  }
  return lb;
}

}  // namespace wvpl
