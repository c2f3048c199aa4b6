#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "waveplanes/errors.hpp"

namespace wvpl {

template <typename T>
struct DenseLayer {
  int out_dim = 0;
  int in_dim = 0;
  std::vector<T> w;  // row-major (out_dim x in_dim)
  std::vector<T> b;  // out_dim
};

/// Maps a unit view direction to three color basis vectors of length
/// fused_len through a small ReLU MLP (hidden width 64, 3 or 4 hidden
/// layers). Density uses a separate direction-independent basis vector.
template <typename T>
struct ColorBasisDecoder {
  static constexpr int kWidth = 64;

  int fused_len = 0;
  int hidden_layers = 3;
  std::vector<DenseLayer<T>> layers;  // hidden layers then the linear output
  std::vector<T> density_basis;       // fused_len

  size_t param_count() const {
    size_t n = density_basis.size();
    for (const auto& l : layers) n += l.w.size() + l.b.size();
    return n;
  }
};

template <typename T>
ColorBasisDecoder<T> init_decoder(int fused_len, int hidden_layers, uint64_t seed) {
  if (hidden_layers != 3 && hidden_layers != 4)
    throw ConfigError("decoder hidden_layers must be 3 or 4");
  ColorBasisDecoder<T> dec;
  dec.fused_len = fused_len;
  dec.hidden_layers = hidden_layers;
  std::mt19937_64 rng(seed);
  auto add_layer = [&](int out_dim, int in_dim) {
    DenseLayer<T> l;
    l.out_dim = out_dim;
    l.in_dim = in_dim;
    l.w.resize(static_cast<size_t>(out_dim) * in_dim);
    l.b.assign(out_dim, T(0));
    const double limit = std::sqrt(6.0 / in_dim);  // He-style uniform fan-in
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& v : l.w) v = static_cast<T>(dist(rng));
    dec.layers.push_back(std::move(l));
  };
  add_layer(ColorBasisDecoder<T>::kWidth, 3);
  for (int i = 1; i < hidden_layers; ++i)
    add_layer(ColorBasisDecoder<T>::kWidth, ColorBasisDecoder<T>::kWidth);
  add_layer(3 * fused_len, ColorBasisDecoder<T>::kWidth);

  dec.density_basis.resize(fused_len);
  std::uniform_real_distribution<double> ddist(-0.1, 0.1);
  for (auto& v : dec.density_basis) v = static_cast<T>(ddist(rng));
  return dec;
}

/// Per-ray forward state: hidden activations (kept for the backward pass) and
/// the three basis vectors, computed once per ray and reused by every sample.
template <typename T>
struct BasisEval {
  std::vector<std::vector<T>> acts;  // acts[0] = input (3), then per hidden layer
  std::vector<T> basis;              // 3 * fused_len, [b_r | b_g | b_b]
};

template <typename T>
void compute_basis(const ColorBasisDecoder<T>& dec, const T dir[3], BasisEval<T>& ev) {
  ev.acts.assign(dec.layers.size(), {});
  ev.acts[0] = {dir[0], dir[1], dir[2]};
  for (size_t l = 0; l + 1 < dec.layers.size(); ++l) {
    const auto& layer = dec.layers[l];
    const auto& in = ev.acts[l];
    std::vector<T> out(layer.out_dim);
    for (int r = 0; r < layer.out_dim; ++r) {
      double acc = layer.b[r];
      const T* wr = &layer.w[static_cast<size_t>(r) * layer.in_dim];
      for (int c = 0; c < layer.in_dim; ++c) acc += double(wr[c]) * double(in[c]);
      out[r] = acc > 0.0 ? static_cast<T>(acc) : T(0);  // ReLU
    }
    ev.acts[l + 1] = std::move(out);
  }
  const auto& out_layer = dec.layers.back();
  const auto& last = ev.acts.back();
  ev.basis.resize(out_layer.out_dim);
  for (int r = 0; r < out_layer.out_dim; ++r) {
    double acc = out_layer.b[r];
    const T* wr = &out_layer.w[static_cast<size_t>(r) * out_layer.in_dim];
    for (int c = 0; c < out_layer.in_dim; ++c) acc += double(wr[c]) * double(last[c]);
    ev.basis[r] = static_cast<T>(acc);
  }
}

template <typename T>
T softplus(T x) {
  // Overflow-safe log(1 + e^x).
  if (x > T(30)) return x;
  return std::log1p(std::exp(x));
}

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

/// rgb_i = sigmoid(<f, b_i(d)>), sigma = softplus(<f, density_basis>).
/// The density dot product never sees the direction.
template <typename T>
void decode_with_basis(const ColorBasisDecoder<T>& dec, const T* fused,
                       const BasisEval<T>& ev, T rgb[3], T& sigma) {
  const int F = dec.fused_len;
  for (int i = 0; i < 3; ++i) {
    double acc = 0;
    const T* bi = &ev.basis[static_cast<size_t>(i) * F];
    for (int c = 0; c < F; ++c) acc += double(bi[c]) * double(fused[c]);
    rgb[i] = sigmoid(static_cast<T>(acc));
  }
  double acc = 0;
  for (int c = 0; c < F; ++c) acc += double(dec.density_basis[c]) * double(fused[c]);
  sigma = softplus(static_cast<T>(acc));
}

/// One-shot convenience wrapper (basis recomputed per call).
template <typename T>
void decode(const ColorBasisDecoder<T>& dec, const T* fused, const T dir[3], T rgb[3],
            T& sigma) {
  BasisEval<T> ev;
  compute_basis(dec, dir, ev);
  decode_with_basis(dec, fused, ev, rgb, sigma);
}

/// Gradient buffers shaped like the decoder parameters.
template <typename T>
struct DecoderGrads {
  std::vector<DenseLayer<T>> layers;
  std::vector<T> density_basis;

  explicit DecoderGrads(const ColorBasisDecoder<T>& dec) {
    layers.reserve(dec.layers.size());
    for (const auto& l : dec.layers) {
      DenseLayer<T> g;
      g.out_dim = l.out_dim;
      g.in_dim = l.in_dim;
      g.w.assign(l.w.size(), T(0));
      g.b.assign(l.b.size(), T(0));
      layers.push_back(std::move(g));
    }
    density_basis.assign(dec.density_basis.size(), T(0));
  }

  void add(const DecoderGrads& o) {
    for (size_t l = 0; l < layers.size(); ++l) {
      for (size_t i = 0; i < layers[l].w.size(); ++i) layers[l].w[i] += o.layers[l].w[i];
      for (size_t i = 0; i < layers[l].b.size(); ++i) layers[l].b[i] += o.layers[l].b[i];
    }
    for (size_t i = 0; i < density_basis.size(); ++i)
      density_basis[i] += o.density_basis[i];
  }
};

/// Backpropagates a cotangent on the basis output (3 * fused_len) through the
/// MLP, accumulating weight gradients for this ray's direction.
template <typename T>
void basis_backward(const ColorBasisDecoder<T>& dec, const BasisEval<T>& ev,
                    const std::vector<T>& basis_cot, DecoderGrads<T>& grads) {
  const auto& out_layer = dec.layers.back();
  const auto& last = ev.acts.back();
  std::vector<T> act_cot(out_layer.in_dim, T(0));
  auto& gout = grads.layers.back();
  for (int r = 0; r < out_layer.out_dim; ++r) {
    const T gc = basis_cot[r];
    if (gc == T(0)) continue;
    T* gw = &gout.w[static_cast<size_t>(r) * out_layer.in_dim];
    const T* wr = &out_layer.w[static_cast<size_t>(r) * out_layer.in_dim];
    for (int c = 0; c < out_layer.in_dim; ++c) {
      gw[c] += gc * last[c];
      act_cot[c] += gc * wr[c];
    }
    gout.b[r] += gc;
  }
  for (int l = static_cast<int>(dec.layers.size()) - 2; l >= 0; --l) {
    const auto& layer = dec.layers[l];
    const auto& in = ev.acts[l];
    const auto& out = ev.acts[l + 1];
    std::vector<T> next_cot(layer.in_dim, T(0));
    auto& gl = grads.layers[l];
    for (int r = 0; r < layer.out_dim; ++r) {
      if (out[r] <= T(0)) continue;  // ReLU gate
      const T gc = act_cot[r];
      if (gc == T(0)) continue;
      T* gw = &gl.w[static_cast<size_t>(r) * layer.in_dim];
      const T* wr = &layer.w[static_cast<size_t>(r) * layer.in_dim];
      for (int c = 0; c < layer.in_dim; ++c) {
        gw[c] += gc * in[c];
        next_cot[c] += gc * wr[c];
      }
      gl.b[r] += gc;
    }
    act_cot = std::move(next_cot);
  }
}

}  // namespace wvpl
