#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/iostreams/copy.hpp>
#include <boost/iostreams/device/array.hpp>
#include <boost/iostreams/device/back_inserter.hpp>
#include <boost/iostreams/filter/bzip2.hpp>
#include <boost/iostreams/filter/gzip.hpp>
#include <boost/iostreams/filter/lzma.hpp>
#include <boost/iostreams/filtering_stream.hpp>

#include "waveplanes/decoder.hpp"
#include "waveplanes/errors.hpp"
#include "waveplanes/field.hpp"

namespace wvpl {

// On-disk layout (all integers little-endian):
//   "WVPL" | backend id u8 | backend-wrapped payload
// payload:
//   version u16 | config | decoder (dense f32) | per plane: entry count u32,
//   then (index u32, value f32) pairs sorted ascending.
// Plane indices are row-major over the flattened concatenation
// [father, level-1 H|V|D, ..., level-N H|V|D], channel-major within each grid.

enum class CodecBackend : uint8_t { Raw = 0, Gzip = 1, Bzip2 = 2, Lzma = 3 };

inline const char* backend_name(CodecBackend b) {
  switch (b) {
    case CodecBackend::Raw: return "raw";
    case CodecBackend::Gzip: return "gzip";
    case CodecBackend::Bzip2: return "bzip2";
    case CodecBackend::Lzma: return "lzma";
  }
  return "?";
}

inline CodecBackend backend_from_name(const std::string& s) {
  if (s == "raw") return CodecBackend::Raw;
  if (s == "gzip") return CodecBackend::Gzip;
  if (s == "bzip2") return CodecBackend::Bzip2;
  if (s == "lzma") return CodecBackend::Lzma;
  throw ConfigError("unknown codec backend: " + s);
}

inline std::vector<CodecBackend> all_backends() {
  return {CodecBackend::Raw, CodecBackend::Gzip, CodecBackend::Bzip2,
          CodecBackend::Lzma};
}

/// Hard threshold: |v| < tau -> exact 0 (+0.0, never -0.0); |v| >= tau kept,
/// so tau = 0 is the identity.
template <typename T>
WaveletField<T> threshold_coeffs(const WaveletField<T>& field, double tau) {
  if (!(tau >= 0.0)) throw ConfigError("threshold must be >= 0");
  WaveletField<T> out = field;
  for (auto& pyr : out.planes)
    for_each_grid(pyr, [&](Grid<T>& g) {
      for (auto& v : g.v)
        if (std::abs(double(v)) < tau) v = T(0);
    });
  return out;
}

template <typename T>
std::pair<size_t, size_t> count_nonzero(const WaveletField<T>& field) {
  size_t nz = 0, total = 0;
  for (const auto& pyr : field.planes)
    for_each_grid(pyr, [&](const Grid<T>& g) {
      total += g.v.size();
      for (const T v : g.v)
        if (v != T(0)) ++nz;
    });
  return {nz, total};
}

using SparseEntries = std::vector<std::pair<uint32_t, float>>;

/// Nonzero coefficients as sorted (linear index, value) pairs. Zeros are
/// never stored, which also canonicalizes -0.0 away.
inline SparseEntries to_sparse(const CoefficientPyramid<float>& pyr) {
  SparseEntries entries;
  uint32_t base = 0;
  for_each_grid(pyr, [&](const Grid<float>& g) {
    for (size_t i = 0; i < g.v.size(); ++i)
      if (g.v[i] != 0.0f) entries.emplace_back(base + static_cast<uint32_t>(i), g.v[i]);
    base += static_cast<uint32_t>(g.v.size());
  });
  return entries;
}

/// O(1) per entry: direct writes into a zero pyramid.
inline CoefficientPyramid<float> from_sparse(const SparseEntries& entries,
                                             const PyramidShape& shape) {
  auto pyr = make_zero_pyramid<float>(shape.channels, shape.target_rows,
                                      shape.target_cols, shape.levels);
  std::vector<Grid<float>*> grids;
  std::vector<uint32_t> bases;
  uint32_t base = 0;
  for_each_grid(pyr, [&](Grid<float>& g) {
    grids.push_back(&g);
    bases.push_back(base);
    base += static_cast<uint32_t>(g.v.size());
  });
  for (const auto& [idx, val] : entries) {
    if (idx >= base) throw CorruptModelError("coefficient index out of range");
    size_t gi = grids.size() - 1;
    while (bases[gi] > idx) --gi;
    grids[gi]->v[idx - bases[gi]] = val;
  }
  return pyr;
}

namespace detail {

struct ByteWriter {
  std::vector<uint8_t> bytes;
  void u8(uint8_t v) { bytes.push_back(v); }
  void u16(uint16_t v) {
    bytes.push_back(v & 0xff);
    bytes.push_back(v >> 8);
  }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back((v >> (8 * i)) & 0xff);
  }
  void f32(float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) bytes.push_back((bits >> (8 * i)) & 0xff);
  }
  void str(const std::string& s) {
    u16(static_cast<uint16_t>(s.size()));
    bytes.insert(bytes.end(), s.begin(), s.end());
  }
};

struct ByteReader {
  const uint8_t* p;
  size_t n, pos = 0;
  ByteReader(const uint8_t* data, size_t size) : p(data), n(size) {}
  void need(size_t k) const {
    if (pos + k > n) throw CorruptModelError("truncated model stream");
  }
  uint8_t u8() {
    need(1);
    return p[pos++];
  }
  uint16_t u16() {
    need(2);
    uint16_t v = p[pos] | (uint16_t(p[pos + 1]) << 8);
    pos += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(p[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  float f32() {
    const uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  double f64() {
    need(8);
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= uint64_t(p[pos + i]) << (8 * i);
    pos += 8;
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str() {
    const uint16_t len = u16();
    need(len);
    std::string s(reinterpret_cast<const char*>(p + pos), len);
    pos += len;
    return s;
  }
};

constexpr uint16_t kFormatVersion = 1;
constexpr char kMagic[4] = {'W', 'V', 'P', 'L'};

inline std::vector<uint8_t> backend_encode(const std::vector<uint8_t>& payload,
                                           CodecBackend backend) {
  if (backend == CodecBackend::Raw) return payload;
  namespace io = boost::iostreams;
  std::vector<char> out;
  try {
    io::filtering_ostream os;
    switch (backend) {
      case CodecBackend::Gzip: os.push(io::gzip_compressor()); break;
      case CodecBackend::Bzip2: os.push(io::bzip2_compressor()); break;
      case CodecBackend::Lzma: os.push(io::lzma_compressor()); break;
      default: break;
    }
    os.push(io::back_inserter(out));
    os.write(reinterpret_cast<const char*>(payload.data()),
             static_cast<std::streamsize>(payload.size()));
    os.reset();  // flush the filter chain
  } catch (const std::exception& e) {
    throw CodecError(std::string("compression failed: ") + e.what());
  }
  return {out.begin(), out.end()};
}

inline std::vector<uint8_t> backend_decode(const uint8_t* data, size_t size,
                                           CodecBackend backend) {
  if (backend == CodecBackend::Raw) return {data, data + size};
  namespace io = boost::iostreams;
  std::vector<char> out;
  try {
    io::filtering_istream is;
    switch (backend) {
      case CodecBackend::Gzip: is.push(io::gzip_decompressor()); break;
      case CodecBackend::Bzip2: is.push(io::bzip2_decompressor()); break;
      case CodecBackend::Lzma: is.push(io::lzma_decompressor()); break;
      default: break;
    }
    is.push(io::array_source(reinterpret_cast<const char*>(data), size));
    io::copy(is, io::back_inserter(out));
  } catch (const std::exception& e) {
    throw CorruptModelError(std::string("backend stream corrupt: ") + e.what());
  }
  return {out.begin(), out.end()};
}

inline void write_config(ByteWriter& w, const ModelConfig& cfg) {
  w.u32(static_cast<uint32_t>(cfg.feature_len));
  w.u32(static_cast<uint32_t>(cfg.levels));
  w.u32(static_cast<uint32_t>(cfg.spatial_rows));
  w.u32(static_cast<uint32_t>(cfg.spatial_cols));
  w.u32(static_cast<uint32_t>(cfg.time_res));
  w.u8(cfg.static_mode ? 1 : 0);
  w.u8(static_cast<uint8_t>(cfg.fusion));
  w.str(cfg.family);
  w.u32(static_cast<uint32_t>(cfg.scales.size()));
  for (int s : cfg.scales) w.u32(static_cast<uint32_t>(s));
  w.u32(static_cast<uint32_t>(cfg.k.size()));
  for (double v : cfg.k) w.f64(v);
  for (int i = 0; i < 3; ++i) w.f64(cfg.bbox_min[i]);
  for (int i = 0; i < 3; ++i) w.f64(cfg.bbox_max[i]);
  w.f64(cfg.t_min);
  w.f64(cfg.t_max);
}

inline ModelConfig read_config(ByteReader& r) {
  ModelConfig cfg;
  cfg.feature_len = static_cast<int>(r.u32());
  cfg.levels = static_cast<int>(r.u32());
  cfg.spatial_rows = static_cast<int>(r.u32());
  cfg.spatial_cols = static_cast<int>(r.u32());
  cfg.time_res = static_cast<int>(r.u32());
  cfg.static_mode = r.u8() != 0;
  const uint8_t fusion = r.u8();
  if (fusion > 2) throw CorruptModelError("bad fusion id");
  cfg.fusion = static_cast<Fusion>(fusion);
  cfg.family = r.str();
  cfg.scales.resize(r.u32());
  for (auto& s : cfg.scales) s = static_cast<int>(r.u32());
  cfg.k.resize(r.u32());
  for (auto& v : cfg.k) v = r.f64();
  for (int i = 0; i < 3; ++i) cfg.bbox_min[i] = r.f64();
  for (int i = 0; i < 3; ++i) cfg.bbox_max[i] = r.f64();
  cfg.t_min = r.f64();
  cfg.t_max = r.f64();
  return cfg;
}

}  // namespace detail

template <typename T>
WaveletField<float> cast_field(const WaveletField<T>& field) {
  WaveletField<float> out;
  out.config = field.config;
  out.planes.reserve(field.planes.size());
  for (const auto& p : field.planes) out.planes.push_back(p.template cast<float>());
  return out;
}

template <typename T>
ColorBasisDecoder<float> cast_decoder(const ColorBasisDecoder<T>& dec) {
  ColorBasisDecoder<float> out;
  out.fused_len = dec.fused_len;
  out.hidden_layers = dec.hidden_layers;
  for (const auto& l : dec.layers) {
    DenseLayer<float> fl;
    fl.out_dim = l.out_dim;
    fl.in_dim = l.in_dim;
    fl.w.assign(l.w.begin(), l.w.end());
    fl.b.assign(l.b.begin(), l.b.end());
    out.layers.push_back(std::move(fl));
  }
  out.density_basis.assign(dec.density_basis.begin(), dec.density_basis.end());
  return out;
}

/// Container bytes without thresholding (tau applied by the caller).
inline std::vector<uint8_t> serialize_model(const WaveletField<float>& field,
                                            const ColorBasisDecoder<float>& dec,
                                            CodecBackend backend) {
  detail::ByteWriter w;
  w.u16(detail::kFormatVersion);
  detail::write_config(w, field.config);
  w.u32(static_cast<uint32_t>(dec.layers.size()));
  for (const auto& l : dec.layers) {
    w.u32(static_cast<uint32_t>(l.out_dim));
    w.u32(static_cast<uint32_t>(l.in_dim));
    for (float v : l.w) w.f32(v);
    for (float v : l.b) w.f32(v);
  }
  w.u32(static_cast<uint32_t>(dec.density_basis.size()));
  for (float v : dec.density_basis) w.f32(v);
  for (const auto& pyr : field.planes) {
    const auto entries = to_sparse(pyr);
    w.u32(static_cast<uint32_t>(entries.size()));
    for (const auto& [idx, val] : entries) {
      w.u32(idx);
      w.f32(val);
    }
  }
  auto wrapped = detail::backend_encode(w.bytes, backend);
  std::vector<uint8_t> out;
  out.reserve(5 + wrapped.size());
  out.insert(out.end(), detail::kMagic, detail::kMagic + 4);
  out.push_back(static_cast<uint8_t>(backend));
  out.insert(out.end(), wrapped.begin(), wrapped.end());
  return out;
}

/// threshold -> sparse maps -> container -> lossless wrap.
inline std::vector<uint8_t> compress_model(const WaveletField<float>& field,
                                           const ColorBasisDecoder<float>& dec,
                                           double tau, CodecBackend backend) {
  return serialize_model(threshold_coeffs(field, tau), dec, backend);
}

struct DecodedModel {
  WaveletField<float> field;
  ColorBasisDecoder<float> decoder;
  CodecBackend backend = CodecBackend::Raw;
};

inline DecodedModel decompress_model(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 5 || std::memcmp(bytes.data(), detail::kMagic, 4) != 0)
    throw CorruptModelError("not a waveplanes model (bad magic)");
  if (bytes[4] > 3) throw CorruptModelError("unknown codec backend id");
  const auto backend = static_cast<CodecBackend>(bytes[4]);
  const auto payload = detail::backend_decode(bytes.data() + 5, bytes.size() - 5,
                                              backend);
  detail::ByteReader r(payload.data(), payload.size());
  const uint16_t version = r.u16();
  if (version != detail::kFormatVersion)
    throw CorruptModelError("unsupported format version");
  DecodedModel m;
  m.backend = backend;
  auto cfg = detail::read_config(r);
  try {
    validate_config(cfg);
  } catch (const ConfigError& e) {
    throw CorruptModelError(std::string("invalid stored config: ") + e.what());
  }
  m.field.config = cfg;

  const uint32_t layer_count = r.u32();
  if (layer_count != 4 && layer_count != 5)
    throw CorruptModelError("bad decoder layer count");
  m.decoder.fused_len = cfg.fused_len();
  m.decoder.hidden_layers = static_cast<int>(layer_count) - 1;
  m.field.config.decoder_hidden_layers = m.decoder.hidden_layers;
  for (uint32_t l = 0; l < layer_count; ++l) {
    DenseLayer<float> layer;
    layer.out_dim = static_cast<int>(r.u32());
    layer.in_dim = static_cast<int>(r.u32());
    const int want_in = l == 0 ? 3 : ColorBasisDecoder<float>::kWidth;
    const int want_out = l + 1 == layer_count ? 3 * cfg.fused_len()
                                              : ColorBasisDecoder<float>::kWidth;
    if (layer.in_dim != want_in || layer.out_dim != want_out)
      throw CorruptModelError("decoder layer shape mismatch");
    layer.w.resize(static_cast<size_t>(layer.out_dim) * layer.in_dim);
    layer.b.resize(layer.out_dim);
    for (auto& v : layer.w) v = r.f32();
    for (auto& v : layer.b) v = r.f32();
    m.decoder.layers.push_back(std::move(layer));
  }
  const uint32_t density_len = r.u32();
  if (density_len != static_cast<uint32_t>(cfg.fused_len()))
    throw CorruptModelError("density basis length mismatch");
  m.decoder.density_basis.resize(density_len);
  for (auto& v : m.decoder.density_basis) v = r.f32();

  for (PlaneId id : active_planes(cfg)) {
    const auto [rows, cols] = plane_shape(cfg, id);
    const PyramidShape shape{cfg.feature_len, rows, cols, cfg.levels};
    SparseEntries entries(r.u32());
    uint32_t prev = 0;
    for (size_t i = 0; i < entries.size(); ++i) {
      entries[i].first = r.u32();
      entries[i].second = r.f32();
      if (i > 0 && entries[i].first <= prev)
        throw CorruptModelError("entries not strictly ascending");
      prev = entries[i].first;
    }
    m.field.planes.push_back(from_sparse(entries, shape));
  }
  if (r.pos != r.n) throw CorruptModelError("trailing bytes after model");
  return m;
}

struct BenchRow {
  CodecBackend backend;
  size_t bytes = 0;
  double ratio_vs_raw = 0;  // raw unthresholded size / bytes
};

/// Sizes for each backend at the given threshold, against the raw (tau = 0,
/// uncompressed) serialization as baseline.
inline std::vector<BenchRow> bench_codec(const WaveletField<float>& field,
                                         const ColorBasisDecoder<float>& dec,
                                         double tau,
                                         const std::vector<CodecBackend>& backends) {
  if (backends.empty()) throw ConfigError("bench_codec needs at least one backend");
  const size_t raw_size = serialize_model(field, dec, CodecBackend::Raw).size();
  std::vector<BenchRow> rows;
  rows.reserve(backends.size());
  for (CodecBackend b : backends) {
    BenchRow row;
    row.backend = b;
    row.bytes = compress_model(field, dec, tau, b).size();
    row.ratio_vs_raw = double(raw_size) / double(row.bytes);
    rows.push_back(row);
  }
  return rows;
}

inline void write_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CodecError("cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CodecError("write failed: " + path);
}

inline std::vector<uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw CodecError("cannot open: " + path);
  const auto size = in.tellg();
  in.seekg(0);
  std::vector<uint8_t> bytes(static_cast<size_t>(size));
  in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in) throw CodecError("read failed: " + path);
  return bytes;
}

}  // namespace wvpl
