#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "waveplanes/errors.hpp"

namespace wvpl {

/// Dense channel-major tensor of shape (channels x rows x cols).
/// Element (c, i, j) lives at v[(c * rows + i) * cols + j].
template <typename T>
struct Grid {
  int channels = 0;
  int rows = 0;
  int cols = 0;
  std::vector<T> v;

  Grid() = default;
  Grid(int channels_, int rows_, int cols_)
      : channels(channels_), rows(rows_), cols(cols_),
        v(static_cast<size_t>(channels_) * rows_ * cols_, T(0)) {}

  T& at(int c, int i, int j) {
    return v[(static_cast<size_t>(c) * rows + i) * cols + j];
  }
  const T& at(int c, int i, int j) const {
    return v[(static_cast<size_t>(c) * rows + i) * cols + j];
  }

  size_t size() const { return v.size(); }

  bool same_shape(const Grid& o) const {
    return channels == o.channels && rows == o.rows && cols == o.cols;
  }

  void fill(T value) { std::fill(v.begin(), v.end(), value); }

  template <typename U>
  Grid<U> cast() const {
    Grid<U> out(channels, rows, cols);
    for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
    return out;
  }
};

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// Smallest power of two >= n (n >= 1).
inline int next_power_of_two(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace wvpl
