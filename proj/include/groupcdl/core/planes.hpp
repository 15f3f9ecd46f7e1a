#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "groupcdl/core/types.hpp"

namespace gcdl {

/// Multi-channel 2D array in channel-major order:
/// data[c * rows * cols + r * cols + col].
template <Scalar T>
class Planes {
 public:
  using value_type = T;

  Planes() = default;
  Planes(int rows, int cols, int channels) : Planes(rows, cols, channels, {}) {}
  Planes(int rows, int cols, int channels, std::vector<T> data)
      : rows_(rows), cols_(cols), channels_(channels), data_(std::move(data)) {
    require(rows >= 1 && cols >= 1 && channels >= 1, "Planes: dimensions must be positive");
    const auto n = static_cast<std::size_t>(rows) * cols * channels;
    if (data_.empty()) data_.assign(n, T{});
    require(data_.size() == n, "Planes: data length does not match rows*cols*channels");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int channels() const { return channels_; }
  std::size_t plane_size() const { return static_cast<std::size_t>(rows_) * cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  std::span<T> plane(int c) { return std::span<T>(data_).subspan(c * plane_size(), plane_size()); }
  std::span<const T> plane(int c) const {
    return std::span<const T>(data_).subspan(c * plane_size(), plane_size());
  }

  T& at(int c, int r, int col) { return data_[c * plane_size() + static_cast<std::size_t>(r) * cols_ + col]; }
  const T& at(int c, int r, int col) const {
    return data_[c * plane_size() + static_cast<std::size_t>(r) * cols_ + col];
  }

  template <Scalar U>
  bool same_shape(const Planes<U>& o) const {
    return rows_ == o.rows() && cols_ == o.cols() && channels_ == o.channels();
  }

  bool operator==(const Planes&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  int channels_ = 0;
  std::vector<T> data_;
};

/// An image x in R^{NC} or C^{NC}.
template <Scalar T>
using Image = Planes<T>;

/// A latent code z with q1 x q2 pixels and M subbands.
template <Scalar T>
using LatentCode = Planes<T>;

using RealImage = Image<Real>;
using ComplexImage = Image<Complex>;

template <Scalar T>
Real dot_real(std::span<const T> a, std::span<const T> b) {
  Real s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += real_part(conj(a[i]) * b[i]);
  return s;
}

template <Scalar T>
Real norm2(std::span<const T> a) {
  Real s = 0;
  for (auto v : a) s += abs2(v);
  return std::sqrt(s);
}

RealImage magnitude(const ComplexImage& x);
ComplexImage to_complex(const RealImage& x);

/// Reflect-pad (symmetric, edge excluded) on the bottom/right so that both
/// spatial dimensions become multiples of `multiple`.
template <Scalar T>
Image<T> reflect_pad_to_multiple(const Image<T>& x, int multiple);

template <Scalar T>
Image<T> crop(const Image<T>& x, int rows, int cols);

/// Circular shift by (dr, dc): out(r, c) = x(r - dr, c - dc).
template <Scalar T>
Image<T> circshift(const Image<T>& x, int dr, int dc);

}  // namespace gcdl
