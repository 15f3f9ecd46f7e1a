#include "groupcdl/core/planes.hpp"

namespace gcdl {

RealImage magnitude(const ComplexImage& x) {
  RealImage out(x.rows(), x.cols(), x.channels());
  auto src = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::abs(src[i]);
  return out;
}

ComplexImage to_complex(const RealImage& x) {
  ComplexImage out(x.rows(), x.cols(), x.channels());
  auto src = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i];
  return out;
}

namespace {
int reflect_index(int i, int n) {
  // symmetric reflection without repeating the edge sample: n, n+1 -> n-2, n-3
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}
}  // namespace

template <Scalar T>
Image<T> reflect_pad_to_multiple(const Image<T>& x, int multiple) {
  require(multiple >= 1, "reflect_pad_to_multiple: multiple must be >= 1");
  const int r2 = (x.rows() + multiple - 1) / multiple * multiple;
  const int c2 = (x.cols() + multiple - 1) / multiple * multiple;
  if (r2 == x.rows() && c2 == x.cols()) return x;
  Image<T> out(r2, c2, x.channels());
  for (int c = 0; c < x.channels(); ++c)
    for (int r = 0; r < r2; ++r)
      for (int k = 0; k < c2; ++k) out.at(c, r, k) = x.at(c, reflect_index(r, x.rows()), reflect_index(k, x.cols()));
  return out;
}

template <Scalar T>
Image<T> crop(const Image<T>& x, int rows, int cols) {
  require(rows <= x.rows() && cols <= x.cols(), "crop: target larger than source");
  if (rows == x.rows() && cols == x.cols()) return x;
  Image<T> out(rows, cols, x.channels());
  for (int c = 0; c < x.channels(); ++c)
    for (int r = 0; r < rows; ++r)
      for (int k = 0; k < cols; ++k) out.at(c, r, k) = x.at(c, r, k);
  return out;
}

template <Scalar T>
Image<T> circshift(const Image<T>& x, int dr, int dc) {
  Image<T> out(x.rows(), x.cols(), x.channels());
  const int n1 = x.rows(), n2 = x.cols();
  for (int c = 0; c < x.channels(); ++c)
    for (int r = 0; r < n1; ++r)
      for (int k = 0; k < n2; ++k)
        out.at(c, ((r + dr) % n1 + n1) % n1, ((k + dc) % n2 + n2) % n2) = x.at(c, r, k);
  return out;
}

template Image<Real> reflect_pad_to_multiple(const Image<Real>&, int);
template Image<Complex> reflect_pad_to_multiple(const Image<Complex>&, int);
template Image<Real> crop(const Image<Real>&, int, int);
template Image<Complex> crop(const Image<Complex>&, int, int);
template Image<Real> circshift(const Image<Real>&, int, int);
template Image<Complex> circshift(const Image<Complex>&, int, int);

}  // namespace gcdl
