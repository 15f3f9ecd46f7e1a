#pragma once

#include <complex>
#include <concepts>
#include <span>
#include <stdexcept>
#include <string>

namespace gcdl {

using Real = double;
using Complex = std::complex<double>;

template <class T>
concept Scalar = std::same_as<T, Real> || std::same_as<T, Complex>;

template <Scalar T>
inline constexpr bool is_complex_v = std::same_as<T, Complex>;

/// Bad input shape, configuration or argument. Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values or divergence. Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ValidationError(what);
}

inline Real conj(Real x) { return x; }
inline Complex conj(Complex x) { return std::conj(x); }
inline Real abs2(Real x) { return x * x; }
inline Real abs2(Complex x) { return std::norm(x); }
inline Real real_part(Real x) { return x; }
inline Real real_part(Complex x) { return x.real(); }

/// View an interleaved real buffer as complex values (and back). The layout
/// guarantee of std::complex makes this well defined.
inline std::span<Complex> as_complex(std::span<Real> v) {
  return {reinterpret_cast<Complex*>(v.data()), v.size() / 2};
}
inline std::span<const Complex> as_complex(std::span<const Real> v) {
  return {reinterpret_cast<const Complex*>(v.data()), v.size() / 2};
}
inline std::span<Real> as_real(std::span<Complex> v) {
  return {reinterpret_cast<Real*>(v.data()), v.size() * 2};
}
inline std::span<const Real> as_real(std::span<const Complex> v) {
  return {reinterpret_cast<const Real*>(v.data()), v.size() * 2};
}

/// Reinterpret a real buffer as a span of T (identity for Real).
template <Scalar T>
std::span<T> view_as(std::span<Real> v) {
  if constexpr (is_complex_v<T>) return as_complex(v);
  else return v;
}
template <Scalar T>
std::span<const T> view_as(std::span<const Real> v) {
  if constexpr (is_complex_v<T>) return as_complex(v);
  else return v;
}

}  // namespace gcdl
