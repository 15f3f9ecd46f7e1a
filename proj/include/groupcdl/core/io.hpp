#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "groupcdl/core/planes.hpp"

namespace gcdl {

/// Scalar-kind codes shared by the CIMG/CKSP/GCDL containers.
enum class ScalarKind : std::uint8_t { f32 = 1, f64 = 2, c64 = 3, c128 = 4 };

std::size_t scalar_kind_bytes(ScalarKind k);
bool scalar_kind_is_complex(ScalarKind k);

namespace binio {
void write_u8(std::ostream& os, std::uint8_t v);
void write_u16(std::ostream& os, std::uint16_t v);
void write_u32(std::ostream& os, std::uint32_t v);
void write_f64(std::ostream& os, double v);
void write_f32(std::ostream& os, float v);
std::uint8_t read_u8(std::istream& is);
std::uint16_t read_u16(std::istream& is);
std::uint32_t read_u32(std::istream& is);
double read_f64(std::istream& is);
float read_f32(std::istream& is);
void write_magic(std::ostream& os, const char (&magic)[5]);
void expect_magic(std::istream& is, const char (&magic)[5]);

/// Writes interleaved real values in the given kind (f32/c64 narrow to float).
void write_payload(std::ostream& os, std::span<const Real> values, ScalarKind kind);
/// Reads `count` scalars of `kind`; complex kinds yield 2*count reals.
std::vector<Real> read_payload(std::istream& is, std::size_t count, ScalarKind kind);
}  // namespace binio

// Raw float image: "CIMG", u32 n1, n2, C, u32 scalar-kind code, little-endian
// channel-major body.
void write_cimg(const std::filesystem::path& path, const RealImage& img, ScalarKind kind = ScalarKind::f64);
void write_cimg(const std::filesystem::path& path, const ComplexImage& img, ScalarKind kind = ScalarKind::c128);
RealImage read_cimg_real(const std::filesystem::path& path);
/// Real payloads are promoted to complex.
ComplexImage read_cimg_complex(const std::filesystem::path& path);

/// 8- or 16-bit grayscale PNG, intensities mapped to [0, 1]. Writing also accepts
/// 3-channel images as RGB.
void write_png(const std::filesystem::path& path, const RealImage& img, int bit_depth = 8);
RealImage read_png(const std::filesystem::path& path);

/// Dispatches on extension: .png or .cimg.
RealImage read_image(const std::filesystem::path& path);

}  // namespace gcdl
