#include "groupcdl/core/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace gcdl {

static_assert(std::endian::native == std::endian::little, "binary containers assume a little-endian host");

std::size_t scalar_kind_bytes(ScalarKind k) {
  switch (k) {
    case ScalarKind::f32: return 4;
    case ScalarKind::f64: return 8;
    case ScalarKind::c64: return 8;
    case ScalarKind::c128: return 16;
  }
  throw ValidationError("unknown scalar kind");
}

bool scalar_kind_is_complex(ScalarKind k) { return k == ScalarKind::c64 || k == ScalarKind::c128; }

namespace binio {

namespace {
template <class V>
void put(std::ostream& os, V v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <class V>
V get(std::istream& is) {
  V v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw ValidationError("binary read: unexpected end of file");
  return v;
}
}  // namespace

void write_u8(std::ostream& os, std::uint8_t v) { put(os, v); }
void write_u16(std::ostream& os, std::uint16_t v) { put(os, v); }
void write_u32(std::ostream& os, std::uint32_t v) { put(os, v); }
void write_f64(std::ostream& os, double v) { put(os, v); }
void write_f32(std::ostream& os, float v) { put(os, v); }
std::uint8_t read_u8(std::istream& is) { return get<std::uint8_t>(is); }
std::uint16_t read_u16(std::istream& is) { return get<std::uint16_t>(is); }
std::uint32_t read_u32(std::istream& is) { return get<std::uint32_t>(is); }
double read_f64(std::istream& is) { return get<double>(is); }
float read_f32(std::istream& is) { return get<float>(is); }

void write_magic(std::ostream& os, const char (&magic)[5]) { os.write(magic, 4); }

void expect_magic(std::istream& is, const char (&magic)[5]) {
  char buf[4] = {};
  is.read(buf, 4);
  if (!is || std::memcmp(buf, magic, 4) != 0)
    throw ValidationError(std::string("bad magic, expected ") + magic);
}

void write_payload(std::ostream& os, std::span<const Real> values, ScalarKind kind) {
  if (kind == ScalarKind::f64 || kind == ScalarKind::c128) {
    os.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * 8));
  } else {
    std::vector<float> f(values.begin(), values.end());
    os.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(f.size() * 4));
  }
}

std::vector<Real> read_payload(std::istream& is, std::size_t count, ScalarKind kind) {
  const std::size_t reals = scalar_kind_is_complex(kind) ? 2 * count : count;
  std::vector<Real> out(reals);
  if (kind == ScalarKind::f64 || kind == ScalarKind::c128) {
    is.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(reals * 8));
  } else {
    std::vector<float> f(reals);
    is.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(reals * 4));
    std::copy(f.begin(), f.end(), out.begin());
  }
  if (!is) throw ValidationError("binary read: truncated payload");
  return out;
}

}  // namespace binio

namespace {

struct CimgHeader {
  std::uint32_t n1, n2, channels;
  ScalarKind kind;
};

CimgHeader read_cimg_header(std::istream& is) {
  binio::expect_magic(is, "CIMG");
  CimgHeader h{};
  h.n1 = binio::read_u32(is);
  h.n2 = binio::read_u32(is);
  h.channels = binio::read_u32(is);
  const auto code = binio::read_u32(is);
  require(code >= 1 && code <= 4, "CIMG: unknown scalar-kind code");
  h.kind = static_cast<ScalarKind>(code);
  require(h.n1 >= 1 && h.n2 >= 1 && h.channels >= 1, "CIMG: non-positive dimensions");
  return h;
}

void write_cimg_impl(const std::filesystem::path& path, int n1, int n2, int c, std::span<const Real> body,
                     ScalarKind kind) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open for writing: " + path.string());
  binio::write_magic(os, "CIMG");
  binio::write_u32(os, n1);
  binio::write_u32(os, n2);
  binio::write_u32(os, c);
  binio::write_u32(os, static_cast<std::uint32_t>(kind));
  binio::write_payload(os, body, kind);
}

}  // namespace

void write_cimg(const std::filesystem::path& path, const RealImage& img, ScalarKind kind) {
  require(!scalar_kind_is_complex(kind), "write_cimg: real image needs a real scalar kind");
  write_cimg_impl(path, img.rows(), img.cols(), img.channels(), img.data(), kind);
}

void write_cimg(const std::filesystem::path& path, const ComplexImage& img, ScalarKind kind) {
  require(scalar_kind_is_complex(kind), "write_cimg: complex image needs a complex scalar kind");
  write_cimg_impl(path, img.rows(), img.cols(), img.channels(), as_real(img.data()), kind);
}

RealImage read_cimg_real(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open: " + path.string());
  const auto h = read_cimg_header(is);
  require(!scalar_kind_is_complex(h.kind), "read_cimg_real: file holds complex data");
  auto body = binio::read_payload(is, static_cast<std::size_t>(h.n1) * h.n2 * h.channels, h.kind);
  return RealImage(static_cast<int>(h.n1), static_cast<int>(h.n2), static_cast<int>(h.channels), std::move(body));
}

ComplexImage read_cimg_complex(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open: " + path.string());
  const auto h = read_cimg_header(is);
  const std::size_t count = static_cast<std::size_t>(h.n1) * h.n2 * h.channels;
  auto body = binio::read_payload(is, count, h.kind);
  ComplexImage out(static_cast<int>(h.n1), static_cast<int>(h.n2), static_cast<int>(h.channels));
  auto d = out.data();
  if (scalar_kind_is_complex(h.kind)) {
    for (std::size_t i = 0; i < count; ++i) d[i] = Complex(body[2 * i], body[2 * i + 1]);
  } else {
    for (std::size_t i = 0; i < count; ++i) d[i] = body[i];
  }
  return out;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void png_warn_fn(png_structp, png_const_charp) {}

}  // namespace

RealImage read_png(const std::filesystem::path& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw ValidationError("cannot open: " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw ValidationError("not a PNG file: " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warn_fn);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp& p;
    png_infop& i;
    ~Guard() { png_destroy_read_struct(&p, &i, nullptr); }
  } guard{png, info};
  std::vector<png_byte> buf;
  std::vector<png_bytep> rows;
  // libpng reports errors by longjmp back to here
  if (setjmp(png_jmpbuf(png))) throw ValidationError("corrupt PNG: " + path.string());

  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const auto width = png_get_image_width(png, info);
  const auto height = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE)
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  if (depth == 16) png_set_swap(png);  // host order
  png_read_update_info(png, info);

  const int out_depth = png_get_bit_depth(png, info);
  const auto rowbytes = png_get_rowbytes(png, info);
  buf.resize(rowbytes * height);
  rows.resize(height);
  for (png_uint_32 r = 0; r < height; ++r) rows[r] = buf.data() + r * rowbytes;
  png_read_image(png, rows.data());

  RealImage img(static_cast<int>(height), static_cast<int>(width), 1);
  for (png_uint_32 r = 0; r < height; ++r)
    for (png_uint_32 c = 0; c < width; ++c) {
      if (out_depth == 16) {
        std::uint16_t v;
        std::memcpy(&v, rows[r] + 2 * c, 2);
        img.at(0, r, c) = v / 65535.0;
      } else {
        img.at(0, r, c) = rows[r][c] / 255.0;
      }
    }
  return img;
}

void write_png(const std::filesystem::path& path, const RealImage& img, int bit_depth) {
  require(bit_depth == 8 || bit_depth == 16, "write_png: bit depth must be 8 or 16");
  require(img.channels() == 1 || img.channels() == 3, "write_png: need 1 (gray) or 3 (RGB) channels");
  const int ch = img.channels();
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw ValidationError("cannot open for writing: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warn_fn);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp& p;
    png_infop& i;
    ~Guard() { png_destroy_write_struct(&p, &i); }
  } guard{png, info};
  std::vector<png_byte> row(static_cast<std::size_t>(img.cols()) * ch * (bit_depth / 8));
  if (setjmp(png_jmpbuf(png))) throw ValidationError("png write failed: " + path.string());

  png_init_io(png, f.get());
  png_set_IHDR(png, info, img.cols(), img.rows(), bit_depth, ch == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);
  const Real maxv = bit_depth == 16 ? 65535.0 : 255.0;
  for (int r = 0; r < img.rows(); ++r) {
    for (int c = 0; c < img.cols(); ++c)
      for (int k = 0; k < ch; ++k) {
        const Real v = std::clamp(img.at(k, r, c), 0.0, 1.0);
        const auto q = static_cast<std::uint16_t>(std::lround(v * maxv));
        const std::size_t at = static_cast<std::size_t>(c) * ch + k;
        if (bit_depth == 16) std::memcpy(row.data() + 2 * at, &q, 2);
        else row[at] = static_cast<png_byte>(q);
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
}

RealImage read_image(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (ext == ".png") return read_png(path);
  if (ext == ".cimg") return read_cimg_real(path);
  throw ValidationError("unsupported image extension: " + path.string());
}

}  // namespace gcdl
