#include "mriq/service/png16.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "mriq/error.hpp"

namespace mriq::service {

namespace {

struct ReadCursor {
  const std::string* data;
  std::size_t pos;
};

void write_bytes(png_structp p, png_bytep data, png_size_t len) {
  static_cast<std::string*>(png_get_io_ptr(p))->append(reinterpret_cast<const char*>(data), len);
}

void read_bytes(png_structp p, png_bytep data, png_size_t len) {
  auto* c = static_cast<ReadCursor*>(png_get_io_ptr(p));
  if (c->pos + len > c->data->size()) png_error(p, "truncated stream");
  std::memcpy(data, c->data->data() + c->pos, len);
  c->pos += len;
}

}  // namespace

Windowing full_range_window(const RealImage& img) {
  if (img.empty()) return {};
  const auto [lo, hi] = std::minmax_element(img.values().begin(), img.values().end());
  const double span = *hi - *lo;
  return {*lo, span > 0.0 ? span / 65535.0 : 1.0};
}

std::vector<std::uint16_t> quantize(const RealImage& img, const Windowing& w) {
  std::vector<std::uint16_t> out(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double c = std::round((img[i] - w.offset) / w.scale);
    out[i] = static_cast<std::uint16_t>(std::clamp(c, 0.0, 65535.0));
  }
  return out;
}

RealImage dequantize(const std::vector<std::uint16_t>& codes, int rows, int cols, const Windowing& w) {
  RealImage out(rows, cols);
  if (codes.size() != out.size()) throw InvalidArgument("dequantize: size mismatch");
  for (std::size_t i = 0; i < codes.size(); ++i) out[i] = w.offset + w.scale * codes[i];
  return out;
}

// libpng reports errors by longjmp; every C++ object touched after setjmp
// is declared before it so the jump never skips a destructor.
std::string encode_png16(const Png16& img) {
  if (img.width <= 0 || img.height <= 0 || img.codes.size() != static_cast<std::size_t>(img.width) * img.height)
    throw InvalidArgument("encode_png16: bad dimensions");
  std::string out;
  std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * 2);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png: cannot create writer");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png: encoding failed");
  }
  png_set_write_fn(png, &out, write_bytes, nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 16,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      const std::uint16_t v = img.codes[static_cast<std::size_t>(r) * img.width + c];
      row[2 * c] = static_cast<unsigned char>(v >> 8);  // PNG samples are big-endian
      row[2 * c + 1] = static_cast<unsigned char>(v & 0xff);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

Png16 decode_png16(const std::string& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0)
    throw IoError("not a PNG stream");
  ReadCursor cursor{&bytes, 0};
  Png16 out;
  std::vector<unsigned char> row;
  bool bad_format = false;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png: cannot create reader");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png: decoding failed");
  }
  png_set_read_fn(png, &cursor, read_bytes);
  png_read_info(png, info);
  if (png_get_bit_depth(png, info) != 16 || png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY) {
    bad_format = true;
  } else {
    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.codes.resize(static_cast<std::size_t>(out.width) * out.height);
    row.resize(static_cast<std::size_t>(out.width) * 2);
    for (int r = 0; r < out.height; ++r) {
      png_read_row(png, row.data(), nullptr);
      for (int c = 0; c < out.width; ++c)
        out.codes[static_cast<std::size_t>(r) * out.width + c] =
            static_cast<std::uint16_t>((row[2 * c] << 8) | row[2 * c + 1]);
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (bad_format) throw IoError("png: expected 16-bit grayscale");
  return out;
}

}  // namespace mriq::service
