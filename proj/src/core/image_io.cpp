#include "layerbokeh/core/image_io.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "layerbokeh/core/error.hpp"

namespace layerbokeh {

namespace {

struct PngErrorState {
  char message[256] = {0};
};

void on_png_error(png_structp png, png_const_charp msg) {
  auto* state = static_cast<PngErrorState*>(png_get_error_ptr(png));
  if (state != nullptr) {
    std::strncpy(state->message, msg, sizeof(state->message) - 1);
  }
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

struct MemoryReader {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t offset;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t count) {
  auto* reader = static_cast<MemoryReader*>(png_get_io_ptr(png));
  if (reader->offset + count > reader->size) {
    png_error(png, "unexpected end of PNG data");
  }
  std::memcpy(out, reader->data + reader->offset, count);
  reader->offset += count;
}

void write_to_vector(png_structp png, png_bytep data, png_size_t count) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + count);
}

void flush_noop(png_structp) {}

struct RawPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> bytes;  // big-endian samples for 16-bit
};

// Keeps all C++ objects with non-trivial destructors outside the region a
// longjmp can cross.
bool decode_raw(const std::uint8_t* data, std::size_t size, RawPng& raw,
                std::vector<png_bytep>& rows, PngErrorState& err) {
  if (size < 8 || png_sig_cmp(data, 0, 8) != 0) {
    std::strncpy(err.message, "not a PNG file", sizeof(err.message) - 1);
    return false;
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err,
                                           on_png_error, on_png_warning);
  if (png == nullptr) {
    std::strncpy(err.message, "out of memory", sizeof(err.message) - 1);
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    std::strncpy(err.message, "out of memory", sizeof(err.message) - 1);
    return false;
  }
  MemoryReader reader{data, size, 0};
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, &reader, read_from_memory);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  raw.width = static_cast<int>(png_get_image_width(png, info));
  raw.height = static_cast<int>(png_get_image_height(png, info));
  raw.channels = png_get_channels(png, info);
  raw.bit_depth = png_get_bit_depth(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  raw.bytes.resize(row_bytes * raw.height);
  rows.resize(raw.height);
  for (int y = 0; y < raw.height; ++y) {
    rows[y] = raw.bytes.data() + row_bytes * y;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

RawPng decode_png(std::span<const std::uint8_t> bytes) {
  RawPng raw;
  std::vector<png_bytep> rows;
  PngErrorState err;
  if (!decode_raw(bytes.data(), bytes.size(), raw, rows, err)) {
    throw DecodeError(std::string("PNG decode failed: ") + err.message);
  }
  if (raw.bit_depth != 8 && raw.bit_depth != 16) {
    throw DecodeError("unsupported PNG bit depth " +
                      std::to_string(raw.bit_depth));
  }
  return raw;
}

std::vector<float> normalized_samples(const RawPng& raw) {
  const std::size_t count =
      static_cast<std::size_t>(raw.width) * raw.height * raw.channels;
  std::vector<float> out(count);
  if (raw.bit_depth == 8) {
    for (std::size_t i = 0; i < count; ++i) {
      out[i] = static_cast<float>(raw.bytes[i] / 255.0);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const unsigned v = (raw.bytes[2 * i] << 8) | raw.bytes[2 * i + 1];
      out[i] = static_cast<float>(v / 65535.0);
    }
  }
  return out;
}

bool encode_raw(const std::uint8_t* samples, int width, int height,
                int channels, int bit_depth, std::vector<std::uint8_t>& out,
                std::vector<png_bytep>& rows, PngErrorState& err) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err,
                                            on_png_error, on_png_warning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  static constexpr int kColorTypes[] = {PNG_COLOR_TYPE_GRAY,
                                        PNG_COLOR_TYPE_GRAY_ALPHA,
                                        PNG_COLOR_TYPE_RGB,
                                        PNG_COLOR_TYPE_RGB_ALPHA};
  png_set_write_fn(png, &out, write_to_vector, flush_noop);
  png_set_IHDR(png, info, width, height, bit_depth, kColorTypes[channels - 1],
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  // Fixed compression settings keep output bytes reproducible.
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  const std::size_t row_bytes =
      static_cast<std::size_t>(width) * channels * (bit_depth / 8);
  rows.resize(height);
  for (int y = 0; y < height; ++y) {
    rows[y] = const_cast<png_bytep>(samples + row_bytes * y);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

std::vector<std::uint8_t> encode_samples(std::span<const float> samples,
                                         int width, int height, int channels,
                                         int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) {
    throw InvalidArgument("PNG bit depth must be 8 or 16");
  }
  std::vector<std::uint8_t> packed;
  if (bit_depth == 8) {
    packed.resize(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      packed[i] = static_cast<std::uint8_t>(std::lround(samples[i] * 255.0));
    }
  } else {
    packed.resize(samples.size() * 2);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto v = static_cast<unsigned>(std::lround(samples[i] * 65535.0));
      packed[2 * i] = static_cast<std::uint8_t>(v >> 8);
      packed[2 * i + 1] = static_cast<std::uint8_t>(v & 0xff);
    }
  }
  std::vector<std::uint8_t> out;
  std::vector<png_bytep> rows;
  PngErrorState err;
  if (!encode_raw(packed.data(), width, height, channels, bit_depth, out, rows,
                  err)) {
    throw IoError(std::string("PNG encode failed: ") + err.message);
  }
  return out;
}

std::vector<float> first_channel(const RawPng& raw) {
  std::vector<float> all = normalized_samples(raw);
  if (raw.channels == 1) return all;
  std::vector<float> out(static_cast<std::size_t>(raw.width) * raw.height);
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = all[p * raw.channels];
  return out;
}

}  // namespace

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

ImageBuffer decode_image(std::span<const std::uint8_t> bytes) {
  RawPng raw = decode_png(bytes);
  return ImageBuffer(raw.width, raw.height, raw.channels, ColorSpace::kEncoded,
                     normalized_samples(raw));
}

ImageBuffer load_image(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_image(bytes);
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_png(const ImageBuffer& image, int bit_depth) {
  return encode_samples(image.data(), image.width(), image.height(),
                        image.channels(), bit_depth);
}

void save_image(const ImageBuffer& image, const std::filesystem::path& path,
                int bit_depth) {
  write_file_atomic(path, encode_png(image, bit_depth));
}

DisparityMap decode_disparity(std::span<const std::uint8_t> bytes) {
  RawPng raw = decode_png(bytes);
  return DisparityMap(raw.width, raw.height, first_channel(raw));
}

DisparityMap load_disparity(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_disparity(bytes);
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.what());
  }
}

void save_disparity(const DisparityMap& map,
                    const std::filesystem::path& path) {
  write_file_atomic(path, encode_samples(map.data(), map.width(), map.height(),
                                         1, 16));
}

Mask load_mask(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    RawPng raw = decode_png(bytes);
    return Mask(raw.width, raw.height, first_channel(raw));
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.what());
  }
}

void save_mask(const Mask& mask, const std::filesystem::path& path) {
  write_file_atomic(path, encode_samples(mask.data(), mask.width(),
                                         mask.height(), 1, 8));
}

void write_disparity_range(const std::filesystem::path& png_path,
                           DisparityRange range) {
  std::filesystem::path sidecar = png_path;
  sidecar += ".range";
  std::ostringstream text;
  text.precision(17);
  text << range.min << ' ' << range.max << '\n';
  const std::string s = text.str();
  write_file_atomic(sidecar, std::span(reinterpret_cast<const std::uint8_t*>(
                                           s.data()),
                                       s.size()));
}

std::optional<DisparityRange> read_disparity_range(
    const std::filesystem::path& png_path) {
  std::filesystem::path sidecar = png_path;
  sidecar += ".range";
  std::ifstream in(sidecar);
  if (!in) return std::nullopt;
  DisparityRange range;
  if (!(in >> range.min >> range.max)) {
    throw ParseError(sidecar.string() + ": expected \"min max\"");
  }
  return range;
}

std::pair<ImageBuffer, DisparityMap> load_image_with_disparity(
    const std::filesystem::path& image_path,
    const std::filesystem::path& disparity_path) {
  ImageBuffer image = load_image(image_path);
  DisparityMap disparity = load_disparity(disparity_path);
  if (!image.same_size(disparity.width(), disparity.height())) {
    throw InvalidArgument(
        "dimension mismatch: " + image_path.string() + " is " +
        std::to_string(image.width()) + "x" + std::to_string(image.height()) +
        " but " + disparity_path.string() + " is " +
        std::to_string(disparity.width()) + "x" +
        std::to_string(disparity.height()));
  }
  return {std::move(image), std::move(disparity)};
}

}  // namespace layerbokeh
