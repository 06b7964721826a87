#include "pccseg/image_io.hpp"

#include <csetjmp>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include <jpeglib.h>
#include <png.h>

#include <json.hpp>

namespace pcc::io {

namespace {

// ---------------------------------------------------------------------------
// PNG

struct PngReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void png_read_from_span(png_structp png, png_bytep out, png_size_t count) {
  auto* cur = static_cast<PngReadCursor*>(png_get_io_ptr(png));
  if (cur->offset + count > cur->bytes.size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, cur->bytes.data() + cur->offset, count);
  cur->offset += count;
}

void png_write_to_vector(png_structp png, png_bytep in, png_size_t count) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), in, in + count);
}

void png_flush_noop(png_structp) {}

void png_warning_silent(png_structp, png_const_charp) {}

[[noreturn]] void png_error_silent(png_structp png, png_const_charp) { png_longjmp(png, 1); }

bool is_png(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

bool is_jpeg(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF;
}

DecodedImage decode_png(std::span<const std::uint8_t> bytes) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_silent,
                                           png_warning_silent);
  if (!png) throw IoError("decode failure: out of memory");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("decode failure: out of memory");
  }

  DecodedImage out;
  std::vector<png_bytep> rows;
  PngReadCursor cursor{bytes, 0};

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("decode failure: malformed PNG");
  }

  png_set_read_fn(png, &cursor, png_read_from_span);
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);

  if (bit_depth == 16) png_set_strip_16(png);  // keeps the high byte
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  out.width = static_cast<int>(width);
  out.height = static_cast<int>(height);
  out.channels = png_get_channels(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  out.data.resize(stride * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = out.data.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

// ---------------------------------------------------------------------------
// JPEG

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  std::longjmp(err->jump, 1);
}

void jpeg_output_silent(j_common_ptr) {}

DecodedImage decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.base.output_message = jpeg_output_silent;

  DecodedImage out;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw IoError("decode failure: malformed JPEG");
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  if (cinfo.jpeg_color_space == JCS_CMYK || cinfo.jpeg_color_space == JCS_YCCK) {
    jpeg_destroy_decompress(&cinfo);
    throw IoError("unsupported format: CMYK JPEG");
  }
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out.width = static_cast<int>(cinfo.output_width);
  out.height = static_cast<int>(cinfo.output_height);
  out.channels = cinfo.output_components;
  const std::size_t stride = static_cast<std::size_t>(out.width) * out.channels;
  out.data.resize(stride * out.height);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.data.data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

// Overlay tints by class; none of them is pure red, so red stays reserved for
// misclassified pixels.
constexpr std::array<Rgb, 8> kOverlayTints = {{
    {0, 0, 0},
    {0, 255, 0},
    {0, 0, 255},
    {255, 255, 0},
    {0, 255, 255},
    {255, 0, 255},
    {255, 128, 0},
    {255, 255, 255},
}};
constexpr double kOverlayAlpha = 0.5;

void require_no_unlabeled(const LabelMap& labels) {
  for (Label l : labels.labels) {
    if (l < 0) throw InputError("label map contains unlabeled pixels");
  }
}

}  // namespace

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write file: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

DecodedImage decode(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw IoError("decode failure: empty input");
  DecodedImage img;
  if (is_png(bytes)) {
    img = decode_png(bytes);
  } else if (is_jpeg(bytes)) {
    img = decode_jpeg(bytes);
  } else {
    throw IoError("decode failure: unsupported format (expected PNG or JPEG)");
  }
  if (img.width <= 0 || img.height <= 0) throw IoError("decode failure: zero-dimension image");
  return img;
}

DecodedImage decode_file(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return decode(bytes);
}

std::vector<std::uint8_t> encode_png(int width, int height, int channels,
                                     std::span<const std::uint8_t> data) {
  int color_type = 0;
  switch (channels) {
    case 1: color_type = PNG_COLOR_TYPE_GRAY; break;
    case 2: color_type = PNG_COLOR_TYPE_GRAY_ALPHA; break;
    case 3: color_type = PNG_COLOR_TYPE_RGB; break;
    case 4: color_type = PNG_COLOR_TYPE_RGBA; break;
    default: throw IoError("encode failure: unsupported channel count");
  }
  const std::size_t stride = static_cast<std::size_t>(width) * channels;
  if (width <= 0 || height <= 0 || data.size() != stride * height)
    throw IoError("encode failure: buffer size does not match dimensions");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                            png_warning_silent);
  if (!png) throw IoError("encode failure: out of memory");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("encode failure: out of memory");
  }
  std::vector<std::uint8_t> out;
  std::vector<png_bytep> rows(height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("encode failure");
  }
  png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y)
    rows[y] = const_cast<png_bytep>(data.data() + y * stride);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

ImageBuffer to_rgb(const DecodedImage& img) {
  ImageBuffer out(img.width, img.height);
  const std::size_t n = out.pixel_count();
  const int ch = img.channels;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* px = img.data.data() + i * ch;
    std::uint8_t* dst = out.data.data() + 3 * i;
    if (ch <= 2) {
      dst[0] = dst[1] = dst[2] = px[0];
    } else {
      dst[0] = px[0];
      dst[1] = px[1];
      dst[2] = px[2];
    }
  }
  return out;
}

ImageBuffer image_from_bytes(std::span<const std::uint8_t> bytes) {
  return to_rgb(decode(bytes));
}

ImageBuffer load_image(const std::filesystem::path& path) {
  return to_rgb(decode_file(path));
}

LabelMap scribbles_from_decoded(const DecodedImage& img, int num_classes) {
  if (img.channels != 4 && img.channels != 2)
    throw InputError("scribbles must carry an alpha channel (RGBA PNG)");
  if (num_classes < 1 || num_classes > static_cast<int>(kScribblePalette.size()))
    throw InputError("num_classes must be in [1, 8]");
  LabelMap out(img.width, img.height, kUnlabeled);
  const std::size_t n = out.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* px = img.data.data() + i * img.channels;
    const std::uint8_t alpha = px[img.channels - 1];
    if (alpha == 0) continue;
    const Rgb c = img.channels == 4 ? Rgb{px[0], px[1], px[2]} : Rgb{px[0], px[0], px[0]};
    Label found = kUnlabeled;
    for (int k = 0; k < num_classes; ++k) {
      if (kScribblePalette[k] == c) {
        found = k;
        break;
      }
    }
    if (found == kUnlabeled) {
      throw InputError("unknown scribble color (" + std::to_string(c.r) + "," +
                       std::to_string(c.g) + "," + std::to_string(c.b) + ")");
    }
    out.labels[i] = found;
  }
  return out;
}

LabelMap load_scribbles(const std::filesystem::path& path, int num_classes) {
  return scribbles_from_decoded(decode_file(path), num_classes);
}

LabelMap ground_truth_from_decoded(const DecodedImage& img) {
  if (img.channels > 2) throw InputError("ground truth must be a grayscale image");
  LabelMap out(img.width, img.height);
  const std::size_t n = out.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t v = img.data[i * img.channels];
    out.labels[i] = v == 0 ? 0 : (v == 255 ? 1 : kIgnore);
  }
  return out;
}

LabelMap load_ground_truth(const std::filesystem::path& path) {
  return ground_truth_from_decoded(decode_file(path));
}

CutPolygon parse_polygon(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed polygon JSON: ") + e.what());
  }
  if (!doc.is_array()) throw InputError("malformed polygon JSON: expected an array");
  CutPolygon poly;
  for (const auto& v : doc) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw InputError("malformed polygon JSON: vertices must be [x, y] number pairs");
    poly.vertices.push_back({v[0].get<double>(), v[1].get<double>()});
  }
  poly.validate();
  return poly;
}

CutPolygon load_polygon(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_polygon(std::string(bytes.begin(), bytes.end()));
}

std::uint8_t mask_level(Label label, int num_classes) {
  if (num_classes < 2) num_classes = 2;
  return static_cast<std::uint8_t>(std::lround(255.0 * label / (num_classes - 1)));
}

std::vector<std::uint8_t> encode_mask(const LabelMap& labels, int num_classes) {
  require_no_unlabeled(labels);
  if (num_classes <= 0) num_classes = std::max(2, labels.implied_classes());
  std::vector<std::uint8_t> gray(labels.pixel_count());
  for (std::size_t i = 0; i < gray.size(); ++i) {
    if (labels.labels[i] >= num_classes) throw InputError("label exceeds class count");
    gray[i] = mask_level(labels.labels[i], num_classes);
  }
  return encode_png(labels.width, labels.height, 1, gray);
}

void save_mask(const LabelMap& labels, const std::filesystem::path& path, int num_classes) {
  write_file(path, encode_mask(labels, num_classes));
}

ImageBuffer render_overlay(const ImageBuffer& image, const LabelMap& labels,
                           const std::optional<LabelMap>& reference) {
  require_no_unlabeled(labels);
  if (labels.width != image.width || labels.height != image.height)
    throw InputError("overlay: label map and image dimensions differ");
  if (reference && (reference->width != image.width || reference->height != image.height))
    throw InputError("overlay: reference map and image dimensions differ");
  ImageBuffer out(image.width, image.height);
  const std::size_t n = image.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    const Label l = labels.labels[i];
    std::uint8_t* dst = out.data.data() + 3 * i;
    if (reference) {
      const Label g = reference->labels[i];
      if (g >= 0 && g != l) {
        dst[0] = 255;
        dst[1] = 0;
        dst[2] = 0;
        continue;
      }
    }
    const Rgb tint = kOverlayTints[static_cast<std::size_t>(l) % kOverlayTints.size()];
    const std::uint8_t* src = image.data.data() + 3 * i;
    const std::uint8_t t[3] = {tint.r, tint.g, tint.b};
    for (int c = 0; c < 3; ++c) {
      dst[c] = static_cast<std::uint8_t>(
          std::lround((1.0 - kOverlayAlpha) * src[c] + kOverlayAlpha * t[c]));
    }
  }
  return out;
}

std::vector<std::uint8_t> encode_overlay(const ImageBuffer& image, const LabelMap& labels,
                                         const std::optional<LabelMap>& reference) {
  const ImageBuffer over = render_overlay(image, labels, reference);
  return encode_png(over.width, over.height, 3, over.data);
}

void save_overlay(const ImageBuffer& image, const LabelMap& labels,
                  const std::optional<LabelMap>& reference,
                  const std::filesystem::path& path) {
  write_file(path, encode_overlay(image, labels, reference));
}

void save_png(const ImageBuffer& image, const std::filesystem::path& path) {
  write_file(path, encode_png(image.width, image.height, 3, image.data));
}

}  // namespace pcc::io
