#include "warpkit/image.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

#include "warpkit/errors.hpp"

namespace warpkit {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) throw DataError("cannot open file: " + path.string());
  return f;
}

std::vector<uint8_t> read_png_bytes(FILE* f, const std::filesystem::path& path, int& w, int& h,
                                    int& channels) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("failed to decode PNG: " + path.string());
  }
  png_init_io(png, f);
  png_read_info(png, info);

  png_set_expand(png);       // palette/low-bit-depth/tRNS to full bytes
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  w = int(png_get_image_width(png, info));
  h = int(png_get_image_height(png, info));
  channels = int(png_get_channels(png, info));
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("unsupported PNG channel count in " + path.string());
  }

  std::vector<uint8_t> bytes(size_t(w) * h * channels);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = bytes.data() + size_t(y) * w * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return bytes;
}

struct JpegErrorMgr {
  jpeg_error_mgr base;
  jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr info) {
  longjmp(reinterpret_cast<JpegErrorMgr*>(info->err)->jump, 1);
}

std::vector<uint8_t> read_jpeg_bytes(FILE* f, const std::filesystem::path& path, int& w, int& h,
                                     int& channels) {
  jpeg_decompress_struct cinfo{};
  JpegErrorMgr err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw DataError("failed to decode JPEG: " + path.string());
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);

  w = int(cinfo.output_width);
  h = int(cinfo.output_height);
  channels = int(cinfo.output_components);
  std::vector<uint8_t> bytes(size_t(w) * h * channels);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = bytes.data() + size_t(cinfo.output_scanline) * w * channels;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return bytes;
}

bool has_png_signature(FILE* f) {
  uint8_t sig[8] = {};
  size_t n = std::fread(sig, 1, 8, f);
  std::rewind(f);
  return n == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

}  // namespace

Image Image::to_gray() const {
  if (channels == 1) return *this;
  Image g(width, height, 1);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      g.at(x, y, 0) =
          0.299f * at(x, y, 0) + 0.587f * at(x, y, 1) + 0.114f * at(x, y, 2);
  return g;
}

size_t Mask::foreground_count() const {
  return size_t(std::count_if(data.begin(), data.end(), [](uint8_t v) { return v != 0; }));
}

Image load_image(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  int w = 0, h = 0, c = 0;
  std::vector<uint8_t> bytes = has_png_signature(f.get())
                                   ? read_png_bytes(f.get(), path, w, h, c)
                                   : read_jpeg_bytes(f.get(), path, w, h, c);
  Image img(w, h, c);
  for (size_t i = 0; i < bytes.size(); ++i) img.data[i] = float(bytes[i]) / 255.f;
  return img;
}

void save_png(const std::filesystem::path& path, const Image& img) {
  if (img.empty()) throw DataError("refusing to write empty image: " + path.string());
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw DataError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("failed to encode PNG: " + path.string());
  }
  png_init_io(png, f.get());
  const int color = img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, img.width, img.height, 8, color, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<uint8_t> row(size_t(img.width) * img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        float v = std::clamp(img.at(x, y, c), 0.f, 1.f);
        row[size_t(x) * img.channels + c] = uint8_t(std::lround(v * 255.f));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Mask load_mask(const std::filesystem::path& path) {
  const Image img = load_image(path).to_gray();
  Mask m(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) m.set(x, y, img.at(x, y, 0) > 0.f);
  return m;
}

void save_mask(const std::filesystem::path& path, const Mask& mask) {
  Image img(mask.width, mask.height, 1);
  for (size_t i = 0; i < mask.data.size(); ++i) img.data[i] = mask.data[i] ? 1.f : 0.f;
  save_png(path, img);
}

float bilinear_sample(const Image& img, double x, double y, int channel) {
  if (x < 0.0 || y < 0.0 || x > img.width - 1 || y > img.height - 1) return 0.f;
  const int x0 = int(std::floor(x));
  const int y0 = int(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = (1.0 - fx) * img.at(x0, y0, channel) + fx * img.at(x1, y0, channel);
  const double bot = (1.0 - fx) * img.at(x0, y1, channel) + fx * img.at(x1, y1, channel);
  return float((1.0 - fy) * top + fy * bot);
}

}  // namespace warpkit
