#include "das/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <memory>
#include <vector>

#include "das/error.hpp"

namespace das {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Image read_png(const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  require(file != nullptr, "png: cannot open " + path);

  png_byte header[8];
  require(std::fread(header, 1, 8, file.get()) == 8 &&
              png_sig_cmp(header, 0, 8) == 0,
          "png: " + path + " is not a PNG file");

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, "png: reader allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("png: reader allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("png: malformed file " + path);
  }

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte depth = png_get_bit_depth(png, info);
  const png_byte color = png_get_color_type(png, info);
  if (depth == 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("png: unsupported bit depth 16 in " + path);
  }

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) {
    std::cerr << "png: dropping alpha channel of " << path << "\n";
    png_set_strip_alpha(png);
  }
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const size_t row_bytes = png_get_rowbytes(png, info);
  require(row_bytes == static_cast<size_t>(width) * 3,
          "png: unexpected row layout in " + path);

  std::vector<png_byte> pixels(static_cast<size_t>(height) * row_bytes);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = pixels.data() + y * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image out(height, width, 3);
  for (size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = pixels[i] / 255.0;
  }
  return out;
}

Image read_png_square(const std::string& path) {
  Image img = read_png(path);
  if (img.square()) return img;
  const int side = std::min(img.height, img.width);
  std::cerr << "png: center-cropping " << path << " from " << img.width << "x"
            << img.height << " to " << side << "x" << side << "\n";
  return center_crop(img, side);
}

void write_png(const std::string& path, const Image& image) {
  require(image.channels == 1 || image.channels == 3,
          "png: only 1- or 3-channel images can be written");
  require(image.height > 0 && image.width > 0, "png: empty image");

  FilePtr file(std::fopen(path.c_str(), "wb"));
  require(file != nullptr, "png: cannot write " + path);

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, "png: writer allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("png: writer allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("png: write failed for " + path);
  }

  png_init_io(png, file.get());
  png_set_IHDR(png, info, image.width, image.height, 8,
               image.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  const size_t row_bytes = static_cast<size_t>(image.width) * image.channels;
  std::vector<png_byte> row(row_bytes);
  for (int y = 0; y < image.height; ++y) {
    for (size_t i = 0; i < row_bytes; ++i) {
      const double v = image.data[static_cast<size_t>(y) * row_bytes + i];
      double b = std::floor(v * 255.0 + 0.5);
      if (b < 0.0) b = 0.0;
      if (b > 255.0) b = 255.0;
      row[i] = static_cast<png_byte>(b);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace das
