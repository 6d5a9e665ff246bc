#include "urbanfix/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "urbanfix/error.hpp"

namespace urbanfix {

Image read_png(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::kIo, "image not found: " + path.string());
  }
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw Error(ErrorCode::kUndecodableImage,
                "cannot decode " + path.string() + ": " + msg);
  }
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

  Image img;
  img.width = static_cast<int>(png.width);
  img.height = static_cast<int>(png.height);
  img.channels = color ? 3 : 1;
  img.data.resize(PNG_IMAGE_SIZE(png));
  // Background for alpha composition: black.
  png_color background{0, 0, 0};
  if (!png_image_finish_read(&png, &background, img.data.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw Error(ErrorCode::kUndecodableImage,
                "cannot decode " + path.string() + ": " + msg);
  }
  return img;
}

void write_png(const Image& image, const std::filesystem::path& path) {
  if (image.empty() || (image.channels != 1 && image.channels != 3) ||
      image.data.size() != static_cast<size_t>(image.width) * image.height *
                               image.channels) {
    throw Error(ErrorCode::kInvalidArgument, "cannot encode malformed image");
  }
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.data.data(), 0,
                               nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw Error(ErrorCode::kIo, "cannot write " + path.string() + ": " + msg);
  }
}

Image normalize_image(const Image& image) {
  if (image.empty() || (image.channels != 1 && image.channels != 3) ||
      image.data.size() !=
          static_cast<size_t>(image.width) * image.height * image.channels) {
    throw Error(ErrorCode::kUndecodableImage,
                "image must be non-empty 8-bit gray or RGB");
  }
  if (image.channels == 1 && image.width == kNormalizedWidth &&
      image.height == kNormalizedHeight) {
    return image;
  }

  std::vector<float> luma(static_cast<size_t>(image.width) * image.height);
  for (size_t i = 0; i < luma.size(); ++i) {
    if (image.channels == 1) {
      luma[i] = image.data[i];
    } else {
      const uint8_t* p = &image.data[i * 3];
      luma[i] = 0.299f * p[0] + 0.587f * p[1] + 0.114f * p[2];
    }
  }

  Image out;
  out.width = kNormalizedWidth;
  out.height = kNormalizedHeight;
  out.channels = 1;
  out.data.resize(static_cast<size_t>(out.width) * out.height);

  // Pixel-center aligned sampling.
  const double sx = static_cast<double>(image.width) / out.width;
  const double sy = static_cast<double>(image.height) / out.height;
  for (int y = 0; y < out.height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(image.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out.width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(image.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - x0;
      auto px = [&](int xx, int yy) {
        return static_cast<double>(luma[static_cast<size_t>(yy) * image.width + xx]);
      };
      const double top = px(x0, y0) * (1.0 - wx) + px(x1, y0) * wx;
      const double bottom = px(x0, y1) * (1.0 - wx) + px(x1, y1) * wx;
      const double v = top * (1.0 - wy) + bottom * wy;
      out.data[static_cast<size_t>(y) * out.width + x] =
          static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return out;
}

}  // namespace urbanfix
