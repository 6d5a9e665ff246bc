#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace urbanfix {

inline constexpr int kNormalizedWidth = 400;
inline constexpr int kNormalizedHeight = 300;

// Interleaved 8-bit image with 1 (gray) or 3 (RGB) channels.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<uint8_t> data;

  bool empty() const { return width <= 0 || height <= 0; }
  uint8_t at(int x, int y, int c = 0) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

// Decodes a PNG to 1 or 3 channels (alpha dropped, palette and 16-bit depths
// reduced to 8-bit). Throws kIo when the file is missing and
// kUndecodableImage when it is not a readable PNG.
Image read_png(const std::filesystem::path& path);

// Writes 1- or 3-channel 8-bit PNG. Output bytes depend only on the pixels.
void write_png(const Image& image, const std::filesystem::path& path);

// Luma conversion (0.299 R + 0.587 G + 0.114 B) followed by a bilinear resize
// to exactly 400x300. Images already 400x300 gray are returned unchanged.
Image normalize_image(const Image& image);

}  // namespace urbanfix
