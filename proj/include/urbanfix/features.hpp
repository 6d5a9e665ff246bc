#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "urbanfix/image.hpp"

namespace urbanfix {

inline constexpr int kDescriptorDim = 128;
inline constexpr int kPatchSize = 32;
inline constexpr int kGridStride = 16;
inline constexpr int kSpatialCells = 4;
inline constexpr int kOrientationBins = 8;
inline constexpr float kDescriptorClamp = 0.2f;
inline constexpr double kMinPatchEnergy = 1e-6;

struct Keypoint {
  float x = 0.0f;  // column
  float y = 0.0f;  // row

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

// Keypoints and their 128-d descriptors for one image. Descriptors are stored
// contiguously, row i at data[i * 128], so distance kernels can stream them.
struct DescriptorSet {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::vector<Keypoint> keypoints;
  std::vector<float> data;

  size_t size() const { return keypoints.size(); }
  bool empty() const { return keypoints.empty(); }
  std::span<const float, kDescriptorDim> descriptor(size_t i) const {
    return std::span<const float, kDescriptorDim>(data.data() + i * kDescriptorDim,
                                                  kDescriptorDim);
  }
  void push_back(const Keypoint& kp, std::span<const float, kDescriptorDim> d);

  friend bool operator==(const DescriptorSet&, const DescriptorSet&) = default;
};

// Number of grid positions along an axis of `extent` pixels.
constexpr int grid_count(int extent) {
  return extent < kPatchSize ? 0 : (extent - kPatchSize) / kGridStride + 1;
}

using Histogram = std::array<float, kDescriptorDim>;

// Raw 4x4x8 orientation histogram of the 32x32 patch whose top-left corner is
// (x0, y0), plus the patch's total squared gradient magnitude. Intensities are
// scaled to [0, 1]; gradients are central differences (one-sided at image
// borders).
struct PatchHistogram {
  Histogram bins{};
  double energy = 0.0;
};
PatchHistogram patch_histogram(const Image& gray, int x0, int y0);

// L2-normalize, clamp each bin at 0.2, renormalize. `clamped` receives the
// vector between the clamp and the final renormalization when non-null.
Histogram normalize_histogram(const Histogram& raw, Histogram* clamped = nullptr);

// Dense descriptors over the 24x17 grid of a normalized 400x300 gray image,
// row-major. Patches with energy below 1e-6 are dropped. Throws
// kWrongImageSize for any other input size.
DescriptorSet extract_descriptors(const Image& normalized,
                                  const std::string& image_id = {});

// Binary store "VLD1": u32 version=1, u32 count, u32 dim=128, u32 width,
// u32 height, then count records of f32 x, f32 y, 128 x f32. Little-endian.
void save_descriptors(const DescriptorSet& set, const std::filesystem::path& path);
DescriptorSet load_descriptors(const std::filesystem::path& path);

std::vector<uint8_t> encode_descriptors(const DescriptorSet& set);
DescriptorSet decode_descriptors(std::span<const uint8_t> bytes);

}  // namespace urbanfix
