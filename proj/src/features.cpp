#include "urbanfix/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "urbanfix/error.hpp"
#include "urbanfix/geodesy.hpp"

namespace urbanfix {

namespace {

constexpr double kCellSize = static_cast<double>(kPatchSize) / kSpatialCells;
constexpr double kBinWidth = 2.0 * kPi / kOrientationBins;
constexpr uint32_t kStoreVersion = 1;
constexpr char kStoreMagic[4] = {'V', 'L', 'D', '1'};
constexpr size_t kHeaderBytes = 4 + 5 * 4;
constexpr size_t kRecordBytes = (2 + kDescriptorDim) * 4;

struct Gradient {
  double dx = 0.0;
  double dy = 0.0;
};

// Central difference in 8-bit units, one-sided at the border. Integer
// arithmetic keeps the result independent of a uniform brightness offset.
Gradient gradient_at(const Image& img, int x, int y) {
  const auto px = [&](int xx, int yy) {
    return static_cast<int>(img.data[static_cast<size_t>(yy) * img.width + xx]);
  };
  Gradient g;
  if (img.width > 1) {
    if (x == 0) {
      g.dx = px(1, y) - px(0, y);
    } else if (x == img.width - 1) {
      g.dx = px(x, y) - px(x - 1, y);
    } else {
      g.dx = 0.5 * (px(x + 1, y) - px(x - 1, y));
    }
  }
  if (img.height > 1) {
    if (y == 0) {
      g.dy = px(x, 1) - px(x, 0);
    } else if (y == img.height - 1) {
      g.dy = px(x, y) - px(x, y - 1);
    } else {
      g.dy = 0.5 * (px(x, y + 1) - px(x, y - 1));
    }
  }
  g.dx /= 255.0;
  g.dy /= 255.0;
  return g;
}

void require_gray(const Image& img) {
  if (img.channels != 1 || img.empty() ||
      img.data.size() != static_cast<size_t>(img.width) * img.height) {
    throw Error(ErrorCode::kInvalidArgument, "expected an 8-bit gray image");
  }
}

template <typename GradientFn>
PatchHistogram accumulate_patch(int x0, int y0, GradientFn&& grad) {
  std::array<double, kDescriptorDim> acc{};
  double energy = 0.0;
  for (int v = 0; v < kPatchSize; ++v) {
    const double cv = (v + 0.5) / kCellSize - 0.5;
    const int cy0 = static_cast<int>(std::floor(cv));
    const double wy = cv - cy0;
    for (int u = 0; u < kPatchSize; ++u) {
      const Gradient g = grad(x0 + u, y0 + v);
      const double mag2 = g.dx * g.dx + g.dy * g.dy;
      energy += mag2;
      if (mag2 == 0.0) continue;
      const double mag = std::sqrt(mag2);

      const double o = std::atan2(g.dy, g.dx) / kBinWidth;
      const int o0 = static_cast<int>(std::floor(o));
      const double wo = o - o0;
      const int bin_a = ((o0 % kOrientationBins) + kOrientationBins) % kOrientationBins;
      const int bin_b = (bin_a + 1) % kOrientationBins;

      const double cu = (u + 0.5) / kCellSize - 0.5;
      const int cx0 = static_cast<int>(std::floor(cu));
      const double wx = cu - cx0;

      for (int dyc = 0; dyc < 2; ++dyc) {
        const int cy = cy0 + dyc;
        if (cy < 0 || cy >= kSpatialCells) continue;
        const double wyc = dyc == 0 ? 1.0 - wy : wy;
        for (int dxc = 0; dxc < 2; ++dxc) {
          const int cx = cx0 + dxc;
          if (cx < 0 || cx >= kSpatialCells) continue;
          const double w = mag * wyc * (dxc == 0 ? 1.0 - wx : wx);
          const int base = (cy * kSpatialCells + cx) * kOrientationBins;
          acc[base + bin_a] += w * (1.0 - wo);
          acc[base + bin_b] += w * wo;
        }
      }
    }
  }
  PatchHistogram out;
  for (int i = 0; i < kDescriptorDim; ++i) out.bins[i] = static_cast<float>(acc[i]);
  out.energy = energy;
  return out;
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<uint8_t>& out, float f) {
  uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(out, v);
}

uint32_t get_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

float get_f32(const uint8_t* p) {
  const uint32_t v = get_u32(p);
  float f;
  std::memcpy(&f, &v, 4);
  return f;
}

}  // namespace

void DescriptorSet::push_back(const Keypoint& kp,
                              std::span<const float, kDescriptorDim> d) {
  keypoints.push_back(kp);
  data.insert(data.end(), d.begin(), d.end());
}

PatchHistogram patch_histogram(const Image& gray, int x0, int y0) {
  require_gray(gray);
  if (x0 < 0 || y0 < 0 || x0 + kPatchSize > gray.width ||
      y0 + kPatchSize > gray.height) {
    throw Error(ErrorCode::kInvalidArgument, "patch outside image");
  }
  return accumulate_patch(x0, y0,
                          [&](int x, int y) { return gradient_at(gray, x, y); });
}

Histogram normalize_histogram(const Histogram& raw, Histogram* clamped) {
  double norm2 = 0.0;
  for (float v : raw) norm2 += static_cast<double>(v) * v;
  Histogram out{};
  if (norm2 <= 0.0) {
    if (clamped) *clamped = out;
    return out;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  std::array<double, kDescriptorDim> tmp{};
  double norm2_clamped = 0.0;
  for (int i = 0; i < kDescriptorDim; ++i) {
    tmp[i] = std::min(raw[i] * inv, static_cast<double>(kDescriptorClamp));
    norm2_clamped += tmp[i] * tmp[i];
  }
  if (clamped) {
    for (int i = 0; i < kDescriptorDim; ++i) (*clamped)[i] = static_cast<float>(tmp[i]);
  }
  const double inv2 = 1.0 / std::sqrt(norm2_clamped);
  for (int i = 0; i < kDescriptorDim; ++i) {
    out[i] = static_cast<float>(std::min(tmp[i] * inv2, 1.0));
  }
  return out;
}

DescriptorSet extract_descriptors(const Image& normalized,
                                  const std::string& image_id) {
  if (normalized.channels != 1 || normalized.width != kNormalizedWidth ||
      normalized.height != kNormalizedHeight ||
      normalized.data.size() != static_cast<size_t>(kNormalizedWidth) * kNormalizedHeight) {
    throw Error(ErrorCode::kWrongImageSize,
                "descriptor extraction expects a 400x300 gray image, got " +
                    std::to_string(normalized.width) + "x" +
                    std::to_string(normalized.height) + "x" +
                    std::to_string(normalized.channels));
  }
  const int w = normalized.width;
  const int h = normalized.height;
  std::vector<Gradient> field(static_cast<size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      field[static_cast<size_t>(y) * w + x] = gradient_at(normalized, x, y);
    }
  }
  const auto lookup = [&](int x, int y) {
    return field[static_cast<size_t>(y) * w + x];
  };

  DescriptorSet set;
  set.image_id = image_id;
  set.width = w;
  set.height = h;
  const int cols = grid_count(w);
  const int rows = grid_count(h);
  set.keypoints.reserve(static_cast<size_t>(cols) * rows);
  set.data.reserve(static_cast<size_t>(cols) * rows * kDescriptorDim);
  for (int gy = 0; gy < rows; ++gy) {
    for (int gx = 0; gx < cols; ++gx) {
      const int x0 = gx * kGridStride;
      const int y0 = gy * kGridStride;
      const PatchHistogram patch = accumulate_patch(x0, y0, lookup);
      if (patch.energy < kMinPatchEnergy) continue;
      const Histogram d = normalize_histogram(patch.bins);
      const float c = 0.5f * (kPatchSize - 1);
      set.push_back({x0 + c, y0 + c}, d);
    }
  }
  return set;
}

std::vector<uint8_t> encode_descriptors(const DescriptorSet& set) {
  if (set.data.size() != set.keypoints.size() * kDescriptorDim) {
    throw Error(ErrorCode::kInvalidArgument, "descriptor set is inconsistent");
  }
  std::vector<uint8_t> out;
  out.reserve(kHeaderBytes + set.size() * kRecordBytes);
  out.insert(out.end(), std::begin(kStoreMagic), std::end(kStoreMagic));
  put_u32(out, kStoreVersion);
  put_u32(out, static_cast<uint32_t>(set.size()));
  put_u32(out, kDescriptorDim);
  put_u32(out, static_cast<uint32_t>(set.width));
  put_u32(out, static_cast<uint32_t>(set.height));
  for (size_t i = 0; i < set.size(); ++i) {
    put_f32(out, set.keypoints[i].x);
    put_f32(out, set.keypoints[i].y);
    for (float v : set.descriptor(i)) put_f32(out, v);
  }
  return out;
}

DescriptorSet decode_descriptors(std::span<const uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kStoreMagic, 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "descriptor store: bad magic");
  }
  if (bytes.size() < kHeaderBytes) {
    throw Error(ErrorCode::kTruncatedFile, "descriptor store: truncated header");
  }
  const uint8_t* p = bytes.data() + 4;
  const uint32_t version = get_u32(p);
  if (version != kStoreVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "descriptor store: unsupported version " + std::to_string(version));
  }
  const uint32_t count = get_u32(p + 4);
  const uint32_t dim = get_u32(p + 8);
  if (dim != kDescriptorDim) {
    throw Error(ErrorCode::kVersionMismatch,
                "descriptor store: dimension " + std::to_string(dim) +
                    ", expected 128");
  }
  DescriptorSet set;
  set.width = static_cast<int>(get_u32(p + 12));
  set.height = static_cast<int>(get_u32(p + 16));
  const size_t body = bytes.size() - kHeaderBytes;
  if (body < static_cast<size_t>(count) * kRecordBytes) {
    throw Error(ErrorCode::kTruncatedFile,
                "descriptor store: expected " + std::to_string(count) +
                    " records, file ends early");
  }
  if (body > static_cast<size_t>(count) * kRecordBytes) {
    throw Error(ErrorCode::kParse, "descriptor store: trailing bytes");
  }
  set.keypoints.reserve(count);
  set.data.reserve(static_cast<size_t>(count) * kDescriptorDim);
  const uint8_t* r = bytes.data() + kHeaderBytes;
  for (uint32_t i = 0; i < count; ++i, r += kRecordBytes) {
    set.keypoints.push_back({get_f32(r), get_f32(r + 4)});
    for (int k = 0; k < kDescriptorDim; ++k) set.data.push_back(get_f32(r + 8 + 4 * k));
  }
  return set;
}

void save_descriptors(const DescriptorSet& set, const std::filesystem::path& path) {
  const auto bytes = encode_descriptors(set);
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

DescriptorSet load_descriptors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  try {
    DescriptorSet set = decode_descriptors(bytes);
    set.image_id = path.stem().string();
    return set;
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace urbanfix
