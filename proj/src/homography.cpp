#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "urbanfix/error.hpp"
#include "urbanfix/matching.hpp"

namespace urbanfix {

namespace {

Eigen::Matrix3d canonical(const Eigen::Matrix3d& m) {
  const double norm = m.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorCode::kDegenerateConfiguration,
                "homography has zero or non-finite norm");
  }
  Eigen::Matrix3d out = m / norm;
  // First entry (row-major) with the largest magnitude decides the sign.
  int best_r = 0;
  int best_c = 0;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      if (std::fabs(out(r, c)) > std::fabs(out(best_r, best_c))) {
        best_r = r;
        best_c = c;
      }
    }
  }
  if (out(best_r, best_c) < 0.0) out = -out;
  return out;
}

// Hartley normalization: centroid to the origin, mean distance sqrt(2).
Eigen::Matrix3d normalizing_transform(std::span<const Point2> pts) {
  double cx = 0.0;
  double cy = 0.0;
  for (const auto& p : pts) {
    cx += p.x;
    cy += p.y;
  }
  cx /= static_cast<double>(pts.size());
  cy /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += std::hypot(p.x - cx, p.y - cy);
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 0.0)) {
    throw Error(ErrorCode::kDegenerateConfiguration, "all points coincide");
  }
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
  return t;
}

bool collinear(const Point2& a, const Point2& b, const Point2& c, double tol) {
  const double abx = b.x - a.x;
  const double aby = b.y - a.y;
  const double acx = c.x - a.x;
  const double acy = c.y - a.y;
  const double cross = abx * acy - aby * acx;
  const double scale = std::hypot(abx, aby) * std::hypot(acx, acy);
  return std::fabs(cross) <= tol * scale;
}

bool all_collinear(std::span<const Point2> pts, double tol) {
  // Find two distinct points, then test every other point against that line.
  size_t j = 1;
  while (j < pts.size() && pts[j] == pts[0]) ++j;
  if (j == pts.size()) return true;
  for (size_t k = 1; k < pts.size(); ++k) {
    if (k == j) continue;
    if (!collinear(pts[0], pts[j], pts[k], tol)) return false;
  }
  return true;
}

// Unbiased draw in [0, n).
uint64_t bounded(std::mt19937_64& rng, uint64_t n) {
  const uint64_t threshold = (0 - n) % n;
  while (true) {
    const uint64_t r = rng();
    if (r >= threshold) return r % n;
  }
}

struct Support {
  size_t count = 0;
  double error_sum = 0.0;
};

Support measure(const Homography& h, std::span<const PointPair> pairs,
                double threshold, std::vector<size_t>* inliers) {
  Support s;
  if (inliers) inliers->clear();
  const Eigen::Matrix3d& m = h.matrix();
  for (size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    const double w = m(2, 0) * p.source.x + m(2, 1) * p.source.y + m(2, 2);
    if (std::fabs(w) <= 1e-12) continue;
    const double x = (m(0, 0) * p.source.x + m(0, 1) * p.source.y + m(0, 2)) / w;
    const double y = (m(1, 0) * p.source.x + m(1, 1) * p.source.y + m(1, 2)) / w;
    const double e = std::hypot(x - p.target.x, y - p.target.y);
    if (e < threshold) {
      ++s.count;
      s.error_sum += e;
      if (inliers) inliers->push_back(i);
    }
  }
  return s;
}

bool better(const Support& a, const Support& b) {
  if (a.count != b.count) return a.count > b.count;
  return a.error_sum < b.error_sum;
}

}  // namespace

Homography::Homography() : m_(canonical(Eigen::Matrix3d::Identity())) {}

Homography::Homography(const Eigen::Matrix3d& m) : m_(canonical(m)) {}

Eigen::Matrix3d Homography::with_unit_h33() const {
  if (std::fabs(m_(2, 2)) < 1e-300) {
    throw Error(ErrorCode::kDegenerateConfiguration, "h33 is zero");
  }
  return m_ / m_(2, 2);
}

bool Homography::affine_part_nondegenerate(double eps) const {
  const double det = m_(0, 0) * m_(1, 1) - m_(0, 1) * m_(1, 0);
  return std::fabs(det) > eps;
}

double homography_relative_difference(const Homography& a, const Homography& b) {
  const Eigen::Matrix3d& ma = a.matrix();
  const Eigen::Matrix3d& mb = b.matrix();
  return (ma - mb).cwiseAbs().maxCoeff() / ma.cwiseAbs().maxCoeff();
}

bool has_collinear_triple(std::span<const Point2> points, double tol) {
  const size_t n = points.size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      for (size_t k = j + 1; k < n; ++k) {
        if (collinear(points[i], points[j], points[k], tol)) return true;
      }
    }
  }
  return false;
}

Homography dlt_homography(std::span<const PointPair> pairs) {
  const size_t n = pairs.size();
  if (n < 4) {
    throw Error(ErrorCode::kInsufficientPoints,
                "homography needs at least 4 correspondences, got " +
                    std::to_string(n));
  }
  std::vector<Point2> src(n);
  std::vector<Point2> dst(n);
  for (size_t i = 0; i < n; ++i) {
    src[i] = pairs[i].source;
    dst[i] = pairs[i].target;
  }
  // A minimal sample with a collinear triple has no unique solution; larger
  // sets only need to avoid being entirely collinear.
  if (n == 4 ? has_collinear_triple(src) : all_collinear(src, 1e-9)) {
    throw Error(ErrorCode::kDegenerateConfiguration,
                "source points are collinear");
  }

  const Eigen::Matrix3d ts = normalizing_transform(src);
  const Eigen::Matrix3d td = normalizing_transform(dst);

  Eigen::Matrix<double, Eigen::Dynamic, 9> a(2 * n, 9);
  for (size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d s = ts * Eigen::Vector3d(src[i].x, src[i].y, 1.0);
    const Eigen::Vector3d d = td * Eigen::Vector3d(dst[i].x, dst[i].y, 1.0);
    const double x = s.x() / s.z();
    const double y = s.y() / s.z();
    const double u = d.x() / d.z();
    const double v = d.y() / d.z();
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }

  Eigen::Matrix<double, 9, 1> h;
  if (n == 4) {
    // 8x9: pad to square so the null vector appears in V.
    Eigen::Matrix<double, 9, 9> sq = Eigen::Matrix<double, 9, 9>::Zero();
    sq.topRows(8) = a;
    Eigen::JacobiSVD<Eigen::Matrix<double, 9, 9>> svd(sq, Eigen::ComputeFullV);
    h = svd.matrixV().col(8);
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv(7) <= 1e-12 * sv(0)) {
      throw Error(ErrorCode::kDegenerateConfiguration,
                  "correspondences do not determine a unique homography");
    }
    h = svd.matrixV().col(8);
  }

  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Eigen::Matrix3d full = td.inverse() * hn * ts;
  if (!full.allFinite()) {
    throw Error(ErrorCode::kDegenerateConfiguration, "non-finite homography");
  }
  return Homography(full);
}

Point2 apply_homography(const Homography& h, const Point2& p) {
  const Eigen::Matrix3d& m = h.matrix();
  const double w = m(2, 0) * p.x + m(2, 1) * p.y + m(2, 2);
  if (std::fabs(w) <= 1e-12) {
    throw Error(ErrorCode::kPointAtInfinity, "point maps to infinity");
  }
  return {(m(0, 0) * p.x + m(0, 1) * p.y + m(0, 2)) / w,
          (m(1, 0) * p.x + m(1, 1) * p.y + m(1, 2)) / w};
}

double reprojection_error(const Homography& h, const PointPair& pair) {
  const Point2 p = apply_homography(h, pair.source);
  return std::hypot(p.x - pair.target.x, p.y - pair.target.y);
}

void MatchConfig::validate() const {
  if (!(ratio_threshold > 0.0) || !(inlier_threshold_px > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "thresholds must be positive");
  }
  if (ransac_iterations < 1) {
    throw Error(ErrorCode::kInvalidArgument, "RANSAC needs at least 1 iteration");
  }
  if (min_inliers < 0) {
    throw Error(ErrorCode::kInvalidArgument, "min_inliers must be >= 0");
  }
}

VerificationResult ransac_homography(std::span<const PointPair> matches,
                                     const MatchConfig& config) {
  config.validate();
  const size_t n = matches.size();
  if (n < 4) {
    throw Error(ErrorCode::kInsufficientPoints,
                "RANSAC needs at least 4 matches, got " + std::to_string(n));
  }
  std::mt19937_64 rng(config.rng_seed);

  bool found = false;
  Homography best_model;
  Support best_support;
  std::array<PointPair, 4> sample;
  std::array<Point2, 4> src;
  std::array<Point2, 4> dst;
  std::array<size_t, 4> idx;

  for (int iter = 0; iter < config.ransac_iterations; ++iter) {
    for (size_t k = 0; k < 4; ++k) {
      size_t candidate;
      do {
        candidate = static_cast<size_t>(bounded(rng, n));
      } while (std::find(idx.begin(), idx.begin() + k, candidate) != idx.begin() + k);
      idx[k] = candidate;
      sample[k] = matches[candidate];
      src[k] = sample[k].source;
      dst[k] = sample[k].target;
    }
    if (has_collinear_triple(src) || has_collinear_triple(dst)) continue;

    Homography model;
    try {
      model = dlt_homography(sample);
    } catch (const Error&) {
      continue;
    }
    if (!model.affine_part_nondegenerate()) continue;

    const Support support =
        measure(model, matches, config.inlier_threshold_px, nullptr);
    if (!found || better(support, best_support)) {
      found = true;
      best_model = model;
      best_support = support;
    }
  }

  VerificationResult result;
  if (!found) return result;

  std::vector<size_t> inliers;
  measure(best_model, matches, config.inlier_threshold_px, &inliers);
  Homography final_model = best_model;
  if (inliers.size() >= 4) {
    std::vector<PointPair> subset;
    subset.reserve(inliers.size());
    for (size_t i : inliers) subset.push_back(matches[i]);
    try {
      const Homography refit = dlt_homography(subset);
      std::vector<size_t> refit_inliers;
      const Support s =
          measure(refit, matches, config.inlier_threshold_px, &refit_inliers);
      if (refit.affine_part_nondegenerate() && s.count >= inliers.size()) {
        final_model = refit;
        inliers = std::move(refit_inliers);
      }
    } catch (const Error&) {
      // Keep the minimal-sample model.
    }
  }

  result.homography = final_model;
  result.inlier_indices = inliers;
  result.inlier_count = inliers.size();
  if (!inliers.empty()) {
    double sum = 0.0;
    for (size_t i : inliers) sum += reprojection_error(final_model, matches[i]);
    result.mean_reproj_error_px = sum / static_cast<double>(inliers.size());
  }
  return result;
}

}  // namespace urbanfix
