#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "urbanfix/features.hpp"

namespace urbanfix {

struct MatchPair {
  size_t query_index = 0;
  size_t ref_index = 0;
  double d1 = 0.0;     // distance to nearest reference descriptor
  double d2 = 0.0;     // distance to second nearest
  double ratio = 0.0;  // d1 / d2
};

// Keeps descriptors whose nearest/second-nearest distance ratio is below
// `ratio_threshold`. Query descriptors whose two nearest distances are both
// zero are dropped. Returns nothing when the reference has fewer than two
// descriptors.
std::vector<MatchPair> ratio_match(const DescriptorSet& query,
                                   const DescriptorSet& reference,
                                   double ratio_threshold);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

// source in the query image, target in the reference image.
struct PointPair {
  Point2 source;
  Point2 target;
};

// 3x3 projective map scaled to unit Frobenius norm, largest-magnitude entry
// positive.
class Homography {
 public:
  Homography();  // identity
  explicit Homography(const Eigen::Matrix3d& m);

  const Eigen::Matrix3d& matrix() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }

  // Same map rescaled so h33 = 1 (requires h33 != 0).
  Eigen::Matrix3d with_unit_h33() const;

  bool affine_part_nondegenerate(double eps = 1e-12) const;

  friend bool operator==(const Homography& a, const Homography& b) {
    return a.m_ == b.m_;
  }

 private:
  Eigen::Matrix3d m_;
};

// Largest |a - b| over entries after bringing both to the canonical scale and
// sign, divided by the largest |a| entry.
double homography_relative_difference(const Homography& a, const Homography& b);

// True when some three of the points are collinear (|cross| <= tol).
bool has_collinear_triple(std::span<const Point2> points, double tol = 1e-9);

// Normalized DLT over >= 4 pairs. Throws kInsufficientPoints or
// kDegenerateConfiguration.
Homography dlt_homography(std::span<const PointPair> pairs);

// Distance between h(source) and target. Throws kPointAtInfinity when the
// projective scale is ~0.
double reprojection_error(const Homography& h, const PointPair& pair);

Point2 apply_homography(const Homography& h, const Point2& p);

struct MatchConfig {
  static constexpr double kLooseRatioThreshold = 1.8;

  double ratio_threshold = 0.8;
  int ransac_iterations = 2000;
  double inlier_threshold_px = 3.0;
  int min_inliers = 12;
  uint64_t rng_seed = 0;

  void validate() const;
};

struct VerificationResult {
  Homography homography;
  std::vector<size_t> inlier_indices;
  size_t inlier_count = 0;
  double mean_reproj_error_px = 0.0;

  friend bool operator==(const VerificationResult&, const VerificationResult&) = default;
};

// Fixed-iteration RANSAC over minimal 4-pair samples followed by one refit on
// all inliers. Deterministic in (matches, config). Throws
// kInsufficientPoints for fewer than 4 matches.
VerificationResult ransac_homography(std::span<const PointPair> matches,
                                     const MatchConfig& config);

// Correspondence list for RANSAC from ratio-test matches.
std::vector<PointPair> to_point_pairs(const std::vector<MatchPair>& matches,
                                      const DescriptorSet& query,
                                      const DescriptorSet& reference);

struct ScoringCandidate {
  std::string id;
  double distance_m = 0.0;
  const DescriptorSet* descriptors = nullptr;
};

struct CandidateScore {
  std::string id;
  double distance_m = 0.0;
  size_t match_count = 0;
  VerificationResult verification;
};

// RANSAC seed for one candidate, derived from the base seed and its id.
uint64_t candidate_seed(uint64_t base_seed, const std::string& candidate_id);

// Ratio match + RANSAC per candidate, ranked by inlier count (desc), mean
// reprojection error (asc), distance to the fix (asc), id. Candidates with
// fewer than 4 matches score 0 inliers. `threads` == 0 uses the hardware
// concurrency; the output does not depend on it.
std::vector<CandidateScore> score_candidates(
    const DescriptorSet& query, const std::vector<ScoringCandidate>& candidates,
    const MatchConfig& config, unsigned threads = 1);

}  // namespace urbanfix
