#include "urbanfix/matching.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "urbanfix/error.hpp"
#include "urbanfix/simd/kernels.hpp"

namespace urbanfix {

std::vector<MatchPair> ratio_match(const DescriptorSet& query,
                                   const DescriptorSet& reference,
                                   double ratio_threshold) {
  std::vector<MatchPair> out;
  if (reference.size() < 2 || query.empty()) return out;
  const auto& k = simd::active_kernels();
  for (size_t i = 0; i < query.size(); ++i) {
    const simd::NearestTwo nn =
        k.nearest_two(query.data.data() + i * kDescriptorDim,
                      reference.data.data(), reference.size(), kDescriptorDim);
    const double d1 = std::sqrt(static_cast<double>(nn.best));
    const double d2 = std::sqrt(static_cast<double>(nn.second));
    if (!(d2 > 0.0)) continue;
    const double ratio = d1 / d2;
    if (ratio < ratio_threshold) {
      out.push_back({i, static_cast<size_t>(nn.best_index), d1, d2, ratio});
    }
  }
  return out;
}

std::vector<PointPair> to_point_pairs(const std::vector<MatchPair>& matches,
                                      const DescriptorSet& query,
                                      const DescriptorSet& reference) {
  std::vector<PointPair> pairs;
  pairs.reserve(matches.size());
  for (const auto& m : matches) {
    const Keypoint& q = query.keypoints.at(m.query_index);
    const Keypoint& r = reference.keypoints.at(m.ref_index);
    pairs.push_back({{q.x, q.y}, {r.x, r.y}});
  }
  return pairs;
}

uint64_t candidate_seed(uint64_t base_seed, const std::string& candidate_id) {
  // FNV-1a over the id, then a splitmix64 finalizer.
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : candidate_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  uint64_t z = base_seed ^ h;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

bool ranks_before(const CandidateScore& a, const CandidateScore& b) {
  if (a.verification.inlier_count != b.verification.inlier_count) {
    return a.verification.inlier_count > b.verification.inlier_count;
  }
  if (a.verification.mean_reproj_error_px != b.verification.mean_reproj_error_px) {
    return a.verification.mean_reproj_error_px < b.verification.mean_reproj_error_px;
  }
  if (a.distance_m != b.distance_m) return a.distance_m < b.distance_m;
  return a.id < b.id;
}

CandidateScore score_one(const DescriptorSet& query,
                         const ScoringCandidate& candidate,
                         const MatchConfig& config) {
  if (candidate.descriptors == nullptr) {
    throw Error(ErrorCode::kMissingDescriptors,
                "no descriptors for candidate " + candidate.id);
  }
  CandidateScore score;
  score.id = candidate.id;
  score.distance_m = candidate.distance_m;
  const auto matches =
      ratio_match(query, *candidate.descriptors, config.ratio_threshold);
  score.match_count = matches.size();
  if (matches.size() < 4) return score;

  MatchConfig local = config;
  local.rng_seed = candidate_seed(config.rng_seed, candidate.id);
  const auto pairs = to_point_pairs(matches, query, *candidate.descriptors);
  score.verification = ransac_homography(pairs, local);
  return score;
}

}  // namespace

std::vector<CandidateScore> score_candidates(
    const DescriptorSet& query, const std::vector<ScoringCandidate>& candidates,
    const MatchConfig& config, unsigned threads) {
  config.validate();
  std::vector<CandidateScore> scores(candidates.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(candidates.size()));

  if (threads <= 1) {
    for (size_t i = 0; i < candidates.size(); ++i) {
      scores[i] = score_one(query, candidates[i], config);
    }
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::exception_ptr> errors(candidates.size());
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (size_t i = next++; i < candidates.size(); i = next++) {
          try {
            scores[i] = score_one(query, candidates[i], config);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    // Report the first failure in input order, as the serial path would.
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  std::sort(scores.begin(), scores.end(), ranks_before);
  return scores;
}

}  // namespace urbanfix
