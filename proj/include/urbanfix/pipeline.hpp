#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "urbanfix/dataset.hpp"
#include "urbanfix/features.hpp"
#include "urbanfix/gnss.hpp"
#include "urbanfix/image.hpp"
#include "urbanfix/matching.hpp"
#include "urbanfix/retrieval.hpp"
#include "urbanfix/synthetic.hpp"

namespace urbanfix {

struct PipelineConfig {
  ErrorModel error_model;
  RetrievalConfig retrieval;
  MatchConfig match;
  // Below this EPE the raw fix is already finer than the panorama spacing.
  double skip_epe_m = 12.0;
  // Grid index cell size; only affects speed.
  double grid_cell_m = 48.0;
  // Candidate-scoring threads (0 = hardware concurrency). Results do not
  // depend on it.
  unsigned threads = 1;

  void validate() const;
};

// Reads every known key; missing keys keep their defaults. Unknown keys are
// rejected.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
nlohmann::json pipeline_config_to_json(const PipelineConfig& config);

enum class LocalizationMode { kGpsOnly, kRetrieval, kRetrievalFailedFallback };

std::string_view mode_name(LocalizationMode mode);

struct StageTimings {
  double extract_ms = 0.0;
  double filter_ms = 0.0;
  double match_ms = 0.0;   // descriptor loading + ratio test + RANSAC
  double total_ms = 0.0;
};

struct LocalizationResult {
  LocalizationMode mode = LocalizationMode::kGpsOnly;
  GeoPoint position;
  double epe_m = 0.0;
  std::optional<std::string> best_record_id;
  std::optional<size_t> inlier_count;
  size_t candidates_considered = 0;
  StageTimings timings_ms;
};

// Result JSON with keys mode, lat, lon, epe_m, best_record_id, inlier_count,
// candidates_considered, timings_ms. Without timings the output is a pure
// function of the inputs.
nlohmann::json result_to_json(const LocalizationResult& result,
                              bool include_timings = true);

// Descriptors for manifest records, loaded from descriptor_path or extracted
// from image_path (both relative to `base_dir`) on first use, then cached.
// Safe to share between threads.
class DescriptorCache {
 public:
  explicit DescriptorCache(std::filesystem::path base_dir = {},
                           bool extract_missing = true);

  void insert(const std::string& record_id, DescriptorSet set);
  const DescriptorSet& get(const ImageRecord& record);
  size_t size() const;

 private:
  std::filesystem::path base_dir_;
  bool extract_missing_;
  mutable std::mutex mu_;
  std::map<std::string, DescriptorSet> cache_;
};

// Precomputes descriptors for every record, writes them next to the images
// as descriptors/<id>.vld and sets descriptor_path. Returns the updated
// manifest.
Manifest index_manifest(const Manifest& manifest,
                        const std::filesystem::path& base_dir);

struct LocateContext {
  const Manifest& manifest;
  const GridIndex& index;
  DescriptorCache& descriptors;
};

struct LocateDetails {
  CandidateSet candidates;
  std::vector<CandidateScore> scores;
};

LocalizationResult locate(const Image& query_image, const GpsFix& fix,
                          double query_heading_deg, const LocateContext& ctx,
                          const PipelineConfig& config,
                          LocateDetails* details = nullptr);

// Same, with the query's descriptors already extracted.
LocalizationResult locate(const DescriptorSet& query, const GpsFix& fix,
                          double query_heading_deg, const LocateContext& ctx,
                          const PipelineConfig& config,
                          LocateDetails* details = nullptr);

struct QueryOutcome {
  std::string query_id;
  std::string truth_id;
  LocalizationResult result;
  double error_m = 0.0;
  bool correct_record = false;
};

struct EvaluationReport {
  std::vector<QueryOutcome> queries;
  double mean_error_m = 0.0;
  double median_error_m = 0.0;
  double success_at_12m = 0.0;
  double success_at_24m = 0.0;
  size_t correct_record_count = 0;
  std::map<std::string, size_t> mode_histogram;

  nlohmann::json to_json(bool include_timings = true) const;
  std::string to_table() const;
};

// Supplies the pixels of a query image.
using QueryImageSource = std::function<Image(const GroundTruthQuery&)>;

// Runs locate() per query and scores it against the truth record's position.
// Throws kMissingTruth (naming the query) before doing any work when a truth
// id is not in the manifest.
EvaluationReport evaluate(const Manifest& manifest, DescriptorCache& descriptors,
                          const std::vector<GroundTruthQuery>& queries,
                          const QueryImageSource& images,
                          const PipelineConfig& config);

// Loads manifest.jsonl from `dataset_dir` and query images relative to it.
EvaluationReport evaluate(const std::filesystem::path& dataset_dir,
                          const std::vector<GroundTruthQuery>& queries,
                          const PipelineConfig& config);

// RFC 7946 FeatureCollection: the fix (candidates.query_fix), a 64-segment
// EPE circle, one point per candidate and the best match when present.
nlohmann::json result_to_geojson(const LocalizationResult& result,
                                 const CandidateSet& candidates);
void export_geojson(const LocalizationResult& result,
                    const CandidateSet& candidates,
                    const std::filesystem::path& path);

}  // namespace urbanfix
