#include "urbanfix/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "urbanfix/error.hpp"

namespace urbanfix {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

void PipelineConfig::validate() const {
  error_model.validate();
  retrieval.validate();
  match.validate();
  if (!(skip_epe_m >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "skip_epe_m must be >= 0");
  }
  if (!(grid_cell_m > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "grid_cell_m must be > 0");
  }
}

PipelineConfig pipeline_config_from_json(const json& j) {
  if (!j.is_object()) {
    throw Error(ErrorCode::kParse, "pipeline config must be a JSON object");
  }
  PipelineConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "uere") c.error_model.uere_m = value.get<double>();
      else if (key == "confidence_factor") c.error_model.confidence_factor = value.get<double>();
      else if (key == "th") c.retrieval.th = value.get<double>();
      else if (key == "view_window") c.retrieval.view_window_k = value.get<double>();
      else if (key == "max_candidates") c.retrieval.max_candidates = value.get<size_t>();
      else if (key == "ratio_threshold") c.match.ratio_threshold = value.get<double>();
      else if (key == "ransac_iters") c.match.ransac_iterations = value.get<int>();
      else if (key == "inlier_px") c.match.inlier_threshold_px = value.get<double>();
      else if (key == "min_inliers") c.match.min_inliers = value.get<int>();
      else if (key == "seed") c.match.rng_seed = value.get<uint64_t>();
      else if (key == "skip_epe") c.skip_epe_m = value.get<double>();
      else if (key == "grid_cell_m") c.grid_cell_m = value.get<double>();
      else if (key == "threads") c.threads = value.get<unsigned>();
      else throw Error(ErrorCode::kParse, "unknown config key \"" + key + "\"");
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, "config key \"" + key + "\": " + e.what());
    }
  }
  c.validate();
  return c;
}

json pipeline_config_to_json(const PipelineConfig& c) {
  return json{{"uere", c.error_model.uere_m},
              {"confidence_factor", c.error_model.confidence_factor},
              {"th", c.retrieval.th},
              {"view_window", c.retrieval.view_window_k},
              {"max_candidates", c.retrieval.max_candidates},
              {"ratio_threshold", c.match.ratio_threshold},
              {"ransac_iters", c.match.ransac_iterations},
              {"inlier_px", c.match.inlier_threshold_px},
              {"min_inliers", c.match.min_inliers},
              {"seed", c.match.rng_seed},
              {"skip_epe", c.skip_epe_m},
              {"grid_cell_m", c.grid_cell_m},
              {"threads", c.threads}};
}

std::string_view mode_name(LocalizationMode mode) {
  switch (mode) {
    case LocalizationMode::kGpsOnly: return "gps-only";
    case LocalizationMode::kRetrieval: return "retrieval";
    case LocalizationMode::kRetrievalFailedFallback: return "retrieval-failed-fallback";
  }
  return "unknown";
}

json result_to_json(const LocalizationResult& r, bool include_timings) {
  json j = json::object();
  j["mode"] = std::string(mode_name(r.mode));
  j["lat"] = r.position.lat();
  j["lon"] = r.position.lon();
  j["epe_m"] = r.epe_m;
  j["best_record_id"] = r.best_record_id ? json(*r.best_record_id) : json(nullptr);
  j["inlier_count"] = r.inlier_count ? json(*r.inlier_count) : json(nullptr);
  j["candidates_considered"] = r.candidates_considered;
  if (include_timings) {
    j["timings_ms"] = json{{"extract", r.timings_ms.extract_ms},
                           {"filter", r.timings_ms.filter_ms},
                           {"match", r.timings_ms.match_ms},
                           {"total", r.timings_ms.total_ms}};
  }
  return j;
}

DescriptorCache::DescriptorCache(std::filesystem::path base_dir, bool extract_missing)
    : base_dir_(std::move(base_dir)), extract_missing_(extract_missing) {}

void DescriptorCache::insert(const std::string& record_id, DescriptorSet set) {
  std::lock_guard<std::mutex> lock(mu_);
  cache_.insert_or_assign(record_id, std::move(set));
}

size_t DescriptorCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return cache_.size();
}

const DescriptorSet& DescriptorCache::get(const ImageRecord& record) {
  std::lock_guard<std::mutex> lock(mu_);
  if (const auto it = cache_.find(record.id); it != cache_.end()) return it->second;

  DescriptorSet set;
  try {
    if (record.descriptor_path) {
      set = load_descriptors(base_dir_ / *record.descriptor_path);
    } else if (extract_missing_) {
      set = extract_descriptors(normalize_image(read_png(base_dir_ / record.image_path)));
    } else {
      throw Error(ErrorCode::kMissingDescriptors, "no descriptor file");
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::kMissingDescriptors,
                "descriptors for record " + record.id + ": " + e.what());
  }
  set.image_id = record.id;
  return cache_.emplace(record.id, std::move(set)).first->second;
}

Manifest index_manifest(const Manifest& manifest,
                        const std::filesystem::path& base_dir) {
  Manifest out = manifest;
  for (auto& r : out.records) {
    const DescriptorSet set = extract_descriptors(
        normalize_image(read_png(base_dir / r.image_path)), r.id);
    const std::string rel = "descriptors/" + r.id + ".vld";
    save_descriptors(set, base_dir / rel);
    r.descriptor_path = rel;
  }
  return out;
}

LocalizationResult locate(const Image& query_image, const GpsFix& fix,
                          double query_heading_deg, const LocateContext& ctx,
                          const PipelineConfig& config, LocateDetails* details) {
  config.validate();
  const auto start = Clock::now();
  const double epe = estimated_position_error(fix, config.error_model);
  if (epe < config.skip_epe_m) {
    LocalizationResult r;
    r.mode = LocalizationMode::kGpsOnly;
    r.position = fix.point;
    r.epe_m = epe;
    r.timings_ms.total_ms = ms_since(start);
    if (details) *details = LocateDetails{CandidateSet{{}, fix, epe}, {}};
    return r;
  }
  const DescriptorSet query = extract_descriptors(normalize_image(query_image), "query");
  const double extract_ms = ms_since(start);
  LocalizationResult r = locate(query, fix, query_heading_deg, ctx, config, details);
  r.timings_ms.extract_ms = extract_ms;
  r.timings_ms.total_ms = ms_since(start);
  return r;
}

LocalizationResult locate(const DescriptorSet& query, const GpsFix& fix,
                          double query_heading_deg, const LocateContext& ctx,
                          const PipelineConfig& config, LocateDetails* details) {
  config.validate();
  const auto start = Clock::now();
  LocalizationResult r;
  r.epe_m = estimated_position_error(fix, config.error_model);
  r.position = fix.point;
  if (r.epe_m < config.skip_epe_m) {
    r.mode = LocalizationMode::kGpsOnly;
    r.timings_ms.total_ms = ms_since(start);
    if (details) *details = LocateDetails{CandidateSet{{}, fix, r.epe_m}, {}};
    return r;
  }

  auto t = Clock::now();
  CandidateSet candidates = filter_candidates(ctx.manifest, ctx.index, fix, r.epe_m,
                                              query_heading_deg, config.retrieval);
  r.timings_ms.filter_ms = ms_since(t);
  r.candidates_considered = candidates.items.size();

  t = Clock::now();
  std::vector<ScoringCandidate> scoring;
  scoring.reserve(candidates.items.size());
  for (const auto& c : candidates.items) {
    scoring.push_back({c.record->id, c.distance_m, &ctx.descriptors.get(*c.record)});
  }
  std::vector<CandidateScore> scores =
      score_candidates(query, scoring, config.match, config.threads);
  r.timings_ms.match_ms = ms_since(t);

  r.mode = LocalizationMode::kRetrievalFailedFallback;
  if (!scores.empty()) {
    const CandidateScore& best = scores.front();
    const auto min_inliers = static_cast<size_t>(config.match.min_inliers);
    if (best.verification.inlier_count >= min_inliers && best.verification.inlier_count > 0) {
      const ImageRecord* record = ctx.manifest.find(best.id);
      r.mode = LocalizationMode::kRetrieval;
      r.position = record->point;
      r.best_record_id = best.id;
      r.inlier_count = best.verification.inlier_count;
    }
  }
  r.timings_ms.total_ms = ms_since(start);
  if (details) {
    details->candidates = std::move(candidates);
    details->scores = std::move(scores);
  }
  return r;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

EvaluationReport evaluate(const Manifest& manifest, DescriptorCache& descriptors,
                          const std::vector<GroundTruthQuery>& queries,
                          const QueryImageSource& images,
                          const PipelineConfig& config) {
  config.validate();
  for (const auto& q : queries) {
    if (q.truth_id.empty() || manifest.find(q.truth_id) == nullptr) {
      throw Error(ErrorCode::kMissingTruth,
                  "query " + q.query_id + ": truth record \"" + q.truth_id +
                      "\" is not in the manifest");
    }
  }
  const GridIndex index = build_grid_index(manifest, config.grid_cell_m);
  const LocateContext ctx{manifest, index, descriptors};

  EvaluationReport report;
  std::vector<double> errors;
  size_t ok12 = 0;
  size_t ok24 = 0;
  for (const auto& q : queries) {
    QueryOutcome out;
    out.query_id = q.query_id;
    out.truth_id = q.truth_id;
    out.result = locate(images(q), q.fix, q.heading_deg, ctx, config);
    const ImageRecord* truth = manifest.find(q.truth_id);
    out.error_m = great_circle_distance(out.result.position, truth->point);
    out.correct_record = out.result.best_record_id == q.truth_id;
    errors.push_back(out.error_m);
    if (out.error_m < 12.0) ++ok12;
    if (out.error_m < 24.0) ++ok24;
    if (out.correct_record) ++report.correct_record_count;
    ++report.mode_histogram[std::string(mode_name(out.result.mode))];
    report.queries.push_back(std::move(out));
  }
  if (!errors.empty()) {
    double sum = 0.0;
    for (double e : errors) sum += e;
    const auto n = static_cast<double>(errors.size());
    report.mean_error_m = sum / n;
    report.median_error_m = median(errors);
    report.success_at_12m = static_cast<double>(ok12) / n;
    report.success_at_24m = static_cast<double>(ok24) / n;
  }
  return report;
}

EvaluationReport evaluate(const std::filesystem::path& dataset_dir,
                          const std::vector<GroundTruthQuery>& queries,
                          const PipelineConfig& config) {
  const Manifest manifest = load_manifest(dataset_dir / "manifest.jsonl");
  DescriptorCache cache(dataset_dir);
  return evaluate(manifest, cache, queries,
                  [&](const GroundTruthQuery& q) { return read_png(dataset_dir / q.image_path); },
                  config);
}

json EvaluationReport::to_json(bool include_timings) const {
  json per_query = json::array();
  for (const auto& q : queries) {
    json entry = result_to_json(q.result, include_timings);
    entry["query_id"] = q.query_id;
    entry["truth_id"] = q.truth_id;
    entry["error_m"] = q.error_m;
    entry["correct_record"] = q.correct_record;
    per_query.push_back(std::move(entry));
  }
  json modes = json::object();
  for (const auto& [mode, count] : mode_histogram) modes[mode] = count;
  return json{{"query_count", queries.size()},
              {"mean_error_m", mean_error_m},
              {"median_error_m", median_error_m},
              {"success_at_12m", success_at_12m},
              {"success_at_24m", success_at_24m},
              {"correct_record_count", correct_record_count},
              {"mode_histogram", modes},
              {"queries", per_query}};
}

std::string EvaluationReport::to_table() const {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-8s %-12s %-12s %-26s %8s %9s\n", "query",
                "truth", "best", "mode", "inliers", "error_m");
  out << line;
  for (const auto& q : queries) {
    std::snprintf(line, sizeof(line), "%-8s %-12s %-12s %-26s %8s %9.2f\n",
                  q.query_id.c_str(), q.truth_id.c_str(),
                  q.result.best_record_id.value_or("-").c_str(),
                  std::string(mode_name(q.result.mode)).c_str(),
                  q.result.inlier_count ? std::to_string(*q.result.inlier_count).c_str() : "-",
                  q.error_m);
    out << line;
  }
  std::snprintf(line, sizeof(line),
                "queries %zu  correct %zu  mean %.2f m  median %.2f m  "
                "success@12m %.3f  success@24m %.3f\n",
                queries.size(), correct_record_count, mean_error_m, median_error_m,
                success_at_12m, success_at_24m);
  out << line;
  for (const auto& [mode, count] : mode_histogram) {
    out << "  " << mode << ": " << count << "\n";
  }
  return out.str();
}

json result_to_geojson(const LocalizationResult& result,
                       const CandidateSet& candidates) {
  const GpsFix& fix = candidates.query_fix;
  const auto point = [](const GeoPoint& p) {
    return json{{"type", "Point"}, {"coordinates", {p.lon(), p.lat()}}};
  };
  json features = json::array();
  features.push_back({{"type", "Feature"},
                      {"geometry", point(fix.point)},
                      {"properties", {{"role", "fix"},
                                      {"hdop", fix.hdop},
                                      {"mode", std::string(mode_name(result.mode))}}}});

  // Counterclockwise exterior ring (decreasing bearing), closed.
  constexpr int kSegments = 64;
  json ring = json::array();
  for (int k = 0; k <= kSegments; ++k) {
    const double bearing = 360.0 - 360.0 * (k % kSegments) / kSegments;
    const GeoPoint p = result.epe_m > 0.0
                           ? destination_point(fix.point, bearing, result.epe_m)
                           : fix.point;
    ring.push_back({p.lon(), p.lat()});
  }
  features.push_back({{"type", "Feature"},
                      {"geometry", {{"type", "Polygon"}, {"coordinates", {ring}}}},
                      {"properties", {{"role", "epe_circle"}, {"radius_m", result.epe_m}}}});

  for (const auto& c : candidates.items) {
    features.push_back({{"type", "Feature"},
                        {"geometry", point(c.record->point)},
                        {"properties", {{"role", "candidate"},
                                        {"id", c.record->id},
                                        {"heading_deg", c.record->heading_deg},
                                        {"distance_m", c.distance_m}}}});
  }
  if (result.best_record_id) {
    json props = {{"role", "best"}, {"id", *result.best_record_id}};
    if (result.inlier_count) props["inlier_count"] = *result.inlier_count;
    features.push_back({{"type", "Feature"},
                        {"geometry", point(result.position)},
                        {"properties", props}});
  }
  return json{{"type", "FeatureCollection"}, {"features", features}};
}

void export_geojson(const LocalizationResult& result, const CandidateSet& candidates,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << result_to_geojson(result, candidates).dump(2) << "\n";
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

}  // namespace urbanfix
