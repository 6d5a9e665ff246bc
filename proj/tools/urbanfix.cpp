// Command-line front end: synth, index, locate, eval, fetch.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "urbanfix/error.hpp"
#include "urbanfix/pipeline.hpp"

namespace {

using namespace urbanfix;

std::filesystem::path base_dir_of(const std::filesystem::path& manifest) {
  const auto parent = manifest.parent_path();
  return parent.empty() ? std::filesystem::path(".") : parent;
}

GeoPoint parse_lat_lon(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "expected LAT,LON but got \"" + text + "\"");
  }
  try {
    return GeoPoint(std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1)));
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kInvalidArgument, "expected LAT,LON but got \"" + text + "\"");
  }
}

struct SynthArgs {
  std::string out;
  double length_m = 120.0;
  double spacing_m = 12.0;
  uint64_t seed = 1;
  int queries = 100;
};

int run_synth(const SynthArgs& a) {
  SyntheticSpec spec;
  spec.street_length_m = a.length_m;
  spec.spacing_m = a.spacing_m;
  spec.query_count = a.queries;
  const SyntheticDataset ds = generate_synthetic_dataset(spec, a.seed);
  write_synthetic_dataset(ds, a.out);
  std::cerr << "wrote " << ds.manifest.records.size() << " records and "
            << ds.queries.size() << " queries to " << a.out << "\n";
  return 0;
}

int run_index(const std::string& manifest_path) {
  const Manifest manifest = load_manifest(manifest_path);
  const Manifest indexed = index_manifest(manifest, base_dir_of(manifest_path));
  save_manifest(indexed, manifest_path);
  std::cerr << "indexed " << indexed.records.size() << " records\n";
  return 0;
}

struct LocateArgs {
  std::string manifest;
  std::string query;
  std::optional<double> lat, lon, hdop;
  std::string nmea;
  double heading = 0.0;
  std::string geojson;
  bool no_timings = false;
  PipelineConfig config;
};

int run_locate(const LocateArgs& a) {
  GpsFix fix;
  if (!a.nmea.empty()) {
    fix = parse_gga(a.nmea);
  } else {
    if (!a.lat || !a.lon || !a.hdop) {
      throw Error(ErrorCode::kInvalidArgument, "give --nmea or all of --lat, --lon, --hdop");
    }
    fix.point = GeoPoint(*a.lat, *a.lon);
    fix.hdop = *a.hdop;
    fix.fix_quality = 1;
  }
  const Manifest manifest = load_manifest(a.manifest);
  const GridIndex index = build_grid_index(manifest, a.config.grid_cell_m);
  DescriptorCache cache(base_dir_of(a.manifest));
  LocateDetails details;
  const LocalizationResult result =
      locate(read_png(a.query), fix, a.heading, LocateContext{manifest, index, cache},
             a.config, &details);
  std::cout << result_to_json(result, !a.no_timings).dump() << "\n";
  if (!a.geojson.empty()) export_geojson(result, details.candidates, a.geojson);
  return 0;
}

struct EvalArgs {
  std::string dataset;
  std::string config;
  bool no_timings = false;
  bool table = true;
};

int run_eval(const EvalArgs& a) {
  PipelineConfig config;
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw Error(ErrorCode::kIo, "cannot read " + a.config);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParse, a.config + ": " + e.what());
    }
    config = pipeline_config_from_json(j);
  }
  const std::filesystem::path dir = a.dataset;
  const auto queries = load_ground_truth(dir / "ground_truth.jsonl");
  const EvaluationReport report = evaluate(dir, queries, config);
  std::cout << report.to_json(!a.no_timings).dump(2) << "\n";
  if (a.table) std::cerr << report.to_table();
  return 0;
}

struct FetchArgs {
  std::string center;
  double radius_m = 100.0;
  std::string sites;
  std::string out;
  bool download = false;
  int interval_ms = 200;
};

int run_fetch(const FetchArgs& a) {
  const GeoPoint center = parse_lat_lon(a.center);
  FileSiteProvider provider(a.sites);
  const auto sites = discover_panoramas(center, a.radius_m, provider);

  Manifest manifest;
  manifest.region_center = center;
  manifest.region_radius_m = a.radius_m;
  for (const auto& s : sites) {
    for (auto& r : enumerate_headings(s)) manifest.records.push_back(std::move(r));
  }

  const char* env_key = std::getenv(kStreetViewKeyEnv);
  const std::string key = env_key ? env_key : "";
  if (a.download && key.empty()) {
    throw Error(ErrorCode::kEmptyKey,
                std::string("--download needs the ") + kStreetViewKeyEnv + " environment variable");
  }
  // Listings without a key carry a placeholder the user substitutes later.
  const std::string listing_key = key.empty() ? "KEY" : key;
  const ImageSize size{400, 300};
  const std::filesystem::path out = a.out;
  for (const auto& r : manifest.records) {
    const std::string url = build_streetview_url(r, size, listing_key);
    if (a.download) {
      download_image(url, out / r.image_path, a.interval_ms);
      std::cerr << "downloaded " << r.id << "\n";
    } else {
      std::cout << r.id << "\t" << url << "\n";
    }
  }
  if (!a.out.empty()) {
    std::filesystem::create_directories(out);
    save_manifest(manifest, out / "manifest.jsonl");
  }
  std::cerr << sites.size() << " sites, " << manifest.records.size() << " records\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"urbanfix: refine a GPS fix by matching a street photo against geotagged imagery"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic street dataset");
  synth_cmd->add_option("--out", synth.out, "output directory")->required();
  synth_cmd->add_option("--length-m", synth.length_m, "street length in meters");
  synth_cmd->add_option("--spacing-m", synth.spacing_m, "panorama spacing in meters");
  synth_cmd->add_option("--seed", synth.seed, "query generation seed");
  synth_cmd->add_option("--queries", synth.queries, "number of queries");

  std::string index_manifest_path;
  auto* index_cmd = app.add_subcommand("index", "extract and store descriptors for all records");
  index_cmd->add_option("--manifest", index_manifest_path, "manifest.jsonl")
      ->required()->check(CLI::ExistingFile);

  LocateArgs loc;
  auto& cfg = loc.config;
  auto* locate_cmd = app.add_subcommand("locate", "localize one query image");
  locate_cmd->add_option("--manifest", loc.manifest)->required()->check(CLI::ExistingFile);
  locate_cmd->add_option("--query", loc.query, "query PNG")->required()->check(CLI::ExistingFile);
  auto* lat_opt = locate_cmd->add_option("--lat", loc.lat);
  auto* lon_opt = locate_cmd->add_option("--lon", loc.lon);
  auto* hdop_opt = locate_cmd->add_option("--hdop", loc.hdop);
  auto* nmea_opt = locate_cmd->add_option("--nmea", loc.nmea, "GGA sentence");
  nmea_opt->excludes(lat_opt)->excludes(lon_opt)->excludes(hdop_opt);
  locate_cmd->add_option("--heading", loc.heading, "camera heading in degrees")->required();
  locate_cmd->add_option("--uere", cfg.error_model.uere_m);
  locate_cmd->add_option("--th", cfg.retrieval.th);
  locate_cmd->add_option("--view-window", cfg.retrieval.view_window_k);
  locate_cmd->add_option("--ratio-threshold", cfg.match.ratio_threshold);
  locate_cmd->add_option("--ransac-iters", cfg.match.ransac_iterations);
  locate_cmd->add_option("--inlier-px", cfg.match.inlier_threshold_px);
  locate_cmd->add_option("--min-inliers", cfg.match.min_inliers);
  locate_cmd->add_option("--skip-epe", cfg.skip_epe_m);
  locate_cmd->add_option("--max-candidates", cfg.retrieval.max_candidates);
  locate_cmd->add_option("--seed", cfg.match.rng_seed);
  locate_cmd->add_option("--threads", cfg.threads, "scoring threads, 0 = all cores");
  locate_cmd->add_option("--geojson", loc.geojson, "write a GeoJSON overlay here");
  locate_cmd->add_flag("--no-timings", loc.no_timings, "omit timings_ms");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a dataset with ground truth");
  eval_cmd->add_option("--dataset", ev.dataset)->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--config", ev.config, "pipeline config JSON")->check(CLI::ExistingFile);
  eval_cmd->add_flag("--no-timings", ev.no_timings, "omit timings_ms");
  eval_cmd->add_flag("!--no-table", ev.table, "skip the table on stderr");

  FetchArgs fetch;
  auto* fetch_cmd = app.add_subcommand("fetch", "list or download street-view images");
  fetch_cmd->add_option("--center", fetch.center, "LAT,LON")->required();
  fetch_cmd->add_option("--radius-m", fetch.radius_m)->required();
  fetch_cmd->add_option("--sites", fetch.sites, "JSON Lines of pano_id/lat/lon")
      ->required()->check(CLI::ExistingFile);
  fetch_cmd->add_option("--out", fetch.out, "write manifest.jsonl (and images) here");
  fetch_cmd->add_flag("--download", fetch.download);
  fetch_cmd->add_option("--interval-ms", fetch.interval_ms, "minimum gap between requests");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) return run_synth(synth);
    if (*index_cmd) return run_index(index_manifest_path);
    if (*locate_cmd) return run_locate(loc);
    if (*eval_cmd) return run_eval(ev);
    if (*fetch_cmd) {
      if (fetch.download && fetch.out.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "--download needs --out");
      }
      return run_fetch(fetch);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
