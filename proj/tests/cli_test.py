"""End-to-end check of the command-line tool on a small synthetic street."""

import json
import os
import subprocess
import sys
import tempfile

CLI = sys.argv[1]
failures = []


def run(*args, ok=True, env=None):
    proc = subprocess.run([CLI, *args], capture_output=True, text=True, env=env)
    if ok and proc.returncode != 0:
        raise SystemExit(f"{args[0]} failed ({proc.returncode}): {proc.stderr}")
    if not ok and proc.returncode == 0:
        failures.append(f"expected failure: {' '.join(args)}")
    return proc


def check(cond, what):
    if not cond:
        failures.append(what)


def check_geojson(path, expected_features):
    with open(path) as fh:
        fc = json.load(fh)
    check(fc["type"] == "FeatureCollection", "geojson type")
    check(len(fc["features"]) == expected_features,
          f"geojson feature count {len(fc['features'])} != {expected_features}")
    try:
        from shapely.geometry import shape
    except ImportError:
        return
    for feat in fc["features"]:
        geom = shape(feat["geometry"])
        check(geom.is_valid, f"invalid geometry {feat['properties']}")
        if geom.geom_type == "Polygon":
            check(geom.exterior.is_ccw, "EPE ring is not counterclockwise")
            check(len(geom.exterior.coords) == 65, "EPE ring vertex count")


with tempfile.TemporaryDirectory() as tmp:
    ds = os.path.join(tmp, "ds")
    run("synth", "--out", ds, "--length-m", "36", "--spacing-m", "12", "--seed", "5",
        "--queries", "3")
    manifest = os.path.join(ds, "manifest.jsonl")
    with open(manifest) as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    check(len(lines) == 1 + 4 * 12, f"manifest lines {len(lines)}")

    run("index", "--manifest", manifest)
    with open(manifest) as fh:
        recs = [json.loads(line) for line in fh if line.strip()][1:]
    check(all(r.get("descriptor_path") for r in recs), "index sets descriptor paths")

    with open(os.path.join(ds, "ground_truth.jsonl")) as fh:
        gt = [json.loads(line) for line in fh if line.strip()]
    q = gt[0]
    geo = os.path.join(tmp, "q.geojson")
    out = run("locate", "--manifest", manifest, "--query", os.path.join(ds, q["image_path"]),
              "--lat", repr(q["lat"]), "--lon", repr(q["lon"]), "--hdop", repr(q["hdop"]),
              "--heading", repr(q["heading_deg"]), "--geojson", geo)
    res = json.loads(out.stdout)
    check(list(res.keys()) == ["best_record_id", "candidates_considered", "epe_m",
                               "inlier_count", "lat", "lon", "mode", "timings_ms"],
          f"result keys {list(res.keys())}")
    check(res["mode"] == "retrieval", f"mode {res['mode']}")
    check(res["best_record_id"] == q["truth_id"], f"best {res['best_record_id']}")
    check_geojson(geo, 2 + res["candidates_considered"] + 1)

    # Short-circuit through an NMEA sentence (hdop 0.5 -> EPE 10.2 m).
    body = "GPGGA,101010,4152.686,N,08737.788,W,1,09,0.5,10.0,M,-33.0,M,,"
    cs = 0
    for ch in body:
        cs ^= ord(ch)
    geo2 = os.path.join(tmp, "gps.geojson")
    out = run("locate", "--manifest", manifest, "--query", os.path.join(ds, q["image_path"]),
              "--nmea", f"${body}*{cs:02X}", "--heading", "0", "--no-timings",
              "--geojson", geo2)
    res = json.loads(out.stdout)
    check(res["mode"] == "gps-only", "nmea short-circuit mode")
    check(abs(res["epe_m"] - 10.2) < 1e-12, "nmea epe")
    check("timings_ms" not in res, "--no-timings")
    check_geojson(geo2, 2)

    # Bad checksum is reported, not crashed on.
    bad = run("locate", "--manifest", manifest, "--query", os.path.join(ds, q["image_path"]),
              "--nmea", f"${body}*00", "--heading", "0", ok=False)
    check("checksum" in bad.stderr, "checksum error message")

    cfg = os.path.join(tmp, "cfg.json")
    with open(cfg, "w") as fh:
        json.dump({"threads": 2, "seed": 3}, fh)
    out = run("eval", "--dataset", ds, "--config", cfg, "--no-timings")
    report = json.loads(out.stdout)
    check(report["query_count"] == 3, "eval query count")
    check(report["success_at_12m"] == 1.0, f"eval success {report['success_at_12m']}")
    check("success@12m" in out.stderr, "eval table")
    again = run("eval", "--dataset", ds, "--config", cfg, "--no-timings")
    check(again.stdout == out.stdout, "eval output is reproducible")
    scalar_env = dict(os.environ, URBANFIX_SIMD="scalar")
    scalar = run("eval", "--dataset", ds, "--config", cfg, "--no-timings", env=scalar_env)
    check(scalar.stdout == out.stdout, "scalar backend gives identical eval output")

    with open(cfg, "w") as fh:
        json.dump({"bogus": 1}, fh)
    run("eval", "--dataset", ds, "--config", cfg, ok=False)

    sites = os.path.join(tmp, "sites.jsonl")
    with open(sites, "w") as fh:
        fh.write('{"pano_id":"a","lat":41.8781,"lon":-87.6298}\n')
        fh.write('{"pano_id":"b","lat":41.8790,"lon":-87.6298}\n')
        fh.write('{"pano_id":"far","lat":41.9781,"lon":-87.6298}\n')
    env = {k: v for k, v in os.environ.items() if k != "URBANFIX_SV_KEY"}
    out = run("fetch", "--center", "41.8781,-87.6298", "--radius-m", "200", "--sites", sites,
              "--out", os.path.join(tmp, "fetched"), env=env)
    urls = [line.split("\t")[1] for line in out.stdout.splitlines()]
    check(len(urls) == 24, f"fetch listed {len(urls)} urls")
    check(urls[0].startswith("http://maps.googleapis.com/maps/api/streetview?size=400x300"
                             "&location=41.878100,-87.629800&fov=60&heading=0&pitch=10"),
          urls[0])
    check(os.path.exists(os.path.join(tmp, "fetched", "manifest.jsonl")), "fetch manifest")
    run("fetch", "--center", "41.8781,-87.6298", "--radius-m", "200", "--sites", sites,
        "--out", os.path.join(tmp, "dl"), "--download", ok=False, env=env)

if failures:
    for f in failures:
        print("FAIL:", f)
    sys.exit(1)
print("cli end-to-end OK")
