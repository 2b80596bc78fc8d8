// Acceptance suite: each check prints one PASS/FAIL line and the binary
// exits nonzero if any fails. Usage: apcdet_acceptance <path-to-cli>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "apcdet/anchors.hpp"
#include "apcdet/clustering.hpp"
#include "apcdet/eval.hpp"
#include "apcdet/features.hpp"
#include "apcdet/geometry.hpp"
#include "apcdet/io.hpp"
#include "apcdet/losses.hpp"
#include "apcdet/matching.hpp"
#include "apcdet/rng.hpp"
#include "apcdet/suppression.hpp"
#include "apcdet/synth.hpp"
#include "../oracles.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace apcdet;

namespace {

std::string g_cli;
fs::path g_work;

struct Criterion {
  std::string name;
  double time_limit_seconds;
  std::function<void(std::ostringstream&)> body;  // throws on failure
};

void require(bool condition, const std::string& what) {
  if (!condition) throw std::runtime_error(what);
}

int run_cli(const std::string& args, const std::string& stdout_name) {
  const std::string command = "\"" + g_cli + "\" " + args + " > " +
                              (g_work / stdout_name).string() + " 2> " +
                              (g_work / "stderr.txt").string();
  return WEXITSTATUS(std::system(command.c_str()));
}

json cli_report(const std::string& stdout_name) {
  std::ifstream stream(g_work / stdout_name);
  std::stringstream buffer;
  buffer << stream.rdbuf();
  return json::parse(buffer.str());
}

std::string file_bytes(const fs::path& path) {
  std::ifstream stream(path, std::ios::binary);
  std::stringstream buffer;
  buffer << stream.rdbuf();
  return buffer.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream stream(path);
  stream << text;
}

// ---------------------------------------------------------------------------

void anchor_arithmetic(std::ostringstream& detail) {
  write_text(g_work / "anchors-config.json",
             R"({"anchors": {"feature_maps": [38, 19, 10, 5, 3, 1],
                             "scale_min": 0.2, "scale_max": 0.9}})");
  require(run_cli("gen-anchors --config " + (g_work / "anchors-config.json").string() +
                      " --out " + (g_work / "anchors.jsonl").string(),
                  "anchors-report.json") == 0,
          "gen-anchors failed");
  const json report = cli_report("anchors-report.json");
  require(report["count"] == 11640, "expected 11640 boxes, got " + report["count"].dump());

  AnchorConfig config;
  config.feature_maps = {38, 19, 10, 5, 3, 1};
  config.scale_min = 0.2;
  config.scale_max = 0.9;
  const double expected[] = {0.20, 0.34, 0.48, 0.62, 0.76, 0.90};
  for (int k = 1; k <= 6; ++k) {
    const double scale = scale_for_map(k, config).scale;
    require(std::abs(scale - expected[k - 1]) < 1e-12,
            "scale " + std::to_string(k) + " off: " + std::to_string(scale));
  }
  detail << "count 11640, scales 0.20..0.90";
}

void geometry_oracle(std::ostringstream& detail) {
  const Box a = from_corners({0.0, 0.0, 0.2, 0.2});
  const Box b = from_corners({0.1, 0.1, 0.3, 0.3});
  require(std::abs(iou(a, b) - 1.0 / 7.0) < 1e-12, "1/7 fixture off");

  Rng rng(20240810);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto grid_box = [&]() {
      const int x0 = rng.uniform_int(0, 500);
      const int y0 = rng.uniform_int(0, 500);
      return from_corners({x0 / 600.0, y0 / 600.0,
                           (x0 + rng.uniform_int(20, 99)) / 600.0,
                           (y0 + rng.uniform_int(20, 99)) / 600.0});
    };
    const Box u = grid_box();
    const Box v = grid_box();
    worst = std::max(worst, std::abs(iou(u, v) - oracles::pixel_count_iou(u, v)));
  }
  require(worst < 1e-3, "pixel oracle deviation " + std::to_string(worst));
  detail << "1/7 exact, max oracle deviation " << worst;
}

void nms_equivalence(std::ostringstream& detail) {
  Rng rng(555);
  for (int trial = 0; trial < 500; ++trial) {
    DetectionSet detections;
    detections.image_id = "t";
    const int rows = rng.uniform_int(1, 50);
    for (int i = 0; i < rows; ++i) {
      std::vector<double> scores(3);
      scores[0] = rng.uniform(0.0, 0.3);
      scores[1] = rng.uniform();
      scores[2] = rng.uniform();
      const double sum = scores[0] + scores[1] + scores[2];
      for (double& s : scores) s /= sum;
      detections.rows.push_back({scores,
                                 {rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8),
                                  rng.uniform(0.05, 0.5), rng.uniform(0.05, 0.5)}});
    }
    for (int c = 1; c < 3; ++c) {
      std::vector<std::size_t> mine;
      for (const Detection& d : nms(detections, c, 0.5, 0.01)) mine.push_back(d.source_row);
      std::sort(mine.begin(), mine.end());
      const auto reference = oracles::reference_nms(detections, c, 0.5, 0.01);
      require(mine == reference, "greedy/reference mismatch at trial " + std::to_string(trial));
    }
  }
  detail << "500 seeded sets identical";
}

void apc_oracle_quality(std::ostringstream& detail) {
  Rng rng(424242);
  const int instances = 200;
  int good = 0;
  for (int trial = 0; trial < instances; ++trial) {
    const std::size_t q = static_cast<std::size_t>(rng.uniform_int(2, 8));
    std::vector<std::pair<double, double>> points;
    for (std::size_t i = 0; i < q; ++i) points.emplace_back(rng.uniform(), rng.uniform());
    Matrix similarity(q, q);
    std::vector<double> off;
    for (std::size_t i = 0; i < q; ++i) {
      for (std::size_t j = 0; j < q; ++j) {
        if (i == j) continue;
        const double dx = points[i].first - points[j].first;
        const double dy = points[i].second - points[j].second;
        similarity(i, j) = -(dx * dx + dy * dy);
        off.push_back(similarity(i, j));
      }
    }
    std::sort(off.begin(), off.end());
    const double preference = off.size() % 2 == 1
                                  ? off[off.size() / 2]
                                  : 0.5 * (off[off.size() / 2 - 1] + off[off.size() / 2]);
    for (std::size_t i = 0; i < q; ++i) similarity(i, i) = preference;

    const apc::ClusterResult result = apc::run(similarity);
    const double achieved = oracles::net_similarity(similarity, result.exemplars);
    const double optimum = oracles::brute_force_exemplars(similarity).net;
    if (achieved >= optimum - 0.05 * std::abs(optimum) - 1e-12) ++good;
  }
  require(good >= instances * 9 / 10,
          "only " + std::to_string(good) + "/200 instances within 5% of optimum");

  // Two far-separated tight groups: exactly one exemplar per group.
  const std::vector<std::pair<double, double>> groups = {
      {0.00, 0.00}, {0.08, 0.02}, {0.03, 0.07}, {-0.05, 0.04},
      {10.00, 0.00}, {10.06, 0.05}, {9.95, 0.08}, {10.02, -0.06}};
  Matrix similarity(8, 8);
  std::vector<double> off;
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = 0; j < 8; ++j) {
      if (i == j) continue;
      const double dx = groups[i].first - groups[j].first;
      const double dy = groups[i].second - groups[j].second;
      similarity(i, j) = -(dx * dx + dy * dy);
      off.push_back(similarity(i, j));
    }
  }
  std::sort(off.begin(), off.end());
  const double preference = 0.5 * (off[off.size() / 2 - 1] + off[off.size() / 2]);
  for (std::size_t i = 0; i < 8; ++i) similarity(i, i) = preference;
  const apc::ClusterResult result = apc::run(similarity);
  require(result.exemplars.size() == 2, "two-group fixture gave " +
                                            std::to_string(result.exemplars.size()) +
                                            " exemplars");
  require(result.exemplars[0] < 4 && result.exemplars[1] >= 4,
          "exemplars not one per group");
  for (std::size_t i = 0; i < 8; ++i) {
    require(result.assignments[i] == result.exemplars[i < 4 ? 0 : 1],
            "membership wrong at point " + std::to_string(i));
  }
  detail << good << "/200 within 5% of optimum; two-group fixture split correctly";
}

void loss_correctness(std::ostringstream& detail) {
  // Perfect predictions: box 0 positive (class 1), box 1 negative.
  MatchResult matched;
  matched.class_targets = Matrix(2, 3);
  matched.class_targets(0, 1) = 1.0;
  matched.box_targets = Matrix(2, 4);
  matched.positive = {0};
  matched.negative = {1};
  matched.assigned_gt = {0, -1};
  PredictionMatrix perfect;
  perfect.class_probs = Matrix(2, 3);
  perfect.class_probs(0, 1) = 1.0;
  perfect.class_probs(1, 0) = 1.0;
  perfect.box_offsets = Matrix(2, 4);
  require(std::abs(total_loss(perfect, matched).total) <= 1e-9, "perfect fixture not 0");

  Rng rng(17);
  const double h = 1e-6;
  int checked = 0;
  while (checked < 100) {
    const double x = rng.uniform(-3.0, 3.0);
    if (std::abs(std::abs(x) - 1.0) < 1e-3) continue;
    ++checked;
    const double numeric = (smooth_l1(x + h) - smooth_l1(x - h)) / (2.0 * h);
    const double analytic = std::abs(x) < 1.0 ? x : (x > 0.0 ? 1.0 : -1.0);
    require(std::abs(numeric - analytic) < 1e-6, "derivative mismatch at x=" + std::to_string(x));
  }

  PredictionMatrix composed = perfect;
  composed.class_probs(0, 1) = 1.0 / M_E;  // classification 1
  composed.box_offsets(0, 0) = 0.5;        // localization 0.125
  const LossBreakdown loss = total_loss(composed, matched, 1.0);
  require(std::abs(loss.total - 1.125) < 1e-12,
          "composed fixture gave " + std::to_string(loss.total));
  detail << "perfect 0, derivative ok at 100 points, composed 1.125";
}

void ap_hand_fixture(std::ostringstream& detail) {
  const std::vector<GroundTruthBox> gts = {{"img", {0.2, 0.2, 0.1, 0.1}},
                                           {"img", {0.7, 0.7, 0.1, 0.1}}};
  const std::vector<RankedDetection> dets = {
      {"img", 0.9, {0.2, 0.2, 0.1, 0.1}, 0},
      {"img", 0.8, {0.45, 0.45, 0.1, 0.1}, 1},
      {"img", 0.7, {0.7, 0.7, 0.1, 0.1}, 2},
  };
  const double ap = average_precision(dets, gts);
  require(std::abs(ap - 5.0 / 6.0) < 1e-12, "AP fixture gave " + std::to_string(ap));

  const std::vector<RankedDetection> duplicates = {
      {"img", 0.9, {0.2, 0.2, 0.1, 0.1}, 0},
      {"img", 0.8, {0.2, 0.2, 0.1, 0.1}, 1},
  };
  const EvalReport report = evaluate({{"c", duplicates}}, {{"c", gts}});
  require(report.per_class.at("c").false_positives == 1, "duplicate not counted FP");
  detail << "AP 5/6 exact, duplicate counted FP";
}

void synthetic_substitute(std::ostringstream& detail) {
  // Trained-backbone results are out of reach here; the corpus substitutes.
  const fs::path corpus = g_work / "corpus";
  write_text(g_work / "pipeline-config.json", "{}");
  require(run_cli("synth --out-dir " + corpus.string() +
                      " --seed 20240810 --scenes 50 --pairs 1 --extras 1",
                  "synth-report.json") == 0,
          "synth failed");
  const std::string config = (g_work / "pipeline-config.json").string();
  require(run_cli("suppress --method nms --dump " + (corpus / "detections.jsonl").string() +
                      " --config " + config + " --out " + (g_work / "nms.jsonl").string(),
                  "nms-report.json") == 0,
          "nms suppress failed");
  require(run_cli("suppress --method apc --dump " + (corpus / "detections.jsonl").string() +
                      " --images-dir " + (corpus / "images").string() + " --config " +
                      config + " --out " + (g_work / "apc.jsonl").string(),
                  "apc-report.json") == 0,
          "apc suppress failed");
  require(run_cli("evaluate --detections " + (g_work / "nms.jsonl").string() +
                      " --annotations " + (corpus / "annotations.jsonl").string(),
                  "nms-eval.json") == 0,
          "nms evaluate failed");
  require(run_cli("evaluate --detections " + (g_work / "apc.jsonl").string() +
                      " --annotations " + (corpus / "annotations.jsonl").string(),
                  "apc-eval.json") == 0,
          "apc evaluate failed");
  const double nms_map = cli_report("nms-eval.json")["map"].get<double>();
  const double apc_map = cli_report("apc-eval.json")["map"].get<double>();
  require(apc_map > nms_map + 0.02,
          "mAP gap too small: apc " + std::to_string(apc_map) + " vs nms " +
              std::to_string(nms_map));

  // The motivating single-pair fixture: greedy keeps 1 box, clustering 2.
  synth::SynthSpec spec;
  spec.seed = 1;
  spec.contested_pairs = 1;
  spec.extra_objects = 0;
  const synth::SyntheticScene scene = synth::make_scene(spec, 0);
  SuppressionConfig suppression;
  suppression.appearance_weight = 1.0;
  const std::size_t greedy = nms_suppress(scene.detections, suppression).size();
  const std::size_t clustered =
      apc_suppress(scene.detections, &scene.image, suppression).size();
  require(greedy == 1, "single-pair greedy kept " + std::to_string(greedy));
  require(clustered == 2, "single-pair clustering kept " + std::to_string(clustered));
  detail << "mAP apc " << apc_map << " vs nms " << nms_map << " (+"
         << (apc_map - nms_map) * 100.0 << "pp); single pair 1 vs 2";
}

void determinism(std::ostringstream& detail) {
  const std::string config = (g_work / "pipeline-config.json").string();
  write_text(config, "{}");
  for (const std::string tag : {"r1", "r2"}) {
    const fs::path root = g_work / ("det-" + tag);
    require(run_cli("synth --out-dir " + (root / "corpus").string() +
                        " --seed 99 --scenes 6 --pairs 1 --extras 1",
                    tag + "-synth.json") == 0,
            "synth failed");
    const std::string jobs = tag == "r1" ? "1" : "4";
    require(run_cli("suppress --method apc --dump " +
                        (root / "corpus" / "detections.jsonl").string() + " --images-dir " +
                        (root / "corpus" / "images").string() + " --config " + config +
                        " --out " + (root / "apc.jsonl").string() + " --jobs " + jobs,
                    tag + "-apc.json") == 0,
            "suppress failed");
    require(run_cli("suppress --method nms --dump " +
                        (root / "corpus" / "detections.jsonl").string() + " --config " +
                        config + " --out " + (root / "nms.jsonl").string() + " --jobs " +
                        jobs,
                    tag + "-nms.json") == 0,
            "suppress failed");
    require(run_cli("evaluate --detections " + (root / "apc.jsonl").string() +
                        " --annotations " + (root / "corpus" / "annotations.jsonl").string() +
                        " --out " + (root / "apc-report.json").string(),
                    tag + "-apc-eval.json") == 0,
            "evaluate failed");
    require(run_cli("evaluate --detections " + (root / "nms.jsonl").string() +
                        " --annotations " + (root / "corpus" / "annotations.jsonl").string() +
                        " --out " + (root / "nms-report.json").string(),
                    tag + "-nms-eval.json") == 0,
            "evaluate failed");
    require(run_cli("compare --a " + (root / "nms-report.json").string() + " --b " +
                        (root / "apc-report.json").string(),
                    tag + "-compare.json") == 0,
            "compare failed");
  }
  for (const std::string name :
       {"corpus/detections.jsonl", "corpus/annotations.jsonl", "corpus/images/scene-0003.ppm",
        "apc.jsonl", "nms.jsonl", "apc-report.json", "nms-report.json"}) {
    require(file_bytes(g_work / "det-r1" / name) == file_bytes(g_work / "det-r2" / name),
            name + " differs between runs");
  }
  require(file_bytes(g_work / "r1-compare.json") == file_bytes(g_work / "r2-compare.json"),
          "comparison reports differ");
  detail << "two runs and --jobs 1 vs 4 byte-identical";
}

void hog_sanity(std::ostringstream& detail) {
  const ImageRaster constant = make_raster(64, 64, 1, 0.5);
  const HogDescriptor zero = hog(constant);
  require(zero.values.size() == 1764, "descriptor length is not 1764");
  for (double v : zero.values) require(v == 0.0, "constant patch descriptor not zero");

  Rng rng(2718);
  for (int trial = 0; trial < 100; ++trial) {
    ImageRaster left = make_raster(64, 64, 1);
    ImageRaster right = make_raster(64, 64, 1);
    for (double& v : left.data) v = rng.uniform();
    for (double& v : right.data) v = rng.uniform();
    const HogDescriptor a = hog(left);
    const HogDescriptor b = hog(right);
    const double forward = appearance_similarity(a, b);
    require(forward == appearance_similarity(b, a), "similarity not symmetric");
    require(forward <= 0.0, "similarity positive");
  }
  detail << "zero descriptor, length 1764, 100 symmetric nonpositive pairs";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: apcdet_acceptance <path-to-cli> [workdir]\n";
    return 2;
  }
  g_cli = argv[1];
  g_work = argc > 2 ? fs::path(argv[2])
                    : fs::temp_directory_path() / "apcdet-acceptance";
  fs::remove_all(g_work);
  fs::create_directories(g_work);

  const std::vector<Criterion> criteria = {
      {"anchor-arithmetic", 1.0, anchor_arithmetic},
      {"geometry-oracle", 10.0, geometry_oracle},
      {"nms-brute-force-equivalence", 30.0, nms_equivalence},
      {"apc-oracle-quality", 60.0, apc_oracle_quality},
      {"loss-correctness", 5.0, loss_correctness},
      {"ap-hand-fixture", 1.0, ap_hand_fixture},
      {"synthetic-corpus-substitute", 300.0, synthetic_substitute},
      {"pipeline-determinism", 300.0, determinism},
      {"hog-sanity", 10.0, hog_sanity},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    std::ostringstream detail;
    std::string error;
    try {
      criteria[i].body(detail);
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (error.empty() && elapsed > criteria[i].time_limit_seconds) {
      error = "exceeded time limit of " + std::to_string(criteria[i].time_limit_seconds) + "s";
    }
    const bool ok = error.empty();
    failures += ok ? 0 : 1;
    std::printf("%s  %zu. %s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", i + 1,
                criteria[i].name.c_str(), elapsed,
                ok ? (detail.str().empty() ? "" : ": ") : ": ",
                ok ? detail.str().c_str() : error.c_str());
  }
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all %zu criteria passed\n", criteria.size());
  fs::remove_all(g_work);
  return 0;
}
