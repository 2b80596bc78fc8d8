// Batch front end: anchor generation, matching, loss evaluation, standalone
// clustering, suppression (greedy or clustering-based), VOC evaluation and
// report comparison, plus synthetic fixture generation.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "apcdet/anchors.hpp"
#include "apcdet/clustering.hpp"
#include "apcdet/errors.hpp"
#include "apcdet/eval.hpp"
#include "apcdet/io.hpp"
#include "apcdet/losses.hpp"
#include "apcdet/matching.hpp"
#include "apcdet/suppression.hpp"
#include "apcdet/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace apcdet;

namespace {

struct GenAnchorsArgs {
  std::string config_path;
  std::string out_path;
};

struct MatchArgs {
  std::string config_path;
  std::string annotations_path;
  double threshold = 0.5;
  std::string out_path;
};

struct LossArgs {
  std::string config_path;
  std::string dump_path;
  std::string annotations_path;
  double threshold = 0.5;
  double alpha = 1.0;
};

struct ClusterArgs {
  std::string input_path;
  std::string config_path;
  std::string preference;  // empty, "median" or a number
  std::optional<double> damping;
  std::optional<int> max_iter;
  std::optional<int> window;
};

struct SuppressArgs {
  std::string method;
  std::string dump_path;
  std::string images_dir;
  std::string config_path;
  std::string out_path;
  unsigned jobs = 0;
};

struct EvaluateArgs {
  std::string detections_path;
  std::string annotations_path;
  std::string config_path;
  std::string out_path;
};

struct CompareArgs {
  std::string a_path;
  std::string b_path;
};

struct SynthArgs {
  std::string out_dir;
  std::uint64_t seed = 0;
  int scenes = 1;
  int pairs = 1;
  int extras = 1;
  int image_size = 256;
};

void emit(const json& report) { std::cout << report.dump() << "\n"; }

io::ToolkitConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return {};
  return io::load_config(path);
}

int run_gen_anchors(const GenAnchorsArgs& args) {
  const io::ToolkitConfig config = io::load_config(args.config_path);
  const DefaultBoxSet set = generate_anchors(config.anchors);

  std::ofstream stream(args.out_path);
  if (!stream) throw ValidationError("cannot write " + args.out_path);
  json ranges = json::array();
  for (const auto& [begin, end] : set.per_map_ranges) {
    ranges.push_back(json::array({begin, end}));
  }
  stream << json{{"count", set.boxes.size()}, {"per_map_ranges", ranges}}.dump() << "\n";
  for (const Box& box : set.boxes) {
    stream << json::array({box.cx, box.cy, box.w, box.h}).dump() << "\n";
  }
  emit({{"count", set.boxes.size()}, {"out", args.out_path}});
  return 0;
}

int run_match(const MatchArgs& args, bool pretty) {
  const io::ToolkitConfig config = io::load_config(args.config_path);
  const io::AnnotationFile annotations = io::load_annotations(args.annotations_path);
  const DefaultBoxSet defaults = generate_anchors(config.anchors);

  // Group objects per image, in file order.
  std::vector<std::string> image_order;
  std::map<std::string, std::vector<GroundTruthObject>> objects;
  for (const auto& item : annotations.items) {
    if (!objects.count(item.image_id)) image_order.push_back(item.image_id);
    objects[item.image_id].push_back(
        {annotations.classes.index_of(item.label), item.box});
  }

  std::ofstream out;
  if (!args.out_path.empty()) {
    out.open(args.out_path);
    if (!out) throw ValidationError("cannot write " + args.out_path);
    out << json{{"classes", annotations.classes.names}}.dump() << "\n";
  }

  json per_image = json::object();
  std::size_t total_positive = 0;
  for (const auto& image_id : image_order) {
    const MatchResult result = match(defaults, objects[image_id],
                                     annotations.classes.class_count(), args.threshold);
    total_positive += result.positive.size();
    per_image[image_id] = {{"positives", result.positive.size()},
                           {"negatives", result.negative.size()}};
    if (out.is_open()) {
      for (std::size_t i : result.positive) {
        const auto gt = static_cast<std::size_t>(result.assigned_gt[i]);
        out << json{{"image_id", image_id},
                    {"box_index", i},
                    {"label", annotations.classes.names[static_cast<std::size_t>(
                                  objects[image_id][gt].class_index)]},
                    {"offsets",
                     json::array({result.box_targets(i, 0), result.box_targets(i, 1),
                                  result.box_targets(i, 2), result.box_targets(i, 3)})}}
                   .dump()
            << "\n";
      }
    }
  }
  const json report = {{"default_boxes", defaults.boxes.size()},
                       {"images", image_order.size()},
                       {"positives", total_positive},
                       {"per_image", per_image}};
  if (pretty) {
    std::cerr << "image            positives\n";
    for (const auto& image_id : image_order) {
      std::fprintf(stderr, "%-16s %9zu\n", image_id.c_str(),
                   per_image[image_id]["positives"].get<std::size_t>());
    }
  }
  emit(report);
  return 0;
}

int run_loss(const LossArgs& args) {
  const io::ToolkitConfig config = io::load_config(args.config_path);
  const io::DetectionDump dump = io::load_dump(args.dump_path);
  const io::AnnotationFile annotations = io::load_annotations(args.annotations_path);
  if (dump.classes != annotations.classes) {
    throw ValidationError("loss: dump and annotation class vocabularies differ");
  }
  const DefaultBoxSet defaults = generate_anchors(config.anchors);
  const std::size_t n = defaults.boxes.size();
  const int class_count = dump.classes.class_count();

  std::map<std::string, std::vector<GroundTruthObject>> objects;
  for (const auto& item : annotations.items) {
    objects[item.image_id].push_back(
        {annotations.classes.index_of(item.label), item.box});
  }

  json per_image = json::object();
  double total_sum = 0.0;
  for (const auto& image : dump.images) {
    if (image.rows.size() != n) {
      throw ValidationError("loss: image " + image.image_id + " has " +
                            std::to_string(image.rows.size()) + " rows, expected " +
                            std::to_string(n) + " (one per default box)");
    }
    PredictionMatrix prediction;
    prediction.class_probs = Matrix(n, static_cast<std::size_t>(class_count));
    prediction.box_offsets = Matrix(n, 4);
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (int c = 0; c < class_count; ++c) {
        const double p = image.rows[i].scores[static_cast<std::size_t>(c)];
        prediction.class_probs(i, static_cast<std::size_t>(c)) = p;
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError("loss: image " + image.image_id + " row " +
                              std::to_string(i) + " scores do not sum to 1");
      }
      prediction.box_offsets(i, 0) = image.rows[i].box.cx;
      prediction.box_offsets(i, 1) = image.rows[i].box.cy;
      prediction.box_offsets(i, 2) = image.rows[i].box.w;
      prediction.box_offsets(i, 3) = image.rows[i].box.h;
    }
    const auto it = objects.find(image.image_id);
    const MatchResult result =
        match(defaults, it == objects.end() ? std::vector<GroundTruthObject>{} : it->second,
              class_count, args.threshold);
    const LossBreakdown loss = total_loss(prediction, result, args.alpha);
    per_image[image.image_id] = {{"classification", loss.classification},
                                 {"localization", loss.localization},
                                 {"total", loss.total},
                                 {"positives", loss.positive_count},
                                 {"no_positives", loss.no_positives}};
    total_sum += loss.total;
  }
  emit({{"images", dump.images.size()},
        {"alpha", args.alpha},
        {"mean_total", dump.images.empty() ? 0.0 : total_sum / dump.images.size()},
        {"per_image", per_image}});
  return 0;
}

int run_cluster(const ClusterArgs& args) {
  const io::ToolkitConfig config = load_config_or_default(args.config_path);
  apc::ApcParams params = config.suppression.apc;
  if (args.damping) params.damping = *args.damping;
  if (args.max_iter) params.max_iter = *args.max_iter;
  if (args.window) params.convergence_window = *args.window;

  Matrix similarity = io::load_similarity_csv(args.input_path);
  if (!args.preference.empty()) {
    double value = 0.0;
    if (args.preference == "median") {
      std::vector<double> off;
      for (std::size_t i = 0; i < similarity.rows; ++i) {
        for (std::size_t j = 0; j < similarity.cols; ++j) {
          if (i != j) off.push_back(similarity(i, j));
        }
      }
      if (off.empty()) {
        value = similarity(0, 0);
      } else {
        std::sort(off.begin(), off.end());
        value = off.size() % 2 == 1
                    ? off[off.size() / 2]
                    : 0.5 * (off[off.size() / 2 - 1] + off[off.size() / 2]);
      }
    } else {
      try {
        value = std::stod(args.preference);
      } catch (const std::exception&) {
        throw ValidationError("cluster: --preference must be \"median\" or a number");
      }
    }
    for (std::size_t i = 0; i < similarity.rows; ++i) similarity(i, i) = value;
  }

  const apc::ClusterResult result = apc::run(similarity, params);
  emit({{"points", similarity.rows},
        {"exemplars", result.exemplars},
        {"assignments", result.assignments},
        {"iterations", result.iterations},
        {"converged", result.converged}});
  return 0;
}

FinalDetections suppress_one(const DetectionSet& image_rows, const std::string& method,
                             const std::string& images_dir,
                             const SuppressionConfig& config) {
  if (method == "nms") {
    return nms_suppress(image_rows, config);
  }
  if (config.appearance_weight > 0.0) {
    const fs::path ppm = fs::path(images_dir) / (image_rows.image_id + ".ppm");
    const fs::path png = fs::path(images_dir) / (image_rows.image_id + ".png");
    fs::path chosen;
    if (fs::exists(ppm)) {
      chosen = ppm;
    } else if (fs::exists(png)) {
      chosen = png;
    } else {
      throw ValidationError("suppress: no image for image id \"" + image_rows.image_id +
                            "\" under " + images_dir);
    }
    const ImageRaster image = io::load_image(chosen.string());
    return apc_suppress(image_rows, &image, config);
  }
  return apc_suppress(image_rows, nullptr, config);
}

int run_suppress(const SuppressArgs& args) {
  if (args.method != "nms" && args.method != "apc") {
    throw ValidationError("suppress: --method must be nms or apc");
  }
  const io::ToolkitConfig config = io::load_config(args.config_path);
  io::DetectionDump dump = io::load_dump(args.dump_path);
  std::sort(dump.images.begin(), dump.images.end(),
            [](const DetectionSet& a, const DetectionSet& b) {
              return a.image_id < b.image_id;
            });

  std::vector<FinalDetections> results(dump.images.size());
  const unsigned worker_count = std::max(
      1u, args.jobs == 0 ? std::thread::hardware_concurrency() : args.jobs);
  if (worker_count <= 1 || dump.images.size() <= 1) {
    for (std::size_t i = 0; i < dump.images.size(); ++i) {
      results[i] = suppress_one(dump.images[i], args.method, args.images_dir,
                                config.suppression);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&]() {
      for (std::size_t i; (i = next.fetch_add(1)) < dump.images.size();) {
        try {
          results[i] = suppress_one(dump.images[i], args.method, args.images_dir,
                                    config.suppression);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> workers;
    const unsigned spawned =
        std::min<unsigned>(worker_count, static_cast<unsigned>(dump.images.size()));
    workers.reserve(spawned);
    for (unsigned t = 0; t < spawned; ++t) workers.emplace_back(work);
    for (auto& worker : workers) worker.join();
    if (failure) std::rethrow_exception(failure);
  }

  io::FinalDetectionFile file;
  file.classes = dump.classes;
  for (std::size_t i = 0; i < dump.images.size(); ++i) {
    for (const Detection& detection : results[i]) {
      file.records.push_back(
          {dump.images[i].image_id,
           dump.classes.names[static_cast<std::size_t>(detection.class_index)],
           detection.confidence, detection.box, detection.source_row});
    }
  }
  io::save_detections(args.out_path, file);
  emit({{"method", args.method},
        {"images", dump.images.size()},
        {"detections", file.records.size()},
        {"out", args.out_path}});
  return 0;
}

int run_evaluate(const EvaluateArgs& args, bool pretty) {
  const io::ToolkitConfig config = load_config_or_default(args.config_path);
  const io::FinalDetectionFile detections = io::load_detections(args.detections_path);
  const io::AnnotationFile annotations = io::load_annotations(args.annotations_path);
  if (detections.classes != annotations.classes) {
    throw ValidationError("evaluate: detection and annotation class vocabularies differ");
  }

  std::map<std::string, std::vector<RankedDetection>> per_class_detections;
  std::map<std::string, std::vector<GroundTruthBox>> per_class_ground_truth;
  for (int c = kBackgroundClass + 1; c < detections.classes.class_count(); ++c) {
    per_class_detections[detections.classes.names[static_cast<std::size_t>(c)]] = {};
  }
  for (const auto& record : detections.records) {
    per_class_detections[record.class_name].push_back(
        {record.image_id, record.confidence, record.box, record.source_row});
  }
  for (const auto& item : annotations.items) {
    per_class_ground_truth[item.label].push_back({item.image_id, item.box});
  }

  const EvalReport report =
      evaluate(per_class_detections, per_class_ground_truth, config.eval);
  if (!args.out_path.empty()) io::save_report(args.out_path, report);
  if (pretty) {
    std::fprintf(stderr, "%-16s %8s %6s %6s %6s %6s\n", "class", "AP", "gt", "det",
                 "tp", "fp");
    for (const auto& [name, entry] : report.per_class) {
      if (entry.defined) {
        std::fprintf(stderr, "%-16s %8.4f %6zu %6zu %6zu %6zu\n", name.c_str(), entry.ap,
                     entry.gt_count, entry.detection_count, entry.true_positives,
                     entry.false_positives);
      } else {
        std::fprintf(stderr, "%-16s %8s %6zu %6zu %6s %6s\n", name.c_str(), "n/a",
                     entry.gt_count, entry.detection_count, "-", "-");
      }
    }
    std::fprintf(stderr, "%-16s %8.4f\n", "mAP", report.map);
  }
  std::cout << io::serialize_report(report) << "\n";
  return 0;
}

int run_compare(const CompareArgs& args, bool pretty) {
  const EvalReport a = io::load_report(args.a_path);
  const EvalReport b = io::load_report(args.b_path);
  const ComparisonReport comparison = compare(a, b);
  if (pretty) {
    std::fprintf(stderr, "%-16s %8s %8s %10s\n", "class", "AP(a)", "AP(b)", "delta(pp)");
    for (const auto& [name, delta] : comparison.per_class) {
      std::fprintf(stderr, "%-16s %8.4f %8.4f %+10.2f\n", name.c_str(), delta.ap_a,
                   delta.ap_b, delta.delta_points);
    }
    std::fprintf(stderr, "%-16s %8.4f %8.4f %+10.2f\n", "mAP", comparison.map_a,
                 comparison.map_b, comparison.delta_points);
  }
  std::cout << io::serialize_comparison(comparison) << "\n";
  return 0;
}

int run_synth(const SynthArgs& args) {
  synth::SynthSpec spec;
  spec.scenes = args.scenes;
  spec.seed = args.seed;
  spec.contested_pairs = args.pairs;
  spec.extra_objects = args.extras;
  spec.image_size = args.image_size;

  const fs::path root(args.out_dir);
  fs::create_directories(root / "images");

  io::AnnotationFile annotations;
  annotations.classes = synth::vocabulary();
  io::DetectionDump dump;
  dump.classes = annotations.classes;
  std::size_t objects = 0;
  std::size_t rows = 0;
  for (const synth::SyntheticScene& scene : synth::make_scenes(spec)) {
    io::save_ppm((root / "images" / (scene.image_id + ".ppm")).string(), scene.image);
    annotations.items.insert(annotations.items.end(), scene.annotations.begin(),
                             scene.annotations.end());
    dump.images.push_back(scene.detections);
    objects += scene.annotations.size();
    rows += scene.detections.rows.size();
  }
  io::save_annotations((root / "annotations.jsonl").string(), annotations);
  io::save_dump((root / "detections.jsonl").string(), dump);
  emit({{"scenes", spec.scenes},
        {"objects", objects},
        {"detection_rows", rows},
        {"out_dir", args.out_dir}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detection post-processing toolkit: default boxes, matching, losses, "
               "greedy and clustering-based suppression, VOC evaluation"};
  app.require_subcommand(1);
  bool pretty = false;
  app.add_flag("--pretty", pretty, "Also print a human-readable table to stderr");

  GenAnchorsArgs gen_args;
  auto* gen = app.add_subcommand("gen-anchors", "Generate the default box set");
  gen->add_option("--config", gen_args.config_path, "Toolkit config JSON")->required();
  gen->add_option("--out", gen_args.out_path, "Output JSON-lines path")->required();

  MatchArgs match_args;
  auto* match_cmd = app.add_subcommand("match", "Match default boxes against annotations");
  match_cmd->add_option("--config", match_args.config_path)->required();
  match_cmd->add_option("--annotations", match_args.annotations_path)->required();
  match_cmd->add_option("--threshold", match_args.threshold, "Overlap threshold");
  match_cmd->add_option("--out", match_args.out_path, "Optional per-box targets JSONL");

  LossArgs loss_args;
  auto* loss_cmd = app.add_subcommand("loss", "Evaluate the detection objective on a dump");
  loss_cmd->add_option("--config", loss_args.config_path)->required();
  loss_cmd->add_option("--dump", loss_args.dump_path, "Predictions (scores + offsets)")->required();
  loss_cmd->add_option("--annotations", loss_args.annotations_path)->required();
  loss_cmd->add_option("--threshold", loss_args.threshold, "Overlap threshold");
  loss_cmd->add_option("--alpha", loss_args.alpha, "Localization weight");

  ClusterArgs cluster_args;
  auto* cluster_cmd = app.add_subcommand("cluster", "Cluster a dense similarity matrix (CSV)");
  cluster_cmd->add_option("--input", cluster_args.input_path, "CSV matrix")->required();
  cluster_cmd->add_option("--config", cluster_args.config_path);
  cluster_cmd->add_option("--preference", cluster_args.preference,
                          "Override the diagonal: \"median\" or a number");
  double damping_value = 0.0;
  auto* damping_option = cluster_cmd->add_option("--damping", damping_value);
  int max_iter_value = 0;
  auto* max_iter_option = cluster_cmd->add_option("--max-iter", max_iter_value);
  int window_value = 0;
  auto* window_option = cluster_cmd->add_option("--window", window_value);

  SuppressArgs suppress_args;
  auto* suppress_cmd = app.add_subcommand("suppress", "Select final detections from a dump");
  suppress_cmd->add_option("--method", suppress_args.method, "nms or apc")->required();
  suppress_cmd->add_option("--dump", suppress_args.dump_path)->required();
  suppress_cmd->add_option("--images-dir", suppress_args.images_dir,
                           "Scene images (required for apc with appearance weight > 0)");
  suppress_cmd->add_option("--config", suppress_args.config_path)->required();
  suppress_cmd->add_option("--out", suppress_args.out_path)->required();
  suppress_cmd->add_option("--jobs", suppress_args.jobs,
                           "Worker threads (0 = available parallelism)");

  EvaluateArgs evaluate_args;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Per-class AP and mAP");
  evaluate_cmd->add_option("--detections", evaluate_args.detections_path)->required();
  evaluate_cmd->add_option("--annotations", evaluate_args.annotations_path)->required();
  evaluate_cmd->add_option("--config", evaluate_args.config_path);
  evaluate_cmd->add_option("--out", evaluate_args.out_path, "Also save the report JSON");

  CompareArgs compare_args;
  auto* compare_cmd = app.add_subcommand("compare", "Compare two evaluation reports");
  compare_cmd->add_option("--a", compare_args.a_path)->required();
  compare_cmd->add_option("--b", compare_args.b_path)->required();

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic scenes");
  synth_cmd->add_option("--out-dir", synth_args.out_dir)->required();
  synth_cmd->add_option("--seed", synth_args.seed);
  synth_cmd->add_option("--scenes", synth_args.scenes);
  synth_cmd->add_option("--pairs", synth_args.pairs, "Contested pairs per scene");
  synth_cmd->add_option("--extras", synth_args.extras, "Isolated objects per scene");
  synth_cmd->add_option("--image-size", synth_args.image_size);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    const int code = app.exit(error);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) return run_gen_anchors(gen_args);
    if (*match_cmd) return run_match(match_args, pretty);
    if (*loss_cmd) return run_loss(loss_args);
    if (*cluster_cmd) {
      if (*damping_option) cluster_args.damping = damping_value;
      if (*max_iter_option) cluster_args.max_iter = max_iter_value;
      if (*window_option) cluster_args.window = window_value;
      return run_cluster(cluster_args);
    }
    if (*suppress_cmd) return run_suppress(suppress_args);
    if (*evaluate_cmd) return run_evaluate(evaluate_args, pretty);
    if (*compare_cmd) return run_compare(compare_args, pretty);
    if (*synth_cmd) return run_synth(synth_args);
  } catch (const ValidationError& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  } catch (const std::exception& error) {
    std::cerr << "runtime error: " << error.what() << "\n";
    return 2;
  }
  return 1;
}
