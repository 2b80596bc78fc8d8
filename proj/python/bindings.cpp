#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "apcdet/anchors.hpp"
#include "apcdet/clustering.hpp"
#include "apcdet/errors.hpp"
#include "apcdet/eval.hpp"
#include "apcdet/features.hpp"
#include "apcdet/geometry.hpp"
#include "apcdet/losses.hpp"
#include "apcdet/matching.hpp"
#include "apcdet/suppression.hpp"

namespace py = pybind11;
using namespace apcdet;

namespace {

Matrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols) {
      throw ValidationError("matrix rows must have equal length");
    }
    for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

SuppressionConfig config_from_kwargs(double appearance_weight, double confidence_floor,
                                     bool per_class, const std::string& preference_mode,
                                     const std::string& similarity_convention,
                                     double nms_iou_threshold) {
  SuppressionConfig config;
  config.appearance_weight = appearance_weight;
  config.confidence_floor = confidence_floor;
  config.per_class = per_class;
  config.nms_iou_threshold = nms_iou_threshold;
  if (preference_mode == "raw") {
    config.preference_mode = PreferenceMode::raw;
  } else if (preference_mode == "scaled") {
    config.preference_mode = PreferenceMode::scaled;
  } else {
    throw ValidationError("preference_mode must be 'raw' or 'scaled'");
  }
  if (similarity_convention == "literal") {
    config.similarity_convention = SimilarityConvention::literal;
  } else if (similarity_convention == "negated") {
    config.similarity_convention = SimilarityConvention::negated;
  } else {
    throw ValidationError("similarity_convention must be 'literal' or 'negated'");
  }
  return config;
}

}  // namespace

PYBIND11_MODULE(_apcdet, m) {
  m.doc() = "Detection post-processing toolkit: default boxes, matching, losses, "
            "greedy and clustering-based suppression, VOC evaluation";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  py::class_<Box>(m, "Box")
      .def(py::init<>())
      .def(py::init<double, double, double, double>(), py::arg("cx"), py::arg("cy"),
           py::arg("w"), py::arg("h"))
      .def_readwrite("cx", &Box::cx)
      .def_readwrite("cy", &Box::cy)
      .def_readwrite("w", &Box::w)
      .def_readwrite("h", &Box::h)
      .def("__repr__", [](const Box& b) {
        return "Box(cx=" + std::to_string(b.cx) + ", cy=" + std::to_string(b.cy) +
               ", w=" + std::to_string(b.w) + ", h=" + std::to_string(b.h) + ")";
      });

  m.def("iou", &iou, py::arg("a"), py::arg("b"));
  m.def("jaccard_distance", &jaccard_distance, py::arg("a"), py::arg("b"));
  m.def("area", &area, py::arg("box"));
  m.def("encode", &encode, py::arg("gt"), py::arg("default_box"));
  m.def(
      "decode",
      [](const Box& offsets, const Box& default_box) {
        const Decoded d = decode(offsets, default_box);
        return py::make_tuple(d.box, d.clamped);
      },
      py::arg("offsets"), py::arg("default_box"),
      "Returns (box, clamped_flag)");

  m.def(
      "generate_anchors",
      [](const std::vector<int>& feature_maps, double scale_min, double scale_max,
         const std::vector<double>& aspect_ratios,
         std::optional<double> scale_after_last) {
        AnchorConfig config;
        config.feature_maps = feature_maps;
        config.scale_min = scale_min;
        config.scale_max = scale_max;
        config.aspect_ratios = aspect_ratios;
        config.scale_after_last = scale_after_last;
        return generate_anchors(config).boxes;
      },
      py::arg("feature_maps"), py::arg("scale_min") = 0.2, py::arg("scale_max") = 0.9,
      py::arg("aspect_ratios") = std::vector<double>{2.0, 3.0, 0.5, 1.0 / 3.0},
      py::arg("scale_after_last") = std::nullopt);

  m.def(
      "match",
      [](const std::vector<Box>& defaults,
         const std::vector<std::pair<int, Box>>& objects, int class_count,
         double overlap_threshold) {
        DefaultBoxSet set;
        set.boxes = defaults;
        set.per_map_ranges = {{0, defaults.size()}};
        std::vector<GroundTruthObject> ground_truth;
        ground_truth.reserve(objects.size());
        for (const auto& [label, box] : objects) ground_truth.push_back({label, box});
        const MatchResult result = match(set, ground_truth, class_count, overlap_threshold);
        py::dict out;
        out["positive"] = result.positive;
        out["negative"] = result.negative;
        out["assigned_gt"] = result.assigned_gt;
        return out;
      },
      py::arg("defaults"), py::arg("objects"), py::arg("class_count"),
      py::arg("overlap_threshold") = 0.5,
      "objects: list of (class_index, Box) with class_index >= 1");

  m.def("softmax", &softmax, py::arg("logits"));
  m.def("smooth_l1", &smooth_l1, py::arg("x"));

  py::class_<ImageRaster>(m, "ImageRaster")
      .def(py::init([](int width, int height, int channels, double fill) {
             return make_raster(width, height, channels, fill);
           }),
           py::arg("width"), py::arg("height"), py::arg("channels") = 1,
           py::arg("fill") = 0.0)
      .def_readonly("width", &ImageRaster::width)
      .def_readonly("height", &ImageRaster::height)
      .def_readonly("channels", &ImageRaster::channels)
      .def_readwrite("data", &ImageRaster::data)
      .def("set", [](ImageRaster& r, int x, int y, int c, double v) { r.at(x, y, c) = v; },
           py::arg("x"), py::arg("y"), py::arg("c"), py::arg("value"))
      .def("get", [](const ImageRaster& r, int x, int y, int c) { return r.at(x, y, c); },
           py::arg("x"), py::arg("y"), py::arg("c") = 0);

  m.def(
      "extract_patch",
      [](const ImageRaster& image, const Box& box, int patch_size) {
        return extract_patch(image, box, patch_size);
      },
      py::arg("image"), py::arg("box"), py::arg("patch_size") = 64);

  m.def(
      "hog",
      [](const ImageRaster& patch) { return hog(patch).values; },
      py::arg("patch"), "HOG descriptor of a single-channel patch (default config)");

  m.def(
      "appearance_similarity",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        return appearance_similarity({a}, {b});
      },
      py::arg("descriptor_a"), py::arg("descriptor_b"));

  m.def(
      "apc_run",
      [](const std::vector<std::vector<double>>& similarity, double damping, int max_iter,
         int convergence_window) {
        apc::ApcParams params;
        params.damping = damping;
        params.max_iter = max_iter;
        params.convergence_window = convergence_window;
        const apc::ClusterResult result = apc::run(matrix_from_rows(similarity), params);
        py::dict out;
        out["exemplars"] = result.exemplars;
        out["assignments"] = result.assignments;
        out["iterations"] = result.iterations;
        out["converged"] = result.converged;
        return out;
      },
      py::arg("similarity"), py::arg("damping") = 0.5, py::arg("max_iter") = 200,
      py::arg("convergence_window") = 15,
      "Affinity propagation over a dense similarity matrix whose diagonal "
      "holds the preferences");

  py::class_<Detection>(m, "Detection")
      .def_readonly("class_index", &Detection::class_index)
      .def_readonly("confidence", &Detection::confidence)
      .def_readonly("box", &Detection::box)
      .def_readonly("source_row", &Detection::source_row);

  m.def(
      "nms",
      [](const std::vector<std::pair<std::vector<double>, Box>>& rows, int class_index,
         double iou_threshold, double confidence_floor) {
        DetectionSet detections;
        for (const auto& [scores, box] : rows) detections.rows.push_back({scores, box});
        return nms(detections, class_index, iou_threshold, confidence_floor);
      },
      py::arg("rows"), py::arg("class_index"), py::arg("iou_threshold") = 0.5,
      py::arg("confidence_floor") = 0.01,
      "rows: list of (scores, Box); greedy per-class suppression");

  m.def(
      "apc_suppress",
      [](const std::vector<std::pair<std::vector<double>, Box>>& rows,
         std::optional<ImageRaster> image, double appearance_weight,
         double confidence_floor, bool per_class, const std::string& preference_mode,
         const std::string& similarity_convention) {
        DetectionSet detections;
        for (const auto& [scores, box] : rows) detections.rows.push_back({scores, box});
        const SuppressionConfig config =
            config_from_kwargs(appearance_weight, confidence_floor, per_class,
                               preference_mode, similarity_convention, 0.5);
        return apc_suppress(detections, image ? &*image : nullptr, config);
      },
      py::arg("rows"), py::arg("image") = std::nullopt,
      py::arg("appearance_weight") = 1.0, py::arg("confidence_floor") = 0.01,
      py::arg("per_class") = true, py::arg("preference_mode") = "scaled",
      py::arg("similarity_convention") = "negated");

  m.def(
      "average_precision",
      [](const std::vector<std::tuple<std::string, double, Box>>& detections,
         const std::vector<std::pair<std::string, Box>>& ground_truth,
         double iou_threshold, const std::string& mode) {
        std::vector<RankedDetection> ranked;
        ranked.reserve(detections.size());
        for (std::size_t i = 0; i < detections.size(); ++i) {
          const auto& [image_id, confidence, box] = detections[i];
          ranked.push_back({image_id, confidence, box, i});
        }
        std::vector<GroundTruthBox> gts;
        gts.reserve(ground_truth.size());
        for (const auto& [image_id, box] : ground_truth) gts.push_back({image_id, box});
        EvalConfig config;
        config.iou_threshold = iou_threshold;
        if (mode == "all_points") {
          config.ap_mode = ApMode::all_points;
        } else if (mode == "eleven_point") {
          config.ap_mode = ApMode::eleven_point;
        } else {
          throw ValidationError("mode must be 'all_points' or 'eleven_point'");
        }
        return average_precision(ranked, gts, config);
      },
      py::arg("detections"), py::arg("ground_truth"), py::arg("iou_threshold") = 0.5,
      py::arg("mode") = "all_points",
      "detections: list of (image_id, confidence, Box); ground_truth: list of "
      "(image_id, Box)");
}
