#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "apcdet/anchors.hpp"
#include "apcdet/eval.hpp"
#include "apcdet/features.hpp"
#include "apcdet/geometry.hpp"
#include "apcdet/suppression.hpp"

namespace apcdet {
namespace io {

/// Ordered class names; index 0 is the background.
struct ClassVocabulary {
  std::vector<std::string> names;

  int index_of(const std::string& name) const;  // -1 when unknown
  int class_count() const { return static_cast<int>(names.size()); }
  bool operator==(const ClassVocabulary& other) const = default;
};

/// Detection dump: header line {"classes": [...]} followed by one JSON
/// object per row: {"image_id", "scores", "box"}. Rows group by image in
/// file order.
struct DetectionDump {
  ClassVocabulary classes;
  std::vector<DetectionSet> images;
};

DetectionDump load_dump(const std::string& path);
void save_dump(const std::string& path, const DetectionDump& dump);

/// Annotations: same header, then {"image_id", "label", "box"} lines.
struct AnnotationItem {
  std::string image_id;
  std::string label;
  Box box;
};

struct AnnotationFile {
  ClassVocabulary classes;
  std::vector<AnnotationItem> items;
};

AnnotationFile load_annotations(const std::string& path);
void save_annotations(const std::string& path, const AnnotationFile& annotations);

/// Final detections: same header, then
/// {"image_id", "class", "confidence", "box", "source_row"} lines.
struct FinalDetectionRecord {
  std::string image_id;
  std::string class_name;
  double confidence = 0.0;
  Box box;
  std::size_t source_row = 0;
};

struct FinalDetectionFile {
  ClassVocabulary classes;
  std::vector<FinalDetectionRecord> records;
};

FinalDetectionFile load_detections(const std::string& path);
void save_detections(const std::string& path, const FinalDetectionFile& detections);

/// Binary PPM (P6, maxval 255) or PNG (8-bit gray/RGB); intensities are
/// scaled to [0, 1] by 1/255. Unsupported formats raise ValidationError
/// naming the magic bytes.
ImageRaster load_image(const std::string& path);
void save_ppm(const std::string& path, const ImageRaster& raster);

/// One JSON document with optional sections "anchors", "hog", "apc",
/// "suppression" and "eval", each mirroring the corresponding config struct
/// field for field. Unknown sections or keys are rejected.
struct ToolkitConfig {
  AnchorConfig anchors;
  SuppressionConfig suppression;  // embeds the hog and apc sections
  EvalConfig eval;
};

ToolkitConfig load_config(const std::string& path);
ToolkitConfig parse_config(const std::string& text);

/// Dense similarity matrix from CSV: q lines of q comma-separated reals,
/// diagonal carrying the preferences.
Matrix load_similarity_csv(const std::string& path);

/// Evaluation reports as JSON documents (stable key order, round-trip safe).
std::string serialize_report(const EvalReport& report);
EvalReport parse_report(const std::string& text);
void save_report(const std::string& path, const EvalReport& report);
EvalReport load_report(const std::string& path);
std::string serialize_comparison(const ComparisonReport& comparison);

}  // namespace io
}  // namespace apcdet
