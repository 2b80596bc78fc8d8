#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "apcdet/features.hpp"
#include "apcdet/io.hpp"
#include "apcdet/suppression.hpp"

namespace apcdet {
namespace synth {

/// Controls for generated scenes. Every scene carries `contested_pairs`
/// adjacent large/small same-class object pairs whose two detection boxes
/// overlap inside [pair_iou_low, pair_iou_high] while still matching their
/// own objects, plus `extra_objects` isolated objects of a second class.
struct SynthSpec {
  int scenes = 1;
  int image_size = 256;
  int contested_pairs = 1;
  int extra_objects = 1;
  double pair_iou_low = 0.55;
  double pair_iou_high = 0.75;
  double min_object_extent = 0.10;
  double max_object_extent = 0.34;
  std::uint64_t seed = 0;
};

struct SyntheticScene {
  std::string image_id;
  ImageRaster image;
  std::vector<io::AnnotationItem> annotations;
  DetectionSet detections;
};

/// Class names shared by all generated fixtures.
io::ClassVocabulary vocabulary();

/// Deterministic scene for (spec.seed, scene_index); identical inputs
/// reproduce identical pixels, annotations and detection rows.
SyntheticScene make_scene(const SynthSpec& spec, int scene_index);

/// All scenes of the spec.
std::vector<SyntheticScene> make_scenes(const SynthSpec& spec);

}  // namespace synth
}  // namespace apcdet
