#include <doctest.h>

#include <algorithm>

#include "apcdet/geometry.hpp"
#include "apcdet/suppression.hpp"
#include "apcdet/synth.hpp"

using namespace apcdet;

TEST_CASE("the same seed reproduces a scene bit for bit") {
  synth::SynthSpec spec;
  spec.seed = 99;
  spec.contested_pairs = 1;
  spec.extra_objects = 2;
  const synth::SyntheticScene first = synth::make_scene(spec, 0);
  const synth::SyntheticScene second = synth::make_scene(spec, 0);
  CHECK(first.image.data == second.image.data);
  REQUIRE(first.annotations.size() == second.annotations.size());
  for (std::size_t i = 0; i < first.annotations.size(); ++i) {
    CHECK(first.annotations[i].box == second.annotations[i].box);
    CHECK(first.annotations[i].label == second.annotations[i].label);
  }
  REQUIRE(first.detections.rows.size() == second.detections.rows.size());
  for (std::size_t i = 0; i < first.detections.rows.size(); ++i) {
    CHECK(first.detections.rows[i].scores == second.detections.rows[i].scores);
    CHECK(first.detections.rows[i].box == second.detections.rows[i].box);
  }

  // Different seeds move things around.
  spec.seed = 100;
  CHECK(synth::make_scene(spec, 0).image.data != first.image.data);
}

TEST_CASE("a scene with three isolated objects has three annotations") {
  synth::SynthSpec spec;
  spec.contested_pairs = 0;
  spec.extra_objects = 3;
  const synth::SyntheticScene scene = synth::make_scene(spec, 0);
  CHECK(scene.annotations.size() == 3);
  CHECK(scene.detections.rows.size() == 3);
  for (const auto& item : scene.annotations) CHECK(item.label == "crate");
  // Isolated objects do not overlap each other.
  for (std::size_t i = 0; i < scene.annotations.size(); ++i) {
    for (std::size_t j = i + 1; j < scene.annotations.size(); ++j) {
      CHECK(iou(scene.annotations[i].box, scene.annotations[j].box) == 0.0);
    }
  }
}

TEST_CASE("contested pairs satisfy the overlap plan across seeds") {
  for (std::uint64_t seed : {1ull, 7ull, 1234ull, 987654321ull}) {
    synth::SynthSpec spec;
    spec.seed = seed;
    spec.contested_pairs = 1;
    spec.extra_objects = 1;
    for (int index = 0; index < 5; ++index) {
      const synth::SyntheticScene scene = synth::make_scene(spec, index);
      REQUIRE(scene.annotations.size() == 3);
      REQUIRE(scene.detections.rows.size() == 3);
      const Box large_object = scene.annotations[0].box;
      const Box small_object = scene.annotations[1].box;
      const Box large_detection = scene.detections.rows[0].box;
      const Box small_detection = scene.detections.rows[1].box;

      const double pair_overlap = iou(large_detection, small_detection);
      CHECK(pair_overlap > spec.pair_iou_low);
      CHECK(pair_overlap < spec.pair_iou_high);
      CHECK(iou(large_detection, large_object) >= 0.5);
      CHECK(iou(small_detection, small_object) >= 0.5);
      CHECK(area(large_object) > area(small_object));

      // Detection confidences: the large object's detection ranks higher.
      const double large_conf =
          *std::max_element(scene.detections.rows[0].scores.begin(),
                            scene.detections.rows[0].scores.end());
      const double small_conf =
          *std::max_element(scene.detections.rows[1].scores.begin(),
                            scene.detections.rows[1].scores.end());
      CHECK(large_conf > small_conf);
      CHECK(small_conf > 0.5);
    }
  }
}

TEST_CASE("greedy suppression loses the small object and clustering keeps it") {
  synth::SynthSpec spec;
  spec.seed = 4242;
  spec.contested_pairs = 1;
  spec.extra_objects = 0;
  const synth::SyntheticScene scene = synth::make_scene(spec, 0);

  SuppressionConfig config;
  config.appearance_weight = 1.0;
  const FinalDetections greedy = nms_suppress(scene.detections, config);
  CHECK(greedy.size() == 1);

  const FinalDetections clustered =
      apc_suppress(scene.detections, &scene.image, config);
  CHECK(clustered.size() == 2);
}
