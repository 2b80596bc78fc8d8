#pragma once

#include <cstddef>
#include <vector>

#include "apcdet/geometry.hpp"

namespace apcdet {

/// Row-major raster with intensities in [0, 1]; 1 (gray) or 3 (RGB) channels.
struct ImageRaster {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<double> data;

  double at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

ImageRaster make_raster(int width, int height, int channels, double fill = 0.0);

/// Histogram-of-oriented-gradients parameters. Defaults: 64x64 patches,
/// 8x8-pixel cells, 2x2-cell blocks at 1-cell stride, 9 unsigned bins over
/// [0, 180), block-wise L2 normalization clipped at 0.2 and renormalized.
struct HogConfig {
  int patch_size = 64;
  int cell_size = 8;
  int block_cells = 2;
  int bins = 9;
  double clip = 0.2;
  double epsilon = 1e-5;
};

struct HogDescriptor {
  std::vector<double> values;
};

/// blocks_x * blocks_y * cells_per_block * bins (1764 for the defaults).
std::size_t descriptor_length(const HogConfig& config);

/// Clips the box to the image, crops, converts to grayscale (luma weights
/// 0.299/0.587/0.114) and bilinearly resamples to patch_size x patch_size.
/// A box entirely outside the image raises ValidationError("empty patch...").
ImageRaster extract_patch(const ImageRaster& image, const Box& box, int patch_size);

/// Dalal-Triggs style descriptor of a single-channel patch: centered
/// [-1, 0, 1] gradients with replicated borders, magnitude-weighted votes
/// split linearly between the two nearest orientation-bin centers, then
/// per-block normalization.
HogDescriptor hog(const ImageRaster& patch, const HogConfig& config = {});

/// Negated squared euclidean distance between descriptors; 0 iff identical.
double appearance_similarity(const HogDescriptor& a, const HogDescriptor& b);

}  // namespace apcdet
