#include "apcdet/features.hpp"

#include <algorithm>
#include <cmath>

#include "apcdet/errors.hpp"

namespace apcdet {

namespace {

double luma(const ImageRaster& image, int x, int y) {
  if (image.channels == 1) return image.at(x, y);
  return 0.299 * image.at(x, y, 0) + 0.587 * image.at(x, y, 1) +
         0.114 * image.at(x, y, 2);
}

// Bilinear sample of the grayscale image at real coordinates, pixel centers
// at integers, borders replicated.
double sample(const ImageRaster& image, double x, double y) {
  const auto clamp_x = [&](int v) { return std::clamp(v, 0, image.width - 1); };
  const auto clamp_y = [&](int v) { return std::clamp(v, 0, image.height - 1); };
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  const double v00 = luma(image, clamp_x(x0), clamp_y(y0));
  const double v10 = luma(image, clamp_x(x0 + 1), clamp_y(y0));
  const double v01 = luma(image, clamp_x(x0), clamp_y(y0 + 1));
  const double v11 = luma(image, clamp_x(x0 + 1), clamp_y(y0 + 1));
  return v00 * (1 - fx) * (1 - fy) + v10 * fx * (1 - fy) +
         v01 * (1 - fx) * fy + v11 * fx * fy;
}

}  // namespace

ImageRaster make_raster(int width, int height, int channels, double fill) {
  if (width < 1 || height < 1 || (channels != 1 && channels != 3)) {
    throw ValidationError("make_raster: invalid dimensions");
  }
  ImageRaster raster;
  raster.width = width;
  raster.height = height;
  raster.channels = channels;
  raster.data.assign(
      static_cast<std::size_t>(width) * height * channels, fill);
  return raster;
}

std::size_t descriptor_length(const HogConfig& config) {
  const int cells = config.patch_size / config.cell_size;
  const int blocks = cells - config.block_cells + 1;
  return static_cast<std::size_t>(blocks) * blocks * config.block_cells *
         config.block_cells * config.bins;
}

ImageRaster extract_patch(const ImageRaster& image, const Box& box, int patch_size) {
  if (patch_size < 1) throw ValidationError("extract_patch: invalid patch size");
  const CornerBox corners = to_corners(box);
  const double x0 = std::max(corners.xmin * image.width, 0.0);
  const double x1 = std::min(corners.xmax * image.width, static_cast<double>(image.width));
  const double y0 = std::max(corners.ymin * image.height, 0.0);
  const double y1 = std::min(corners.ymax * image.height, static_cast<double>(image.height));
  if (!(x1 > x0) || !(y1 > y0)) {
    throw ValidationError("empty patch: box does not intersect the image");
  }
  ImageRaster patch = make_raster(patch_size, patch_size, 1);
  for (int v = 0; v < patch_size; ++v) {
    const double sy = y0 + (v + 0.5) * (y1 - y0) / patch_size - 0.5;
    for (int u = 0; u < patch_size; ++u) {
      const double sx = x0 + (u + 0.5) * (x1 - x0) / patch_size - 0.5;
      patch.at(u, v) = sample(image, sx, sy);
    }
  }
  return patch;
}

HogDescriptor hog(const ImageRaster& patch, const HogConfig& config) {
  if (patch.channels != 1) throw ValidationError("hog: patch must be single channel");
  if (patch.width != config.patch_size || patch.height != config.patch_size) {
    throw ValidationError("hog: patch does not match configured size");
  }
  if (config.patch_size % config.cell_size != 0) {
    throw ValidationError("hog: patch size must be divisible by cell size");
  }

  const int size = config.patch_size;
  const int cells = size / config.cell_size;
  const int bins = config.bins;
  const double bin_width = 180.0 / bins;

  // Orientation histograms per cell, bin centers at b * bin_width.
  std::vector<double> histograms(static_cast<std::size_t>(cells) * cells * bins, 0.0);
  const auto clamp = [&](int v) { return std::clamp(v, 0, size - 1); };
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double gx = patch.at(clamp(x + 1), y) - patch.at(clamp(x - 1), y);
      const double gy = patch.at(x, clamp(y + 1)) - patch.at(x, clamp(y - 1));
      const double magnitude = std::sqrt(gx * gx + gy * gy);
      if (magnitude == 0.0) continue;
      double angle = std::atan2(gy, gx) * 180.0 / M_PI;  // (-180, 180]
      if (angle < 0.0) angle += 180.0;                   // unsigned orientation
      if (angle >= 180.0) angle -= 180.0;
      const double position = angle / bin_width;
      const int low = static_cast<int>(std::floor(position));
      const double fraction = position - low;
      const int cell = (y / config.cell_size) * cells + (x / config.cell_size);
      histograms[static_cast<std::size_t>(cell) * bins + low % bins] +=
          magnitude * (1.0 - fraction);
      histograms[static_cast<std::size_t>(cell) * bins + (low + 1) % bins] +=
          magnitude * fraction;
    }
  }

  const int block_span = config.block_cells;
  const int blocks = cells - block_span + 1;
  HogDescriptor descriptor;
  descriptor.values.reserve(descriptor_length(config));
  std::vector<double> block(static_cast<std::size_t>(block_span) * block_span * bins);
  for (int by = 0; by < blocks; ++by) {
    for (int bx = 0; bx < blocks; ++bx) {
      std::size_t k = 0;
      for (int cy = 0; cy < block_span; ++cy) {
        for (int cx = 0; cx < block_span; ++cx) {
          const int cell = (by + cy) * cells + (bx + cx);
          for (int b = 0; b < bins; ++b) {
            block[k++] = histograms[static_cast<std::size_t>(cell) * bins + b];
          }
        }
      }
      // L2 norm, clip, renormalize.
      double norm_sq = 0.0;
      for (double v : block) norm_sq += v * v;
      double norm = std::sqrt(norm_sq + config.epsilon * config.epsilon);
      for (double& v : block) v = std::min(v / norm, config.clip);
      norm_sq = 0.0;
      for (double v : block) norm_sq += v * v;
      norm = std::sqrt(norm_sq + config.epsilon * config.epsilon);
      for (double& v : block) descriptor.values.push_back(v / norm);
    }
  }
  return descriptor;
}

double appearance_similarity(const HogDescriptor& a, const HogDescriptor& b) {
  if (a.values.size() != b.values.size()) {
    throw ValidationError("appearance_similarity: descriptor length mismatch");
  }
  double distance_sq = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double diff = a.values[i] - b.values[i];
    distance_sq += diff * diff;
  }
  return -distance_sq;
}

}  // namespace apcdet
