#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace gmrw {

// Coordinate convention used throughout: x grows rightward, y grows downward,
// and the origin sits at the center of the top-left pixel. Pixel (ix, iy)
// therefore has center (x, y) = (ix, iy).

// A dense H x W x C image with values in [0, 1], interleaved row-major.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int h, int w, int c)
      : height(h), width(w), channels(c),
        pixels(static_cast<std::size_t>(h) * w * c, 0.0) {}

  double& at(int y, int x, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool same_shape(const Image& other) const {
    return height == other.height && width == other.width &&
           channels == other.channels;
  }
};

// Bilinear sample with clamped borders; (x, y) in pixel-center coordinates.
double sample_bilinear(const Image& img, double x, double y, int c);

// Bilinear resize; output pixel centers map to input coordinates via
// (o + 0.5) * in/out - 0.5, so that integer scale factors keep the grids of
// cell centers aligned with the stride convention below.
Image resize_bilinear(const Image& img, int out_height, int out_width);

// Mean over non-overlapping block x block windows; requires divisibility.
Image downsample_block_mean(const Image& img, int block);

struct VideoClip {
  std::vector<Image> frames;
  std::optional<double> frame_rate;  // metadata only

  int size() const { return static_cast<int>(frames.size()); }
  int height() const { return frames.empty() ? 0 : frames[0].height; }
  int width() const { return frames.empty() ? 0 : frames[0].width; }
};

struct QueryPoint {
  int frame = 0;
  double x = 0.0;
  double y = 0.0;
};

// Per-frame positions for one query plus the visibility flags. A position is
// reported for every frame; visibility is the only occlusion signal.
struct Track {
  std::vector<std::array<double, 2>> positions;
  std::vector<std::uint8_t> visibility;

  int size() const { return static_cast<int>(positions.size()); }
};

// Pixel-center coordinates of the cells of a feature grid, row-major
// (x varies fastest). Cell (r, q) has center
// (q * stride + (stride - 1) / 2, r * stride + (stride - 1) / 2), so that a
// stride-1 grid coincides with the pixels exactly.
struct CoordinateGrid {
  int rows = 0;
  int cols = 0;
  double stride = 0.0;
  Eigen::Matrix<double, Eigen::Dynamic, 2> coords;  // n x 2, columns (x, y)

  int cells() const { return rows * cols; }
  int index(int r, int q) const { return r * cols + q; }
};

// Builds the grid for a height x width frame at the given effective stride.
// Throws DimensionError when height or width is not divisible by the stride.
CoordinateGrid grid_coordinates(int height, int width, int effective_stride);

// Checks the clip invariants: at least two frames, three channels, all frames
// the same shape, H and W divisible by the effective stride, and values in
// [0, 1]. Returns the clip reference unchanged.
const VideoClip& validate_clip(const VideoClip& clip, int effective_stride);

}  // namespace gmrw
