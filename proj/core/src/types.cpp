#include "gmrw/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gmrw/errors.hpp"

namespace gmrw {

double sample_bilinear(const Image& img, double x, double y, int c) {
  const double cx = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
  const double cy = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
  const int x0 = std::min(static_cast<int>(std::floor(cx)), img.width - 1);
  const int y0 = std::min(static_cast<int>(std::floor(cy)), img.height - 1);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = cx - x0;
  const double fy = cy - y0;
  const double top = img.at(y0, x0, c) * (1.0 - fx) + img.at(y0, x1, c) * fx;
  const double bot = img.at(y1, x0, c) * (1.0 - fx) + img.at(y1, x1, c) * fx;
  return top * (1.0 - fy) + bot * fy;
}

Image resize_bilinear(const Image& img, int out_height, int out_width) {
  if (out_height <= 0 || out_width <= 0) {
    throw DimensionError("resize_bilinear: non-positive output size");
  }
  if (out_height == img.height && out_width == img.width) return img;
  Image out(out_height, out_width, img.channels);
  const double sy = static_cast<double>(img.height) / out_height;
  const double sx = static_cast<double>(img.width) / out_width;
  for (int oy = 0; oy < out_height; ++oy) {
    const double iy = (oy + 0.5) * sy - 0.5;
    for (int ox = 0; ox < out_width; ++ox) {
      const double ix = (ox + 0.5) * sx - 0.5;
      for (int c = 0; c < img.channels; ++c) {
        out.at(oy, ox, c) = sample_bilinear(img, ix, iy, c);
      }
    }
  }
  return out;
}

Image downsample_block_mean(const Image& img, int block) {
  if (block <= 0 || img.height % block != 0 || img.width % block != 0) {
    throw DimensionError("downsample_block_mean: size not divisible by block");
  }
  if (block == 1) return img;
  Image out(img.height / block, img.width / block, img.channels);
  const double inv = 1.0 / (block * block);
  for (int oy = 0; oy < out.height; ++oy) {
    for (int ox = 0; ox < out.width; ++ox) {
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int dy = 0; dy < block; ++dy) {
          for (int dx = 0; dx < block; ++dx) {
            acc += img.at(oy * block + dy, ox * block + dx, c);
          }
        }
        out.at(oy, ox, c) = acc * inv;
      }
    }
  }
  return out;
}

CoordinateGrid grid_coordinates(int height, int width, int effective_stride) {
  if (effective_stride <= 0) {
    throw DimensionError("grid_coordinates: stride must be positive");
  }
  if (height % effective_stride != 0 || width % effective_stride != 0) {
    throw DimensionError("grid_coordinates: " + std::to_string(height) + "x" +
                         std::to_string(width) + " not divisible by stride " +
                         std::to_string(effective_stride));
  }
  CoordinateGrid grid;
  grid.rows = height / effective_stride;
  grid.cols = width / effective_stride;
  grid.stride = effective_stride;
  grid.coords.resize(grid.cells(), 2);
  const double off = (effective_stride - 1) / 2.0;
  for (int r = 0; r < grid.rows; ++r) {
    for (int q = 0; q < grid.cols; ++q) {
      const int i = grid.index(r, q);
      grid.coords(i, 0) = q * grid.stride + off;
      grid.coords(i, 1) = r * grid.stride + off;
    }
  }
  return grid;
}

const VideoClip& validate_clip(const VideoClip& clip, int effective_stride) {
  if (clip.size() < 2) {
    throw DimensionError("validate_clip: clip needs at least 2 frames");
  }
  const Image& first = clip.frames[0];
  if (first.channels != 3) {
    throw DimensionError("validate_clip: frames must have 3 channels");
  }
  if (first.height % effective_stride != 0 ||
      first.width % effective_stride != 0) {
    throw DimensionError(
        "validate_clip: frame size " + std::to_string(first.height) + "x" +
        std::to_string(first.width) + " not divisible by stride " +
        std::to_string(effective_stride));
  }
  for (const Image& f : clip.frames) {
    if (!f.same_shape(first)) {
      throw DimensionError("validate_clip: frames differ in shape");
    }
    for (double v : f.pixels) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw RangeError("validate_clip: pixel value " + std::to_string(v) +
                         " outside [0,1]");
      }
    }
  }
  return clip;
}

}  // namespace gmrw
