#include "gmrw/augment.hpp"

#include <cmath>
#include <string>

#include "gmrw/errors.hpp"

namespace gmrw {

namespace {

// Sub-cell offsets this close to an integer snap to it, so that analytically
// exact warps (equal transforms, whole-cell shifts) produce exact labels.
constexpr double kSnapTolerance = 1e-9;

double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < kSnapTolerance ? r : v;
}

}  // namespace

Eigen::Vector2d AffineAugmentation::apply(const Eigen::Vector2d& out_pt) const {
  return linear * out_pt + offset;
}

Eigen::Vector2d AffineAugmentation::invert(const Eigen::Vector2d& in_pt) const {
  const double det = linear.determinant();
  if (det == 0.0) {
    throw RangeError("AffineAugmentation: non-invertible transform");
  }
  return linear.inverse() * (in_pt - offset);
}

void AugmentConfig::validate() const {
  if (!(scale_min > 0.0) || scale_max > 1.0 || scale_min > scale_max) {
    throw ConfigError("augment: scale range must satisfy 0 < min <= max <= 1");
  }
  if (output_height <= 0 || output_width <= 0) {
    throw ConfigError("augment: output size must be positive");
  }
}

AffineAugmentation sample_augmentation(Rng& rng,
                                       std::pair<double, double> scale_range,
                                       std::pair<int, int> source_size,
                                       std::pair<int, int> output_size) {
  const auto [scale_min, scale_max] = scale_range;
  const auto [src_h, src_w] = source_size;
  const auto [out_h, out_w] = output_size;
  if (!(scale_min > 0.0) || scale_max > 1.0 || scale_min > scale_max) {
    throw ConfigError("sample_augmentation: scale range outside (0, 1]");
  }
  if (out_h > src_h || out_w > src_w) {
    throw ConfigError("sample_augmentation: output larger than source");
  }
  const double scale = scale_min == scale_max
                           ? scale_min
                           : rng.uniform(scale_min, scale_max);
  const double crop_w = std::max(1.0, std::round(scale * src_w));
  const double crop_h = std::max(1.0, std::round(scale * src_h));
  if (crop_w > src_w || crop_h > src_h) {
    throw ConfigError("sample_augmentation: crop does not fit source");
  }
  const double x0 = rng.uniform(0.0, src_w - crop_w);
  const double y0 = rng.uniform(0.0, src_h - crop_h);

  AffineAugmentation aug;
  aug.crop_box = {x0, y0, crop_w, crop_h};
  aug.output_height = out_h;
  aug.output_width = out_w;
  const double sx = crop_w / out_w;
  const double sy = crop_h / out_h;
  aug.linear << sx, 0.0, 0.0, sy;
  // Pixel-center mapping: in = x0 + (out + 0.5) * s - 0.5.
  aug.offset << x0 + 0.5 * sx - 0.5, y0 + 0.5 * sy - 0.5;
  return aug;
}

Image apply_augmentation(const Image& frame, const AffineAugmentation& aug) {
  if (aug.linear.determinant() == 0.0) {
    throw RangeError("apply_augmentation: non-invertible transform");
  }
  Image out(aug.output_height, aug.output_width, frame.channels);
  for (int oy = 0; oy < out.height; ++oy) {
    for (int ox = 0; ox < out.width; ++ox) {
      const Eigen::Vector2d src =
          aug.apply(Eigen::Vector2d(static_cast<double>(ox), oy));
      for (int c = 0; c < frame.channels; ++c) {
        out.at(oy, ox, c) = sample_bilinear(frame, src.x(), src.y(), c);
      }
    }
  }
  return out;
}

int WarpedLabel::valid_count() const {
  int n = 0;
  for (auto v : valid) n += v ? 1 : 0;
  return n;
}

double WarpedLabel::valid_fraction() const {
  return valid.empty() ? 0.0
                       : static_cast<double>(valid_count()) / valid.size();
}

WarpedLabel warp_label(const AffineAugmentation& t_f,
                       const AffineAugmentation& t_b,
                       const CoordinateGrid& grid) {
  if (t_f.output_height != t_b.output_height ||
      t_f.output_width != t_b.output_width) {
    throw DimensionError("warp_label: transforms disagree on output size");
  }
  const int n = grid.cells();
  WarpedLabel label;
  label.target = Eigen::MatrixXd::Zero(n, n);
  label.valid.assign(n, 0);
  const double off = (grid.stride - 1) / 2.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d fwd_center(grid.coords(i, 0), grid.coords(i, 1));
    const Eigen::Vector2d source_pt = t_f.apply(fwd_center);
    const Eigen::Vector2d bwd_pt = t_b.invert(source_pt);
    const double gx = snap((bwd_pt.x() - off) / grid.stride);
    const double gy = snap((bwd_pt.y() - off) / grid.stride);
    if (gx < 0.0 || gx > grid.cols - 1 || gy < 0.0 || gy > grid.rows - 1) {
      continue;  // lands outside the backward grid
    }
    label.valid[i] = 1;
    const int x0 = static_cast<int>(std::floor(gx));
    const int y0 = static_cast<int>(std::floor(gy));
    const double fx = gx - x0;
    const double fy = gy - y0;
    const int x1 = std::min(x0 + 1, grid.cols - 1);
    const int y1 = std::min(y0 + 1, grid.rows - 1);
    label.target(i, grid.index(y0, x0)) += (1.0 - fx) * (1.0 - fy);
    if (fx > 0.0) label.target(i, grid.index(y0, x1)) += fx * (1.0 - fy);
    if (fy > 0.0) label.target(i, grid.index(y1, x0)) += (1.0 - fx) * fy;
    if (fx > 0.0 && fy > 0.0) label.target(i, grid.index(y1, x1)) += fx * fy;
  }
  return label;
}

WarpedLabel identity_label(int cells) {
  WarpedLabel label;
  label.target = Eigen::MatrixXd::Identity(cells, cells);
  label.valid.assign(cells, 1);
  return label;
}

PalindromeSample build_palindrome(const VideoClip& clip, int frame_gap,
                                  Rng& rng, const AugmentConfig& config,
                                  int grid_stride) {
  config.validate();
  if (frame_gap < 1 || clip.size() < frame_gap + 1) {
    throw DimensionError("build_palindrome: clip too short for frame gap " +
                         std::to_string(frame_gap));
  }
  const int start = rng.uniform_int(0, clip.size() - 1 - frame_gap);
  const Image& first = clip.frames[start];
  const Image& second = clip.frames[start + frame_gap];
  const std::pair<int, int> source_size{clip.height(), clip.width()};
  const std::pair<int, int> output_size{config.output_height,
                                        config.output_width};
  const std::pair<double, double> scales{config.scale_min, config.scale_max};

  const AffineAugmentation t_f =
      sample_augmentation(rng, scales, source_size, output_size);
  const AffineAugmentation t_b =
      config.label_warping
          ? sample_augmentation(rng, scales, source_size, output_size)
          : t_f;

  PalindromeSample sample;
  sample.frames[0] = apply_augmentation(first, t_f);
  sample.frames[1] = apply_augmentation(second, t_f);
  sample.frames[2] = apply_augmentation(first, t_b);
  const CoordinateGrid grid = grid_coordinates(
      config.output_height, config.output_width, grid_stride);
  sample.label = config.label_warping ? warp_label(t_f, t_b, grid)
                                      : identity_label(grid.cells());
  return sample;
}

}  // namespace gmrw
