#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "gmrw/rng.hpp"
#include "gmrw/types.hpp"

namespace gmrw {

// Resized-crop transform. `linear` and `offset` map output pixel-center
// coordinates to input pixel-center coordinates: in = linear * out + offset.
struct AffineAugmentation {
  Eigen::Matrix2d linear = Eigen::Matrix2d::Identity();
  Eigen::Vector2d offset = Eigen::Vector2d::Zero();
  std::array<double, 4> crop_box = {0, 0, 0, 0};  // x0, y0, w, h (input px)
  int output_height = 0;
  int output_width = 0;

  Eigen::Vector2d apply(const Eigen::Vector2d& out_pt) const;
  Eigen::Vector2d invert(const Eigen::Vector2d& in_pt) const;
};

struct AugmentConfig {
  double scale_min = 0.6;
  double scale_max = 1.0;
  int output_height = 64;
  int output_width = 64;
  bool label_warping = true;

  void validate() const;
};

// Uniform crop scale and position, resized to output_size. scale_range must
// be within (0, 1] and the output must fit the source.
AffineAugmentation sample_augmentation(Rng& rng,
                                       std::pair<double, double> scale_range,
                                       std::pair<int, int> source_size,
                                       std::pair<int, int> output_size);

// Bilinear resample of the crop at output size.
Image apply_augmentation(const Image& frame, const AffineAugmentation& aug);

// Soft supervision target for the warped cycle. Row i distributes the weight
// of forward-grid cell i over the (up to 4) backward-grid cells around its
// warped position; rows whose position lands outside the grid are invalid and
// excluded from the loss.
struct WarpedLabel {
  Eigen::MatrixXd target;            // n x n
  std::vector<std::uint8_t> valid;   // n

  int valid_count() const;
  double valid_fraction() const;
};

WarpedLabel warp_label(const AffineAugmentation& t_f,
                       const AffineAugmentation& t_b,
                       const CoordinateGrid& grid);

WarpedLabel identity_label(int cells);

// Frames [T^f(I_a), T^f(I_b), T^b(I_a)] plus the matching supervision target.
// With label_warping off, a single shared transform is used for all three
// frames and the label is the identity.
struct PalindromeSample {
  std::array<Image, 3> frames;
  WarpedLabel label;
};

PalindromeSample build_palindrome(const VideoClip& clip, int frame_gap,
                                  Rng& rng, const AugmentConfig& config,
                                  int grid_stride);

}  // namespace gmrw
