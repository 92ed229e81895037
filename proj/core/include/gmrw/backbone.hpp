#pragma once

#include <array>
#include <vector>

#include "gmrw/ad.hpp"
#include "gmrw/params.hpp"
#include "gmrw/rng.hpp"
#include "gmrw/types.hpp"

namespace gmrw {

struct BackboneConfig {
  int feature_dim = 32;           // d; must be a multiple of 4 for the 2D encoding
  int downsample_factor = 4;      // c; power of two
  int num_conv_blocks = 1;        // residual blocks at full downsampling
  double positional_encoding_scale = 1.0;

  void validate() const;
};

// Flattened feature map plus the geometry needed to place each cell back into
// the original (pre-upsampling) frame.
struct FeatureGrid {
  ad::Var features;       // (grid_rows*grid_cols) x d, row-major by cell
  int grid_rows = 0;
  int grid_cols = 0;
  int source_height = 0;  // original frame size, before stride upsampling
  int source_width = 0;
  int effective_stride = 0;  // original pixels between adjacent cells

  CoordinateGrid grid() const {
    return grid_coordinates(source_height, source_width, effective_stride);
  }
};

struct ConvWeights {
  ad::Var w;  // (9*cin) x cout
  ad::Var b;  // 1 x cout
};

struct BackboneWeights {
  ConvWeights stem;                                // 3 -> d, stride 1
  std::vector<ConvWeights> downs;                  // d -> d, stride 2 each
  std::vector<std::array<ConvWeights, 2>> blocks;  // residual, d -> d
  ad::Var proj_w;                                  // d x d
  ad::Var proj_b;                                  // 1 x d
};

BackboneWeights init_backbone(ParamStore& store, const BackboneConfig& config,
                              Rng& rng);
BackboneWeights bind_backbone(const ParamStore& store,
                              const BackboneConfig& config);

// Bilinear upsampling by downsample_factor / stride so that the conv grid's
// effective spacing in original pixels becomes `stride`. stride = 4 is the
// identity path. Supported strides: 1, 2, 4.
Image upsample_for_stride(const Image& frame, int stride,
                          int downsample_factor = 4);

// Sinusoidal 2D encoding over the grid's pixel-center coordinates in the
// original frame; first half of the channels encode x, second half y.
// Wavelengths are log-spaced in [2, 512] px, so the largest-wavelength pair
// alone is injective over any desk-scale coordinate range.
Eigen::MatrixXd positional_encoding(const CoordinateGrid& grid,
                                    int feature_dim, double scale);

// Runs the CNN on an (already upsampled) frame and adds the positional
// encoding. sampling_stride is the stride the frame was upsampled for and
// fixes the grid geometry in original-frame pixels.
FeatureGrid extract_features(const Image& upsampled_frame,
                             const BackboneConfig& config,
                             const BackboneWeights& weights,
                             int sampling_stride);

}  // namespace gmrw
