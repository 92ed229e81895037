#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gmrw/augment.hpp"
#include "gmrw/metrics.hpp"
#include "gmrw/rng.hpp"
#include "gmrw/trackio.hpp"
#include "gmrw/types.hpp"

namespace gmrw {

struct SpriteSceneConfig {
  int canvas_width = 64;
  int canvas_height = 64;
  int num_sprites = 2;
  std::pair<int, int> sprite_size_range = {12, 20};
  std::pair<double, double> velocity_range = {1.0, 2.5};  // px/frame per axis
  enum class Texture { kNoise, kChecker } texture = Texture::kNoise;
  bool allow_overlap = false;
  int num_frames = 8;
  std::uint64_t seed = 0;
  int points_per_sprite = 4;

  void validate() const;
};

// Rendered clip plus exact ground-truth tracks in the shared track-file
// schema. Occlusion flags are true exactly when a tracked texel is covered by
// a nearer sprite or leaves the canvas.
struct DatasetSample {
  VideoClip clip;
  GroundTruthTrackSet gt;
};

// Textured sprites over a static textured background, translating with
// constant velocity and bouncing at the borders. Deterministic given the
// seed.
DatasetSample generate_sprite_clip(const SpriteSceneConfig& config);

// Scripted fixture: a front sprite sweeps across a static rear sprite, so the
// rear texels are occluded for roughly half the frames.
DatasetSample occlusion_crossing_sample(std::uint64_t seed);

// Scripted fixture: a jittering sprite relocates by a large offset at the
// middle frame and keeps jittering afterwards.
DatasetSample teleport_sample(std::uint64_t seed);

// Loads a directory of lexicographically ordered image files as one clip,
// resized to (height, width) and normalized to [0, 1].
VideoClip load_frame_directory(const std::string& path,
                               std::pair<int, int> resize_to);

// Palindrome batch assembly on top of a clip pool. The frame gap is sampled
// uniformly in frame_gap_range, clamped to each clip's length.
std::vector<PalindromeSample> make_training_batch(
    const std::vector<VideoClip>& pool, int batch_size,
    std::pair<int, int> frame_gap_range, Rng& rng, const AugmentConfig& config,
    int grid_stride);

// Persists a sample as frame_00000.png ... plus gt.trk in `dir`.
void save_dataset(const std::string& dir, const DatasetSample& sample);

}  // namespace gmrw
