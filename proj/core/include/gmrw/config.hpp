#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "gmrw/augment.hpp"
#include "gmrw/backbone.hpp"
#include "gmrw/data.hpp"
#include "gmrw/matcher.hpp"
#include "gmrw/metrics.hpp"
#include "gmrw/objective.hpp"
#include "gmrw/tracker.hpp"

namespace gmrw {

struct OptimizerConfig {
  double learning_rate = 1e-4;
  int steps = 1000;
  int batch_size = 2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int train_stride = 4;

  void validate() const;
};

struct DataConfig {
  std::string source = "sprites";  // "sprites" or "frames"
  std::string frames_dir;
  SpriteSceneConfig sprites;
  int clip_pool = 8;  // number of seeded clips when source == "sprites"
  std::pair<int, int> frame_gap_range = {1, 4};

  void validate() const;
};

struct RunIoConfig {
  std::string checkpoint_path = "model.ckpt";
  std::string loss_log_path = "loss_log.tsv";
  int checkpoint_every = 500;
  std::string effective_config_path;  // written when non-empty
};

struct RunConfig {
  std::uint64_t seed = 0;
  BackboneConfig backbone;
  MatcherConfig matcher;
  ObjectiveConfig objective;
  AugmentConfig augment;
  TrackerConfig tracker;
  MetricsConfig metrics;
  DataConfig data;
  OptimizerConfig optimizer;
  RunIoConfig io;

  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
// Canonical serialization: parsing it back and serializing again reproduces
// the exact same text.
std::string serialize_run_config(const RunConfig& config);
void save_run_config(const std::string& path, const RunConfig& config);

}  // namespace gmrw
