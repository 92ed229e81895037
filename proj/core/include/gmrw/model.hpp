#pragma once

#include <cstdint>
#include <string>

#include "gmrw/backbone.hpp"
#include "gmrw/matcher.hpp"
#include "gmrw/params.hpp"
#include "gmrw/types.hpp"

namespace gmrw {

struct ModelConfig {
  BackboneConfig backbone;
  MatcherConfig matcher;

  void validate() const {
    backbone.validate();
    matcher.validate(backbone.feature_dim);
  }
};

// Backbone + matcher with their parameters. Parameters are read-shared during
// inference; training mutates them from a single writer.
class GmrwModel {
 public:
  GmrwModel(const ModelConfig& config, std::uint64_t seed);

  // Checkpoint: magic line, JSON header (configs + named tensor shapes),
  // little-endian float64 blob in header order. Stable across versions via
  // the embedded format_version.
  static GmrwModel load_checkpoint(const std::string& path);
  void save_checkpoint(const std::string& path) const;

  const ModelConfig& config() const { return config_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  const BackboneWeights& backbone_weights() const { return backbone_; }
  const MatcherWeights& matcher_weights() const { return matcher_; }

  double temperature() const {
    return config_.matcher.temperature(config_.backbone.feature_dim);
  }

  // Upsamples the original-resolution frame for the stride and extracts
  // positional-encoded features.
  FeatureGrid features_for_stride(const Image& frame, int stride) const;

  // Full pair pass: features for both frames, then the correlation stack.
  CorrelationFeatures correlate_pair(const Image& frame_a, const Image& frame_b,
                                     int stride) const;

 private:
  explicit GmrwModel(const ModelConfig& config);  // empty store (for load)

  ModelConfig config_;
  ParamStore store_;
  BackboneWeights backbone_;
  MatcherWeights matcher_;
};

}  // namespace gmrw
