#pragma once

// JSON (de)serialization helpers shared by the run-config loader and the
// checkpoint header. Internal to the library; public interfaces stay free of
// json types.

#include <nlohmann/json.hpp>

#include "gmrw/backbone.hpp"
#include "gmrw/matcher.hpp"

namespace gmrw {

inline nlohmann::json backbone_to_json(const BackboneConfig& c) {
  return {{"feature_dim", c.feature_dim},
          {"downsample_factor", c.downsample_factor},
          {"num_conv_blocks", c.num_conv_blocks},
          {"positional_encoding_scale", c.positional_encoding_scale}};
}

inline BackboneConfig backbone_from_json(const nlohmann::json& j) {
  BackboneConfig c;
  c.feature_dim = j.value("feature_dim", c.feature_dim);
  c.downsample_factor = j.value("downsample_factor", c.downsample_factor);
  c.num_conv_blocks = j.value("num_conv_blocks", c.num_conv_blocks);
  c.positional_encoding_scale =
      j.value("positional_encoding_scale", c.positional_encoding_scale);
  return c;
}

inline nlohmann::json matcher_to_json(const MatcherConfig& c) {
  return {{"num_layers", c.num_layers},
          {"num_heads", c.num_heads},
          {"ffn_multiplier", c.ffn_multiplier},
          {"use_shifted_windows", c.use_shifted_windows},
          {"window_size", c.window_size}};
}

inline MatcherConfig matcher_from_json(const nlohmann::json& j) {
  MatcherConfig c;
  c.num_layers = j.value("num_layers", c.num_layers);
  c.num_heads = j.value("num_heads", c.num_heads);
  c.ffn_multiplier = j.value("ffn_multiplier", c.ffn_multiplier);
  c.use_shifted_windows = j.value("use_shifted_windows", c.use_shifted_windows);
  c.window_size = j.value("window_size", c.window_size);
  return c;
}

}  // namespace gmrw
