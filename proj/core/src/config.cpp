#include "gmrw/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "config_json.hpp"
#include "gmrw/errors.hpp"

namespace gmrw {

using nlohmann::json;

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("optimizer: learning_rate <= 0");
  if (steps < 0) throw ConfigError("optimizer: steps < 0");
  if (batch_size < 1) throw ConfigError("optimizer: batch_size < 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("optimizer: betas must be in [0, 1)");
  }
  if (train_stride != 1 && train_stride != 2 && train_stride != 4) {
    throw ConfigError("optimizer: train_stride must be 1, 2 or 4");
  }
}

void DataConfig::validate() const {
  if (source != "sprites" && source != "frames") {
    throw ConfigError("data: source must be 'sprites' or 'frames'");
  }
  if (source == "frames" && frames_dir.empty()) {
    throw ConfigError("data: frames_dir required when source is 'frames'");
  }
  if (source == "sprites") sprites.validate();
  if (clip_pool < 1) throw ConfigError("data: clip_pool < 1");
  if (frame_gap_range.first < 1 ||
      frame_gap_range.first > frame_gap_range.second) {
    throw ConfigError("data: bad frame_gap_range");
  }
}

void RunConfig::validate() const {
  backbone.validate();
  matcher.validate(backbone.feature_dim);
  objective.validate();
  augment.validate();
  tracker.validate();
  metrics.validate();
  data.validate();
  optimizer.validate();
}

namespace {

json sprites_to_json(const SpriteSceneConfig& c) {
  return {{"canvas_width", c.canvas_width},
          {"canvas_height", c.canvas_height},
          {"num_sprites", c.num_sprites},
          {"sprite_size_min", c.sprite_size_range.first},
          {"sprite_size_max", c.sprite_size_range.second},
          {"velocity_min", c.velocity_range.first},
          {"velocity_max", c.velocity_range.second},
          {"texture",
           c.texture == SpriteSceneConfig::Texture::kNoise ? "noise" : "checker"},
          {"allow_overlap", c.allow_overlap},
          {"num_frames", c.num_frames},
          {"seed", c.seed},
          {"points_per_sprite", c.points_per_sprite}};
}

SpriteSceneConfig sprites_from_json(const json& j) {
  SpriteSceneConfig c;
  c.canvas_width = j.value("canvas_width", c.canvas_width);
  c.canvas_height = j.value("canvas_height", c.canvas_height);
  c.num_sprites = j.value("num_sprites", c.num_sprites);
  c.sprite_size_range = {j.value("sprite_size_min", c.sprite_size_range.first),
                         j.value("sprite_size_max", c.sprite_size_range.second)};
  c.velocity_range = {j.value("velocity_min", c.velocity_range.first),
                      j.value("velocity_max", c.velocity_range.second)};
  const std::string tex = j.value("texture", std::string("noise"));
  if (tex == "noise") {
    c.texture = SpriteSceneConfig::Texture::kNoise;
  } else if (tex == "checker") {
    c.texture = SpriteSceneConfig::Texture::kChecker;
  } else {
    throw ConfigError("sprites: unknown texture '" + tex + "'");
  }
  c.allow_overlap = j.value("allow_overlap", c.allow_overlap);
  c.num_frames = j.value("num_frames", c.num_frames);
  c.seed = j.value("seed", c.seed);
  c.points_per_sprite = j.value("points_per_sprite", c.points_per_sprite);
  return c;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }
  RunConfig c;
  c.seed = j.value("seed", c.seed);
  if (j.contains("backbone")) c.backbone = backbone_from_json(j["backbone"]);
  if (j.contains("matcher")) c.matcher = matcher_from_json(j["matcher"]);
  if (j.contains("objective")) {
    const json& o = j["objective"];
    c.objective.lambda_smooth =
        o.value("lambda_smooth", c.objective.lambda_smooth);
    c.objective.lambda_color = o.value("lambda_color", c.objective.lambda_color);
    c.objective.use_smoothness =
        o.value("use_smoothness", c.objective.use_smoothness);
    c.objective.huber_delta = o.value("huber_delta", c.objective.huber_delta);
    c.objective.ce_epsilon = o.value("ce_epsilon", c.objective.ce_epsilon);
  }
  if (j.contains("augment")) {
    const json& a = j["augment"];
    c.augment.scale_min = a.value("scale_min", c.augment.scale_min);
    c.augment.scale_max = a.value("scale_max", c.augment.scale_max);
    c.augment.output_height = a.value("output_height", c.augment.output_height);
    c.augment.output_width = a.value("output_width", c.augment.output_width);
    c.augment.label_warping = a.value("label_warping", c.augment.label_warping);
  }
  if (j.contains("tracker")) {
    const json& t = j["tracker"];
    c.tracker.mode =
        parse_tracker_mode(t.value("mode", tracker_mode_name(c.tracker.mode)));
    c.tracker.eval_stride = t.value("eval_stride", c.tracker.eval_stride);
    c.tracker.tau_cyc = t.value("tau_cyc", c.tracker.tau_cyc);
  }
  if (j.contains("metrics")) {
    const json& m = j["metrics"];
    if (m.contains("thresholds")) {
      c.metrics.thresholds = m["thresholds"].get<std::vector<double>>();
    }
    c.metrics.query_stride = m.value("query_stride", c.metrics.query_stride);
    c.metrics.reference_resolution =
        m.value("reference_resolution", c.metrics.reference_resolution);
  }
  if (j.contains("data")) {
    const json& d = j["data"];
    c.data.source = d.value("source", c.data.source);
    c.data.frames_dir = d.value("frames_dir", c.data.frames_dir);
    if (d.contains("sprites")) c.data.sprites = sprites_from_json(d["sprites"]);
    c.data.clip_pool = d.value("clip_pool", c.data.clip_pool);
    c.data.frame_gap_range = {
        d.value("frame_gap_min", c.data.frame_gap_range.first),
        d.value("frame_gap_max", c.data.frame_gap_range.second)};
  }
  if (j.contains("optimizer")) {
    const json& o = j["optimizer"];
    c.optimizer.learning_rate =
        o.value("learning_rate", c.optimizer.learning_rate);
    c.optimizer.steps = o.value("steps", c.optimizer.steps);
    c.optimizer.batch_size = o.value("batch_size", c.optimizer.batch_size);
    c.optimizer.beta1 = o.value("beta1", c.optimizer.beta1);
    c.optimizer.beta2 = o.value("beta2", c.optimizer.beta2);
    c.optimizer.epsilon = o.value("epsilon", c.optimizer.epsilon);
    c.optimizer.train_stride = o.value("train_stride", c.optimizer.train_stride);
  }
  if (j.contains("io")) {
    const json& io = j["io"];
    c.io.checkpoint_path = io.value("checkpoint_path", c.io.checkpoint_path);
    c.io.loss_log_path = io.value("loss_log_path", c.io.loss_log_path);
    c.io.checkpoint_every = io.value("checkpoint_every", c.io.checkpoint_every);
    c.io.effective_config_path =
        io.value("effective_config_path", c.io.effective_config_path);
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_run_config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::string serialize_run_config(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["backbone"] = backbone_to_json(c.backbone);
  j["matcher"] = matcher_to_json(c.matcher);
  j["objective"] = {{"lambda_smooth", c.objective.lambda_smooth},
                    {"lambda_color", c.objective.lambda_color},
                    {"use_smoothness", c.objective.use_smoothness},
                    {"huber_delta", c.objective.huber_delta},
                    {"ce_epsilon", c.objective.ce_epsilon}};
  j["augment"] = {{"scale_min", c.augment.scale_min},
                  {"scale_max", c.augment.scale_max},
                  {"output_height", c.augment.output_height},
                  {"output_width", c.augment.output_width},
                  {"label_warping", c.augment.label_warping}};
  j["tracker"] = {{"mode", tracker_mode_name(c.tracker.mode)},
                  {"eval_stride", c.tracker.eval_stride},
                  {"tau_cyc", c.tracker.tau_cyc}};
  j["metrics"] = {{"thresholds", c.metrics.thresholds},
                  {"query_stride", c.metrics.query_stride},
                  {"reference_resolution", c.metrics.reference_resolution}};
  j["data"] = {{"source", c.data.source},
               {"frames_dir", c.data.frames_dir},
               {"sprites", sprites_to_json(c.data.sprites)},
               {"clip_pool", c.data.clip_pool},
               {"frame_gap_min", c.data.frame_gap_range.first},
               {"frame_gap_max", c.data.frame_gap_range.second}};
  j["optimizer"] = {{"learning_rate", c.optimizer.learning_rate},
                    {"steps", c.optimizer.steps},
                    {"batch_size", c.optimizer.batch_size},
                    {"beta1", c.optimizer.beta1},
                    {"beta2", c.optimizer.beta2},
                    {"epsilon", c.optimizer.epsilon},
                    {"train_stride", c.optimizer.train_stride}};
  j["io"] = {{"checkpoint_path", c.io.checkpoint_path},
             {"loss_log_path", c.io.loss_log_path},
             {"checkpoint_every", c.io.checkpoint_every},
             {"effective_config_path", c.io.effective_config_path}};
  return j.dump(2) + "\n";
}

void save_run_config(const std::string& path, const RunConfig& config) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("save_run_config: cannot open " + path);
  out << serialize_run_config(config);
  if (!out) throw IoError("save_run_config: write failed for " + path);
}

}  // namespace gmrw
