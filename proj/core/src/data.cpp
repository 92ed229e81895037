#include "gmrw/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>

#include "gmrw/errors.hpp"
#include "gmrw/imageio.hpp"

namespace gmrw {

namespace fs = std::filesystem;

void SpriteSceneConfig::validate() const {
  if (canvas_width < 16 || canvas_height < 16) {
    throw ConfigError("sprites: canvas must be at least 16x16");
  }
  if (num_sprites < 1) throw ConfigError("sprites: need at least one sprite");
  if (sprite_size_range.first < 6 ||
      sprite_size_range.first > sprite_size_range.second) {
    throw ConfigError("sprites: size range must satisfy 6 <= lo <= hi");
  }
  if (sprite_size_range.second >= std::min(canvas_width, canvas_height)) {
    throw ConfigError("sprites: sprites must fit inside the canvas");
  }
  if (velocity_range.first < 0.0 ||
      velocity_range.first > velocity_range.second) {
    throw ConfigError("sprites: bad velocity range");
  }
  if (velocity_range.second > std::min(canvas_width, canvas_height) / 4.0) {
    throw ConfigError("sprites: velocities too large to stay trackable");
  }
  if (num_frames < 2) throw ConfigError("sprites: need at least 2 frames");
  if (points_per_sprite < 1) throw ConfigError("sprites: points_per_sprite >= 1");
}

namespace {

Image block_noise(int height, int width, int block, double lo, double hi,
                  Rng& rng) {
  const int bh = (height + block - 1) / block;
  const int bw = (width + block - 1) / block;
  Image colors(bh, bw, 3);
  for (double& v : colors.pixels) v = rng.uniform(lo, hi);
  Image out(height, width, 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        out.at(y, x, c) = colors.at(y / block, x / block, c);
      }
    }
  }
  return out;
}

Image checker_texture(int height, int width, int block, Rng& rng) {
  double a[3], b[3];
  for (int c = 0; c < 3; ++c) {
    a[c] = rng.uniform(0.05, 0.45);
    b[c] = rng.uniform(0.55, 0.95);
  }
  Image out(height, width, 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const bool odd = ((y / block) + (x / block)) % 2 == 1;
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = odd ? b[c] : a[c];
    }
  }
  return out;
}

struct Sprite {
  Image texture;
  int w = 0;
  int h = 0;
  std::vector<Eigen::Vector2d> positions;  // top-left per frame
  std::vector<Eigen::Vector2d> offsets;    // tracked texels, sprite-local
};

// Constant velocity with reflection at the canvas borders.
std::vector<Eigen::Vector2d> bounce_path(Eigen::Vector2d pos,
                                         Eigen::Vector2d vel, double limit_x,
                                         double limit_y, int frames) {
  std::vector<Eigen::Vector2d> path;
  path.reserve(frames);
  path.push_back(pos);
  for (int t = 1; t < frames; ++t) {
    for (int a = 0; a < 2; ++a) {
      const double limit = a == 0 ? limit_x : limit_y;
      double p = pos(a) + vel(a);
      while (p < 0.0 || p > limit) {
        if (p < 0.0) p = -p;
        if (p > limit) p = 2.0 * limit - p;
        vel(a) = -vel(a);
      }
      pos(a) = p;
    }
    path.push_back(pos);
  }
  return path;
}

bool sprite_covers(const Sprite& s, int t, double x, double y) {
  const Eigen::Vector2d& p = s.positions[t];
  return x >= p.x() && x <= p.x() + s.w - 1 && y >= p.y() &&
         y <= p.y() + s.h - 1;
}

bool boxes_overlap(const Sprite& a, const Sprite& b, int t) {
  const Eigen::Vector2d& pa = a.positions[t];
  const Eigen::Vector2d& pb = b.positions[t];
  return pa.x() <= pb.x() + b.w - 1 && pb.x() <= pa.x() + a.w - 1 &&
         pa.y() <= pb.y() + b.h - 1 && pb.y() <= pa.y() + a.h - 1;
}

void render_frame(Image& canvas, const std::vector<Sprite>& sprites, int t) {
  for (const Sprite& s : sprites) {  // back to front; later sprites are nearer
    const Eigen::Vector2d& p = s.positions[t];
    const int x_begin = std::max(0, static_cast<int>(std::ceil(p.x())));
    const int x_end =
        std::min(canvas.width - 1, static_cast<int>(std::floor(p.x() + s.w - 1)));
    const int y_begin = std::max(0, static_cast<int>(std::ceil(p.y())));
    const int y_end =
        std::min(canvas.height - 1, static_cast<int>(std::floor(p.y() + s.h - 1)));
    for (int y = y_begin; y <= y_end; ++y) {
      for (int x = x_begin; x <= x_end; ++x) {
        const double tx = x - p.x();
        const double ty = y - p.y();
        for (int c = 0; c < 3; ++c) {
          canvas.at(y, x, c) = sample_bilinear(s.texture, tx, ty, c);
        }
      }
    }
  }
}

DatasetSample assemble_sample(const Image& background,
                              const std::vector<Sprite>& sprites, int frames,
                              int width, int height) {
  DatasetSample sample;
  sample.clip.frames.reserve(frames);
  for (int t = 0; t < frames; ++t) {
    Image frame = background;
    render_frame(frame, sprites, t);
    sample.clip.frames.push_back(std::move(frame));
  }

  sample.gt.num_frames = frames;
  sample.gt.width = width;
  sample.gt.height = height;
  for (std::size_t si = 0; si < sprites.size(); ++si) {
    const Sprite& s = sprites[si];
    for (const Eigen::Vector2d& off : s.offsets) {
      Track tr;
      tr.positions.resize(frames);
      tr.visibility.resize(frames);
      int first_visible = -1;
      for (int t = 0; t < frames; ++t) {
        const Eigen::Vector2d pos = s.positions[t] + off;
        tr.positions[t] = {pos.x(), pos.y()};
        bool visible = pos.x() >= 0.0 && pos.x() <= width - 1 &&
                       pos.y() >= 0.0 && pos.y() <= height - 1;
        for (std::size_t sj = si + 1; visible && sj < sprites.size(); ++sj) {
          if (sprite_covers(sprites[sj], t, pos.x(), pos.y())) visible = false;
        }
        tr.visibility[t] = visible ? 1 : 0;
        if (visible && first_visible < 0) first_visible = t;
      }
      if (first_visible < 0) continue;  // never visible, nothing to anchor
      sample.gt.queries.push_back({first_visible,
                                   tr.positions[first_visible][0],
                                   tr.positions[first_visible][1]});
      sample.gt.tracks.push_back(std::move(tr));
    }
  }
  return sample;
}

Image make_texture(SpriteSceneConfig::Texture kind, int h, int w, Rng& rng) {
  return kind == SpriteSceneConfig::Texture::kNoise
             ? block_noise(h, w, 2, 0.05, 0.95, rng)
             : checker_texture(h, w, 4, rng);
}

std::vector<Eigen::Vector2d> sample_offsets(int count, int w, int h,
                                            Rng& rng) {
  const int margin = 2;
  std::vector<Eigen::Vector2d> offsets;
  std::set<std::pair<int, int>> used;
  int guard = 0;
  while (static_cast<int>(offsets.size()) < count && guard < 1000) {
    ++guard;
    const int ox = rng.uniform_int(margin, w - 1 - margin);
    const int oy = rng.uniform_int(margin, h - 1 - margin);
    if (!used.insert({ox, oy}).second) continue;
    offsets.emplace_back(ox, oy);
  }
  while (static_cast<int>(offsets.size()) < count) {
    offsets.emplace_back(margin, margin);
  }
  return offsets;
}

}  // namespace

DatasetSample generate_sprite_clip(const SpriteSceneConfig& config) {
  config.validate();
  Rng rng(config.seed);
  Rng tex_rng = rng.fork(1);
  Rng motion_rng = rng.fork(2);

  const Image background =
      block_noise(config.canvas_height, config.canvas_width, 4, 0.15, 0.85,
                  tex_rng);

  const int max_attempts = 400;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<Sprite> sprites;
    Rng attempt_rng = motion_rng.fork(attempt);
    for (int i = 0; i < config.num_sprites; ++i) {
      Sprite s;
      s.w = attempt_rng.uniform_int(config.sprite_size_range.first,
                                    config.sprite_size_range.second);
      s.h = attempt_rng.uniform_int(config.sprite_size_range.first,
                                    config.sprite_size_range.second);
      Rng sprite_tex = tex_rng.fork(static_cast<std::uint64_t>(attempt) * 64 + i);
      s.texture = make_texture(config.texture, s.h, s.w, sprite_tex);
      const double limit_x = config.canvas_width - s.w;
      const double limit_y = config.canvas_height - s.h;
      const Eigen::Vector2d start(
          attempt_rng.uniform_int(0, static_cast<int>(limit_x)),
          attempt_rng.uniform_int(0, static_cast<int>(limit_y)));
      Eigen::Vector2d vel;
      for (int a = 0; a < 2; ++a) {
        const double mag = attempt_rng.uniform(config.velocity_range.first,
                                               config.velocity_range.second);
        vel(a) = attempt_rng.uniform() < 0.5 ? -mag : mag;
      }
      s.positions = bounce_path(start, vel, limit_x, limit_y,
                                config.num_frames);
      s.offsets = sample_offsets(config.points_per_sprite, s.w, s.h,
                                 attempt_rng);
      sprites.push_back(std::move(s));
    }

    if (!config.allow_overlap) {
      bool clean = true;
      for (int t = 0; clean && t < config.num_frames; ++t) {
        for (std::size_t i = 0; clean && i < sprites.size(); ++i) {
          for (std::size_t j = i + 1; clean && j < sprites.size(); ++j) {
            if (boxes_overlap(sprites[i], sprites[j], t)) clean = false;
          }
        }
      }
      if (!clean) continue;
    }
    return assemble_sample(background, sprites, config.num_frames,
                           config.canvas_width, config.canvas_height);
  }
  throw ConfigError(
      "generate_sprite_clip: could not place non-overlapping sprites; "
      "config infeasible");
}

DatasetSample occlusion_crossing_sample(std::uint64_t seed) {
  Rng rng(seed);
  const int width = 64, height = 64, frames = 12;
  const Image background = block_noise(height, width, 4, 0.15, 0.85, rng);

  // Rear sprite: static, fully covered while the occluder is parked.
  Sprite rear;
  rear.w = 16;
  rear.h = 16;
  Rng rear_tex = rng.fork(1);
  rear.texture = block_noise(rear.h, rear.w, 2, 0.05, 0.95, rear_tex);
  rear.positions.assign(frames, Eigen::Vector2d(24.0, 24.0));
  rear.offsets = {{4, 4}, {11, 4}, {4, 11}, {11, 11}, {7, 7}, {8, 10}};

  // Front sprite: sits clear of the rear for the first and last quarter and
  // parks on top of it in between, occluding every tracked texel.
  Sprite front;
  front.w = 30;
  front.h = 30;
  Rng front_tex = rng.fork(2);
  front.texture = block_noise(front.h, front.w, 2, 0.05, 0.95, front_tex);
  front.positions.reserve(frames);
  for (int t = 0; t < frames; ++t) {
    const bool parked = t >= 3 && t <= 8;
    front.positions.emplace_back(parked ? 15.0 : 34.0, 18.0);
  }

  return assemble_sample(background, {rear, front}, frames, width, height);
}

DatasetSample teleport_sample(std::uint64_t seed) {
  Rng rng(seed);
  const int width = 64, height = 64, frames = 14;
  const int jump_frame = 6;
  const Image background = block_noise(height, width, 4, 0.15, 0.85, rng);

  Sprite s;
  s.w = 16;
  s.h = 16;
  Rng tex = rng.fork(1);
  s.texture = block_noise(s.h, s.w, 2, 0.05, 0.95, tex);
  s.offsets = {{4, 4}, {11, 4}, {4, 11}, {11, 11}, {8, 8}};

  Rng jitter = rng.fork(2);
  Eigen::Vector2d pos(6.0, 8.0);
  const Eigen::Vector2d jump(26.0, 18.0);
  for (int t = 0; t < frames; ++t) {
    if (t == jump_frame) pos += jump;
    if (t > 0) {
      pos.x() = std::clamp(pos.x() + jitter.uniform_int(-1, 1), 0.0,
                           static_cast<double>(width - s.w));
      pos.y() = std::clamp(pos.y() + jitter.uniform_int(-1, 1), 0.0,
                           static_cast<double>(height - s.h));
    }
    s.positions.push_back(pos);
  }
  return assemble_sample(background, {s}, frames, width, height);
}

VideoClip load_frame_directory(const std::string& path,
                               std::pair<int, int> resize_to) {
  const auto [out_h, out_w] = resize_to;
  if (out_h < 1 || out_w < 1) {
    throw ConfigError("load_frame_directory: bad resize target");
  }
  if (!fs::is_directory(path)) {
    throw IoError("load_frame_directory: not a directory: " + path);
  }
  static const std::set<std::string> kExtensions{".png", ".jpg", ".jpeg",
                                                 ".bmp", ".ppm", ".pgm"};
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (kExtensions.count(ext)) files.push_back(entry.path().string());
  }
  if (files.empty()) {
    throw IoError("load_frame_directory: no image files in " + path);
  }
  std::sort(files.begin(), files.end());
  VideoClip clip;
  clip.frames.reserve(files.size());
  for (const std::string& file : files) {
    clip.frames.push_back(resize_bilinear(read_image(file), out_h, out_w));
  }
  return clip;
}

std::vector<PalindromeSample> make_training_batch(
    const std::vector<VideoClip>& pool, int batch_size,
    std::pair<int, int> frame_gap_range, Rng& rng, const AugmentConfig& config,
    int grid_stride) {
  if (pool.empty()) {
    throw ConfigError("make_training_batch: clip source exhausted");
  }
  if (batch_size < 1) throw ConfigError("make_training_batch: batch_size >= 1");
  if (frame_gap_range.first < 1 ||
      frame_gap_range.first > frame_gap_range.second) {
    throw ConfigError("make_training_batch: bad frame gap range");
  }
  std::vector<PalindromeSample> batch;
  batch.reserve(batch_size);
  for (int i = 0; i < batch_size; ++i) {
    const VideoClip& clip =
        pool[rng.uniform_int(0, static_cast<int>(pool.size()) - 1)];
    const int hi = std::min(frame_gap_range.second, clip.size() - 1);
    if (hi < frame_gap_range.first) {
      throw ConfigError("make_training_batch: clip shorter than frame gap");
    }
    const int gap = rng.uniform_int(frame_gap_range.first, hi);
    batch.push_back(build_palindrome(clip, gap, rng, config, grid_stride));
  }
  return batch;
}

void save_dataset(const std::string& dir, const DatasetSample& sample) {
  fs::create_directories(dir);
  for (int t = 0; t < sample.clip.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%05d.png", t);
    write_image((fs::path(dir) / name).string(), sample.clip.frames[t]);
  }
  write_tracks((fs::path(dir) / "gt.trk").string(), sample.gt);
}

}  // namespace gmrw
