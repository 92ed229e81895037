#include "gmrw/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "gmrw/errors.hpp"

namespace gmrw {

void TrackerConfig::validate() const {
  if (!(tau_cyc > 0.0)) throw ConfigError("tracker: tau_cyc must be > 0");
  if (eval_stride != 1 && eval_stride != 2 && eval_stride != 4) {
    throw ConfigError("tracker: eval_stride must be 1, 2 or 4");
  }
}

TrackerConfig::Mode parse_tracker_mode(const std::string& name) {
  if (name == "chained") return TrackerConfig::Mode::kChained;
  if (name == "direct") return TrackerConfig::Mode::kDirect;
  throw ConfigError("tracker: unknown mode '" + name + "'");
}

std::string tracker_mode_name(TrackerConfig::Mode mode) {
  return mode == TrackerConfig::Mode::kChained ? "chained" : "direct";
}

PairMotion pair_motion(const Image& frame_a, const Image& frame_b,
                       const GmrwModel& model, int stride) {
  if (!frame_a.same_shape(frame_b)) {
    throw DimensionError("pair_motion: frames differ in shape");
  }
  ad::NoGradGuard guard;
  const CorrelationFeatures corr = model.correlate_pair(frame_a, frame_b, stride);
  const double tau = model.temperature();
  const CoordinateGrid grid =
      grid_coordinates(frame_a.height, frame_a.width, stride);
  PairMotion motion;
  motion.forward = expected_flow(transition_matrix(corr, tau), grid);
  motion.backward = expected_flow(transition_matrix_reverse(corr, tau), grid);
  return motion;
}

Eigen::Vector2d sample_flow(const MotionField& field, double x, double y) {
  const CoordinateGrid& g = field.grid;
  const double off = (g.stride - 1) / 2.0;
  const double gx = std::clamp((x - off) / g.stride, 0.0,
                               static_cast<double>(g.cols - 1));
  const double gy = std::clamp((y - off) / g.stride, 0.0,
                               static_cast<double>(g.rows - 1));
  const int x0 = std::min(static_cast<int>(std::floor(gx)), g.cols - 1);
  const int y0 = std::min(static_cast<int>(std::floor(gy)), g.rows - 1);
  const int x1 = std::min(x0 + 1, g.cols - 1);
  const int y1 = std::min(y0 + 1, g.rows - 1);
  const double fx = gx - x0;
  const double fy = gy - y0;
  Eigen::Vector2d out;
  for (int c = 0; c < 2; ++c) {
    const double top = field.flow(g.index(y0, x0), c) * (1.0 - fx) +
                       field.flow(g.index(y0, x1), c) * fx;
    const double bot = field.flow(g.index(y1, x0), c) * (1.0 - fx) +
                       field.flow(g.index(y1, x1), c) * fx;
    out(c) = top * (1.0 - fy) + bot * fy;
  }
  return out;
}

namespace {

bool inside_frame(double x, double y, const CoordinateGrid& g) {
  const double w = g.cols * g.stride;
  const double h = g.rows * g.stride;
  return x >= -0.5 && x <= w - 0.5 && y >= -0.5 && y <= h - 0.5;
}

}  // namespace

bool cycle_visibility(const MotionField& forward, const MotionField& backward,
                      double x, double y, double tau_cyc) {
  const Eigen::Vector2d fwd = sample_flow(forward, x, y);
  const double ax = x + fwd.x();
  const double ay = y + fwd.y();
  if (!inside_frame(ax, ay, backward.grid)) return false;
  const Eigen::Vector2d bwd = sample_flow(backward, ax, ay);
  const double err = std::hypot(fwd.x() + bwd.x(), fwd.y() + bwd.y());
  return err <= tau_cyc;
}

namespace {

void check_queries(const VideoClip& clip,
                   const std::vector<QueryPoint>& queries) {
  for (const QueryPoint& q : queries) {
    if (q.frame < 0 || q.frame >= clip.size()) {
      throw RangeError("track: query frame out of range");
    }
    if (q.x < 0.0 || q.x > clip.width() - 1 || q.y < 0.0 ||
        q.y > clip.height() - 1) {
      throw RangeError("track: query position outside frame");
    }
  }
}

}  // namespace

std::vector<Track> track_chained(const VideoClip& clip,
                                 const std::vector<QueryPoint>& queries,
                                 const GmrwModel& model,
                                 const TrackerConfig& config) {
  config.validate();
  validate_clip(clip, config.eval_stride);
  check_queries(clip, queries);
  const int frame_count = clip.size();

  std::vector<PairMotion> pairs;
  pairs.reserve(frame_count - 1);
  for (int t = 0; t + 1 < frame_count; ++t) {
    pairs.push_back(pair_motion(clip.frames[t], clip.frames[t + 1], model,
                                config.eval_stride));
  }

  std::vector<Track> tracks;
  tracks.reserve(queries.size());
  for (const QueryPoint& q : queries) {
    Track tr;
    tr.positions.assign(frame_count, {0.0, 0.0});
    tr.visibility.assign(frame_count, 0);
    tr.positions[q.frame] = {q.x, q.y};
    tr.visibility[q.frame] = 1;
    // forward in time
    for (int t = q.frame; t + 1 < frame_count; ++t) {
      const auto [px, py] = tr.positions[t];
      const Eigen::Vector2d f = sample_flow(pairs[t].forward, px, py);
      tr.positions[t + 1] = {px + f.x(), py + f.y()};
      tr.visibility[t + 1] =
          cycle_visibility(pairs[t].forward, pairs[t].backward, px, py,
                           config.tau_cyc)
              ? 1
              : 0;
    }
    // backward in time
    for (int t = q.frame; t - 1 >= 0; --t) {
      const auto [px, py] = tr.positions[t];
      const Eigen::Vector2d f = sample_flow(pairs[t - 1].backward, px, py);
      tr.positions[t - 1] = {px + f.x(), py + f.y()};
      tr.visibility[t - 1] =
          cycle_visibility(pairs[t - 1].backward, pairs[t - 1].forward, px, py,
                           config.tau_cyc)
              ? 1
              : 0;
    }
    tracks.push_back(std::move(tr));
  }
  return tracks;
}

std::vector<Track> track_direct(const VideoClip& clip,
                                const std::vector<QueryPoint>& queries,
                                const GmrwModel& model,
                                const TrackerConfig& config) {
  config.validate();
  validate_clip(clip, config.eval_stride);
  check_queries(clip, queries);
  const int frame_count = clip.size();

  // One correlation pass per unordered frame pair actually queried.
  std::map<std::pair<int, int>, PairMotion> cache;
  auto motion_for = [&](int from, int to) -> PairMotion {
    const bool swapped = from > to;
    const std::pair<int, int> key =
        swapped ? std::make_pair(to, from) : std::make_pair(from, to);
    auto it = cache.find(key);
    if (it == cache.end()) {
      it = cache
               .emplace(key, pair_motion(clip.frames[key.first],
                                         clip.frames[key.second], model,
                                         config.eval_stride))
               .first;
    }
    const PairMotion& pm = it->second;
    return swapped ? PairMotion{pm.backward, pm.forward} : pm;
  };

  std::vector<Track> tracks;
  tracks.reserve(queries.size());
  for (const QueryPoint& q : queries) {
    Track tr;
    tr.positions.assign(frame_count, {0.0, 0.0});
    tr.visibility.assign(frame_count, 0);
    tr.positions[q.frame] = {q.x, q.y};
    tr.visibility[q.frame] = 1;
    for (int t = 0; t < frame_count; ++t) {
      if (t == q.frame) continue;
      const PairMotion pm = motion_for(q.frame, t);
      const Eigen::Vector2d f = sample_flow(pm.forward, q.x, q.y);
      tr.positions[t] = {q.x + f.x(), q.y + f.y()};
      tr.visibility[t] =
          cycle_visibility(pm.forward, pm.backward, q.x, q.y, config.tau_cyc)
              ? 1
              : 0;
    }
    tracks.push_back(std::move(tr));
  }
  return tracks;
}

std::vector<Track> track(const VideoClip& clip,
                         const std::vector<QueryPoint>& queries,
                         const GmrwModel& model, const TrackerConfig& config) {
  return config.mode == TrackerConfig::Mode::kChained
             ? track_chained(clip, queries, model, config)
             : track_direct(clip, queries, model, config);
}

}  // namespace gmrw
