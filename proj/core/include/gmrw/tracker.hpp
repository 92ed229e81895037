#pragma once

#include <string>
#include <vector>

#include "gmrw/model.hpp"
#include "gmrw/objective.hpp"
#include "gmrw/types.hpp"

namespace gmrw {

struct TrackerConfig {
  enum class Mode { kChained, kDirect };
  Mode mode = Mode::kChained;
  int eval_stride = 1;   // chained default; the direct default is 2
  double tau_cyc = 3.0;  // pixels

  void validate() const;
};

TrackerConfig::Mode parse_tracker_mode(const std::string& name);
std::string tracker_mode_name(TrackerConfig::Mode mode);

struct PairMotion {
  MotionField forward;
  MotionField backward;
};

// Expected motion in both directions between two frames, via one correlation
// pass. Runs without recording gradients.
PairMotion pair_motion(const Image& frame_a, const Image& frame_b,
                       const GmrwModel& model, int stride);

// Bilinear sample of a motion field at an arbitrary pixel position; positions
// beyond the outermost cell centers take the edge value.
Eigen::Vector2d sample_flow(const MotionField& field, double x, double y);

// Forward-backward cycle test: advect the point by the forward flow, read the
// backward flow there, and accept when the composed displacement is at most
// tau_cyc. Points advected outside the frame are invisible.
bool cycle_visibility(const MotionField& forward, const MotionField& backward,
                      double x, double y, double tau_cyc);

// Long-range tracks by composing adjacent-frame motion. Positions keep
// advecting when occluded; visibility re-tests every adjacent pair.
std::vector<Track> track_chained(const VideoClip& clip,
                                 const std::vector<QueryPoint>& queries,
                                 const GmrwModel& model,
                                 const TrackerConfig& config);

// Long-range tracks by matching the query frame against every target frame
// independently.
std::vector<Track> track_direct(const VideoClip& clip,
                                const std::vector<QueryPoint>& queries,
                                const GmrwModel& model,
                                const TrackerConfig& config);

std::vector<Track> track(const VideoClip& clip,
                         const std::vector<QueryPoint>& queries,
                         const GmrwModel& model, const TrackerConfig& config);

}  // namespace gmrw
