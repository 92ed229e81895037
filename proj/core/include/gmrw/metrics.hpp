#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gmrw/trackio.hpp"
#include "gmrw/types.hpp"

namespace gmrw {

// Ground truth shares the track-file schema: per-track positions, visibility
// flags and a query anchored at a visible frame.
using GroundTruthTrackSet = TrackSet;

struct MetricsConfig {
  std::vector<double> thresholds = {1.0, 2.0, 4.0, 8.0, 16.0};  // ref px
  int query_stride = 5;
  double reference_resolution = 256.0;  // errors rescaled to this resolution

  void validate() const;
};

struct ThresholdStats {
  double threshold = 0.0;
  double fraction = 0.0;  // positional accuracy at this threshold
  double jaccard = 0.0;
};

struct MetricsReport {
  double aj = 0.0;
  double delta_avg = 0.0;
  double oa = 0.0;
  std::vector<ThresholdStats> per_threshold;
};

// One query per track at every query_stride-th frame where the track is
// visible. Tracks that yield no query are skipped with a warning on the log.
std::vector<QueryPoint> sample_queries_strided(const GroundTruthTrackSet& gt,
                                               int query_stride);

// The aligned-array metric primitives. pred[i] and gt[i] must be tracks of
// equal length; errors are compared in reference-resolution pixels via the
// per-axis scales. Thresholds use an inclusive (<=) tie rule.
std::pair<double, std::vector<std::pair<double, double>>> positional_accuracy(
    const std::vector<Track>& pred, const std::vector<Track>& gt,
    const std::vector<double>& thresholds, double scale_x, double scale_y);

double occlusion_accuracy(const std::vector<Track>& pred,
                          const std::vector<Track>& gt);

double average_jaccard(const std::vector<Track>& pred,
                       const std::vector<Track>& gt,
                       const std::vector<double>& thresholds, double scale_x,
                       double scale_y);

// Full report for predictions aligned with ground-truth tracks; frame size is
// used to rescale errors to the reference resolution.
MetricsReport evaluate_tracks(const std::vector<Track>& pred,
                              const std::vector<Track>& gt,
                              const MetricsConfig& config, int frame_width,
                              int frame_height);

// Maps each predicted query to the ground-truth track whose position at the
// query frame matches it. Throws SchemaError when a query matches nothing.
std::vector<int> match_queries_to_tracks(const std::vector<QueryPoint>& queries,
                                         const GroundTruthTrackSet& gt);

// Expands gt so entry i is the ground-truth track behind query i.
std::vector<Track> expand_ground_truth(const GroundTruthTrackSet& gt,
                                       const std::vector<int>& gt_index);

std::string render_report(const MetricsReport& report,
                          const MetricsConfig& config);
std::string summary_line(const MetricsReport& report);

}  // namespace gmrw
