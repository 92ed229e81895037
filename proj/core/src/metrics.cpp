#include "gmrw/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "gmrw/errors.hpp"

namespace gmrw {

void MetricsConfig::validate() const {
  if (thresholds.empty()) throw ConfigError("metrics: no thresholds");
  for (double t : thresholds) {
    if (!(t > 0.0)) throw ConfigError("metrics: thresholds must be > 0");
  }
  if (query_stride < 1) throw ConfigError("metrics: query_stride must be >= 1");
  if (!(reference_resolution > 0.0)) {
    throw ConfigError("metrics: reference_resolution must be > 0");
  }
}

std::vector<QueryPoint> sample_queries_strided(const GroundTruthTrackSet& gt,
                                               int query_stride) {
  if (gt.tracks.empty()) {
    throw DimensionError("sample_queries_strided: no tracks");
  }
  if (query_stride < 1) {
    throw ConfigError("sample_queries_strided: stride must be >= 1");
  }
  std::vector<QueryPoint> queries;
  for (std::size_t k = 0; k < gt.tracks.size(); ++k) {
    const Track& tr = gt.tracks[k];
    bool emitted = false;
    for (int t = 0; t < tr.size(); t += query_stride) {
      if (!tr.visibility[t]) continue;
      queries.push_back({t, tr.positions[t][0], tr.positions[t][1]});
      emitted = true;
    }
    if (!emitted) {
      std::cerr << "warning: track " << k
                << " has no visible frame on the stride grid; skipped\n";
    }
  }
  return queries;
}

namespace {

void check_aligned(const std::vector<Track>& pred,
                   const std::vector<Track>& gt, const char* op) {
  if (pred.size() != gt.size()) {
    throw DimensionError(std::string(op) + ": track counts differ");
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].size() != gt[i].size()) {
      throw DimensionError(std::string(op) + ": track lengths differ");
    }
  }
}

double scaled_error(const Track& p, const Track& g, int t, double sx,
                    double sy) {
  const double dx = (p.positions[t][0] - g.positions[t][0]) * sx;
  const double dy = (p.positions[t][1] - g.positions[t][1]) * sy;
  return std::hypot(dx, dy);
}

}  // namespace

std::pair<double, std::vector<std::pair<double, double>>> positional_accuracy(
    const std::vector<Track>& pred, const std::vector<Track>& gt,
    const std::vector<double>& thresholds, double scale_x, double scale_y) {
  check_aligned(pred, gt, "positional_accuracy");
  long visible = 0;
  std::vector<long> within(thresholds.size(), 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (int t = 0; t < pred[i].size(); ++t) {
      if (!gt[i].visibility[t]) continue;
      ++visible;
      const double err = scaled_error(pred[i], gt[i], t, scale_x, scale_y);
      for (std::size_t j = 0; j < thresholds.size(); ++j) {
        if (err <= thresholds[j]) ++within[j];
      }
    }
  }
  if (visible == 0) {
    throw UndefinedMetricError(
        "positional_accuracy: no visible ground-truth frames");
  }
  std::vector<std::pair<double, double>> per;
  double mean = 0.0;
  for (std::size_t j = 0; j < thresholds.size(); ++j) {
    const double frac = static_cast<double>(within[j]) / visible;
    per.emplace_back(thresholds[j], frac);
    mean += frac;
  }
  mean /= thresholds.size();
  return {mean, per};
}

double occlusion_accuracy(const std::vector<Track>& pred,
                          const std::vector<Track>& gt) {
  check_aligned(pred, gt, "occlusion_accuracy");
  long total = 0;
  long correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (int t = 0; t < pred[i].size(); ++t) {
      ++total;
      const bool pv = pred[i].visibility[t] != 0;
      const bool gv = gt[i].visibility[t] != 0;
      if (pv == gv) ++correct;
    }
  }
  if (total == 0) {
    throw UndefinedMetricError("occlusion_accuracy: empty input");
  }
  return static_cast<double>(correct) / total;
}

double average_jaccard(const std::vector<Track>& pred,
                       const std::vector<Track>& gt,
                       const std::vector<double>& thresholds, double scale_x,
                       double scale_y) {
  check_aligned(pred, gt, "average_jaccard");
  double mean = 0.0;
  for (double threshold : thresholds) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      for (int t = 0; t < pred[i].size(); ++t) {
        const bool pv = pred[i].visibility[t] != 0;
        const bool gv = gt[i].visibility[t] != 0;
        const bool close =
            gv && scaled_error(pred[i], gt[i], t, scale_x, scale_y) <= threshold;
        if (pv && close) ++tp;
        if (pv && !close) ++fp;
        if (gv && (!pv || !close)) ++fn;
      }
    }
    const long denom = tp + fp + fn;
    if (denom == 0) {
      throw UndefinedMetricError("average_jaccard: empty denominator");
    }
    mean += static_cast<double>(tp) / denom;
  }
  return mean / thresholds.size();
}

MetricsReport evaluate_tracks(const std::vector<Track>& pred,
                              const std::vector<Track>& gt,
                              const MetricsConfig& config, int frame_width,
                              int frame_height) {
  config.validate();
  if (frame_width < 1 || frame_height < 1) {
    throw DimensionError("evaluate_tracks: bad frame size");
  }
  const double sx = config.reference_resolution / frame_width;
  const double sy = config.reference_resolution / frame_height;
  MetricsReport report;
  auto [delta_avg, per] =
      positional_accuracy(pred, gt, config.thresholds, sx, sy);
  report.delta_avg = delta_avg;
  report.oa = occlusion_accuracy(pred, gt);
  double aj = 0.0;
  for (std::size_t j = 0; j < config.thresholds.size(); ++j) {
    const std::vector<double> single{config.thresholds[j]};
    const double jac = average_jaccard(pred, gt, single, sx, sy);
    report.per_threshold.push_back({config.thresholds[j], per[j].second, jac});
    aj += jac;
  }
  report.aj = aj / config.thresholds.size();
  return report;
}

std::vector<int> match_queries_to_tracks(const std::vector<QueryPoint>& queries,
                                         const GroundTruthTrackSet& gt) {
  constexpr double kTol = 1e-6;
  std::vector<int> index;
  index.reserve(queries.size());
  for (std::size_t k = 0; k < queries.size(); ++k) {
    const QueryPoint& q = queries[k];
    int found = -1;
    for (std::size_t i = 0; i < gt.tracks.size(); ++i) {
      const Track& tr = gt.tracks[i];
      if (q.frame < 0 || q.frame >= tr.size()) continue;
      if (!tr.visibility[q.frame]) continue;
      if (std::abs(tr.positions[q.frame][0] - q.x) <= kTol &&
          std::abs(tr.positions[q.frame][1] - q.y) <= kTol) {
        found = static_cast<int>(i);
        break;
      }
    }
    if (found < 0) {
      throw SchemaError("eval: query " + std::to_string(k) + " at frame " +
                        std::to_string(q.frame) +
                        " matches no visible ground-truth track position");
    }
    index.push_back(found);
  }
  return index;
}

std::vector<Track> expand_ground_truth(const GroundTruthTrackSet& gt,
                                       const std::vector<int>& gt_index) {
  std::vector<Track> out;
  out.reserve(gt_index.size());
  for (int i : gt_index) out.push_back(gt.tracks[i]);
  return out;
}

namespace {
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}
}  // namespace

std::string render_report(const MetricsReport& report,
                          const MetricsConfig& config) {
  std::ostringstream out;
  out << "# gmrw-metrics v1\n";
  out << "# tie_rule: errors exactly equal to a threshold count as within (<=)\n";
  out << "# out_of_frame: predicted positions outside the frame are scored as given\n";
  out << "# reference_resolution: " << fmt(config.reference_resolution) << "\n";
  out << "aj " << fmt(report.aj) << "\n";
  out << "delta_avg " << fmt(report.delta_avg) << "\n";
  out << "oa " << fmt(report.oa) << "\n";
  for (const ThresholdStats& s : report.per_threshold) {
    out << "threshold " << fmt(s.threshold) << " fraction " << fmt(s.fraction)
        << " jaccard " << fmt(s.jaccard) << "\n";
  }
  return out.str();
}

std::string summary_line(const MetricsReport& report) {
  std::ostringstream out;
  out << "AJ=" << fmt(report.aj) << " d_avg=" << fmt(report.delta_avg)
      << " OA=" << fmt(report.oa);
  return out.str();
}

}  // namespace gmrw
