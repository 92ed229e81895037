#pragma once

#include <string>
#include <vector>

#include "gmrw/types.hpp"

namespace gmrw {

// Line-delimited track file, shared by tracker output, ground-truth export
// and the evaluation harness:
//
//   gmrw-tracks 1
//   size <num_tracks> <num_frames> <width> <height>
//   track <query_t> <query_x> <query_y> <x_0> <y_0> <v_0> ... <x_T-1> <y_T-1> <v_T-1>
//
// One `track` line per query, fields space-separated in this exact order,
// visibility written as 0/1. Numbers use shortest %.10g formatting, so a file
// written twice from the same data is byte-identical.
struct TrackSet {
  std::vector<QueryPoint> queries;
  std::vector<Track> tracks;
  int num_frames = 0;
  int width = 0;
  int height = 0;
};

void write_tracks(const std::string& path, const TrackSet& set);
TrackSet read_tracks(const std::string& path);

std::string format_tracks(const TrackSet& set);
TrackSet parse_tracks(const std::string& text);

// Query list file: one `<t> <x> <y>` line per query after a `gmrw-queries 1`
// header line.
void write_queries(const std::string& path, const std::vector<QueryPoint>& qs);
std::vector<QueryPoint> read_queries(const std::string& path);

}  // namespace gmrw
