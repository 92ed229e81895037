#include "gmrw/trackio.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "gmrw/errors.hpp"

namespace gmrw {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

[[noreturn]] void schema_fail(int line, const std::string& what) {
  throw SchemaError("track file line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::string format_tracks(const TrackSet& set) {
  if (set.queries.size() != set.tracks.size()) {
    throw DimensionError("format_tracks: queries/tracks count differs");
  }
  std::ostringstream out;
  out << "gmrw-tracks 1\n";
  out << "size " << set.tracks.size() << ' ' << set.num_frames << ' '
      << set.width << ' ' << set.height << '\n';
  for (std::size_t k = 0; k < set.tracks.size(); ++k) {
    const QueryPoint& q = set.queries[k];
    const Track& tr = set.tracks[k];
    if (tr.size() != set.num_frames ||
        tr.visibility.size() != tr.positions.size()) {
      throw DimensionError("format_tracks: track length != num_frames");
    }
    out << "track " << q.frame << ' ' << fmt_double(q.x) << ' '
        << fmt_double(q.y);
    for (int t = 0; t < set.num_frames; ++t) {
      out << ' ' << fmt_double(tr.positions[t][0]) << ' '
          << fmt_double(tr.positions[t][1]) << ' '
          << (tr.visibility[t] ? 1 : 0);
    }
    out << '\n';
  }
  return out.str();
}

void write_tracks(const std::string& path, const TrackSet& set) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("write_tracks: cannot open " + path);
  out << format_tracks(set);
  if (!out) throw IoError("write_tracks: write failed for " + path);
}

TrackSet parse_tracks(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;

  if (!std::getline(in, line)) schema_fail(1, "empty file");
  ++line_no;
  if (line != "gmrw-tracks 1") schema_fail(line_no, "bad header '" + line + "'");

  if (!std::getline(in, line)) schema_fail(2, "missing size line");
  ++line_no;
  TrackSet set;
  std::size_t num_tracks = 0;
  {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag >> num_tracks >> set.num_frames >> set.width >>
          set.height) ||
        tag != "size") {
      schema_fail(line_no, "bad size line");
    }
    if (set.num_frames < 1 || set.width < 1 || set.height < 1) {
      schema_fail(line_no, "non-positive size fields");
    }
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag != "track") schema_fail(line_no, "expected 'track', got '" + tag + "'");
    QueryPoint q;
    if (!(ls >> q.frame >> q.x >> q.y)) schema_fail(line_no, "bad query fields");
    Track tr;
    tr.positions.resize(set.num_frames);
    tr.visibility.resize(set.num_frames);
    for (int t = 0; t < set.num_frames; ++t) {
      double x = 0.0, y = 0.0;
      int v = 0;
      if (!(ls >> x >> y >> v)) {
        schema_fail(line_no, "truncated frame fields at frame " +
                                 std::to_string(t));
      }
      if (v != 0 && v != 1) schema_fail(line_no, "visibility must be 0 or 1");
      tr.positions[t] = {x, y};
      tr.visibility[t] = static_cast<std::uint8_t>(v);
    }
    double extra;
    if (ls >> extra) schema_fail(line_no, "trailing fields");
    if (q.frame < 0 || q.frame >= set.num_frames) {
      schema_fail(line_no, "query frame out of range");
    }
    set.queries.push_back(q);
    set.tracks.push_back(std::move(tr));
  }
  if (set.tracks.size() != num_tracks) {
    throw SchemaError("track file: size line declares " +
                      std::to_string(num_tracks) + " tracks, found " +
                      std::to_string(set.tracks.size()));
  }
  return set;
}

TrackSet read_tracks(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_tracks: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_tracks(buf.str());
}

void write_queries(const std::string& path,
                   const std::vector<QueryPoint>& qs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("write_queries: cannot open " + path);
  out << "gmrw-queries 1\n";
  for (const QueryPoint& q : qs) {
    out << q.frame << ' ' << fmt_double(q.x) << ' ' << fmt_double(q.y) << '\n';
  }
  if (!out) throw IoError("write_queries: write failed for " + path);
}

std::vector<QueryPoint> read_queries(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_queries: cannot open " + path);
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line) || line != "gmrw-queries 1") {
    throw SchemaError("query file: bad header");
  }
  ++line_no;
  std::vector<QueryPoint> qs;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    QueryPoint q;
    if (!(ls >> q.frame >> q.x >> q.y)) {
      throw SchemaError("query file line " + std::to_string(line_no) +
                        ": bad fields");
    }
    qs.push_back(q);
  }
  return qs;
}

}  // namespace gmrw
