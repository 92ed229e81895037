#include "gmrw/model.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "config_json.hpp"
#include "gmrw/errors.hpp"
#include "gmrw/rng.hpp"

namespace gmrw {

namespace {
constexpr char kMagic[] = "GMRWCKPT1\n";
constexpr int kFormatVersion = 1;
}  // namespace

GmrwModel::GmrwModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  Rng rng(seed);
  Rng backbone_rng = rng.fork(1);
  Rng matcher_rng = rng.fork(2);
  backbone_ = init_backbone(store_, config_.backbone, backbone_rng);
  matcher_ = init_matcher(store_, config_.matcher, config_.backbone.feature_dim,
                          matcher_rng);
}

GmrwModel::GmrwModel(const ModelConfig& config) : config_(config) {
  config_.validate();
}

FeatureGrid GmrwModel::features_for_stride(const Image& frame,
                                           int stride) const {
  const Image up =
      upsample_for_stride(frame, stride, config_.backbone.downsample_factor);
  return extract_features(up, config_.backbone, backbone_, stride);
}

CorrelationFeatures GmrwModel::correlate_pair(const Image& frame_a,
                                              const Image& frame_b,
                                              int stride) const {
  const FeatureGrid fa = features_for_stride(frame_a, stride);
  const FeatureGrid fb = features_for_stride(frame_b, stride);
  return correlate(fa, fb, config_.matcher, matcher_);
}

void GmrwModel::save_checkpoint(const std::string& path) const {
  nlohmann::json header;
  header["format_version"] = kFormatVersion;
  header["backbone"] = backbone_to_json(config_.backbone);
  header["matcher"] = matcher_to_json(config_.matcher);
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& [name, var] : store_.items()) {
    tensors.push_back({{"name", name},
                       {"rows", var.rows()},
                       {"cols", var.cols()}});
  }
  header["params"] = tensors;
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("save_checkpoint: cannot open " + path);
  out.write(kMagic, sizeof(kMagic) - 1);
  const std::uint64_t len = header_text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header_text.data(), static_cast<std::streamsize>(len));
  for (const auto& [name, var] : store_.items()) {
    const ad::Mat& m = var.value();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double v = m(i, j);
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
      }
    }
  }
  if (!out) throw IoError("save_checkpoint: write failed for " + path);
}

GmrwModel GmrwModel::load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_checkpoint: cannot open " + path);
  char magic[sizeof(kMagic) - 1];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw SchemaError("load_checkpoint: bad magic in " + path);
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len == 0 || len > (1u << 26)) {
    throw SchemaError("load_checkpoint: bad header length");
  }
  std::string header_text(len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(len));
  if (!in) throw SchemaError("load_checkpoint: truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("load_checkpoint: header parse: ") + e.what());
  }
  if (header.value("format_version", -1) != kFormatVersion) {
    throw SchemaError("load_checkpoint: unsupported format version");
  }

  ModelConfig config;
  config.backbone = backbone_from_json(header.at("backbone"));
  config.matcher = matcher_from_json(header.at("matcher"));
  GmrwModel model(config);
  for (const auto& t : header.at("params")) {
    const std::string name = t.at("name").get<std::string>();
    const Eigen::Index rows = t.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = t.at("cols").get<Eigen::Index>();
    ad::Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        double v = 0.0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        m(i, j) = v;
      }
    }
    if (!in) throw SchemaError("load_checkpoint: truncated tensor " + name);
    model.store_.create(name, std::move(m));
  }
  // Rebinding validates that every expected tensor is present with the
  // right name.
  model.backbone_ = bind_backbone(model.store_, config.backbone);
  model.matcher_ = bind_matcher(model.store_, config.matcher,
                                config.backbone.feature_dim);
  return model;
}

}  // namespace gmrw
