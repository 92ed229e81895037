#include "gmrw/backbone.hpp"

#include <cmath>
#include <string>

#include "gmrw/errors.hpp"

namespace gmrw {

namespace {

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

int int_log2(int v) {
  int n = 0;
  while (v > 1) {
    v >>= 1;
    ++n;
  }
  return n;
}

ad::Mat he_init(int rows, int cols, int fan_in, Rng& rng) {
  const double std = std::sqrt(2.0 / fan_in);
  ad::Mat m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      m(i, j) = rng.normal(0.0, std);
    }
  }
  return m;
}

ConvWeights create_conv(ParamStore& store, const std::string& name, int cin,
                        int cout, Rng& rng) {
  ConvWeights cw;
  cw.w = store.create(name + ".w", he_init(9 * cin, cout, 9 * cin, rng));
  cw.b = store.create(name + ".b", ad::Mat::Zero(1, cout));
  return cw;
}

ConvWeights bind_conv(const ParamStore& store, const std::string& name) {
  return {store.at(name + ".w"), store.at(name + ".b")};
}

}  // namespace

void BackboneConfig::validate() const {
  if (feature_dim < 8 || feature_dim % 4 != 0) {
    throw ConfigError("backbone: feature_dim must be >= 8 and divisible by 4");
  }
  if (!is_power_of_two(downsample_factor)) {
    throw ConfigError("backbone: downsample_factor must be a power of two");
  }
  if (num_conv_blocks < 0) {
    throw ConfigError("backbone: num_conv_blocks must be >= 0");
  }
}

BackboneWeights init_backbone(ParamStore& store, const BackboneConfig& config,
                              Rng& rng) {
  config.validate();
  const int d = config.feature_dim;
  BackboneWeights w;
  w.stem = create_conv(store, "backbone.stem", 3, d, rng);
  const int stages = int_log2(config.downsample_factor);
  for (int i = 0; i < stages; ++i) {
    w.downs.push_back(
        create_conv(store, "backbone.down" + std::to_string(i), d, d, rng));
  }
  for (int i = 0; i < config.num_conv_blocks; ++i) {
    const std::string base = "backbone.block" + std::to_string(i);
    w.blocks.push_back({create_conv(store, base + ".conv0", d, d, rng),
                        create_conv(store, base + ".conv1", d, d, rng)});
  }
  w.proj_w = store.create("backbone.proj.w", he_init(d, d, d, rng));
  w.proj_b = store.create("backbone.proj.b", ad::Mat::Zero(1, d));
  return w;
}

BackboneWeights bind_backbone(const ParamStore& store,
                              const BackboneConfig& config) {
  BackboneWeights w;
  w.stem = bind_conv(store, "backbone.stem");
  const int stages = int_log2(config.downsample_factor);
  for (int i = 0; i < stages; ++i) {
    w.downs.push_back(bind_conv(store, "backbone.down" + std::to_string(i)));
  }
  for (int i = 0; i < config.num_conv_blocks; ++i) {
    const std::string base = "backbone.block" + std::to_string(i);
    w.blocks.push_back(
        {bind_conv(store, base + ".conv0"), bind_conv(store, base + ".conv1")});
  }
  w.proj_w = store.at("backbone.proj.w");
  w.proj_b = store.at("backbone.proj.b");
  return w;
}

Image upsample_for_stride(const Image& frame, int stride,
                          int downsample_factor) {
  if (stride != 1 && stride != 2 && stride != 4) {
    throw ConfigError("upsample_for_stride: unsupported stride " +
                      std::to_string(stride));
  }
  if (downsample_factor % stride != 0) {
    throw ConfigError("upsample_for_stride: stride does not divide c");
  }
  const int factor = downsample_factor / stride;
  if (factor == 1) return frame;
  return resize_bilinear(frame, frame.height * factor, frame.width * factor);
}

Eigen::MatrixXd positional_encoding(const CoordinateGrid& grid,
                                    int feature_dim, double scale) {
  if (feature_dim % 4 != 0) {
    throw ConfigError("positional_encoding: feature_dim must be divisible by 4");
  }
  const int n = grid.cells();
  const int per_axis = feature_dim / 2;
  const int num_freq = per_axis / 2;
  constexpr double kLambdaMin = 2.0;
  constexpr double kLambdaMax = 512.0;
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  Eigen::VectorXd omega(num_freq);
  for (int k = 0; k < num_freq; ++k) {
    const double t = num_freq == 1 ? 1.0 : static_cast<double>(k) / (num_freq - 1);
    const double lambda = kLambdaMin * std::pow(kLambdaMax / kLambdaMin, t);
    omega(k) = kTwoPi / lambda;
  }
  Eigen::MatrixXd pe(n, feature_dim);
  for (int i = 0; i < n; ++i) {
    const double x = grid.coords(i, 0);
    const double y = grid.coords(i, 1);
    for (int k = 0; k < num_freq; ++k) {
      pe(i, 2 * k) = std::sin(x * omega(k)) * scale;
      pe(i, 2 * k + 1) = std::cos(x * omega(k)) * scale;
      pe(i, per_axis + 2 * k) = std::sin(y * omega(k)) * scale;
      pe(i, per_axis + 2 * k + 1) = std::cos(y * omega(k)) * scale;
    }
  }
  return pe;
}

FeatureGrid extract_features(const Image& upsampled_frame,
                             const BackboneConfig& config,
                             const BackboneWeights& weights,
                             int sampling_stride) {
  config.validate();
  const int c = config.downsample_factor;
  const int h = upsampled_frame.height;
  const int w = upsampled_frame.width;
  if (upsampled_frame.channels != 3) {
    throw DimensionError("extract_features: frame must have 3 channels");
  }
  if (h % c != 0 || w % c != 0) {
    throw DimensionError("extract_features: frame size not divisible by c");
  }
  const int factor = c / sampling_stride;
  if (sampling_stride <= 0 || c % sampling_stride != 0 || h % factor != 0 ||
      w % factor != 0) {
    throw DimensionError("extract_features: inconsistent sampling stride");
  }

  ad::Mat x_in(static_cast<Eigen::Index>(h) * w, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < 3; ++ch) {
        x_in(static_cast<Eigen::Index>(y) * w + x, ch) =
            upsampled_frame.at(y, x, ch);
      }
    }
  }

  ad::Var x = ad::Var::constant(std::move(x_in));
  x = ad::gelu(ad::conv3x3(x, weights.stem.w, weights.stem.b, h, w, 1));
  int ch_h = h;
  int ch_w = w;
  for (const ConvWeights& down : weights.downs) {
    x = ad::gelu(ad::conv3x3(x, down.w, down.b, ch_h, ch_w, 2));
    ch_h = (ch_h - 1) / 2 + 1;
    ch_w = (ch_w - 1) / 2 + 1;
  }
  for (const auto& block : weights.blocks) {
    ad::Var y = ad::conv3x3(ad::gelu(x), block[0].w, block[0].b, ch_h, ch_w, 1);
    y = ad::conv3x3(ad::gelu(y), block[1].w, block[1].b, ch_h, ch_w, 1);
    x = ad::add(x, y);
  }
  x = ad::linear(x, weights.proj_w, weights.proj_b);

  FeatureGrid fg;
  fg.grid_rows = ch_h;
  fg.grid_cols = ch_w;
  fg.source_height = h / factor;
  fg.source_width = w / factor;
  fg.effective_stride = sampling_stride;
  const Eigen::MatrixXd pe = positional_encoding(
      fg.grid(), config.feature_dim, config.positional_encoding_scale);
  fg.features = ad::add_const(x, pe);
  return fg;
}

}  // namespace gmrw
