#include "gmrw/matcher.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "gmrw/errors.hpp"

namespace gmrw {

namespace {

ad::Mat xavier_init(int rows, int cols, Rng& rng) {
  const double std = std::sqrt(2.0 / (rows + cols));
  ad::Mat m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      m(i, j) = rng.normal(0.0, std);
    }
  }
  return m;
}

AttentionWeights create_attention(ParamStore& store, const std::string& base,
                                  int d, Rng& rng) {
  AttentionWeights w;
  w.ln_g = store.create(base + ".ln.g", ad::Mat::Ones(1, d));
  w.ln_b = store.create(base + ".ln.b", ad::Mat::Zero(1, d));
  w.wq = store.create(base + ".wq", xavier_init(d, d, rng));
  w.bq = store.create(base + ".bq", ad::Mat::Zero(1, d));
  w.wk = store.create(base + ".wk", xavier_init(d, d, rng));
  w.bk = store.create(base + ".bk", ad::Mat::Zero(1, d));
  w.wv = store.create(base + ".wv", xavier_init(d, d, rng));
  w.bv = store.create(base + ".bv", ad::Mat::Zero(1, d));
  w.wo = store.create(base + ".wo", xavier_init(d, d, rng));
  w.bo = store.create(base + ".bo", ad::Mat::Zero(1, d));
  return w;
}

AttentionWeights bind_attention(const ParamStore& store,
                                const std::string& base) {
  AttentionWeights w;
  w.ln_g = store.at(base + ".ln.g");
  w.ln_b = store.at(base + ".ln.b");
  w.wq = store.at(base + ".wq");
  w.bq = store.at(base + ".bq");
  w.wk = store.at(base + ".wk");
  w.bk = store.at(base + ".bk");
  w.wv = store.at(base + ".wv");
  w.bv = store.at(base + ".bv");
  w.wo = store.at(base + ".wo");
  w.bo = store.at(base + ".bo");
  return w;
}

FfnWeights create_ffn(ParamStore& store, const std::string& base, int d,
                      int hidden, Rng& rng) {
  FfnWeights w;
  w.ln_g = store.create(base + ".ln.g", ad::Mat::Ones(1, d));
  w.ln_b = store.create(base + ".ln.b", ad::Mat::Zero(1, d));
  w.w1 = store.create(base + ".w1", xavier_init(d, hidden, rng));
  w.b1 = store.create(base + ".b1", ad::Mat::Zero(1, hidden));
  w.w2 = store.create(base + ".w2", xavier_init(hidden, d, rng));
  w.b2 = store.create(base + ".b2", ad::Mat::Zero(1, d));
  return w;
}

FfnWeights bind_ffn(const ParamStore& store, const std::string& base) {
  FfnWeights w;
  w.ln_g = store.at(base + ".ln.g");
  w.ln_b = store.at(base + ".ln.b");
  w.w1 = store.at(base + ".w1");
  w.b1 = store.at(base + ".b1");
  w.w2 = store.at(base + ".w2");
  w.b2 = store.at(base + ".b2");
  return w;
}

// Additive attention mask partitioning the grid into window x window tiles,
// optionally shifted by half a window. Entries outside a tile get -1e30.
ad::Mat window_mask(int rows, int cols, int window, int shift) {
  const int n = rows * cols;
  auto tile_of = [&](int r, int q) {
    const int tr = (r + shift) / window;
    const int tq = (q + shift) / window;
    return tr * ((cols + window - 1) / window + 1) + tq;
  };
  Eigen::VectorXi tile(n);
  for (int r = 0; r < rows; ++r) {
    for (int q = 0; q < cols; ++q) tile(r * cols + q) = tile_of(r, q);
  }
  ad::Mat mask = ad::Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (tile(i) != tile(j)) mask(i, j) = -1e30;
    }
  }
  return mask;
}

ad::Var attention(const ad::Var& query_src, const ad::Var& kv_src,
                  const AttentionWeights& w, int num_heads,
                  const ad::Mat* mask) {
  ad::Var qn = ad::layer_norm(query_src, w.ln_g, w.ln_b);
  ad::Var kn = query_src.node() == kv_src.node()
                   ? qn
                   : ad::layer_norm(kv_src, w.ln_g, w.ln_b);
  ad::Var q = ad::linear(qn, w.wq, w.bq);
  ad::Var k = ad::linear(kn, w.wk, w.bk);
  ad::Var v = ad::linear(kn, w.wv, w.bv);
  const int d = static_cast<int>(q.cols());
  const int dh = d / num_heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<ad::Var> heads;
  heads.reserve(num_heads);
  for (int h = 0; h < num_heads; ++h) {
    ad::Var qh = num_heads == 1 ? q : ad::slice_cols(q, h * dh, dh);
    ad::Var kh = num_heads == 1 ? k : ad::slice_cols(k, h * dh, dh);
    ad::Var vh = num_heads == 1 ? v : ad::slice_cols(v, h * dh, dh);
    ad::Var scores = ad::scale(ad::matmul_nt(qh, kh), inv_sqrt);
    ad::Var probs =
        mask ? ad::row_softmax_masked(scores, *mask) : ad::row_softmax(scores);
    heads.push_back(ad::matmul(probs, vh));
  }
  ad::Var merged = num_heads == 1 ? heads[0] : ad::concat_cols(heads);
  return ad::linear(merged, w.wo, w.bo);
}

ad::Var ffn_forward(const ad::Var& x, const FfnWeights& w) {
  ad::Var h = ad::layer_norm(x, w.ln_g, w.ln_b);
  h = ad::gelu(ad::linear(h, w.w1, w.b1));
  return ad::linear(h, w.w2, w.b2);
}

}  // namespace

double MatcherConfig::temperature(int feature_dim) const {
  return std::sqrt(static_cast<double>(feature_dim));
}

void MatcherConfig::validate(int feature_dim) const {
  if (num_layers < 1) throw ConfigError("matcher: num_layers must be >= 1");
  if (num_heads < 1 || feature_dim % num_heads != 0) {
    throw ConfigError("matcher: num_heads must divide feature_dim");
  }
  if (ffn_multiplier < 1) throw ConfigError("matcher: ffn_multiplier >= 1");
  if (use_shifted_windows && window_size < 1) {
    throw ConfigError("matcher: window_size must be >= 1");
  }
}

MatcherWeights init_matcher(ParamStore& store, const MatcherConfig& config,
                            int feature_dim, Rng& rng) {
  config.validate(feature_dim);
  MatcherWeights w;
  const int hidden = feature_dim * config.ffn_multiplier;
  for (int l = 0; l < config.num_layers; ++l) {
    const std::string base = "matcher.layer" + std::to_string(l);
    MatcherLayerWeights layer;
    layer.self_attn = create_attention(store, base + ".self", feature_dim, rng);
    layer.cross_attn =
        create_attention(store, base + ".cross", feature_dim, rng);
    layer.ffn = create_ffn(store, base + ".ffn", feature_dim, hidden, rng);
    w.layers.push_back(std::move(layer));
  }
  return w;
}

MatcherWeights bind_matcher(const ParamStore& store,
                            const MatcherConfig& config, int feature_dim) {
  config.validate(feature_dim);
  MatcherWeights w;
  for (int l = 0; l < config.num_layers; ++l) {
    const std::string base = "matcher.layer" + std::to_string(l);
    MatcherLayerWeights layer;
    layer.self_attn = bind_attention(store, base + ".self");
    layer.cross_attn = bind_attention(store, base + ".cross");
    layer.ffn = bind_ffn(store, base + ".ffn");
    w.layers.push_back(std::move(layer));
  }
  return w;
}

CorrelationFeatures correlate(const FeatureGrid& a, const FeatureGrid& b,
                              const MatcherConfig& config,
                              const MatcherWeights& weights) {
  if (a.grid_rows != b.grid_rows || a.grid_cols != b.grid_cols ||
      a.features.cols() != b.features.cols()) {
    throw DimensionError("correlate: feature grids differ in shape");
  }
  ad::Mat mask_even, mask_odd;
  const ad::Mat* masks[2] = {nullptr, nullptr};
  if (config.use_shifted_windows) {
    mask_even = window_mask(a.grid_rows, a.grid_cols, config.window_size, 0);
    mask_odd = window_mask(a.grid_rows, a.grid_cols, config.window_size,
                           config.window_size / 2);
    masks[0] = &mask_even;
    masks[1] = &mask_odd;
  }

  ad::Var xa = a.features;
  ad::Var xb = b.features;
  for (int l = 0; l < config.num_layers; ++l) {
    const MatcherLayerWeights& lw = weights.layers[l];
    const ad::Mat* mask = config.use_shifted_windows ? masks[l % 2] : nullptr;
    xa = ad::add(xa, attention(xa, xa, lw.self_attn, config.num_heads, mask));
    xb = ad::add(xb, attention(xb, xb, lw.self_attn, config.num_heads, mask));
    // Both cross updates read the pre-update features, keeping the pass
    // symmetric under swapping the inputs.
    ad::Var ca = attention(xa, xb, lw.cross_attn, config.num_heads, mask);
    ad::Var cb = attention(xb, xa, lw.cross_attn, config.num_heads, mask);
    xa = ad::add(xa, ca);
    xb = ad::add(xb, cb);
    xa = ad::add(xa, ffn_forward(xa, lw.ffn));
    xb = ad::add(xb, ffn_forward(xb, lw.ffn));
  }
  return {xa, xb, a.grid_rows, a.grid_cols};
}

ad::Var transition_probs(const ad::Var& f_from, const ad::Var& f_to,
                         double tau) {
  if (tau <= 0.0) throw RangeError("transition_probs: tau must be > 0");
  if (f_from.cols() != f_to.cols()) {
    throw DimensionError("transition_probs: feature dims differ");
  }
  if (!f_from.value().allFinite() || !f_to.value().allFinite()) {
    throw NumericError("transition_probs: non-finite features");
  }
  return ad::row_softmax(ad::scale(ad::matmul_nt(f_from, f_to), 1.0 / tau));
}

void TransitionMatrix::validate() const {
  if (probs.rows() != source_rows * source_cols ||
      probs.cols() != target_rows * target_cols) {
    throw DimensionError("TransitionMatrix: grid shapes inconsistent");
  }
  if (!probs.allFinite()) {
    throw NumericError("TransitionMatrix: non-finite entries");
  }
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
      const double p = probs(i, j);
      if (p < 0.0 || p > 1.0 + 1e-9) {
        throw RangeError("TransitionMatrix: entry outside [0,1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-5) {
      throw RangeError("TransitionMatrix: row " + std::to_string(i) +
                       " sums to " + std::to_string(sum));
    }
  }
}

namespace {

TransitionMatrix make_transition(const ad::Var& f_from, const ad::Var& f_to,
                                 double tau, int rows, int cols) {
  ad::NoGradGuard guard;
  TransitionMatrix tm;
  tm.probs = transition_probs(f_from, f_to, tau).value();
  tm.source_rows = rows;
  tm.source_cols = cols;
  tm.target_rows = rows;
  tm.target_cols = cols;
  tm.validate();
  return tm;
}

}  // namespace

TransitionMatrix transition_matrix(const CorrelationFeatures& corr,
                                   double tau) {
  return make_transition(corr.f_t, corr.f_t1, tau, corr.grid_rows,
                         corr.grid_cols);
}

TransitionMatrix transition_matrix_reverse(const CorrelationFeatures& corr,
                                           double tau) {
  return make_transition(corr.f_t1, corr.f_t, tau, corr.grid_rows,
                         corr.grid_cols);
}

TransitionMatrix chain(const TransitionMatrix& a, const TransitionMatrix& b) {
  if (a.target_rows != b.source_rows || a.target_cols != b.source_cols) {
    throw DimensionError("chain: target grid of a != source grid of b");
  }
  TransitionMatrix out;
  out.probs = a.probs * b.probs;
  out.source_rows = a.source_rows;
  out.source_cols = a.source_cols;
  out.target_rows = b.target_rows;
  out.target_cols = b.target_cols;
  return out;
}

}  // namespace gmrw
