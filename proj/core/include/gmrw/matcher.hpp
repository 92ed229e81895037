#pragma once

#include <vector>

#include "gmrw/ad.hpp"
#include "gmrw/backbone.hpp"
#include "gmrw/params.hpp"
#include "gmrw/rng.hpp"

namespace gmrw {

struct MatcherConfig {
  int num_layers = 6;
  int num_heads = 1;
  int ffn_multiplier = 4;
  bool use_shifted_windows = false;  // masked-attention variant, off by default
  int window_size = 8;

  // Fixed softmax normalization for the transition matrix; no learnable
  // temperature and no L2 feature normalization.
  double temperature(int feature_dim) const;
  void validate(int feature_dim) const;
};

struct AttentionWeights {
  ad::Var ln_g, ln_b;
  ad::Var wq, bq, wk, bk, wv, bv, wo, bo;
};

struct FfnWeights {
  ad::Var ln_g, ln_b;
  ad::Var w1, b1, w2, b2;
};

struct MatcherLayerWeights {
  AttentionWeights self_attn;
  AttentionWeights cross_attn;
  FfnWeights ffn;
};

struct MatcherWeights {
  std::vector<MatcherLayerWeights> layers;
};

MatcherWeights init_matcher(ParamStore& store, const MatcherConfig& config,
                            int feature_dim, Rng& rng);
MatcherWeights bind_matcher(const ParamStore& store,
                            const MatcherConfig& config, int feature_dim);

// Correlated features for one frame pair; both come out of the same forward
// pass through the stacked self-/cross-attention layers (shared weights, so
// swapping the inputs swaps the outputs exactly).
struct CorrelationFeatures {
  ad::Var f_t;   // n x d
  ad::Var f_t1;  // n x d
  int grid_rows = 0;
  int grid_cols = 0;
};

CorrelationFeatures correlate(const FeatureGrid& a, const FeatureGrid& b,
                              const MatcherConfig& config,
                              const MatcherWeights& weights);

// Canonical transition formula: row-softmax(f_from * f_to^T / tau). Used by
// the training graph and, under NoGradGuard, by the tracker.
ad::Var transition_probs(const ad::Var& f_from, const ad::Var& f_to,
                         double tau);

// Row-stochastic matching probabilities between two feature grids.
struct TransitionMatrix {
  Eigen::MatrixXd probs;  // n_source x n_target
  int source_rows = 0, source_cols = 0;
  int target_rows = 0, target_cols = 0;

  void validate() const;  // finite, entries in [0,1], rows sum to 1 (1e-5)
};

// Forward (f_t -> f_t1) and reverse (f_t1 -> f_t) matrices from one pass.
TransitionMatrix transition_matrix(const CorrelationFeatures& corr, double tau);
TransitionMatrix transition_matrix_reverse(const CorrelationFeatures& corr,
                                           double tau);

// Random-walk composition a then b; stays row-stochastic up to rounding.
TransitionMatrix chain(const TransitionMatrix& a, const TransitionMatrix& b);

}  // namespace gmrw
