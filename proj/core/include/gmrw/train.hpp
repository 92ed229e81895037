#pragma once

#include <string>

#include "gmrw/config.hpp"
#include "gmrw/model.hpp"
#include "gmrw/objective.hpp"
#include "gmrw/params.hpp"

namespace gmrw {

// Adaptive-moment gradient descent with bias correction.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(const OptimizerConfig& config) : config_(config) {}

  // Applies the accumulated gradients and zeroes them.
  void step(ParamStore& params);

 private:
  struct Slot {
    ad::Mat m;
    ad::Mat v;
  };
  OptimizerConfig config_;
  std::map<std::string, Slot> slots_;
  long t_ = 0;
};

// Loss of one palindrome sample through the full pipeline: features for the
// three frames, two correlation passes, chained transition matrix, warped
// cycle cross-entropy and (optionally) the edge-aware smoothness of the
// forward-pair flow.
struct SampleLoss {
  ad::Var total;
  LossReport report;
};

SampleLoss palindrome_loss(const GmrwModel& model,
                           const PalindromeSample& sample,
                           const ObjectiveConfig& objective, int train_stride);

struct TrainStats {
  int steps = 0;
  double first_window_crw = 0.0;  // mean crw over the first logging window
  double last_window_crw = 0.0;   // mean crw over the last logging window
  std::string checkpoint_path;
};

// Runs the optimization loop: palindrome batches, total loss, Adam step,
// periodic checkpoints, and an append-only loss log
// (step<TAB>crw<TAB>smooth<TAB>total<TAB>valid_row_fraction). Deterministic
// under a fixed seed. Throws NumericError with step diagnostics when the loss
// stops being finite.
TrainStats run_training(const RunConfig& config);

}  // namespace gmrw
