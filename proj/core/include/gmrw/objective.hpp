#pragma once

#include <Eigen/Core>

#include "gmrw/ad.hpp"
#include "gmrw/augment.hpp"
#include "gmrw/matcher.hpp"
#include "gmrw/types.hpp"

namespace gmrw {

struct ObjectiveConfig {
  double lambda_smooth = 0.1;   // weight of the smoothness term
  double lambda_color = 150.0;  // color edge sensitivity, on [0,1] intensities
  bool use_smoothness = true;
  double huber_delta = 1.0;     // grid cells, supervised variant
  double ce_epsilon = 1e-9;     // log floor in the cycle cross-entropy

  void validate() const;
};

struct LossReport {
  double crw = 0.0;
  double smooth = 0.0;
  double total = 0.0;
  double valid_row_fraction = 0.0;
};

// Per-cell expected displacement in pixels: flow = A * D - D with D the grid's
// cell-center coordinates. Canonical definition shared by training and the
// tracker.
struct MotionField {
  Eigen::Matrix<double, Eigen::Dynamic, 2> flow;  // n x 2
  CoordinateGrid grid;
};

// Mean over valid rows of the cross-entropy between the label row and the
// chained probability row, with probabilities clamped to [eps, 1] inside the
// log. Throws NumericError when every row is masked.
ad::Var crw_loss(const ad::Var& chained, const WarpedLabel& label,
                 double eps = 1e-9);

ad::Var expected_flow(const ad::Var& transition, const CoordinateGrid& grid);
MotionField expected_flow(const TransitionMatrix& transition,
                          const CoordinateGrid& grid);

// Edge-aware second-order smoothness: mean over interior cells and both
// directions of exp(-lambda_color * I_d) * |d^2 f / d d^2|, where I_d is the
// channel-averaged absolute spatial derivative of the grid-resolution image.
// Borders are excluded rather than padded.
ad::Var smoothness_loss(const ad::Var& flow, const Image& grid_image,
                        double lambda_color, int grid_rows, int grid_cols);

// total = crw + lambda_smooth * smooth (smooth ignored when disabled).
ad::Var total_loss(const ad::Var& crw, const ad::Var& smooth,
                   const ObjectiveConfig& config);

LossReport make_loss_report(double crw, double smooth,
                            const ObjectiveConfig& config,
                            double valid_row_fraction);

// Mean Huber penalty on the per-cell L2 displacement error.
ad::Var supervised_loss(const ad::Var& pred_flow,
                        const Eigen::MatrixXd& gt_flow, double delta);

}  // namespace gmrw
