#include "gmrw/objective.hpp"

#include <cmath>

#include "gmrw/errors.hpp"

namespace gmrw {

void ObjectiveConfig::validate() const {
  if (lambda_smooth < 0.0) throw ConfigError("objective: lambda_smooth < 0");
  if (!(lambda_color > 0.0)) throw ConfigError("objective: lambda_color <= 0");
  if (!(huber_delta > 0.0)) throw ConfigError("objective: huber_delta <= 0");
  if (!(ce_epsilon > 0.0)) throw ConfigError("objective: ce_epsilon <= 0");
}

ad::Var crw_loss(const ad::Var& chained, const WarpedLabel& label,
                 double eps) {
  if (chained.rows() != label.target.rows() ||
      chained.cols() != label.target.cols()) {
    throw DimensionError("crw_loss: chained matrix and label shapes differ");
  }
  return ad::cross_entropy_rows(chained, label.target, label.valid, eps);
}

ad::Var expected_flow(const ad::Var& transition, const CoordinateGrid& grid) {
  if (transition.rows() != grid.cells() || transition.cols() != grid.cells()) {
    throw DimensionError("expected_flow: transition does not match grid");
  }
  const Eigen::MatrixXd coords = grid.coords;
  return ad::sub_const(ad::matmul_const(transition, coords), coords);
}

MotionField expected_flow(const TransitionMatrix& transition,
                          const CoordinateGrid& grid) {
  ad::NoGradGuard guard;
  MotionField field;
  field.flow = expected_flow(ad::Var::constant(transition.probs), grid).value();
  field.grid = grid;
  return field;
}

ad::Var smoothness_loss(const ad::Var& flow, const Image& grid_image,
                        double lambda_color, int grid_rows, int grid_cols) {
  if (flow.rows() != static_cast<Eigen::Index>(grid_rows) * grid_cols) {
    throw DimensionError("smoothness_loss: flow rows != grid cells");
  }
  if (grid_image.height != grid_rows || grid_image.width != grid_cols) {
    throw DimensionError("smoothness_loss: image not at grid resolution");
  }
  if (grid_rows < 3 || grid_cols < 3) {
    throw DimensionError("smoothness_loss: grid too small for second differences");
  }
  const int k = static_cast<int>(flow.cols());
  const int n = grid_rows * grid_cols;

  // Edge weights from the channel-averaged absolute central derivative,
  // defined on the interior cells of each direction.
  ad::Mat wx = ad::Mat::Zero(n, k);
  ad::Mat wy = ad::Mat::Zero(n, k);
  for (int r = 0; r < grid_rows; ++r) {
    for (int q = 0; q < grid_cols; ++q) {
      const int i = r * grid_cols + q;
      if (q > 0 && q < grid_cols - 1) {
        double grad = 0.0;
        for (int c = 0; c < grid_image.channels; ++c) {
          grad += std::abs(
              0.5 * (grid_image.at(r, q + 1, c) - grid_image.at(r, q - 1, c)));
        }
        grad /= grid_image.channels;
        wx.row(i).setConstant(std::exp(-lambda_color * grad));
      }
      if (r > 0 && r < grid_rows - 1) {
        double grad = 0.0;
        for (int c = 0; c < grid_image.channels; ++c) {
          grad += std::abs(
              0.5 * (grid_image.at(r + 1, q, c) - grid_image.at(r - 1, q, c)));
        }
        grad /= grid_image.channels;
        wy.row(i).setConstant(std::exp(-lambda_color * grad));
      }
    }
  }

  ad::Var term_x =
      ad::weighted_sum(ad::abs(ad::second_diff_x(flow, grid_rows, grid_cols)), wx);
  ad::Var term_y =
      ad::weighted_sum(ad::abs(ad::second_diff_y(flow, grid_rows, grid_cols)), wy);
  const double count = static_cast<double>(grid_rows) * (grid_cols - 2) +
                       static_cast<double>(grid_rows - 2) * grid_cols;
  return ad::scale(ad::add(term_x, term_y), 1.0 / count);
}

ad::Var total_loss(const ad::Var& crw, const ad::Var& smooth,
                   const ObjectiveConfig& config) {
  if (!config.use_smoothness || config.lambda_smooth == 0.0) return crw;
  return ad::add(crw, ad::scale(smooth, config.lambda_smooth));
}

LossReport make_loss_report(double crw, double smooth,
                            const ObjectiveConfig& config,
                            double valid_row_fraction) {
  LossReport report;
  report.crw = crw;
  report.smooth = config.use_smoothness ? smooth : 0.0;
  report.total = crw + (config.use_smoothness
                            ? config.lambda_smooth * report.smooth
                            : 0.0);
  report.valid_row_fraction = valid_row_fraction;
  if (!std::isfinite(report.total)) {
    throw NumericError("loss report: non-finite total loss");
  }
  return report;
}

ad::Var supervised_loss(const ad::Var& pred_flow,
                        const Eigen::MatrixXd& gt_flow, double delta) {
  return ad::huber_norm_loss(pred_flow, gt_flow, delta);
}

}  // namespace gmrw
