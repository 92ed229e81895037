#include "gmrw/train.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include "gmrw/errors.hpp"

namespace gmrw {

void AdamOptimizer::step(ParamStore& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, t_);
  const double bc2 = 1.0 - std::pow(config_.beta2, t_);
  for (auto& [name, var] : params.items()) {
    const ad::Mat& g = var.grad();
    auto [it, inserted] = slots_.try_emplace(name);
    Slot& slot = it->second;
    if (inserted) {
      slot.m = ad::Mat::Zero(g.rows(), g.cols());
      slot.v = ad::Mat::Zero(g.rows(), g.cols());
    }
    slot.m = config_.beta1 * slot.m + (1.0 - config_.beta1) * g;
    slot.v = config_.beta2 * slot.v +
             (1.0 - config_.beta2) * g.cwiseProduct(g);
    const ad::Mat m_hat = slot.m / bc1;
    const ad::Mat v_hat = slot.v / bc2;
    var.value() -=
        config_.learning_rate *
        (m_hat.array() / (v_hat.array().sqrt() + config_.epsilon)).matrix();
    var.zero_grad();
  }
}

SampleLoss palindrome_loss(const GmrwModel& model,
                           const PalindromeSample& sample,
                           const ObjectiveConfig& objective,
                           int train_stride) {
  const Image& first = sample.frames[0];
  const FeatureGrid f1 = model.features_for_stride(first, train_stride);
  const FeatureGrid f2 = model.features_for_stride(sample.frames[1], train_stride);
  const FeatureGrid f3 = model.features_for_stride(sample.frames[2], train_stride);
  const double tau = model.temperature();

  const CorrelationFeatures fwd_pair =
      correlate(f1, f2, model.config().matcher, model.matcher_weights());
  const CorrelationFeatures bwd_pair =
      correlate(f2, f3, model.config().matcher, model.matcher_weights());

  const ad::Var a_fwd = transition_probs(fwd_pair.f_t, fwd_pair.f_t1, tau);
  const ad::Var a_bwd = transition_probs(bwd_pair.f_t, bwd_pair.f_t1, tau);
  const ad::Var chained = ad::matmul(a_fwd, a_bwd);

  const ad::Var crw = crw_loss(chained, sample.label, objective.ce_epsilon);

  SampleLoss out;
  if (objective.use_smoothness) {
    const CoordinateGrid grid =
        grid_coordinates(first.height, first.width, train_stride);
    const ad::Var flow = expected_flow(a_fwd, grid);
    const Image small = downsample_block_mean(first, train_stride);
    const ad::Var smooth = smoothness_loss(flow, small, objective.lambda_color,
                                           grid.rows, grid.cols);
    out.total = total_loss(crw, smooth, objective);
    out.report = make_loss_report(crw.item(), smooth.item(), objective,
                                  sample.label.valid_fraction());
  } else {
    out.total = crw;
    out.report = make_loss_report(crw.item(), 0.0, objective,
                                  sample.label.valid_fraction());
  }
  return out;
}

TrainStats run_training(const RunConfig& config) {
  config.validate();
  ModelConfig model_config{config.backbone, config.matcher};
  Rng master(config.seed);
  Rng init_rng = master.fork(1);
  Rng data_rng = master.fork(2);

  GmrwModel model(model_config, init_rng.next_u64());

  std::vector<VideoClip> pool;
  if (config.data.source == "sprites") {
    pool.reserve(config.data.clip_pool);
    for (int i = 0; i < config.data.clip_pool; ++i) {
      SpriteSceneConfig scene = config.data.sprites;
      scene.seed = Rng(config.seed).fork(100 + i).next_u64();
      pool.push_back(generate_sprite_clip(scene).clip);
    }
  } else {
    pool.push_back(load_frame_directory(
        config.data.frames_dir,
        {config.data.sprites.canvas_height, config.data.sprites.canvas_width}));
  }

  std::ofstream log(config.io.loss_log_path, std::ios::trunc);
  if (!log) {
    throw IoError("run_training: cannot open loss log " +
                  config.io.loss_log_path);
  }
  log << "step\tcrw\tsmooth\ttotal\tvalid_row_fraction\n";

  if (!config.io.effective_config_path.empty()) {
    save_run_config(config.io.effective_config_path, config);
  }

  AdamOptimizer optimizer(config.optimizer);
  const int window = std::max(1, std::min(50, config.optimizer.steps / 4));
  double first_sum = 0.0;
  double last_sum = 0.0;
  int first_count = 0;
  int last_count = 0;

  for (int step = 0; step < config.optimizer.steps; ++step) {
    const std::vector<PalindromeSample> batch = make_training_batch(
        pool, config.optimizer.batch_size, config.data.frame_gap_range,
        data_rng, config.augment, config.optimizer.train_stride);

    ad::Var batch_total;
    double crw_sum = 0.0, smooth_sum = 0.0, total_sum = 0.0, valid_sum = 0.0;
    for (const PalindromeSample& sample : batch) {
      SampleLoss loss = palindrome_loss(model, sample, config.objective,
                                        config.optimizer.train_stride);
      crw_sum += loss.report.crw;
      smooth_sum += loss.report.smooth;
      total_sum += loss.report.total;
      valid_sum += loss.report.valid_row_fraction;
      batch_total = batch_total.defined() ? ad::add(batch_total, loss.total)
                                          : loss.total;
    }
    const double inv = 1.0 / batch.size();
    batch_total = ad::scale(batch_total, inv);
    const double crw_mean = crw_sum * inv;
    const double smooth_mean = smooth_sum * inv;
    const double total_mean = total_sum * inv;

    if (!std::isfinite(total_mean)) {
      throw NumericError("run_training: non-finite loss at step " +
                         std::to_string(step) + " (crw=" +
                         std::to_string(crw_mean) + ", smooth=" +
                         std::to_string(smooth_mean) + ")");
    }

    ad::backward(batch_total);
    optimizer.step(model.params());

    log << step << '\t' << crw_mean << '\t' << smooth_mean << '\t'
        << total_mean << '\t' << valid_sum * inv << '\n';

    if (step < window) {
      first_sum += crw_mean;
      ++first_count;
    }
    if (step >= config.optimizer.steps - window) {
      last_sum += crw_mean;
      ++last_count;
    }
    if (config.io.checkpoint_every > 0 &&
        (step + 1) % config.io.checkpoint_every == 0) {
      model.save_checkpoint(config.io.checkpoint_path);
    }
  }
  model.save_checkpoint(config.io.checkpoint_path);

  TrainStats stats;
  stats.steps = config.optimizer.steps;
  stats.first_window_crw = first_count ? first_sum / first_count : 0.0;
  stats.last_window_crw = last_count ? last_sum / last_count : 0.0;
  stats.checkpoint_path = config.io.checkpoint_path;
  return stats;
}

}  // namespace gmrw
