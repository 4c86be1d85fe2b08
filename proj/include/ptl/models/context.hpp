#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "ptl/numkit/dense_array.hpp"
#include "ptl/numkit/mlp.hpp"
#include "ptl/numkit/rng.hpp"

namespace ptl::models {

using numkit::DenseArray;
using numkit::Mlp;

struct ModelConfig {
  std::size_t state_dim = 4;
  std::size_t action_dim = 2;
  std::size_t history_k = 10;
  std::size_t future_m = 10;
  std::size_t context_dim = 8;
  std::vector<std::size_t> encoder_hidden{128, 64, 32};
  std::vector<std::size_t> forward_hidden{128, 128};
  std::vector<std::size_t> translator_hidden{128, 128};
  std::vector<std::size_t> reward_hidden{64, 64};
  /// Multiplies raw state deltas in encoder inputs and forward-model targets.
  double delta_scale = 20.0;
  /// Multiplies the states fed to F, H and R; empty leaves them raw.
  /// Shrinks positions (about +-5), which enter neither dynamics nor reward.
  std::vector<double> state_input_scale{0.2, 0.2, 1.0, 1.0};
  double logvar_min = -5.0;
  double logvar_max = 2.0;
  double margin = 1.0;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;

  [[nodiscard]] std::size_t window_width() const { return history_k * (state_dim + action_dim); }
};

[[nodiscard]] Mlp make_encoder(const ModelConfig& cfg, numkit::Rng& rng);
[[nodiscard]] Mlp make_forward_model(const ModelConfig& cfg, numkit::Rng& rng);
[[nodiscard]] Mlp make_translator(const ModelConfig& cfg, numkit::Rng& rng);
[[nodiscard]] Mlp make_reward_predictor(const ModelConfig& cfg, numkit::Rng& rng);

/// Copy of `states` [B, D] with column d multiplied by state_input_scale[d].
[[nodiscard]] DenseArray scale_states(const ModelConfig& cfg, const DenseArray& states);

/// Copy of `windows` [B, K(D+A)] with every state-delta entry scaled by delta_scale.
[[nodiscard]] DenseArray scale_windows(const ModelConfig& cfg, const DenseArray& windows);

/// z = C(window) for a batch of raw windows; caches for C.backward.
DenseArray encode_context(Mlp& encoder, const ModelConfig& cfg, const DenseArray& windows);
/// Same without touching the cache.
[[nodiscard]] DenseArray encode_context_const(const Mlp& encoder, const ModelConfig& cfg, const DenseArray& windows);

/// PETS-style soft clamp of a raw log-variance into (logvar_min, logvar_max).
[[nodiscard]] double soft_clamp_logvar(const ModelConfig& cfg, double raw);
[[nodiscard]] double soft_clamp_logvar_derivative(const ModelConfig& cfg, double raw);

/// Gaussian NLL of one vector: 0.5 sum_d [(y - mu)^2 exp(-lv) + lv + ln 2pi].
[[nodiscard]] double gaussian_nll(std::span<const double> mean, std::span<const double> logvar,
                                  std::span<const double> target);

struct NllTerms {
  double total = 0.0;   // summed over rows
  DenseArray d_output;  // dTotal / dF-output
};

/// NLL of targets [N, D] under forward-model outputs [N, 2D] (mean, raw log-var).
[[nodiscard]] NllTerms forward_output_nll(const ModelConfig& cfg, const DenseArray& output, const DenseArray& target);

/// Splits forward-model outputs [N, 2D] into mean and clamped log-variance.
[[nodiscard]] std::pair<DenseArray, DenseArray> forward_mean_logvar(const ModelConfig& cfg, const DenseArray& output);

/// Segments of M consecutive transitions with the history window that precedes the first.
/// Row b*M + m of states/actions/next_states is step m of segment b.
struct SegmentBatch {
  DenseArray windows;
  DenseArray states;
  DenseArray actions;
  DenseArray next_states;
  std::vector<std::size_t> task_labels;  // one per segment
  std::size_t m = 1;

  [[nodiscard]] std::size_t segments() const { return windows.rows(); }
};

struct ContrastivePairs {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

/// floor(B/2) disjoint pairs from a random permutation of [0, B).
[[nodiscard]] ContrastivePairs draw_pairs(std::size_t batch, numkit::Rng& rng);

struct ContrastiveResult {
  double loss = 0.0;
  DenseArray z_gradient;
};

/// Mean over pairs of 1[same] |z1-z2|^2 + 1[diff] max(0, margin - |z1-z2|).
[[nodiscard]] ContrastiveResult contrastive_loss(const DenseArray& z, const std::vector<std::size_t>& labels,
                                                 double margin, const ContrastivePairs& pairs);

struct ContextLossResult {
  double forward_loss = 0.0;
  double contrastive_loss = 0.0;
  double total = 0.0;
  std::vector<DenseArray> encoder_grads;
  std::vector<DenseArray> forward_grads;
};

/// L_forw (teacher forced, summed over the M steps, mean over segments) plus
/// L_cont on the segments' context vectors when `pairs` is given.
ContextLossResult context_loss(Mlp& encoder, Mlp& forward, const ModelConfig& cfg, const SegmentBatch& batch,
                               const ContrastivePairs* pairs);

/// Single transitions from one or more tasks.
struct TransitionBatch {
  DenseArray states;
  DenseArray actions;
  DenseArray next_states;
  DenseArray rewards;  // [B, 1]

  [[nodiscard]] std::size_t size() const { return states.rows(); }
};

/// H(s, a, z_src, z_tgt) for a batch; z arrays are [B, Z].
[[nodiscard]] DenseArray translate_action(const Mlp& translator, const ModelConfig& cfg, const DenseArray& states,
                                          const DenseArray& actions, const DenseArray& z_src, const DenseArray& z_tgt);

struct TranslationLossResult {
  double loss = 0.0;
  double nll = 0.0;         // mean NLL term
  double reward_gap = 0.0;  // mean |r - R| term, 0 without a reward model
  std::vector<DenseArray> translator_grads;
};

/// L_trans: mean over the batch of -log F(s' - s | s, H(s, a, z_src, z_tgt), z_tgt).
/// Only H receives gradients; F's parameters are read but never written.
TranslationLossResult translation_loss(Mlp& translator, Mlp& forward, const ModelConfig& cfg,
                                       const TransitionBatch& batch, const DenseArray& z_src, const DenseArray& z_tgt);

/// L_trans,r = mean |r - R(s, a~, z_tgt)| + lambda * L_trans.
TranslationLossResult translation_loss_with_reward(Mlp& translator, Mlp& forward, Mlp& reward_model,
                                                   const ModelConfig& cfg, const TransitionBatch& batch,
                                                   const DenseArray& z_src, const DenseArray& z_tgt, double lambda);

struct RewardLossResult {
  double loss = 0.0;
  std::vector<DenseArray> grads;
};

/// Mean squared error of R(s, a, z) against the batch rewards.
RewardLossResult reward_model_loss(Mlp& reward_model, const ModelConfig& cfg, const TransitionBatch& batch,
                                   const DenseArray& z);

/// Mean of C over min(n, pool_size) windows drawn without replacement.
/// Throws StateError for an empty pool.
[[nodiscard]] std::vector<double> task_feature(const Mlp& encoder, const ModelConfig& cfg, std::size_t pool_size,
                                               const std::function<std::span<const double>(std::size_t)>& window_at,
                                               std::size_t n_samples, numkit::Rng& rng);

/// Repeats a single row vector B times.
[[nodiscard]] DenseArray tile_rows(std::span<const double> row, std::size_t count);

}  // namespace ptl::models
