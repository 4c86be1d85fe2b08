#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ptl/models/context.hpp"
#include "ptl/numkit/adam.hpp"
#include "ptl/numkit/checkpoint.hpp"
#include "ptl/numkit/rng.hpp"
#include "ptl/rl/buffers.hpp"

namespace ptl::mcat {

using numkit::DenseArray;
using numkit::Mlp;

/// Training knobs for C, F, H and the optional reward model.
struct LearnerConfig {
  double context_lr = 1e-3;  // C and F
  double translator_lr = 3e-4;
  double reward_lr = 1e-3;
  std::size_t context_batch = 64;  // segments per (C, F) step
  std::size_t translator_batch = 256;
  std::size_t feature_samples = 1024;
  bool contrastive = true;
  bool reward_augmented = false;
  double reward_lambda = 10.0;
  friend bool operator==(const LearnerConfig&, const LearnerConfig&) = default;
};

/// C, F, H, R with their optimizers and the current per-task features.
class TransferModels {
 public:
  TransferModels(const models::ModelConfig& model, const LearnerConfig& learner, numkit::Rng& init);

  models::ModelConfig model;
  LearnerConfig learner;
  Mlp encoder, forward, translator, reward;
  numkit::AdamState encoder_opt, forward_opt, translator_opt, reward_opt;
  std::vector<std::vector<double>> features;

  /// Arrays named context, forward, translator, reward (+ _opt) and features/<task>.
  void save(numkit::Checkpoint& ckpt) const;
  void load(const numkit::Checkpoint& ckpt);
};

struct ContextStep {
  double forward_loss = 0.0;
  double contrastive_loss = 0.0;
};

/// One Adam step of (C, F) on L_forw (+ L_cont) over segments drawn from every
/// non-empty buffer; buffer index is the task label.
ContextStep train_context_step(TransferModels& m, const std::vector<const rl::ReplayBuffer*>& buffers,
                               numkit::Rng& rng);

struct TranslatorStep {
  double loss = 0.0;
  double reward_loss = 0.0;  // reward model MSE when reward-augmented, else 0
};

/// One Adam step of H on L_trans (or L_trans,r) with C and F frozen. Each row
/// draws an ordered pair (j, i), a transition from buffer j, and conditions on
/// features[j] -> features[i]. Requires current features.
TranslatorStep train_translator_step(TransferModels& m, const std::vector<const rl::ReplayBuffer*>& buffers,
                                     numkit::Rng& rng);

/// features[i] = mean context over up to feature_samples windows of buffer i.
void refresh_features(TransferModels& m, const std::vector<const rl::ReplayBuffer*>& buffers, numkit::Rng& rng);

/// Context vectors C(window) for a batch of windows.
[[nodiscard]] DenseArray contexts(const TransferModels& m, const DenseArray& windows);

/// H(s, a_src, z_src, z_tgt) for one state.
[[nodiscard]] std::vector<double> translate_one(const Mlp& translator, const models::ModelConfig& cfg,
                                                std::span<const double> state, std::span<const double> source_action,
                                                std::span<const double> z_src, std::span<const double> z_tgt);

/// H(s, pi(s, z_src), z_src, z_tgt); exploration noise is the caller's business.
[[nodiscard]] std::vector<double> transferred_policy_action(const Mlp& translator, const models::ModelConfig& cfg,
                                                            const Mlp& actor, std::span<const double> state,
                                                            std::span<const double> z_src,
                                                            std::span<const double> z_tgt);

struct EmbeddingSeparation {
  double within = 0.0;  // mean distance over same-task pairs
  double cross = 0.0;   // mean distance over different-task pairs
};

/// Pairwise Euclidean distances; embeddings[t] holds task t's vectors as rows.
[[nodiscard]] EmbeddingSeparation embedding_separation(const std::vector<DenseArray>& embeddings);

/// C(window) for `samples` windows drawn uniformly from each buffer.
[[nodiscard]] std::vector<DenseArray> task_embeddings(const TransferModels& m,
                                                      const std::vector<const rl::ReplayBuffer*>& buffers,
                                                      std::size_t samples, numkit::Rng& rng);

}  // namespace ptl::mcat
