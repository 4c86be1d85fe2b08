#include "ptl/mcat/learner.hpp"

#include <algorithm>
#include <cmath>

#include "ptl/errors.hpp"
#include "ptl/numkit/persist.hpp"

namespace ptl::mcat {

namespace {

DenseArray row_of(std::span<const double> v) {
  DenseArray a = DenseArray::matrix(1, v.size());
  std::copy(v.begin(), v.end(), a.row(0).begin());
  return a;
}

void append(DenseArray& dst, const DenseArray& src) {
  dst = dst.empty() ? src : numkit::concat_rows(dst, src);
}

std::vector<std::size_t> usable(const std::vector<const rl::ReplayBuffer*>& buffers, std::size_t min_size) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < buffers.size(); ++i)
    if (buffers[i] != nullptr && buffers[i]->size() >= min_size) out.push_back(i);
  return out;
}

/// Multinomial split of n draws over `k` bins.
std::vector<std::size_t> split_counts(std::size_t n, std::size_t k, numkit::Rng& rng) {
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t d = 0; d < n; ++d) ++counts[rng.index(k)];
  return counts;
}

}  // namespace

TransferModels::TransferModels(const models::ModelConfig& model_cfg, const LearnerConfig& learner_cfg,
                               numkit::Rng& init)
    : model(model_cfg), learner(learner_cfg) {
  encoder = models::make_encoder(model, init);
  forward = models::make_forward_model(model, init);
  translator = models::make_translator(model, init);
  reward = models::make_reward_predictor(model, init);
  encoder_opt = numkit::AdamState({learner.context_lr}, encoder.parameters());
  forward_opt = numkit::AdamState({learner.context_lr}, forward.parameters());
  translator_opt = numkit::AdamState({learner.translator_lr}, translator.parameters());
  reward_opt = numkit::AdamState({learner.reward_lr}, reward.parameters());
}

void TransferModels::save(numkit::Checkpoint& ckpt) const {
  numkit::save_mlp(ckpt, "context", encoder);
  numkit::save_mlp(ckpt, "forward", forward);
  numkit::save_mlp(ckpt, "translator", translator);
  numkit::save_mlp(ckpt, "reward", reward);
  numkit::save_adam(ckpt, "context_opt", encoder_opt);
  numkit::save_adam(ckpt, "forward_opt", forward_opt);
  numkit::save_adam(ckpt, "translator_opt", translator_opt);
  numkit::save_adam(ckpt, "reward_opt", reward_opt);
  ckpt.meta["feature_count"] = features.size();
  for (std::size_t i = 0; i < features.size(); ++i)
    ckpt.put("features/" + std::to_string(i), DenseArray::vector(features[i]));
}

void TransferModels::load(const numkit::Checkpoint& ckpt) {
  numkit::load_mlp(ckpt, "context", encoder);
  numkit::load_mlp(ckpt, "forward", forward);
  numkit::load_mlp(ckpt, "translator", translator);
  numkit::load_mlp(ckpt, "reward", reward);
  numkit::load_adam(ckpt, "context_opt", encoder_opt);
  numkit::load_adam(ckpt, "forward_opt", forward_opt);
  numkit::load_adam(ckpt, "translator_opt", translator_opt);
  numkit::load_adam(ckpt, "reward_opt", reward_opt);
  features.clear();
  const std::size_t n = ckpt.meta.value("feature_count", std::size_t{0});
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = ckpt.get("features/" + std::to_string(i)).values();
    features.emplace_back(v.begin(), v.end());
  }
}

ContextStep train_context_step(TransferModels& m, const std::vector<const rl::ReplayBuffer*>& buffers,
                               numkit::Rng& rng) {
  const std::size_t seg = m.model.future_m;
  const auto tasks = usable(buffers, seg);
  if (tasks.empty()) throw StateError("no buffer holds a full segment for context training");
  const auto counts = split_counts(m.learner.context_batch, tasks.size(), rng);
  models::SegmentBatch batch;
  batch.m = seg;
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    if (counts[k] == 0) continue;
    const auto& buf = *buffers[tasks[k]];
    auto part = buf.gather_segments(buf.sample_segment_starts(counts[k], seg, rng), seg, tasks[k]);
    append(batch.windows, part.windows);
    append(batch.states, part.states);
    append(batch.actions, part.actions);
    append(batch.next_states, part.next_states);
    batch.task_labels.insert(batch.task_labels.end(), part.task_labels.begin(), part.task_labels.end());
  }
  models::ContrastivePairs pairs;
  const bool contrast = m.learner.contrastive && batch.segments() >= 2;
  if (contrast) pairs = models::draw_pairs(batch.segments(), rng);
  const auto r = models::context_loss(m.encoder, m.forward, m.model, batch, contrast ? &pairs : nullptr);
  numkit::adam_step(m.encoder.parameters(), r.encoder_grads, m.encoder_opt);
  numkit::adam_step(m.forward.parameters(), r.forward_grads, m.forward_opt);
  return {r.forward_loss, r.contrastive_loss};
}

TranslatorStep train_translator_step(TransferModels& m, const std::vector<const rl::ReplayBuffer*>& buffers,
                                     numkit::Rng& rng) {
  const auto tasks = usable(buffers, 1);
  if (tasks.empty()) throw StateError("no transitions for translator training");
  for (std::size_t t : tasks)
    if (t >= m.features.size() || m.features[t].size() != m.model.context_dim)
      throw StateError("translator training needs current task features");
  const std::size_t n = tasks.size();
  const auto counts = split_counts(m.learner.translator_batch, n, rng);
  models::TransitionBatch batch;
  DenseArray z_src, z_tgt;
  for (std::size_t k = 0; k < n; ++k) {
    if (counts[k] == 0) continue;
    const std::size_t j = tasks[k];
    const auto sample = buffers[j]->gather(buffers[j]->sample_indices(counts[k], rng));
    append(batch.states, sample.states);
    append(batch.actions, sample.actions);
    append(batch.next_states, sample.next_states);
    append(batch.rewards, sample.rewards);
    DenseArray src = models::tile_rows(m.features[j], counts[k]);
    DenseArray tgt = DenseArray::matrix(counts[k], m.model.context_dim);
    for (std::size_t r = 0; r < counts[k]; ++r) {
      const auto& f = m.features[tasks[rng.index(n)]];
      std::copy(f.begin(), f.end(), tgt.row(r).begin());
    }
    append(z_src, src);
    append(z_tgt, tgt);
  }
  TranslatorStep out;
  if (m.learner.reward_augmented) {
    // R(s, a, z_j) learns the source task's reward before H is scored against it.
    const auto rm = models::reward_model_loss(m.reward, m.model, batch, z_src);
    numkit::adam_step(m.reward.parameters(), rm.grads, m.reward_opt);
    out.reward_loss = rm.loss;
    const auto r = models::translation_loss_with_reward(m.translator, m.forward, m.reward, m.model, batch, z_src,
                                                        z_tgt, m.learner.reward_lambda);
    numkit::adam_step(m.translator.parameters(), r.translator_grads, m.translator_opt);
    out.loss = r.loss;
  } else {
    const auto r = models::translation_loss(m.translator, m.forward, m.model, batch, z_src, z_tgt);
    numkit::adam_step(m.translator.parameters(), r.translator_grads, m.translator_opt);
    out.loss = r.loss;
  }
  return out;
}

void refresh_features(TransferModels& m, const std::vector<const rl::ReplayBuffer*>& buffers, numkit::Rng& rng) {
  m.features.assign(buffers.size(), {});
  for (std::size_t i = 0; i < buffers.size(); ++i) {
    if (buffers[i] == nullptr || buffers[i]->empty()) continue;
    const auto& buf = *buffers[i];
    m.features[i] = models::task_feature(
        m.encoder, m.model, buf.size(), [&](std::size_t k) { return buf.window(k); }, m.learner.feature_samples, rng);
  }
}

DenseArray contexts(const TransferModels& m, const DenseArray& windows) {
  return models::encode_context_const(m.encoder, m.model, windows);
}

std::vector<double> translate_one(const Mlp& translator, const models::ModelConfig& cfg, std::span<const double> state,
                                  std::span<const double> source_action, std::span<const double> z_src,
                                  std::span<const double> z_tgt) {
  const DenseArray a = models::translate_action(translator, cfg, row_of(state), row_of(source_action), row_of(z_src),
                                                row_of(z_tgt));
  return {a.values().begin(), a.values().end()};
}

std::vector<double> transferred_policy_action(const Mlp& translator, const models::ModelConfig& cfg, const Mlp& actor,
                                              std::span<const double> state, std::span<const double> z_src,
                                              std::span<const double> z_tgt) {
  const DenseArray s = row_of(state), z = row_of(z_src);
  const DenseArray a = actor.predict(numkit::concat_columns({&s, &z}));
  return translate_one(translator, cfg, state, a.values(), z_src, z_tgt);
}

EmbeddingSeparation embedding_separation(const std::vector<DenseArray>& embeddings) {
  double within = 0.0, cross = 0.0;
  std::size_t n_within = 0, n_cross = 0;
  for (std::size_t t = 0; t < embeddings.size(); ++t)
    for (std::size_t u = t; u < embeddings.size(); ++u) {
      const auto& a = embeddings[t];
      const auto& b = embeddings[u];
      if (a.rows() > 0 && b.rows() > 0 && a.cols() != b.cols()) throw DimensionError("embedding widths differ");
      for (std::size_t p = 0; p < a.rows(); ++p)
        for (std::size_t q = (t == u ? p + 1 : 0); q < b.rows(); ++q) {
          double ss = 0.0;
          for (std::size_t c = 0; c < a.cols(); ++c) {
            const double d = a(p, c) - b(q, c);
            ss += d * d;
          }
          if (t == u) {
            within += std::sqrt(ss);
            ++n_within;
          } else {
            cross += std::sqrt(ss);
            ++n_cross;
          }
        }
    }
  if (n_within == 0 || n_cross == 0) throw PreconditionError("need two tasks and two embeddings in some task");
  return {within / static_cast<double>(n_within), cross / static_cast<double>(n_cross)};
}

std::vector<DenseArray> task_embeddings(const TransferModels& m, const std::vector<const rl::ReplayBuffer*>& buffers,
                                        std::size_t samples, numkit::Rng& rng) {
  std::vector<DenseArray> out;
  for (const auto* b : buffers) out.push_back(contexts(m, b->gather(b->sample_indices(samples, rng)).windows));
  return out;
}

}  // namespace ptl::mcat
