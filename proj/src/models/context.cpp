#include "ptl/models/context.hpp"

#include <algorithm>
#include <cmath>

#include "ptl/errors.hpp"

namespace ptl::models {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<std::size_t> sizes(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

DenseArray scaled_deltas(const ModelConfig& cfg, const DenseArray& states, const DenseArray& next_states) {
  require_same_shape(states, next_states, "state deltas");
  DenseArray out = next_states;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = cfg.delta_scale * (next_states[k] - states[k]);
  return out;
}

void require_rows(const DenseArray& a, std::size_t rows, std::size_t cols, const char* what) {
  if (a.rows() != rows || a.cols() != cols)
    throw DimensionError(std::string(what) + ": expected [" + std::to_string(rows) + ", " + std::to_string(cols) +
                         "], got " + numkit::shape_string(a.shape()));
}

struct TranslationForward {
  DenseArray translated;
  NllTerms nll;
  DenseArray d_action;  // dNLL / d translated action, unscaled by batch size
};

TranslationForward translate_and_score(Mlp& translator, Mlp& forward, const ModelConfig& cfg,
                                       const TransitionBatch& batch, const DenseArray& z_src,
                                       const DenseArray& z_tgt) {
  const std::size_t b = batch.size();
  require_rows(batch.actions, b, cfg.action_dim, "translation actions");
  require_rows(z_src, b, cfg.context_dim, "z_src");
  require_rows(z_tgt, b, cfg.context_dim, "z_tgt");
  TranslationForward out;
  const DenseArray ms = scale_states(cfg, batch.states);
  out.translated = translator.forward(numkit::concat_columns({&ms, &batch.actions, &z_src, &z_tgt}));
  const DenseArray f_in = numkit::concat_columns({&ms, &out.translated, &z_tgt});
  const DenseArray f_out = forward.forward(f_in);
  out.nll = forward_output_nll(cfg, f_out, scaled_deltas(cfg, batch.states, batch.next_states));
  const auto g = forward.backward(out.nll.d_output);
  out.d_action = numkit::slice_columns(g.input, cfg.state_dim, cfg.action_dim);
  return out;
}

}  // namespace

Mlp make_encoder(const ModelConfig& cfg, numkit::Rng& rng) {
  return Mlp({sizes(cfg.window_width(), cfg.encoder_hidden, cfg.context_dim), numkit::Activation::swish,
              numkit::Activation::identity},
             rng);
}

Mlp make_forward_model(const ModelConfig& cfg, numkit::Rng& rng) {
  return Mlp({sizes(cfg.state_dim + cfg.action_dim + cfg.context_dim, cfg.forward_hidden, 2 * cfg.state_dim),
              numkit::Activation::relu, numkit::Activation::identity},
             rng);
}

Mlp make_translator(const ModelConfig& cfg, numkit::Rng& rng) {
  return Mlp({sizes(cfg.state_dim + cfg.action_dim + 2 * cfg.context_dim, cfg.translator_hidden, cfg.action_dim),
              numkit::Activation::relu, numkit::Activation::tanh},
             rng);
}

Mlp make_reward_predictor(const ModelConfig& cfg, numkit::Rng& rng) {
  return Mlp({sizes(cfg.state_dim + cfg.action_dim + cfg.context_dim, cfg.reward_hidden, 1),
              numkit::Activation::relu, numkit::Activation::identity},
             rng);
}

DenseArray scale_states(const ModelConfig& cfg, const DenseArray& states) {
  if (cfg.state_input_scale.empty()) return states;
  if (cfg.state_input_scale.size() != states.cols())
    throw DimensionError("state_input_scale has " + std::to_string(cfg.state_input_scale.size()) +
                         " entries for states of width " + std::to_string(states.cols()));
  DenseArray out = states;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t d = 0; d < out.cols(); ++d) out(r, d) *= cfg.state_input_scale[d];
  return out;
}

DenseArray scale_windows(const ModelConfig& cfg, const DenseArray& windows) {
  if (windows.cols() != cfg.window_width())
    throw DimensionError("history window width " + std::to_string(windows.cols()) + " != " +
                         std::to_string(cfg.window_width()));
  DenseArray out = windows;
  const std::size_t per = cfg.state_dim + cfg.action_dim;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t k = 0; k < cfg.history_k; ++k)
      for (std::size_t d = 0; d < cfg.state_dim; ++d) row[k * per + d] *= cfg.delta_scale;
  }
  return out;
}

DenseArray encode_context(Mlp& encoder, const ModelConfig& cfg, const DenseArray& windows) {
  return encoder.forward(scale_windows(cfg, windows));
}

DenseArray encode_context_const(const Mlp& encoder, const ModelConfig& cfg, const DenseArray& windows) {
  return encoder.predict(scale_windows(cfg, windows));
}

double soft_clamp_logvar(const ModelConfig& cfg, double raw) {
  const double upper = cfg.logvar_max - softplus(cfg.logvar_max - raw);
  // The nested softplus can overshoot the upper bound by ~1e-3; the hard clamp removes that sliver.
  return std::min(cfg.logvar_min + softplus(upper - cfg.logvar_min), cfg.logvar_max);
}

double soft_clamp_logvar_derivative(const ModelConfig& cfg, double raw) {
  const double upper = cfg.logvar_max - softplus(cfg.logvar_max - raw);
  if (cfg.logvar_min + softplus(upper - cfg.logvar_min) >= cfg.logvar_max) return 0.0;
  return sigmoid(upper - cfg.logvar_min) * sigmoid(cfg.logvar_max - raw);
}

double gaussian_nll(std::span<const double> mean, std::span<const double> logvar, std::span<const double> target) {
  if (mean.size() != logvar.size() || mean.size() != target.size()) throw DimensionError("gaussian_nll widths differ");
  double total = 0.0;
  for (std::size_t d = 0; d < mean.size(); ++d) {
    const double diff = target[d] - mean[d];
    total += 0.5 * (diff * diff * std::exp(-logvar[d]) + logvar[d] + kLog2Pi);
  }
  return total;
}

std::pair<DenseArray, DenseArray> forward_mean_logvar(const ModelConfig& cfg, const DenseArray& output) {
  if (output.cols() != 2 * cfg.state_dim) throw DimensionError("forward-model output width");
  DenseArray mean = numkit::slice_columns(output, 0, cfg.state_dim);
  DenseArray logvar = numkit::slice_columns(output, cfg.state_dim, cfg.state_dim);
  for (double& v : logvar.values()) v = soft_clamp_logvar(cfg, v);
  return {std::move(mean), std::move(logvar)};
}

NllTerms forward_output_nll(const ModelConfig& cfg, const DenseArray& output, const DenseArray& target) {
  const std::size_t n = output.rows(), dim = cfg.state_dim;
  require_rows(output, n, 2 * dim, "forward output");
  require_rows(target, n, dim, "forward target");
  NllTerms out;
  out.d_output = DenseArray::matrix(n, 2 * dim);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double mu = output(r, d);
      const double raw = output(r, dim + d);
      const double lv = soft_clamp_logvar(cfg, raw);
      const double inv_var = std::exp(-lv);
      const double diff = target(r, d) - mu;
      out.total += 0.5 * (diff * diff * inv_var + lv + kLog2Pi);
      out.d_output(r, d) = -diff * inv_var;
      out.d_output(r, dim + d) = 0.5 * (1.0 - diff * diff * inv_var) * soft_clamp_logvar_derivative(cfg, raw);
    }
  }
  return out;
}

ContrastivePairs draw_pairs(std::size_t batch, numkit::Rng& rng) {
  ContrastivePairs out;
  const auto perm = rng.permutation(batch);
  for (std::size_t k = 0; k + 1 < batch; k += 2) out.pairs.emplace_back(perm[k], perm[k + 1]);
  return out;
}

ContrastiveResult contrastive_loss(const DenseArray& z, const std::vector<std::size_t>& labels, double margin,
                                   const ContrastivePairs& pairs) {
  if (labels.size() != z.rows()) throw DimensionError("contrastive labels do not match batch");
  if (z.rows() < 2) throw PreconditionError("contrastive loss needs at least two samples");
  ContrastiveResult out;
  out.z_gradient = DenseArray::matrix(z.rows(), z.cols());
  if (pairs.pairs.empty()) return out;
  const double scale = 1.0 / static_cast<double>(pairs.pairs.size());
  std::vector<double> diff(z.cols());
  for (auto [a, b] : pairs.pairs) {
    double sq = 0.0;
    for (std::size_t c = 0; c < z.cols(); ++c) {
      diff[c] = z(a, c) - z(b, c);
      sq += diff[c] * diff[c];
    }
    if (labels[a] == labels[b]) {
      out.loss += scale * sq;
      for (std::size_t c = 0; c < z.cols(); ++c) {
        out.z_gradient(a, c) += scale * 2.0 * diff[c];
        out.z_gradient(b, c) -= scale * 2.0 * diff[c];
      }
    } else {
      const double dist = std::sqrt(sq);
      if (dist >= margin) continue;
      out.loss += scale * (margin - dist);
      if (dist == 0.0) continue;  // subgradient 0 at coincident points
      for (std::size_t c = 0; c < z.cols(); ++c) {
        out.z_gradient(a, c) -= scale * diff[c] / dist;
        out.z_gradient(b, c) += scale * diff[c] / dist;
      }
    }
  }
  return out;
}

ContextLossResult context_loss(Mlp& encoder, Mlp& forward, const ModelConfig& cfg, const SegmentBatch& batch,
                               const ContrastivePairs* pairs) {
  const std::size_t b = batch.segments(), m = batch.m;
  require_rows(batch.states, b * m, cfg.state_dim, "segment states");
  require_rows(batch.actions, b * m, cfg.action_dim, "segment actions");
  require_rows(batch.next_states, b * m, cfg.state_dim, "segment next states");

  const DenseArray z = encode_context(encoder, cfg, batch.windows);
  DenseArray z_rep = DenseArray::matrix(b * m, cfg.context_dim);
  for (std::size_t s = 0; s < b; ++s)
    for (std::size_t k = 0; k < m; ++k)
      std::copy(z.row(s).begin(), z.row(s).end(), z_rep.row(s * m + k).begin());

  const DenseArray ms = scale_states(cfg, batch.states);
  const DenseArray f_out = forward.forward(numkit::concat_columns({&ms, &batch.actions, &z_rep}));
  NllTerms nll = forward_output_nll(cfg, f_out, scaled_deltas(cfg, batch.states, batch.next_states));
  const double inv_b = 1.0 / static_cast<double>(b);
  for (double& v : nll.d_output.values()) v *= inv_b;

  ContextLossResult out;
  out.forward_loss = nll.total * inv_b;
  auto f_grads = forward.backward(nll.d_output);
  out.forward_grads = std::move(f_grads.parameters);

  DenseArray dz = DenseArray::matrix(b, cfg.context_dim);
  const std::size_t z_col = cfg.state_dim + cfg.action_dim;
  for (std::size_t s = 0; s < b; ++s)
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t c = 0; c < cfg.context_dim; ++c) dz(s, c) += f_grads.input(s * m + k, z_col + c);

  if (pairs != nullptr) {
    auto cont = contrastive_loss(z, batch.task_labels, cfg.margin, *pairs);
    out.contrastive_loss = cont.loss;
    numkit::MatrixMap(dz.data(), static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(cfg.context_dim)) +=
        cont.z_gradient.as_matrix();
  }
  out.total = out.forward_loss + out.contrastive_loss;
  out.encoder_grads = encoder.backward(dz).parameters;
  return out;
}

DenseArray translate_action(const Mlp& translator, const ModelConfig& cfg, const DenseArray& states,
                            const DenseArray& actions, const DenseArray& z_src, const DenseArray& z_tgt) {
  const DenseArray ms = scale_states(cfg, states);
  return translator.predict(numkit::concat_columns({&ms, &actions, &z_src, &z_tgt}));
}

TranslationLossResult translation_loss(Mlp& translator, Mlp& forward, const ModelConfig& cfg,
                                       const TransitionBatch& batch, const DenseArray& z_src, const DenseArray& z_tgt) {
  auto fwd = translate_and_score(translator, forward, cfg, batch, z_src, z_tgt);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  TranslationLossResult out;
  out.nll = fwd.nll.total * inv_b;
  out.loss = out.nll;
  for (double& v : fwd.d_action.values()) v *= inv_b;
  out.translator_grads = translator.backward(fwd.d_action).parameters;
  return out;
}

TranslationLossResult translation_loss_with_reward(Mlp& translator, Mlp& forward, Mlp& reward_model,
                                                   const ModelConfig& cfg, const TransitionBatch& batch,
                                                   const DenseArray& z_src, const DenseArray& z_tgt, double lambda) {
  auto fwd = translate_and_score(translator, forward, cfg, batch, z_src, z_tgt);
  const std::size_t b = batch.size();
  require_rows(batch.rewards, b, 1, "translation rewards");
  const double inv_b = 1.0 / static_cast<double>(b);

  const DenseArray ms = scale_states(cfg, batch.states);
  const DenseArray r_in = numkit::concat_columns({&ms, &fwd.translated, &z_tgt});
  const DenseArray r_pred = reward_model.forward(r_in);
  DenseArray d_pred = DenseArray::matrix(b, 1);
  double gap = 0.0;
  for (std::size_t r = 0; r < b; ++r) {
    const double e = batch.rewards[r] - r_pred[r];
    gap += std::abs(e);
    d_pred[r] = e > 0.0 ? -inv_b : (e < 0.0 ? inv_b : 0.0);
  }
  const auto r_grads = reward_model.backward(d_pred);
  DenseArray d_action = numkit::slice_columns(r_grads.input, cfg.state_dim, cfg.action_dim);
  for (std::size_t k = 0; k < d_action.size(); ++k) d_action[k] += lambda * inv_b * fwd.d_action[k];

  TranslationLossResult out;
  out.nll = fwd.nll.total * inv_b;
  out.reward_gap = gap * inv_b;
  out.loss = out.reward_gap + lambda * out.nll;
  out.translator_grads = translator.backward(d_action).parameters;
  return out;
}

RewardLossResult reward_model_loss(Mlp& reward_model, const ModelConfig& cfg, const TransitionBatch& batch,
                                   const DenseArray& z) {
  const std::size_t b = batch.size();
  const DenseArray ms = scale_states(cfg, batch.states);
  const DenseArray pred = reward_model.forward(numkit::concat_columns({&ms, &batch.actions, &z}));
  DenseArray d = DenseArray::matrix(b, 1);
  RewardLossResult out;
  for (std::size_t r = 0; r < b; ++r) {
    const double e = pred[r] - batch.rewards[r];
    out.loss += e * e / static_cast<double>(b);
    d[r] = 2.0 * e / static_cast<double>(b);
  }
  out.grads = reward_model.backward(d).parameters;
  return out;
}

std::vector<double> task_feature(const Mlp& encoder, const ModelConfig& cfg, std::size_t pool_size,
                                 const std::function<std::span<const double>(std::size_t)>& window_at,
                                 std::size_t n_samples, numkit::Rng& rng) {
  if (pool_size == 0) throw StateError("task_feature: empty buffer");
  const std::size_t n = std::min(std::max<std::size_t>(n_samples, 1), pool_size);
  const auto picks = rng.sample_without_replacement(pool_size, n);
  DenseArray windows = DenseArray::matrix(n, cfg.window_width());
  for (std::size_t k = 0; k < n; ++k) {
    const auto w = window_at(picks[k]);
    if (w.size() != cfg.window_width()) throw DimensionError("task_feature: window width");
    std::copy(w.begin(), w.end(), windows.row(k).begin());
  }
  const DenseArray z = encode_context_const(encoder, cfg, windows);
  std::vector<double> mean(cfg.context_dim, 0.0);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t c = 0; c < cfg.context_dim; ++c) mean[c] += z(k, c);
  for (double& v : mean) v /= static_cast<double>(n);
  return mean;
}

DenseArray tile_rows(std::span<const double> row, std::size_t count) {
  DenseArray out = DenseArray::matrix(count, row.size());
  for (std::size_t r = 0; r < count; ++r) std::copy(row.begin(), row.end(), out.row(r).begin());
  return out;
}

}  // namespace ptl::models
