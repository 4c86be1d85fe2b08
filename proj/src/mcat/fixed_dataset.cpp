#include "ptl/mcat/fixed_dataset.hpp"

#include <algorithm>
#include <cmath>

#include "ptl/errors.hpp"

namespace ptl::mcat {

namespace {

void check_dataset(const rl::ReplayBuffer& data, const models::ModelConfig& model, const char* which) {
  if (data.state_dim() != model.state_dim || data.action_dim() != model.action_dim ||
      data.window_width() != model.window_width())
    throw InputError(std::string(which) + " dataset does not match the model dimensions");
  if (data.size() < model.future_m) throw InputError(std::string(which) + " dataset is shorter than one segment");
}

}  // namespace

rl::ReplayBuffer collect_dataset(const envs::PointMassParams& params, const FixedDatasetConfig& cfg,
                                 numkit::Rng& rng) {
  const auto& m = cfg.model;
  rl::ReplayBuffer buffer(cfg.dataset_episodes * cfg.horizon, m.state_dim, m.action_dim, m.window_width());
  envs::TaskEnv task(params, cfg.horizon, cfg.delay_steps);
  envs::Action drift{};
  const envs::PolicyFn behavior = [&](const envs::Observation&, std::span<const double>) {
    return envs::Action{std::clamp(drift[0] + rng.gaussian(0.0, cfg.behavior_noise), -1.0, 1.0),
                        std::clamp(drift[1] + rng.gaussian(0.0, cfg.behavior_noise), -1.0, 1.0)};
  };
  for (std::size_t e = 0; e < cfg.dataset_episodes; ++e) {
    drift = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const auto trace = envs::rollout(task.env(), behavior, cfg.horizon, rng, m.history_k);
    for (std::size_t t = 0; t < trace.length(); ++t)
      buffer.add({trace.observations[t], trace.actions[t], trace.rewards[t], trace.observations[t + 1],
                  trace.histories[t], 0, e, t});
  }
  return buffer;
}

void fit_transfer_models(TransferModels& models, const std::vector<const rl::ReplayBuffer*>& datasets,
                         const FixedDatasetConfig& cfg, numkit::Rng& rng) {
  for (std::size_t s = 0; s < cfg.cf_steps; ++s) (void)train_context_step(models, datasets, rng);
  refresh_features(models, datasets, rng);
  for (std::size_t s = 0; s < cfg.h_steps; ++s) (void)train_translator_step(models, datasets, rng);
}

TransferReport fixed_dataset_transfer(const rl::ReplayBuffer& source_data, const rl::ReplayBuffer& target_data,
                                      const envs::PointMassParams& source, const envs::PointMassParams& target,
                                      const envs::PolicyFn& source_policy, const FixedDatasetConfig& cfg) {
  check_dataset(source_data, cfg.model, "source");
  check_dataset(target_data, cfg.model, "target");
  numkit::Rng init(cfg.seed, 20), train(cfg.seed, 21), eval(cfg.seed, 22);
  TransferModels models(cfg.model, cfg.learner, init);
  fit_transfer_models(models, {&source_data, &target_data}, cfg, train);

  TransferReport report;
  const std::size_t k = cfg.model.history_k;
  report.source_on_source =
      evaluate_policy(source, cfg.horizon, cfg.delay_steps, source_policy, cfg.eval_episodes, eval, k);
  report.source_on_target =
      evaluate_policy(target, cfg.horizon, cfg.delay_steps, source_policy, cfg.eval_episodes, eval, k);
  const auto transferred = translated_policy(models.translator, models.model, source_policy, models.features[0], models.features[1]);
  report.transferred_on_target =
      evaluate_policy(target, cfg.horizon, cfg.delay_steps, transferred, cfg.eval_episodes, eval, k);
  return report;
}

TransferMatrix transfer_matrix(const TransferModels& models, const std::vector<envs::PointMassParams>& tasks,
                               const std::function<envs::PolicyFn(std::size_t)>& source_policy, std::size_t horizon,
                               std::size_t delay_steps, std::size_t episodes, numkit::Rng& rng) {
  const std::size_t n = tasks.size();
  if (models.features.size() < n) throw StateError("transfer matrix needs a feature per task");
  TransferMatrix out;
  out.source_on_target.assign(n, std::vector<double>(n));
  out.transferred.assign(n, std::vector<double>(n));
  out.improvement.assign(n, std::vector<double>(n));
  const std::size_t k = models.model.history_k;
  for (std::size_t j = 0; j < n; ++j) {
    const auto source = source_policy(j);
    for (std::size_t i = 0; i < n; ++i) {
      const double base = evaluate_policy(tasks[i], horizon, delay_steps, source, episodes, rng, k).mean;
      const auto moved = translated_policy(models.translator, models.model, source, models.features[j], models.features[i]);
      const double got = evaluate_policy(tasks[i], horizon, delay_steps, moved, episodes, rng, k).mean;
      out.source_on_target[j][i] = base;
      out.transferred[j][i] = got;
      out.improvement[j][i] = 100.0 * (got - base) / std::abs(base);
    }
  }
  return out;
}

TransferMatrix fixed_dataset_matrix(const std::vector<envs::PointMassParams>& tasks, const FixedDatasetConfig& cfg) {
  numkit::Rng data_rng(cfg.seed, 23), init(cfg.seed, 20), train(cfg.seed, 21), eval(cfg.seed, 22);
  std::vector<rl::ReplayBuffer> data;
  for (const auto& p : tasks) data.push_back(collect_dataset(p, cfg, data_rng));
  std::vector<const rl::ReplayBuffer*> ptrs;
  for (const auto& d : data) ptrs.push_back(&d);
  TransferModels models(cfg.model, cfg.learner, init);
  fit_transfer_models(models, ptrs, cfg, train);
  return transfer_matrix(
      models, tasks, [&](std::size_t j) { return throttle_policy(tasks[j]); }, cfg.horizon, cfg.delay_steps,
      cfg.eval_episodes, eval);
}

}  // namespace ptl::mcat
