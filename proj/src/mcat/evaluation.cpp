#include "ptl/mcat/evaluation.hpp"

#include <cmath>

#include "ptl/errors.hpp"

namespace ptl::mcat {

EpisodeStats summarize(std::vector<double> rewards) {
  EpisodeStats s;
  const double n = static_cast<double>(rewards.size());
  if (rewards.empty()) throw PreconditionError("no episodes to summarize");
  for (double r : rewards) s.mean += r / n;
  if (rewards.size() > 1) {
    double ss = 0.0;
    for (double r : rewards) ss += (r - s.mean) * (r - s.mean);
    s.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  s.rewards = std::move(rewards);
  return s;
}

EpisodeStats evaluate_policy(const envs::PointMassParams& params, std::size_t horizon, std::size_t delay_steps,
                             const envs::PolicyFn& policy, std::size_t episodes, numkit::Rng& rng,
                             std::size_t history_k) {
  envs::TaskEnv task(params, horizon, delay_steps);
  std::vector<double> rewards;
  rewards.reserve(episodes);
  for (std::size_t e = 0; e < episodes; ++e)
    rewards.push_back(envs::rollout(task.env(), policy, horizon, rng, history_k).episode_reward());
  return summarize(std::move(rewards));
}

envs::PolicyFn throttle_policy(const envs::PointMassParams& params) {
  const envs::Action a = envs::full_throttle_action(params);
  return [a](const envs::Observation&, std::span<const double>) { return a; };
}

envs::PolicyFn translated_policy(const Mlp& translator, const models::ModelConfig& cfg, envs::PolicyFn source,
                                 std::vector<double> z_src, std::vector<double> z_tgt) {
  return [&translator, cfg, source = std::move(source), zs = std::move(z_src), zt = std::move(z_tgt)](
             const envs::Observation& obs, std::span<const double> history) {
    const envs::Action a = source(obs, history);
    const auto t = translate_one(translator, cfg, obs, a, zs, zt);
    return envs::Action{t[0], t[1]};
  };
}

}  // namespace ptl::mcat
