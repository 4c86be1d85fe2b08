#include "ptl/mcat/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "ptl/errors.hpp"
#include "ptl/numkit/persist.hpp"

namespace ptl::mcat {

namespace {

enum Stream : std::uint64_t { kInit = 0, kCollect, kContext, kTranslator, kRl, kFeature, kEvalBase = 1000 };

DenseArray row_of(std::span<const double> v) {
  DenseArray a = DenseArray::matrix(1, v.size());
  std::copy(v.begin(), v.end(), a.row(0).begin());
  return a;
}

void append(DenseArray& dst, const DenseArray& src) { dst = dst.empty() ? src : numkit::concat_rows(dst, src); }

std::string key(const char* name, std::size_t i) { return std::string(name) + "/" + std::to_string(i); }

}  // namespace

void TrainSchedule::validate() const {
  if (samples_per_iter == 0 || cf_steps == 0 || h_steps == 0 || rl_steps == 0)
    throw DomainError("schedule fields samples_per_iter, cf_steps, h_steps and rl_steps must be positive");
}

void McatConfig::validate() const {
  tasks.validate();
  if (tasks.n_train() == 0) throw DomainError("at least one training task is required");
  schedule.validate();
  if (reward_window == 0) throw DomainError("reward_window must be positive");
  if (replay_capacity < tasks.horizon || sil_capacity < tasks.horizon)
    throw DomainError("buffer capacities must hold at least one episode");
  if (iterations == 0) throw DomainError("iterations must be positive");
  if (checkpoint_every == 0) throw DomainError("checkpoint_every must be positive");
  if (td3.batch_size == 0 || td3.policy_frequency == 0) throw DomainError("td3 batch_size and policy_frequency must be positive");
  if (!(td3.gamma >= 0.0 && td3.gamma < 1.0)) throw DomainError("td3 gamma must lie in [0, 1)");
  if (model.state_dim != envs::kStateDim || model.action_dim != envs::kActionDim)
    throw DomainError("model dimensions must match the point-mass task");
  if (learner.context_batch < 2 || learner.translator_batch == 0 || learner.feature_samples == 0)
    throw DomainError("learner batch sizes must be positive (context_batch >= 2)");
}

std::size_t McatConfig::episodes_per_task() const {
  const double per = static_cast<double>(schedule.samples_per_iter) /
                     static_cast<double>(tasks.n_train() * tasks.horizon);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(per)));
}

Trainer::Trainer(McatConfig cfg)
    : cfg_((cfg.validate(), std::move(cfg))),
      init_rng_(cfg_.seed, kInit),
      collect_rng_(cfg_.seed, kCollect),
      context_rng_(cfg_.seed, kContext),
      translator_rng_(cfg_.seed, kTranslator),
      rl_rng_(cfg_.seed, kRl),
      feature_rng_(cfg_.seed, kFeature),
      models_(cfg_.model, cfg_.learner, init_rng_),
      agent_(cfg_.model.state_dim, cfg_.model.action_dim, cfg_.model.context_dim, cfg_.td3, init_rng_),
      sil_(cfg_.sil_capacity, cfg_.model.state_dim, cfg_.model.action_dim, cfg_.model.window_width()),
      windows_(cfg_.tasks.n_train(), cfg_.reward_window),
      train_params_(cfg_.tasks.train_params) {
  for (std::size_t i = 0; i < train_params_.size(); ++i)
    buffers_.emplace_back(cfg_.replay_capacity, cfg_.model.state_dim, cfg_.model.action_dim,
                          cfg_.model.window_width());
}

std::vector<const rl::ReplayBuffer*> Trainer::buffer_ptrs() const {
  std::vector<const rl::ReplayBuffer*> out;
  for (const auto& b : buffers_) out.push_back(&b);
  return out;
}

envs::PolicyFn Trainer::shared_policy() const {
  return [this](const envs::Observation& obs, std::span<const double> history) {
    const DenseArray z = contexts(models_, row_of(history));
    const DenseArray a = rl::policy_actions(agent_.actor, row_of(obs), z);
    return envs::Action{a(0, 0), a(0, 1)};
  };
}

envs::PolicyFn Trainer::task_policy(std::size_t task) const {
  if (task >= models_.features.size() || models_.features[task].empty())
    throw StateError("no task feature for task " + std::to_string(task));
  return [this, z = models_.features[task]](const envs::Observation& obs, std::span<const double>) {
    const DenseArray s = row_of(obs), zz = row_of(z);
    const DenseArray a = rl::policy_actions(agent_.actor, s, zz);
    return envs::Action{a(0, 0), a(0, 1)};
  };
}

void Trainer::run_episode(std::size_t task, Collected& stats) {
  const bool have_features = models_.features.size() == train_params_.size() &&
                             std::all_of(models_.features.begin(), models_.features.end(),
                                         [](const auto& f) { return !f.empty(); });
  const BehaviorChoice choice =
      cfg_.pt_enabled && have_features ? select_behavior(windows_, task) : BehaviorChoice::shared();
  const double sigma = cfg_.td3.exploration_sigma;
  std::uint64_t clock = global_step_;
  const envs::PolicyFn behave = [&](const envs::Observation& obs, std::span<const double> history) {
    std::vector<double> a;
    if (choice.is_shared()) {
      if (clock < cfg_.random_steps) {
        a = {collect_rng_.uniform(-1.0, 1.0), collect_rng_.uniform(-1.0, 1.0)};
      } else {
        const DenseArray z = contexts(models_, row_of(history));
        a = rl::explore_action(agent_.actor, obs, z.values(), collect_rng_, sigma);
      }
    } else {
      a = transferred_policy_action(models_.translator, cfg_.model, agent_.actor, obs, models_.features[*choice.source_task],
                                    models_.features[task]);
      for (double& v : a) v = std::clamp(v + collect_rng_.gaussian(0.0, sigma), -1.0, 1.0);
    }
    ++clock;
    return envs::Action{a[0], a[1]};
  };

  envs::TaskEnv env(train_params_[task], cfg_.tasks.horizon, cfg_.tasks.delay_steps);
  const auto trace = envs::rollout(env.env(), behave, cfg_.tasks.horizon, collect_rng_, cfg_.model.history_k);
  const std::uint64_t episode = episode_counter_++;
  std::vector<std::vector<double>> states, actions;
  for (std::size_t t = 0; t < trace.length(); ++t) {
    buffers_[task].add({trace.observations[t], trace.actions[t], trace.rewards[t], trace.observations[t + 1],
                        trace.histories[t], task, episode, t});
    states.emplace_back(trace.observations[t].begin(), trace.observations[t].end());
    actions.emplace_back(trace.actions[t].begin(), trace.actions[t].end());
  }
  if (cfg_.sil_enabled) sil_.add_episode(states, actions, trace.histories, trace.rewards, cfg_.td3.gamma, task);
  global_step_ += trace.length();
  const double total = trace.episode_reward();
  record_episode(windows_, task, choice, total, global_step_);
  stats.reward_sum[task] += total;
  ++stats.episodes[task];
  ++(choice.is_shared() ? stats.shared : stats.transferred)[task];
}

Trainer::Collected Trainer::collect() {
  const std::size_t n = train_params_.size();
  Collected stats{std::vector<double>(n, 0.0), std::vector<std::size_t>(n, 0), std::vector<std::size_t>(n, 0),
                  std::vector<std::size_t>(n, 0)};
  for (std::size_t round = 0; round < cfg_.episodes_per_task(); ++round)
    for (std::size_t task = 0; task < n; ++task) run_episode(task, stats);
  return stats;
}

nlohmann::json Trainer::run_iteration() {
  const std::size_t n = train_params_.size();
  nlohmann::json rec;
  rec["iteration"] = iteration_;

  const Collected col = collect();
  for (std::size_t i = 0; i < n; ++i) {
    rec[key("train_reward", i)] = col.reward_sum[i] / static_cast<double>(col.episodes[i]);
    rec[key("shared_episodes", i)] = col.shared[i];
    rec[key("transferred_episodes", i)] = col.transferred[i];
  }
  const auto ptrs = buffer_ptrs();

  double f_loss = 0.0, c_loss = 0.0;
  for (std::size_t s = 0; s < cfg_.schedule.cf_steps; ++s) {
    const auto st = train_context_step(models_, ptrs, context_rng_);
    f_loss += st.forward_loss;
    c_loss += st.contrastive_loss;
  }
  rec["loss/forward"] = f_loss / static_cast<double>(cfg_.schedule.cf_steps);
  rec["loss/contrastive"] = c_loss / static_cast<double>(cfg_.schedule.cf_steps);
  refresh_features(models_, ptrs, feature_rng_);

  double h_loss = 0.0, r_loss = 0.0;
  if (cfg_.pt_enabled) {
    for (std::size_t s = 0; s < cfg_.schedule.h_steps; ++s) {
      const auto st = train_translator_step(models_, ptrs, translator_rng_);
      h_loss += st.loss;
      r_loss += st.reward_loss;
    }
    h_loss /= static_cast<double>(cfg_.schedule.h_steps);
    r_loss /= static_cast<double>(cfg_.schedule.h_steps);
  }
  rec["loss/translator"] = h_loss;
  rec["loss/reward_model"] = r_loss;

  double q_loss = 0.0, s_loss = 0.0, actor_obj = 0.0;
  std::size_t actor_steps = 0;
  for (std::size_t s = 0; s < cfg_.schedule.rl_steps; ++s) {
    std::vector<std::size_t> counts(n, 0);
    for (std::size_t b = 0; b < cfg_.td3.batch_size; ++b) ++counts[rl_rng_.index(n)];
    rl::ReplaySample batch;
    for (std::size_t i = 0; i < n; ++i) {
      if (counts[i] == 0) continue;
      const auto part = buffers_[i].gather(buffers_[i].sample_indices(counts[i], rl_rng_));
      append(batch.states, part.states);
      append(batch.actions, part.actions);
      append(batch.rewards, part.rewards);
      append(batch.next_states, part.next_states);
      append(batch.windows, part.windows);
    }
    const DenseArray z = contexts(models_, batch.windows);
    rl::SilBatch sil;
    const bool use_sil = cfg_.sil_enabled && !sil_.empty();
    if (use_sil) {
      auto part = sil_.sample(cfg_.td3.batch_size, rl_rng_);
      sil = {std::move(part.states), std::move(part.actions), contexts(models_, part.windows), std::move(part.returns)};
    }
    const auto st = rl::td3_update(agent_, cfg_.td3, batch.states, batch.actions, batch.rewards, batch.next_states, z,
                                   rl_rng_, use_sil ? &sil : nullptr);
    q_loss += st.critic_loss;
    s_loss += st.sil_loss;
    if (st.actor_updated) {
      actor_obj += st.actor_objective;
      ++actor_steps;
    }
  }
  rec["loss/critic"] = q_loss / static_cast<double>(cfg_.schedule.rl_steps);
  rec["loss/sil"] = s_loss / static_cast<double>(cfg_.schedule.rl_steps);
  rec["actor_objective"] = actor_steps ? actor_obj / static_cast<double>(actor_steps) : 0.0;

  windows_.evict(global_step_);

  numkit::Rng eval_rng(cfg_.seed, kEvalBase + iteration_);
  const auto policy = shared_policy();
  double test_mean = 0.0;
  const auto& test = cfg_.tasks.test_params;
  for (std::size_t k = 0; k < test.size(); ++k) {
    const auto st = evaluate_policy(test[k], cfg_.tasks.horizon, cfg_.tasks.delay_steps, policy, cfg_.eval_episodes,
                                    eval_rng, cfg_.model.history_k);
    rec[key("test_reward", k)] = st.mean;
    test_mean += st.mean / static_cast<double>(test.size());
  }
  if (!test.empty()) rec["test_reward_mean"] = test_mean;

  ++iteration_;
  rec["global_step"] = global_step_;
  for (const auto& [k, v] : rec.items())
    if (v.is_number_float() && !std::isfinite(v.get<double>())) throw NumericError("non-finite metric '" + k + "'");
  return rec;
}

void Trainer::save(const std::filesystem::path& dir) const {
  numkit::Checkpoint ckpt;
  models_.save(ckpt);
  agent_.save(ckpt);
  for (std::size_t i = 0; i < buffers_.size(); ++i) buffers_[i].save(ckpt, key("replay", i));
  sil_.save(ckpt, "sil");
  ckpt.meta["iteration"] = iteration_;
  ckpt.meta["global_step"] = global_step_;
  ckpt.meta["episode_counter"] = episode_counter_;
  ckpt.meta["n_train"] = buffers_.size();
  ckpt.meta["reward_windows"] = windows_.to_json();
  numkit::save_rng(ckpt, "collect", collect_rng_);
  numkit::save_rng(ckpt, "context", context_rng_);
  numkit::save_rng(ckpt, "translator", translator_rng_);
  numkit::save_rng(ckpt, "rl", rl_rng_);
  numkit::save_rng(ckpt, "feature", feature_rng_);
  ckpt.save(dir);
}

void Trainer::load(const std::filesystem::path& dir) {
  const auto ckpt = numkit::Checkpoint::load(dir);
  if (ckpt.meta.value("n_train", std::size_t{0}) != buffers_.size())
    throw StateError("checkpoint task count does not match the configuration");
  models_.load(ckpt);
  agent_.load(ckpt);
  for (std::size_t i = 0; i < buffers_.size(); ++i) buffers_[i].load(ckpt, key("replay", i));
  sil_.load(ckpt, "sil");
  iteration_ = ckpt.meta.at("iteration").get<std::size_t>();
  global_step_ = ckpt.meta.at("global_step").get<std::uint64_t>();
  episode_counter_ = ckpt.meta.at("episode_counter").get<std::uint64_t>();
  windows_ = RewardWindows::from_json(ckpt.meta.at("reward_windows"));
  numkit::load_rng(ckpt, "collect", collect_rng_);
  numkit::load_rng(ckpt, "context", context_rng_);
  numkit::load_rng(ckpt, "translator", translator_rng_);
  numkit::load_rng(ckpt, "rl", rl_rng_);
  numkit::load_rng(ckpt, "feature", feature_rng_);
}

}  // namespace ptl::mcat
