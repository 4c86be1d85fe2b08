#include "ptl/rl/td3.hpp"

#include <algorithm>
#include <cmath>

#include "ptl/errors.hpp"
#include "ptl/numkit/persist.hpp"

namespace ptl::rl {

namespace {

std::vector<std::size_t> sizes(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

void check_rows(const DenseArray& a, std::size_t rows, const char* what) {
  if (a.rows() != rows) throw DimensionError(std::string(what) + " has " + numkit::shape_string(a.shape()) + ", expected " +
                                             std::to_string(rows) + " rows");
}

/// sum_l mean_b residual(target - Q_l)^2; shared by TD3 and SIL.
template <typename Residual>
CriticLossResult twin_critic_loss(ActorCritic& ac, const DenseArray& states, const DenseArray& actions,
                                  const DenseArray& z, const DenseArray& targets, Residual residual) {
  const std::size_t b = states.rows();
  check_rows(actions, b, "actions");
  check_rows(z, b, "context");
  check_rows(targets, b, "targets");
  const DenseArray x = numkit::concat_columns({&states, &actions, &z});
  CriticLossResult out;
  for (int l = 0; l < 2; ++l) {
    Mlp& q = l == 0 ? ac.q1 : ac.q2;
    const DenseArray pred = q.forward(x);
    DenseArray grad = DenseArray::matrix(b, 1);
    for (std::size_t i = 0; i < b; ++i) {
      const double e = residual(targets(i, 0) - pred(i, 0));
      out.loss += e * e / static_cast<double>(b);
      grad(i, 0) = -2.0 * e / static_cast<double>(b);
    }
    (l == 0 ? out.q1_grads : out.q2_grads) = q.backward(grad).parameters;
  }
  if (!std::isfinite(out.loss)) throw NumericError("non-finite critic loss");
  return out;
}

}  // namespace

ActorCritic::ActorCritic(std::size_t state_dim, std::size_t action_dim, std::size_t context_dim,
                         const Td3Config& cfg, numkit::Rng& rng)
    : action_dim_(action_dim) {
  actor = Mlp({sizes(state_dim + context_dim, cfg.hidden, action_dim), numkit::Activation::relu,
               numkit::Activation::tanh},
              rng);
  const numkit::MlpSpec critic{sizes(state_dim + action_dim + context_dim, cfg.hidden, 1), numkit::Activation::relu,
                               numkit::Activation::identity};
  q1 = Mlp(critic, rng);
  q2 = Mlp(critic, rng);
  actor_target = actor;
  q1_target = q1;
  q2_target = q2;
  actor_opt = numkit::AdamState({cfg.actor_lr}, actor.parameters());
  q1_opt = numkit::AdamState({cfg.critic_lr}, q1.parameters());
  q2_opt = numkit::AdamState({cfg.critic_lr}, q2.parameters());
}

void ActorCritic::save(numkit::Checkpoint& ckpt, const std::string& prefix) const {
  numkit::save_mlp(ckpt, prefix + "actor", actor);
  numkit::save_mlp(ckpt, prefix + "critic1", q1);
  numkit::save_mlp(ckpt, prefix + "critic2", q2);
  numkit::save_mlp(ckpt, prefix + "actor_target", actor_target);
  numkit::save_mlp(ckpt, prefix + "critic1_target", q1_target);
  numkit::save_mlp(ckpt, prefix + "critic2_target", q2_target);
  numkit::save_adam(ckpt, prefix + "actor_opt", actor_opt);
  numkit::save_adam(ckpt, prefix + "critic1_opt", q1_opt);
  numkit::save_adam(ckpt, prefix + "critic2_opt", q2_opt);
  ckpt.put(prefix + "critic_updates", DenseArray::vector({static_cast<double>(critic_updates)}));
}

void ActorCritic::load(const numkit::Checkpoint& ckpt, const std::string& prefix) {
  numkit::load_mlp(ckpt, prefix + "actor", actor);
  numkit::load_mlp(ckpt, prefix + "critic1", q1);
  numkit::load_mlp(ckpt, prefix + "critic2", q2);
  numkit::load_mlp(ckpt, prefix + "actor_target", actor_target);
  numkit::load_mlp(ckpt, prefix + "critic1_target", q1_target);
  numkit::load_mlp(ckpt, prefix + "critic2_target", q2_target);
  numkit::load_adam(ckpt, prefix + "actor_opt", actor_opt);
  numkit::load_adam(ckpt, prefix + "critic1_opt", q1_opt);
  numkit::load_adam(ckpt, prefix + "critic2_opt", q2_opt);
  critic_updates = static_cast<std::size_t>(ckpt.get(prefix + "critic_updates")[0]);
}

DenseArray policy_actions(const Mlp& actor, const DenseArray& states, const DenseArray& z) {
  check_rows(z, states.rows(), "context");
  return actor.predict(numkit::concat_columns({&states, &z}));
}

std::vector<double> explore_action(const Mlp& actor, std::span<const double> state, std::span<const double> z,
                                   numkit::Rng& rng, double sigma) {
  DenseArray x = DenseArray::matrix(1, state.size() + z.size());
  std::copy(state.begin(), state.end(), x.row(0).begin());
  std::copy(z.begin(), z.end(), x.row(0).begin() + static_cast<std::ptrdiff_t>(state.size()));
  const DenseArray a = actor.predict(x);
  std::vector<double> out(a.cols());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::clamp(a(0, k) + rng.gaussian(0.0, sigma), -1.0, 1.0);
  return out;
}

DenseArray td3_targets(const ActorCritic& ac, const Td3Config& cfg, const DenseArray& rewards,
                       const DenseArray& next_states, const DenseArray& z, numkit::Rng& rng) {
  const std::size_t b = next_states.rows();
  check_rows(rewards, b, "rewards");
  DenseArray next_actions = policy_actions(ac.actor_target, next_states, z);
  for (double& v : next_actions.values()) {
    const double noise = std::clamp(rng.gaussian(0.0, cfg.policy_noise), -cfg.noise_clip, cfg.noise_clip);
    v = std::clamp(v + noise, -1.0, 1.0);
  }
  const DenseArray x = numkit::concat_columns({&next_states, &next_actions, &z});
  const DenseArray t1 = ac.q1_target.predict(x);
  const DenseArray t2 = ac.q2_target.predict(x);
  DenseArray y = DenseArray::matrix(b, 1);
  for (std::size_t i = 0; i < b; ++i) y(i, 0) = rewards(i, 0) + cfg.gamma * std::min(t1(i, 0), t2(i, 0));
  return y;
}

CriticLossResult td3_critic_loss(ActorCritic& ac, const DenseArray& states, const DenseArray& actions,
                                 const DenseArray& z, const DenseArray& targets) {
  return twin_critic_loss(ac, states, actions, z, targets, [](double e) { return e; });
}

CriticLossResult sil_loss(ActorCritic& ac, const DenseArray& states, const DenseArray& actions, const DenseArray& z,
                          const DenseArray& returns) {
  return twin_critic_loss(ac, states, actions, z, returns, [](double e) { return std::max(e, 0.0); });
}

ActorLossResult actor_update(ActorCritic& ac, const DenseArray& states, const DenseArray& z) {
  const std::size_t b = states.rows();
  check_rows(z, b, "context");
  const std::size_t sd = states.cols(), ad = ac.action_dim();
  const DenseArray actions = ac.actor.forward(numkit::concat_columns({&states, &z}));
  const DenseArray q = ac.q1.forward(numkit::concat_columns({&states, &actions, &z}));
  ActorLossResult out;
  for (std::size_t i = 0; i < b; ++i) out.objective += q(i, 0) / static_cast<double>(b);
  const DenseArray dq = DenseArray::matrix(b, 1, -1.0 / static_cast<double>(b));
  const DenseArray dx = ac.q1.backward(dq).input;
  ac.q1.clear_cache();
  out.actor_grads = ac.actor.backward(numkit::slice_columns(dx, sd, ad)).parameters;
  if (!std::isfinite(out.objective)) throw NumericError("non-finite actor objective");
  return out;
}

void soft_update(const Mlp& online, Mlp& target, double tau) {
  auto& dst = target.parameters();
  const auto& src = online.parameters();
  if (dst.size() != src.size()) throw DimensionError("soft_update: networks differ in layer count");
  for (std::size_t k = 0; k < dst.size(); ++k) {
    numkit::require_same_shape(src[k], dst[k], "soft_update");
    auto d = dst[k].values();
    auto s = src[k].values();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = (1.0 - tau) * d[i] + tau * s[i];
  }
}

Td3StepStats td3_update(ActorCritic& ac, const Td3Config& cfg, const DenseArray& states, const DenseArray& actions,
                        const DenseArray& rewards, const DenseArray& next_states, const DenseArray& z,
                        numkit::Rng& rng, const SilBatch* sil) {
  Td3StepStats stats;
  const DenseArray y = td3_targets(ac, cfg, rewards, next_states, z, rng);
  auto critic = td3_critic_loss(ac, states, actions, z, y);
  stats.critic_loss = critic.loss;
  if (sil != nullptr) {
    const auto extra = sil_loss(ac, sil->states, sil->actions, sil->z, sil->returns);
    numkit::accumulate(critic.q1_grads, extra.q1_grads);
    numkit::accumulate(critic.q2_grads, extra.q2_grads);
    stats.sil_loss = extra.loss;
  }
  numkit::adam_step(ac.q1.parameters(), critic.q1_grads, ac.q1_opt);
  numkit::adam_step(ac.q2.parameters(), critic.q2_grads, ac.q2_opt);
  ++ac.critic_updates;
  if (ac.critic_updates % cfg.policy_frequency == 0) {
    const auto actor = actor_update(ac, states, z);
    numkit::adam_step(ac.actor.parameters(), actor.actor_grads, ac.actor_opt);
    soft_update(ac.actor, ac.actor_target, cfg.tau);
    soft_update(ac.q1, ac.q1_target, cfg.tau);
    soft_update(ac.q2, ac.q2_target, cfg.tau);
    stats.actor_updated = true;
    stats.actor_objective = actor.objective;
  }
  return stats;
}

double sil_update(ActorCritic& ac, const DenseArray& states, const DenseArray& actions, const DenseArray& z,
                  const DenseArray& returns) {
  const auto r = sil_loss(ac, states, actions, z, returns);
  numkit::adam_step(ac.q1.parameters(), r.q1_grads, ac.q1_opt);
  numkit::adam_step(ac.q2.parameters(), r.q2_grads, ac.q2_opt);
  return r.loss;
}

}  // namespace ptl::rl
