#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ptl/numkit/adam.hpp"
#include "ptl/numkit/checkpoint.hpp"
#include "ptl/numkit/mlp.hpp"
#include "ptl/numkit/rng.hpp"

namespace ptl::rl {

using numkit::DenseArray;
using numkit::Mlp;

struct Td3Config {
  std::size_t batch_size = 256;
  double gamma = 0.99;
  double tau = 5e-3;
  double policy_noise = 0.2;
  double noise_clip = 0.5;
  std::size_t policy_frequency = 2;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double exploration_sigma = 0.1;
  std::vector<std::size_t> hidden{128, 128};
  friend bool operator==(const Td3Config&, const Td3Config&) = default;
};

/// Context-conditioned actor pi(s, z) and twin critics Q_l(s, a, z), with targets.
class ActorCritic {
 public:
  ActorCritic(std::size_t state_dim, std::size_t action_dim, std::size_t context_dim, const Td3Config& cfg,
              numkit::Rng& rng);

  Mlp actor, q1, q2;
  Mlp actor_target, q1_target, q2_target;
  numkit::AdamState actor_opt, q1_opt, q2_opt;
  std::size_t critic_updates = 0;

  [[nodiscard]] std::size_t action_dim() const { return action_dim_; }

  /// Arrays are named prefix + {actor, critic1, critic2}[_target] and the optimizer states.
  void save(numkit::Checkpoint& ckpt, const std::string& prefix = "") const;
  void load(const numkit::Checkpoint& ckpt, const std::string& prefix = "");

 private:
  std::size_t action_dim_;
};

/// Deterministic actions pi(s, z) for a batch.
[[nodiscard]] DenseArray policy_actions(const Mlp& actor, const DenseArray& states, const DenseArray& z);

/// clip(pi(s, z) + N(0, sigma), -1, 1) for one state.
[[nodiscard]] std::vector<double> explore_action(const Mlp& actor, std::span<const double> state,
                                                 std::span<const double> z, numkit::Rng& rng, double sigma);

/// y = r + gamma min_l Q'_l(s', a', z) with a' = clip(pi'(s', z) + clip(N(0, noise), -c, c), -1, 1).
[[nodiscard]] DenseArray td3_targets(const ActorCritic& ac, const Td3Config& cfg, const DenseArray& rewards,
                                     const DenseArray& next_states, const DenseArray& z, numkit::Rng& rng);

struct CriticLossResult {
  double loss = 0.0;
  std::vector<DenseArray> q1_grads;
  std::vector<DenseArray> q2_grads;
};

/// mean_b sum_l (y - Q_l(s, a, z))^2
CriticLossResult td3_critic_loss(ActorCritic& ac, const DenseArray& states, const DenseArray& actions,
                                 const DenseArray& z, const DenseArray& targets);

/// mean_b sum_l max(R - Q_l(s, a, z), 0)^2
CriticLossResult sil_loss(ActorCritic& ac, const DenseArray& states, const DenseArray& actions, const DenseArray& z,
                          const DenseArray& returns);

struct ActorLossResult {
  double objective = 0.0;  // mean Q1(s, pi(s, z), z)
  std::vector<DenseArray> actor_grads;  // gradients of -objective
};

/// Deterministic policy gradient through Q1. Computes gradients only.
ActorLossResult actor_update(ActorCritic& ac, const DenseArray& states, const DenseArray& z);

/// target <- (1 - tau) target + tau online
void soft_update(const Mlp& online, Mlp& target, double tau);

struct Td3StepStats {
  double critic_loss = 0.0;
  double sil_loss = 0.0;
  bool actor_updated = false;
  double actor_objective = 0.0;
};

/// Records drawn from the SIL buffer with their contexts.
struct SilBatch {
  DenseArray states;
  DenseArray actions;
  DenseArray z;
  DenseArray returns;
};

/// One critic Adam step on L_td3 (+ L_sil when `sil` is given, gradients
/// summed); every policy_frequency-th call also steps the actor on the TD3
/// batch and soft-updates all three targets.
Td3StepStats td3_update(ActorCritic& ac, const Td3Config& cfg, const DenseArray& states, const DenseArray& actions,
                        const DenseArray& rewards, const DenseArray& next_states, const DenseArray& z,
                        numkit::Rng& rng, const SilBatch* sil = nullptr);

/// One critic Adam step on the SIL loss. Returns the loss.
double sil_update(ActorCritic& ac, const DenseArray& states, const DenseArray& actions, const DenseArray& z,
                  const DenseArray& returns);

}  // namespace ptl::rl
