#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "ptl/mcat/fixed_dataset.hpp"

using namespace ptl;
using numkit::DenseArray;
using numkit::Mlp;

namespace {

mcat::FixedDatasetConfig quick_config(std::uint64_t seed) {
  mcat::FixedDatasetConfig cfg;
  cfg.cf_steps = 2000;
  cfg.h_steps = 2000;
  cfg.eval_episodes = 30;
  cfg.seed = seed;
  return cfg;
}

envs::PointMassParams rotated(double degrees) {
  envs::PointMassParams p;
  p.rotation = degrees * std::numbers::pi / 180.0;
  return p;
}

struct Fitted {
  rl::ReplayBuffer a, b, held_out;
  mcat::TransferModels models;
};

Fitted fit_pair(const envs::PointMassParams& pa, const envs::PointMassParams& pb, std::uint64_t seed) {
  const auto cfg = quick_config(seed);
  numkit::Rng data(seed, 1), init(seed, 2), train(seed, 3);
  auto a = mcat::collect_dataset(pa, cfg, data);
  auto b = mcat::collect_dataset(pb, cfg, data);
  auto held = mcat::collect_dataset(pa, cfg, data);
  mcat::TransferModels m(cfg.model, cfg.learner, init);
  mcat::fit_transfer_models(m, {&a, &b}, cfg, train);
  return {std::move(a), std::move(b), std::move(held), std::move(m)};
}

}  // namespace

TEST(TrainedTranslator, IdentityOnIdenticalTasks) {
  for (std::uint64_t seed : {1, 2, 3}) {
    // converged: longer C/F fit, then H annealed to a tenth of its rate
    auto cfg = quick_config(seed);
    cfg.cf_steps = 8000;
    cfg.h_steps = 3000;
    numkit::Rng data(seed, 1), init(seed, 2), train(seed, 3);
    const auto a = mcat::collect_dataset({}, cfg, data), b = mcat::collect_dataset({}, cfg, data);
    const auto held_out = mcat::collect_dataset({}, cfg, data);
    mcat::TransferModels m(cfg.model, cfg.learner, init);
    mcat::fit_transfer_models(m, {&a, &b}, cfg, train);
    m.translator_opt.config.learning_rate *= 0.1;
    for (int k = 0; k < 2000; ++k) (void)mcat::train_translator_step(m, {&a, &b}, train);

    numkit::Rng rng(seed, 9);
    const auto& z = m.features[0];
    double worst = 0.0;
    for (std::size_t k = 0; k < 2000; ++k) {
      const auto row = held_out.gather({rng.index(held_out.size())});
      const std::vector<double> act{row.actions(0, 0), row.actions(0, 1)};
      const auto out = mcat::translate_one(m.translator, m.model, row.states.values(), act, z, z);
      for (std::size_t d = 0; d < 2; ++d) worst = std::max(worst, std::abs(out[d] - act[d]));
    }
    std::printf("seed %llu: max |H(s,a,z,z) - a| = %.4f\n", static_cast<unsigned long long>(seed), worst);
    EXPECT_LT(worst, 0.05);
  }
}

TEST(TrainedTranslator, NoisyActionsRaiseTranslationLoss) {
  for (std::uint64_t seed : {1, 2, 3}) {
    auto f = fit_pair(rotated(0), rotated(90), seed);
    numkit::Rng rng(seed, 9);
    const auto batch = f.a.gather(f.a.sample_indices(512, rng));
    models::TransitionBatch tb{batch.states, batch.actions, batch.next_states, batch.rewards};
    auto zs = DenseArray::matrix(tb.size(), f.models.model.context_dim), zt = zs;
    for (std::size_t r = 0; r < tb.size(); ++r)
      for (std::size_t c = 0; c < zs.cols(); ++c) {
        zs(r, c) = f.models.features[0][c];
        zt(r, c) = f.models.features[1][c];
      }
    Mlp h = f.models.translator, fwd = f.models.forward;
    const double clean = models::translation_loss(h, fwd, f.models.model, tb, zs, zt).loss;
    double noisy = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
      Mlp perturbed = f.models.translator;
      auto& bias = perturbed.parameters().back();
      for (double& v : bias.values()) v += rng.gaussian(0.0, 0.5);
      noisy += models::translation_loss(perturbed, fwd, f.models.model, tb, zs, zt).loss / 5.0;
    }
    std::printf("seed %llu: L_trans clean %.4f, with action noise %.4f\n", static_cast<unsigned long long>(seed),
                clean, noisy);
    EXPECT_GT(noisy, clean);
  }
}

TEST(FixedDatasetTransfer, SameTaskKeepsSourcePerformance) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto cfg = quick_config(seed);
    numkit::Rng data(seed, 1);
    envs::PointMassParams p;
    const auto a = mcat::collect_dataset(p, cfg, data), b = mcat::collect_dataset(p, cfg, data);
    const auto rep = mcat::fixed_dataset_transfer(a, b, p, p, mcat::throttle_policy(p), cfg);
    std::printf("seed %llu: source %.2f transferred %.2f\n", static_cast<unsigned long long>(seed),
                rep.source_on_source.mean, rep.transferred_on_target.mean);
    EXPECT_NEAR(rep.transferred_on_target.mean, rep.source_on_source.mean, 0.1 * std::abs(rep.source_on_source.mean));
  }
}

TEST(ContextEncoder, SeparatesTwoTasks) {
  auto f = fit_pair(rotated(0), rotated(90), 4);
  numkit::Rng rng(4, 9);
  const auto sep = mcat::embedding_separation(mcat::task_embeddings(f.models, {&f.a, &f.b}, 200, rng));
  std::printf("within %.4f cross %.4f\n", sep.within, sep.cross);
  EXPECT_LT(sep.within, sep.cross);
}
