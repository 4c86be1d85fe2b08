#include "ptl/cli/commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include <CLI11.hpp>

#include "ptl/cli/metrics.hpp"
#include "ptl/errors.hpp"
#include "ptl/mcat/evaluation.hpp"

namespace ptl::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_csv(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

void save_checkpoint(const mcat::Trainer& trainer, const fs::path& out) {
  const fs::path tmp = out / "checkpoint.tmp";
  const fs::path dst = out / "checkpoint";
  fs::remove_all(tmp);
  trainer.save(tmp);
  fs::remove_all(dst);
  fs::rename(tmp, dst);
}

}  // namespace

VerifyBoundsSummary verify_bounds(const VerifyBoundsOptions& opts, const fs::path& csv) {
  if (opts.seeds == 0) throw UsageError("--seeds must be at least 1");
  if (opts.states == 0 || opts.actions == 0) throw UsageError("--states and --actions must be positive");
  std::optional<std::ofstream> out;
  if (!csv.empty()) {
    out.emplace(open_csv(csv));
    *out << "mode,perturbation,seed,n_states,n_actions,d,M,bound,max_observed_gap,satisfied\n";
  }
  VerifyBoundsSummary summary;
  for (double eps : opts.perturbations) {
    for (std::size_t k = 0; k < opts.seeds; ++k) {
      const std::uint64_t seed = opts.base_seed + k;
      const auto inst =
          tabular::make_bound_instance(seed, opts.states, opts.actions, eps, opts.mode, opts.identity_bijection);
      const auto rep = tabular::verify_instance(inst, opts.mode);
      ++summary.instances;
      if (rep.satisfied) ++summary.satisfied;
      if (out)
        *out << tabular::to_string(opts.mode) << ',' << fmt(eps) << ',' << seed << ',' << opts.states << ','
             << opts.actions << ',' << fmt(rep.d) << ',' << fmt(rep.M) << ',' << fmt(rep.bound) << ','
             << fmt(rep.max_observed_gap) << ',' << (rep.satisfied ? 1 : 0) << '\n';
      summary.reports.push_back(rep);
    }
  }
  return summary;
}

void train(const ExperimentConfig& cfg, const TrainOptions& opts) {
  const fs::path out = cfg.out;
  fs::create_directories(out);
  {
    std::ofstream c(out / "config.ini", std::ios::trunc);
    c << serialize_config(cfg);
  }
  const std::string hash = config_hash(cfg);
  mcat::Trainer trainer(cfg.mcat);
  if (opts.resume) {
    if (!fs::exists(out / "checkpoint")) throw StateError("no checkpoint to resume under " + out.string());
    trainer.load(out / "checkpoint");
    truncate_metrics(out / "metrics.jsonl", trainer.iteration());
  }
  MetricsWriter metrics(out / "metrics.jsonl", !opts.resume);
  MetricsWriter timing(out / "timing.jsonl", !opts.resume);
  const std::size_t stop =
      opts.max_iterations == 0 ? cfg.mcat.iterations : std::min(opts.max_iterations, cfg.mcat.iterations);
  bool saved = false;
  while (trainer.iteration() < stop) {
    const auto t0 = std::chrono::steady_clock::now();
    auto rec = trainer.run_iteration();
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec["config_hash"] = hash;
    metrics.append(rec);
    timing.append({{"iteration", rec["iteration"]}, {"global_step", rec["global_step"]}, {"wall_seconds", seconds}});
    saved = trainer.iteration() % cfg.mcat.checkpoint_every == 0;
    if (saved) save_checkpoint(trainer, out);
  }
  if (!saved) save_checkpoint(trainer, out);
}

std::vector<TransferRow> transfer_eval(const ExperimentConfig& cfg,
                                       const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  const fs::path ckpt = fs::path(cfg.out) / "checkpoint";
  if (!fs::exists(ckpt)) throw StateError("no checkpoint under " + cfg.out + "; run train first");
  mcat::Trainer trainer(cfg.mcat);
  trainer.load(ckpt);
  const auto& models = trainer.models();
  const std::size_t n = cfg.mcat.tasks.n_train();
  if (models.features.size() != n) throw StateError("checkpoint has no task features; train at least one iteration");
  const auto& tasks = cfg.mcat.tasks;
  std::vector<TransferRow> rows;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [j, i] = pairs[p];
    if (j >= n || i >= n) throw UsageError("task index out of range (" + std::to_string(n) + " training tasks)");
    const auto source = trainer.task_policy(j);
    const auto transferred = mcat::translated_policy(models.translator, models.model, source, models.features[j], models.features[i]);
    // both arms see the same start states
    numkit::Rng rng_a(cfg.mcat.seed, 2000 + p), rng_b = rng_a;
    const auto so = mcat::evaluate_policy(tasks.train_params[i], tasks.horizon, tasks.delay_steps, source,
                                          cfg.transfer_episodes, rng_a, cfg.mcat.model.history_k);
    const auto tr = mcat::evaluate_policy(tasks.train_params[i], tasks.horizon, tasks.delay_steps, transferred,
                                          cfg.transfer_episodes, rng_b, cfg.mcat.model.history_k);
    TransferRow row{j, i, so.mean, so.std_error, tr.mean, tr.std_error, 0.0};
    row.improvement_pct = so.mean == 0.0 ? 0.0 : 100.0 * (tr.mean - so.mean) / std::abs(so.mean);
    rows.push_back(row);
  }
  return rows;
}

void write_transfer_csv(const std::vector<TransferRow>& rows, const fs::path& path) {
  auto out = open_csv(path);
  out << "source,target,source_on_target_mean,source_on_target_stderr,transferred_mean,transferred_stderr,"
         "improvement_pct\n";
  for (const auto& r : rows)
    out << r.source << ',' << r.target << ',' << fmt(r.source_on_target_mean) << ',' << fmt(r.source_on_target_stderr)
        << ',' << fmt(r.transferred_mean) << ',' << fmt(r.transferred_stderr) << ',' << fmt(r.improvement_pct) << '\n';
}

std::vector<fs::path> plot(const std::vector<fs::path>& metrics_files, const std::vector<std::string>& keys,
                           const fs::path& out_dir) {
  if (metrics_files.empty()) throw UsageError("plot needs at least one metrics file");
  if (keys.empty()) throw UsageError("plot needs --keys");
  std::map<std::string, std::vector<std::vector<nlohmann::json>>> groups;
  std::set<std::string> available;
  for (const auto& f : metrics_files) {
    auto records = read_metrics(f);
    std::string hash = "unhashed";
    for (const auto& rec : records) {
      for (const auto& [k, v] : rec.items())
        if (v.is_number()) available.insert(k);
      if (rec.contains("config_hash")) hash = rec["config_hash"].get<std::string>();
    }
    groups[hash].push_back(std::move(records));
  }
  for (const auto& key : keys)
    if (!available.contains(key)) {
      std::string list;
      for (const auto& k : available) list += (list.empty() ? "" : ", ") + k;
      throw UsageError("key '" + key + "' not found; available keys: " + list);
    }
  std::vector<fs::path> written;
  for (const auto& key : keys) {
    std::string stem = key;
    for (char& ch : stem)
      if (ch == '/') ch = '_';
    for (const auto& [hash, runs] : groups) {
      const fs::path path = out_dir / (stem + "_" + hash + ".csv");
      auto out = open_csv(path);
      out << "step,mean,stderr,n\n";
      for (const auto& p : aggregate_series(runs, key))
        out << p.step << ',' << fmt(p.mean) << ',' << fmt(p.std_error) << ',' << p.n << '\n';
      written.push_back(path);
    }
  }
  return written;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Policy-transfer lab: bound verification, MCAT training and transfer evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out_override;
  std::optional<std::uint64_t> seed_override;
  app.add_option("--config", config_path, "Experiment config file");
  app.add_option("--seed", seed_override, "Override run.seed");
  app.add_option("--out", out_override, "Override run.out");

  VerifyBoundsOptions vb;
  std::string mode = "thm1";
  auto* vb_cmd = app.add_subcommand("verify-bounds", "Check the value-gap bounds on random finite MDP pairs");
  vb_cmd->add_option("--seeds", vb.seeds, "Instances per perturbation");
  vb_cmd->add_option("--states", vb.states, "States per MDP");
  vb_cmd->add_option("--actions", vb.actions, "Actions per MDP");
  vb_cmd->add_option("--perturbations", vb.perturbations, "Perturbation sizes")->delimiter(',');
  vb_cmd->add_option("--mode", mode, "thm1, prop1 or prop2");
  vb_cmd->add_flag("--identity-bijection", vb.identity_bijection, "prop2 with G = identity");

  TrainOptions topts;
  auto* train_cmd = app.add_subcommand("train", "Run MCAT training");
  train_cmd->add_flag("--resume", topts.resume, "Continue from <out>/checkpoint");
  train_cmd->add_option("--max-iterations", topts.max_iterations, "Stop once this many iterations are done");

  std::optional<std::size_t> source, target;
  bool matrix = false;
  auto* te_cmd = app.add_subcommand("transfer-eval", "Evaluate translated policies from a checkpoint");
  te_cmd->add_option("--source", source, "Source training task");
  te_cmd->add_option("--target", target, "Target training task");
  te_cmd->add_flag("--matrix", matrix, "All ordered pairs");

  std::vector<std::string> metrics_files, keys;
  auto* plot_cmd = app.add_subcommand("plot", "Export learning-curve series as CSV");
  plot_cmd->add_option("metrics", metrics_files, "Metrics JSONL files")->required();
  plot_cmd->add_option("--keys", keys, "Metric keys")->required()->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    ExperimentConfig cfg = config_path.empty() ? default_config() : load_config(config_path);
    if (seed_override) cfg.mcat.seed = *seed_override;
    if (!out_override.empty()) cfg.out = out_override;
    const fs::path out = cfg.out;

    if (*vb_cmd) {
      vb.mode = tabular::bound_mode_from_string(mode);
      vb.base_seed = cfg.mcat.seed;
      const auto summary = verify_bounds(vb, out / ("bounds_" + mode + ".csv"));
      std::cout << mode << ": " << summary.satisfied << "/" << summary.instances << " bounds satisfied\n";
      return summary.satisfied == summary.instances ? kExitOk : kExitBoundViolation;
    }
    if (*train_cmd) {
      train(cfg, topts);
      std::cout << "metrics written to " << (out / "metrics.jsonl").string() << "\n";
      return kExitOk;
    }
    if (*te_cmd) {
      std::vector<std::pair<std::size_t, std::size_t>> pairs;
      fs::path csv;
      if (matrix) {
        if (source || target) throw UsageError("--matrix excludes --source/--target");
        for (std::size_t j = 0; j < cfg.mcat.tasks.n_train(); ++j)
          for (std::size_t i = 0; i < cfg.mcat.tasks.n_train(); ++i) pairs.emplace_back(j, i);
        csv = out / "transfer_matrix.csv";
      } else {
        if (!source || !target) throw UsageError("transfer-eval needs --source and --target, or --matrix");
        pairs.emplace_back(*source, *target);
        csv = out / ("transfer_" + std::to_string(*source) + "_" + std::to_string(*target) + ".csv");
      }
      write_transfer_csv(transfer_eval(cfg, pairs), csv);
      std::cout << "report written to " << csv.string() << "\n";
      return kExitOk;
    }
    std::vector<fs::path> files(metrics_files.begin(), metrics_files.end());
    for (const auto& p : plot(files, keys, out / "plot")) std::cout << p.string() << "\n";
    return kExitOk;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace ptl::cli
