#include "ptl/cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "ptl/errors.hpp"

namespace ptl::cli {

envs::PointMassParams task_params(const TaskSpec& spec, double value) {
  envs::PointMassParams p;
  p.drag = spec.drag;
  p.dt = spec.dt;
  p.control_cost = spec.control_cost;
  if (spec.family == "mass") {
    p.mass = value;
  } else if (spec.family == "gain") {
    p.gain[0] = value;
  } else if (spec.family == "rotation") {
    p.rotation = value * std::numbers::pi / 180.0;
  } else if (spec.family == "crippled") {
    if (value == -1.0) return p;
    if (value != 0.0 && value != 1.0) throw UsageError("crippled family values must be -1, 0 or 1");
    p.crippled_dims = {static_cast<std::size_t>(value)};
  } else {
    throw UsageError("unknown task family '" + spec.family + "' (mass, gain, rotation, crippled)");
  }
  return p;
}

envs::TaskSet build_task_set(const TaskSpec& spec) {
  envs::TaskSet set;
  set.family = spec.family;
  set.horizon = spec.horizon;
  set.delay_steps = spec.delay_steps;
  for (double v : spec.train) set.train_params.push_back(task_params(spec, v));
  for (double v : spec.test) set.test_params.push_back(task_params(spec, v));
  return set;
}

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.mcat.tasks = build_task_set(cfg.tasks);
  return cfg;
}

namespace {

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

template <class T>
T parse_number(const std::string& text) {
  T v{};
  const auto s = trim(text);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw UsageError("malformed number '" + s + "'");
  if constexpr (std::is_floating_point_v<T>)
    if (!std::isfinite(v)) throw UsageError("non-finite number '" + s + "'");
  return v;
}

bool parse_bool(const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw UsageError("expected true or false, got '" + text + "'");
}

template <class T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> out;
  if (trim(text).empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(item));
  return out;
}

template <class T>
std::string fmt_list(const std::vector<T>& values) {
  std::string out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) out += ", ";
    if constexpr (std::is_floating_point_v<T>)
      out += fmt_double(values[k]);
    else
      out += std::to_string(values[k]);
  }
  return out;
}

template <class T>
Field number(std::string section, std::string key, T& (*ref)(ExperimentConfig&)) {
  return {std::move(section), std::move(key),
          [ref](const ExperimentConfig& c) {
            const T v = ref(const_cast<ExperimentConfig&>(c));
            if constexpr (std::is_floating_point_v<T>)
              return fmt_double(v);
            else
              return std::to_string(v);
          },
          [ref](ExperimentConfig& c, const std::string& s) { ref(c) = parse_number<T>(s); }};
}

template <class T>
Field list(std::string section, std::string key, std::vector<T>& (*ref)(ExperimentConfig&)) {
  return {std::move(section), std::move(key),
          [ref](const ExperimentConfig& c) { return fmt_list(ref(const_cast<ExperimentConfig&>(c))); },
          [ref](ExperimentConfig& c, const std::string& s) { ref(c) = parse_list<T>(s); }};
}

Field flag(std::string section, std::string key, bool& (*ref)(ExperimentConfig&)) {
  return {std::move(section), std::move(key),
          [ref](const ExperimentConfig& c) { return std::string(ref(const_cast<ExperimentConfig&>(c)) ? "true" : "false"); },
          [ref](ExperimentConfig& c, const std::string& s) { ref(c) = parse_bool(s); }};
}

Field text(std::string section, std::string key, std::string& (*ref)(ExperimentConfig&)) {
  return {std::move(section), std::move(key),
          [ref](const ExperimentConfig& c) { return ref(const_cast<ExperimentConfig&>(c)); },
          [ref](ExperimentConfig& c, const std::string& s) { ref(c) = s; }};
}

#define PTL_REF(expr) +[](ExperimentConfig& c) -> auto& { return expr; }

const std::vector<Field>& schema() {
  static const std::vector<Field> fields = {
      number<std::uint64_t>("run", "seed", PTL_REF(c.mcat.seed)),
      text("run", "out", PTL_REF(c.out)),
      number<std::size_t>("run", "iterations", PTL_REF(c.mcat.iterations)),
      number<std::size_t>("run", "eval_episodes", PTL_REF(c.mcat.eval_episodes)),
      number<std::size_t>("run", "checkpoint_every", PTL_REF(c.mcat.checkpoint_every)),
      number<std::size_t>("run", "random_steps", PTL_REF(c.mcat.random_steps)),
      number<std::uint64_t>("run", "reward_window", PTL_REF(c.mcat.reward_window)),
      number<std::size_t>("run", "replay_capacity", PTL_REF(c.mcat.replay_capacity)),
      number<std::size_t>("run", "sil_capacity", PTL_REF(c.mcat.sil_capacity)),

      text("tasks", "family", PTL_REF(c.tasks.family)),
      list<double>("tasks", "train", PTL_REF(c.tasks.train)),
      list<double>("tasks", "test", PTL_REF(c.tasks.test)),
      number<std::size_t>("tasks", "horizon", PTL_REF(c.tasks.horizon)),
      number<std::size_t>("tasks", "delay_steps", PTL_REF(c.tasks.delay_steps)),
      number<double>("tasks", "drag", PTL_REF(c.tasks.drag)),
      number<double>("tasks", "dt", PTL_REF(c.tasks.dt)),
      number<double>("tasks", "control_cost", PTL_REF(c.tasks.control_cost)),

      number<std::size_t>("schedule", "samples_per_iter", PTL_REF(c.mcat.schedule.samples_per_iter)),
      number<std::size_t>("schedule", "cf_steps", PTL_REF(c.mcat.schedule.cf_steps)),
      number<std::size_t>("schedule", "h_steps", PTL_REF(c.mcat.schedule.h_steps)),
      number<std::size_t>("schedule", "rl_steps", PTL_REF(c.mcat.schedule.rl_steps)),

      number<std::size_t>("models", "history_k", PTL_REF(c.mcat.model.history_k)),
      number<std::size_t>("models", "future_m", PTL_REF(c.mcat.model.future_m)),
      number<std::size_t>("models", "context_dim", PTL_REF(c.mcat.model.context_dim)),
      list<std::size_t>("models", "encoder_hidden", PTL_REF(c.mcat.model.encoder_hidden)),
      list<std::size_t>("models", "forward_hidden", PTL_REF(c.mcat.model.forward_hidden)),
      list<std::size_t>("models", "translator_hidden", PTL_REF(c.mcat.model.translator_hidden)),
      list<std::size_t>("models", "reward_hidden", PTL_REF(c.mcat.model.reward_hidden)),
      number<double>("models", "delta_scale", PTL_REF(c.mcat.model.delta_scale)),
      list<double>("models", "state_input_scale", PTL_REF(c.mcat.model.state_input_scale)),
      number<double>("models", "logvar_min", PTL_REF(c.mcat.model.logvar_min)),
      number<double>("models", "logvar_max", PTL_REF(c.mcat.model.logvar_max)),
      number<double>("models", "margin", PTL_REF(c.mcat.model.margin)),
      number<double>("models", "context_lr", PTL_REF(c.mcat.learner.context_lr)),
      number<double>("models", "translator_lr", PTL_REF(c.mcat.learner.translator_lr)),
      number<double>("models", "reward_lr", PTL_REF(c.mcat.learner.reward_lr)),
      number<std::size_t>("models", "context_batch", PTL_REF(c.mcat.learner.context_batch)),
      number<std::size_t>("models", "translator_batch", PTL_REF(c.mcat.learner.translator_batch)),
      number<std::size_t>("models", "feature_samples", PTL_REF(c.mcat.learner.feature_samples)),
      number<double>("models", "reward_lambda", PTL_REF(c.mcat.learner.reward_lambda)),

      number<std::size_t>("td3", "batch_size", PTL_REF(c.mcat.td3.batch_size)),
      number<double>("td3", "gamma", PTL_REF(c.mcat.td3.gamma)),
      number<double>("td3", "tau", PTL_REF(c.mcat.td3.tau)),
      number<double>("td3", "policy_noise", PTL_REF(c.mcat.td3.policy_noise)),
      number<double>("td3", "noise_clip", PTL_REF(c.mcat.td3.noise_clip)),
      number<std::size_t>("td3", "policy_frequency", PTL_REF(c.mcat.td3.policy_frequency)),
      number<double>("td3", "actor_lr", PTL_REF(c.mcat.td3.actor_lr)),
      number<double>("td3", "critic_lr", PTL_REF(c.mcat.td3.critic_lr)),
      number<double>("td3", "exploration_sigma", PTL_REF(c.mcat.td3.exploration_sigma)),
      list<std::size_t>("td3", "hidden", PTL_REF(c.mcat.td3.hidden)),

      flag("ablation", "pt_enabled", PTL_REF(c.mcat.pt_enabled)),
      flag("ablation", "sil_enabled", PTL_REF(c.mcat.sil_enabled)),
      flag("ablation", "contrastive_enabled", PTL_REF(c.mcat.learner.contrastive)),
      flag("ablation", "reward_augmented_trans", PTL_REF(c.mcat.learner.reward_augmented)),

      number<std::size_t>("transfer", "episodes", PTL_REF(c.transfer_episodes)),
  };
  return fields;
}

#undef PTL_REF

void validate(ExperimentConfig& cfg) {
  cfg.mcat.tasks = build_task_set(cfg.tasks);
  for (const auto* hidden : {&cfg.mcat.model.encoder_hidden, &cfg.mcat.model.forward_hidden,
                             &cfg.mcat.model.translator_hidden, &cfg.mcat.model.reward_hidden, &cfg.mcat.td3.hidden})
    for (std::size_t w : *hidden)
      if (w == 0) throw UsageError("hidden layer widths must be positive");
  if (cfg.mcat.model.history_k == 0 || cfg.mcat.model.future_m == 0 || cfg.mcat.model.context_dim == 0)
    throw UsageError("history_k, future_m and context_dim must be positive");
  const auto& scale = cfg.mcat.model.state_input_scale;
  if (!scale.empty() && scale.size() != cfg.mcat.model.state_dim)
    throw UsageError("models.state_input_scale needs one entry per state dimension or none");
  if (cfg.transfer_episodes == 0) throw UsageError("transfer.episodes must be positive");
  if (cfg.out.empty()) throw UsageError("run.out must not be empty");
  try {
    cfg.mcat.validate();
  } catch (const DomainError& e) {
    throw UsageError(std::string("invalid config: ") + e.what());
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  std::map<std::string, const Field*> lookup;
  std::set<std::string> sections;
  for (const auto& f : schema()) {
    lookup[f.section + "." + f.key] = &f;
    sections.insert(f.section);
  }
  ExperimentConfig cfg = default_config();
  std::set<std::string> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw UsageError(where + "malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (!sections.contains(section)) throw UsageError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(where + "expected key = value");
    if (section.empty()) throw UsageError(where + "key outside any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string name = section + "." + key;
    const auto it = lookup.find(name);
    if (it == lookup.end()) throw UsageError(where + "unknown key '" + key + "' in [" + section + "]");
    if (!seen.insert(name).second) throw UsageError(where + "repeated key '" + name + "'");
    try {
      it->second->set(cfg, trim(line.substr(eq + 1)));
    } catch (const UsageError& e) {
      throw UsageError(where + "key '" + name + "': " + e.what());
    }
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out, section;
  for (const auto& f : schema()) {
    if (f.section != section) {
      if (!section.empty()) out += "\n";
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += f.key + " = " + f.get(cfg) + "\n";
  }
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const auto& f : schema()) {
    if (f.section == "run" && (f.key == "seed" || f.key == "out")) continue;
    for (unsigned char ch : f.section + "." + f.key + "=" + f.get(cfg) + "\n") {
      h ^= ch;
      h *= 1099511628211ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ptl::cli
