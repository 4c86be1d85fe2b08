#include "ptl/tabular/mdp.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ptl/errors.hpp"
#include "ptl/numkit/rng.hpp"

namespace ptl::tabular {

namespace {

void require_distribution(std::span<const double> d, const std::string& what) {
  double sum = 0.0;
  for (double v : d) {
    if (!std::isfinite(v) || v < 0.0) throw DomainError(what + " has a negative or non-finite entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    std::ostringstream os;
    os << what << " sums to " << sum << ", expected 1";
    throw DomainError(os.str());
  }
}

// Dirichlet(1,...,1) via normalized exponentials.
void dirichlet_row(numkit::Rng& rng, std::span<double> out) {
  double sum = 0.0;
  for (double& v : out) {
    v = -std::log1p(-rng.uniform());
    sum += v;
  }
  for (double& v : out) v /= sum;
}

}  // namespace

FiniteMdp::FiniteMdp(std::size_t states, std::size_t actions, double discount)
    : n_states(states),
      n_actions(actions),
      gamma(discount),
      rho0(states, 1.0 / static_cast<double>(states)),
      transition(states * actions * states, 0.0),
      reward(states * actions * states, 0.0) {
  for (std::size_t s = 0; s < states; ++s)
    for (std::size_t a = 0; a < actions; ++a) p(s, a, s) = 1.0;
}

std::span<const double> FiniteMdp::next_distribution(std::size_t s, std::size_t a) const {
  return {transition.data() + index(s, a, 0), n_states};
}

double FiniteMdp::expected_reward(std::size_t s, std::size_t a) const {
  double total = 0.0;
  for (std::size_t n = 0; n < n_states; ++n) total += p(s, a, n) * r(s, a, n);
  return total;
}

bool FiniteMdp::reward_depends_only_on_states() const {
  for (std::size_t s = 0; s < n_states; ++s)
    for (std::size_t a = 1; a < n_actions; ++a)
      for (std::size_t n = 0; n < n_states; ++n)
        if (r(s, a, n) != r(s, 0, n)) return false;
  return true;
}

void FiniteMdp::validate() const {
  if (n_states == 0 || n_actions == 0) throw DimensionError("MDP needs at least one state and one action");
  const std::size_t cells = n_states * n_actions * n_states;
  if (transition.size() != cells || reward.size() != cells || rho0.size() != n_states)
    throw DimensionError("MDP tensor sizes do not match n_states/n_actions");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in [0, 1)");
  for (std::size_t s = 0; s < n_states; ++s)
    for (std::size_t a = 0; a < n_actions; ++a)
      require_distribution(next_distribution(s, a),
                           "transition row (s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")");
  require_distribution(rho0, "rho0");
  for (double v : reward)
    if (!std::isfinite(v)) throw DomainError("reward tensor has a non-finite entry");
}

StateBijection StateBijection::identity(std::size_t n) {
  std::vector<std::size_t> f(n);
  std::iota(f.begin(), f.end(), std::size_t{0});
  return from_forward(std::move(f));
}

StateBijection StateBijection::from_forward(std::vector<std::size_t> forward) {
  StateBijection g;
  g.inverse_.assign(forward.size(), forward.size());
  for (std::size_t s = 0; s < forward.size(); ++s) {
    if (forward[s] >= forward.size() || g.inverse_[forward[s]] != forward.size())
      throw DomainError("state bijection is not a permutation");
    g.inverse_[forward[s]] = s;
  }
  g.forward_ = std::move(forward);
  return g;
}

void validate_policy(const FiniteMdp& mdp, const DetPolicy& pi) {
  if (pi.action_of.size() != mdp.n_states) throw DimensionError("policy length differs from n_states");
  for (std::size_t a : pi.action_of)
    if (a >= mdp.n_actions) throw DimensionError("policy action index out of range");
}

FiniteMdp relabel_states(const FiniteMdp& mdp, const StateBijection& g) {
  if (g.size() != mdp.n_states) throw DimensionError("bijection size differs from n_states");
  FiniteMdp out = mdp;
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    out.rho0[g(s)] = mdp.rho0[s];
    for (std::size_t a = 0; a < mdp.n_actions; ++a)
      for (std::size_t n = 0; n < mdp.n_states; ++n) {
        out.p(g(s), a, g(n)) = mdp.p(s, a, n);
        out.r(g(s), a, g(n)) = mdp.r(s, a, n);
      }
  }
  return out;
}

FiniteMdp relabel_actions(const FiniteMdp& mdp, const std::vector<std::size_t>& sigma) {
  if (sigma.size() != mdp.n_actions) throw DimensionError("action relabeling size differs from n_actions");
  FiniteMdp out = mdp;
  for (std::size_t s = 0; s < mdp.n_states; ++s)
    for (std::size_t a = 0; a < mdp.n_actions; ++a)
      for (std::size_t n = 0; n < mdp.n_states; ++n) {
        out.p(s, sigma[a], n) = mdp.p(s, a, n);
        out.r(s, sigma[a], n) = mdp.r(s, a, n);
      }
  return out;
}

nlohmann::json to_json(const FiniteMdp& mdp) {
  auto tensor = [&](const std::vector<double>& flat) {
    nlohmann::json outer = nlohmann::json::array();
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
      nlohmann::json per_action = nlohmann::json::array();
      for (std::size_t a = 0; a < mdp.n_actions; ++a) {
        auto begin = flat.begin() + static_cast<std::ptrdiff_t>(mdp.index(s, a, 0));
        per_action.push_back(std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(mdp.n_states)));
      }
      outer.push_back(per_action);
    }
    return outer;
  };
  return {{"n_states", mdp.n_states}, {"n_actions", mdp.n_actions}, {"gamma", mdp.gamma},
          {"rho0", mdp.rho0},         {"transition", tensor(mdp.transition)}, {"reward", tensor(mdp.reward)}};
}

FiniteMdp mdp_from_json(const nlohmann::json& j) {
  FiniteMdp mdp;
  try {
    mdp.n_states = j.at("n_states").get<std::size_t>();
    mdp.n_actions = j.at("n_actions").get<std::size_t>();
    mdp.gamma = j.at("gamma").get<double>();
    mdp.rho0 = j.at("rho0").get<std::vector<double>>();
    auto read = [&](const char* key, std::vector<double>& flat) {
      const auto& outer = j.at(key);
      if (!outer.is_array() || outer.size() != mdp.n_states) throw DimensionError(std::string(key) + ": bad state axis");
      for (const auto& per_action : outer) {
        if (!per_action.is_array() || per_action.size() != mdp.n_actions)
          throw DimensionError(std::string(key) + ": bad action axis");
        for (const auto& row : per_action) {
          auto values = row.get<std::vector<double>>();
          if (values.size() != mdp.n_states) throw DimensionError(std::string(key) + ": bad next-state axis");
          flat.insert(flat.end(), values.begin(), values.end());
        }
      }
    };
    read("transition", mdp.transition);
    read("reward", mdp.reward);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed MDP JSON: ") + e.what());
  }
  mdp.validate();
  return mdp;
}

void save_mdp(const FiniteMdp& mdp, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << to_json(mdp).dump(1) << '\n';
}

FiniteMdp load_mdp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return mdp_from_json(j);
}

std::pair<FiniteMdp, FiniteMdp> random_mdp_pair(std::uint64_t seed, std::size_t n_states, std::size_t n_actions,
                                                double perturbation, const MdpPairOptions& options) {
  if (!(perturbation >= 0.0)) throw DomainError("perturbation must be non-negative");
  if (n_states == 0 || n_actions == 0) throw DimensionError("MDP needs at least one state and one action");
  numkit::Rng rng(seed, 0);
  numkit::Rng mix_rng(seed, 1);
  FiniteMdp base(n_states, n_actions, options.gamma);
  for (std::size_t s = 0; s < n_states; ++s)
    for (std::size_t a = 0; a < n_actions; ++a)
      dirichlet_row(rng, {base.transition.data() + base.index(s, a, 0), n_states});
  for (std::size_t s = 0; s < n_states; ++s)
    for (std::size_t a = 0; a < n_actions; ++a)
      for (std::size_t n = 0; n < n_states; ++n) {
        if (options.reward_form == RewardForm::state_next && a > 0)
          base.r(s, a, n) = base.r(s, 0, n);
        else
          base.r(s, a, n) = rng.uniform(-1.0, 1.0);
      }

  FiniteMdp other = base;
  if (perturbation > 0.0) {
    const double w = std::min(perturbation, 1.0);
    std::vector<double> fresh(n_states);
    for (std::size_t s = 0; s < n_states; ++s)
      for (std::size_t a = 0; a < n_actions; ++a) {
        dirichlet_row(mix_rng, fresh);
        for (std::size_t n = 0; n < n_states; ++n) other.p(s, a, n) = (1.0 - w) * base.p(s, a, n) + w * fresh[n];
      }
  }
  return {std::move(base), std::move(other)};
}

}  // namespace ptl::tabular
