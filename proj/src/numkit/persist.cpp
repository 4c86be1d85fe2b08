#include "ptl/numkit/persist.hpp"

#include "ptl/errors.hpp"

namespace ptl::numkit {

void save_mlp(Checkpoint& ckpt, const std::string& prefix, const Mlp& net) {
  ckpt.put_list(prefix, net.parameters());
}

void load_mlp(const Checkpoint& ckpt, const std::string& prefix, Mlp& net) {
  net.set_parameters(ckpt.get_list(prefix, net.parameters().size()));
}

void save_adam(Checkpoint& ckpt, const std::string& prefix, const AdamState& state) {
  ckpt.put_list(prefix + "/m", state.first_moment);
  ckpt.put_list(prefix + "/v", state.second_moment);
  ckpt.put(prefix + "/step", DenseArray::vector({static_cast<double>(state.step_count)}));
}

void load_adam(const Checkpoint& ckpt, const std::string& prefix, AdamState& state) {
  auto m = ckpt.get_list(prefix + "/m", state.first_moment.size());
  auto v = ckpt.get_list(prefix + "/v", state.second_moment.size());
  for (std::size_t k = 0; k < m.size(); ++k) {
    require_same_shape(m[k], state.first_moment[k], "checkpoint adam moments");
    require_same_shape(v[k], state.second_moment[k], "checkpoint adam moments");
  }
  state.first_moment = std::move(m);
  state.second_moment = std::move(v);
  state.step_count = static_cast<std::int64_t>(ckpt.get(prefix + "/step")[0]);
}

void save_rng(Checkpoint& ckpt, const std::string& name, const Rng& rng) { ckpt.meta["rng"][name] = rng.state(); }

void load_rng(const Checkpoint& ckpt, const std::string& name, Rng& rng) {
  if (!ckpt.meta.contains("rng") || !ckpt.meta["rng"].contains(name))
    throw StateError("checkpoint lacks rng state '" + name + "'");
  rng.set_state(ckpt.meta["rng"][name].get<std::string>());
}

}  // namespace ptl::numkit
