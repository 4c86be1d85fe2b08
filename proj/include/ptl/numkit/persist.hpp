#pragma once

#include <string>

#include "ptl/numkit/adam.hpp"
#include "ptl/numkit/checkpoint.hpp"
#include "ptl/numkit/mlp.hpp"
#include "ptl/numkit/rng.hpp"

namespace ptl::numkit {

void save_mlp(Checkpoint& ckpt, const std::string& prefix, const Mlp& net);
/// Loads parameters into an already-constructed network of the same shape.
void load_mlp(const Checkpoint& ckpt, const std::string& prefix, Mlp& net);

void save_adam(Checkpoint& ckpt, const std::string& prefix, const AdamState& state);
void load_adam(const Checkpoint& ckpt, const std::string& prefix, AdamState& state);

void save_rng(Checkpoint& ckpt, const std::string& name, const Rng& rng);
void load_rng(const Checkpoint& ckpt, const std::string& name, Rng& rng);

}  // namespace ptl::numkit
