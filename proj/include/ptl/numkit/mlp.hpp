#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ptl/numkit/dense_array.hpp"
#include "ptl/numkit/rng.hpp"

namespace ptl::numkit {

enum class Activation { relu, swish, tanh, identity };

[[nodiscard]] std::string to_string(Activation a);
[[nodiscard]] Activation activation_from_string(const std::string& name);

struct MlpSpec {
  /// Input width, hidden widths..., output width.
  std::vector<std::size_t> layer_sizes;
  Activation hidden = Activation::relu;
  Activation output = Activation::identity;
};

struct MlpGradients {
  /// Same layout as Mlp::parameters(): W0, b0, W1, b1, ...
  std::vector<DenseArray> parameters;
  /// Gradient w.r.t. the forward input batch, shape [B, in].
  DenseArray input;
};

/// Fully connected network with hand-written backpropagation.
///
/// Weights of layer l have shape [sizes[l], sizes[l+1]] and act on row-major
/// batches: y = act(x W + b). forward() caches what backward() needs; the
/// cache belongs to this instance, so interleaving two forwards before one
/// backward is a caller error.
class Mlp {
 public:
  Mlp() = default;
  /// Weights and biases uniform in +-1/sqrt(fan_in).
  Mlp(MlpSpec spec, Rng& rng);

  [[nodiscard]] const MlpSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] std::size_t input_width() const { return spec_.layer_sizes.front(); }
  [[nodiscard]] std::size_t output_width() const { return spec_.layer_sizes.back(); }
  [[nodiscard]] std::size_t layer_count() const { return spec_.layer_sizes.size() - 1; }

  DenseArray forward(const DenseArray& input);
  [[nodiscard]] DenseArray predict(const DenseArray& input) const;
  /// Gradients of a scalar loss given dLoss/dOutput for the cached batch.
  [[nodiscard]] MlpGradients backward(const DenseArray& output_gradient) const;

  [[nodiscard]] std::vector<DenseArray>& parameters() noexcept { return params_; }
  [[nodiscard]] const std::vector<DenseArray>& parameters() const noexcept { return params_; }
  void set_parameters(std::vector<DenseArray> params);
  [[nodiscard]] std::size_t parameter_count() const;
  void clear_cache() noexcept { cache_valid_ = false; }

 private:
  void check_input(const DenseArray& input) const;

  MlpSpec spec_;
  std::vector<DenseArray> params_;
  std::vector<DenseArray> layer_inputs_;
  std::vector<DenseArray> pre_activations_;
  bool cache_valid_ = false;
};

/// Zero arrays shaped like `like`.
[[nodiscard]] std::vector<DenseArray> zeros_like(const std::vector<DenseArray>& like);

/// a += scale * b, elementwise over matching parameter lists.
void accumulate(std::vector<DenseArray>& a, const std::vector<DenseArray>& b, double scale = 1.0);

/// FNV-1a over the raw bytes of every array; equal iff bitwise-equal (w.h.p.).
[[nodiscard]] std::uint64_t fingerprint(const std::vector<DenseArray>& arrays);

}  // namespace ptl::numkit
