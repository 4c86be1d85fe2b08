#include "ptl/numkit/mlp.hpp"

#include <cmath>
#include <cstring>

#include "ptl/errors.hpp"

namespace ptl::numkit {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void apply_activation(Activation a, DenseArray& z) {
  switch (a) {
    case Activation::relu:
      for (double& v : z.values()) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::swish:
      for (double& v : z.values()) v = v * sigmoid(v);
      break;
    case Activation::tanh:
      for (double& v : z.values()) v = std::tanh(v);
      break;
    case Activation::identity:
      break;
  }
}

// grad <- grad * act'(pre)
void apply_activation_derivative(Activation a, const DenseArray& pre, DenseArray& grad) {
  auto g = grad.values();
  auto z = pre.values();
  switch (a) {
    case Activation::relu:
      for (std::size_t k = 0; k < g.size(); ++k) g[k] = z[k] > 0.0 ? g[k] : 0.0;
      break;
    case Activation::swish:
      for (std::size_t k = 0; k < g.size(); ++k) {
        const double s = sigmoid(z[k]);
        g[k] *= s * (1.0 + z[k] * (1.0 - s));
      }
      break;
    case Activation::tanh:
      for (std::size_t k = 0; k < g.size(); ++k) {
        const double t = std::tanh(z[k]);
        g[k] *= 1.0 - t * t;
      }
      break;
    case Activation::identity:
      break;
  }
}

DenseArray affine(const DenseArray& x, const DenseArray& w, const DenseArray& b) {
  DenseArray z = DenseArray::matrix(x.rows(), w.cols());
  auto zm = z.as_matrix();
  zm.noalias() = x.as_matrix() * w.as_matrix();
  zm.rowwise() += b.as_matrix().row(0);
  return z;
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::swish: return "swish";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "swish") return Activation::swish;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw InputError("unknown activation '" + name + "'");
}

Mlp::Mlp(MlpSpec spec, Rng& rng) : spec_(std::move(spec)) {
  if (spec_.layer_sizes.size() < 2) throw DimensionError("Mlp: need at least input and output sizes");
  for (auto s : spec_.layer_sizes) {
    if (s == 0) throw DimensionError("Mlp: zero-width layer");
  }
  for (std::size_t l = 0; l + 1 < spec_.layer_sizes.size(); ++l) {
    const auto fan_in = spec_.layer_sizes[l];
    const auto fan_out = spec_.layer_sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    DenseArray w = DenseArray::matrix(fan_in, fan_out);
    DenseArray b({fan_out});
    for (double& v : w.values()) v = rng.uniform(-bound, bound);
    for (double& v : b.values()) v = rng.uniform(-bound, bound);
    params_.push_back(std::move(w));
    params_.push_back(std::move(b));
  }
}

void Mlp::check_input(const DenseArray& input) const {
  if (params_.empty()) throw StateError("Mlp: network is not initialized");
  if (input.rank() != 2 || input.cols() != input_width()) {
    throw DimensionError("Mlp: input shape " + shape_string(input.shape()) + " does not match width " +
                         std::to_string(input_width()));
  }
}

DenseArray Mlp::forward(const DenseArray& input) {
  check_input(input);
  const auto n = layer_count();
  layer_inputs_.resize(n);
  pre_activations_.resize(n);
  DenseArray x = input;
  for (std::size_t l = 0; l < n; ++l) {
    DenseArray z = affine(x, params_[2 * l], params_[2 * l + 1]);
    layer_inputs_[l] = std::move(x);
    pre_activations_[l] = z;
    apply_activation(l + 1 == n ? spec_.output : spec_.hidden, z);
    x = std::move(z);
  }
  cache_valid_ = true;
  return x;
}

DenseArray Mlp::predict(const DenseArray& input) const {
  check_input(input);
  const auto n = layer_count();
  DenseArray x = input;
  for (std::size_t l = 0; l < n; ++l) {
    DenseArray z = affine(x, params_[2 * l], params_[2 * l + 1]);
    apply_activation(l + 1 == n ? spec_.output : spec_.hidden, z);
    x = std::move(z);
  }
  return x;
}

MlpGradients Mlp::backward(const DenseArray& output_gradient) const {
  if (!cache_valid_) throw StateError("Mlp::backward called before forward");
  const auto n = layer_count();
  const auto batch = layer_inputs_.front().rows();
  if (output_gradient.rows() != batch || output_gradient.cols() != output_width()) {
    throw DimensionError("Mlp::backward: gradient shape " + shape_string(output_gradient.shape()) +
                         " does not match cached batch");
  }
  MlpGradients grads;
  grads.parameters.resize(params_.size());
  DenseArray g = output_gradient;
  if (g.rank() != 2) g = DenseArray({batch, output_width()}, std::vector<double>(g.values().begin(), g.values().end()));
  for (std::size_t l = n; l-- > 0;) {
    apply_activation_derivative(l + 1 == n ? spec_.output : spec_.hidden, pre_activations_[l], g);
    const DenseArray& x = layer_inputs_[l];
    const DenseArray& w = params_[2 * l];
    DenseArray dw = DenseArray::matrix(w.rows(), w.cols());
    dw.as_matrix().noalias() = x.as_matrix().transpose() * g.as_matrix();
    DenseArray db({w.cols()});
    db.as_matrix().row(0) = g.as_matrix().colwise().sum();
    DenseArray dx = DenseArray::matrix(batch, w.rows());
    dx.as_matrix().noalias() = g.as_matrix() * w.as_matrix().transpose();
    grads.parameters[2 * l] = std::move(dw);
    grads.parameters[2 * l + 1] = std::move(db);
    g = std::move(dx);
  }
  grads.input = std::move(g);
  return grads;
}

void Mlp::set_parameters(std::vector<DenseArray> params) {
  if (params.size() != params_.size()) throw DimensionError("Mlp::set_parameters: parameter count mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) require_same_shape(params[k], params_[k], "Mlp::set_parameters");
  params_ = std::move(params);
  cache_valid_ = false;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

std::vector<DenseArray> zeros_like(const std::vector<DenseArray>& like) {
  std::vector<DenseArray> out;
  out.reserve(like.size());
  for (const auto& a : like) out.emplace_back(a.shape(), 0.0);
  return out;
}

void accumulate(std::vector<DenseArray>& a, const std::vector<DenseArray>& b, double scale) {
  if (a.size() != b.size()) throw DimensionError("accumulate: parameter list length mismatch");
  for (std::size_t k = 0; k < a.size(); ++k) {
    require_same_shape(a[k], b[k], "accumulate");
    a[k].as_matrix() += scale * b[k].as_matrix();
  }
}

std::uint64_t fingerprint(const std::vector<DenseArray>& arrays) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& a : arrays) {
    for (double v : a.values()) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof(double));
      for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

}  // namespace ptl::numkit
