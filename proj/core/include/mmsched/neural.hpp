#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "mmsched/topology.hpp"

namespace mmsched {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Mlp;

/// Activations retained by Mlp::forward for a later backward pass.
struct MlpCache {
  std::uint64_t owner = 0;
  std::uint64_t generation = 0;
  /// layer_inputs[l] is the input of layer l (columns are samples).
  std::vector<Matrix> layer_inputs;
};

struct MlpGradients {
  Vector params;  // same layout as Mlp::parameters(); empty if not requested
  Matrix input;   // d(loss)/d(input), one column per sample
};

/// Fully-connected network: ReLU on hidden layers, identity output.
///
/// All parameters live in one flat vector; layer l stores its weight matrix
/// (out x in, column-major) followed by its bias. Inputs and outputs are
/// matrices with one column per sample.
class Mlp {
 public:
  Mlp() = default;
  /// Uniform init in +-1/sqrt(fan_in) for weights and biases.
  Mlp(std::vector<int> dims, Rng& rng);
  static Mlp zeros(std::vector<int> dims);

  Mlp(const Mlp& other);
  Mlp& operator=(const Mlp& other);
  Mlp(Mlp&&) noexcept = default;
  Mlp& operator=(Mlp&&) noexcept = default;

  const std::vector<int>& dims() const { return dims_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  std::size_t layer_count() const { return dims_.size() - 1; }
  std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }

  const Vector& parameters() const { return params_; }
  /// Any mutable access invalidates outstanding caches.
  Vector& mutable_parameters();
  void set_parameters(const Vector& p);

  Eigen::Map<const Matrix> weight(std::size_t layer) const;
  Eigen::Map<const Vector> bias(std::size_t layer) const;

  Matrix forward(const Matrix& input, MlpCache* cache = nullptr) const;
  Vector forward(const Vector& input) const;

  /// Reverse-mode pass for output gradient `output_grad` (output_dim x batch).
  /// Throws std::invalid_argument when `cache` came from a different network or
  /// from parameters that have since changed.
  MlpGradients backward(const MlpCache& cache, const Matrix& output_grad,
                        bool want_param_grads = true) const;

  bool same_shape(const Mlp& other) const { return dims_ == other.dims_; }

 private:
  explicit Mlp(std::vector<int> dims);
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const;

  std::vector<int> dims_;
  std::vector<std::size_t> offsets_;
  Vector params_;
  std::uint64_t id_ = 0;
  std::uint64_t generation_ = 0;
};

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  Vector m;
  Vector v;
  std::uint64_t step_count = 0;

  AdamState() = default;
  AdamState(std::size_t n, AdamConfig cfg);

  /// One bias-corrected Adam update of `params` in place.
  void step(Vector& params, const Vector& grads);
  void step(Mlp& net, const Vector& grads);
};

struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_state;
  bool terminal = false;
};

/// Column-per-sample view of a minibatch.
struct Batch {
  Matrix states;
  Matrix actions;
  Vector rewards;
  Matrix next_states;
  Vector terminals;  // 1.0 for terminal transitions

  std::size_t size() const { return static_cast<std::size_t>(rewards.size()); }
};

Batch make_batch(std::span<const Transition> transitions);

/// Fixed-capacity ring of transitions; the oldest entry is overwritten when full.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return storage_.at(i); }

  /// Uniform draw with replacement. Throws std::logic_error when size() < batch_size.
  std::vector<std::size_t> sample_indices(std::size_t batch_size, Rng& rng) const;
  Batch sample(std::size_t batch_size, Rng& rng) const;

  friend void write_buffer(std::ostream& os, const ReplayBuffer& buf);
  friend ReplayBuffer read_buffer(std::istream& is);

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<Transition> storage_;
};

// Binary serialization (little-endian host doubles, exact round-trip).
void write_mlp(std::ostream& os, const Mlp& net);
Mlp read_mlp(std::istream& is);
void write_adam(std::ostream& os, const AdamState& st);
AdamState read_adam(std::istream& is);
void write_buffer(std::ostream& os, const ReplayBuffer& buf);
ReplayBuffer read_buffer(std::istream& is);

}  // namespace mmsched
