#include "mmsched/neural.hpp"

#include <atomic>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace mmsched {

namespace {

std::uint64_t next_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

void check_dims(const std::vector<int>& dims) {
  if (dims.size() < 2) throw std::invalid_argument("Mlp needs at least input and output sizes");
  for (int d : dims) {
    if (d < 1) throw std::invalid_argument("Mlp layer sizes must be >= 1");
  }
}

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint truncated");
  return v;
}

void put_vector(std::ostream& os, const Vector& v) {
  put<std::uint64_t>(os, static_cast<std::uint64_t>(v.size()));
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(v.size())));
}

Vector get_vector(std::istream& is) {
  const auto n = get<std::uint64_t>(is);
  if (n > (std::uint64_t{1} << 32)) throw std::runtime_error("checkpoint: implausible vector size");
  Vector v(static_cast<Eigen::Index>(n));
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * n));
  if (!is) throw std::runtime_error("checkpoint truncated");
  return v;
}

constexpr std::uint32_t kMlpTag = 0x4d4c5031;   // "MLP1"
constexpr std::uint32_t kAdamTag = 0x41444d31;  // "ADM1"
constexpr std::uint32_t kBufferTag = 0x52504231;  // "RPB1"

void put_doubles(std::ostream& os, const std::vector<double>& v) {
  put<std::uint64_t>(os, static_cast<std::uint64_t>(v.size()));
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(sizeof(double) * v.size()));
}

std::vector<double> get_doubles(std::istream& is) {
  const auto n = get<std::uint64_t>(is);
  if (n > (std::uint64_t{1} << 24)) throw std::runtime_error("checkpoint: implausible vector size");
  std::vector<double> v(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * n));
  if (!is) throw std::runtime_error("checkpoint truncated");
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Mlp

Mlp::Mlp(std::vector<int> dims) : dims_(std::move(dims)), id_(next_id()) {
  check_dims(dims_);
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    offsets_.push_back(total);
    total += static_cast<std::size_t>(dims_[l + 1]) * static_cast<std::size_t>(dims_[l] + 1);
  }
  params_ = Vector::Zero(static_cast<Eigen::Index>(total));
}

Mlp::Mlp(std::vector<int> dims, Rng& rng) : Mlp(std::move(dims)) {
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims_[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    const std::size_t begin = offsets_[l];
    const std::size_t end =
        begin + static_cast<std::size_t>(dims_[l + 1]) * static_cast<std::size_t>(dims_[l] + 1);
    for (std::size_t i = begin; i < end; ++i) params_[static_cast<Eigen::Index>(i)] = u(rng);
  }
}

Mlp Mlp::zeros(std::vector<int> dims) { return Mlp(std::move(dims)); }

Mlp::Mlp(const Mlp& other)
    : dims_(other.dims_), offsets_(other.offsets_), params_(other.params_), id_(next_id()) {}

Mlp& Mlp::operator=(const Mlp& other) {
  if (this != &other) {
    dims_ = other.dims_;
    offsets_ = other.offsets_;
    params_ = other.params_;
    id_ = next_id();
    generation_ = 0;
  }
  return *this;
}

Vector& Mlp::mutable_parameters() {
  ++generation_;
  return params_;
}

void Mlp::set_parameters(const Vector& p) {
  if (p.size() != params_.size()) throw std::invalid_argument("parameter vector size mismatch");
  ++generation_;
  params_ = p;
}

std::size_t Mlp::bias_offset(std::size_t layer) const {
  return offsets_[layer] +
         static_cast<std::size_t>(dims_[layer + 1]) * static_cast<std::size_t>(dims_[layer]);
}

Eigen::Map<const Matrix> Mlp::weight(std::size_t layer) const {
  return {params_.data() + weight_offset(layer), dims_[layer + 1], dims_[layer]};
}

Eigen::Map<const Vector> Mlp::bias(std::size_t layer) const {
  return {params_.data() + bias_offset(layer), dims_[layer + 1]};
}

Matrix Mlp::forward(const Matrix& input, MlpCache* cache) const {
  if (input.rows() != input_dim()) {
    throw std::invalid_argument("Mlp::forward: input has " + std::to_string(input.rows()) +
                                " rows, expected " + std::to_string(input_dim()));
  }
  if (cache) {
    cache->owner = id_;
    cache->generation = generation_;
    cache->layer_inputs.resize(layer_count());
  }
  Matrix x = input;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    Matrix z = weight(l) * x;
    z.colwise() += bias(l);
    if (l + 1 < layer_count()) z = z.cwiseMax(0.0);
    if (cache) {
      cache->layer_inputs[l] = std::move(x);
    }
    x = std::move(z);
  }
  return x;
}

Vector Mlp::forward(const Vector& input) const {
  Matrix out = forward(Matrix(input), nullptr);
  return out.col(0);
}

MlpGradients Mlp::backward(const MlpCache& cache, const Matrix& output_grad,
                           bool want_param_grads) const {
  if (cache.owner != id_ || cache.generation != generation_ ||
      cache.layer_inputs.size() != layer_count()) {
    throw std::invalid_argument("Mlp::backward: stale or mismatched cache");
  }
  const Eigen::Index batch = cache.layer_inputs.front().cols();
  if (output_grad.rows() != output_dim() || output_grad.cols() != batch) {
    throw std::invalid_argument("Mlp::backward: output gradient shape mismatch");
  }
  MlpGradients g;
  if (want_param_grads) g.params = Vector::Zero(params_.size());
  Matrix delta = output_grad;
  for (std::size_t l = layer_count(); l-- > 0;) {
    const Matrix& in = cache.layer_inputs[l];
    if (want_param_grads) {
      Eigen::Map<Matrix> dw(g.params.data() + weight_offset(l), dims_[l + 1], dims_[l]);
      Eigen::Map<Vector> db(g.params.data() + bias_offset(l), dims_[l + 1]);
      dw.noalias() = delta * in.transpose();
      db = delta.rowwise().sum();
    }
    Matrix prev = weight(l).transpose() * delta;
    if (l > 0) {
      // The input of layer l is relu(z_{l-1}); its derivative is 1 where positive.
      prev = (in.array() > 0.0).select(prev, 0.0);
    }
    delta = std::move(prev);
  }
  g.input = std::move(delta);
  return g;
}

// ---------------------------------------------------------------------------
// Adam

AdamState::AdamState(std::size_t n, AdamConfig cfg)
    : config(cfg),
      m(Vector::Zero(static_cast<Eigen::Index>(n))),
      v(Vector::Zero(static_cast<Eigen::Index>(n))) {}

void AdamState::step(Vector& params, const Vector& grads) {
  if (grads.size() != params.size() || m.size() != params.size()) {
    throw std::invalid_argument("Adam: gradient/parameter/state size mismatch");
  }
  if (!grads.allFinite()) throw std::domain_error("Adam: non-finite gradient");
  ++step_count;
  const double t = static_cast<double>(step_count);
  m = config.beta1 * m + (1.0 - config.beta1) * grads;
  v = config.beta2 * v + (1.0 - config.beta2) * grads.cwiseProduct(grads);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  params.array() -=
      config.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + config.epsilon);
}

void AdamState::step(Mlp& net, const Vector& grads) { step(net.mutable_parameters(), grads); }

// ---------------------------------------------------------------------------
// Replay buffer

Batch make_batch(std::span<const Transition> transitions) {
  if (transitions.empty()) throw std::invalid_argument("make_batch: empty batch");
  const auto n = static_cast<Eigen::Index>(transitions.size());
  const auto k = static_cast<Eigen::Index>(transitions.front().state.size());
  const auto ka = static_cast<Eigen::Index>(transitions.front().action.size());
  Batch b{Matrix(k, n), Matrix(ka, n), Vector(n), Matrix(k, n), Vector(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& t = transitions[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(t.state.size()) != k ||
        static_cast<Eigen::Index>(t.next_state.size()) != k ||
        static_cast<Eigen::Index>(t.action.size()) != ka) {
      throw std::invalid_argument("make_batch: inconsistent transition sizes");
    }
    b.states.col(i) = Eigen::Map<const Vector>(t.state.data(), k);
    b.actions.col(i) = Eigen::Map<const Vector>(t.action.data(), ka);
    b.next_states.col(i) = Eigen::Map<const Vector>(t.next_state.data(), k);
    b.rewards[i] = t.reward;
    b.terminals[i] = t.terminal ? 1.0 : 0.0;
  }
  return b;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be >= 1");
}

void ReplayBuffer::push(Transition t) {
  if (storage_.size() < capacity_) {
    storage_.push_back(std::move(t));
  } else {
    storage_[cursor_] = std::move(t);
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch_size, Rng& rng) const {
  if (storage_.size() < batch_size || batch_size == 0) {
    throw std::logic_error("replay buffer holds " + std::to_string(storage_.size()) +
                           " transitions, cannot sample " + std::to_string(batch_size));
  }
  std::uniform_int_distribution<std::size_t> pick(0, storage_.size() - 1);
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

Batch ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  const auto idx = sample_indices(batch_size, rng);
  std::vector<Transition> picked;
  picked.reserve(idx.size());
  for (auto i : idx) picked.push_back(storage_[i]);
  return make_batch(picked);
}

// ---------------------------------------------------------------------------
// Serialization

void write_mlp(std::ostream& os, const Mlp& net) {
  put<std::uint32_t>(os, kMlpTag);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(net.dims().size()));
  for (int d : net.dims()) put<std::int32_t>(os, d);
  put_vector(os, net.parameters());
}

Mlp read_mlp(std::istream& is) {
  if (get<std::uint32_t>(is) != kMlpTag) throw std::runtime_error("checkpoint: expected MLP block");
  const auto n = get<std::uint32_t>(is);
  if (n < 2 || n > 64) throw std::runtime_error("checkpoint: implausible layer count");
  std::vector<int> dims(n);
  for (auto& d : dims) d = get<std::int32_t>(is);
  Mlp net = Mlp::zeros(dims);
  net.set_parameters(get_vector(is));
  return net;
}

void write_adam(std::ostream& os, const AdamState& st) {
  put<std::uint32_t>(os, kAdamTag);
  put<double>(os, st.config.learning_rate);
  put<double>(os, st.config.beta1);
  put<double>(os, st.config.beta2);
  put<double>(os, st.config.epsilon);
  put<std::uint64_t>(os, st.step_count);
  put_vector(os, st.m);
  put_vector(os, st.v);
}

AdamState read_adam(std::istream& is) {
  if (get<std::uint32_t>(is) != kAdamTag) {
    throw std::runtime_error("checkpoint: expected optimizer block");
  }
  AdamState st;
  st.config.learning_rate = get<double>(is);
  st.config.beta1 = get<double>(is);
  st.config.beta2 = get<double>(is);
  st.config.epsilon = get<double>(is);
  st.step_count = get<std::uint64_t>(is);
  st.m = get_vector(is);
  st.v = get_vector(is);
  if (st.m.size() != st.v.size()) throw std::runtime_error("checkpoint: optimizer moment mismatch");
  return st;
}

void write_buffer(std::ostream& os, const ReplayBuffer& buf) {
  put<std::uint32_t>(os, kBufferTag);
  put<std::uint64_t>(os, buf.capacity_);
  put<std::uint64_t>(os, buf.cursor_);
  put<std::uint64_t>(os, buf.storage_.size());
  for (const auto& t : buf.storage_) {
    put_doubles(os, t.state);
    put_doubles(os, t.action);
    put<double>(os, t.reward);
    put_doubles(os, t.next_state);
    put<std::uint8_t>(os, t.terminal ? 1 : 0);
  }
}

ReplayBuffer read_buffer(std::istream& is) {
  if (get<std::uint32_t>(is) != kBufferTag) {
    throw std::runtime_error("checkpoint: expected replay buffer block");
  }
  ReplayBuffer buf(get<std::uint64_t>(is));
  buf.cursor_ = get<std::uint64_t>(is);
  const auto n = get<std::uint64_t>(is);
  if (n > buf.capacity_ || buf.cursor_ >= buf.capacity_) {
    throw std::runtime_error("checkpoint: inconsistent replay buffer header");
  }
  buf.storage_.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Transition t;
    t.state = get_doubles(is);
    t.action = get_doubles(is);
    t.reward = get<double>(is);
    t.next_state = get_doubles(is);
    t.terminal = get<std::uint8_t>(is) != 0;
    buf.storage_.push_back(std::move(t));
  }
  return buf;
}

}  // namespace mmsched
