#pragma once

#include <map>
#include <string>
#include <vector>

#include "pairdisc/rng.hpp"
#include "pairdisc/tensor.hpp"

namespace pairdisc {

// RMSProp in its plain form: squared-gradient running average only,
// no centering, no momentum.
struct RmsPropConfig {
  double learning_rate = 0.0008;
  double alpha = 0.99;       // squared-gradient decay
  double epsilon = 1e-8;
  double decay_factor = 1.0; // per-epoch multiplier on learning_rate

  void validate() const {
    // 0 is allowed as an explicit "frozen" rate for diagnostics.
    if (!(learning_rate >= 0)) throw std::invalid_argument("learning_rate must be >= 0");
    if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("alpha must be in (0,1)");
    if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be > 0");
    if (!(decay_factor > 0 && decay_factor <= 1)) throw std::invalid_argument("decay_factor must be in (0,1]");
  }
};

// Per-epoch schedule constant exp(ln(0.1) / (a*b)): applying it a*b times
// divides the learning rate by 10.
inline double schedule_decay_factor(double a, double b) {
  return std::exp(std::log(0.1) / (a * b));
}

inline RmsPropConfig epoch_decay(RmsPropConfig cfg) {
  cfg.learning_rate *= cfg.decay_factor;
  return cfg;
}

struct ParamEntry {
  Tensor value;
  Tensor grad;
  Tensor rms;
};

// Named trainable tensors with paired gradient and RMSProp accumulators.
// The name set is fixed once the model seals the store.
class ParameterStore {
 public:
  Tensor& add(const std::string& name, std::vector<Index> shape) {
    if (sealed_) throw std::logic_error("parameter store is sealed");
    if (entries_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
    ParamEntry e;
    e.value = Tensor(shape);
    e.grad = Tensor(shape);
    e.rms = Tensor(std::move(shape));
    return entries_.emplace(name, std::move(e)).first->second.value;
  }

  void seal() { sealed_ = true; }
  bool sealed() const { return sealed_; }

  bool has(const std::string& name) const { return entries_.count(name) != 0; }

  ParamEntry& entry(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::invalid_argument("unknown parameter: " + name);
    return it->second;
  }
  const ParamEntry& entry(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::invalid_argument("unknown parameter: " + name);
    return it->second;
  }

  Tensor& value(const std::string& name) { return entry(name).value; }
  const Tensor& value(const std::string& name) const { return entry(name).value; }
  Tensor& grad(const std::string& name) { return entry(name).grad; }
  const Tensor& grad(const std::string& name) const { return entry(name).grad; }

  // Names in lexicographic order; every reduction below walks this order.
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [k, v] : entries_) out.push_back(k);
    return out;
  }

  std::size_t count() const { return entries_.size(); }

  template <typename F>
  void for_each(F&& f) {
    for (auto& [name, e] : entries_) f(name, e);
  }
  template <typename F>
  void for_each(F&& f) const {
    for (const auto& [name, e] : entries_) f(name, e);
  }

  void zero_grads() {
    for (auto& [name, e] : entries_) e.grad.vec().setZero();
  }

  double grad_sq_norm() const {
    double s = 0;
    for (const auto& [name, e] : entries_) s += e.grad.vec().squaredNorm();
    return s;
  }

  void scale_grads(double s) {
    for (auto& [name, e] : entries_) e.grad.vec() *= s;
  }

  // Uniform init in [lo, hi]. Each parameter draws from its own
  // name-derived stream, so init is independent of which other
  // parameters exist.
  void init_uniform(std::uint64_t seed, double lo, double hi) {
    for (auto& [name, e] : entries_) {
      Rng rng(mix_seed(seed, name));
      for (Index i = 0; i < e.value.size(); ++i) e.value[i] = rng.uniform(lo, hi);
    }
  }

  std::uint64_t value_checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& [name, e] : entries_) {
      h = fnv1a(name, h);
      h = fnv1a({reinterpret_cast<const char*>(e.value.data()),
                 static_cast<std::size_t>(e.value.size()) * sizeof(double)},
                h);
    }
    return h;
  }

 private:
  std::map<std::string, ParamEntry> entries_;
  bool sealed_ = false;
};

// One RMSProp update over every entry, then grads are zeroed.
// A non-finite gradient aborts before any value is touched.
inline void rmsprop_step(ParameterStore& store, const RmsPropConfig& cfg) {
  cfg.validate();
  store.for_each([](const std::string& name, ParamEntry& e) {
    if (!e.grad.all_finite()) throw NumericError("non-finite gradient in parameter '" + name + "'");
  });
  store.for_each([&](const std::string&, ParamEntry& e) {
    auto g = e.grad.vec();
    auto r = e.rms.vec();
    auto v = e.value.vec();
    r.array() = cfg.alpha * r.array() + (1.0 - cfg.alpha) * g.array().square();
    v.array() -= cfg.learning_rate * g.array() / (r.array().sqrt() + cfg.epsilon);
    g.setZero();
  });
}

}  // namespace pairdisc
