#pragma once

#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "ipg/error.hpp"
#include "ipg/rng.hpp"

namespace ipg::nn {

/// Dense row-major tensor. Just storage with a shape; the math lives in
/// ipg::kernels and the ops below.
template <typename T>
struct Tensor {
  std::vector<size_t> shape;
  std::vector<T> v;

  Tensor() = default;
  explicit Tensor(std::vector<size_t> s)
      : shape(std::move(s)),
        v(std::accumulate(shape.begin(), shape.end(), size_t(1), std::multiplies<size_t>()),
          T(0)) {}

  size_t size() const { return v.size(); }
  size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  T* data() { return v.data(); }
  const T* data() const { return v.data(); }
  void fill(T value) { std::fill(v.begin(), v.end(), value); }

  bool all_finite() const {
    for (T x : v)
      if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
  }

  void init_uniform(Rng& rng, double bound) {
    for (T& x : v) x = static_cast<T>(rng.uniform(-bound, bound));
  }
};

/// Named parameters, each a (value, gradient) pair of matching shape.
/// Iteration order is sorted by name, which the checkpoint format relies on.
template <typename T>
class ParamStore {
 public:
  struct Param {
    Tensor<T> value;
    Tensor<T> grad;
  };

  Tensor<T>& add(const std::string& name, std::vector<size_t> shape) {
    if (map_.count(name)) throw Error("duplicate parameter: " + name);
    Param p;
    p.value = Tensor<T>(shape);
    p.grad = Tensor<T>(std::move(shape));
    auto [it, ok] = map_.emplace(name, std::move(p));
    (void)ok;
    return it->second.value;
  }

  bool has(const std::string& name) const { return map_.count(name) > 0; }

  Tensor<T>& value(const std::string& name) { return entry(name).value; }
  const Tensor<T>& value(const std::string& name) const { return entry(name).value; }
  Tensor<T>& grad(const std::string& name) { return entry(name).grad; }

  void zero_grads() {
    for (auto& [name, p] : map_) p.grad.fill(T(0));
  }

  size_t param_count() const {
    size_t n = 0;
    for (const auto& [name, p] : map_) n += p.value.size();
    return n;
  }

  std::map<std::string, Param>& entries() { return map_; }
  const std::map<std::string, Param>& entries() const { return map_; }

 private:
  Param& entry(const std::string& name) {
    auto it = map_.find(name);
    if (it == map_.end()) throw Error("unknown parameter: " + name);
    return it->second;
  }
  const Param& entry(const std::string& name) const {
    auto it = map_.find(name);
    if (it == map_.end()) throw Error("unknown parameter: " + name);
    return it->second;
  }

  std::map<std::string, Param> map_;
};

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-5;
  double clip_norm = 5.0;
};

/// Adam with global-norm gradient clipping and decoupled weight decay.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamHyper hyper = {}) : hyper_(hyper) {}

  const AdamHyper& hyper() const { return hyper_; }
  int64_t step_count() const { return t_; }

  /// One update over every parameter in the store; gradients are zeroed
  /// afterwards. Throws NumericError naming the parameter on a non-finite
  /// gradient.
  void step(ParamStore<T>& store) {
    double sq_norm = 0.0;
    for (auto& [name, p] : store.entries()) {
      for (T g : p.grad.v) {
        double gd = static_cast<double>(g);
        if (!std::isfinite(gd)) throw NumericError("non-finite gradient in parameter '" + name + "'");
        sq_norm += gd * gd;
      }
    }
    double norm = std::sqrt(sq_norm);
    double scale = (hyper_.clip_norm > 0 && norm > hyper_.clip_norm) ? hyper_.clip_norm / norm : 1.0;

    ++t_;
    const double bc1 = 1.0 - std::pow(hyper_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(hyper_.beta2, static_cast<double>(t_));

    for (auto& [name, p] : store.entries()) {
      auto& mom = moments_[name];
      if (mom.first.size() != p.value.size()) {
        mom.first = Tensor<T>(p.value.shape);
        mom.second = Tensor<T>(p.value.shape);
      }
      T* val = p.value.data();
      T* grd = p.grad.data();
      T* m = mom.first.data();
      T* v = mom.second.data();
      const size_t n = p.value.size();
      for (size_t i = 0; i < n; ++i) {
        double g = static_cast<double>(grd[i]) * scale;
        double mi = hyper_.beta1 * static_cast<double>(m[i]) + (1.0 - hyper_.beta1) * g;
        double vi = hyper_.beta2 * static_cast<double>(v[i]) + (1.0 - hyper_.beta2) * g * g;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        double update = hyper_.lr * (mi / bc1) / (std::sqrt(vi / bc2) + hyper_.eps);
        double decay = hyper_.lr * hyper_.weight_decay * static_cast<double>(val[i]);
        val[i] = static_cast<T>(static_cast<double>(val[i]) - update - decay);
        grd[i] = T(0);
      }
    }
  }

 private:
  AdamHyper hyper_;
  int64_t t_ = 0;
  std::map<std::string, std::pair<Tensor<T>, Tensor<T>>> moments_;
};

}  // namespace ipg::nn
