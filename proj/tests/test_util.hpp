#pragma once

// Shared helpers for the test suites: relative error with a floor so
// near-zero gradients compare absolutely, and a central finite-difference
// harness over ParamStore entries.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "ipg/tensor.hpp"

namespace testutil {

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

/// `compute` must zero nothing, fill gradients for the current parameter
/// values and return the loss. Returns the max relative error between the
/// analytic gradients and central finite differences over every parameter
/// element.
template <typename F>
double fd_check_params(ipg::nn::ParamStore<double>& store, F&& compute, double eps = 1e-5) {
  store.zero_grads();
  compute();
  std::map<std::string, std::vector<double>> analytic;
  for (auto& [name, p] : store.entries()) analytic[name] = p.grad.v;

  double worst = 0.0;
  for (auto& [name, p] : store.entries()) {
    for (size_t i = 0; i < p.value.size(); ++i) {
      const double orig = p.value.v[i];
      p.value.v[i] = orig + eps;
      store.zero_grads();
      const double lp = compute();
      p.value.v[i] = orig - eps;
      store.zero_grads();
      const double lm = compute();
      p.value.v[i] = orig;
      const double fd = (lp - lm) / (2.0 * eps);
      worst = std::max(worst, rel_err(analytic[name][i], fd));
    }
  }
  store.zero_grads();
  return worst;
}

/// Finite-difference check for a single flat buffer (e.g. an op input).
template <typename F>
double fd_check_buffer(double* buf, size_t n, const std::vector<double>& analytic, F&& loss_only,
                       double eps = 1e-5) {
  double worst = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double orig = buf[i];
    buf[i] = orig + eps;
    const double lp = loss_only();
    buf[i] = orig - eps;
    const double lm = loss_only();
    buf[i] = orig;
    const double fd = (lp - lm) / (2.0 * eps);
    worst = std::max(worst, rel_err(analytic[i], fd));
  }
  return worst;
}

}  // namespace testutil
