#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace zggp {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename S>
struct AdamState {
  std::uint64_t step = 0;
  std::vector<S> m;
  std::vector<S> v;
  AdamOptions options;

  AdamState() = default;
  AdamState(std::size_t size, AdamOptions opts)
      : m(size, S{0}), v(size, S{0}), options(opts) {}
};

// Bias-corrected Adam update in place. Throws ShapeMismatch when params,
// grads and moments disagree in size.
template <typename S>
void adam_step(std::span<S> params, std::span<const S> grads,
               AdamState<S>& state);

}  // namespace zggp
