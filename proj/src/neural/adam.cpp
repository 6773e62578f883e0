#include "zggp/neural/adam.hpp"

#include <cmath>

#include "zggp/error.hpp"

namespace zggp {

template <typename S>
void adam_step(std::span<S> params, std::span<const S> grads,
               AdamState<S>& state) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw Error(ErrorKind::kShapeMismatch,
                "adam: params, grads and moments must have equal sizes");
  }
  const AdamOptions& o = state.options;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const S b1 = static_cast<S>(o.beta1);
  const S b2 = static_cast<S>(o.beta2);
  const S c1 = static_cast<S>(1.0 / (1.0 - std::pow(o.beta1, t)));
  const S c2 = static_cast<S>(1.0 / (1.0 - std::pow(o.beta2, t)));
  const S lr = static_cast<S>(o.lr);
  const S eps = static_cast<S>(o.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const S g = grads[i];
    state.m[i] = b1 * state.m[i] + (S{1} - b1) * g;
    state.v[i] = b2 * state.v[i] + (S{1} - b2) * g * g;
    const S m_hat = state.m[i] * c1;
    const S v_hat = state.v[i] * c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

template void adam_step<float>(std::span<float>, std::span<const float>,
                               AdamState<float>&);
template void adam_step<double>(std::span<double>, std::span<const double>,
                                AdamState<double>&);

}  // namespace zggp
