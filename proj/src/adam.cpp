#include "gig/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace gig::ad {

AdamState make_adam(const ParamSet& params, double lr, double beta1,
                    double beta2, double eps) {
  AdamState st;
  st.lr = lr;
  st.beta1 = beta1;
  st.beta2 = beta2;
  st.eps = eps;
  st.m.reserve(params.params.size());
  st.v.reserve(params.params.size());
  for (const auto& p : params.params) {
    st.m.emplace_back(p.value->size(), 0.0);
    st.v.emplace_back(p.value->size(), 0.0);
  }
  return st;
}

void adam_step(ParamSet& params, AdamState& state) {
  if (state.m.size() != params.params.size())
    throw std::invalid_argument("adam_step: state does not match parameter set");
  ++state.step_count;
  const double bc1 = 1.0 - std::pow(state.beta1, state.step_count);
  const double bc2 = 1.0 - std::pow(state.beta2, state.step_count);
  for (std::size_t pi = 0; pi < params.params.size(); ++pi) {
    auto& p = params.params[pi];
    if (!p.grad)
      throw std::runtime_error("adam_step: parameter '" + p.name +
                               "' has no gradient");
    auto& value = *p.value;
    const auto& g = *p.grad;
    auto& m = state.m[pi];
    auto& v = state.v[pi];
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      value[i] -= state.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + state.eps);
    }
  }
}

}  // namespace gig::ad
