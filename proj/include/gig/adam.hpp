#pragma once

#include <vector>

#include "gig/tape.hpp"

namespace gig::ad {

/// Bias-corrected Adam. Moment buffers align with the ParamSet's order.
struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long long step_count = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

AdamState make_adam(const ParamSet& params, double lr, double beta1 = 0.9,
                    double beta2 = 0.999, double eps = 1e-8);

/// One update over all parameters; throws if any parameter has no gradient.
void adam_step(ParamSet& params, AdamState& state);

}  // namespace gig::ad
