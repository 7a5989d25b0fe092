#pragma once

#include <optional>
#include <vector>

#include "gig/tape.hpp"

namespace gig::ad {

// Elementwise. Binary ops require identical shapes; no broadcasting.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scalar_mul(const Var& a, double s);
Var negate(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);  // throws on non-positive input
Var tanh(const Var& a);
Var relu(const Var& a);  // derivative at 0 is 0
Var leaky_relu(const Var& a, double slope = 0.2);
Var clamp(const Var& a, double lo, double hi);  // zero gradient outside (lo, hi)

/// y = x W + bias, x:[b,in] W:[in,out] bias:[out].
Var linear(const Var& x, const Var& w, const Var& bias);

/// Valid stride-1 cross-correlation, x:[b,cin,h,w] k:[cout,cin,kh,kw].
Var conv2d(const Var& x, const Var& k, const Var& bias);

/// Each pixel replicated into a 2x2 block, x:[b,c,h,w] -> [b,c,2h,2w].
Var upsample_nearest2x(const Var& x);

// Reductions. Without an axis the result is a scalar; max requires an axis
// and routes gradient to the first-index argmax.
Var sum(const Var& x, std::optional<int> axis = std::nullopt);
Var mean(const Var& x, std::optional<int> axis = std::nullopt);
Var max(const Var& x, int axis);

// Layout ops; backward is the inverse layout op.
Var reshape(const Var& x, std::vector<int> shape);
Var transpose(const Var& x);  // 2-D only
Var concat(const std::vector<Var>& xs, int axis);

}  // namespace gig::ad
