#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gig/tensor.hpp"

namespace gig::ad {

class Tape;

struct Node {
  std::vector<int> shape;
  std::vector<double> value;
  std::shared_ptr<std::vector<double>> grad;  // null until a backward pass needs it
  bool requires_grad = false;
  bool leaf = false;

  std::int64_t numel() const { return static_cast<std::int64_t>(value.size()); }
  std::vector<double>& ensure_grad() {
    if (!grad) grad = std::make_shared<std::vector<double>>(value.size(), 0.0);
    return *grad;
  }
};

/// Handle to a tensor recorded on a tape. Values are immutable once recorded.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::shared_ptr<Node> node)
      : tape_(tape), node_(std::move(node)) {}

  bool valid() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  std::int64_t numel() const { return node_->numel(); }
  const std::vector<double>& value() const { return node_->value; }
  double scalar() const;
  bool requires_grad() const { return node_->requires_grad; }
  /// Gradient buffer, or null if no backward pass reached this node.
  const std::vector<double>* grad() const {
    return node_->grad ? node_->grad.get() : nullptr;
  }

  Tape* tape() const { return tape_; }
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  Tape* tape_ = nullptr;
  std::shared_ptr<Node> node_;
};

/// Persistent named weight. Tape leaves bind to `grad` so backward passes
/// accumulate straight into the parameter; `value` is copied per tape.
struct Parameter {
  std::string name;
  std::vector<int> shape;
  std::shared_ptr<std::vector<double>> value;
  std::shared_ptr<std::vector<double>> grad;  // null until first bound to a tape

  Parameter(std::string n, Tensor init)
      : name(std::move(n)),
        shape(init.shape()),
        value(std::make_shared<std::vector<double>>(init.data())) {}

  std::int64_t numel() const { return static_cast<std::int64_t>(value->size()); }
};

struct ParamSet {
  std::vector<Parameter> params;

  Parameter& add(std::string name, Tensor init);
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;
  void zero_grads();
  std::int64_t total_parameters() const;
  /// Deep copy (fresh value/grad storage).
  ParamSet clone() const;
};

/// Eager reverse-mode tape: ops compute values immediately and push a
/// backward rule. One backward sweep visits the rules in reverse order.
class Tape {
 public:
  Var leaf(Tensor t, bool requires_grad = false);
  Var constant(Tensor t) { return leaf(std::move(t), false); }
  Var param(Parameter& p);

  /// Fresh non-leaf result node; op implementations fill its value.
  Var make_result(std::vector<int> shape, bool requires_grad);
  void record(std::function<void()> backward_fn) {
    ops_.push_back(std::move(backward_fn));
  }

  /// Propagates d(loss)/d(node) to every reachable node. Leaf gradients
  /// accumulate across calls; intermediate gradients are per-call.
  void backward(const Var& loss);

  std::size_t op_count() const { return ops_.size(); }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  std::vector<std::function<void()>> ops_;
  std::vector<std::shared_ptr<Node>> nodes_;
  std::unordered_map<const Parameter*, Var> param_cache_;
};

}  // namespace gig::ad
