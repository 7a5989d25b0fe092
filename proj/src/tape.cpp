#include "gig/tape.hpp"

#include <sstream>
#include <stdexcept>

namespace gig::ad {

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

double Var::scalar() const {
  if (numel() != 1)
    throw std::invalid_argument("scalar() on tensor of shape " +
                                shape_str(shape()));
  return node_->value[0];
}

Parameter& ParamSet::add(std::string name, Tensor init) {
  if (find(name)) throw std::invalid_argument("duplicate parameter: " + name);
  params.emplace_back(std::move(name), std::move(init));
  return params.back();
}

Parameter* ParamSet::find(std::string_view name) {
  for (auto& p : params)
    if (p.name == name) return &p;
  return nullptr;
}

const Parameter* ParamSet::find(std::string_view name) const {
  for (const auto& p : params)
    if (p.name == name) return &p;
  return nullptr;
}

void ParamSet::zero_grads() {
  for (auto& p : params)
    if (p.grad) std::fill(p.grad->begin(), p.grad->end(), 0.0);
}

std::int64_t ParamSet::total_parameters() const {
  std::int64_t n = 0;
  for (const auto& p : params) n += p.numel();
  return n;
}

ParamSet ParamSet::clone() const {
  ParamSet out;
  for (const auto& p : params) {
    Parameter q(p.name, Tensor(p.shape, *p.value));
    if (p.grad) q.grad = std::make_shared<std::vector<double>>(*p.grad);
    out.params.push_back(std::move(q));
  }
  return out;
}

Var Tape::leaf(Tensor t, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->shape = t.shape();
  node->value = std::move(t.data());
  node->requires_grad = requires_grad;
  node->leaf = true;
  nodes_.push_back(node);
  return Var(this, node);
}

Var Tape::param(Parameter& p) {
  auto it = param_cache_.find(&p);
  if (it != param_cache_.end()) return it->second;
  auto node = std::make_shared<Node>();
  node->shape = p.shape;
  node->value = *p.value;  // snapshot; later optimizer updates do not alias
  node->requires_grad = true;
  node->leaf = true;
  if (!p.grad)
    p.grad = std::make_shared<std::vector<double>>(p.value->size(), 0.0);
  node->grad = p.grad;
  nodes_.push_back(node);
  Var v(this, node);
  param_cache_.emplace(&p, v);
  return v;
}

Var Tape::make_result(std::vector<int> shape, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value.assign(static_cast<std::size_t>(shape_numel(shape)), 0.0);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  nodes_.push_back(node);
  return Var(this, node);
}

void Tape::backward(const Var& loss) {
  if (!loss.valid() || loss.tape() != this)
    throw std::invalid_argument("backward: loss is not on this tape");
  if (loss.numel() != 1)
    throw std::invalid_argument("backward requires a scalar loss, got shape " +
                                shape_str(loss.shape()));
  if (!loss.requires_grad()) return;
  for (auto& n : nodes_)
    if (!n->leaf) n->grad.reset();
  loss.node()->ensure_grad()[0] += 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

}  // namespace gig::ad
