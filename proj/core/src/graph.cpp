#include "ladder/graph.hpp"

#include "ladder/error.hpp"

namespace ladder {

const Tensor& Var::value() const { return graph_->nodes_.at(id_).value; }
const Shape& Var::shape() const { return value().shape(); }
const Tensor& Var::grad() const { return graph_->nodes_.at(id_).grad; }
bool Var::requires_grad() const { return graph_->nodes_.at(id_).requires_grad; }

Var Graph::constant(Tensor value) { return leaf(std::move(value), false); }

Var Graph::leaf(Tensor value, bool requires_grad) {
  if (check_finite_ && !value.all_finite()) throw NumericError("non-finite value in graph leaf");
  Node node;
  node.op = requires_grad ? "leaf" : "constant";
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::param(Parameter& p) {
  if (auto it = bound_.find(&p); it != bound_.end()) return Var(this, it->second);
  if (check_finite_ && !p.value.all_finite()) throw NumericError("parameter '" + p.name + "' is not finite");
  Node node;
  node.op = "param";
  node.value = p.value;
  node.requires_grad = true;
  node.param = &p;
  nodes_.push_back(std::move(node));
  bound_.emplace(&p, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Graph::Inputs Graph::input_values(const Node& node) const {
  Inputs in;
  in.reserve(node.inputs.size());
  for (auto i : node.inputs) in.push_back(&nodes_[i].value);
  return in;
}

Var Graph::record(std::string_view op, std::vector<Var> inputs, ForwardFn forward, BackwardFn backward) {
  if (backward_done_) throw PreconditionError("cannot record into a graph after backward()");
  Node node;
  node.op = op;
  for (const auto& v : inputs) {
    if (v.graph_ != this) throw PreconditionError(std::string(op) + ": input belongs to another graph");
    node.inputs.push_back(v.id_);
    node.requires_grad = node.requires_grad || nodes_[v.id_].requires_grad;
  }
  node.value = forward(input_values(node));
  if (check_finite_ && !node.value.all_finite()) {
    throw NumericError(std::string(op) + " produced non-finite values");
  }
  node.forward = std::move(forward);
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Graph::backward(Var loss) {
  if (loss.graph_ != this) throw PreconditionError("backward: loss belongs to another graph");
  if (backward_done_) throw PreconditionError("backward called twice on the same graph");
  Node& root = nodes_.at(loss.id_);
  if (root.value.size() != 1) {
    throw DimensionError("backward needs a scalar loss, got shape " + to_string(root.value.shape()));
  }
  if (!root.value.all_finite()) throw NumericError("loss is not finite");
  backward_done_ = true;

  // Only nodes the loss depends on take part in the reverse sweep.
  std::vector<char> reachable(loss.id_ + 1, 0);
  reachable[loss.id_] = 1;
  for (std::size_t id = loss.id_ + 1; id-- > 0;) {
    if (!reachable[id]) continue;
    for (auto i : nodes_[id].inputs) reachable[i] = 1;
  }
  for (auto& n : nodes_) {
    if (n.requires_grad) n.grad = Tensor(n.value.shape());
  }
  if (!root.requires_grad) return;
  root.grad[0] = 1.0;

  for (std::size_t id = loss.id_ + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || !reachable[id]) continue;
    if (n.backward) {
      std::vector<Tensor*> gin;
      gin.reserve(n.inputs.size());
      for (auto i : n.inputs) gin.push_back(nodes_[i].requires_grad ? &nodes_[i].grad : nullptr);
      n.backward(input_values(n), n.value, n.grad, gin);
    }
    if (n.param != nullptr) {
      if (n.param->grad.shape() != n.value.shape()) n.param->grad = Tensor(n.value.shape());
      auto dst = n.param->grad.data();
      auto src = n.grad.data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }
}

bool Graph::replay_matches() const {
  for (const auto& n : nodes_) {
    if (!n.forward) continue;
    if (!(n.forward(input_values(n)) == n.value)) return false;
  }
  return true;
}

}  // namespace ladder
