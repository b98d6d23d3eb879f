#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ladder/tensor.hpp"

namespace ladder {

/// A trainable tensor together with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad = Tensor(value.shape()); }
};

class Graph;

/// Handle to a node in a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;

  Graph& graph() const { return *graph_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return graph_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const;
  /// Gradient after Graph::backward(); empty when the node does not require grad.
  const Tensor& grad() const;
  bool requires_grad() const;

 private:
  friend class Graph;
  Var(Graph* g, std::size_t id) : graph_(g), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Records a single forward pass for reverse-mode differentiation.
///
/// Nodes are kept in execution order. backward() walks them in reverse
/// exactly once; a second call throws. Leaf nodes bound to a Parameter add
/// their gradient into Parameter::grad.
class Graph {
 public:
  using Inputs = std::vector<const Tensor*>;
  using ForwardFn = std::function<Tensor(const Inputs&)>;
  /// (inputs, output, output grad, input grads). Input grads are nullptr
  /// when that input does not require grad; implementations accumulate.
  using BackwardFn = std::function<void(const Inputs&, const Tensor&, const Tensor&, std::vector<Tensor*>&)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  /// Leaf whose gradient is retained on the node (read via Var::grad()).
  Var leaf(Tensor value, bool requires_grad = true);
  /// Leaf bound to a parameter; repeated calls return the same node.
  Var param(Parameter& p);

  /// Appends an operation node. Used by the op implementations.
  Var record(std::string_view op, std::vector<Var> inputs, ForwardFn forward, BackwardFn backward);

  void backward(Var loss);
  bool backward_done() const noexcept { return backward_done_; }

  /// Re-executes every recorded op on its recorded inputs; true when every
  /// recomputed output equals the stored output bit-for-bit.
  bool replay_matches() const;

  std::size_t size() const noexcept { return nodes_.size(); }
  std::string_view op_name(std::size_t id) const { return nodes_.at(id).op; }

  /// Reject non-finite op outputs (on by default).
  void set_check_finite(bool on) noexcept { check_finite_ = on; }

 private:
  friend class Var;

  struct Node {
    std::string_view op;
    std::vector<std::size_t> inputs;
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    ForwardFn forward;
    BackwardFn backward;
  };

  Inputs input_values(const Node& node) const;

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> bound_;
  bool backward_done_ = false;
  bool check_finite_ = true;
};

// ---------------------------------------------------------------------------
// Differentiable operations. Binary elementwise ops broadcast `b` over the
// leading axes of `a` when b's shape is a suffix of a's shape (so a [F]
// vector acts per feature/channel on [B,F] or [B,H,W,F]).

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double factor);
Var square(Var a);
Var relu(Var a);
Var sigmoid(Var a);
Var exp(Var a);

/// Sum of all elements as a scalar.
Var sum(Var a);
Var mean(Var a);

Var reshape(Var a, Shape shape);
/// Leading-axis slice [begin, end).
Var slice_rows(Var a, std::size_t begin, std::size_t end);

/// [m,k] x [k,n] -> [m,n].
Var matmul(Var a, Var b);

/// Valid cross-correlation, stride 1.
/// input [B,H,W,Cin], kernel [KH,KW,Cin,Cout] -> [B,H-KH+1,W-KW+1,Cout].
Var conv2d(Var input, Var kernel);

/// Adjoint of conv2d with respect to its input ("full" convolution).
/// input [B,H,W,Cin], kernel [KH,KW,Cout,Cin] -> [B,H+KH-1,W+KW-1,Cout].
Var conv2d_transpose(Var input, Var kernel);

/// Per-feature mean over all axes except the last: [..., F] -> [F].
Var batch_mean(Var a);
/// Per-feature sqrt(biased variance + eps) over all axes except the last.
Var batch_std(Var a, double eps);

/// Row-wise softmax / log-softmax of [B,K] (max-subtracted).
Var softmax(Var logits);
Var log_softmax(Var logits);

/// Mean negative log-likelihood of class indices under row log-probabilities.
Var nll(Var log_probs, std::vector<int> targets);
/// nll(log_softmax(logits), targets).
Var cross_entropy(Var logits, std::vector<int> targets);

class Rng;

/// x + N(0, stddev^2) noise; the noise is a constant of the graph.
/// stddev == 0 returns `x` itself.
Var add_gaussian_noise(Var x, double stddev, Rng& rng);

struct RunningStats {
  Tensor mean;
  Tensor var;

  RunningStats() = default;
  explicit RunningStats(std::size_t features) : mean(Shape{features}, 0.0), var(Shape{features}, 1.0) {}
};

enum class BnMode { train, eval };

inline constexpr double kBatchNormEps = 1e-6;
inline constexpr double kBatchNormMomentum = 0.99;

/// Folds one batch's statistics into `running` (exponential moving average).
void update_running_stats(RunningStats& running, const Tensor& batch_mean, const Tensor& batch_std,
                          double eps = kBatchNormEps);

/// Per-feature batch normalization without affine terms. In train mode the
/// batch statistics are used (and differentiated through), and `running`,
/// when non-null, is updated with momentum 0.99. Eval mode uses `running`.
Var batchnorm(Var x, BnMode mode, RunningStats* running, double eps = kBatchNormEps);

}  // namespace ladder
