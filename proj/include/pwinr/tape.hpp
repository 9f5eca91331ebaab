#pragma once

#include <cstddef>
#include <vector>

#include "pwinr/tensor.hpp"

namespace pwinr {

// Reverse-mode tape over the fixed primitive set the pipeline needs. Nodes
// are appended in forward order; backward() replays the record in reverse,
// so every node is visited after all of its consumers and fan-out gradients
// accumulate additively. Forward ops never mutate their inputs, and every
// forward result is checked finite.
//
// A tape is single-threaded; independent tapes may run on separate threads.
template <typename T>
class Tape {
 public:
  using NodeId = std::size_t;

  // Leaf values. Parameters are the gradient targets; constants are not.
  NodeId constant(Tensor<T> value);
  NodeId parameter(Tensor<T> value);

  // y[n,j] = sum_i x[n,i]·w[i,j] + b[j]
  NodeId affine(NodeId x, NodeId w, NodeId b);

  // max(x, 0); backward passes gradient only where x > 0.
  NodeId relu(NodeId x);

  // [a | b] along columns; both inputs n×ca and n×cb.
  NodeId concat_cols(NodeId a, NodeId b);

  // Same-size separable convolution with edge-clamp padding: vertical pass
  // with vtaps, then horizontal pass with htaps. Taps are fixed
  // coefficients, not differentiable inputs.
  NodeId conv2d_separable(NodeId x, std::vector<T> vtaps, std::vector<T> htaps);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId div(NodeId a, NodeId b);

  // alpha·x and x + beta.
  NodeId scale(NodeId x, T alpha);
  NodeId add_scalar(NodeId x, T beta);

  // Rows [r0, r1) of a matrix.
  NodeId crop_rows(NodeId x, std::size_t r0, std::size_t r1);

  // Row-major relabeling to rows×cols; element count must not change.
  NodeId reshape(NodeId x, std::size_t rows, std::size_t cols);

  // Scalar mean over all elements.
  NodeId mean_all(NodeId x);

  const Tensor<T>& value(NodeId id) const;

  // Seeds d(loss)/d(loss) = 1 and propagates to every parameter reachable
  // from the loss node. Subgraphs that cannot influence a parameter are
  // skipped. Throws ContractError unless the loss value is scalar.
  void backward(NodeId loss);

  // Gradient of the last backward() target w.r.t. this node's value. Zero
  // for parameters the loss does not reach; ContractError for nodes that
  // do not carry gradients (constants and their pure functions).
  const Tensor<T>& grad(NodeId id) const;

  bool needs_grad(NodeId id) const;
  std::size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op {
    constant,
    parameter,
    affine,
    relu,
    concat_cols,
    conv2d_separable,
    add,
    sub,
    mul,
    div,
    scale,
    add_scalar,
    crop_rows,
    reshape,
    mean_all,
  };

  struct Node {
    Op op;
    NodeId in[3] = {0, 0, 0};
    Tensor<T> value;
    Tensor<T> grad;
    bool needs_grad = false;
    // per-op extras
    T alpha = T(0);
    std::size_t r0 = 0, r1 = 0;
    std::vector<T> vtaps, htaps;
  };

  NodeId push(Node node, const char* what);
  const Node& node_at(NodeId id) const;

  std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace pwinr
