#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "lerp/tensor.hpp"

namespace lerp::ad {

class Tape;

// One recorded value in the computation graph. `grad` always has the same
// shape as `value` and starts at zero; `backward` reads this node's grad
// and accumulates into the parents' grads.
struct Node {
  Tensor value;
  Tensor grad;
  std::vector<Node*> parents;
  std::function<void(Node&)> backward;  // null for leaves/constants
  std::size_t index = 0;                // position on the tape
};

// Records nodes in creation order, so every node appears after all of its
// parents and a single reverse sweep is a valid reverse-topological order.
// Single-threaded during construction and backward; independent tapes may
// run concurrently.
class Tape {
 public:
  // A leaf holds an input or parameter value; gradients accumulate into it.
  Node* leaf(Tensor value);
  // Records an op result. Parents must already live on this tape.
  Node* emplace(Tensor value, std::vector<Node*> parents, std::function<void(Node&)> backward);

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse, leaving
  // d(loss)/d(node) in every node's grad. Call at most once per tape.
  void backward(Node* loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<std::unique_ptr<Node>> nodes_;
};

// --- elementwise / shape ops -------------------------------------------

Node* add(Tape& t, Node* a, Node* b);              // same shape
Node* mul(Tape& t, Node* a, Node* b);              // same shape, elementwise
Node* scale(Tape& t, Node* x, double c);
Node* relu(Tape& t, Node* x);
Node* sigmoid(Tape& t, Node* x);
Node* concat(Tape& t, Node* a, Node* b);           // rank-1 ⊕ rank-1
Node* reshape(Tape& t, Node* x, std::vector<std::size_t> shape);

// --- linear algebra -----------------------------------------------------

Node* matmul(Tape& t, Node* a, Node* b);           // [p×q]·[q×r] → [p×r]
Node* matvec(Tape& t, Node* a, Node* x);           // [p×q]·[q] → [p]
Node* transpose(Tape& t, Node* x);                 // [p×q] → [q×p]
Node* add_col_bias(Tape& t, Node* x, Node* b);     // [r×c] + b[r] per column

// --- reductions ---------------------------------------------------------

Node* sum_all(Tape& t, Node* x);                       // → scalar
Node* sum_axis(Tape& t, Node* x, int axis);            // rank-2 → rank-1
Node* mean_scalars(Tape& t, const std::vector<Node*>& xs);  // mean of scalars

// --- nonlinear-normalization ops ---------------------------------------

// Softmax along `axis` of a rank-1 or rank-2 tensor (axis 0 normalizes each
// column, axis 1 each row; rank-1 ignores axis). Max-subtracted for
// stability: scaled-dot scores can be large.
Node* softmax(Tape& t, Node* x, int axis = 0);

// Rank-1 softmax over the positions where keep[i] != 0. Masked positions
// get output (and gradient) exactly zero.
Node* masked_softmax(Tape& t, Node* x, const std::vector<std::uint8_t>& keep);

// --- convolution / pooling ----------------------------------------------

// 1-D cross-correlation over the length axis with zero same-padding of
// (k1−1)/2 per end. x: [C×L], kernel: [C_out×C×k1] (k1 odd), bias: [C_out].
Node* conv1d(Tape& t, Node* x, Node* kernel, Node* bias);

// Same as conv1d but one shared width-k1 kernel applied to every channel
// independently. kernel: [k1], bias: scalar [1]. Output [C×L]; channel
// count is free, so the op is equivariant under channel permutation.
Node* conv1d_depthwise_shared(Tape& t, Node* x, Node* kernel, Node* bias);

// Max over sliding windows along `axis` (0 = channel, 1 = length) of a
// [C×L] input. Ties break to the lowest index so backward is
// deterministic; gradient routes only to the argmax element.
// With same_pad, stride-aligned windows are clipped at the boundary and
// the output keeps ceil(len/stride) positions.
Node* maxpool_axis(Tape& t, Node* x, int axis, std::size_t window, std::size_t stride,
                   bool same_pad = false);

// --- masking -------------------------------------------------------------

Node* mask_rows(Tape& t, Node* x, const std::vector<std::uint8_t>& keep);
Node* mask_cols(Tape& t, Node* x, const std::vector<std::uint8_t>& keep);

}  // namespace lerp::ad
