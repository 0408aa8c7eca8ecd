#pragma once

#include "fsce/autodiff/tensor.hpp"

#include <functional>
#include <vector>

namespace fsce {

// Reverse-mode gradient tape, rebuilt each forward pass (define-by-run).
// Nodes are appended in execution order, which is already topological.  A
// backward() call sweeps the node list in reverse into a scratch gradient
// table and then folds that table into the accumulated gradients, so
// gradients of separately backpropagated losses add up.
//
// A tape and the tensors recorded on it are confined to one thread; distinct
// tapes may run concurrently.
class Tape {
 public:
  // Scratch gradient table used during one backward sweep.  Entries are
  // empty until first touched.
  using Sweep = std::vector<Eigen::ArrayXd>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers a leaf.  Returns a tracked alias sharing the input's storage.
  Tensor watch(const Tensor& t);

  // Accumulates d(loss)/d(node) for every node reachable from `loss`.
  void backward(const Tensor& loss);

  bool has_grad(const Tensor& t) const;
  Eigen::Map<const Eigen::ArrayXd> grad(const Tensor& t) const;
  Tensor grad_tensor(const Tensor& t) const;

  std::size_t node_count() const { return meta_.size(); }

  // --- op support ---------------------------------------------------------

  // Creates a node for `out` (fresh, untracked tensor) whose pull function
  // propagates the node's sweep gradient to its inputs.
  Tensor record(Tensor out, std::function<void(Sweep&)> pull);

  // Accumulate `g` (size of node `node`) into sweep entry, allocating zeros
  // on first touch.
  static void sweep_add(Sweep& sweep, int node, const Eigen::Ref<const Eigen::ArrayXd>& g);
  static Eigen::ArrayXd* sweep_entry(Sweep& sweep, int node);

 private:
  struct NodeMeta {
    Shape shape;
    std::int64_t size;
  };
  std::vector<NodeMeta> meta_;
  std::vector<std::function<void(Sweep&)>> pulls_;  // empty fn for leaves
  std::vector<Eigen::ArrayXd> accum_;               // size-0 entries = absent
};

// Throws if the tensors are tracked on different tapes; returns the common
// tape (nullptr when all inputs are constants).
Tape* common_tape(std::initializer_list<const Tensor*> ts);

}  // namespace fsce
