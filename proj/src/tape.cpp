#include "fsce/autodiff/tape.hpp"

#include <stdexcept>

namespace fsce {

Tensor Tape::watch(const Tensor& t) {
  if (!t.defined()) throw std::invalid_argument("cannot watch an undefined tensor");
  if (t.tracked() && t.tape() == this) return t;
  Tensor alias = t.detached();
  alias.tape_ = this;
  alias.node_ = static_cast<int>(meta_.size());
  meta_.push_back({alias.shape_, alias.size()});
  pulls_.emplace_back();
  return alias;
}

Tensor Tape::record(Tensor out, std::function<void(Sweep&)> pull) {
  out.tape_ = this;
  out.node_ = static_cast<int>(meta_.size());
  meta_.push_back({out.shape_, out.size()});
  pulls_.push_back(std::move(pull));
  return out;
}

void Tape::sweep_add(Sweep& sweep, int node, const Eigen::Ref<const Eigen::ArrayXd>& g) {
  auto& slot = sweep[static_cast<std::size_t>(node)];
  if (slot.size() == 0)
    slot = g;
  else
    slot += g;
}

Eigen::ArrayXd* Tape::sweep_entry(Sweep& sweep, int node) {
  auto& slot = sweep[static_cast<std::size_t>(node)];
  return slot.size() == 0 ? nullptr : &slot;
}

void Tape::backward(const Tensor& loss) {
  if (!loss.tracked() || loss.tape() != this)
    throw std::invalid_argument("backward: loss is not recorded on this tape");
  if (loss.size() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got " + shape_str(loss.shape()));

  Sweep sweep(meta_.size());
  sweep[static_cast<std::size_t>(loss.node())] = Eigen::ArrayXd::Constant(1, 1.0);

  for (int i = static_cast<int>(meta_.size()) - 1; i >= 0; --i) {
    auto& pull = pulls_[static_cast<std::size_t>(i)];
    if (!pull) continue;
    if (sweep[static_cast<std::size_t>(i)].size() == 0) continue;  // unreachable from loss
    pull(sweep);
  }

  if (accum_.size() < meta_.size()) accum_.resize(meta_.size());
  for (std::size_t i = 0; i < meta_.size(); ++i) {
    if (sweep[i].size() == 0) continue;
    if (accum_[i].size() == 0)
      accum_[i] = std::move(sweep[i]);
    else
      accum_[i] += sweep[i];
  }
}

bool Tape::has_grad(const Tensor& t) const {
  if (!t.tracked() || t.tape() != this) return false;
  const auto n = static_cast<std::size_t>(t.node());
  return n < accum_.size() && accum_[n].size() != 0;
}

Eigen::Map<const Eigen::ArrayXd> Tape::grad(const Tensor& t) const {
  if (!has_grad(t))
    throw std::invalid_argument("no gradient accumulated for this tensor");
  const auto& a = accum_[static_cast<std::size_t>(t.node())];
  return {a.data(), a.size()};
}

Tensor Tape::grad_tensor(const Tensor& t) const {
  auto g = grad(t);
  Tensor out(t.shape());
  out.flat() = g;
  return out;
}

Tape* common_tape(std::initializer_list<const Tensor*> ts) {
  Tape* tape = nullptr;
  for (const Tensor* t : ts) {
    if (!t->tracked()) continue;
    if (tape && t->tape() != tape)
      throw std::invalid_argument("operands recorded on different tapes");
    tape = t->tape();
  }
  return tape;
}

}  // namespace fsce
