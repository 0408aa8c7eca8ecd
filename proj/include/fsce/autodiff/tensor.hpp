#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <vector>

namespace fsce {

class Tape;

using Shape = std::vector<int>;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::int64_t shape_size(const Shape& s);
bool shape_equal(const Shape& a, const Shape& b);
std::string shape_str(const Shape& s);

// Dense row-major f64 array of rank <= 4.  Copies are shallow (shared
// storage); ops always allocate fresh storage for their outputs.  A tensor
// becomes differentiable once it carries a node handle on an active tape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double v);
  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double v);
  static Tensor ones(Shape shape) { return full(std::move(shape), 1.0); }
  static Tensor from_matrix(const Eigen::Ref<const Eigen::MatrixXd>& m);

  bool defined() const { return static_cast<bool>(data_); }
  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int extent(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
  std::int64_t size() const;

  double* data() { return data_->data(); }
  const double* data() const { return data_->data(); }

  Eigen::Map<Eigen::ArrayXd> flat();
  Eigen::Map<const Eigen::ArrayXd> flat() const;
  // rank-2 view
  Eigen::Map<RowMat> mat();
  Eigen::Map<const RowMat> mat() const;
  Eigen::MatrixXd to_matrix() const;

  double at(std::initializer_list<int> idx) const;
  double item() const;  // size-1 tensors

  Tensor detached() const;  // same storage, no tape

  bool tracked() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int node() const { return node_; }

 private:
  friend class Tape;
  Shape shape_;
  std::shared_ptr<std::vector<double>> data_;
  Tape* tape_ = nullptr;
  int node_ = -1;
};

}  // namespace fsce
