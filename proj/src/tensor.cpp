#include "fsce/autodiff/tensor.hpp"

#include <numeric>
#include <sstream>
#include <stdexcept>

namespace fsce {

std::int64_t shape_size(const Shape& s) {
  std::int64_t n = 1;
  for (int e : s) n *= e;
  return n;
}

bool shape_equal(const Shape& a, const Shape& b) { return a == b; }

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ')';
  return os.str();
}

namespace {
void check_shape(const Shape& s) {
  if (s.empty() || s.size() > 4)
    throw std::invalid_argument("tensor rank must be 1..4, got " + shape_str(s));
  for (int e : s)
    if (e <= 0)
      throw std::invalid_argument("tensor extents must be positive, got " + shape_str(s));
}
}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_ = std::make_shared<std::vector<double>>(static_cast<std::size_t>(shape_size(shape_)), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)) {
  check_shape(shape_);
  if (static_cast<std::int64_t>(values.size()) != shape_size(shape_))
    throw std::invalid_argument("value count does not match shape " + shape_str(shape_));
  data_ = std::make_shared<std::vector<double>>(std::move(values));
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::full(Shape shape, double v) {
  Tensor t(std::move(shape));
  t.flat().setConstant(v);
  return t;
}

Tensor Tensor::from_matrix(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  Tensor t({static_cast<int>(m.rows()), static_cast<int>(m.cols())});
  t.mat() = m;
  return t;
}

std::int64_t Tensor::size() const { return static_cast<std::int64_t>(data_ ? data_->size() : 0); }

Eigen::Map<Eigen::ArrayXd> Tensor::flat() {
  return {data_->data(), static_cast<Eigen::Index>(data_->size())};
}

Eigen::Map<const Eigen::ArrayXd> Tensor::flat() const {
  return {data_->data(), static_cast<Eigen::Index>(data_->size())};
}

Eigen::Map<RowMat> Tensor::mat() {
  if (rank() != 2) throw std::invalid_argument("mat() requires rank 2, got " + shape_str(shape_));
  return {data_->data(), shape_[0], shape_[1]};
}

Eigen::Map<const RowMat> Tensor::mat() const {
  if (rank() != 2) throw std::invalid_argument("mat() requires rank 2, got " + shape_str(shape_));
  return {data_->data(), shape_[0], shape_[1]};
}

Eigen::MatrixXd Tensor::to_matrix() const { return mat(); }

double Tensor::at(std::initializer_list<int> idx) const {
  if (static_cast<int>(idx.size()) != rank())
    throw std::invalid_argument("index rank mismatch");
  std::int64_t off = 0;
  int axis = 0;
  for (int i : idx) {
    if (i < 0 || i >= shape_[static_cast<std::size_t>(axis)])
      throw std::out_of_range("tensor index out of range");
    off = off * shape_[static_cast<std::size_t>(axis)] + i;
    ++axis;
  }
  return (*data_)[static_cast<std::size_t>(off)];
}

double Tensor::item() const {
  if (size() != 1) throw std::invalid_argument("item() requires a size-1 tensor");
  return (*data_)[0];
}

Tensor Tensor::detached() const {
  Tensor t = *this;
  t.tape_ = nullptr;
  t.node_ = -1;
  return t;
}

}  // namespace fsce
