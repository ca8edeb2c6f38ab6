#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pairdisc {

using Index = Eigen::Index;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using ColVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Matd = RowMatrix<double>;
using Vecd = ColVector<double>;
using RowVecd = RowVec<double>;

// Raised when a value leaves the finite domain (NaN/Inf) or a computation
// diverges. The CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised for malformed or inconsistent input data. CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline std::string shape_str(const std::vector<Index>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}
}  // namespace detail

// Dense row-major array with an explicit shape. Rank 1..3 is all the model
// needs (vectors, weight matrices, the optional conv kernel stack).
template <typename Scalar>
class TensorT {
 public:
  TensorT() = default;

  explicit TensorT(std::vector<Index> shape) : shape_(std::move(shape)) {
    Index n = 1;
    for (Index d : shape_) {
      if (d <= 0) throw std::invalid_argument("tensor dimensions must be positive, got " + detail::shape_str(shape_));
      n *= d;
    }
    if (shape_.empty()) throw std::invalid_argument("tensor rank must be >= 1");
    data_ = ColVector<Scalar>::Zero(n);
  }

  static TensorT zeros(std::vector<Index> shape) { return TensorT(std::move(shape)); }

  static TensorT constant(std::vector<Index> shape, Scalar v) {
    TensorT t(std::move(shape));
    t.data_.setConstant(v);
    return t;
  }

  static TensorT from_rows(std::initializer_list<std::initializer_list<Scalar>> rows) {
    Index r = static_cast<Index>(rows.size());
    Index c = static_cast<Index>(rows.begin()->size());
    TensorT t({r, c});
    Index i = 0;
    for (const auto& row : rows) {
      if (static_cast<Index>(row.size()) != c)
        throw std::invalid_argument("ragged initializer");
      for (Scalar v : row) t.data_[i++] = v;
    }
    return t;
  }

  const std::vector<Index>& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index size() const { return data_.size(); }
  Index dim(Index i) const { return shape_.at(static_cast<std::size_t>(i)); }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Scalar& operator[](Index i) { return data_[i]; }
  Scalar operator[](Index i) const { return data_[i]; }

  // Flat view.
  Eigen::Map<ColVector<Scalar>> vec() { return {data_.data(), data_.size()}; }
  Eigen::Map<const ColVector<Scalar>> vec() const { return {data_.data(), data_.size()}; }

  // Matrix view: rank-2 as-is, rank-1 as a single row.
  Eigen::Map<RowMatrix<Scalar>> mat() {
    check_rank_le2();
    return {data_.data(), rows(), cols()};
  }
  Eigen::Map<const RowMatrix<Scalar>> mat() const {
    check_rank_le2();
    return {data_.data(), rows(), cols()};
  }

  // k-th slice of a rank-3 tensor as a matrix [shape[1] x shape[2]].
  Eigen::Map<RowMatrix<Scalar>> slice(Index k) {
    check_slice(k);
    return {data_.data() + k * shape_[1] * shape_[2], shape_[1], shape_[2]};
  }
  Eigen::Map<const RowMatrix<Scalar>> slice(Index k) const {
    check_slice(k);
    return {data_.data() + k * shape_[1] * shape_[2], shape_[1], shape_[2]};
  }

  bool all_finite() const { return data_.allFinite(); }

  void require_finite(const std::string& what) const {
    if (!all_finite()) throw NumericError("non-finite values in " + what);
  }

  bool same_shape(const TensorT& o) const { return shape_ == o.shape_; }

 private:
  Index rows() const { return rank() == 1 ? 1 : shape_[0]; }
  Index cols() const { return rank() == 1 ? shape_[0] : shape_[1]; }

  void check_rank_le2() const {
    if (rank() > 2) throw std::invalid_argument("mat() requires rank <= 2, tensor is " + detail::shape_str(shape_));
  }
  void check_slice(Index k) const {
    if (rank() != 3) throw std::invalid_argument("slice() requires rank 3");
    if (k < 0 || k >= shape_[0]) throw std::invalid_argument("slice index out of range");
  }

  std::vector<Index> shape_;
  ColVector<Scalar> data_;
};

using Tensor = TensorT<double>;

// Matrix product of rank-<=2 tensors. Summation order is Eigen's fixed
// traversal, so results are reproducible run to run.
template <typename Scalar>
TensorT<Scalar> matmul(const TensorT<Scalar>& a, const TensorT<Scalar>& b) {
  if (a.rank() > 2 || b.rank() > 2)
    throw std::invalid_argument("matmul requires rank-1 or rank-2 operands");
  auto am = a.mat();
  auto bm = b.mat();
  if (am.cols() != bm.rows())
    throw std::invalid_argument("matmul shape mismatch: " + detail::shape_str(a.shape()) + " x " +
                                detail::shape_str(b.shape()));
  TensorT<Scalar> out({am.rows(), bm.cols()});
  out.mat().noalias() = am * bm;
  out.require_finite("matmul result");
  return out;
}

}  // namespace pairdisc
