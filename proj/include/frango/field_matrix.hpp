#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "frango/field.hpp"

namespace frango {

// Dense row-major matrix of fields.
class FieldMatrix {
 public:
  FieldMatrix() = default;
  FieldMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  static FieldMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  ScalarField& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const ScalarField& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  const std::vector<ScalarField>& data() const { return data_; }

  Eigen::MatrixXd evaluate(std::span<const double> x) const;
  FieldMatrix transpose() const;
  FieldMatrix block(std::size_t r0, std::size_t c0, std::size_t rows, std::size_t cols) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<ScalarField> data_;
};

FieldMatrix operator*(const FieldMatrix& a, const FieldMatrix& b);
FieldMatrix operator+(const FieldMatrix& a, const FieldMatrix& b);
FieldMatrix operator-(const FieldMatrix& a, const FieldMatrix& b);

// Symbolic inverse; entries share one inverse family so derivatives stay compact.
// Constant matrices are inverted immediately (InversionError when singular).
FieldMatrix inverse(const FieldMatrix& a);

// Determinant by cofactor expansion (intended for small blocks).
ScalarField determinant(const FieldMatrix& a);

// Matrix of constants.
FieldMatrix constant_matrix(const Eigen::MatrixXd& m);

}  // namespace frango
