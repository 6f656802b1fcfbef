#include "frango/field_matrix.hpp"

#include "frango/error.hpp"
#include "node.hpp"

namespace frango {

FieldMatrix FieldMatrix::identity(std::size_t n) {
  FieldMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Eigen::MatrixXd FieldMatrix::evaluate(std::span<const double> x) const {
  Eigen::MatrixXd m(rows_, cols_);
  CompiledFields prog(data_);
  auto v = prog.evaluate(x);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i * cols_ + j];
  return m;
}

FieldMatrix FieldMatrix::transpose() const {
  FieldMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

FieldMatrix FieldMatrix::block(std::size_t r0, std::size_t c0, std::size_t rows, std::size_t cols) const {
  FieldMatrix b(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
  return b;
}

FieldMatrix operator*(const FieldMatrix& a, const FieldMatrix& b) {
  if (a.cols() != b.rows()) throw DomainError("matrix shapes do not match for product");
  FieldMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      ScalarField s;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  }
  return c;
}

FieldMatrix operator+(const FieldMatrix& a, const FieldMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DomainError("matrix shapes do not match");
  FieldMatrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) + b(i, j);
  return c;
}

FieldMatrix operator-(const FieldMatrix& a, const FieldMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DomainError("matrix shapes do not match");
  FieldMatrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) - b(i, j);
  return c;
}

FieldMatrix inverse(const FieldMatrix& a) {
  if (a.rows() != a.cols()) throw DomainError("inverse of a non-square matrix");
  const int n = static_cast<int>(a.rows());
  std::vector<NodePtr> entries;
  for (const auto& f : a.data()) entries.push_back(f.node());
  auto fam = detail::make_inverse_family(n, std::move(entries));
  FieldMatrix inv(a.rows(), a.cols());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      inv(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
          ScalarField::from_node(detail::make_inverse_entry(fam, i, j));
  return inv;
}

ScalarField determinant(const FieldMatrix& a) {
  if (a.rows() != a.cols()) throw DomainError("determinant of a non-square matrix");
  const std::size_t n = a.rows();
  if (n == 0) return 1.0;
  if (n == 1) return a(0, 0);
  if (n == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  ScalarField det;
  for (std::size_t j = 0; j < n; ++j) {
    FieldMatrix minor(n - 1, n - 1);
    for (std::size_t r = 1; r < n; ++r) {
      std::size_t cc = 0;
      for (std::size_t c = 0; c < n; ++c) {
        if (c == j) continue;
        minor(r - 1, cc++) = a(r, c);
      }
    }
    ScalarField term = a(0, j) * determinant(minor);
    det = (j % 2 == 0) ? det + term : det - term;
  }
  return det;
}

FieldMatrix constant_matrix(const Eigen::MatrixXd& m) {
  FieldMatrix f(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) f(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = m(i, j);
  return f;
}

}  // namespace frango
