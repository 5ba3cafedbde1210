#include "spud/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace spud {

namespace {

void require_finite(const std::vector<double>& data) {
  for (double v : data) {
    if (!std::isfinite(v)) throw std::invalid_argument("matrix entry is not finite");
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                         " != " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  require_finite(data_);
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  require_finite(data_);
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Vector Matrix::col(std::size_t j) const {
  Vector out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix c(a.rows(), b.cols());
  const auto m = static_cast<std::ptrdiff_t>(a.rows());
  const std::size_t inner = a.cols();
  const std::size_t nc = b.cols();
  // i-k-j order keeps the inner loop contiguous in both b and c.
#pragma omp parallel for schedule(static) if (a.rows() * inner * nc > 100000)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    auto crow = c.row(static_cast<std::size_t>(i));
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = a(static_cast<std::size_t>(i), k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < nc; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  }
  return c;
}

}  // namespace serial

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw DimensionError("matmul_transposed: column counts differ");
  Matrix c(a.rows(), b.rows());
  const auto m = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static) if (a.rows() * b.rows() * a.cols() > 100000)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    auto arow = a.row(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < b.rows(); ++j) c(static_cast<std::size_t>(i), j) = dot(arow, b.row(j));
  }
  return c;
}

double max_abs(const Matrix& a) { return max_abs(std::span<const double>(a.data())); }

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double norm1(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

Matrix lu_solve(const Matrix& a, const Matrix& b, double singular_tol) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw DimensionError("lu_solve: matrix is not square");
  if (b.rows() != n) throw DimensionError("lu_solve: right-hand side has wrong row count");
  if (singular_tol < 0.0) singular_tol = 1e-10 * max_abs(a);

  Matrix lu = a;
  Matrix x = b;
  const std::size_t m = b.cols();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(piv, k))) piv = i;
    if (!(std::abs(lu(piv, k)) > singular_tol)) {
      throw SingularMatrix("lu_solve: pivot " + std::to_string(k) + " below tolerance");
    }
    if (piv != k) {
      std::swap_ranges(lu.row(k).begin(), lu.row(k).end(), lu.row(piv).begin());
      std::swap_ranges(x.row(k).begin(), x.row(k).end(), x.row(piv).begin());
    }
    const double d = lu(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu(i, k) / d;
      if (f == 0.0) continue;
      lu(i, k) = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
      for (std::size_t j = 0; j < m; ++j) x(i, j) -= f * x(k, j);
    }
  }
  for (std::size_t kk = n; kk-- > 0;) {
    for (std::size_t j = 0; j < m; ++j) {
      double acc = x(kk, j);
      for (std::size_t c = kk + 1; c < n; ++c) acc -= lu(kk, c) * x(c, j);
      x(kk, j) = acc / lu(kk, kk);
    }
  }
  return x;
}

Matrix inverse(const Matrix& a, double singular_tol) {
  return lu_solve(a, Matrix::identity(a.rows()), singular_tol);
}

std::size_t rank(const Matrix& a, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("rank: tol must be positive");
  const double threshold = tol * max_abs(a);
  Matrix m = a;
  const std::size_t rows = m.rows(), cols = m.cols();
  std::vector<std::size_t> col_of(cols);
  std::iota(col_of.begin(), col_of.end(), 0);
  std::size_t r = 0;
  for (; r < std::min(rows, cols); ++r) {
    std::size_t pi = r, pc = r;
    double best = -1.0;
    for (std::size_t i = r; i < rows; ++i) {
      auto row = m.row(i);
      for (std::size_t c = r; c < cols; ++c) {
        const double v = std::abs(row[col_of[c]]);
        if (v > best) {
          best = v;
          pi = i;
          pc = c;
        }
      }
    }
    if (best <= threshold) break;
    if (pi != r) std::swap_ranges(m.row(r).begin(), m.row(r).end(), m.row(pi).begin());
    std::swap(col_of[r], col_of[pc]);
    const std::size_t c0 = col_of[r];
    const auto prow = m.row(r);
    for (std::size_t i = r + 1; i < rows; ++i) {
      auto row = m.row(i);
      const double f = row[c0] / prow[c0];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < cols; ++j) row[j] -= f * prow[j];
    }
  }
  return r;
}

void write_matrix(std::ostream& os, const Matrix& m) {
  os << m.rows() << ' ' << m.cols() << '\n';
  std::ostringstream line;
  line << std::setprecision(17);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    line.str({});
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) line << ' ';
      line << m(i, j);
    }
    os << line.str() << '\n';
  }
}

Matrix read_matrix(std::istream& is) {
  std::size_t rows = 0, cols = 0;
  if (!(is >> rows >> cols)) throw IoError("matrix header missing");
  std::vector<double> data(rows * cols);
  for (auto& v : data) {
    std::string tok;
    if (!(is >> tok)) throw IoError("matrix body truncated");
    try {
      std::size_t used = 0;
      v = std::stod(tok, &used);
      if (used != tok.size()) throw IoError("bad matrix entry '" + tok + "'");
    } catch (const std::logic_error&) {
      throw IoError("bad matrix entry '" + tok + "'");
    }
  }
  try {
    return Matrix(rows, cols, std::move(data));
  } catch (const std::invalid_argument& e) {
    throw IoError(e.what());
  }
}

void save_matrix(const std::string& path, const Matrix& m) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_matrix(os, m);
  if (!os) throw IoError("write to '" + path + "' failed");
}

Matrix load_matrix(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  return read_matrix(is);
}

}  // namespace spud
