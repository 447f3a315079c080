#pragma once

// Dense kernel for the small (n <= 8) systems in this library: linear
// solves, matrix exponential, norms. Everything is a value type.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "svgph/error.hpp"

namespace svgph {

namespace detail {

inline void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NonFiniteValue(std::string(what) + ": non-finite entry");
    }
  }
}

}  // namespace detail

class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t n) : data_(n, 0.0) {}
  Vec(std::initializer_list<double> values) : data_(values) {
    detail::require_finite(data_, "Vec");
  }
  explicit Vec(std::vector<double> values) : data_(std::move(values)) {
    detail::require_finite(data_, "Vec");
  }

  std::size_t size() const noexcept { return data_.size(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  std::span<const double> view() const noexcept { return data_; }
  std::span<double> view() noexcept { return data_; }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool operator==(const Vec&) const = default;

 private:
  std::vector<double> data_;
};

/// Row-major dense matrix.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  Mat(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionMismatch("Mat: entry count does not match rows*cols");
    }
    detail::require_finite(data_, "Mat");
  }
  /// Nested-list construction, one inner list per row.
  Mat(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
      if (row.size() != cols_) throw DimensionMismatch("Mat: ragged rows");
      data_.insert(data_.end(), row.begin(), row.end());
    }
    detail::require_finite(data_, "Mat");
  }

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<const double> entries() const noexcept { return data_; }

  bool operator==(const Mat&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Mat identity(std::size_t n) { return Mat::identity(n); }

inline Mat mat_add(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch("mat_add: shape mismatch");
  }
  Mat out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) + b(i, j);
  return out;
}

inline Mat mat_sub(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch("mat_sub: shape mismatch");
  }
  Mat out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) - b(i, j);
  return out;
}

inline Mat mat_scale(double s, const Mat& a) {
  Mat out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = s * a(i, j);
  return out;
}

inline Mat transpose(const Mat& a) {
  Mat out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

inline Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) throw DimensionMismatch("matmul: inner dimension mismatch");
  Mat out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

inline Vec matvec(const Mat& a, const Vec& x) {
  if (a.cols() != x.size()) throw DimensionMismatch("matvec: dimension mismatch");
  Vec out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
    out[i] = acc;
  }
  return out;
}

/// Max absolute row sum.
inline double norm_inf(const Mat& a) {
  double best = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) row += std::abs(a(i, j));
    best = std::max(best, row);
  }
  return best;
}

/// Max absolute column sum.
inline double norm_1(const Mat& a) {
  double best = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) col += std::abs(a(i, j));
    best = std::max(best, col);
  }
  return best;
}

inline double norm_inf(const Vec& x) {
  double best = 0.0;
  for (double v : x) best = std::max(best, std::abs(v));
  return best;
}

namespace detail {

// Gaussian elimination with partial pivoting on a copy of `a`, applied to
// every column of `rhs` in place.
inline void eliminate(Mat a, Mat& rhs) {
  const std::size_t n = a.rows();
  const double scale = norm_inf(a);
  const double tiny = 1e-14 * scale;
  if (scale == 0.0) throw SingularMatrix("solve_linear: zero matrix");

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    }
    if (std::abs(a(piv, k)) < tiny) {
      throw SingularMatrix("solve_linear: pivot below 1e-14*||A||");
    }
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      for (std::size_t j = 0; j < rhs.cols(); ++j) std::swap(rhs(k, j), rhs(piv, j));
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      if (f == 0.0) continue;
      a(i, k) = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
      for (std::size_t j = 0; j < rhs.cols(); ++j) rhs(i, j) -= f * rhs(k, j);
    }
  }
  for (std::size_t kk = n; kk-- > 0;) {
    for (std::size_t j = 0; j < rhs.cols(); ++j) {
      double acc = rhs(kk, j);
      for (std::size_t c = kk + 1; c < n; ++c) acc -= a(kk, c) * rhs(c, j);
      rhs(kk, j) = acc / a(kk, kk);
    }
  }
}

}  // namespace detail

inline Vec solve_linear(const Mat& a, const Vec& b) {
  if (!a.square()) throw DimensionMismatch("solve_linear: matrix not square");
  if (b.size() != a.rows()) throw DimensionMismatch("solve_linear: rhs length mismatch");
  Mat rhs(b.size(), 1);
  for (std::size_t i = 0; i < b.size(); ++i) rhs(i, 0) = b[i];
  detail::eliminate(a, rhs);
  Vec x(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) x[i] = rhs(i, 0);
  return x;
}

/// Solves A X = B for a matrix right-hand side.
inline Mat solve_linear(const Mat& a, Mat b) {
  if (!a.square()) throw DimensionMismatch("solve_linear: matrix not square");
  if (b.rows() != a.rows()) throw DimensionMismatch("solve_linear: rhs rows mismatch");
  detail::eliminate(a, b);
  return b;
}

/// e^{tA} by scaling and squaring with diagonal Pade approximants of degree
/// 3..13, using the 1-norm thresholds of Higham (2005).
inline Mat mat_exp(const Mat& a_in, double t) {
  if (!a_in.square()) throw DimensionMismatch("mat_exp: matrix not square");
  if (!std::isfinite(t)) throw NonFiniteValue("mat_exp: non-finite time");
  detail::require_finite(a_in.entries(), "mat_exp");

  const std::size_t n = a_in.rows();
  const Mat id = Mat::identity(n);
  Mat a = mat_scale(t, a_in);
  const double a_norm = norm_1(a);
  if (a_norm == 0.0) return id;

  static constexpr std::array<double, 4> b3{120.0, 60.0, 12.0, 1.0};
  static constexpr std::array<double, 6> b5{30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
  static constexpr std::array<double, 8> b7{17297280.0, 8648640.0, 1995840.0, 277200.0,
                                            25200.0,    1512.0,    56.0,      1.0};
  static constexpr std::array<double, 10> b9{17643225600.0, 8821612800.0, 2075673600.0,
                                             302702400.0,   30270240.0,   2162160.0,
                                             110880.0,      3960.0,       90.0,
                                             1.0};
  static constexpr std::array<double, 14> b13{
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
      129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
      1323241920.0,        40840800.0,          960960.0,           16380.0,
      182.0,               1.0};

  // Even powers up to the needed degree, then U (odd part) and V (even part).
  auto low_degree = [&](std::span<const double> b) {
    const std::size_t m = b.size() - 1;
    const Mat a2 = matmul(a, a);
    Mat even_pow = id;
    Mat u_inner(n, n);
    Mat v(n, n);
    for (std::size_t k = 0; 2 * k <= m; ++k) {
      if (k > 0) even_pow = matmul(even_pow, a2);
      v = mat_add(v, mat_scale(b[2 * k], even_pow));
      if (2 * k + 1 <= m) u_inner = mat_add(u_inner, mat_scale(b[2 * k + 1], even_pow));
    }
    return std::pair{matmul(a, u_inner), v};
  };

  auto pade_solve = [&](const Mat& u, const Mat& v) {
    return solve_linear(mat_sub(v, u), mat_add(v, u));
  };

  if (a_norm <= 1.495585217958292e-2) {
    auto [u, v] = low_degree(b3);
    return pade_solve(u, v);
  }
  if (a_norm <= 2.539398330063230e-1) {
    auto [u, v] = low_degree(b5);
    return pade_solve(u, v);
  }
  if (a_norm <= 9.504178996162932e-1) {
    auto [u, v] = low_degree(b7);
    return pade_solve(u, v);
  }
  if (a_norm <= 2.097847961257068) {
    auto [u, v] = low_degree(b9);
    return pade_solve(u, v);
  }

  constexpr double theta13 = 5.371920351148152;
  int squarings = 0;
  if (a_norm > theta13) {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(a_norm / theta13))));
    a = mat_scale(std::ldexp(1.0, -squarings), a);
  }
  const Mat a2 = matmul(a, a);
  const Mat a4 = matmul(a2, a2);
  const Mat a6 = matmul(a4, a2);
  auto combo = [&](double c6, double c4, double c2, double c0) {
    Mat m = mat_add(mat_scale(c6, a6), mat_scale(c4, a4));
    m = mat_add(m, mat_scale(c2, a2));
    return mat_add(m, mat_scale(c0, id));
  };
  Mat u = matmul(a6, combo(b13[13], b13[11], b13[9], 0.0));
  u = mat_add(u, combo(b13[7], b13[5], b13[3], b13[1]));
  u = matmul(a, u);
  Mat v = matmul(a6, combo(b13[12], b13[10], b13[8], 0.0));
  v = mat_add(v, combo(b13[6], b13[4], b13[2], b13[0]));
  Mat r = pade_solve(u, v);
  for (int s = 0; s < squarings; ++s) r = matmul(r, r);
  return r;
}

}  // namespace svgph
