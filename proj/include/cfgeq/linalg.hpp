#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace cfgeq {

/// Dense square matrix of doubles, row-major. Dimension is a runtime value.
class Matrix {
 public:
  Matrix() = default;
  /// Zero matrix.
  explicit Matrix(std::size_t dim);
  /// Throws InvalidArgument on a size mismatch or a non-finite entry.
  Matrix(std::size_t dim, std::vector<double> row_major);

  static Matrix zero(std::size_t dim) { return Matrix(dim); }
  static Matrix identity(std::size_t dim);

  std::size_t dim() const { return dim_; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * dim_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * dim_ + c]; }
  std::span<const double> entries() const { return data_; }

  bool all_finite() const;
  bool operator==(const Matrix&) const = default;

  Matrix& operator+=(const Matrix& other);

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

Matrix mat_add(const Matrix& a, const Matrix& b);
Matrix mat_sub(const Matrix& a, const Matrix& b);
Matrix mat_mul(const Matrix& a, const Matrix& b);
Matrix mat_scale(const Matrix& a, double t);
double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);

/// out = a * b, reusing out's storage. `out` must not alias a or b.
void mat_mul_into(const Matrix& a, const Matrix& b, Matrix& out);

/// SplitMix64 step; used to derive independent seeds from tuples.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// Assignment terminal -> matrix. Every matrix has the same dimension and a
/// Frobenius norm not above `norm_bound`.
struct Substitution {
  std::size_t dim = 0;
  std::map<std::string, Matrix> map;
  double norm_bound = 0.0;
  std::uint64_t seed = 0;

  const Matrix& at(const std::string& terminal) const;
};

/// Entries uniform in [-1, 1], then each matrix rescaled to Frobenius norm
/// delta * r with r uniform in [0.5, 1]. Terminals are drawn in sorted order
/// from one generator seeded with `seed`; bit-identical across platforms.
Substitution random_substitution(const std::vector<std::string>& terminals, std::size_t dim, double delta,
                                 std::uint64_t seed);

nlohmann::json to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j, std::size_t dim);
nlohmann::json to_json(const Substitution& s);
Substitution substitution_from_json(const nlohmann::json& j);

}  // namespace cfgeq
