#include "cfgeq/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "cfgeq/error.hpp"

namespace cfgeq {

namespace {

void require_same_dim(const Matrix& a, const Matrix& b, const char* op) {
  if (a.dim() != b.dim())
    throw DimensionMismatch(std::string(op) + ": dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                            std::to_string(b.dim()) + ")");
}

// Uniform double in [0, 1) from the top 53 bits.
double unit_double(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

}  // namespace

Matrix::Matrix(std::size_t dim) : dim_(dim), data_(dim * dim, 0.0) {}

Matrix::Matrix(std::size_t dim, std::vector<double> row_major) : dim_(dim), data_(std::move(row_major)) {
  if (data_.size() != dim * dim)
    throw InvalidArgument("matrix of dimension " + std::to_string(dim) + " needs " + std::to_string(dim * dim) +
                          " entries, got " + std::to_string(data_.size()));
  if (!all_finite()) throw InvalidArgument("matrix entries must be finite");
}

Matrix Matrix::identity(std::size_t dim) {
  Matrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_dim(*this, other, "add");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix mat_add(const Matrix& a, const Matrix& b) {
  Matrix out = a;
  out += b;
  return out;
}

Matrix mat_sub(const Matrix& a, const Matrix& b) {
  require_same_dim(a, b, "sub");
  Matrix out(a.dim());
  for (std::size_t r = 0; r < a.dim(); ++r)
    for (std::size_t c = 0; c < a.dim(); ++c) out(r, c) = a(r, c) - b(r, c);
  return out;
}

void mat_mul_into(const Matrix& a, const Matrix& b, Matrix& out) {
  require_same_dim(a, b, "mul");
  const std::size_t n = a.dim();
  if (out.dim() != n) out = Matrix(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += a(r, k) * b(k, c);
      out(r, c) = acc;
    }
  }
}

Matrix mat_mul(const Matrix& a, const Matrix& b) {
  Matrix out(a.dim());
  mat_mul_into(a, b, out);
  return out;
}

Matrix mat_scale(const Matrix& a, double t) {
  Matrix out = a;
  for (std::size_t r = 0; r < a.dim(); ++r)
    for (std::size_t c = 0; c < a.dim(); ++c) out(r, c) *= t;
  return out;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double x : a.entries()) s += x * x;
  return std::sqrt(s);
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double x : a.entries()) m = std::max(m, std::abs(x));
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_dim(a, b, "max_abs_diff");
  double m = 0.0;
  auto ea = a.entries();
  auto eb = b.entries();
  for (std::size_t i = 0; i < ea.size(); ++i) m = std::max(m, std::abs(ea[i] - eb[i]));
  return m;
}

std::uint64_t splitmix64(std::uint64_t x) { return SplitMix(x).next(); }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b + 0x632BE59BD9B4E019ULL));
}

const Matrix& Substitution::at(const std::string& terminal) const {
  auto it = map.find(terminal);
  if (it == map.end()) throw InvalidArgument("substitution has no image for terminal '" + terminal + "'");
  return it->second;
}

Substitution random_substitution(const std::vector<std::string>& terminals, std::size_t dim, double delta,
                                 std::uint64_t seed) {
  if (dim == 0) throw InvalidArgument("substitution dimension must be >= 1");
  if (!(delta > 0.0)) throw InvalidArgument("substitution delta must be positive");
  std::vector<std::string> names = terminals;
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());

  SplitMix rng(seed);
  Substitution sub;
  sub.dim = dim;
  sub.norm_bound = delta;
  sub.seed = seed;
  for (const auto& name : names) {
    std::vector<double> e(dim * dim);
    double norm2 = 0.0;
    for (auto& x : e) {
      x = 2.0 * unit_double(rng.next()) - 1.0;
      norm2 += x * x;
    }
    const double r = 0.5 + 0.5 * unit_double(rng.next());
    // An all-zero draw has probability 0 but would make the scale undefined.
    if (norm2 == 0.0) {
      e[0] = 1.0;
      norm2 = 1.0;
    }
    const double scale = delta * r / std::sqrt(norm2);
    for (auto& x : e) x *= scale;
    sub.map.emplace(name, Matrix(dim, std::move(e)));
  }
  return sub;
}

nlohmann::json to_json(const Matrix& m) {
  return nlohmann::json(std::vector<double>(m.entries().begin(), m.entries().end()));
}

Matrix matrix_from_json(const nlohmann::json& j, std::size_t dim) {
  return Matrix(dim, j.get<std::vector<double>>());
}

nlohmann::json to_json(const Substitution& s) {
  nlohmann::json mats = nlohmann::json::object();
  for (const auto& [name, m] : s.map) mats[name] = to_json(m);
  return {{"dim", s.dim}, {"norm_bound", s.norm_bound}, {"seed", s.seed}, {"matrices", mats}};
}

Substitution substitution_from_json(const nlohmann::json& j) {
  Substitution s;
  s.dim = j.at("dim").get<std::size_t>();
  s.norm_bound = j.at("norm_bound").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& [name, m] : j.at("matrices").items()) s.map.emplace(name, matrix_from_json(m, s.dim));
  return s;
}

}  // namespace cfgeq
