#include "cfgeq/oracle.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <unordered_map>

#include "cfgeq/error.hpp"
#include "cfgeq/linalg.hpp"

namespace cfgeq {

bool shortlex_less(const Word& a, const Word& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

namespace {

bool single_char_alphabet(const std::vector<std::string>& alphabet) {
  return std::all_of(alphabet.begin(), alphabet.end(), [](const std::string& s) { return s.size() == 1; });
}

std::map<std::string, std::size_t> letter_indices(const std::vector<std::string>& alphabet) {
  if (alphabet.size() > 255) throw InvalidArgument("oracle supports at most 255 terminals");
  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < alphabet.size(); ++i) idx[alphabet[i]] = i;
  return idx;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw Error("oracle: coefficient overflow");
  return r;
}

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw Error("oracle: coefficient overflow");
  return r;
}

// Words outside the filter form an ideal of the free monoid (too long, or
// not a factor of a fixed target), so dropping them commutes with + and *.
struct Filter {
  std::size_t max_len = 0;
  const Word* factor_of = nullptr;

  bool allows(const Word& w) const {
    if (w.size() > max_len) return false;
    return factor_of == nullptr || factor_of->find(w) != std::string::npos;
  }
};

struct Budget {
  std::size_t words = static_cast<std::size_t>(-1);
  std::size_t work = static_cast<std::size_t>(-1);
  std::size_t spent = 0;

  void charge(std::size_t n) {
    spent += n;
    if (spent > work) throw OracleBudgetExceeded("oracle: work budget of " + std::to_string(work) + " exhausted");
  }
  void check_words(std::size_t n) const {
    if (n > words) throw OracleBudgetExceeded("oracle: more than " + std::to_string(words) + " stored words");
  }
};

// Truncated word polynomial, bucketed by word length.
struct Series {
  std::vector<std::unordered_map<Word, std::uint64_t>> by_len;

  explicit Series(std::size_t max_len = 0) : by_len(max_len + 1) {}

  bool operator==(const Series&) const = default;

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& b : by_len) n += b.size();
    return n;
  }
  void add(const Word& w, std::uint64_t c) {
    auto& slot = by_len[w.size()][w];
    slot = checked_add(slot, c);
  }
};

Series multiply(const Series& a, const Series& b, const Filter& f, Budget& budget) {
  const std::size_t max_len = a.by_len.size() - 1;
  Series out(max_len);
  for (std::size_t la = 0; la <= max_len; ++la) {
    if (a.by_len[la].empty()) continue;
    for (std::size_t lb = 0; la + lb <= max_len; ++lb) {
      if (b.by_len[lb].empty()) continue;
      budget.charge(a.by_len[la].size() * b.by_len[lb].size());
      auto& bucket = out.by_len[la + lb];
      for (const auto& [u, cu] : a.by_len[la])
        for (const auto& [v, cv] : b.by_len[lb]) {
          Word w = u + v;
          if (!f.allows(w)) continue;
          auto& slot = bucket[w];
          slot = checked_add(slot, checked_mul(cu, cv));
        }
      budget.check_words(bucket.size());
    }
  }
  return out;
}

void accumulate(Series& into, const Series& from) {
  for (const auto& bucket : from.by_len)
    for (const auto& [w, c] : bucket) into.add(w, c);
}

struct IterationOutcome {
  std::vector<Series> values;  // internal coordinates (shifted variables without epsilon)
  bool stabilized = false;
  std::size_t iterations = 0;
};

// Compiled monomial: >= 0 variable index, < 0 -(letter index + 1).
using IndexedMono = std::vector<int>;

struct IndexedSystem {
  std::vector<std::vector<IndexedMono>> rhs;
  std::vector<std::vector<std::size_t>> linear;
  std::size_t axiom = 0;
  bool axiom_shifted = false;
};

IndexedSystem index_system(const EquationSystem& sys, const std::map<std::string, std::size_t>& letters) {
  IndexedSystem out;
  const std::size_t n = sys.variables.size();
  std::map<std::string, std::size_t> var;
  for (std::size_t i = 0; i < n; ++i) var[sys.variables[i]] = i;
  out.rhs.resize(n);
  out.linear.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = sys.rhs.find(sys.variables[i]);
    if (it == sys.rhs.end()) continue;
    for (const auto& m : it->second.terms) {
      IndexedMono im;
      for (const auto& s : m.factors) {
        if (s.is_nonterminal()) {
          im.push_back(static_cast<int>(var.at(s.name)));
        } else {
          auto lt = letters.find(s.name);
          if (lt == letters.end()) throw InvalidArgument("terminal '" + s.name + "' missing from oracle alphabet");
          im.push_back(-static_cast<int>(lt->second) - 1);
        }
      }
      out.rhs[i].push_back(std::move(im));
    }
  }
  for (const auto& [v, ws] : sys.linear_part)
    for (const auto& w : ws) out.linear[var.at(v)].push_back(var.at(w));
  out.axiom = var.at(sys.axiom);
  out.axiom_shifted = sys.is_shifted(sys.axiom);
  return out;
}

Series axiom_series(const IndexedSystem& is, const std::vector<Series>& values, const Filter& f) {
  Series s = values[is.axiom];
  if (is.axiom_shifted && f.allows(Word{})) s.add(Word{}, 1);
  return s;
}

SeriesSlice make_slice(const Series& s, const std::vector<std::string>& alphabet, std::size_t max_len) {
  SeriesSlice slice;
  slice.alphabet = alphabet;
  slice.max_len = max_len;
  for (const auto& bucket : s.by_len)
    for (const auto& [w, c] : bucket)
      if (c != 0) slice.coefficients.emplace(w, c);
  return slice;
}

IterationOutcome run_word_iteration(const IndexedSystem& is, std::size_t letters, const Filter& f,
                                    std::size_t iter_cap, Budget& budget,
                                    const std::function<void(std::size_t, const std::vector<Series>&)>& observe) {
  const std::size_t n = is.rhs.size();
  const std::size_t L = f.max_len;
  IterationOutcome out;
  out.values.assign(n, Series(L));
  Series unit(L);
  unit.add(Word{}, 1);
  std::vector<Series> letter_series(letters, Series(L));
  for (std::size_t a = 0; a < letters; ++a) {
    const Word w(1, static_cast<char>(a));
    if (f.allows(w)) letter_series[a].add(w, 1);
  }

  for (std::size_t k = 0; k < iter_cap; ++k) {
    std::vector<Series> next(n, Series(L));
    std::size_t total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& mono : is.rhs[i]) {
        Series acc = unit;
        for (int factor : mono) {
          const Series& rhs = factor >= 0 ? out.values[static_cast<std::size_t>(factor)]
                                          : letter_series[static_cast<std::size_t>(-factor - 1)];
          acc = multiply(acc, rhs, f, budget);
          if (acc.size() == 0) break;
        }
        accumulate(next[i], acc);
      }
      for (std::size_t j : is.linear[i]) accumulate(next[i], out.values[j]);
      total += next[i].size();
      budget.check_words(total);
    }
    out.iterations = k + 1;
    const bool same = next == out.values;
    out.values = std::move(next);
    if (observe) observe(out.iterations, out.values);
    if (same) {
      out.stabilized = true;
      break;
    }
  }
  return out;
}

// Number of words up to length L counted with multiplicity, summed over all
// variables: an upper bound on what explicit enumeration would store.
// Infinity when the counts do not settle.
double estimated_words(const IndexedSystem& is, std::size_t L, std::size_t iter_cap) {
  const std::size_t n = is.rhs.size();
  std::vector<std::vector<double>> x(n, std::vector<double>(L + 1, 0.0));
  for (std::size_t k = 0; k < iter_cap; ++k) {
    std::vector<std::vector<double>> next(n, std::vector<double>(L + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& mono : is.rhs[i]) {
        std::vector<double> acc(L + 1, 0.0), tmp(L + 1);
        acc[0] = 1.0;
        for (int factor : mono) {
          std::fill(tmp.begin(), tmp.end(), 0.0);
          if (factor < 0) {
            for (std::size_t l = 0; l < L; ++l) tmp[l + 1] = acc[l];
          } else {
            const auto& y = x[static_cast<std::size_t>(factor)];
            for (std::size_t a = 0; a <= L; ++a)
              if (acc[a] != 0.0)
                for (std::size_t b = 0; a + b <= L; ++b) tmp[a + b] += acc[a] * y[b];
          }
          std::swap(acc, tmp);
        }
        for (std::size_t l = 0; l <= L; ++l) next[i][l] += acc[l];
      }
      for (std::size_t j : is.linear[i])
        for (std::size_t l = 0; l <= L; ++l) next[i][l] += x[j][l];
    }
    const bool same = next == x;
    x = std::move(next);
    if (same) {
      double total = 0.0;
      for (const auto& v : x)
        for (double c : v) total += c;
      return total;
    }
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace

std::string render_word(const Word& w, const std::vector<std::string>& alphabet) {
  if (w.empty()) return "eps";
  const bool compact = single_char_alphabet(alphabet);
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!compact && i) out += '.';
    out += alphabet.at(static_cast<unsigned char>(w[i]));
  }
  return out;
}

Word parse_word(const std::string& text, const std::vector<std::string>& alphabet) {
  if (text == "eps" || text.empty()) return Word{};
  auto idx = letter_indices(alphabet);
  std::vector<std::string> letters;
  if (single_char_alphabet(alphabet) && text.find('.') == std::string::npos) {
    for (char c : text) letters.emplace_back(1, c);
  } else {
    std::size_t start = 0;
    for (;;) {
      auto dot = text.find('.', start);
      letters.push_back(text.substr(start, dot - start));
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
  }
  Word w;
  for (const auto& l : letters) {
    auto it = idx.find(l);
    if (it == idx.end()) throw InvalidArgument("unknown letter '" + l + "' in word '" + text + "'");
    w.push_back(static_cast<char>(it->second));
  }
  return w;
}

std::uint64_t SeriesSlice::coefficient(const Word& w) const {
  auto it = coefficients.find(w);
  return it == coefficients.end() ? 0 : it->second;
}

std::vector<std::pair<Word, std::uint64_t>> SeriesSlice::sorted() const {
  std::vector<std::pair<Word, std::uint64_t>> v(coefficients.begin(), coefficients.end());
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return shortlex_less(a.first, b.first); });
  return v;
}

std::size_t default_iter_cap(std::size_t max_len, std::size_t nonterminals) {
  return std::max<std::size_t>(max_len, 1) * (1 + nonterminals) * 4;
}

SeriesSlice symbolic_slice(const EquationSystem& sys, const std::vector<std::string>& alphabet, std::size_t max_len,
                           const OracleOptions& opts) {
  if (max_len > opts.max_len_guard)
    throw InvalidArgument("oracle: max_len " + std::to_string(max_len) + " exceeds guard " +
                          std::to_string(opts.max_len_guard));
  const IndexedSystem is = index_system(sys, letter_indices(alphabet));
  const Filter f{max_len, nullptr};
  const std::size_t cap = opts.iter_cap.value_or(default_iter_cap(max_len, sys.variables.size()));

  std::function<void(std::size_t, const std::vector<Series>&)> observe;
  if (opts.on_iteration) {
    observe = [&](std::size_t k, const std::vector<Series>& values) {
      opts.on_iteration(k, make_slice(axiom_series(is, values, f), alphabet, max_len));
    };
  }
  Budget budget{opts.term_budget, opts.work_budget};
  IterationOutcome r = run_word_iteration(is, alphabet.size(), f, cap, budget, observe);
  SeriesSlice slice = make_slice(axiom_series(is, r.values, f), alphabet, max_len);
  slice.stabilized = r.stabilized;
  slice.iterations = r.iterations;
  return slice;
}

SeriesSlice series_slice(const Grammar& g, std::size_t max_len, const OracleOptions& opts) {
  return symbolic_slice(build_system(g), g.terminals(), max_len, opts);
}

std::uint64_t membership(const Grammar& g, const std::vector<std::string>& letters) {
  const auto idx = letter_indices(g.terminals());
  Word target;
  for (const auto& l : letters) {
    auto it = idx.find(l);
    if (it == idx.end()) return 0;
    target.push_back(static_cast<char>(it->second));
  }
  const EquationSystem sys = build_system(g);
  const IndexedSystem is = index_system(sys, idx);
  const Filter f{target.size(), &target};
  Budget unlimited;
  IterationOutcome r = run_word_iteration(is, g.terminals().size(), f,
                                          default_iter_cap(target.size(), sys.variables.size()), unlimited, {});
  if (!r.stabilized)
    throw OracleUnstabilized("membership: derivation count of '" + render_word(target, g.terminals()) +
                             "' does not stabilize (unbounded ambiguity)");
  Series s = axiom_series(is, r.values, f);
  const auto& bucket = s.by_len[target.size()];
  auto it = bucket.find(target);
  return it == bucket.end() ? 0 : it->second;
}

std::uint64_t membership(const Grammar& g, const std::string& rendered) {
  const Word w = parse_word(rendered, g.terminals());
  std::vector<std::string> letters;
  for (char c : w) letters.push_back(g.terminals()[static_cast<unsigned char>(c)]);
  return membership(g, letters);
}

const char* to_string(OracleMethod m) { return m == OracleMethod::Enumeration ? "enumeration" : "fingerprint"; }

std::vector<std::string> union_alphabet(const Grammar& g1, const Grammar& g2) {
  std::set<std::string> s(g1.terminals().begin(), g1.terminals().end());
  s.insert(g2.terminals().begin(), g2.terminals().end());
  return {s.begin(), s.end()};
}

// ---------------------------------------------------------------------------
// Fingerprints: exact evaluation mod p = 2^61 - 1 at letters
// mu_a = sum_i x[a][i] E_{i,i+1}. The (0, l) entry of a word's image is
// prod_i x[w_i][i] when |w| = l and 0 otherwise, so the axiom's (0, l)
// entry is the length-l stratum evaluated at a generic point.

namespace {

__extension__ typedef unsigned __int128 u128;

constexpr std::uint64_t kPrime = (std::uint64_t{1} << 61) - 1;

std::uint64_t addmod(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = a + b;
  return r >= kPrime ? r - kPrime : r;
}

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b) {
  const u128 z = static_cast<u128>(a) * b;
  std::uint64_t r = static_cast<std::uint64_t>(z & kPrime) + static_cast<std::uint64_t>(z >> 61);
  return r >= kPrime ? r - kPrime : r;
}

// Upper-triangular matrices mod p; everything built from the letter images
// and the identity stays upper triangular.
struct ModMat {
  std::size_t d = 0;
  std::vector<std::uint64_t> a;

  explicit ModMat(std::size_t dim = 0) : d(dim), a(dim * dim, 0) {}
  std::uint64_t& at(std::size_t i, std::size_t j) { return a[i * d + j]; }
  std::uint64_t at(std::size_t i, std::size_t j) const { return a[i * d + j]; }
  bool operator==(const ModMat&) const = default;
  bool is_zero() const {
    return std::all_of(a.begin(), a.end(), [](std::uint64_t x) { return x == 0; });
  }
};

ModMat mod_mul(const ModMat& x, const ModMat& y) {
  ModMat out(x.d);
  for (std::size_t i = 0; i < x.d; ++i)
    for (std::size_t k = i; k < x.d; ++k) {
      const std::uint64_t xik = x.at(i, k);
      if (xik == 0) continue;
      for (std::size_t j = k; j < x.d; ++j) out.at(i, j) = addmod(out.at(i, j), mulmod(xik, y.at(k, j)));
    }
  return out;
}

void mod_add(ModMat& into, const ModMat& y) {
  for (std::size_t i = 0; i < into.a.size(); ++i) into.a[i] = addmod(into.a[i], y.a[i]);
}

using Point = std::vector<std::vector<std::uint64_t>>;  // [letter][position]

Point random_point(std::size_t letters, std::size_t positions, std::uint64_t seed) {
  Point p(letters, std::vector<std::uint64_t>(positions));
  for (std::size_t a = 0; a < letters; ++a)
    for (std::size_t i = 0; i < positions; ++i) {
      std::uint64_t v;
      std::uint64_t ctr = 0;
      do {
        v = derive_seed(seed, a, i * 1024 + ctr++) & kPrime;
      } while (v >= kPrime);
      p[a][i] = v;
    }
  return p;
}

// Row 0 of the axiom's value: entry l is the length-l fingerprint.
std::vector<std::uint64_t> solve_fingerprint(const IndexedSystem& is, std::size_t max_len, const Point& x,
                                             std::size_t iter_cap) {
  const std::size_t d = max_len + 1;
  std::vector<ModMat> letters;
  for (const auto& row : x) {
    ModMat m(d);
    for (std::size_t i = 0; i + 1 < d; ++i) m.at(i, i + 1) = row[i];
    letters.push_back(std::move(m));
  }
  ModMat id(d);
  for (std::size_t i = 0; i < d; ++i) id.at(i, i) = 1;

  const std::size_t n = is.rhs.size();
  std::vector<ModMat> values(n, ModMat(d));
  bool stabilized = false;
  for (std::size_t k = 0; k < iter_cap && !stabilized; ++k) {
    std::vector<ModMat> next(n, ModMat(d));
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& mono : is.rhs[i]) {
        ModMat acc = id;
        for (int factor : mono) {
          const ModMat& f = factor >= 0 ? values[static_cast<std::size_t>(factor)]
                                        : letters[static_cast<std::size_t>(-factor - 1)];
          acc = mod_mul(acc, f);
          if (acc.is_zero()) break;
        }
        mod_add(next[i], acc);
      }
      for (std::size_t j : is.linear[i]) mod_add(next[i], values[j]);
    }
    stabilized = next == values;
    values = std::move(next);
  }
  if (!stabilized) throw OracleUnstabilized("fingerprint iteration does not stabilize (unbounded ambiguity)");
  ModMat axiom = values[is.axiom];
  if (is.axiom_shifted) mod_add(axiom, id);
  std::vector<std::uint64_t> row(d);
  for (std::size_t l = 0; l < d; ++l) row[l] = axiom.at(0, l);
  return row;
}

struct FingerprintPair {
  IndexedSystem left, right;
  std::size_t cap_left = 0, cap_right = 0;
};

DistinguishingResult fingerprint_search(const Grammar& g1, const Grammar& g2, const std::vector<std::string>& alphabet,
                                        std::size_t max_len, const OracleOptions& opts) {
  const auto idx = letter_indices(alphabet);
  const EquationSystem s1 = build_system(g1), s2 = build_system(g2);
  FingerprintPair fp{index_system(s1, idx), index_system(s2, idx),
                     opts.iter_cap.value_or(default_iter_cap(max_len, s1.variables.size())),
                     opts.iter_cap.value_or(default_iter_cap(max_len, s2.variables.size()))};

  DistinguishingResult result;
  result.method = OracleMethod::Fingerprint;
  result.max_len = max_len;

  constexpr std::size_t kPoints = 2;
  std::vector<Point> points;
  for (std::size_t r = 0; r < kPoints; ++r)
    points.push_back(random_point(alphabet.size(), std::max<std::size_t>(max_len, 1), opts.fingerprint_seed + r));

  std::optional<std::size_t> length;
  for (const auto& p : points) {
    auto a = solve_fingerprint(fp.left, max_len, p, fp.cap_left);
    auto b = solve_fingerprint(fp.right, max_len, p, fp.cap_right);
    for (std::size_t l = 0; l <= max_len; ++l)
      if (a[l] != b[l]) {
        if (!length || l < *length) length = l;
        break;
      }
  }
  if (!length) return result;

  // Fix letters left to right: a prefix is extendable iff the stratum
  // restricted to words with that prefix still differs.
  const std::size_t l = *length;
  Word w;
  for (std::size_t pos = 0; pos < l; ++pos) {
    bool found = false;
    for (std::size_t letter = 0; letter < alphabet.size() && !found; ++letter) {
      for (const auto& base : points) {
        Point p = base;
        for (std::size_t j = 0; j <= pos; ++j) {
          const std::size_t fixed = j < pos ? static_cast<unsigned char>(w[j]) : letter;
          for (std::size_t a = 0; a < alphabet.size(); ++a) p[a][j] = a == fixed ? 1 : 0;
        }
        auto a = solve_fingerprint(fp.left, l, p, fp.cap_left);
        auto b = solve_fingerprint(fp.right, l, p, fp.cap_right);
        if (a[l] != b[l]) {
          found = true;
          break;
        }
      }
      if (found) w.push_back(static_cast<char>(letter));
    }
    if (!found) throw Error("oracle: fingerprint prefix search lost the witness");
  }

  std::vector<std::string> letters;
  for (char c : w) letters.push_back(alphabet[static_cast<unsigned char>(c)]);
  WitnessReport rep{render_word(w, alphabet), w.size(), membership(g1, letters), membership(g2, letters)};
  if (rep.coeff_left == rep.coeff_right) throw Error("oracle: fingerprint witness does not verify");
  result.witness = rep;
  return result;
}

}  // namespace

std::vector<std::uint64_t> stratum_fingerprints(const Grammar& g, const std::vector<std::string>& alphabet,
                                                std::size_t max_len, std::uint64_t seed, const OracleOptions& opts) {
  const EquationSystem sys = build_system(g);
  const IndexedSystem is = index_system(sys, letter_indices(alphabet));
  return solve_fingerprint(is, max_len, random_point(alphabet.size(), std::max<std::size_t>(max_len, 1), seed),
                           opts.iter_cap.value_or(default_iter_cap(max_len, sys.variables.size())));
}

DistinguishingResult min_distinguishing_word(const Grammar& g1, const Grammar& g2, std::size_t max_len,
                                             const OracleOptions& opts) {
  require_renaming_acyclic(g1);
  require_renaming_acyclic(g2);
  const auto alphabet = union_alphabet(g1, g2);
  const EquationSystem s1 = build_system(g1), s2 = build_system(g2);
  auto fits = [&](const EquationSystem& sys) {
    const IndexedSystem is = index_system(sys, letter_indices(alphabet));
    const auto cap = opts.iter_cap.value_or(default_iter_cap(max_len, sys.variables.size()));
    return estimated_words(is, max_len, cap) <= static_cast<double>(opts.term_budget);
  };
  if (max_len <= opts.max_len_guard && fits(s1) && fits(s2)) {
    try {
      const SeriesSlice a = symbolic_slice(s1, alphabet, max_len, opts);
      const SeriesSlice b = symbolic_slice(s2, alphabet, max_len, opts);
      if (!a.stabilized || !b.stabilized)
        throw OracleUnstabilized("oracle: series slice did not stabilize (unbounded ambiguity)");
      DistinguishingResult result;
      result.method = OracleMethod::Enumeration;
      result.max_len = max_len;
      std::set<Word, decltype(&shortlex_less)> keys(&shortlex_less);
      for (const auto& [w, c] : a.coefficients) keys.insert(w);
      for (const auto& [w, c] : b.coefficients) keys.insert(w);
      for (const auto& w : keys) {
        const auto ca = a.coefficient(w), cb = b.coefficient(w);
        if (ca != cb) {
          result.witness = WitnessReport{render_word(w, alphabet), w.size(), ca, cb};
          break;
        }
      }
      return result;
    } catch (const OracleBudgetExceeded&) {
      // fall through to fingerprints
    }
  }
  return fingerprint_search(g1, g2, alphabet, max_len, opts);
}

}  // namespace cfgeq
