#include "cfgeq/distinguish.hpp"

#include <algorithm>
#include <cctype>
#include <atomic>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "cfgeq/error.hpp"

namespace cfgeq {

WordSet::WordSet(std::vector<std::string> words) : words_(std::move(words)) {
  std::sort(words_.begin(), words_.end());
  for (const auto& w : words_)
    if (w.size() != words_.front().size()) throw InvalidArgument("word set mixes lengths: " + to_string());
}

WordSet WordSet::parse(const std::string& csv) {
  std::vector<std::string> words;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }),
               item.end());
    if (item.empty()) throw InvalidArgument("empty word in '" + csv + "'");
    words.push_back(item);
  }
  return WordSet(std::move(words));
}

std::size_t WordSet::length() const { return words_.empty() ? 0 : words_.front().size(); }

std::string WordSet::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (i) out += ',';
    out += words_[i];
  }
  return out;
}

std::vector<std::string> letters_of(const WordSet& u, const WordSet& v) {
  std::set<char> s;
  for (const auto* ws : {&u, &v})
    for (const auto& w : ws->words()) s.insert(w.begin(), w.end());
  std::vector<std::string> out;
  for (char c : s) out.emplace_back(1, c);
  return out;
}

namespace {

void require_same_length(const WordSet& u, const WordSet& v) {
  if (u.size() && v.size() && u.length() != v.length())
    throw InvalidArgument("word sets have different lengths (" + std::to_string(u.length()) + " and " +
                          std::to_string(v.length()) + ")");
}

}  // namespace

Lemma1Result lemma1_substitution(const WordSet& u, const WordSet& v) {
  require_same_length(u, v);
  if (u == v) throw InvalidArgument("lemma1_substitution: the word sets are equal");

  std::set<std::string> suffix_set;
  for (const auto* ws : {&u, &v})
    for (const auto& w : ws->words())
      for (std::size_t i = 0; i < w.size(); ++i) suffix_set.insert(w.substr(i));

  Lemma1Result r;
  r.suffixes.assign(suffix_set.begin(), suffix_set.end());
  std::sort(r.suffixes.begin(), r.suffixes.end(), [](const std::string& a, const std::string& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < r.suffixes.size(); ++i) index[r.suffixes[i]] = i + 1;

  const std::size_t dim = r.suffixes.size() + 1;
  Substitution& sub = r.substitution;
  sub.dim = dim;
  sub.norm_bound = 0.0;
  for (const auto& letter : letters_of(u, v)) {
    Matrix m(dim);
    if (auto it = index.find(letter); it != index.end()) m(it->second, 0) = 1.0;
    for (const auto& s : r.suffixes)
      if (auto it = index.find(letter + s); it != index.end()) m(it->second, index.at(s)) = 1.0;
    sub.norm_bound = std::max(sub.norm_bound, frobenius_norm(m));
    sub.map.emplace(letter, std::move(m));
  }
  r.vector_index = 0;
  return r;
}

std::vector<double> apply_word_sum(const WordSet& w, const Substitution& mu, std::size_t index) {
  const std::size_t dim = mu.dim;
  std::vector<double> total(dim, 0.0), vec(dim), next(dim);
  for (const auto& word : w.words()) {
    std::fill(vec.begin(), vec.end(), 0.0);
    vec.at(index) = 1.0;
    for (auto it = word.rbegin(); it != word.rend(); ++it) {
      const Matrix& m = mu.at(std::string(1, *it));
      for (std::size_t r = 0; r < dim; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < dim; ++c) s += m(r, c) * vec[c];
        next[r] = s;
      }
      std::swap(vec, next);
    }
    for (std::size_t r = 0; r < dim; ++r) total[r] += vec[r];
  }
  return total;
}

Matrix word_sum(const WordSet& w, const Substitution& mu) {
  Matrix total(mu.dim), tmp(mu.dim);
  for (const auto& word : w.words()) {
    Matrix acc = Matrix::identity(mu.dim);
    for (char c : word) {
      mat_mul_into(acc, mu.at(std::string(1, c)), tmp);
      std::swap(acc, tmp);
    }
    total += acc;
  }
  return total;
}

std::string CondPMonomial::to_string(const std::vector<std::string>& alphabet) const {
  std::string out;
  for (std::size_t i = 0; i < u_exponents.size(); ++i)
    for (std::size_t k = 0; k < u_exponents[i]; ++k) out += "u_" + alphabet[i] + " ";
  if (v_index) out += "v_" + alphabet[*v_index];
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out.empty() ? "1" : out;
}

std::vector<CondPMonomial> condp_monomials(const WordSet& w, const std::vector<std::string>& alphabet) {
  std::map<char, std::size_t> idx;
  for (std::size_t i = 0; i < alphabet.size(); ++i) {
    if (alphabet[i].size() != 1) throw InvalidArgument("condition (P) needs single-character letters");
    idx[alphabet[i][0]] = i;
  }
  std::vector<CondPMonomial> out;
  for (const auto& word : w.words()) {
    std::vector<std::size_t> prefix(alphabet.size(), 0);
    for (char c : word) {
      auto it = idx.find(c);
      if (it == idx.end()) throw InvalidArgument(std::string("letter '") + c + "' not in alphabet");
      out.push_back({prefix, it->second});
      ++prefix[it->second];
    }
    out.push_back({prefix, std::nullopt});
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool condition_p(const WordSet& u, const WordSet& v, CondPMode mode) {
  require_same_length(u, v);
  const auto alphabet = letters_of(u, v);
  auto pu = condp_monomials(u, alphabet);
  auto pv = condp_monomials(v, alphabet);
  if (mode == CondPMode::Set) {
    pu.erase(std::unique(pu.begin(), pu.end()), pu.end());
    pv.erase(std::unique(pv.begin(), pv.end()), pv.end());
  }
  return pu != pv;
}

NumericCheck numeric_identity_check(const WordSet& u, const WordSet& v, std::size_t trials, std::uint64_t seed,
                                    std::size_t dim, double separate_tol) {
  require_same_length(u, v);
  const auto letters = letters_of(u, v);
  NumericCheck out;
  for (std::size_t t = 0; t < trials; ++t) {
    Substitution mu = random_substitution(letters, dim, 1.0, derive_seed(seed, dim, t));
    const Matrix su = word_sum(u, mu), sv = word_sum(v, mu);
    const double scale = std::max(max_abs(su), max_abs(sv));
    const double rel = scale > 0.0 ? max_abs_diff(su, sv) / scale : 0.0;
    out.trials_run = t + 1;
    out.max_relative_diff = std::max(out.max_relative_diff, rel);
    if (rel > separate_tol) {
      out.always_equal = false;
      out.separating = std::move(mu);
      break;
    }
  }
  return out;
}

nlohmann::json CensusEntry::to_json() const {
  return {{"U", u.words()},
          {"V", v.words()},
          {"condition_p", condition_p},
          {"trials", trials},
          {"verdict", verdict()},
          {"max_relative_diff", max_relative_diff}};
}

std::vector<CensusEntry> CensusReport::indistinguishable() const {
  std::vector<CensusEntry> out;
  std::copy_if(entries.begin(), entries.end(), std::back_inserter(out), [](const auto& e) { return e.always_equal; });
  return out;
}

namespace {

struct SetRecord {
  std::uint64_t hash;
  std::uint32_t idx[3];
  std::uint8_t k;
};

void validate(const CensusParams& p) {
  std::set<char> letters(p.alphabet.begin(), p.alphabet.end());
  if (p.alphabet.empty() || letters.size() != p.alphabet.size())
    throw InvalidArgument("census: alphabet must be distinct letters");
  if (p.alphabet.size() > 3) throw InvalidArgument("census: alphabet larger than 3 letters");
  if (p.max_words > 3) throw InvalidArgument("census: more than 3 words per set");
  if (p.max_len > 5) throw InvalidArgument("census: word length above 5");
  if (p.min_words < 1 || p.min_words > p.max_words) throw InvalidArgument("census: bad word-count range");
  if (p.min_len < 1 || p.min_len > p.max_len) throw InvalidArgument("census: bad length range");
  if (p.trials < 1) throw InvalidArgument("census: trials must be positive");
}

std::vector<std::string> all_words(const std::string& alphabet, std::size_t len) {
  std::vector<std::string> out{""};
  for (std::size_t i = 0; i < len; ++i) {
    std::vector<std::string> next;
    for (const auto& w : out)
      for (char c : alphabet) next.push_back(w + c);
    out = std::move(next);
  }
  return out;
}

WordSet set_of(const std::vector<std::string>& words, const SetRecord& r) {
  std::vector<std::string> ws;
  for (std::uint8_t i = 0; i < r.k; ++i) ws.push_back(words[r.idx[i]]);
  return WordSet(std::move(ws));
}

std::pair<WordSet, WordSet> ordered(WordSet a, WordSet b) {
  if (b < a) std::swap(a, b);
  return {std::move(a), std::move(b)};
}

std::pair<WordSet, WordSet> permutation_canonical(const WordSet& u, const WordSet& v, const std::string& alphabet) {
  std::string perm = alphabet;
  std::sort(perm.begin(), perm.end());
  const std::string base = perm;
  std::optional<std::pair<WordSet, WordSet>> best;
  do {
    auto map_set = [&](const WordSet& s) {
      std::vector<std::string> ws;
      for (auto w : s.words()) {
        for (auto& c : w) c = perm[base.find(c)];
        ws.push_back(w);
      }
      return WordSet(std::move(ws));
    };
    auto cand = ordered(map_set(u), map_set(v));
    if (!best || cand < *best) best = std::move(cand);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return *best;
}

}  // namespace

CensusReport census_sweep(const CensusParams& params) {
  validate(params);
  std::string alphabet = params.alphabet;
  std::sort(alphabet.begin(), alphabet.end());
  std::vector<std::string> letter_names;
  for (char c : alphabet) letter_names.emplace_back(1, c);

  CensusReport report;
  std::vector<std::pair<WordSet, WordSet>> candidates;
  std::set<std::pair<WordSet, WordSet>> seen_classes;

  for (std::size_t len = params.min_len; len <= params.max_len; ++len) {
    const auto words = all_words(alphabet, len);
    // Additive hash of the monomial multiset; equal signatures give equal
    // hashes, and every hash collision is re-checked exactly below.
    std::vector<std::uint64_t> word_hash(words.size(), 0);
    for (std::size_t i = 0; i < words.size(); ++i)
      for (const auto& m : condp_monomials(WordSet({words[i]}), letter_names)) {
        std::uint64_t code = m.v_index ? *m.v_index : alphabet.size();
        for (auto e : m.u_exponents) code = code * (len + 1) + e;
        word_hash[i] += splitmix64(code ^ 0xc0de5eedULL);
      }

    std::vector<SetRecord> sets;
    const auto n = static_cast<std::uint32_t>(words.size());
    for (std::size_t k = params.min_words; k <= params.max_words; ++k) {
      if (k == 1) {
        for (std::uint32_t i = 0; i < n; ++i) sets.push_back({word_hash[i], {i, 0, 0}, 1});
      } else if (k == 2) {
        for (std::uint32_t i = 0; i < n; ++i)
          for (std::uint32_t j = i + 1; j < n; ++j) sets.push_back({word_hash[i] + word_hash[j], {i, j, 0}, 2});
      } else {
        for (std::uint32_t i = 0; i < n; ++i)
          for (std::uint32_t j = i + 1; j < n; ++j)
            for (std::uint32_t l = j + 1; l < n; ++l)
              sets.push_back({word_hash[i] + word_hash[j] + word_hash[l], {i, j, l}, 3});
      }
    }
    report.sets_enumerated += sets.size();
    std::sort(sets.begin(), sets.end(), [](const SetRecord& a, const SetRecord& b) {
      if (a.hash != b.hash) return a.hash < b.hash;
      if (a.k != b.k) return a.k < b.k;
      return std::lexicographical_compare(a.idx, a.idx + a.k, b.idx, b.idx + b.k);
    });

    for (std::size_t lo = 0; lo < sets.size();) {
      std::size_t hi = lo + 1;
      while (hi < sets.size() && sets[hi].hash == sets[lo].hash) ++hi;
      for (std::size_t a = lo; a < hi; ++a)
        for (std::size_t b = a + 1; b < hi; ++b) {
          const SetRecord &ra = sets[a], &rb = sets[b];
          if (ra.k != rb.k) continue;
          bool disjoint = true;
          for (std::uint8_t i = 0; i < ra.k; ++i)
            for (std::uint8_t j = 0; j < rb.k; ++j)
              if (ra.idx[i] == rb.idx[j]) disjoint = false;
          if (!disjoint) continue;
          WordSet u = set_of(words, ra), v = set_of(words, rb);
          if (condition_p(u, v, CondPMode::Multiset)) continue;  // hash collision
          auto pair = ordered(std::move(u), std::move(v));
          if (params.dedup_permutations) {
            // Report the least member of the class, whichever member came first.
            pair = permutation_canonical(pair.first, pair.second, alphabet);
            if (!seen_classes.insert(pair).second) continue;
          }
          candidates.push_back(std::move(pair));
        }
      lo = hi;
    }
  }

  std::sort(candidates.begin(), candidates.end(), [](const auto& x, const auto& y) {
    if (x.first.length() != y.first.length()) return x.first.length() < y.first.length();
    return x < y;
  });
  report.candidates = candidates.size();
  report.entries.resize(candidates.size());

  std::size_t threads = params.threads ? params.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(candidates.size(), 1));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < candidates.size();) {
      const auto& [u, v] = candidates[i];
      NumericCheck nc = numeric_identity_check(u, v, params.trials, derive_seed(params.seed, i));
      CensusEntry& e = report.entries[i];
      e.u = u;
      e.v = v;
      e.condition_p = false;
      e.trials = nc.trials_run;
      e.always_equal = nc.always_equal;
      e.max_relative_diff = nc.max_relative_diff;
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return report;
}

}  // namespace cfgeq
