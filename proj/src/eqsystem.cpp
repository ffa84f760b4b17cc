#include "cfgeq/eqsystem.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "cfgeq/error.hpp"

namespace cfgeq {

std::size_t Monomial::nonterminal_count() const {
  return static_cast<std::size_t>(
      std::count_if(factors.begin(), factors.end(), [](const Symbol& s) { return s.is_nonterminal(); }));
}

std::size_t Polynomial::count(const Monomial& m) const {
  return static_cast<std::size_t>(std::count(terms.begin(), terms.end(), m));
}

bool Polynomial::same_terms(const Polynomial& other) const {
  auto a = terms;
  auto b = other.terms;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

std::size_t EquationSystem::index_of(const std::string& v) const {
  auto it = std::find(variables.begin(), variables.end(), v);
  if (it == variables.end()) throw InvalidArgument("unknown variable '" + v + "'");
  return static_cast<std::size_t>(it - variables.begin());
}

std::string EquationSystem::to_string() const {
  auto var_name = [this](const std::string& v) { return is_shifted(v) ? v + "'" : v; };
  std::ostringstream os;
  for (const auto& v : variables) {
    os << var_name(v) << " =";
    bool first = true;
    auto sep = [&] {
      os << (first ? " " : " + ");
      first = false;
    };
    auto rit = rhs.find(v);
    if (rit != rhs.end()) {
      for (const auto& m : rit->second.terms) {
        sep();
        if (m.is_identity()) {
          os << "I";
          continue;
        }
        for (std::size_t i = 0; i < m.factors.size(); ++i) {
          if (i) os << ' ';
          const auto& s = m.factors[i];
          os << (s.is_nonterminal() ? var_name(s.name) : s.name);
        }
      }
    }
    auto lit = linear_part.find(v);
    if (lit != linear_part.end()) {
      for (const auto& w : lit->second) {
        sep();
        os << '{' << var_name(w) << '}';
      }
    }
    if (first) os << " 0";
    os << '\n';
  }
  return os.str();
}

EquationSystem build_system(const Grammar& g) {
  require_renaming_acyclic(g);
  EquationSystem sys;
  sys.variables = g.nonterminals();
  sys.axiom = g.axiom();
  sys.terminals = g.terminals();
  for (const auto& v : sys.variables) sys.rhs[v];
  for (const auto& p : g.productions()) sys.rhs[p.lhs].terms.push_back(Monomial{p.rhs});
  return sys;
}

std::vector<std::string> linear_topological_order(const EquationSystem& sys) {
  std::vector<std::string> order;
  std::map<std::string, int> state;
  std::function<void(const std::string&)> visit = [&](const std::string& v) {
    int& st = state[v];
    if (st == 2) return;
    if (st == 1) throw RenamingCycleError("renaming cycle through '" + v + "' (infinite ambiguity)");
    st = 1;
    auto it = sys.linear_part.find(v);
    if (it != sys.linear_part.end())
      for (const auto& w : it->second) visit(w);
    state[v] = 2;
    order.push_back(v);
  };
  for (const auto& v : sys.variables) visit(v);
  return order;
}

EquationSystem split_linear(const EquationSystem& sys) {
  EquationSystem out = sys;
  for (auto& [v, poly] : out.rhs) {
    std::vector<Monomial> kept;
    for (auto& m : poly.terms) {
      if (m.is_bare_nonterminal()) {
        out.linear_part[v].push_back(m.factors.front().name);
      } else {
        kept.push_back(std::move(m));
      }
    }
    poly.terms = std::move(kept);
  }
  out.is_linear_split = true;
  linear_topological_order(out);
  return out;
}

namespace {

// All monomials obtained by replacing each occurrence of a to-be-shifted
// variable V by either V' (kept as the symbol) or the identity (dropped).
void expand_monomial(const Monomial& m, const std::set<std::string>& to_shift, std::vector<Monomial>& out) {
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < m.factors.size(); ++i)
    if (m.factors[i].is_nonterminal() && to_shift.count(m.factors[i].name)) positions.push_back(i);
  if (positions.size() > 20) throw Error("epsilon shift: monomial has too many nullable factors to expand");
  const std::size_t combos = std::size_t{1} << positions.size();
  for (std::size_t mask = 0; mask < combos; ++mask) {
    Monomial e;
    std::size_t p = 0;
    for (std::size_t i = 0; i < m.factors.size(); ++i) {
      if (p < positions.size() && positions[p] == i) {
        const bool drop = (mask >> p) & 1U;
        ++p;
        if (drop) continue;
      }
      e.factors.push_back(m.factors[i]);
    }
    out.push_back(std::move(e));
  }
}

}  // namespace

EquationSystem epsilon_shift(const EquationSystem& input) {
  EquationSystem sys = input.is_linear_split ? input : split_linear(input);

  std::set<std::string> to_shift;
  for (const auto& [v, poly] : sys.rhs)
    for (const auto& m : poly.terms)
      if (m.is_identity()) to_shift.insert(v);
  if (to_shift.empty()) {
    sys.is_epsilon_shifted = true;
    return sys;
  }

  EquationSystem out = sys;
  out.linear_part.clear();
  for (const auto& v : sys.variables) {
    std::vector<Monomial> expanded;
    for (const auto& m : sys.rhs[v].terms) expand_monomial(m, to_shift, expanded);
    std::size_t identities = 0;
    auto lit = sys.linear_part.find(v);
    if (lit != sys.linear_part.end()) {
      for (const auto& w : lit->second) {
        out.linear_part[v].push_back(w);
        if (to_shift.count(w)) ++identities;
      }
    }

    std::vector<Monomial> kept;
    for (auto& m : expanded) {
      if (m.is_identity()) {
        ++identities;
      } else if (m.is_bare_nonterminal()) {
        out.linear_part[v].push_back(m.factors.front().name);
      } else {
        kept.push_back(std::move(m));
      }
    }
    const std::size_t expected = to_shift.count(v);
    if (identities != expected) {
      throw NonCancellingConstantError(
          "epsilon shift: equation for '" + v + "' keeps " + std::to_string(identities) +
          " identity term(s) after substituting X = X' + I, expected " + std::to_string(expected) +
          " (nullable through composition is not supported)");
    }
    out.rhs[v].terms = std::move(kept);
  }
  for (auto it = out.linear_part.begin(); it != out.linear_part.end();) {
    it = it->second.empty() ? out.linear_part.erase(it) : std::next(it);
  }
  out.shifted.insert(to_shift.begin(), to_shift.end());
  out.is_epsilon_shifted = true;
  linear_topological_order(out);
  return out;
}

EquationSystem compile(const Grammar& g) { return epsilon_shift(split_linear(build_system(g))); }

ContractionParams contraction_params(const EquationSystem& sys) {
  ContractionParams p;
  for (const auto& [v, poly] : sys.rhs)
    for (const auto& m : poly.terms)
      if (!m.is_bare_nonterminal()) p.nbar += m.nonterminal_count();
  p.delta_max = p.nbar == 0 ? 0.5 : 0.9 / static_cast<double>(p.nbar);
  return p;
}

}  // namespace cfgeq
