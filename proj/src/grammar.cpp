#include "cfgeq/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <sstream>

#include "cfgeq/error.hpp"

namespace cfgeq {

std::size_t Production::nonterminal_count() const {
  return static_cast<std::size_t>(
      std::count_if(rhs.begin(), rhs.end(), [](const Symbol& s) { return s.is_nonterminal(); }));
}

Grammar::Grammar(std::vector<std::string> nonterminals, std::vector<std::string> terminals,
                 std::vector<Production> productions)
    : nonterminals_(std::move(nonterminals)),
      terminals_(std::move(terminals)),
      productions_(std::move(productions)) {
  if (nonterminals_.empty()) throw GrammarValidationError("grammar has no nonterminals");
  std::sort(terminals_.begin(), terminals_.end());
  terminals_.erase(std::unique(terminals_.begin(), terminals_.end()), terminals_.end());

  std::set<std::string> nts;
  for (const auto& n : nonterminals_) {
    if (n.empty()) throw GrammarValidationError("empty nonterminal name");
    if (!nts.insert(n).second) throw GrammarValidationError("nonterminal '" + n + "' declared twice");
  }
  for (const auto& t : terminals_) {
    if (t.empty()) throw GrammarValidationError("empty terminal name");
    if (nts.count(t)) throw GrammarValidationError("'" + t + "' is both terminal and nonterminal");
  }

  std::set<std::string> defined;
  std::set<std::pair<std::string, std::vector<Symbol>>> seen;
  for (const auto& p : productions_) {
    if (!nts.count(p.lhs)) throw GrammarValidationError("production for undeclared nonterminal '" + p.lhs + "'");
    for (const auto& s : p.rhs) {
      if (s.is_nonterminal() && !nts.count(s.name))
        throw GrammarValidationError("undefined nonterminal '" + s.name + "'");
      if (s.is_terminal() && !has_terminal(s.name))
        throw GrammarValidationError("undeclared terminal '" + s.name + "'");
    }
    if (!seen.emplace(p.lhs, p.rhs).second)
      throw GrammarValidationError("duplicate production for '" + p.lhs + "'");
    defined.insert(p.lhs);
  }
  for (const auto& n : nonterminals_) {
    if (!defined.count(n)) throw GrammarValidationError("undefined nonterminal '" + n + "' (no production)");
  }
}

bool Grammar::has_nonterminal(std::string_view name) const {
  return std::find(nonterminals_.begin(), nonterminals_.end(), name) != nonterminals_.end();
}

bool Grammar::has_terminal(std::string_view name) const {
  return std::binary_search(terminals_.begin(), terminals_.end(), name);
}

std::vector<const Production*> Grammar::productions_of(std::string_view lhs) const {
  std::vector<const Production*> out;
  for (const auto& p : productions_)
    if (p.lhs == lhs) out.push_back(&p);
  return out;
}

std::string Grammar::to_string() const {
  std::ostringstream os;
  for (const auto& n : nonterminals_) {
    os << n << " ->";
    bool first = true;
    for (const auto* p : productions_of(n)) {
      if (!first) os << " |";
      first = false;
      if (p->is_epsilon()) {
        os << " eps";
      } else {
        for (const auto& s : p->rhs) os << ' ' << s.name;
      }
    }
    os << " ;\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Parser

namespace {

enum class Tok { Ident, Arrow, Bar, Semi, Eps, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_blank();
    const std::size_t l = line_, c = col_;
    if (pos_ >= src_.size()) return {Tok::End, "", l, c};
    const char ch = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(ch))) {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        advance();
      std::string word(src_.substr(start, pos_ - start));
      return {word == "eps" ? Tok::Eps : Tok::Ident, word, l, c};
    }
    if (ch == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
      advance();
      advance();
      return {Tok::Arrow, "->", l, c};
    }
    if (ch == '|') {
      advance();
      return {Tok::Bar, "|", l, c};
    }
    if (ch == ';') {
      advance();
      return {Tok::Semi, ";", l, c};
    }
    // UTF-8 for U+03B5 (Greek small epsilon).
    if (static_cast<unsigned char>(ch) == 0xCE && pos_ + 1 < src_.size() &&
        static_cast<unsigned char>(src_[pos_ + 1]) == 0xB5) {
      pos_ += 2;
      ++col_;
      return {Tok::Eps, "eps", l, c};
    }
    throw GrammarSyntaxError(std::string("unexpected character '") + ch + "'", l, c);
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_blank() {
    while (pos_ < src_.size()) {
      const char ch = src_[pos_];
      if (ch == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(ch))) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

bool is_nonterminal_name(const std::string& s) { return std::isupper(static_cast<unsigned char>(s[0])) != 0; }

}  // namespace

Grammar parse_grammar(std::string_view text) {
  Lexer lex(text);
  std::vector<std::string> nonterminals;
  std::set<std::string> terminals;
  std::vector<Production> productions;
  // First use site of each nonterminal, for "undefined nonterminal" errors.
  std::map<std::string, std::pair<std::size_t, std::size_t>> used_at;

  Token tok = lex.next();
  if (tok.kind == Tok::End) throw GrammarSyntaxError("empty grammar", tok.line, tok.column);

  while (tok.kind != Tok::End) {
    if (tok.kind != Tok::Ident || !is_nonterminal_name(tok.text))
      throw GrammarSyntaxError("expected a nonterminal (uppercase identifier) at start of rule", tok.line,
                               tok.column);
    const std::string lhs = tok.text;
    if (std::find(nonterminals.begin(), nonterminals.end(), lhs) == nonterminals.end())
      nonterminals.push_back(lhs);

    tok = lex.next();
    if (tok.kind != Tok::Arrow) throw GrammarSyntaxError("expected '->'", tok.line, tok.column);

    for (;;) {
      Production p{lhs, {}};
      tok = lex.next();
      if (tok.kind == Tok::Eps) {
        tok = lex.next();
      } else {
        while (tok.kind == Tok::Ident) {
          if (is_nonterminal_name(tok.text)) {
            p.rhs.push_back(Symbol::nonterminal(tok.text));
            used_at.emplace(tok.text, std::make_pair(tok.line, tok.column));
          } else {
            p.rhs.push_back(Symbol::terminal(tok.text));
            terminals.insert(tok.text);
          }
          tok = lex.next();
        }
        if (tok.kind == Tok::Eps)
          throw GrammarSyntaxError("'eps' must stand alone in an alternative", tok.line, tok.column);
        if (p.rhs.empty()) throw GrammarSyntaxError("empty alternative (write 'eps')", tok.line, tok.column);
      }
      productions.push_back(std::move(p));
      if (tok.kind == Tok::Bar) continue;
      if (tok.kind == Tok::Semi) break;
      throw GrammarSyntaxError("expected '|' or ';'", tok.line, tok.column);
    }
    tok = lex.next();
  }

  for (const auto& [name, where] : used_at) {
    if (std::find(nonterminals.begin(), nonterminals.end(), name) == nonterminals.end())
      throw GrammarSyntaxError("undefined nonterminal " + name, where.first, where.second);
  }
  return Grammar(std::move(nonterminals), {terminals.begin(), terminals.end()}, std::move(productions));
}

Grammar load_grammar_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open grammar file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_grammar(ss.str());
  } catch (const GrammarSyntaxError& e) {
    throw GrammarSyntaxError(path + ": " + e.what(), e.line(), e.column());
  }
}

// ---------------------------------------------------------------------------
// Structure

namespace {

bool has_cycle(const std::vector<std::string>& nodes, const std::set<std::pair<std::string, std::string>>& edges) {
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& [a, b] : edges) adj[a].push_back(b);
  std::map<std::string, int> state;  // 0 new, 1 on stack, 2 done
  std::function<bool(const std::string&)> visit = [&](const std::string& v) {
    state[v] = 1;
    for (const auto& w : adj[v]) {
      if (state[w] == 1) return true;
      if (state[w] == 0 && visit(w)) return true;
    }
    state[v] = 2;
    return false;
  };
  for (const auto& n : nodes)
    if (state[n] == 0 && visit(n)) return true;
  return false;
}

}  // namespace

StructureReport analyze_structure(const Grammar& g) {
  StructureReport r;
  for (const auto& p : g.productions()) {
    if (p.is_epsilon()) r.nullable.insert(p.lhs);
    if (p.is_renaming()) {
      r.renaming_edges.emplace(p.lhs, p.rhs.front().name);
      r.has_unit_length_nt_words = true;
      continue;
    }
    r.nbar += p.nonterminal_count();
  }
  r.renaming_cyclic = has_cycle(g.nonterminals(), r.renaming_edges);
  return r;
}

void require_renaming_acyclic(const Grammar& g) {
  if (analyze_structure(g).renaming_cyclic)
    throw RenamingCycleError("grammar has a cycle of renaming productions (A -> B -> ... -> A); "
                             "its ambiguity is infinite");
}

}  // namespace cfgeq
