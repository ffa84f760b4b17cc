// cfgeq: compare context-free grammars through their power series.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cfgeq/distinguish.hpp"
#include "cfgeq/engine.hpp"
#include "cfgeq/eqsystem.hpp"
#include "cfgeq/error.hpp"
#include "cfgeq/grammar.hpp"
#include "cfgeq/oracle.hpp"
#include "cfgeq/solver.hpp"

namespace {

constexpr int kExitError = 4;
constexpr int kExitUsage = 64;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A path, or grammar text given inline (anything containing "->").
cfgeq::Grammar read_grammar(const std::string& arg) {
  if (arg.find("->") != std::string::npos && !std::filesystem::exists(arg)) return cfgeq::parse_grammar(arg);
  if (!std::filesystem::exists(arg)) throw UsageError("no such grammar file: " + arg);
  return cfgeq::load_grammar_file(arg);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << "\n"; }

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

// ---------------------------------------------------------------- compare

struct CompareArgs {
  std::string left, right;
  std::vector<std::size_t> dims{2, 3};
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  double tol_equal = 1e-10, tol_diff = 1e-7;
  std::size_t oracle_len = 8;
  std::optional<double> delta;
  bool no_explore = false;
  std::size_t threads = 0;
  bool json = false, no_timestamp = false;
  std::string out;
};

int run_compare(const CompareArgs& a) {
  cfgeq::CompareConfig cfg;
  cfg.dims = a.dims;
  cfg.trials_per_dim = a.trials;
  cfg.seed = a.seed;
  cfg.equal_tol = a.tol_equal;
  cfg.different_tol = a.tol_diff;
  cfg.oracle_len = a.oracle_len;
  cfg.delta_override = a.delta;
  cfg.explore_delta = !a.no_explore;
  cfg.threads = a.threads;
  try {
    cfg.validate();
  } catch (const cfgeq::InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const cfgeq::Grammar g1 = read_grammar(a.left), g2 = read_grammar(a.right);
  const cfgeq::Verdict v = cfgeq::compare(g1, g2, cfg);

  nlohmann::json doc = v.to_json(!a.no_timestamp);
  if (!a.no_timestamp) doc["timestamp"] = utc_timestamp();
  if (!a.out.empty()) {
    std::ofstream f(a.out);
    if (!f) throw UsageError("cannot write " + a.out);
    f << doc.dump(2) << "\n";
  }
  if (a.json) {
    print_json(doc);
  } else {
    std::cout << "outcome: " << cfgeq::to_string(v.outcome) << "\n";
    std::cout << "reason: " << v.reason << "\n";
    std::cout << "trials: " << v.trials_run() << " (certified delta " << fmt(v.shared_delta) << ")\n";
    if (v.witness_trial) {
      const auto& t = v.trials[*v.witness_trial];
      std::cout << "witness trial: dim " << t.dim << ", seed " << t.seed << ", delta " << fmt(t.delta) << ", diff "
                << fmt(t.diff) << "\n";
    }
    if (v.oracle) {
      std::cout << "oracle (" << cfgeq::to_string(v.oracle->method) << ", length <= " << v.oracle->max_len << "): ";
      if (v.oracle->witness)
        std::cout << "word " << v.oracle->witness->word << " coefficients " << v.oracle->witness->coeff_left << " vs "
                  << v.oracle->witness->coeff_right << "\n";
      else
        std::cout << "no distinguishing word\n";
    }
    if (!a.no_timestamp) std::cout << "wall time: " << fmt(v.wall_ms) << " ms\n";
  }
  return cfgeq::exit_code(v.outcome);
}

// ---------------------------------------------------------------- solve

struct SolveArgs {
  std::string grammar;
  std::size_t dim = 2;
  std::optional<double> delta, scalar;
  std::uint64_t seed = 0;
  double tol = 1e-13;
  std::size_t max_iter = 100000;
  bool json = false;
};

int run_solve(const SolveArgs& a) {
  const cfgeq::Grammar g = read_grammar(a.grammar);
  const cfgeq::EquationSystem sys = cfgeq::compile(g);
  cfgeq::Substitution sub;
  if (a.scalar) {
    sub.dim = 1;
    sub.norm_bound = std::abs(*a.scalar);
    for (const auto& t : g.terminals()) sub.map.emplace(t, cfgeq::Matrix(1, {*a.scalar}));
  } else {
    if (a.dim < 1) throw UsageError("--dim must be positive");
    const double delta = a.delta.value_or(cfgeq::contraction_params(sys).delta_max);
    if (!(delta > 0.0)) throw UsageError("--delta must be positive");
    sub = cfgeq::random_substitution(g.terminals(), a.dim, delta, a.seed);
  }
  cfgeq::SolveOptions so;
  so.tol = a.tol;
  so.max_iter = a.max_iter;
  const cfgeq::Solution s = cfgeq::iterate(sys, sub, so);
  if (a.json) {
    nlohmann::json doc = cfgeq::to_json(s);
    doc["system"] = sys.to_string();
    doc["substitution"] = cfgeq::to_json(sub);
    print_json(doc);
  } else {
    std::cout << sys.to_string();
    std::cout << "status: " << cfgeq::to_string(s.status) << " after " << s.iterations << " iterations, residual "
              << fmt(s.residual) << "\n";
    for (const auto& v : sys.variables) {
      const auto& m = s.assignment.at(v);
      std::cout << v << " =";
      for (double x : m.entries()) std::cout << " " << std::setprecision(17) << x;
      std::cout << "\n";
    }
  }
  return s.status == cfgeq::SolveStatus::Converged ? 0 : 2;
}

// ---------------------------------------------------------------- enumerate

struct EnumerateArgs {
  std::string grammar;
  std::size_t max_len = 5;
  std::optional<std::size_t> iter_cap;
  std::string word;
  bool json = false;
};

int run_enumerate(const EnumerateArgs& a) {
  const cfgeq::Grammar g = read_grammar(a.grammar);
  cfgeq::require_renaming_acyclic(g);
  if (!a.word.empty()) {
    const auto c = cfgeq::membership(g, a.word);
    if (a.json)
      print_json({{"word", a.word}, {"coefficient", c}});
    else
      std::cout << a.word << "\t" << c << "\n";
    return 0;
  }
  cfgeq::OracleOptions opts;
  opts.iter_cap = a.iter_cap;
  if (a.max_len > opts.max_len_guard) throw UsageError("--max-len above the enumeration guard of 12");
  const cfgeq::SeriesSlice s = cfgeq::series_slice(g, a.max_len, opts);
  if (!s.stabilized)
    throw cfgeq::OracleUnstabilized("series does not stabilize within " + std::to_string(s.iterations) +
                                    " iterations (unbounded ambiguity)");
  if (a.json) {
    nlohmann::json words = nlohmann::json::array();
    for (const auto& [w, c] : s.sorted()) words.push_back({{"word", s.render(w)}, {"coefficient", c}});
    print_json({{"max_len", a.max_len}, {"stabilized", s.stabilized}, {"iterations", s.iterations}, {"words", words}});
  } else {
    for (const auto& [w, c] : s.sorted()) std::cout << s.render(w) << "\t" << c << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- distinguish

struct DistinguishArgs {
  std::string left, right, method = "condp", mode = "multiset";
  std::size_t dim = 2, trials = 1000;
  std::uint64_t seed = 0;
  bool json = false;
};

std::string vec_str(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + fmt(v[i]);
  return out + "]";
}

int run_distinguish(const DistinguishArgs& a) {
  cfgeq::WordSet u, v;
  try {
    u = cfgeq::WordSet::parse(a.left);
    v = cfgeq::WordSet::parse(a.right);
  } catch (const cfgeq::InvalidArgument& e) {
    throw UsageError(e.what());
  }
  if (a.method == "condp") {
    if (a.mode != "set" && a.mode != "multiset") throw UsageError("--mode must be set or multiset");
    const bool p = cfgeq::condition_p(u, v, a.mode == "set" ? cfgeq::CondPMode::Set : cfgeq::CondPMode::Multiset);
    if (a.json)
      print_json({{"method", "condp"}, {"mode", a.mode}, {"U", u.words()}, {"V", v.words()}, {"condition_p", p}});
    else
      std::cout << "condition P: " << (p ? "satisfied" : "not satisfied") << "\n";
    return 0;
  }
  if (a.method == "lemma1") {
    const auto r = cfgeq::lemma1_substitution(u, v);
    const auto eu = cfgeq::apply_word_sum(u, r.substitution, r.vector_index);
    const auto ev = cfgeq::apply_word_sum(v, r.substitution, r.vector_index);
    double gap = 0.0;
    for (std::size_t i = 0; i < eu.size(); ++i) gap = std::max(gap, std::abs(eu[i] - ev[i]));
    if (a.json) {
      print_json({{"method", "lemma1"},
                  {"dim", r.substitution.dim},
                  {"suffixes", r.suffixes},
                  {"U_e0", eu},
                  {"V_e0", ev},
                  {"gap", gap},
                  {"substitution", cfgeq::to_json(r.substitution)}});
    } else {
      std::cout << "dimension: " << r.substitution.dim << "\n";
      std::cout << "U(mu)e0 = " << vec_str(eu) << "\n";
      std::cout << "V(mu)e0 = " << vec_str(ev) << "\n";
      std::cout << "gap: " << gap << "\n";
    }
    return 0;
  }
  if (a.method == "numeric") {
    const auto r = cfgeq::numeric_identity_check(u, v, a.trials, a.seed, a.dim);
    if (a.json) {
      print_json({{"method", "numeric"},
                  {"dim", a.dim},
                  {"trials_run", r.trials_run},
                  {"verdict", r.always_equal ? "AlwaysEqual" : "DistinguishedBy"},
                  {"max_relative_diff", r.max_relative_diff},
                  {"substitution", r.separating ? cfgeq::to_json(*r.separating) : nlohmann::json(nullptr)}});
    } else if (r.always_equal) {
      std::cout << "AlwaysEqual over " << r.trials_run << " trials (max relative diff " << fmt(r.max_relative_diff)
                << ")\n";
    } else {
      std::cout << "DistinguishedBy trial " << r.trials_run - 1 << " (relative diff " << fmt(r.max_relative_diff)
                << ")\n";
    }
    return 0;
  }
  throw UsageError("--method must be condp, lemma1 or numeric");
}

// ---------------------------------------------------------------- census

struct CensusArgs {
  cfgeq::CensusParams p;
  std::optional<std::size_t> words, len;
  bool all = false, json = false;
};

int run_census(CensusArgs a) {
  if (a.words) a.p.min_words = a.p.max_words = *a.words;
  if (a.len) a.p.min_len = a.p.max_len = *a.len;
  cfgeq::CensusReport r;
  try {
    r = cfgeq::census_sweep(a.p);
  } catch (const cfgeq::InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const auto shown = a.all ? r.entries : r.indistinguishable();
  if (a.json) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : shown) entries.push_back(e.to_json());
    print_json({{"alphabet", a.p.alphabet},
                {"words", {a.p.min_words, a.p.max_words}},
                {"length", {a.p.min_len, a.p.max_len}},
                {"trials", a.p.trials},
                {"seed", a.p.seed},
                {"sets_enumerated", r.sets_enumerated},
                {"candidates", r.candidates},
                {"entries", entries}});
  } else {
    for (const auto& e : shown) std::cout << e.to_json().dump() << "\n";
    std::cerr << r.sets_enumerated << " sets, " << r.candidates << " candidate pairs failing condition (P), "
              << r.indistinguishable().size() << " not separated by 2x2 matrices\n";
  }
  return 0;
}

// ---------------------------------------------------------------- classify

int run_classify(const std::string& path, bool json) {
  const cfgeq::Grammar g = read_grammar(path);
  const auto rep = cfgeq::analyze_structure(g);
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [x, y] : rep.renaming_edges) edges.push_back({x, y});

  std::string cls = "unknown";
  std::optional<std::string> system_text, system_error;
  std::optional<cfgeq::ContractionParams> cp;
  if (!rep.renaming_cyclic) {
    const auto probe = cfgeq::scalar_class_probe(g, cfgeq::default_probe_mu(g));
    cls = std::holds_alternative<cfgeq::ProbeConverged>(probe) ? "first" : "second";
    try {
      const auto sys = cfgeq::compile(g);
      system_text = sys.to_string();
      cp = cfgeq::contraction_params(sys);
    } catch (const cfgeq::Error& e) {
      system_error = e.what();
    }
  }
  if (json) {
    print_json({{"axiom", g.axiom()},
                {"nonterminals", g.nonterminals().size()},
                {"terminals", g.terminals()},
                {"productions", g.productions().size()},
                {"nullable", rep.nullable},
                {"renaming_edges", edges},
                {"renaming_cyclic", rep.renaming_cyclic},
                {"nbar", rep.nbar},
                {"has_unit_length_nt_words", rep.has_unit_length_nt_words},
                {"class", cls},
                {"system", system_text ? nlohmann::json(*system_text) : nlohmann::json(nullptr)},
                {"system_error", system_error ? nlohmann::json(*system_error) : nlohmann::json(nullptr)},
                {"delta_max", cp ? nlohmann::json(cp->delta_max) : nlohmann::json(nullptr)}});
  } else {
    std::cout << "nonterminals: " << g.nonterminals().size() << ", terminals: " << g.terminals().size()
              << ", productions: " << g.productions().size() << "\n";
    std::cout << "nullable:";
    for (const auto& n : rep.nullable) std::cout << " " << n;
    std::cout << "\nrenaming edges:";
    for (const auto& [x, y] : rep.renaming_edges) std::cout << " " << x << "->" << y;
    std::cout << "\nrenaming cyclic: " << (rep.renaming_cyclic ? "yes" : "no") << "\n";
    std::cout << "nbar: " << rep.nbar << "\n";
    std::cout << "class: " << cls << "\n";
    if (system_text) std::cout << "system (split and shifted):\n" << *system_text;
    if (cp) std::cout << "delta_max: " << cp->delta_max << "\n";
    if (system_error) std::cout << "system: " << *system_error << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- replay

int run_replay(const std::string& verdict_path, const std::string& left, const std::string& right, bool json) {
  std::ifstream f(verdict_path);
  if (!f) throw UsageError("cannot read " + verdict_path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw cfgeq::ReplayMismatch(std::string("verdict is not JSON: ") + e.what());
  }
  const auto r = cfgeq::replay(doc, read_grammar(left), read_grammar(right));
  if (json) {
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& t : r.trials) trials.push_back(t.to_json());
    print_json({{"identical", r.identical}, {"trials", trials}});
  } else {
    for (const auto& t : r.trials)
      std::cout << "dim " << t.dim << " trial " << t.trial << " diff " << std::setprecision(17) << t.diff << "\n";
    std::cout << "replay: " << (r.identical ? "identical" : "MISMATCH") << "\n";
  }
  if (!r.identical) throw cfgeq::ReplayMismatch("replayed diffs differ from the recorded ones");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compare context-free grammars by their formal power series"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  CompareArgs ca;
  auto* compare = app.add_subcommand("compare", "Compare two grammars");
  compare->add_option("left", ca.left, "First grammar (file or inline text)")->required();
  compare->add_option("right", ca.right, "Second grammar (file or inline text)")->required();
  compare->add_option("--dims", ca.dims, "Matrix dimensions")->delimiter(',')->capture_default_str();
  compare->add_option("--trials", ca.trials, "Trials per dimension")->capture_default_str();
  compare->add_option("--seed", ca.seed, "Seed")->capture_default_str();
  compare->add_option("--tol-equal", ca.tol_equal, "Equal tolerance")->capture_default_str();
  compare->add_option("--tol-diff", ca.tol_diff, "Different tolerance")->capture_default_str();
  compare->add_option("--oracle-len", ca.oracle_len, "Oracle word length")->capture_default_str();
  compare->add_option("--delta", ca.delta, "Fixed Frobenius envelope for every matrix");
  compare->add_flag("--no-explore", ca.no_explore, "Use only the guaranteed contraction bound");
  compare->add_option("--threads", ca.threads, "Worker threads (0: all cores)");
  compare->add_option("--out", ca.out, "Also write the JSON verdict to this file");
  compare->add_flag("--json", ca.json, "Emit the JSON verdict");
  compare->add_flag("--no-timestamp", ca.no_timestamp, "Omit timestamp and wall time");

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Solve a grammar's matrix system for one substitution");
  solve->add_option("grammar", sa.grammar)->required();
  solve->add_option("--dim", sa.dim)->capture_default_str();
  solve->add_option("--delta", sa.delta, "Frobenius envelope (default: contraction bound)");
  solve->add_option("--scalar", sa.scalar, "Substitute this scalar for every terminal");
  solve->add_option("--seed", sa.seed)->capture_default_str();
  solve->add_option("--tol", sa.tol)->capture_default_str();
  solve->add_option("--max-iter", sa.max_iter)->capture_default_str();
  solve->add_flag("--json", sa.json);

  EnumerateArgs ea;
  auto* enumerate = app.add_subcommand("enumerate", "Exact coefficients of all words up to a length");
  enumerate->add_option("grammar", ea.grammar)->required();
  enumerate->add_option("--max-len", ea.max_len)->capture_default_str();
  enumerate->add_option("--iter-cap", ea.iter_cap);
  enumerate->add_option("--word", ea.word, "Only report the coefficient of this word");
  enumerate->add_flag("--json", ea.json);

  DistinguishArgs da;
  auto* distinguish = app.add_subcommand("distinguish", "Compare two finite word sets");
  distinguish->add_option("--left", da.left, "Comma-separated words")->required();
  distinguish->add_option("--right", da.right, "Comma-separated words")->required();
  distinguish->add_option("--method", da.method, "condp | lemma1 | numeric")->capture_default_str();
  distinguish->add_option("--mode", da.mode, "set | multiset (condp)")->capture_default_str();
  distinguish->add_option("--dim", da.dim, "Matrix dimension (numeric)")->capture_default_str();
  distinguish->add_option("--trials", da.trials)->capture_default_str();
  distinguish->add_option("--seed", da.seed)->capture_default_str();
  distinguish->add_flag("--json", da.json);

  CensusArgs cna;
  auto* census = app.add_subcommand("census", "Search small word-set pairs that 2x2 matrices cannot separate");
  census->add_option("--alphabet", cna.p.alphabet)->capture_default_str();
  census->add_option("--words", cna.words, "Exact number of words per set");
  census->add_option("--min-words", cna.p.min_words)->capture_default_str();
  census->add_option("--max-words", cna.p.max_words)->capture_default_str();
  census->add_option("--len", cna.len, "Exact word length");
  census->add_option("--min-len", cna.p.min_len)->capture_default_str();
  census->add_option("--max-len", cna.p.max_len)->capture_default_str();
  census->add_option("--trials", cna.p.trials)->capture_default_str();
  census->add_option("--seed", cna.p.seed)->capture_default_str();
  census->add_option("--threads", cna.p.threads);
  census->add_flag("--dedup", cna.p.dedup_permutations, "One pair per letter permutation class");
  census->add_flag("--all", cna.all, "Also print candidates that 2x2 matrices separate");
  census->add_flag("--json", cna.json);

  std::string classify_path;
  bool classify_json = false;
  auto* classify = app.add_subcommand("classify", "Structure report and scalar class probe");
  classify->add_option("grammar", classify_path)->required();
  classify->add_flag("--json", classify_json);

  std::string replay_verdict, replay_left, replay_right;
  bool replay_json = false;
  auto* replay = app.add_subcommand("replay", "Re-run the trials of a JSON verdict");
  replay->add_option("verdict", replay_verdict)->required();
  replay->add_option("left", replay_left)->required();
  replay->add_option("right", replay_right)->required();
  replay->add_flag("--json", replay_json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (*compare) return run_compare(ca);
    if (*solve) return run_solve(sa);
    if (*enumerate) return run_enumerate(ea);
    if (*distinguish) return run_distinguish(da);
    if (*census) return run_census(cna);
    if (*classify) return run_classify(classify_path, classify_json);
    if (*replay) return run_replay(replay_verdict, replay_left, replay_right, replay_json);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const cfgeq::GrammarSyntaxError& e) {
    std::cerr << "syntax error: " << e.what() << "\n";
    return kExitError;
  } catch (const cfgeq::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitUsage;
}
