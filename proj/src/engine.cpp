#include "cfgeq/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>

#include "cfgeq/eqsystem.hpp"
#include "cfgeq/error.hpp"

namespace cfgeq {

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::ProbablyEquivalent:
      return "ProbablyEquivalent";
    case Outcome::Different:
      return "Different";
    case Outcome::Inconclusive:
      return "Inconclusive";
    case Outcome::ClassMismatch:
      return "ClassMismatch";
  }
  return "?";
}

int exit_code(Outcome o) {
  switch (o) {
    case Outcome::ProbablyEquivalent:
      return 0;
    case Outcome::Different:
      return 1;
    case Outcome::Inconclusive:
      return 2;
    case Outcome::ClassMismatch:
      return 3;
  }
  return 4;
}

void CompareConfig::validate() const {
  if (dims.empty()) throw InvalidArgument("dims must not be empty");
  for (auto d : dims)
    if (d < 1 || d > 64) throw InvalidArgument("matrix dimension must be in 1..64");
  if (trials_per_dim < 1) throw InvalidArgument("trials must be at least 1");
  if (!(equal_tol > 0.0) || !(equal_tol < different_tol))
    throw InvalidArgument("need 0 < equal tolerance < different tolerance");
  if (delta_override && !(*delta_override > 0.0 && std::isfinite(*delta_override)))
    throw InvalidArgument("delta must be positive");
  if (!(explore_cap > 0.0)) throw InvalidArgument("explore cap must be positive");
}

nlohmann::json CompareConfig::to_json() const {
  return {{"dims", dims},
          {"trials_per_dim", trials_per_dim},
          {"seed", seed},
          {"equal_tol", equal_tol},
          {"different_tol", different_tol},
          {"oracle_len", oracle_len},
          {"delta_override", delta_override ? nlohmann::json(*delta_override) : nlohmann::json(nullptr)},
          {"explore_delta", explore_delta},
          {"explore_cap", explore_cap}};
}

nlohmann::json TrialRecord::to_json() const {
  return {{"dim", dim},
          {"trial", trial},
          {"seed", seed},
          {"delta", delta},
          {"diff", diff},
          {"status_left", cfgeq::to_string(status_left)},
          {"status_right", cfgeq::to_string(status_right)},
          {"iterations_left", iterations_left},
          {"iterations_right", iterations_right}};
}

std::string grammar_hash(const Grammar& g) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : g.to_string()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double normalized_diff(const Matrix& a, const Matrix& b) {
  const double scale = std::max({1.0, max_abs(a), max_abs(b)});
  return max_abs_diff(a, b) / scale;
}

namespace {

constexpr double kExploreContraction = 0.9;
constexpr std::size_t kExploreMaxIter = 5000;

TrialRecord solve_pair(const EquationSystem& s1, const EquationSystem& s2, const Substitution& sub,
                       const SolveOptions& so, std::size_t trial) {
  TrialRecord r;
  r.dim = sub.dim;
  r.trial = trial;
  r.seed = sub.seed;
  r.delta = sub.norm_bound;
  const Solution a = iterate(s1, sub, so);
  const Solution b = iterate(s2, sub, so);
  r.status_left = a.status;
  r.status_right = b.status;
  r.iterations_left = a.iterations;
  r.iterations_right = b.iterations;
  const Matrix& x = a.assignment.at(s1.axiom);
  const Matrix& y = b.assignment.at(s2.axiom);
  r.diff = x.all_finite() && y.all_finite() ? normalized_diff(x, y) : std::numeric_limits<double>::infinity();
  return r;
}

// Descending envelopes above delta_max; the caller appends delta_max itself.
std::vector<double> exploration_ladder(double cap, double delta_max) {
  std::vector<double> out;
  for (double d = cap; d > delta_max * (1.0 + 1e-9); d /= std::sqrt(2.0)) out.push_back(d);
  return out;
}

TrialRecord planned_trial(const EquationSystem& s1, const EquationSystem& s2, const std::vector<std::string>& alphabet,
                          std::size_t dim, std::size_t trial, std::uint64_t seed, const CompareConfig& cfg,
                          double delta_max) {
  if (cfg.delta_override) return run_trial(s1, s2, alphabet, dim, trial, seed, *cfg.delta_override);
  if (cfg.explore_delta) {
    SolveOptions so;
    so.max_iter = kExploreMaxIter;
    so.stall_ratio = kExploreContraction;
    for (double d : exploration_ladder(cfg.explore_cap, delta_max)) {
      const Substitution sub = random_substitution(alphabet, dim, d, seed);
      const Solution a = iterate(s1, sub, so);
      if (a.status != SolveStatus::Converged || a.contraction_estimate > kExploreContraction) continue;
      TrialRecord r = solve_pair(s1, s2, sub, so, trial);
      if (r.converged()) return r;
    }
  }
  return run_trial(s1, s2, alphabet, dim, trial, seed, delta_max);
}

GrammarSummary summarize(const Grammar& g) {
  GrammarSummary s;
  s.hash = grammar_hash(g);
  s.nonterminals = g.nonterminals().size();
  s.productions = g.productions().size();
  const ProbeResult p = scalar_class_probe(g, default_probe_mu(g));
  if (const auto* c = std::get_if<ProbeConverged>(&p)) {
    s.first_class = true;
    s.probe_value = c->values.at(g.axiom());
  }
  return s;
}

EquationSystem compile_with_context(const Grammar& g, const char* side) {
  try {
    return compile(g);
  } catch (const NonCancellingConstantError& e) {
    throw NonCancellingConstantError(std::string(side) + " grammar: " + e.what());
  } catch (const RenamingCycleError& e) {
    throw RenamingCycleError(std::string(side) + " grammar: " + e.what());
  }
}

nlohmann::json summary_json(const GrammarSummary& s) {
  return {{"hash", s.hash},
          {"nonterminals", s.nonterminals},
          {"productions", s.productions},
          {"class", s.first_class ? "first" : "second"},
          {"probe_value", s.probe_value ? nlohmann::json(*s.probe_value) : nlohmann::json(nullptr)},
          {"nbar", s.nbar},
          {"delta_max", s.delta_max},
          {"delta_certified", s.delta_certified}};
}

}  // namespace

TrialRecord run_trial(const EquationSystem& s1, const EquationSystem& s2, const std::vector<std::string>& alphabet,
                      std::size_t dim, std::size_t trial, std::uint64_t seed, double delta) {
  return solve_pair(s1, s2, random_substitution(alphabet, dim, delta, seed), SolveOptions{}, trial);
}

Verdict compare(const Grammar& g1, const Grammar& g2, const CompareConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  v.config = cfg;
  require_renaming_acyclic(g1);
  require_renaming_acyclic(g2);
  v.left = summarize(g1);
  v.right = summarize(g2);
  v.alphabet = union_alphabet(g1, g2);
  auto finish = [&]() -> Verdict {
    v.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return v;
  };

  if (v.left.first_class != v.right.first_class) {
    v.outcome = Outcome::ClassMismatch;
    v.reason = std::string("scalar probe: ") + (v.left.first_class ? "right" : "left") +
               " grammar diverges (unbounded ambiguity), the other converges";
    return finish();
  }
  if (!v.left.first_class) {
    v.outcome = Outcome::Inconclusive;
    v.reason = "both grammars have unbounded ambiguity; matrix comparison needs first-class grammars";
    return finish();
  }

  const EquationSystem s1 = compile_with_context(g1, "left");
  const EquationSystem s2 = compile_with_context(g2, "right");
  const auto c1 = contraction_params(s1), c2 = contraction_params(s2);
  v.left.nbar = c1.nbar;
  v.left.delta_max = c1.delta_max;
  v.left.delta_certified = certified_delta(s1, c1.delta_max);
  v.right.nbar = c2.nbar;
  v.right.delta_max = c2.delta_max;
  v.right.delta_certified = certified_delta(s2, c2.delta_max);
  v.shared_delta = std::min(v.left.delta_certified, v.right.delta_certified);

  struct Slot {
    std::size_t dim, trial;
  };
  std::vector<Slot> slots;
  for (auto d : cfg.dims)
    for (std::size_t t = 0; t < cfg.trials_per_dim; ++t) slots.push_back({d, t});
  std::vector<std::optional<TrialRecord>> results(slots.size());
  std::atomic<std::size_t> first_different{slots.size()};
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < slots.size();) {
      if (i > first_different.load()) continue;
      const auto [dim, t] = slots[i];
      TrialRecord r =
          planned_trial(s1, s2, v.alphabet, dim, t, derive_seed(cfg.seed, dim, t), cfg, v.shared_delta);
      if (r.converged() && r.diff > cfg.different_tol) {
        std::size_t cur = first_different.load();
        while (i < cur && !first_different.compare_exchange_weak(cur, i)) {
        }
      }
      results[i] = r;
    }
  };
  std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, slots.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  const std::size_t stop = first_different.load();
  for (std::size_t i = 0; i < slots.size() && i <= stop; ++i) v.trials.push_back(*results[i]);
  if (stop < slots.size()) {
    v.witness_trial = stop;
    const TrialRecord& w = v.trials.back();
    v.witness_substitution = random_substitution(v.alphabet, w.dim, w.delta, w.seed);
  }

  try {
    v.oracle = min_distinguishing_word(g1, g2, cfg.oracle_len);
  } catch (const OracleUnstabilized& e) {
    throw OracleUnstabilized(std::string("oracle cross-check: ") + e.what());
  }

  const bool oracle_witness = v.oracle && v.oracle->witness.has_value();
  const bool all_equal = std::all_of(v.trials.begin(), v.trials.end(),
                                     [&](const TrialRecord& r) { return r.converged() && r.diff < cfg.equal_tol; });
  if (v.witness_trial) {
    v.outcome = Outcome::Different;
    v.reason = "matrix trial " + std::to_string(*v.witness_trial) + " separates the axiom values";
    if (oracle_witness) v.reason += "; oracle confirms with word " + v.oracle->witness->word;
  } else if (oracle_witness) {
    v.outcome = Outcome::Different;
    v.reason = "oracle witness " + v.oracle->witness->word + " missed by every matrix trial";
  } else if (all_equal) {
    v.outcome = Outcome::ProbablyEquivalent;
    v.reason = "every trial agrees below the equal tolerance and the oracle finds no witness up to length " +
               std::to_string(cfg.oracle_len);
  } else {
    v.outcome = Outcome::Inconclusive;
    const auto unconverged =
        std::count_if(v.trials.begin(), v.trials.end(), [](const TrialRecord& r) { return !r.converged(); });
    v.reason = unconverged ? std::to_string(unconverged) + " trial(s) did not converge"
                           : "some difference lies between the equal and different tolerances";
  }
  return finish();
}

nlohmann::json Verdict::to_json(bool include_timing) const {
  nlohmann::json trials_json = nlohmann::json::array();
  for (const auto& t : trials) trials_json.push_back(t.to_json());
  nlohmann::json oracle_json = nullptr;
  if (oracle) {
    nlohmann::json witness = nullptr;
    if (oracle->witness)
      witness = {{"word", oracle->witness->word},
                 {"length", oracle->witness->length},
                 {"coeff_left", oracle->witness->coeff_left},
                 {"coeff_right", oracle->witness->coeff_right}};
    oracle_json = {{"max_len", oracle->max_len}, {"method", cfgeq::to_string(oracle->method)}, {"witness", witness}};
  }
  nlohmann::json j = {
      {"outcome", cfgeq::to_string(outcome)},
      {"exit_code", exit_code(outcome)},
      {"reason", reason},
      {"config", config.to_json()},
      {"grammars", {{"left", summary_json(left)}, {"right", summary_json(right)}}},
      {"alphabet", alphabet},
      {"shared_delta", shared_delta},
      {"trials_run", trials_run()},
      {"trials", trials_json},
      {"witness_trial", witness_trial ? nlohmann::json(*witness_trial) : nlohmann::json(nullptr)},
      {"witness_substitution",
       witness_substitution ? cfgeq::to_json(*witness_substitution) : nlohmann::json(nullptr)},
      {"oracle", oracle_json},
  };
  if (include_timing) j["wall_time_ms"] = wall_ms;
  return j;
}

ReplayResult replay(const nlohmann::json& verdict, const Grammar& g1, const Grammar& g2) {
  try {
    const auto& grammars = verdict.at("grammars");
    if (grammars.at("left").at("hash").get<std::string>() != grammar_hash(g1))
      throw ReplayMismatch("left grammar does not match the recorded hash");
    if (grammars.at("right").at("hash").get<std::string>() != grammar_hash(g2))
      throw ReplayMismatch("right grammar does not match the recorded hash");
    const auto alphabet = union_alphabet(g1, g2);
    if (verdict.at("alphabet").get<std::vector<std::string>>() != alphabet)
      throw ReplayMismatch("alphabet differs from the recorded one");

    const EquationSystem s1 = compile(g1), s2 = compile(g2);
    ReplayResult out;
    for (const auto& t : verdict.at("trials")) {
      TrialRecord r = run_trial(s1, s2, alphabet, t.at("dim").get<std::size_t>(), t.at("trial").get<std::size_t>(),
                                t.at("seed").get<std::uint64_t>(), t.at("delta").get<double>());
      if (r.diff != t.at("diff").get<double>()) out.identical = false;
      out.trials.push_back(r);
    }
    if (const auto& ws = verdict.at("witness_substitution"); !ws.is_null()) {
      const auto& w = verdict.at("trials").at(verdict.at("witness_trial").get<std::size_t>());
      const Substitution regenerated = random_substitution(alphabet, w.at("dim").get<std::size_t>(),
                                                           w.at("delta").get<double>(), w.at("seed").get<std::uint64_t>());
      const Substitution recorded = substitution_from_json(ws);
      if (recorded.map != regenerated.map) out.identical = false;
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ReplayMismatch(std::string("malformed verdict document: ") + e.what());
  }
}

}  // namespace cfgeq
