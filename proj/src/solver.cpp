#include "cfgeq/solver.hpp"

#include <algorithm>
#include <cmath>

#include "cfgeq/error.hpp"

namespace cfgeq {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged:
      return "Converged";
    case SolveStatus::Diverged:
      return "Diverged";
    case SolveStatus::MaxIterExceeded:
      return "MaxIterExceeded";
  }
  return "?";
}

namespace {

std::size_t infer_dim(const Substitution& sub, const Assignment& values) {
  if (sub.dim) return sub.dim;
  if (!values.empty()) return values.begin()->second.dim();
  throw InvalidArgument("cannot infer matrix dimension");
}

// Index-based form of an equation system, resolved once per solve.
struct Compiled {
  struct Mono {
    std::vector<int> factors;  // >= 0 variable index, < 0 -(terminal slot + 1)
  };
  std::size_t n = 0;
  std::vector<std::vector<Mono>> rhs;
  std::vector<std::vector<std::size_t>> linear;
  std::vector<std::size_t> order;  // linear dependencies first
  std::vector<const Matrix*> terminals;
};

Compiled compile_indexed(const EquationSystem& sys, const Substitution& sub) {
  Compiled c;
  c.n = sys.variables.size();
  std::map<std::string, std::size_t> var_index;
  for (std::size_t i = 0; i < c.n; ++i) var_index[sys.variables[i]] = i;
  std::map<std::string, int> term_slot;
  c.rhs.resize(c.n);
  c.linear.resize(c.n);
  for (std::size_t i = 0; i < c.n; ++i) {
    auto it = sys.rhs.find(sys.variables[i]);
    if (it == sys.rhs.end()) continue;
    for (const auto& m : it->second.terms) {
      Compiled::Mono cm;
      for (const auto& s : m.factors) {
        if (s.is_nonterminal()) {
          cm.factors.push_back(static_cast<int>(var_index.at(s.name)));
        } else {
          auto [slot, inserted] = term_slot.emplace(s.name, static_cast<int>(c.terminals.size()));
          if (inserted) c.terminals.push_back(&sub.at(s.name));
          cm.factors.push_back(-(slot->second + 1));
        }
      }
      c.rhs[i].push_back(std::move(cm));
    }
  }
  for (const auto& [v, ws] : sys.linear_part)
    for (const auto& w : ws) c.linear[var_index.at(v)].push_back(var_index.at(w));
  for (const auto& v : linear_topological_order(sys)) c.order.push_back(var_index.at(v));
  return c;
}

class Evaluator {
 public:
  Evaluator(const Compiled& c, std::size_t dim) : c_(c), dim_(dim), acc_(dim), tmp_(dim), id_(Matrix::identity(dim)) {}

  // out[i] = (I - L)^-1 F(x), computed in dependency order.
  void step(const std::vector<Matrix>& x, std::vector<Matrix>& out) {
    for (std::size_t i = 0; i < c_.n; ++i) eval_rhs(i, x, out[i]);
    for (std::size_t i : c_.order)
      for (std::size_t j : c_.linear[i]) out[i] += out[j];
  }

  void eval_rhs(std::size_t i, const std::vector<Matrix>& x, Matrix& out) {
    out = Matrix(dim_);
    for (const auto& m : c_.rhs[i]) {
      if (m.factors.empty()) {
        out += id_;
        continue;
      }
      acc_ = factor(m.factors[0], x);
      for (std::size_t k = 1; k < m.factors.size(); ++k) {
        mat_mul_into(acc_, factor(m.factors[k], x), tmp_);
        std::swap(acc_, tmp_);
      }
      out += acc_;
    }
  }

 private:
  const Matrix& factor(int f, const std::vector<Matrix>& x) const {
    return f >= 0 ? x[static_cast<std::size_t>(f)] : *c_.terminals[static_cast<std::size_t>(-f - 1)];
  }

  const Compiled& c_;
  std::size_t dim_;
  Matrix acc_, tmp_, id_;
};

std::vector<Matrix> to_vector(const EquationSystem& sys, const Assignment& x, std::size_t dim) {
  std::vector<Matrix> v;
  v.reserve(sys.variables.size());
  for (const auto& name : sys.variables) {
    auto it = x.find(name);
    v.push_back(it == x.end() ? Matrix(dim) : it->second);
  }
  return v;
}

Assignment to_assignment(const EquationSystem& sys, std::vector<Matrix> v) {
  Assignment a;
  for (std::size_t i = 0; i < v.size(); ++i) a.emplace(sys.variables[i], std::move(v[i]));
  return a;
}

}  // namespace

Matrix evaluate_polynomial(const Polynomial& p, const Substitution& sub, const Assignment& values) {
  const std::size_t dim = infer_dim(sub, values);
  Matrix out(dim);
  for (const auto& m : p.terms) {
    Matrix acc = Matrix::identity(dim);
    for (const auto& s : m.factors) {
      const Matrix* f = nullptr;
      if (s.is_terminal()) {
        f = &sub.at(s.name);
      } else {
        auto it = values.find(s.name);
        if (it == values.end()) throw InvalidArgument("no value for nonterminal '" + s.name + "'");
        f = &it->second;
      }
      acc = mat_mul(acc, *f);
    }
    out += acc;
  }
  return out;
}

Assignment apply_linear_inverse(const std::map<std::string, std::vector<std::string>>& linear_part,
                                const Assignment& values) {
  EquationSystem shape;
  for (const auto& [v, m] : values) shape.variables.push_back(v);
  shape.linear_part = linear_part;
  Assignment out = values;
  for (const auto& v : linear_topological_order(shape)) {
    auto it = linear_part.find(v);
    if (it == linear_part.end()) continue;
    for (const auto& w : it->second) out.at(v) += out.at(w);
  }
  return out;
}

Assignment evaluate_rhs(const EquationSystem& sys, const Substitution& sub, const Assignment& x) {
  const std::size_t dim = infer_dim(sub, x);
  Compiled c = compile_indexed(sys, sub);
  Evaluator ev(c, dim);
  auto xv = to_vector(sys, x, dim);
  std::vector<Matrix> out(c.n, Matrix(dim));
  for (std::size_t i = 0; i < c.n; ++i) ev.eval_rhs(i, xv, out[i]);
  return to_assignment(sys, std::move(out));
}

Assignment fixed_point_map(const EquationSystem& sys, const Substitution& sub, const Assignment& x) {
  const std::size_t dim = infer_dim(sub, x);
  Compiled c = compile_indexed(sys, sub);
  Evaluator ev(c, dim);
  auto xv = to_vector(sys, x, dim);
  std::vector<Matrix> out(c.n, Matrix(dim));
  ev.step(xv, out);
  return to_assignment(sys, std::move(out));
}

Assignment internal_values(const EquationSystem& sys, const Assignment& solution) {
  Assignment out = solution;
  for (auto& [v, m] : out)
    if (sys.is_shifted(v)) m = mat_sub(m, Matrix::identity(m.dim()));
  return out;
}

Solution iterate(const EquationSystem& sys, const Substitution& sub, const SolveOptions& opts) {
  const std::size_t dim = sub.dim;
  if (dim == 0) throw InvalidArgument("substitution has dimension 0");
  Compiled c = compile_indexed(sys, sub);
  Evaluator ev(c, dim);

  std::vector<Matrix> x(c.n, Matrix(dim)), next(c.n, Matrix(dim));
  Solution sol;
  std::vector<double> recent;  // residual history for the contraction estimate
  double prev_residual = -1.0;

  for (std::size_t k = 0; k < opts.max_iter; ++k) {
    ev.step(x, next);
    double residual = 0.0, frob = 0.0, size = 0.0;
    bool finite = true;
    for (std::size_t i = 0; i < c.n; ++i) {
      if (!next[i].all_finite()) finite = false;
      residual = std::max(residual, max_abs_diff(next[i], x[i]));
      if (opts.record_trace) frob = std::max(frob, frobenius_norm(mat_sub(next[i], x[i])));
      size = std::max(size, max_abs(next[i]));
    }
    std::swap(x, next);
    sol.iterations = k + 1;
    sol.residual = residual;
    if (opts.record_trace) {
      sol.residual_trace.push_back(residual);
      sol.frobenius_trace.push_back(frob);
    }
    if (!finite || size > opts.blowup) {
      sol.status = SolveStatus::Diverged;
      break;
    }
    if (prev_residual > 100.0 * opts.tol) {
      recent.push_back(residual / prev_residual);
      if (recent.size() > 8) recent.erase(recent.begin());
    }
    prev_residual = residual;
    if (residual < opts.tol) {
      sol.status = SolveStatus::Converged;
      break;
    }
    if (opts.stall_ratio && k + 1 >= opts.stall_window && !recent.empty()) {
      const double worst = *std::max_element(recent.begin(), recent.end());
      if (worst > *opts.stall_ratio) {
        sol.status = SolveStatus::MaxIterExceeded;
        break;
      }
    }
  }
  sol.contraction_estimate = recent.empty() ? 0.0 : *std::max_element(recent.begin(), recent.end());

  const Matrix id = Matrix::identity(dim);
  for (std::size_t i = 0; i < c.n; ++i) {
    if (sys.is_shifted(sys.variables[i])) x[i] += id;
    sol.assignment.emplace(sys.variables[i], std::move(x[i]));
  }
  return sol;
}

double certified_delta(const EquationSystem& sys, double upper) {
  if (!(upper > 0.0)) throw InvalidArgument("certified_delta needs a positive upper bound");
  SolveOptions so;
  so.max_iter = 10000;
  so.stall_ratio = 0.9;
  for (double d = upper; d > upper * 1e-12; d /= std::sqrt(2.0)) {
    Substitution sub;
    sub.dim = 1;
    sub.norm_bound = d;
    for (const auto& t : sys.terminals) sub.map.emplace(t, Matrix(1, {d}));
    const Solution s = iterate(sys, sub, so);
    if (s.status == SolveStatus::Converged && s.contraction_estimate <= 0.9) return d;
  }
  throw Error("no envelope makes the scalar majorant converge");
}

nlohmann::json to_json(const Solution& s) {
  nlohmann::json vars = nlohmann::json::object();
  for (const auto& [v, m] : s.assignment) vars[v] = to_json(m);
  return {{"status", to_string(s.status)},
          {"iterations", s.iterations},
          {"residual", s.residual},
          {"contraction_estimate", s.contraction_estimate},
          {"assignment", vars}};
}

}  // namespace cfgeq
