#include "cmrf/factor_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cmrf {

int FactorGraph::add_variable(int n_states) {
  if (n_states < 1) throw std::invalid_argument("FactorGraph: variable needs at least one state");
  states_.push_back(n_states);
  return n_variables() - 1;
}

int FactorGraph::add_table(std::vector<double> values) {
  tables_.push_back(std::move(values));
  return static_cast<int>(tables_.size()) - 1;
}

int FactorGraph::add_factor(std::vector<int> scope, int table) {
  if (scope.empty()) throw std::invalid_argument("FactorGraph: empty scope");
  if (table < 0 || table >= static_cast<int>(tables_.size())) throw std::invalid_argument("FactorGraph: bad table id");
  std::size_t size = 1;
  for (std::size_t k = 0; k < scope.size(); ++k) {
    if (scope[k] < 0 || scope[k] >= n_variables()) throw std::invalid_argument("FactorGraph: scope references unknown variable");
    for (std::size_t m = 0; m < k; ++m)
      if (scope[m] == scope[k]) throw std::invalid_argument("FactorGraph: repeated variable in scope");
    size *= static_cast<std::size_t>(states_[scope[k]]);
  }
  if (tables_[table].size() != size) throw std::invalid_argument("FactorGraph: table size does not match scope");
  factors_.push_back({std::move(scope), table});
  return static_cast<int>(factors_.size()) - 1;
}

double FactorGraph::energy(std::span<const int> x) const {
  if (x.size() != states_.size()) throw std::invalid_argument("FactorGraph::energy: assignment size mismatch");
  for (std::size_t v = 0; v < x.size(); ++v)
    if (x[v] < 0 || x[v] >= states_[v]) throw std::invalid_argument("FactorGraph::energy: state out of range");
  double e = 0.0;
  for (const Factor& f : factors_) {
    std::size_t idx = 0;
    for (int v : f.scope) idx = idx * states_[v] + x[v];
    e += tables_[f.table][idx];
  }
  return e;
}

void FactorGraph::validate() const {
  for (const auto& t : tables_)
    for (double x : t)
      if (!std::isfinite(x)) throw std::invalid_argument("FactorGraph: non-finite table entry");
}

namespace {

class Solver {
 public:
  explicit Solver(const FactorGraph& g) : g_(g) {
    const int nv = g.n_variables();
    belief_offset_.resize(nv + 1, 0);
    for (int v = 0; v < nv; ++v) belief_offset_[v + 1] = belief_offset_[v] + g.n_states(v);
    belief_.assign(belief_offset_[nv], 0.0);
    for (const auto& f : g.factors()) {
      msg_offset_.push_back(messages_.size());
      for (int v : f.scope) messages_.resize(messages_.size() + g.n_states(v), 0.0);
    }
  }

  void update(std::size_t fi) {
    const auto& f = g_.factors()[fi];
    const std::span<const double> theta = g_.table(f.table);
    const int arity = static_cast<int>(f.scope.size());
    // delta_v = belief_v - lambda_{f->v}, written in place of the message
    double* msg = messages_.data() + msg_offset_[fi];
    std::size_t off = 0;
    for (int v : f.scope) {
      const int n = g_.n_states(v);
      double* b = belief_.data() + belief_offset_[v];
      for (int s = 0; s < n; ++s) msg[off + s] = b[s] - msg[off + s];
      off += n;
    }
    // min-marginals of theta_f + sum_v delta_v
    mins_.assign(off, std::numeric_limits<double>::infinity());
    digits_.assign(arity, 0);
    for (std::size_t t = 0; t < theta.size(); ++t) {
      double a = theta[t];
      std::size_t o = 0;
      for (int k = 0; k < arity; ++k) {
        a += msg[o + digits_[k]];
        o += g_.n_states(f.scope[k]);
      }
      o = 0;
      for (int k = 0; k < arity; ++k) {
        double& m = mins_[o + digits_[k]];
        if (a < m) m = a;
        o += g_.n_states(f.scope[k]);
      }
      for (int k = arity - 1; k >= 0; --k) {
        if (++digits_[k] < g_.n_states(f.scope[k])) break;
        digits_[k] = 0;
      }
    }
    const double share = 1.0 / arity;
    off = 0;
    for (int v : f.scope) {
      const int n = g_.n_states(v);
      double* b = belief_.data() + belief_offset_[v];
      for (int s = 0; s < n; ++s) {
        const double mu = mins_[off + s] * share;
        msg[off + s] = mu - msg[off + s];
        b[s] = mu;
      }
      off += n;
    }
  }

  // Recomputes beliefs from messages to stop drift, then evaluates the dual.
  double bound() {
    std::fill(belief_.begin(), belief_.end(), 0.0);
    for (std::size_t fi = 0; fi < g_.factors().size(); ++fi) {
      const auto& f = g_.factors()[fi];
      const double* msg = messages_.data() + msg_offset_[fi];
      std::size_t off = 0;
      for (int v : f.scope) {
        double* b = belief_.data() + belief_offset_[v];
        for (int s = 0; s < g_.n_states(v); ++s) b[s] += msg[off + s];
        off += g_.n_states(v);
      }
    }
    double total = 0.0;
    for (int v = 0; v < g_.n_variables(); ++v)
      total += *std::min_element(belief_.begin() + belief_offset_[v], belief_.begin() + belief_offset_[v + 1]);
    for (std::size_t fi = 0; fi < g_.factors().size(); ++fi) {
      const auto& f = g_.factors()[fi];
      const std::span<const double> theta = g_.table(f.table);
      const double* msg = messages_.data() + msg_offset_[fi];
      const int arity = static_cast<int>(f.scope.size());
      digits_.assign(arity, 0);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < theta.size(); ++t) {
        double a = theta[t];
        std::size_t o = 0;
        for (int k = 0; k < arity; ++k) {
          a -= msg[o + digits_[k]];
          o += g_.n_states(f.scope[k]);
        }
        best = std::min(best, a);
        for (int k = arity - 1; k >= 0; --k) {
          if (++digits_[k] < g_.n_states(f.scope[k])) break;
          digits_[k] = 0;
        }
      }
      total += best;
    }
    return total;
  }

  std::vector<int> decode() const {
    std::vector<int> x(g_.n_variables());
    for (int v = 0; v < g_.n_variables(); ++v) {
      const auto first = belief_.begin() + belief_offset_[v];
      x[v] = static_cast<int>(std::min_element(first, belief_.begin() + belief_offset_[v + 1]) - first);
    }
    return x;
  }

 private:
  const FactorGraph& g_;
  std::vector<std::size_t> belief_offset_;
  std::vector<double> belief_;
  std::vector<std::size_t> msg_offset_;
  std::vector<double> messages_;
  std::vector<double> mins_;
  std::vector<int> digits_;
};

}  // namespace

BpResult convex_bp(const FactorGraph& graph, int max_sweeps, double tolerance) {
  graph.validate();
  if (max_sweeps < 1) throw std::invalid_argument("convex_bp: max_sweeps must be >= 1");
  Solver solver(graph);
  BpResult result;
  result.assignment = solver.decode();
  result.energy = graph.energy(result.assignment);
  double previous = -std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (std::size_t f = 0; f < graph.factors().size(); ++f) solver.update(f);
    const double b = solver.bound();
    result.bound_trace.push_back(b);
    result.bound = b;
    result.sweeps = sweep + 1;
    std::vector<int> x = solver.decode();
    const double e = graph.energy(x);
    if (e < result.energy) {
      result.energy = e;
      result.assignment = std::move(x);
    }
    if (b - previous < tolerance) {
      result.converged = true;
      break;
    }
    previous = b;
  }
  return result;
}

}  // namespace cmrf
