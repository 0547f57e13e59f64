#pragma once

#include <span>
#include <vector>

namespace cmrf {

/// Discrete minimization problem E(x) = sum_f theta_f(x_f). Tables are
/// row-major with the first scope variable slowest and may be shared between
/// factors of equal shape.
class FactorGraph {
 public:
  struct Factor {
    std::vector<int> scope;
    int table = 0;
  };

  int add_variable(int n_states);
  int add_table(std::vector<double> values);
  int add_factor(std::vector<int> scope, int table);
  int add_factor(std::vector<int> scope, std::vector<double> values) {
    return add_factor(std::move(scope), add_table(std::move(values)));
  }

  int n_variables() const { return static_cast<int>(states_.size()); }
  int n_states(int v) const { return states_[v]; }
  const std::vector<Factor>& factors() const { return factors_; }
  std::span<const double> table(int id) const { return tables_[id]; }
  std::size_t n_tables() const { return tables_.size(); }

  /// Sum of all factor values; throws std::invalid_argument on a malformed assignment.
  double energy(std::span<const int> assignment) const;

  /// Throws std::invalid_argument on non-finite table entries.
  void validate() const;

 private:
  std::vector<int> states_;
  std::vector<std::vector<double>> tables_;
  std::vector<Factor> factors_;
};

struct BpResult {
  std::vector<int> assignment;
  double energy = 0.0;              // of `assignment`
  double bound = 0.0;               // final dual lower bound
  std::vector<double> bound_trace;  // one entry per sweep
  int sweeps = 0;
  bool converged = false;
};

/// Block coordinate ascent on the factor-wise dual decomposition of the MAP
/// LP (uniform counting numbers). Each sweep visits factors in index order;
/// the bound never decreases. Stops when a sweep gains less than `tolerance`.
/// Every sweep decodes each variable by argmin of its reparameterized unary
/// (lowest index on ties); the lowest-energy decode seen is returned.
BpResult convex_bp(const FactorGraph& graph, int max_sweeps, double tolerance);

}  // namespace cmrf
