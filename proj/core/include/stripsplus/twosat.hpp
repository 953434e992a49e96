#pragma once

#include <cstdint>
#include <vector>

namespace sps {

// Implication-graph 2-SAT with iterative Tarjan SCC. Literals: variable v has
// positive literal 2v and negative literal 2v+1.
class TwoSat {
 public:
  explicit TwoSat(int num_vars) : n_(num_vars), adj_(2 * num_vars) {}

  static int lit(int var, bool positive) { return 2 * var + (positive ? 0 : 1); }

  void add_clause(int a, int b) {  // a ∨ b
    adj_[a ^ 1].push_back(b);
    adj_[b ^ 1].push_back(a);
  }
  void add_implication(int a, int b) { add_clause(a ^ 1, b); }
  void add_unit(int a) { add_clause(a, a); }

  // Solves and, when satisfiable, fills assignment (true = positive).
  bool solve(std::vector<bool>* assignment = nullptr);

 private:
  int n_;
  std::vector<std::vector<int>> adj_;
};

}  // namespace sps
