#include "stripsplus/twosat.hpp"

#include <algorithm>

namespace sps {

bool TwoSat::solve(std::vector<bool>* assignment) {
  int n = 2 * n_;
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<int> stack;
  int next_index = 0, next_comp = 0;

  // Iterative Tarjan to keep deep trace graphs off the call stack.
  struct Frame {
    int v;
    size_t edge;
  };
  std::vector<Frame> call;
  for (int start = 0; start < n; ++start) {
    if (index[start] != -1) continue;
    call.push_back({start, 0});
    while (!call.empty()) {
      Frame& f = call.back();
      int v = f.v;
      if (f.edge == 0) {
        index[v] = low[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = true;
      }
      bool descended = false;
      while (f.edge < adj_[v].size()) {
        int w = adj_[v][f.edge++];
        if (index[w] == -1) {
          call.push_back({w, 0});
          descended = true;
          break;
        }
        if (on_stack[w]) low[v] = std::min(low[v], index[w]);
      }
      if (descended) continue;
      if (low[v] == index[v]) {
        for (;;) {
          int w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = next_comp;
          if (w == v) break;
        }
        ++next_comp;
      }
      call.pop_back();
      if (!call.empty()) {
        int parent = call.back().v;
        low[parent] = std::min(low[parent], low[v]);
      }
    }
  }

  for (int v = 0; v < n_; ++v)
    if (comp[2 * v] == comp[2 * v + 1]) return false;
  if (assignment) {
    assignment->assign(n_, false);
    // Tarjan numbers components in reverse topological order; a literal is
    // true when its component comes before its negation's.
    for (int v = 0; v < n_; ++v) (*assignment)[v] = comp[2 * v] < comp[2 * v + 1];
  }
  return true;
}

}  // namespace sps
