#pragma once

#include <cstdint>
#include <vector>

#include "stripsplus/trace_graph.hpp"

namespace sps {

enum class Tri : uint8_t { Unknown = 0, True = 1, False = 2 };

// What one edge does to the tracked atoms of a single hypothesized predicate.
// Atoms are referred to by index into the tracked-atom list. A prefix delete
// forces every tracked atom with that prefix (except ones added by the same
// edge) false after the edge and requires at least one true atom with the
// prefix before it. Atoms untouched by an edge keep their value across it.
struct EdgeEffects {
  std::vector<int32_t> adds;
  std::vector<int32_t> plain_dels;
  std::vector<int32_t> prefix_dels;  // prefix group ids
};

struct LedgerOptions {
  bool mutex_condition2 = false;  // at most one true atom per (node, prefix)
  bool existence_clauses = false; // prefix deletes need something to delete
  size_t search_budget = 1 << 20;
};

// Three-valued fixed point over (tracked atom, node) cells: frame equalities
// become union-find merges, edge effects become unit constraints, the mutex
// condition narrows groups, and leftover existence clauses go to a small
// backtracking search. Values reported back are the forced ones only; search
// witnesses are never leaked into the ledger.
class AtomLedger {
 public:
  // tracked: sorted unique packed atoms, all same predicate slot layout.
  // arity: feature arity k (prefix = first k-1 arguments).
  AtomLedger(const TraceGraph& g, std::vector<GroundAtom> tracked, int arity);

  int atom_count() const { return static_cast<int>(tracked_.size()); }
  const std::vector<GroundAtom>& tracked() const { return tracked_; }
  int atom_index(GroundAtom a) const;
  int prefix_group(int atom_idx) const { return prefix_of_[atom_idx]; }
  int num_prefix_groups() const { return static_cast<int>(groups_.size()); }
  const std::vector<int32_t>& group_atoms(int group) const { return groups_[group]; }
  int group_of_prefix(uint64_t prefix_bits) const;

  struct Result {
    bool consistent = false;
    bool search_used = false;
  };

  Result propagate(const std::vector<EdgeEffects>& effects, const LedgerOptions& opts);

  // Builds the frame-equality classes only; used by the sign-search path
  // which layers a 2-SAT over the classes instead of unit propagation.
  void build_classes(const std::vector<EdgeEffects>& effects);
  int class_of(int atom_idx, NodeId node) const { return find(static_cast<int>(cell(atom_idx, node))); }

  // Forced value of an atom at a node after propagate().
  Tri value(int atom_idx, NodeId node) const;
  Tri value(GroundAtom a, NodeId node) const;

  // First violation seen by the last propagate (0 none, 1 starving delete,
  // 2 effect conflict, 3 mutex clash).
  int violation_kind() const { return violation_kind_; }
  EdgeId violation_edge() const { return violation_edge_; }

 private:
  friend class LedgerSearch;
  size_t cell(int atom_idx, NodeId node) const { return static_cast<size_t>(atom_idx) * nodes_ + node; }
  int find(int c) const;
  bool assign(int cls, Tri v);  // false on conflict
  bool close_condition2(std::vector<int>& true_queue);

  const TraceGraph* graph_;
  std::vector<GroundAtom> tracked_;
  std::vector<uint64_t> prefix_bits_;
  std::vector<int32_t> prefix_of_;
  std::vector<std::vector<int32_t>> groups_;
  size_t nodes_ = 0;

  mutable std::vector<int32_t> parent_;  // union-find over cells (path halving in find)
  std::vector<Tri> class_value_;         // indexed by representative cell
  std::vector<std::vector<int32_t>> class_cells_;
  bool condition2_ = false;
  int violation_kind_ = 0;
  EdgeId violation_edge_ = 0;
};

}  // namespace sps
