#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stripsplus/features.hpp"
#include "stripsplus/trace_graph.hpp"

namespace sps {

enum class Verdict : uint8_t { Invalid, Valid, Determined };

// A predicate available to query synthesis: either observed (full or local)
// or a learned feature with its replayed ledger.
struct PoolPredicate {
  std::string name;
  uint8_t arity;
  enum Kind { ObservedFull, ObservedLocal, LearnedPlain, LearnedMutex } kind;
  int obs_pred = -1;        // graph observation predicate id when observed
  const Feature* feature = nullptr;  // when learned
  bool is_static = false;
};

// Terms of a candidate query atom: explicit argument, previously determined
// implicit argument, the target z, or a fresh existential.
struct QueryTerm {
  enum Kind : uint8_t { X, Z, Target, Y } kind;
  uint8_t index;  // 1-based for X/Z; Y counter

  bool operator==(const QueryTerm& o) const { return kind == o.kind && index == o.index; }
  bool operator<(const QueryTerm& o) const {
    return kind != o.kind ? kind < o.kind : index < o.index;
  }
};

struct QueryAtom {
  int pool_pred;
  std::vector<QueryTerm> terms;

  bool operator==(const QueryAtom& o) const { return pool_pred == o.pool_pred && terms == o.terms; }
  bool operator<(const QueryAtom& o) const {
    return pool_pred != o.pool_pred ? pool_pred < o.pool_pred : terms < o.terms;
  }
};

using QueryConjunction = std::vector<QueryAtom>;

std::string query_text(const std::vector<PoolPredicate>& pool, const QueryConjunction& q);

// Evaluation context: node truth lookups against observations and feature
// ledgers, with per-mode unknown handling. In local mode the truth of a
// locally observable predicate's atom is known only when the atom mentions
// an object that is certainly local at the node.
class QueryEvaluator {
 public:
  QueryEvaluator(const TraceGraph& g, const std::vector<PoolPredicate>& pool, bool local_mode);

  // All (node, edge) occurrences of a schema with the current annotations.
  struct Occurrence {
    NodeId node;
    EdgeId edge;
  };
  std::vector<Occurrence> occurrences(SchemaId schema) const;

  // TEST*: invalid if unsatisfiable at some occurrence; valid if satisfiable
  // at all; determined if additionally the target binds uniquely everywhere.
  Verdict test_star(SchemaId schema, const QueryConjunction& conj) const;

  // The unique binding of the target at one occurrence (valid only after a
  // Determined verdict).
  std::optional<ObjectId> target_binding(const QueryConjunction& conj, EdgeId edge) const;

  // Three-valued ground-atom lookup at a node.
  Tri lookup(int pool_pred, GroundAtom args, NodeId node) const;

  const std::vector<PoolPredicate>& pool() const { return *pool_; }
  bool local_mode() const { return local_; }
  const TraceGraph& graph() const { return *g_; }

 private:
  struct BindResult {
    std::vector<ObjectId> strict;     // target values over known-true groundings
    bool unknown_possible = false;    // some grounding rests on unknown atoms
  };
  BindResult bindings_at(const QueryConjunction& conj, EdgeId edge, bool optimistic) const;

  const TraceGraph* g_;
  const std::vector<PoolPredicate>* pool_;
  bool local_;
  std::vector<std::vector<GroundAtom>> obs_true_;  // per node, sorted, pred = obs id
  mutable std::vector<std::vector<ObjectId>> local_objects_;  // lazy per node
};

struct QueryConfig {
  int max_atoms = 3;
  long expansion_cap = 200000;  // candidate conjunctions per target
};

// Alg. 1: breadth-first growth of a conjunction determining the next z.
// Returns the first determined conjunction (in deterministic order) that the
// filter accepts, or nothing when the frontier empties. Determined but
// rejected conjunctions stay in the frontier as valid extensions.
std::optional<QueryConjunction> expand(
    const QueryEvaluator& eval, SchemaId schema, int n_prev_z, const QueryConfig& cfg,
    const std::function<bool(const QueryConjunction&)>& filter = {});

// True iff the query's binding differs, at some occurrence, from every
// explicit argument and every previously determined implicit argument.
bool distinct_denotation(const QueryEvaluator& eval, SchemaId schema,
                         const QueryConjunction& conj);

}  // namespace sps
