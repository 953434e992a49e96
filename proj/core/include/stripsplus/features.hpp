#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "stripsplus/ledger.hpp"
#include "stripsplus/trace_graph.hpp"

namespace sps {

// An action pattern a[t]: index tuple over the action's current argument
// positions (explicit first, then learned implicit), 1-based, no repeats.
struct ActionPattern {
  SchemaId schema;
  std::vector<uint8_t> slots;

  bool operator==(const ActionPattern& o) const { return schema == o.schema && slots == o.slots; }
  bool operator<(const ActionPattern& o) const {
    return schema != o.schema ? schema < o.schema : slots < o.slots;
  }
};

std::string pattern_text(const TraceGraph& g, const ActionPattern& p);

// A consistency-checked feature, plain (signed) or mutex. For mutex features
// delete patterns have arity k-1 and remove the unique true atom with the
// matching prefix. The replayed ledger carries the forced truth values used
// by query synthesis and precondition extraction.
struct Feature {
  bool is_mutex = false;
  int arity = 0;
  std::vector<ActionPattern> adds;
  std::vector<ActionPattern> dels;
  std::shared_ptr<AtomLedger> ledger;
  std::vector<std::vector<GroundAtom>> true_atoms;  // per node, sorted (atoms packed with pred 0)
  bool delete_query_determined = true;  // every delete occurrence has a known target prefix atom
  uint64_t ledger_digest = 0;           // for duplicate collapse

  std::string key(const TraceGraph& g) const;
};

struct BudgetExceeded : std::runtime_error {
  explicit BudgetExceeded(const std::string& m) : std::runtime_error(m) {}
};

struct FeatureEngineConfig {
  int max_arity = 0;        // 0: derive from current action positions
  long plain_budget = -1;   // stop enumerating after this many tested candidates
  long mutex_budget = -1;
  long plain_cap = -1;      // hard cap: exceeding raises BudgetExceeded
  long mutex_cap = -1;
  int repair_depth = 6;
  bool count_realizable_only = true;  // consistent-count counts only features usable as effects
};

struct FeatureCounters {
  long plain_tested = 0;
  long plain_consistent = 0;
  long mutex_tested = 0;
  long mutex_consistent = 0;
};

// Evidence-guided enumeration with memoized consistency tests. The engine is
// kept alive across learner iterations: counters accumulate and sets already
// tested are never re-tested.
class FeatureEngine {
 public:
  FeatureEngine(const TraceGraph& g, FeatureEngineConfig cfg);

  // One wave over the current argument positions. Newly consistent features
  // (not duplicates of earlier ones) are returned.
  std::vector<Feature> enumerate_plain();
  std::vector<Feature> enumerate_mutex();

  const FeatureCounters& counters() const { return counters_; }

  // Checks a single candidate (also used by tests and acceptance).
  std::shared_ptr<Feature> check_plain(const std::vector<ActionPattern>& patterns);
  std::shared_ptr<Feature> check_mutex(const std::vector<ActionPattern>& adds,
                                       const std::vector<ActionPattern>& dels);

 private:
  struct Occurrence {
    EdgeId edge;
    GroundAtom atom;
    uint64_t prefix;
  };

  std::vector<ActionPattern> patterns_of_arity(int k) const;
  std::vector<Occurrence> occurrences_of(const ActionPattern& p, int prefix_arity) const;
  bool instantiable(const ActionPattern& p) const;
  GroundAtom instantiate(const ActionPattern& p, const TraceGraph::Edge& e) const;

  // Gap analysis: consecutive same-pattern (plain) or same-prefix (mutex)
  // events in trace order with no feature event between them.
  struct Gap {
    uint32_t trace;
    uint32_t lo_step, hi_step;  // exclusive window of between-edges
    GroundAtom atom;            // plain: the repeated atom
    uint64_t prefix;            // mutex: the shared prefix
  };

  std::vector<Gap> plain_gaps(const std::vector<ActionPattern>& B) const;
  std::vector<Gap> mutex_gaps(const std::vector<ActionPattern>& adds,
                              const std::vector<ActionPattern>& dels, int k) const;

  // Closure: repeatedly add the fit covering the most gaps (ties by pattern
  // order). Returns false if some gap has no fit at all.
  bool close_plain(std::vector<ActionPattern>& B, int k);
  bool close_mutex_dels(const std::vector<ActionPattern>& adds, std::vector<ActionPattern>& dels,
                        int k);

  bool mirrors_existing(const std::vector<ActionPattern>& adds,
                        const std::vector<ActionPattern>& dels, int k) const;

  std::shared_ptr<Feature> finish_feature(Feature f);

  const TraceGraph* g_;
  FeatureEngineConfig cfg_;
  FeatureCounters counters_;
  std::set<std::string> tested_;            // canonical candidate keys
  std::vector<std::shared_ptr<Feature>> consistent_plain_;
  std::vector<std::shared_ptr<Feature>> consistent_mutex_;
  std::set<uint64_t> ledger_digests_;       // duplicate collapse
  std::vector<std::vector<EdgeId>> trace_edges_;  // per trace, in step order
};

// Replays a feature's effects over the graph and returns the forced ledger.
// Used for the feature itself after a successful check and by tests.
std::shared_ptr<AtomLedger> replay_feature(const TraceGraph& g, const Feature& f,
                                           bool* consistent = nullptr);

}  // namespace sps
