#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stripsplus/domain.hpp"
#include "stripsplus/features.hpp"
#include "stripsplus/query.hpp"
#include "stripsplus/trace_graph.hpp"

namespace sps {

struct LearnerConfig {
  int d_max = 0;  // 0: no bound, stop at fixpoint
  FeatureEngineConfig features;
  QueryConfig query;
  bool local_mode = false;
  int jobs = 1;
};

struct UnliftableEffect : std::runtime_error {
  explicit UnliftableEffect(const std::string& m) : std::runtime_error(m) {}
};

// Where a learned predicate came from: an observation or an invented feature.
struct PredicateProvenance {
  enum Kind { Observed, InventedPlain, InventedMutex } kind;
  std::string source;  // observation name or feature key
};

struct LearnedDomain {
  DomainSpec spec;
  std::vector<PredicateProvenance> provenance;  // parallel to spec.predicates
  // Object names as used in the traces; learned specs keep the graph's table.
  std::vector<std::string> objects;
};

struct RunStats {
  long plain_tested = 0, plain_consistent = 0;
  long mutex_tested = 0, mutex_consistent = 0;
  int iterations = 0;
  int implicit_args_learned = 0;
  // Against sampler ground truth (when present): recovered and spurious args.
  int z_matching_hidden = -1;
  int z_spurious = -1;
};

struct LearnResult {
  LearnedDomain domain;
  RunStats stats;
};

// SYNTH+ (Alg. 2): alternate feature invention and query synthesis until
// fixpoint or d_max, then assemble effects and preconditions. With an empty
// observability declaration this is exactly SIFT+.
LearnResult synth_plus(TraceGraph& graph, const LearnerConfig& config);

// Observed-predicate effect diffing over state transitions; exposed for
// tests. Throws UnliftableEffect when a flip cannot be explained by any
// argument pattern at all occurrences.
struct ObservedEffects {
  std::vector<std::pair<SchemaId, LiftedAtom>> adds, dels;  // atoms over final predicate ids
};

}  // namespace sps
