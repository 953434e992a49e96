#pragma once

#include <string>

#include "stripsplus/semantics.hpp"
#include "stripsplus/trace.hpp"

namespace sps {

struct SamplerConfig {
  enum Method { RandomWalk, Bfs } method = Bfs;
  int traces = 6;
  int length = 1000;
  uint64_t seed = 1;
  int burn_in = 0;       // steps of seeded walk before the shared start state
  int negatives = 0;
  std::string id_prefix = "t";
};

struct DeadEnd : std::runtime_error {
  explicit DeadEnd(const std::string& m) : std::runtime_error(m) {}
};
struct Exhausted : std::runtime_error {
  explicit Exhausted(const std::string& m) : std::runtime_error(m) {}
};

struct SampleResult {
  TraceFile traces;
  GroundTruth ground_truth;
};

// Samples extended traces from the hidden domain. All traces share one start
// state (burn-in steps from init); revisited states are declared equal via
// eq lines, detected by full-state hashing, which the sampler may do because
// it owns the ground truth. The Bfs method biases every step toward the
// least-visited successor, approximating breadth-first coverage as a walk.
// Observations follow the declaration: full predicates dump all true atoms,
// local predicates only the true atoms local in the state.
SampleResult sample_traces(const DomainSpec& d, const Instance& inst, const ObsDecl& obs,
                           const SamplerConfig& cfg);

// Negative traces: an applicable prefix whose final action fails because a
// fluent precondition atom — established and then deleted inside the prefix —
// is false in the final hidden state. The falsifying atom and the deleting
// step index are recorded as the trace's witness.
SampleResult sample_negative_traces(const DomainSpec& d, const Instance& inst, const ObsDecl& obs,
                                    const SamplerConfig& cfg);

uint64_t domain_fingerprint(const DomainSpec& d);
uint64_t instance_fingerprint(const Instance& inst);

}  // namespace sps
