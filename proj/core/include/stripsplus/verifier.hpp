#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stripsplus/domain.hpp"
#include "stripsplus/trace.hpp"

namespace sps {

// A negative classification carries its witness: action a_j deletes (or, for
// a mutex clash, establishes) the precondition p that action a_i needs with
// nothing re-adding it in between.
struct NegativeEvidence {
  int deleter_step;   // a_j
  int blocked_step;   // a_i
  std::string atom;   // p, rendered with object names
  enum Kind { DeletedPrecondition, MutexClash } kind;
};

struct TraceVerdict {
  enum Kind { Positive, Negative, Unresolved } kind = Positive;
  std::optional<NegativeEvidence> evidence;
  std::string detail;
};

// Classifies one trace under the learned domain. Implicit arguments are
// re-derived by replaying the learned subqueries over a ledger built from
// the trace's own actions and observations; hidden states are never used.
TraceVerdict classify_trace(const DomainSpec& learned, const TraceBlock& trace);

struct VerificationReport {
  int positives_total = 0, positives_correct = 0;
  int negatives_total = 0, negatives_correct = 0;
  int unresolved = 0;
  std::vector<std::pair<std::string, TraceVerdict>> verdicts;

  int total() const { return positives_total + negatives_total; }
  int correct() const { return positives_correct + negatives_correct; }
  // Percentage of correctly classified traces; -1 when no traces were given.
  double rate() const {
    return total() == 0 ? -1.0 : 100.0 * correct() / total();
  }
  std::string text() const;
  std::string csv() const;
};

VerificationReport verify(const DomainSpec& learned, const TraceFile& positives,
                          const TraceFile& negatives);

}  // namespace sps
