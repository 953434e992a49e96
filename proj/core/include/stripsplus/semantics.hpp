#pragma once

#include <optional>
#include <vector>

#include "stripsplus/domain.hpp"

namespace sps {

// Per-predicate index over a state's true atoms, bucketed by first argument.
// Subquery evaluation is a backtracking join over these buckets.
class AtomIndex {
 public:
  AtomIndex(const State& state, size_t num_preds);

  const std::vector<GroundAtom>& atoms_of(PredId p) const { return by_pred_[p]; }
  const std::vector<GroundAtom>& atoms_of(PredId p, ObjectId first) const;
  bool holds(GroundAtom a) const;

 private:
  std::vector<std::vector<GroundAtom>> by_pred_;
  std::vector<std::vector<std::vector<GroundAtom>>> by_pred_first_;
  static const std::vector<GroundAtom> empty_;
};

enum class ZStatus : uint8_t { Ok, NotApplicable, NotDetermined };

struct ZResult {
  ZStatus status = ZStatus::Ok;
  std::vector<ObjectId> binding;  // valid when status == Ok
  int failed_stratum = -1;        // 1-based subquery index on failure
};

// Evaluates the schema's subqueries in stratified order. Each stratum must
// have at least one satisfying grounding and all groundings must agree on
// z_i; disagreement is NotDetermined (a malformed STRIPS+ domain).
ZResult determine_z(const DomainSpec& d, const ActionSchema& s, const AtomIndex& idx,
                    const std::vector<ObjectId>& x_binding, size_t num_objects);

// determine_z + extra-precondition satisfiability. NotDetermined is surfaced
// through the ZResult, never collapsed to false.
struct ApplicableResult {
  bool applicable = false;
  ZStatus status = ZStatus::Ok;
  std::vector<ObjectId> z_binding;
};
ApplicableResult applicable(const DomainSpec& d, const ActionSchema& s, const AtomIndex& idx,
                            const std::vector<ObjectId>& x_binding, size_t num_objects);

struct NotWellFormed : std::runtime_error {
  explicit NotWellFormed(const std::string& m) : std::runtime_error(m) {}
};
struct NotApplicableError : std::runtime_error {
  explicit NotApplicableError(const std::string& m) : std::runtime_error(m) {}
};

// Successor = (atoms \ grounded deletes) + grounded adds. With strict=true a
// well-formedness violation (add of a true atom, delete of a false atom)
// throws; otherwise it is applied silently.
State apply(const DomainSpec& d, const ActionSchema& s, const State& state,
            const std::vector<ObjectId>& x_binding, const std::vector<ObjectId>& z_binding,
            bool strict = true);

GroundAtom ground_atom(const LiftedAtom& a, const std::vector<ObjectId>& x_binding,
                       const std::vector<ObjectId>& z_binding);

// All ground actions applicable in the state, fully bound.
std::vector<GroundAction> applicable_actions(const DomainSpec& d, const State& state,
                                             size_t num_objects);

// Objects appearing as explicit or implicit arguments of applicable ground
// actions; the basis of local observability.
std::vector<ObjectId> local_objects(const DomainSpec& d, const State& state, size_t num_objects);

// True local atoms: true atoms mentioning at least one local object.
std::vector<GroundAtom> local_atoms(const DomainSpec& d, const State& state, size_t num_objects);

}  // namespace sps
