#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stripsplus/ids.hpp"

namespace sps {

enum class VarClass : uint8_t { Explicit, Existential, Implicit };

// A variable occurrence inside a schema: x<i>, y<i> or z<i>, 1-based.
struct VariableRef {
  VarClass cls;
  uint8_t index;

  bool operator==(const VariableRef& o) const { return cls == o.cls && index == o.index; }
  bool operator<(const VariableRef& o) const {
    return cls != o.cls ? cls < o.cls : index < o.index;
  }
};

std::string var_name(VariableRef v);

struct LiftedAtom {
  PredId pred;
  bool negated = false;
  std::vector<VariableRef> args;

  bool operator==(const LiftedAtom& o) const {
    return pred == o.pred && negated == o.negated && args == o.args;
  }
};

// Conjunction of positive atoms that pins down implicit variable z<target>.
// Stratification: atoms may use x, y and z1..z<target>, and every atom's
// highest z index equals target.
struct Subquery {
  uint8_t target;
  std::vector<LiftedAtom> atoms;

  bool operator==(const Subquery& o) const { return target == o.target && atoms == o.atoms; }
};

struct ActionSchema {
  std::string name;
  uint8_t explicit_arity = 0;
  std::vector<Subquery> subqueries;          // one per implicit variable, in order
  std::vector<LiftedAtom> extra_precondition; // atoms over x,y only (negated allowed in learned domains)
  std::vector<LiftedAtom> add_effects;       // over x,z only
  std::vector<LiftedAtom> del_effects;

  int implicit_arity() const { return static_cast<int>(subqueries.size()); }
  int total_arity() const { return explicit_arity + implicit_arity(); }
};

struct PredicateInfo {
  std::string name;
  uint8_t arity = 0;
  bool is_static = false;
  // Learned mutex predicates carry their structural guarantee (at most one
  // true atom per prefix of the first arity-1 arguments) into the model.
  bool is_mutex = false;
};

struct DomainSpec {
  std::string name;
  std::vector<PredicateInfo> predicates;
  std::vector<ActionSchema> schemas;

  int predicate_id(const std::string& n) const;
  int schema_id(const std::string& n) const;
  const PredicateInfo& predicate(PredId p) const { return predicates.at(p); }
  const ActionSchema& schema(SchemaId s) const { return schemas.at(s); }

  // Throws SemanticError on arity mismatches, undeclared predicates,
  // y-variables in effects, unstratified subqueries and duplicate names.
  void validate() const;
};

struct Instance {
  std::string name;
  std::string domain_name;
  std::vector<std::string> objects;  // ObjectId = position
  std::vector<GroundAtom> init;      // sorted, closed world

  int object_id(const std::string& n) const;
};

// Closed-world state: the sorted set of true ground atoms (fluent + static).
struct State {
  std::vector<GroundAtom> atoms;

  bool holds(GroundAtom a) const;
  uint64_t hash() const { return fnv1a(atoms.data(), atoms.size() * sizeof(GroundAtom)); }
  bool operator==(const State& o) const { return atoms == o.atoms; }
};

struct GroundAction {
  SchemaId schema;
  std::vector<ObjectId> explicit_args;
  std::vector<ObjectId> implicit_args;  // may be empty in raw traces
};

struct SemanticError : std::runtime_error {
  explicit SemanticError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace sps
