#include "stripsplus/domain.hpp"

#include <algorithm>
#include <set>

namespace sps {

std::string to_hex(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

std::string var_name(VariableRef v) {
  char c = v.cls == VarClass::Explicit ? 'x' : (v.cls == VarClass::Existential ? 'y' : 'z');
  return c + std::to_string(static_cast<int>(v.index));
}

int DomainSpec::predicate_id(const std::string& n) const {
  for (size_t i = 0; i < predicates.size(); ++i)
    if (predicates[i].name == n) return static_cast<int>(i);
  return -1;
}

int DomainSpec::schema_id(const std::string& n) const {
  for (size_t i = 0; i < schemas.size(); ++i)
    if (schemas[i].name == n) return static_cast<int>(i);
  return -1;
}

int Instance::object_id(const std::string& n) const {
  for (size_t i = 0; i < objects.size(); ++i)
    if (objects[i] == n) return static_cast<int>(i);
  return -1;
}

bool State::holds(GroundAtom a) const {
  return std::binary_search(atoms.begin(), atoms.end(), a);
}

namespace {

void check_atom(const DomainSpec& d, const ActionSchema& s, const LiftedAtom& a,
                bool allow_y, bool allow_z, const char* where) {
  if (a.pred >= d.predicates.size())
    throw SemanticError(s.name + ": undeclared predicate in " + where);
  if (a.args.size() != d.predicates[a.pred].arity)
    throw SemanticError(s.name + ": arity mismatch for " + d.predicates[a.pred].name + " in " + where);
  for (const auto& v : a.args) {
    switch (v.cls) {
      case VarClass::Explicit:
        if (v.index == 0 || v.index > s.explicit_arity)
          throw SemanticError(s.name + ": unknown explicit variable " + var_name(v));
        break;
      case VarClass::Existential:
        if (!allow_y) throw SemanticError(s.name + ": y-variable not allowed in " + where);
        break;
      case VarClass::Implicit:
        if (!allow_z || v.index == 0 || v.index > s.subqueries.size())
          throw SemanticError(s.name + ": bad implicit variable " + var_name(v) + " in " + where);
        break;
    }
  }
}

}  // namespace

void DomainSpec::validate() const {
  std::set<std::string> pnames;
  for (const auto& p : predicates) {
    if (!pnames.insert(p.name).second)
      throw SemanticError("duplicate predicate " + p.name);
    if (p.arity > kMaxAtomArity)
      throw SemanticError("predicate " + p.name + " exceeds max arity");
  }
  std::set<std::string> snames;
  for (const auto& s : schemas) {
    if (!snames.insert(s.name).second)
      throw SemanticError("duplicate schema " + s.name);

    std::vector<int> y_count;  // each y occurs exactly once across the precondition
    auto note_ys = [&y_count](const LiftedAtom& a) {
      for (const auto& v : a.args)
        if (v.cls == VarClass::Existential) {
          if (y_count.size() < v.index) y_count.resize(v.index, 0);
          y_count[v.index - 1]++;
        }
    };

    for (size_t qi = 0; qi < s.subqueries.size(); ++qi) {
      const Subquery& q = s.subqueries[qi];
      if (q.target != qi + 1)
        throw SemanticError(s.name + ": subqueries out of order");
      if (q.atoms.empty())
        throw SemanticError(s.name + ": unstratified (no atom determines z" +
                            std::to_string(q.target) + ")");
      bool target_seen = false;
      for (const auto& a : q.atoms) {
        if (a.negated) throw SemanticError(s.name + ": negated atom in subquery");
        check_atom(*this, s, a, true, true, "subquery");
        for (const auto& v : a.args) {
          if (v.cls == VarClass::Implicit) {
            if (v.index > q.target)
              throw SemanticError(s.name + ": unstratified (z" + std::to_string(v.index) +
                                  " used before its subquery)");
            if (v.index == q.target) target_seen = true;
          }
        }
        note_ys(a);
      }
      if (!target_seen)
        throw SemanticError(s.name + ": unstratified (subquery lacks z" +
                            std::to_string(q.target) + ")");
    }
    for (const auto& a : s.extra_precondition) {
      check_atom(*this, s, a, true, true, "precondition");
      note_ys(a);
    }
    for (int c : y_count)
      if (c > 1) throw SemanticError(s.name + ": existential variable occurs more than once");
    for (const auto& a : s.add_effects) {
      if (a.negated) throw SemanticError(s.name + ": negated add effect");
      check_atom(*this, s, a, false, true, "effect");
    }
    for (const auto& a : s.del_effects) {
      if (a.negated) throw SemanticError(s.name + ": negated delete effect");
      check_atom(*this, s, a, false, true, "effect");
    }
  }
}

}  // namespace sps
