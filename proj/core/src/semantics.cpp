#include "stripsplus/semantics.hpp"

#include <algorithm>
#include <set>

namespace sps {

const std::vector<GroundAtom> AtomIndex::empty_;

AtomIndex::AtomIndex(const State& state, size_t num_preds) {
  by_pred_.resize(num_preds);
  by_pred_first_.resize(num_preds);
  for (GroundAtom a : state.atoms) by_pred_[a.pred()].push_back(a);
  for (size_t p = 0; p < num_preds; ++p) {
    if (by_pred_[p].empty()) continue;
    ObjectId max_first = 0;
    for (GroundAtom a : by_pred_[p]) max_first = std::max(max_first, a.arg(0));
    by_pred_first_[p].resize(max_first + 1);
    for (GroundAtom a : by_pred_[p]) by_pred_first_[p][a.arg(0)].push_back(a);
  }
}

const std::vector<GroundAtom>& AtomIndex::atoms_of(PredId p, ObjectId first) const {
  const auto& buckets = by_pred_first_[p];
  if (first >= buckets.size()) return empty_;
  return buckets[first];
}

bool AtomIndex::holds(GroundAtom a) const {
  const auto& v = by_pred_[a.pred()];
  return std::binary_search(v.begin(), v.end(), a);
}

namespace {

constexpr int kUnbound = -1;

// Binding environment: explicit args fixed, implicit filled stratum by
// stratum, existentials bound only within one atom-match attempt.
struct Env {
  const std::vector<ObjectId>* x;
  std::vector<int> z;  // kUnbound or object id
  std::vector<int> y;

  int lookup(VariableRef v) const {
    switch (v.cls) {
      case VarClass::Explicit: return (*x)[v.index - 1];
      case VarClass::Implicit: return z[v.index - 1];
      case VarClass::Existential: return v.index - 1 < y.size() ? y[v.index - 1] : kUnbound;
    }
    return kUnbound;
  }
};

// Matches conjunction atoms[i..] against the index, collecting the set of
// values the variable `collect` (an Implicit ref) takes across satisfying
// groundings. Early-exits once two distinct values are seen (enough to rule
// out determination) unless collect_all.
bool match_conj(const AtomIndex& idx, const std::vector<LiftedAtom>& atoms, size_t i, Env& env,
                VariableRef collect, std::set<ObjectId>* values, bool collect_all) {
  if (i == atoms.size()) {
    if (values) {
      int v = env.lookup(collect);
      values->insert(static_cast<ObjectId>(v));
      return collect_all ? false : values->size() >= 2;
    }
    return true;  // satisfiability only
  }
  const LiftedAtom& a = atoms[i];
  // Choose the candidate list: bucket by first arg when it is bound.
  int first = a.args.empty() ? kUnbound : env.lookup(a.args[0]);
  const auto& cands = (first != kUnbound && !a.args.empty())
                          ? idx.atoms_of(a.pred, static_cast<ObjectId>(first))
                          : idx.atoms_of(a.pred);
  for (GroundAtom g : cands) {
    // Try to unify; remember which variables this atom newly bound.
    std::vector<VariableRef> bound_here;
    bool ok = true;
    for (size_t k = 0; k < a.args.size() && ok; ++k) {
      VariableRef v = a.args[k];
      int cur = env.lookup(v);
      ObjectId o = g.arg(static_cast<int>(k));
      if (cur == kUnbound) {
        if (v.cls == VarClass::Implicit) {
          env.z[v.index - 1] = o;
        } else {
          if (env.y.size() < v.index) env.y.resize(v.index, kUnbound);
          env.y[v.index - 1] = o;
        }
        bound_here.push_back(v);
      } else if (cur != o) {
        ok = false;
      }
    }
    if (ok && match_conj(idx, atoms, i + 1, env, collect, values, collect_all)) return true;
    for (VariableRef v : bound_here) {
      if (v.cls == VarClass::Implicit)
        env.z[v.index - 1] = kUnbound;
      else
        env.y[v.index - 1] = kUnbound;
    }
  }
  return false;
}

bool eval_extra(const DomainSpec& d, const AtomIndex& idx, const std::vector<LiftedAtom>& atoms,
                Env& env) {
  for (const auto& a : atoms) {
    bool all_bound = true;
    for (const auto& v : a.args)
      if (env.lookup(v) == kUnbound) all_bound = false;
    if (all_bound) {
      std::vector<ObjectId> args;
      for (const auto& v : a.args) args.push_back(static_cast<ObjectId>(env.lookup(v)));
      bool h = idx.holds(GroundAtom::pack(a.pred, args));
      if (h == a.negated) return false;
    } else {
      // Existential atom (contains fresh y's): satisfiability check.
      if (a.negated) return false;  // negated existentials are not part of the language
      std::vector<LiftedAtom> one{a};
      Env probe = env;
      if (!match_conj(idx, one, 0, probe, VariableRef{VarClass::Implicit, 1}, nullptr, false))
        return false;
    }
  }
  return true;
}

}  // namespace

ZResult determine_z(const DomainSpec& d, const ActionSchema& s, const AtomIndex& idx,
                    const std::vector<ObjectId>& x_binding, size_t) {
  ZResult r;
  Env env;
  env.x = &x_binding;
  env.z.assign(s.subqueries.size(), kUnbound);
  for (const Subquery& q : s.subqueries) {
    VariableRef target{VarClass::Implicit, q.target};
    std::set<ObjectId> values;
    Env probe = env;
    match_conj(idx, q.atoms, 0, probe, target, &values, false);
    if (values.empty()) {
      r.status = ZStatus::NotApplicable;
      r.failed_stratum = q.target;
      return r;
    }
    if (values.size() > 1) {
      r.status = ZStatus::NotDetermined;
      r.failed_stratum = q.target;
      return r;
    }
    env.z[q.target - 1] = *values.begin();
  }
  for (int v : env.z) r.binding.push_back(static_cast<ObjectId>(v));
  return r;
}

ApplicableResult applicable(const DomainSpec& d, const ActionSchema& s, const AtomIndex& idx,
                            const std::vector<ObjectId>& x_binding, size_t num_objects) {
  ApplicableResult res;
  ZResult z = determine_z(d, s, idx, x_binding, num_objects);
  res.status = z.status;
  if (z.status != ZStatus::Ok) return res;
  Env env;
  env.x = &x_binding;
  env.z.assign(z.binding.begin(), z.binding.end());
  if (!eval_extra(d, idx, s.extra_precondition, env)) return res;
  res.applicable = true;
  res.z_binding = std::move(z.binding);
  return res;
}

GroundAtom ground_atom(const LiftedAtom& a, const std::vector<ObjectId>& x_binding,
                       const std::vector<ObjectId>& z_binding) {
  std::vector<ObjectId> args;
  args.reserve(a.args.size());
  for (const auto& v : a.args) {
    args.push_back(v.cls == VarClass::Explicit ? x_binding[v.index - 1]
                                               : z_binding[v.index - 1]);
  }
  return GroundAtom::pack(a.pred, args);
}

State apply(const DomainSpec& d, const ActionSchema& s, const State& state,
            const std::vector<ObjectId>& x_binding, const std::vector<ObjectId>& z_binding,
            bool strict) {
  std::vector<GroundAtom> dels, adds;
  for (const auto& a : s.del_effects) dels.push_back(ground_atom(a, x_binding, z_binding));
  for (const auto& a : s.add_effects) adds.push_back(ground_atom(a, x_binding, z_binding));
  std::sort(dels.begin(), dels.end());
  std::sort(adds.begin(), adds.end());

  if (strict) {
    for (GroundAtom g : dels)
      if (!state.holds(g))
        throw NotWellFormed(s.name + " deletes an atom that is already false");
    for (GroundAtom g : adds)
      if (state.holds(g) && !std::binary_search(dels.begin(), dels.end(), g))
        throw NotWellFormed(s.name + " adds an atom that is already true");
  }

  State out;
  out.atoms.reserve(state.atoms.size() + adds.size());
  std::set_difference(state.atoms.begin(), state.atoms.end(), dels.begin(), dels.end(),
                      std::back_inserter(out.atoms));
  std::vector<GroundAtom> merged;
  merged.reserve(out.atoms.size() + adds.size());
  std::set_union(out.atoms.begin(), out.atoms.end(), adds.begin(), adds.end(),
                 std::back_inserter(merged));
  out.atoms = std::move(merged);
  return out;
}

std::vector<GroundAction> applicable_actions(const DomainSpec& d, const State& state,
                                             size_t num_objects) {
  AtomIndex idx(state, d.predicates.size());
  std::vector<GroundAction> out;
  for (size_t si = 0; si < d.schemas.size(); ++si) {
    const ActionSchema& s = d.schemas[si];
    std::vector<ObjectId> binding(s.explicit_arity, 0);
    // Enumerate all explicit bindings (arity is small in STRIPS+ by design).
    size_t total = 1;
    for (int i = 0; i < s.explicit_arity; ++i) total *= num_objects;
    for (size_t code = 0; code < total; ++code) {
      size_t c = code;
      for (int i = 0; i < s.explicit_arity; ++i) {
        binding[i] = static_cast<ObjectId>(c % num_objects);
        c /= num_objects;
      }
      ApplicableResult r = applicable(d, s, idx, binding, num_objects);
      if (r.applicable) {
        GroundAction ga;
        ga.schema = static_cast<SchemaId>(si);
        ga.explicit_args = binding;
        ga.implicit_args = r.z_binding;
        out.push_back(std::move(ga));
      }
    }
  }
  return out;
}

std::vector<ObjectId> local_objects(const DomainSpec& d, const State& state, size_t num_objects) {
  std::set<ObjectId> locals;
  for (const GroundAction& ga : applicable_actions(d, state, num_objects)) {
    for (ObjectId o : ga.explicit_args) locals.insert(o);
    for (ObjectId o : ga.implicit_args) locals.insert(o);
  }
  return {locals.begin(), locals.end()};
}

std::vector<GroundAtom> local_atoms(const DomainSpec& d, const State& state, size_t num_objects) {
  std::vector<ObjectId> locals = local_objects(d, state, num_objects);
  std::vector<GroundAtom> out;
  for (GroundAtom a : state.atoms) {
    const PredicateInfo& p = d.predicates[a.pred()];
    for (int i = 0; i < p.arity; ++i) {
      if (std::binary_search(locals.begin(), locals.end(), a.arg(i))) {
        out.push_back(a);
        break;
      }
    }
  }
  return out;
}

}  // namespace sps
