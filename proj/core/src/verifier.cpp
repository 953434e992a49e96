#include "stripsplus/verifier.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "stripsplus/semantics.hpp"

namespace sps {

namespace {

// Replay ledger: per ground atom the latest action-established value (with
// the establishing step as witness), plus trace observations as a fallback
// truth source that can never serve as a deletion witness.
struct ReplayLedger {
  struct Entry {
    bool value;
    int step;  // action index that established it
  };
  std::map<uint64_t, Entry> action_values;

  // Mutex families: prefix -> holder. Tracks the structural at-most-one.
  struct Family {
    enum State { Unknown, Empty, Holds } state = Unknown;
    ObjectId holder = 0;
    bool holder_known = false;
    int step = -1;
  };
  std::map<uint64_t, Family> families;  // key: prefix bits incl. predicate

  // Per-node observations, resolved lazily: full predicates closed-world.
  const DomainSpec* d;
  std::vector<std::vector<GroundAtom>> node_obs;  // sorted per node index
  std::vector<bool> full_pred;                    // by PredId: closed world at observed nodes

  // Returns value and, for action-established values, the establishing step.
  struct Lookup {
    int value;  // 1 true, 0 false, -1 unknown
    int witness_step = -1;
  };
  Lookup lookup(GroundAtom a, int node_index) const {
    auto it = action_values.find(a.bits);
    if (it != action_values.end()) return {it->second.value ? 1 : 0, it->second.step};
    if (node_index >= 0 && node_index < static_cast<int>(node_obs.size())) {
      const auto& v = node_obs[node_index];
      if (std::binary_search(v.begin(), v.end(), a)) return {1, -1};
      if (full_pred[a.pred()] && !v.empty()) {
        // Closed world holds only if this predicate was observed at all here;
        // emptiness of the whole node means "no observations", not falsity.
        bool pred_observed = false;
        for (GroundAtom o : v)
          if (o.pred() == a.pred()) pred_observed = true;
        if (pred_observed) return {0, -1};
      }
    }
    if (d->predicates[a.pred()].is_static) {
      // Statics are frame-constant: any node's observation decides.
      for (const auto& v : node_obs) {
        if (std::binary_search(v.begin(), v.end(), a)) return {1, -1};
        for (GroundAtom o : v)
          if (o.pred() == a.pred()) return {0, -1};
      }
    }
    return {-1, -1};
  }
};

uint64_t family_key(GroundAtom a, int arity) {
  if (arity <= 0) return a.bits >> 48 << 48;
  uint64_t mask = ~(0xfffull << (12 * (4 - arity)));
  return a.bits & mask;
}

}  // namespace

TraceVerdict classify_trace(const DomainSpec& learned, const TraceBlock& trace) {
  TraceVerdict out;

  // Intern trace objects.
  SymbolTable objects;
  for (const auto& st : trace.steps)
    for (const auto& a : st.args) objects.intern(a);
  for (const auto& node : trace.node_obs)
    for (const auto& [pred, args] : node)
      for (const auto& a : args) objects.intern(a);

  ReplayLedger ledger;
  ledger.d = &learned;
  ledger.full_pred.assign(learned.predicates.size(), true);
  ledger.node_obs.resize(trace.node_ids.size());
  for (size_t ni = 0; ni < trace.node_obs.size(); ++ni) {
    for (const auto& [pred, args] : trace.node_obs[ni]) {
      int pid = learned.predicate_id(pred);
      if (pid < 0) continue;  // predicate unknown to the learned model
      std::vector<ObjectId> oa;
      for (const auto& a : args) oa.push_back(static_cast<ObjectId>(objects.intern(a)));
      ledger.node_obs[ni].push_back(GroundAtom::pack(static_cast<PredId>(pid), oa));
    }
    std::sort(ledger.node_obs[ni].begin(), ledger.node_obs[ni].end());
  }

  auto atom_text = [&](GroundAtom a) {
    std::string s = learned.predicates[a.pred()].name;
    s += "(";
    for (int i = 0; i < learned.predicates[a.pred()].arity; ++i) {
      if (i) s += ",";
      s += objects.name(a.arg(i));
    }
    return s + ")";
  };

  for (int step = 0; step < static_cast<int>(trace.steps.size()); ++step) {
    const TraceStep& ts = trace.steps[step];
    int sid = learned.schema_id(ts.action);
    if (sid < 0) {
      out.kind = TraceVerdict::Unresolved;
      out.detail = "action " + ts.action + " not in the learned domain";
      return out;
    }
    const ActionSchema& schema = learned.schemas[sid];
    if (ts.args.size() != schema.explicit_arity) {
      out.kind = TraceVerdict::Unresolved;
      out.detail = "arity mismatch for " + ts.action;
      return out;
    }
    std::vector<ObjectId> x_binding;
    for (const auto& a : ts.args) x_binding.push_back(static_cast<ObjectId>(objects.intern(a)));

    // Resolve implicit arguments by replaying the subqueries.
    std::vector<ObjectId> z_binding;
    std::optional<NegativeEvidence> negative;
    bool unresolved = false;

    for (const Subquery& q : schema.subqueries) {
      // Join over known-true groundings; mutex families contribute holders.
      std::set<ObjectId> candidates;
      std::optional<NegativeEvidence> witness;

      std::function<void(size_t, std::vector<int>&)> join = [&](size_t ai,
                                                                std::vector<int>& env) {
        if (ai == q.atoms.size()) {
          if (env.back() >= 0) candidates.insert(static_cast<ObjectId>(env.back()));
          return;
        }
        const LiftedAtom& atom = q.atoms[ai];
        const PredicateInfo& pinfo = learned.predicates[atom.pred];
        // Resolve bound positions; target position index tracked separately.
        auto term_of = [&](const VariableRef& v) -> int {
          if (v.cls == VarClass::Explicit) return x_binding[v.index - 1];
          if (v.cls == VarClass::Implicit) {
            if (v.index - 1 < z_binding.size()) return z_binding[v.index - 1];
            if (v.index == q.target) return env.back();
            return -1;
          }
          return -2;  // existential
        };

        if (pinfo.is_mutex) {
          // If the prefix is fully bound, the family decides.
          bool prefix_bound = true;
          std::vector<ObjectId> prefix_args;
          for (size_t i = 0; i + 1 < atom.args.size(); ++i) {
            int v = term_of(atom.args[i]);
            if (v < 0) prefix_bound = false;
            else prefix_args.push_back(static_cast<ObjectId>(v));
          }
          if (prefix_bound) {
            GroundAtom probe = GroundAtom::pack(atom.pred, prefix_args.data(),
                                                static_cast<int>(prefix_args.size()));
            uint64_t key = probe.bits;
            auto fit = ledger.families.find(key);
            if (fit != ledger.families.end()) {
              const auto& fam = fit->second;
              if (fam.state == ReplayLedger::Family::Holds && fam.holder_known) {
                int last = term_of(atom.args.back());
                if (last == -1 || last == static_cast<int>(fam.holder) || last == -2) {
                  std::vector<int> env2 = env;
                  if (atom.args.back().cls == VarClass::Implicit &&
                      atom.args.back().index == q.target && env2.back() < 0)
                    env2.back() = fam.holder;
                  join(ai + 1, env2);
                }
                return;
              }
              if (fam.state == ReplayLedger::Family::Empty) {
                // The unique matching atom was deleted and never re-added.
                if (!witness) {
                  std::vector<ObjectId> full = prefix_args;
                  full.push_back(fam.holder_known ? fam.holder : 0);
                  witness = NegativeEvidence{
                      fam.step, step,
                      atom_text(GroundAtom::pack(atom.pred, full.data(),
                                                 static_cast<int>(full.size()))),
                      NegativeEvidence::DeletedPrecondition};
                }
                return;
              }
            }
            // Family unknown: fall through to generic matching below.
          }
        }

        // Generic: enumerate known-true atoms of this predicate.
        for (const auto& [bits, entry] : ledger.action_values) {
          if (!entry.value) continue;
          GroundAtom g{bits};
          if (g.pred() != atom.pred) continue;
          std::vector<int> env2 = env;
          bool ok = true;
          for (size_t i = 0; i < atom.args.size() && ok; ++i) {
            const VariableRef& v = atom.args[i];
            int cur = v.cls == VarClass::Existential ? -2 : term_of(v);
            if (v.cls == VarClass::Implicit && v.index == q.target) cur = env2.back();
            if (cur == -1 || (cur == -2 && v.cls == VarClass::Existential)) {
              if (v.cls == VarClass::Implicit && v.index == q.target)
                env2.back() = g.arg(static_cast<int>(i));
              // existentials accept anything
            } else if (cur >= 0 && cur != g.arg(static_cast<int>(i))) {
              ok = false;
            }
          }
          if (ok) join(ai + 1, env2);
        }
        // Observed atoms at the current node as a truth source.
        int node_index = step;  // node before this action
        if (node_index < static_cast<int>(ledger.node_obs.size())) {
          for (GroundAtom g : ledger.node_obs[node_index]) {
            if (g.pred() != atom.pred) continue;
            if (ledger.action_values.count(g.bits)) continue;  // action value wins
            std::vector<int> env2 = env;
            bool ok = true;
            for (size_t i = 0; i < atom.args.size() && ok; ++i) {
              const VariableRef& v = atom.args[i];
              int cur = v.cls == VarClass::Existential ? -2 : term_of(v);
              if (v.cls == VarClass::Implicit && v.index == q.target) cur = env2.back();
              if (cur == -1) {
                if (v.cls == VarClass::Implicit && v.index == q.target)
                  env2.back() = g.arg(static_cast<int>(i));
              } else if (cur >= 0 && cur != g.arg(static_cast<int>(i))) {
                ok = false;
              }
            }
            if (ok) join(ai + 1, env2);
          }
        }
        // Statics resolved from any node's observations.
        if (pinfo.is_static) {
          for (size_t ni = 0; ni < ledger.node_obs.size(); ++ni) {
            if (static_cast<int>(ni) == step) continue;
            for (GroundAtom g : ledger.node_obs[ni]) {
              if (g.pred() != atom.pred) continue;
              std::vector<int> env2 = env;
              bool ok = true;
              for (size_t i = 0; i < atom.args.size() && ok; ++i) {
                const VariableRef& v = atom.args[i];
                int cur = v.cls == VarClass::Existential ? -2 : term_of(v);
                if (v.cls == VarClass::Implicit && v.index == q.target) cur = env2.back();
                if (cur == -1) {
                  if (v.cls == VarClass::Implicit && v.index == q.target)
                    env2.back() = g.arg(static_cast<int>(i));
                } else if (cur >= 0 && cur != g.arg(static_cast<int>(i))) {
                  ok = false;
                }
              }
              if (ok) join(ai + 1, env2);
            }
          }
        }
      };

      std::vector<int> env{-1};  // env.back() = target binding
      join(0, env);

      if (candidates.size() == 1) {
        z_binding.push_back(*candidates.begin());
        continue;
      }
      if (witness) {
        negative = witness;
        break;
      }
      unresolved = true;
      out.detail = "z" + std::to_string(q.target) + " of " + schema.name +
                   (candidates.empty() ? " has no known binding" : " is ambiguous");
      break;
    }

    if (negative) {
      out.kind = TraceVerdict::Negative;
      out.evidence = negative;
      return out;
    }
    if (unresolved) {
      out.kind = TraceVerdict::Unresolved;
      return out;
    }

    // Preconditions: deleted positives and re-added negatives are witnesses.
    auto check_literal = [&](const LiftedAtom& a) -> bool {
      bool grounded = true;
      for (const auto& v : a.args)
        if (v.cls == VarClass::Existential) grounded = false;
      if (!grounded) return true;  // existential: satisfiability not refutable here
      GroundAtom g = ground_atom(a, x_binding, z_binding);
      auto lk = ledger.lookup(g, step);
      if (!a.negated && lk.value == 0 && lk.witness_step >= 0) {
        out.kind = TraceVerdict::Negative;
        out.evidence = NegativeEvidence{lk.witness_step, step, atom_text(g),
                                        NegativeEvidence::DeletedPrecondition};
        return false;
      }
      if (a.negated && lk.value == 1 && lk.witness_step >= 0) {
        out.kind = TraceVerdict::Negative;
        out.evidence = NegativeEvidence{lk.witness_step, step, "not " + atom_text(g),
                                        NegativeEvidence::DeletedPrecondition};
        return false;
      }
      return true;
    };
    for (const Subquery& q : schema.subqueries)
      for (const auto& a : q.atoms)
        if (!check_literal(a)) return out;
    for (const auto& a : schema.extra_precondition)
      if (!check_literal(a)) return out;

    // Apply effects. Mutex adds clash when the family already holds another
    // object; that is the learned model's hand-emptiness style rejection.
    for (const auto& eff : schema.add_effects) {
      GroundAtom g = ground_atom(eff, x_binding, z_binding);
      const PredicateInfo& pinfo = learned.predicates[g.pred()];
      if (pinfo.is_mutex) {
        uint64_t key = family_key(g, pinfo.arity);
        auto& fam = ledger.families[key];
        if (fam.state == ReplayLedger::Family::Holds && fam.holder_known &&
            fam.holder != g.arg(pinfo.arity - 1)) {
          std::vector<ObjectId> full;
          for (int i = 0; i + 1 < pinfo.arity; ++i) full.push_back(g.arg(i));
          full.push_back(fam.holder);
          out.kind = TraceVerdict::Negative;
          out.evidence = NegativeEvidence{
              fam.step, step,
              atom_text(GroundAtom::pack(g.pred(), full.data(), static_cast<int>(full.size()))),
              NegativeEvidence::MutexClash};
          return out;
        }
        fam.state = ReplayLedger::Family::Holds;
        fam.holder = g.arg(pinfo.arity - 1);
        fam.holder_known = true;
        fam.step = step;
      }
      ledger.action_values[g.bits] = {true, step};
    }
    for (const auto& eff : schema.del_effects) {
      GroundAtom g = ground_atom(eff, x_binding, z_binding);
      const PredicateInfo& pinfo = learned.predicates[g.pred()];
      if (pinfo.is_mutex) {
        uint64_t key = family_key(g, pinfo.arity);
        auto& fam = ledger.families[key];
        fam.state = ReplayLedger::Family::Empty;
        fam.holder = g.arg(pinfo.arity - 1);
        fam.holder_known = true;
        fam.step = step;
      }
      ledger.action_values[g.bits] = {false, step};
    }
  }
  out.kind = TraceVerdict::Positive;
  return out;
}

std::string VerificationReport::text() const {
  std::ostringstream os;
  os << "verification: " << correct() << "/" << total() << " correct";
  if (total() > 0) os << " (" << rate() << "%)";
  os << "\n  positives " << positives_correct << "/" << positives_total;
  os << "\n  negatives " << negatives_correct << "/" << negatives_total;
  if (unresolved > 0) os << "\n  unresolved " << unresolved;
  os << "\n";
  for (const auto& [id, v] : verdicts) {
    os << "  " << id << ": "
       << (v.kind == TraceVerdict::Positive ? "positive"
           : v.kind == TraceVerdict::Negative ? "negative"
                                              : "unresolved");
    if (v.evidence) {
      os << " (a" << v.evidence->deleter_step << " removes " << v.evidence->atom
         << " needed by a" << v.evidence->blocked_step << ")";
    }
    os << "\n";
  }
  return os.str();
}

std::string VerificationReport::csv() const {
  std::ostringstream os;
  os << "trace,verdict,deleter,blocked,atom\n";
  for (const auto& [id, v] : verdicts) {
    os << id << ","
       << (v.kind == TraceVerdict::Positive ? "positive"
           : v.kind == TraceVerdict::Negative ? "negative"
                                              : "unresolved");
    if (v.evidence)
      os << "," << v.evidence->deleter_step << "," << v.evidence->blocked_step << ","
         << v.evidence->atom;
    else
      os << ",,,";
    os << "\n";
  }
  return os.str();
}

VerificationReport verify(const DomainSpec& learned, const TraceFile& positives,
                          const TraceFile& negatives) {
  VerificationReport r;
  for (const auto& b : positives.blocks) {
    TraceVerdict v = classify_trace(learned, b);
    ++r.positives_total;
    if (v.kind == TraceVerdict::Positive) ++r.positives_correct;
    if (v.kind == TraceVerdict::Unresolved) ++r.unresolved;
    r.verdicts.emplace_back(b.id + "+", v);
  }
  for (const auto& b : negatives.blocks) {
    TraceVerdict v = classify_trace(learned, b);
    ++r.negatives_total;
    if (v.kind == TraceVerdict::Negative) ++r.negatives_correct;
    if (v.kind == TraceVerdict::Unresolved) ++r.unresolved;
    r.verdicts.emplace_back(b.id + "-", v);
  }
  return r;
}

}  // namespace sps
