#include "stripsplus/learner.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <set>
#include <sstream>

namespace sps {

namespace {

// Maps a pattern slot to the final schema variable (explicit or implicit).
VariableRef slot_var(const TraceGraph::SchemaInfo& s, int slot) {
  if (slot <= s.explicit_arity) return {VarClass::Explicit, static_cast<uint8_t>(slot)};
  return {VarClass::Implicit, static_cast<uint8_t>(slot - s.explicit_arity)};
}

struct PoolState {
  std::vector<PoolPredicate> pool;
  std::deque<Feature> invented;  // stable addresses for PoolPredicate::feature
  std::vector<std::string> invented_names;
};

}  // namespace

LearnResult synth_plus(TraceGraph& graph, const LearnerConfig& config) {
  LearnResult out;
  FeatureEngine engine(graph, config.features);

  PoolState ps;
  // Observed predicates enter the pool first, declaration order; statics are
  // query material but never gain effects or feature treatment.
  bool any_local = false;
  {
    int obs_id = 0;
    for (const auto& e : graph.obs_decl().entries) {
      if (e.mode == ObsMode::Hidden) continue;
      PoolPredicate p;
      p.name = e.pred;
      p.arity = e.arity;
      p.kind = e.mode == ObsMode::Full ? PoolPredicate::ObservedFull : PoolPredicate::ObservedLocal;
      if (e.mode == ObsMode::Local) any_local = true;
      p.obs_pred = obs_id++;
      p.is_static = false;  // refined below from frame constancy
      ps.pool.push_back(std::move(p));
    }
  }
  bool local_mode = config.local_mode || any_local;

  // A fully observed predicate whose atom set never changes across any edge
  // is frame-constant; treat as static (no effects, no negative literals).
  {
    for (auto& p : ps.pool) {
      if (p.kind != PoolPredicate::ObservedFull) continue;
      bool constant = true;
      for (const auto& e : graph.edges()) {
        auto slice = [&](NodeId n) {
          std::vector<GroundAtom> s;
          for (GroundAtom a : graph.observations(n))
            if (a.pred() == p.obs_pred) s.push_back(a);
          return s;
        };
        if (slice(e.src) != slice(e.dst)) {
          constant = false;
          break;
        }
      }
      p.is_static = constant;
    }
  }

  // Learned implicit arguments per schema, with the accepted query.
  std::vector<std::vector<QueryConjunction>> schema_queries(graph.schemas().size());

  int d = 0;
  bool updated = true;
  while (updated && (config.d_max == 0 || d < config.d_max)) {
    updated = false;
    ++d;

    // Feature invention over the current argument positions.
    std::vector<Feature> fresh_plain = engine.enumerate_plain();
    std::vector<Feature> fresh_mutex = engine.enumerate_mutex();
    auto adopt = [&](std::vector<Feature>& fs, bool mutex) {
      for (Feature& f : fs) {
        ps.invented.push_back(std::move(f));
        PoolPredicate p;
        p.name = "f" + std::to_string(ps.invented.size());
        p.arity = static_cast<uint8_t>(ps.invented.back().arity);
        p.kind = mutex ? PoolPredicate::LearnedMutex : PoolPredicate::LearnedPlain;
        p.feature = &ps.invented.back();
        ps.pool.push_back(std::move(p));
        updated = true;
      }
    };
    adopt(fresh_plain, false);
    adopt(fresh_mutex, true);

    // Query synthesis: per schema in name order, keep determining fresh z's
    // with distinct denotations until expansion yields nothing new.
    for (SchemaId s = 0; s < graph.schemas().size(); ++s) {
      for (;;) {
        QueryEvaluator eval(graph, ps.pool, local_mode);
        int prev = static_cast<int>(schema_queries[s].size());
        auto filter = [&](const QueryConjunction& q) {
          return distinct_denotation(eval, s, q);
        };
        auto conj = expand(eval, s, prev, config.query, filter);
        if (!conj) break;

        // Annotate every occurrence with the new binding.
        for (EdgeId ei : graph.occurrences(s)) {
          auto b = eval.target_binding(*conj, ei);
          if (!b) throw std::logic_error("determined query failed to bind during annotation");
          graph.edges_mutable()[ei].implicit_args.push_back(*b);
        }
        graph.schemas_mutable()[s].implicit_count++;
        schema_queries[s].push_back(*conj);
        updated = true;
      }
    }
  }
  out.stats.iterations = d;

  // -------------------------------------------------------------------------
  // Assembly into a STRIPS+ domain.

  DomainSpec spec;
  spec.name = "learned";
  std::vector<PredicateProvenance> prov;

  // Final predicate ids: observed first (declaration order), then invented.
  std::map<int, PredId> pool_to_pred;
  for (size_t pi = 0; pi < ps.pool.size(); ++pi) {
    const PoolPredicate& p = ps.pool[pi];
    PredicateInfo info;
    info.name = p.name;
    info.arity = p.arity;
    info.is_static = p.is_static;
    info.is_mutex = p.kind == PoolPredicate::LearnedMutex;
    pool_to_pred[static_cast<int>(pi)] = static_cast<PredId>(spec.predicates.size());
    spec.predicates.push_back(info);
    PredicateProvenance pp;
    bool observed =
        p.kind == PoolPredicate::ObservedFull || p.kind == PoolPredicate::ObservedLocal;
    pp.kind = observed ? PredicateProvenance::Observed
                       : (p.kind == PoolPredicate::LearnedMutex
                              ? PredicateProvenance::InventedMutex
                              : PredicateProvenance::InventedPlain);
    pp.source = observed ? p.name : p.feature->key(graph);
    prov.push_back(pp);
  }

  QueryEvaluator eval(graph, ps.pool, local_mode);

  // Schemas with their learned subqueries.
  for (SchemaId s = 0; s < graph.schemas().size(); ++s) {
    const auto& info = graph.schemas()[s];
    ActionSchema schema;
    schema.name = info.name;
    schema.explicit_arity = info.explicit_arity;
    for (size_t qi = 0; qi < schema_queries[s].size(); ++qi) {
      Subquery q;
      q.target = static_cast<uint8_t>(qi + 1);
      for (const QueryAtom& qa : schema_queries[s][qi]) {
        LiftedAtom a;
        a.pred = pool_to_pred[qa.pool_pred];
        int y_next = 1;
        for (const QueryTerm& t : qa.terms) {
          switch (t.kind) {
            case QueryTerm::X: a.args.push_back({VarClass::Explicit, t.index}); break;
            case QueryTerm::Z: a.args.push_back({VarClass::Implicit, t.index}); break;
            case QueryTerm::Target:
              a.args.push_back({VarClass::Implicit, static_cast<uint8_t>(qi + 1)});
              break;
            case QueryTerm::Y:
              a.args.push_back({VarClass::Existential, static_cast<uint8_t>(y_next++)});
              break;
          }
        }
        q.atoms.push_back(std::move(a));
      }
      schema.subqueries.push_back(std::move(q));
    }
    spec.schemas.push_back(std::move(schema));
  }

  // Effects from invented features.
  for (size_t fi = 0; fi < ps.invented.size(); ++fi) {
    const Feature& f = ps.invented[fi];
    PredId pred = pool_to_pred[static_cast<int>(ps.pool.size() - ps.invented.size() + fi)];
    // pool index of this feature: observed count + fi
    for (const ActionPattern& p : f.adds) {
      LiftedAtom a;
      a.pred = pred;
      for (uint8_t slot : p.slots) a.args.push_back(slot_var(graph.schemas()[p.schema], slot));
      spec.schemas[p.schema].add_effects.push_back(std::move(a));
    }
    if (!f.is_mutex) {
      for (const ActionPattern& p : f.dels) {
        LiftedAtom a;
        a.pred = pred;
        for (uint8_t slot : p.slots) a.args.push_back(slot_var(graph.schemas()[p.schema], slot));
        spec.schemas[p.schema].del_effects.push_back(std::move(a));
      }
    } else {
      // Mutex delete: the removed atom's last argument must match one fixed
      // argument position at every occurrence (often a z introduced by the
      // query f(prefix, z)).
      for (const ActionPattern& p : f.dels) {
        int chosen = -1;
        int positions = graph.schemas()[p.schema].positions();
        for (int idx = 1; idx <= positions && chosen < 0; ++idx) {
          bool all = true;
          for (EdgeId ei : graph.occurrences(p.schema)) {
            const auto& e = graph.edges()[ei];
            ObjectId args[kMaxAtomArity] = {0, 0, 0, 0};
            for (size_t i = 0; i < p.slots.size(); ++i) args[i] = e.position(p.slots[i]);
            GroundAtom prefix = GroundAtom::pack(0, args, static_cast<int>(p.slots.size()));
            int grp = f.ledger->group_of_prefix(prefix.bits);
            ObjectId deleted = 0;
            bool known = false;
            if (grp >= 0) {
              for (int32_t ai : f.ledger->group_atoms(grp)) {
                if (f.ledger->value(ai, e.src) == Tri::True) {
                  deleted = f.ledger->tracked()[ai].arg(f.arity - 1);
                  known = true;
                }
              }
            }
            if (!known || e.position(idx) != deleted) {
              all = false;
              break;
            }
          }
          if (all) chosen = idx;
        }
        if (chosen < 0) continue;  // unliftable delete: feature's delete dropped
        LiftedAtom a;
        a.pred = pred;
        for (uint8_t slot : p.slots) a.args.push_back(slot_var(graph.schemas()[p.schema], slot));
        a.args.push_back(slot_var(graph.schemas()[p.schema], chosen));
        spec.schemas[p.schema].del_effects.push_back(a);
        // The delete's precondition: the same atom must hold.
        int maxz = 0;
        for (const auto& v : a.args)
          if (v.cls == VarClass::Implicit) maxz = std::max(maxz, static_cast<int>(v.index));
        if (maxz > 0) {
          auto& atoms = spec.schemas[p.schema].subqueries[maxz - 1].atoms;
          if (std::find(atoms.begin(), atoms.end(), a) == atoms.end()) atoms.push_back(a);
        } else {
          auto& atoms = spec.schemas[p.schema].extra_precondition;
          if (std::find(atoms.begin(), atoms.end(), a) == atoms.end()) atoms.push_back(a);
        }
      }
    }
  }

  // Effects over observed fluents: lifted diffs per transition.
  for (size_t pi = 0; pi < ps.pool.size(); ++pi) {
    const PoolPredicate& p = ps.pool[pi];
    if (p.kind != PoolPredicate::ObservedFull && p.kind != PoolPredicate::ObservedLocal) continue;
    if (p.is_static) continue;
    PredId pred = pool_to_pred[static_cast<int>(pi)];

    for (SchemaId s = 0; s < graph.schemas().size(); ++s) {
      const auto& occ = graph.occurrences(s);
      if (occ.empty()) continue;
      int positions = graph.schemas()[s].positions();

      // A flip is confirmed only when both endpoint values are known.
      auto flips_at = [&](EdgeId ei, bool add) {
        const auto& e = graph.edges()[ei];
        std::vector<GroundAtom> out_flips;
        NodeId from = add ? e.src : e.dst;
        NodeId to = add ? e.dst : e.src;
        for (GroundAtom a : graph.observations(to)) {
          if (a.pred() != p.obs_pred) continue;
          GroundAtom bare{a.bits & 0x0000ffffffffffffull};
          if (eval.lookup(static_cast<int>(pi), bare, from) == Tri::False) out_flips.push_back(bare);
        }
        return out_flips;
      };

      for (bool add : {true, false}) {
        // Candidate lifted atoms from the first occurrence's flips.
        std::set<std::vector<uint8_t>> cands;
        bool first = true;
        for (EdgeId ei : occ) {
          const auto& e = graph.edges()[ei];
          std::set<std::vector<uint8_t>> here;
          for (GroundAtom flip : flips_at(ei, add)) {
            // Every tuple of positions matching the flip's arguments.
            std::vector<uint8_t> tuple(p.arity, 0);
            std::function<void(int)> rec = [&](int i) {
              if (i == p.arity) {
                here.insert(tuple);
                return;
              }
              for (int idx = 1; idx <= positions; ++idx) {
                if (e.position(idx) == flip.arg(i)) {
                  tuple[i] = static_cast<uint8_t>(idx);
                  rec(i + 1);
                }
              }
            };
            rec(0);
          }
          if (first) {
            cands = here;
            first = false;
          } else {
            // A candidate must flip at every occurrence.
            std::set<std::vector<uint8_t>> kept;
            for (const auto& c : cands)
              if (here.count(c)) kept.insert(c);
            // Candidates that ground to known-unchanged atoms are out; but a
            // candidate may also ground to an atom with unknown endpoints.
            // Those cannot be confirmed and are dropped by the here-check.
            cands = kept;
          }
          if (cands.empty()) break;
        }
        // Coverage: every confirmed flip must be explained.
        for (EdgeId ei : occ) {
          const auto& e = graph.edges()[ei];
          for (GroundAtom flip : flips_at(ei, add)) {
            bool covered = false;
            for (const auto& c : cands) {
              bool match = true;
              for (int i = 0; i < p.arity; ++i)
                if (e.position(c[i]) != flip.arg(i)) match = false;
              if (match) covered = true;
            }
            if (!covered)
              throw UnliftableEffect(graph.schemas()[s].name + " changes " + p.name +
                                     " in a way no argument pattern explains");
          }
        }
        for (const auto& c : cands) {
          LiftedAtom a;
          a.pred = pred;
          for (int i = 0; i < p.arity; ++i)
            a.args.push_back(slot_var(graph.schemas()[s], c[i]));
          auto& list = add ? spec.schemas[s].add_effects : spec.schemas[s].del_effects;
          if (std::find(list.begin(), list.end(), a) == list.end()) list.push_back(a);
        }
      }
    }
  }

  // Preconditions: literals over argument positions whose value is the same
  // at every occurrence. Statics stay out of the negative side.
  for (SchemaId s = 0; s < graph.schemas().size(); ++s) {
    const auto& occ = graph.occurrences(s);
    if (occ.empty()) continue;
    int positions = graph.schemas()[s].positions();

    for (size_t pi = 0; pi < ps.pool.size(); ++pi) {
      const PoolPredicate& p = ps.pool[pi];
      if (p.arity > positions) continue;
      // All tuples of distinct positions.
      std::vector<uint8_t> tuple(p.arity, 0);
      std::vector<bool> used(positions + 1, false);
      std::function<void(int)> rec = [&](int i) {
        if (i == p.arity) {
          bool all_true = true, all_false = true;
          for (EdgeId ei : occ) {
            const auto& e = graph.edges()[ei];
            ObjectId args[kMaxAtomArity] = {0, 0, 0, 0};
            for (int j = 0; j < p.arity; ++j) args[j] = e.position(tuple[j]);
            Tri v = eval.lookup(static_cast<int>(pi),
                                GroundAtom::pack(0, args, p.arity), e.src);
            if (v != Tri::True) all_true = false;
            if (v != Tri::False) all_false = false;
            if (!all_true && !all_false) break;
          }
          if (all_true || (all_false && !p.is_static)) {
            LiftedAtom a;
            a.pred = pool_to_pred[static_cast<int>(pi)];
            a.negated = all_false;
            for (int j = 0; j < p.arity; ++j)
              a.args.push_back(slot_var(graph.schemas()[s], tuple[j]));
            // Skip duplicates of subquery atoms and effects-derived entries.
            bool dup = false;
            for (const auto& q : spec.schemas[s].subqueries)
              for (const auto& qa : q.atoms)
                if (qa == a) dup = true;
            auto& extra = spec.schemas[s].extra_precondition;
            if (!dup && std::find(extra.begin(), extra.end(), a) == extra.end()) {
              int maxz = 0;
              for (const auto& v : a.args)
                if (v.cls == VarClass::Implicit) maxz = std::max(maxz, static_cast<int>(v.index));
              if (!a.negated && maxz > 0) {
                auto& atoms = spec.schemas[s].subqueries[maxz - 1].atoms;
                if (std::find(atoms.begin(), atoms.end(), a) == atoms.end()) atoms.push_back(a);
              } else {
                extra.push_back(a);
              }
            }
          }
          return;
        }
        for (int idx = 1; idx <= positions; ++idx) {
          if (used[idx]) continue;
          used[idx] = true;
          tuple[i] = static_cast<uint8_t>(idx);
          rec(i + 1);
          used[idx] = false;
        }
      };
      rec(0);
    }
  }

  out.stats.plain_tested = engine.counters().plain_tested;
  out.stats.plain_consistent = engine.counters().plain_consistent;
  out.stats.mutex_tested = engine.counters().mutex_tested;
  out.stats.mutex_consistent = engine.counters().mutex_consistent;
  for (const auto& qs : schema_queries) out.stats.implicit_args_learned += static_cast<int>(qs.size());

  out.domain.spec = std::move(spec);
  out.domain.provenance = std::move(prov);
  for (size_t i = 0; i < graph.objects().size(); ++i)
    out.domain.objects.push_back(graph.objects().name(static_cast<uint32_t>(i)));
  return out;
}

}  // namespace sps
