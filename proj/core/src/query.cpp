#include "stripsplus/query.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

namespace sps {

std::string query_text(const std::vector<PoolPredicate>& pool, const QueryConjunction& q) {
  std::ostringstream os;
  for (size_t i = 0; i < q.size(); ++i) {
    if (i) os << " & ";
    os << pool[q[i].pool_pred].name << "(";
    for (size_t j = 0; j < q[i].terms.size(); ++j) {
      if (j) os << ",";
      const QueryTerm& t = q[i].terms[j];
      switch (t.kind) {
        case QueryTerm::X: os << "x" << static_cast<int>(t.index); break;
        case QueryTerm::Z: os << "z" << static_cast<int>(t.index); break;
        case QueryTerm::Target: os << "z*"; break;
        case QueryTerm::Y: os << "y"; break;
      }
    }
    os << ")";
  }
  return os.str();
}

QueryEvaluator::QueryEvaluator(const TraceGraph& g, const std::vector<PoolPredicate>& pool,
                               bool local_mode)
    : g_(&g), pool_(&pool), local_(local_mode) {
  obs_true_.resize(g.num_nodes());
  for (NodeId n = 0; n < g.num_nodes(); ++n) obs_true_[n] = g.observations(n);
  local_objects_.resize(g.num_nodes());
}

std::vector<QueryEvaluator::Occurrence> QueryEvaluator::occurrences(SchemaId schema) const {
  std::vector<Occurrence> occ;
  for (EdgeId ei : g_->occurrences(schema)) occ.push_back({g_->edges()[ei].src, ei});
  return occ;
}

Tri QueryEvaluator::lookup(int pool_pred, GroundAtom args, NodeId node) const {
  const PoolPredicate& p = (*pool_)[pool_pred];
  switch (p.kind) {
    case PoolPredicate::ObservedFull: {
      GroundAtom key{args.bits | (static_cast<uint64_t>(p.obs_pred) << 48)};
      const auto& v = obs_true_[node];
      return std::binary_search(v.begin(), v.end(), key) ? Tri::True : Tri::False;
    }
    case PoolPredicate::ObservedLocal: {
      GroundAtom key{args.bits | (static_cast<uint64_t>(p.obs_pred) << 48)};
      const auto& v = obs_true_[node];
      if (std::binary_search(v.begin(), v.end(), key)) return Tri::True;
      if (local_objects_[node].empty())
        local_objects_[node] = g_->known_local_objects(node);
      const auto& locals = local_objects_[node];
      for (int i = 0; i < p.arity; ++i)
        if (std::binary_search(locals.begin(), locals.end(), key.arg(i))) return Tri::False;
      return Tri::Unknown;
    }
    case PoolPredicate::LearnedPlain:
    case PoolPredicate::LearnedMutex:
      return p.feature->ledger->value(GroundAtom{args.bits & 0x0000ffffffffffffull}, node);
  }
  return Tri::Unknown;
}

namespace {

constexpr int kUnbound = -1;

struct JoinEnv {
  const TraceGraph::Edge* edge;
  int target = kUnbound;
};

int term_value(const QueryTerm& t, const JoinEnv& env) {
  switch (t.kind) {
    case QueryTerm::X: return env.edge->explicit_args[t.index - 1];
    case QueryTerm::Z: return env.edge->implicit_args[t.index - 1];
    case QueryTerm::Target: return env.target;
    case QueryTerm::Y: return kUnbound;  // existential, bound per atom
  }
  return kUnbound;
}

}  // namespace

// Backtracking join over the conjunction at the occurrence's source node.
// strict: candidate groundings range over known-true atoms only.
// optimistic: atoms of locally observable predicates may also ground over
// unknown-valued tuples (never over known-false ones).
QueryEvaluator::BindResult QueryEvaluator::bindings_at(const QueryConjunction& conj, EdgeId edge,
                                                       bool optimistic) const {
  BindResult out;
  const TraceGraph::Edge& e = g_->edges()[edge];
  NodeId node = e.src;
  JoinEnv env;
  env.edge = &e;
  size_t n_objects = g_->num_objects();

  std::set<ObjectId> values;
  bool unknown_seen = false;

  std::function<void(size_t, bool)> rec = [&](size_t ai, bool used_unknown) {
    if (ai == conj.size()) {
      if (env.target != kUnbound) {
        values.insert(static_cast<ObjectId>(env.target));
        if (used_unknown) unknown_seen = true;
      }
      return;
    }
    const QueryAtom& qa = conj[ai];
    const PoolPredicate& p = (*pool_)[qa.pool_pred];

    // Enumerate candidate groundings for this atom. Known-true atoms come
    // from the per-node lists; optimistic mode additionally tries unknown
    // tuples for locally observable predicates.
    auto try_tuple = [&](const ObjectId* tuple, bool via_unknown) {
      int saved_target = env.target;
      bool ok = true;
      for (size_t ti = 0; ti < qa.terms.size() && ok; ++ti) {
        const QueryTerm& t = qa.terms[ti];
        if (t.kind == QueryTerm::Y) continue;  // existential: any value fits
        int cur = term_value(t, env);
        if (cur == kUnbound) {
          env.target = tuple[ti];
        } else if (cur != tuple[ti]) {
          ok = false;
        }
      }
      if (ok) rec(ai + 1, used_unknown || via_unknown);
      env.target = saved_target;
    };

    // Known-true candidates.
    std::vector<GroundAtom> cands;
    if (p.kind == PoolPredicate::ObservedFull || p.kind == PoolPredicate::ObservedLocal) {
      const auto& v = obs_true_[node];
      GroundAtom lo{static_cast<uint64_t>(p.obs_pred) << 48};
      GroundAtom hi{(static_cast<uint64_t>(p.obs_pred) + 1) << 48};
      auto b = std::lower_bound(v.begin(), v.end(), lo);
      auto t = std::lower_bound(v.begin(), v.end(), hi);
      cands.assign(b, t);
    } else {
      cands = p.feature->true_atoms[node];
    }
    for (GroundAtom c : cands) {
      ObjectId tuple[kMaxAtomArity];
      for (int i = 0; i < p.arity; ++i) tuple[i] = c.arg(i);
      try_tuple(tuple, false);
    }

    if (optimistic && p.kind == PoolPredicate::ObservedLocal) {
      // Unknown tuples: enumerate objects for unbound slots and keep tuples
      // whose truth is unknown at this node.
      std::vector<int> fixed(qa.terms.size(), kUnbound);
      for (size_t ti = 0; ti < qa.terms.size(); ++ti)
        if (qa.terms[ti].kind != QueryTerm::Y) fixed[ti] = term_value(qa.terms[ti], env);
      std::vector<size_t> free_slots;
      for (size_t ti = 0; ti < qa.terms.size(); ++ti)
        if (fixed[ti] == kUnbound) free_slots.push_back(ti);
      std::vector<ObjectId> tuple(qa.terms.size(), 0);
      for (size_t ti = 0; ti < qa.terms.size(); ++ti)
        if (fixed[ti] != kUnbound) tuple[ti] = static_cast<ObjectId>(fixed[ti]);
      std::function<void(size_t)> enum_free = [&](size_t fi) {
        if (fi == free_slots.size()) {
          GroundAtom probe = GroundAtom::pack(0, tuple.data(), static_cast<int>(tuple.size()));
          if (lookup(qa.pool_pred, probe, node) == Tri::Unknown) try_tuple(tuple.data(), true);
          return;
        }
        for (size_t o = 0; o < n_objects; ++o) {
          tuple[free_slots[fi]] = static_cast<ObjectId>(o);
          enum_free(fi + 1);
        }
      };
      enum_free(0);
    }
  };
  rec(0, false);

  out.strict.assign(values.begin(), values.end());
  out.unknown_possible = unknown_seen;
  return out;
}

Verdict QueryEvaluator::test_star(SchemaId schema, const QueryConjunction& conj) const {
  const auto& occ = g_->occurrences(schema);
  if (occ.empty()) return Verdict::Invalid;  // no evidence must not gate effects

  bool determined = true;
  for (EdgeId ei : occ) {
    BindResult strict = bindings_at(conj, ei, false);
    if (strict.strict.empty()) return Verdict::Invalid;
    if (strict.strict.size() > 1) {
      determined = false;
      continue;
    }
    if (local_) {
      // Unknown atoms count as true when testing determination: any unknown
      // grounding that could bind the target elsewhere blocks uniqueness.
      BindResult opt = bindings_at(conj, ei, true);
      for (ObjectId v : opt.strict)
        if (v != strict.strict[0]) determined = false;
    }
  }
  return determined ? Verdict::Determined : Verdict::Valid;
}

std::optional<ObjectId> QueryEvaluator::target_binding(const QueryConjunction& conj,
                                                       EdgeId edge) const {
  BindResult strict = bindings_at(conj, edge, false);
  if (strict.strict.size() == 1) return strict.strict[0];
  return std::nullopt;
}

std::optional<QueryConjunction> expand(
    const QueryEvaluator& eval, SchemaId schema, int n_prev_z, const QueryConfig& cfg,
    const std::function<bool(const QueryConjunction&)>& filter) {
  const auto& pool = eval.pool();
  if (eval.graph().occurrences(schema).empty()) return std::nullopt;
  int explicit_arity = eval.graph().schemas()[schema].explicit_arity;

  // Candidate atoms: every pool predicate over terms drawn from x, known z's
  // and the target, at most one fresh existential, the target occurring.
  std::vector<QueryTerm> terms;
  for (int i = 1; i <= explicit_arity; ++i)
    terms.push_back({QueryTerm::X, static_cast<uint8_t>(i)});
  for (int i = 1; i <= n_prev_z; ++i)
    terms.push_back({QueryTerm::Z, static_cast<uint8_t>(i)});
  terms.push_back({QueryTerm::Target, 0});
  terms.push_back({QueryTerm::Y, 0});

  std::vector<QueryAtom> menu;
  for (int pi = 0; pi < static_cast<int>(pool.size()); ++pi) {
    int arity = pool[pi].arity;
    if (arity == 0 || arity > kMaxAtomArity) continue;
    std::vector<QueryTerm> tuple(arity, terms[0]);
    std::function<void(int, bool, int)> rec = [&](int pos, bool has_target, int y_used) {
      if (pos == arity) {
        if (has_target) menu.push_back({pi, tuple});
        return;
      }
      for (const QueryTerm& t : terms) {
        if (t.kind == QueryTerm::Y && y_used >= 1) continue;
        tuple[pos] = t;
        rec(pos + 1, has_target || t.kind == QueryTerm::Target,
            y_used + (t.kind == QueryTerm::Y ? 1 : 0));
      }
    };
    rec(0, false, 0);
  }

  // Breadth-first growth per Alg. 1: extend valid conjunctions one atom at
  // a time, return the first determined one.
  std::set<QueryConjunction> seen;
  std::vector<QueryConjunction> level{{}};
  long tested = 0;
  for (int depth = 1; depth <= cfg.max_atoms; ++depth) {
    std::vector<QueryConjunction> next;
    for (const QueryConjunction& q : level) {
      for (const QueryAtom& qa : menu) {
        if (std::find(q.begin(), q.end(), qa) != q.end()) continue;
        QueryConjunction grown = q;
        grown.push_back(qa);
        std::sort(grown.begin(), grown.end());
        if (!seen.insert(grown).second) continue;
        if (++tested > cfg.expansion_cap)
          throw BudgetExceeded("query expansion cap reached");
        Verdict v = eval.test_star(schema, grown);
        if (v == Verdict::Determined) {
          if (!filter || filter(grown)) return grown;
          next.push_back(grown);  // determined but rejected: still a valid base
        } else if (v == Verdict::Valid) {
          next.push_back(grown);
        }
      }
    }
    level = std::move(next);
    if (level.empty()) break;
  }
  return std::nullopt;
}

bool distinct_denotation(const QueryEvaluator& eval, SchemaId schema,
                         const QueryConjunction& conj) {
  for (EdgeId ei : eval.graph().occurrences(schema)) {
    auto b = eval.target_binding(conj, ei);
    if (!b) continue;
    const auto& e = eval.graph().edges()[ei];
    bool matches_existing = false;
    for (ObjectId o : e.explicit_args)
      if (o == *b) matches_existing = true;
    for (ObjectId o : e.implicit_args)
      if (o == *b) matches_existing = true;
    if (!matches_existing) return true;
  }
  return false;
}

}  // namespace sps
