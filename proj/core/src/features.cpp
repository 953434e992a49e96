#include "stripsplus/features.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

#include "stripsplus/twosat.hpp"

namespace sps {

namespace {

uint64_t prefix_key_bits(GroundAtom a, int arity) {
  if (arity <= 0) return 0;
  uint64_t mask = ~(0xfffull << (12 * (4 - arity)));
  return a.bits & mask;
}

std::string slots_text(const std::vector<uint8_t>& slots) {
  std::string s = "[";
  for (size_t i = 0; i < slots.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(static_cast<int>(slots[i]));
  }
  return s + "]";
}

}  // namespace

std::string pattern_text(const TraceGraph& g, const ActionPattern& p) {
  return g.schemas()[p.schema].name + slots_text(p.slots);
}

std::string Feature::key(const TraceGraph& g) const {
  std::ostringstream os;
  os << (is_mutex ? "m" : "p") << arity << ":";
  for (const auto& p : adds) os << pattern_text(g, p) << "+";
  os << "/";
  for (const auto& p : dels) os << pattern_text(g, p) << "-";
  return os.str();
}

FeatureEngine::FeatureEngine(const TraceGraph& g, FeatureEngineConfig cfg) : g_(&g), cfg_(cfg) {
  uint32_t max_trace = 0;
  for (const auto& e : g.edges()) max_trace = std::max(max_trace, e.trace);
  trace_edges_.resize(g.edges().empty() ? 0 : max_trace + 1);
  for (EdgeId i = 0; i < g.edges().size(); ++i)
    trace_edges_[g.edges()[i].trace].push_back(i);
  // Edges arrive in (trace, step) order from the builder; keep that order.
}

bool FeatureEngine::instantiable(const ActionPattern& p) const {
  const auto& s = g_->schemas()[p.schema];
  for (uint8_t slot : p.slots)
    if (slot == 0 || slot > s.positions()) return false;
  return true;
}

GroundAtom FeatureEngine::instantiate(const ActionPattern& p, const TraceGraph::Edge& e) const {
  ObjectId args[kMaxAtomArity] = {0, 0, 0, 0};
  for (size_t i = 0; i < p.slots.size(); ++i) args[i] = e.position(p.slots[i]);
  return GroundAtom::pack(0, args, static_cast<int>(p.slots.size()));
}

std::vector<ActionPattern> FeatureEngine::patterns_of_arity(int k) const {
  std::vector<ActionPattern> out;
  for (SchemaId s = 0; s < g_->schemas().size(); ++s) {
    int n = g_->schemas()[s].positions();
    if (k == 0) {
      if (!g_->occurrences(s).empty()) out.push_back({s, {}});
      continue;
    }
    if (n < k || g_->occurrences(s).empty()) continue;
    // All ordered tuples of k distinct slots, lexicographic.
    std::vector<uint8_t> t(k, 0);
    std::vector<bool> used(n + 1, false);
    struct StackItem { int depth; uint8_t next; };
    std::vector<uint8_t> cur;
    std::function<void(int)> rec = [&](int depth) {
      if (depth == k) {
        out.push_back({s, cur});
        return;
      }
      for (uint8_t v = 1; v <= n; ++v) {
        if (used[v]) continue;
        used[v] = true;
        cur.push_back(v);
        rec(depth + 1);
        cur.pop_back();
        used[v] = false;
      }
    };
    rec(0);
  }
  return out;
}

std::vector<FeatureEngine::Occurrence> FeatureEngine::occurrences_of(const ActionPattern& p,
                                                                     int prefix_arity) const {
  std::vector<Occurrence> occ;
  for (EdgeId ei : g_->occurrences(p.schema)) {
    GroundAtom a = instantiate(p, g_->edges()[ei]);
    occ.push_back({ei, a, prefix_key_bits(a, prefix_arity)});
  }
  return occ;
}

// ---------------------------------------------------------------------------
// Gap analysis

std::vector<FeatureEngine::Gap> FeatureEngine::plain_gaps(
    const std::vector<ActionPattern>& B) const {
  struct Event {
    uint64_t atom;
    uint32_t trace, step;
    int pattern;
  };
  std::vector<Event> events;
  for (size_t pi = 0; pi < B.size(); ++pi) {
    for (EdgeId ei : g_->occurrences(B[pi].schema)) {
      const auto& e = g_->edges()[ei];
      events.push_back({instantiate(B[pi], e).bits, e.trace, e.step, static_cast<int>(pi)});
    }
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.atom != b.atom) return a.atom < b.atom;
    if (a.trace != b.trace) return a.trace < b.trace;
    return a.step < b.step;
  });
  std::vector<Gap> gaps;
  for (size_t i = 1; i < events.size(); ++i) {
    const Event& a = events[i - 1];
    const Event& b = events[i];
    if (a.atom != b.atom || a.trace != b.trace) continue;
    if (a.step == b.step) continue;  // one edge, two patterns: ambiguous, not a gap
    if (a.pattern == b.pattern)
      gaps.push_back({a.trace, a.step, b.step, GroundAtom{a.atom}, 0});
  }
  return gaps;
}

std::vector<FeatureEngine::Gap> FeatureEngine::mutex_gaps(const std::vector<ActionPattern>& adds,
                                                          const std::vector<ActionPattern>& dels,
                                                          int k) const {
  struct Event {
    uint64_t prefix;
    uint32_t trace, step;
    bool is_add;
    uint64_t atom;
  };
  std::vector<Event> events;
  for (const auto& p : adds) {
    for (EdgeId ei : g_->occurrences(p.schema)) {
      const auto& e = g_->edges()[ei];
      GroundAtom a = instantiate(p, e);
      events.push_back({prefix_key_bits(a, k), e.trace, e.step, true, a.bits});
    }
  }
  for (const auto& d : dels) {
    for (EdgeId ei : g_->occurrences(d.schema)) {
      const auto& e = g_->edges()[ei];
      GroundAtom a = instantiate(d, e);  // arity k-1 tuple == prefix bits
      events.push_back({a.bits, e.trace, e.step, false, a.bits});
    }
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.prefix != b.prefix) return a.prefix < b.prefix;
    if (a.trace != b.trace) return a.trace < b.trace;
    if (a.step != b.step) return a.step < b.step;
    return a.is_add < b.is_add;  // delete splits before an add on the same edge
  });
  std::vector<Gap> gaps;
  for (size_t i = 1; i < events.size(); ++i) {
    const Event& a = events[i - 1];
    const Event& b = events[i];
    if (a.prefix != b.prefix || a.trace != b.trace) continue;
    if (a.is_add && b.is_add && a.step < b.step)
      gaps.push_back({a.trace, a.step, b.step, GroundAtom{b.atom}, a.prefix});
  }
  return gaps;
}

namespace {

// Picks the candidate covering the most gaps; ties go to pattern order.
template <typename Cand>
int pick_max_coverage(const std::vector<Cand>& cands, const std::vector<std::vector<int>>& covers) {
  int best = -1;
  size_t best_cover = 0;
  for (size_t i = 0; i < cands.size(); ++i) {
    if (covers[i].size() > best_cover) {
      best = static_cast<int>(i);
      best_cover = covers[i].size();
    }
  }
  return best;
}

}  // namespace

bool FeatureEngine::close_plain(std::vector<ActionPattern>& B, int k) {
  for (int round = 0; round < 24; ++round) {
    std::vector<Gap> gaps = plain_gaps(B);
    if (gaps.empty()) return true;
    // Fits: arity-k patterns not in B that hit the gap atom inside the window.
    std::vector<ActionPattern> pool = patterns_of_arity(k);
    std::vector<ActionPattern> cands;
    std::vector<std::vector<int>> covers;
    for (const auto& q : pool) {
      if (std::find(B.begin(), B.end(), q) != B.end()) continue;
      std::vector<int> cover;
      for (size_t gi = 0; gi < gaps.size(); ++gi) {
        const Gap& gap = gaps[gi];
        bool hit = false;
        for (EdgeId ei : trace_edges_[gap.trace]) {
          const auto& e = g_->edges()[ei];
          if (e.step <= gap.lo_step) continue;
          if (e.step >= gap.hi_step) break;
          if (e.schema != q.schema) continue;
          if (instantiate(q, e) == gap.atom) {
            hit = true;
            break;
          }
        }
        if (hit) cover.push_back(static_cast<int>(gi));
      }
      if (!cover.empty()) {
        cands.push_back(q);
        covers.push_back(std::move(cover));
      }
    }
    int pick = pick_max_coverage(cands, covers);
    if (pick < 0) return false;
    B.push_back(cands[pick]);
    std::sort(B.begin(), B.end());
  }
  return false;
}

bool FeatureEngine::close_mutex_dels(const std::vector<ActionPattern>& adds,
                                     std::vector<ActionPattern>& dels, int k) {
  for (int round = 0; round < 24; ++round) {
    std::vector<Gap> gaps = mutex_gaps(adds, dels, k);
    if (gaps.empty()) return true;
    std::vector<ActionPattern> pool = patterns_of_arity(k - 1);
    std::vector<ActionPattern> cands;
    std::vector<std::vector<int>> covers;
    for (const auto& d : pool) {
      if (std::find(dels.begin(), dels.end(), d) != dels.end()) continue;
      std::vector<int> cover;
      for (size_t gi = 0; gi < gaps.size(); ++gi) {
        const Gap& gap = gaps[gi];
        bool hit = false;
        for (EdgeId ei : trace_edges_[gap.trace]) {
          const auto& e = g_->edges()[ei];
          if (e.step <= gap.lo_step) continue;
          if (e.step >= gap.hi_step) break;
          if (e.schema != d.schema) continue;
          if (instantiate(d, e).bits == gap.prefix) {
            hit = true;
            break;
          }
        }
        if (hit) cover.push_back(static_cast<int>(gi));
      }
      if (!cover.empty()) {
        cands.push_back(d);
        covers.push_back(std::move(cover));
      }
    }
    int pick = pick_max_coverage(cands, covers);
    if (pick < 0) return false;
    dels.push_back(cands[pick]);
    std::sort(dels.begin(), dels.end());
  }
  return false;
}

bool FeatureEngine::mirrors_existing(const std::vector<ActionPattern>& adds,
                                     const std::vector<ActionPattern>& dels, int k) const {
  // A complement register re-encodes the negation of a found feature: every
  // add matches an existing delete (same action, delete slots a prefix of the
  // add's) and every delete matches an existing add likewise.
  auto is_prefix = [](const std::vector<uint8_t>& shorter, const std::vector<uint8_t>& longer) {
    if (shorter.size() > longer.size()) return false;
    return std::equal(shorter.begin(), shorter.end(), longer.begin());
  };
  for (const auto& f : consistent_mutex_) {
    if (f->arity != k) continue;
    bool mirror = true;
    for (const auto& a : adds) {
      bool m = false;
      for (const auto& d : f->dels)
        if (d.schema == a.schema && is_prefix(d.slots, a.slots)) m = true;
      if (!m) {
        mirror = false;
        break;
      }
    }
    if (mirror) {
      for (const auto& d : dels) {
        bool m = false;
        for (const auto& a : f->adds)
          if (a.schema == d.schema && is_prefix(d.slots, a.slots)) m = true;
        if (!m) {
          mirror = false;
          break;
        }
      }
    }
    if (mirror) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Consistency checks

std::shared_ptr<Feature> FeatureEngine::check_mutex(const std::vector<ActionPattern>& adds,
                                                    const std::vector<ActionPattern>& dels) {
  int k = adds.empty() ? 0 : static_cast<int>(adds[0].slots.size());
  std::vector<GroundAtom> tracked;
  for (const auto& p : adds)
    for (EdgeId ei : g_->occurrences(p.schema)) tracked.push_back(instantiate(p, g_->edges()[ei]));
  std::sort(tracked.begin(), tracked.end());
  tracked.erase(std::unique(tracked.begin(), tracked.end()), tracked.end());
  if (tracked.empty()) return nullptr;

  auto ledger = std::make_shared<AtomLedger>(*g_, tracked, k);

  std::vector<EdgeEffects> effects(g_->num_edges());
  for (const auto& p : adds) {
    for (EdgeId ei : g_->occurrences(p.schema)) {
      int idx = ledger->atom_index(instantiate(p, g_->edges()[ei]));
      effects[ei].adds.push_back(idx);
    }
  }
  for (const auto& d : dels) {
    for (EdgeId ei : g_->occurrences(d.schema)) {
      uint64_t prefix = instantiate(d, g_->edges()[ei]).bits;
      int grp = ledger->group_of_prefix(prefix);
      if (grp < 0) return nullptr;  // nothing this delete could ever remove
      effects[ei].prefix_dels.push_back(grp);
    }
  }
  for (auto& fx : effects) {
    std::sort(fx.adds.begin(), fx.adds.end());
    fx.adds.erase(std::unique(fx.adds.begin(), fx.adds.end()), fx.adds.end());
    std::sort(fx.prefix_dels.begin(), fx.prefix_dels.end());
    fx.prefix_dels.erase(std::unique(fx.prefix_dels.begin(), fx.prefix_dels.end()),
                         fx.prefix_dels.end());
  }

  LedgerOptions opts;
  opts.mutex_condition2 = true;
  opts.existence_clauses = true;
  auto result = ledger->propagate(effects, opts);
  if (!result.consistent) return nullptr;

  Feature f;
  f.is_mutex = true;
  f.arity = k;
  f.adds = adds;
  f.dels = dels;
  std::sort(f.adds.begin(), f.adds.end());
  std::sort(f.dels.begin(), f.dels.end());
  f.ledger = ledger;

  // Realizability: every delete occurrence must name its target through a
  // forced-true prefix atom, otherwise the delete cannot be grounded as an
  // effect with a determined variable.
  f.delete_query_determined = true;
  for (const auto& d : dels) {
    for (EdgeId ei : g_->occurrences(d.schema)) {
      uint64_t prefix = instantiate(d, g_->edges()[ei]).bits;
      int grp = ledger->group_of_prefix(prefix);
      bool known = false;
      for (int32_t ai : ledger->group_atoms(grp))
        if (ledger->value(ai, g_->edges()[ei].src) == Tri::True) known = true;
      if (!known) {
        f.delete_query_determined = false;
        break;
      }
    }
    if (!f.delete_query_determined) break;
  }
  return finish_feature(std::move(f));
}

std::shared_ptr<Feature> FeatureEngine::check_plain(const std::vector<ActionPattern>& patterns) {
  int k = patterns.empty() ? 0 : static_cast<int>(patterns[0].slots.size());
  std::vector<GroundAtom> tracked;
  for (const auto& p : patterns)
    for (EdgeId ei : g_->occurrences(p.schema)) tracked.push_back(instantiate(p, g_->edges()[ei]));
  std::sort(tracked.begin(), tracked.end());
  tracked.erase(std::unique(tracked.begin(), tracked.end()), tracked.end());
  if (tracked.empty()) return nullptr;

  auto ledger = std::make_shared<AtomLedger>(*g_, tracked, k);

  // Frame classes: every pattern occurrence touches its atom.
  std::vector<EdgeEffects> touch(g_->num_edges());
  for (const auto& p : patterns)
    for (EdgeId ei : g_->occurrences(p.schema))
      touch[ei].adds.push_back(ledger->atom_index(instantiate(p, g_->edges()[ei])));
  for (auto& fx : touch) {
    std::sort(fx.adds.begin(), fx.adds.end());
    fx.adds.erase(std::unique(fx.adds.begin(), fx.adds.end()), fx.adds.end());
  }
  ledger->build_classes(touch);

  // 2-SAT: one sign variable per pattern, one value variable per cell class.
  std::map<int, int> class_var;
  auto var_of_class = [&](int cls) {
    auto it = class_var.find(cls);
    if (it != class_var.end()) return it->second;
    int v = static_cast<int>(patterns.size()) + static_cast<int>(class_var.size());
    class_var.emplace(cls, v);
    return v;
  };
  struct OccRec {
    int pattern;
    int src_cls, dst_cls;
  };
  std::vector<OccRec> occs;
  for (size_t pi = 0; pi < patterns.size(); ++pi) {
    for (EdgeId ei : g_->occurrences(patterns[pi].schema)) {
      const auto& e = g_->edges()[ei];
      int idx = ledger->atom_index(instantiate(patterns[pi], e));
      occs.push_back({static_cast<int>(pi), ledger->class_of(idx, e.src),
                      ledger->class_of(idx, e.dst)});
    }
  }
  for (const auto& o : occs) {
    var_of_class(o.src_cls);
    var_of_class(o.dst_cls);
  }

  auto solve_with_signs = [&](const std::vector<int>& fixed_signs,
                              std::vector<bool>* assignment) {
    TwoSat sat(static_cast<int>(patterns.size() + class_var.size()));
    for (const auto& o : occs) {
      int s = TwoSat::lit(o.pattern, true);
      int ns = TwoSat::lit(o.pattern, false);
      int vs = TwoSat::lit(class_var[o.src_cls], true);
      int nvs = TwoSat::lit(class_var[o.src_cls], false);
      int vd = TwoSat::lit(class_var[o.dst_cls], true);
      int nvd = TwoSat::lit(class_var[o.dst_cls], false);
      sat.add_implication(s, nvs);  // add: false before
      sat.add_implication(s, vd);   // add: true after
      sat.add_implication(ns, vs);  // delete: true before
      sat.add_implication(ns, nvd); // delete: false after
    }
    for (size_t pi = 0; pi < fixed_signs.size(); ++pi) {
      if (fixed_signs[pi] == 1) sat.add_unit(TwoSat::lit(static_cast<int>(pi), true));
      if (fixed_signs[pi] == 0) sat.add_unit(TwoSat::lit(static_cast<int>(pi), false));
    }
    return sat.solve(assignment);
  };

  std::vector<int> signs(patterns.size(), -1);
  if (!solve_with_signs(signs, nullptr)) return nullptr;
  // Canonical signed split: prefer add in pattern order.
  for (size_t pi = 0; pi < patterns.size(); ++pi) {
    signs[pi] = 1;
    if (!solve_with_signs(signs, nullptr)) signs[pi] = 0;
  }

  Feature f;
  f.is_mutex = false;
  f.arity = k;
  for (size_t pi = 0; pi < patterns.size(); ++pi)
    (signs[pi] == 1 ? f.adds : f.dels).push_back(patterns[pi]);
  std::sort(f.adds.begin(), f.adds.end());
  std::sort(f.dels.begin(), f.dels.end());

  // Replay with fixed signs for the ledger values.
  std::vector<EdgeEffects> effects(g_->num_edges());
  for (const auto& p : f.adds)
    for (EdgeId ei : g_->occurrences(p.schema))
      effects[ei].adds.push_back(ledger->atom_index(instantiate(p, g_->edges()[ei])));
  for (const auto& p : f.dels)
    for (EdgeId ei : g_->occurrences(p.schema))
      effects[ei].plain_dels.push_back(ledger->atom_index(instantiate(p, g_->edges()[ei])));
  for (auto& fx : effects) {
    std::sort(fx.adds.begin(), fx.adds.end());
    fx.adds.erase(std::unique(fx.adds.begin(), fx.adds.end()), fx.adds.end());
    std::sort(fx.plain_dels.begin(), fx.plain_dels.end());
    fx.plain_dels.erase(std::unique(fx.plain_dels.begin(), fx.plain_dels.end()),
                        fx.plain_dels.end());
  }
  auto replay = std::make_shared<AtomLedger>(*g_, tracked, k);
  LedgerOptions opts;
  auto result = replay->propagate(effects, opts);
  if (!result.consistent) return nullptr;  // should not happen after SAT
  f.ledger = replay;
  return finish_feature(std::move(f));
}

std::shared_ptr<Feature> FeatureEngine::finish_feature(Feature f) {
  // Materialize per-node true atoms and a digest for duplicate collapse.
  f.true_atoms.assign(g_->num_nodes(), {});
  uint64_t digest = 0xcbf29ce484222325ull;
  const auto& tracked = f.ledger->tracked();
  for (int ai = 0; ai < static_cast<int>(tracked.size()); ++ai) {
    for (NodeId n = 0; n < g_->num_nodes(); ++n) {
      Tri v = f.ledger->value(ai, n);
      if (v == Tri::Unknown) continue;
      uint64_t rec[3] = {tracked[ai].bits, n, v == Tri::True ? 1ull : 2ull};
      digest = fnv1a(rec, sizeof(rec), digest);
      if (v == Tri::True) f.true_atoms[n].push_back(tracked[ai]);
    }
  }
  for (auto& v : f.true_atoms) std::sort(v.begin(), v.end());
  f.ledger_digest = digest;
  return std::make_shared<Feature>(std::move(f));
}

// ---------------------------------------------------------------------------
// Enumeration waves

std::vector<Feature> FeatureEngine::enumerate_plain() {
  std::vector<Feature> fresh;
  int max_arity = cfg_.max_arity;
  if (max_arity == 0)
    for (const auto& s : g_->schemas()) max_arity = std::max(max_arity, s.positions());

  auto budget_left = [&]() {
    if (cfg_.plain_cap >= 0 && counters_.plain_tested >= cfg_.plain_cap)
      throw BudgetExceeded("plain feature cap reached");
    return cfg_.plain_budget < 0 || counters_.plain_tested < cfg_.plain_budget;
  };

  auto try_candidate = [&](std::vector<ActionPattern> B) -> std::shared_ptr<Feature> {
    std::sort(B.begin(), B.end());
    Feature probe;
    probe.arity = B.empty() ? 0 : static_cast<int>(B[0].slots.size());
    probe.adds = B;
    std::string key = probe.key(*g_);
    if (tested_.count(key)) return nullptr;
    if (!budget_left()) return nullptr;
    tested_.insert(key);
    ++counters_.plain_tested;
    auto f = check_plain(B);
    if (f) {
      if (ledger_digests_.count(f->ledger_digest)) return nullptr;  // duplicate predicate
      ledger_digests_.insert(f->ledger_digest);
      ++counters_.plain_consistent;
      consistent_plain_.push_back(f);
      fresh.push_back(*f);
    }
    return f;
  };

  for (int k = 1; k <= max_arity && k <= kMaxAtomArity; ++k) {
    for (const auto& p : patterns_of_arity(k)) {
      std::vector<ActionPattern> B{p};
      bool complete = close_plain(B, k);
      if (B.size() == 1 && !complete) continue;  // lone always-same-sign pattern
      try_candidate(B);
    }
    // Union phase: merge consistent features of this arity pairwise.
    auto is_transpose_pair = [](const Feature& a, const Feature& b) {
      auto reversed = [](std::vector<ActionPattern> ps) {
        for (auto& p : ps) std::reverse(p.slots.begin(), p.slots.end());
        std::sort(ps.begin(), ps.end());
        return ps;
      };
      std::vector<ActionPattern> pa = a.adds, pb = b.adds;
      pa.insert(pa.end(), a.dels.begin(), a.dels.end());
      pb.insert(pb.end(), b.dels.begin(), b.dels.end());
      std::sort(pa.begin(), pa.end());
      std::sort(pb.begin(), pb.end());
      return reversed(pa) == pb;
    };
    for (size_t i = 0; i < consistent_plain_.size(); ++i) {
      if (consistent_plain_[i]->arity != k) continue;
      for (size_t j = i + 1; j < consistent_plain_.size(); ++j) {
        if (consistent_plain_[j]->arity != k) continue;
        if (is_transpose_pair(*consistent_plain_[i], *consistent_plain_[j])) continue;
        std::vector<ActionPattern> merged = consistent_plain_[i]->adds;
        auto append = [&merged](const std::vector<ActionPattern>& v) {
          merged.insert(merged.end(), v.begin(), v.end());
        };
        append(consistent_plain_[i]->dels);
        append(consistent_plain_[j]->adds);
        append(consistent_plain_[j]->dels);
        std::sort(merged.begin(), merged.end());
        merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
        try_candidate(merged);
      }
    }
  }
  return fresh;
}

std::vector<Feature> FeatureEngine::enumerate_mutex() {
  std::vector<Feature> fresh;
  int max_arity = cfg_.max_arity;
  if (max_arity == 0)
    for (const auto& s : g_->schemas()) max_arity = std::max(max_arity, s.positions());

  auto budget_left = [&]() {
    if (cfg_.mutex_cap >= 0 && counters_.mutex_tested >= cfg_.mutex_cap)
      throw BudgetExceeded("mutex feature cap reached");
    return cfg_.mutex_budget < 0 || counters_.mutex_tested < cfg_.mutex_budget;
  };

  auto try_candidate = [&](std::vector<ActionPattern> A, std::vector<ActionPattern> D,
                           int k) -> std::shared_ptr<Feature> {
    std::sort(A.begin(), A.end());
    std::sort(D.begin(), D.end());
    Feature probe;
    probe.is_mutex = true;
    probe.arity = k;
    probe.adds = A;
    probe.dels = D;
    std::string key = probe.key(*g_);
    if (tested_.count(key)) return nullptr;
    if (mirrors_existing(A, D, k)) return nullptr;
    if (!budget_left()) return nullptr;
    tested_.insert(key);
    ++counters_.mutex_tested;
    auto f = check_mutex(A, D);
    if (f) {
      if (ledger_digests_.count(f->ledger_digest)) return nullptr;
      bool counts = !cfg_.count_realizable_only || f->delete_query_determined;
      if (counts) {
        ledger_digests_.insert(f->ledger_digest);
        ++counters_.mutex_consistent;
        consistent_mutex_.push_back(f);
        if (f->delete_query_determined) fresh.push_back(*f);
      }
    }
    return f;
  };

  for (int k = 1; k <= max_arity && k <= kMaxAtomArity; ++k) {
    for (const auto& p : patterns_of_arity(k)) {
      std::vector<ActionPattern> A{p}, D;
      if (!close_mutex_dels(A, D, k)) continue;  // no delete evidence at all
      if (D.empty()) continue;                   // degenerate: plain feature territory
      // Repair loop guided by ledger violations: missing adds show up as
      // existence failures, missing deletes as add conflicts.
      for (int depth = 0; depth <= cfg_.repair_depth; ++depth) {
        auto f = try_candidate(A, D, k);
        if (f || !budget_left()) break;
        // Diagnose: rerun the check to fetch the violation site.
        auto violation = [&]() -> std::pair<int, EdgeId> {
          std::vector<GroundAtom> tracked;
          for (const auto& a : A)
            for (EdgeId ei : g_->occurrences(a.schema))
              tracked.push_back(instantiate(a, g_->edges()[ei]));
          std::sort(tracked.begin(), tracked.end());
          tracked.erase(std::unique(tracked.begin(), tracked.end()), tracked.end());
          AtomLedger lg(*g_, tracked, k);
          std::vector<EdgeEffects> effects(g_->num_edges());
          for (const auto& a : A)
            for (EdgeId ei : g_->occurrences(a.schema))
              effects[ei].adds.push_back(lg.atom_index(instantiate(a, g_->edges()[ei])));
          for (const auto& d : D)
            for (EdgeId ei : g_->occurrences(d.schema)) {
              int grp = lg.group_of_prefix(instantiate(d, g_->edges()[ei]).bits);
              if (grp >= 0) effects[ei].prefix_dels.push_back(grp);
            }
          for (auto& fx : effects) {
            std::sort(fx.adds.begin(), fx.adds.end());
            std::sort(fx.prefix_dels.begin(), fx.prefix_dels.end());
          }
          LedgerOptions opts;
          opts.mutex_condition2 = true;
          opts.existence_clauses = true;
          lg.propagate(effects, opts);
          return {lg.violation_kind(), lg.violation_edge()};
        }();
        if (violation.first != 1 /*existence*/) break;
        // Add an add-pattern from the window before the starving delete.
        const auto& ve = g_->edges()[violation.second];
        ActionPattern repaired{};
        bool found = false;
        uint64_t want_prefix = 0;
        for (const auto& d : D)
          if (d.schema == ve.schema) want_prefix = instantiate(d, ve).bits;
        for (EdgeId ei : trace_edges_[ve.trace]) {
          const auto& e = g_->edges()[ei];
          if (e.step >= ve.step) break;
          for (const auto& q : patterns_of_arity(k)) {
            if (q.schema != e.schema) continue;
            if (std::find(A.begin(), A.end(), q) != A.end()) continue;
            if (prefix_key_bits(instantiate(q, e), k) == want_prefix) {
              repaired = q;
              found = true;
            }
          }
        }
        if (!found) break;
        A.push_back(repaired);
        std::sort(A.begin(), A.end());
        D.clear();
        if (!close_mutex_dels(A, D, k) || D.empty()) break;
      }
      if (!budget_left()) return fresh;
    }
  }
  return fresh;
}

std::shared_ptr<AtomLedger> replay_feature(const TraceGraph& g, const Feature& f,
                                           bool* consistent) {
  FeatureEngineConfig cfg;
  FeatureEngine eng(g, cfg);
  auto r = f.is_mutex ? eng.check_mutex(f.adds, f.dels)
                      : eng.check_plain([&] {
                          std::vector<ActionPattern> b = f.adds;
                          b.insert(b.end(), f.dels.begin(), f.dels.end());
                          std::sort(b.begin(), b.end());
                          return b;
                        }());
  if (consistent) *consistent = r != nullptr;
  return r ? r->ledger : nullptr;
}

}  // namespace sps
