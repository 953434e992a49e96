#include "stripsplus/ledger.hpp"

#include <algorithm>
#include <stdexcept>

namespace sps {

namespace {

uint64_t prefix_key(GroundAtom a, int arity) {
  if (arity <= 0) return a.bits >> 48 << 48;
  uint64_t mask = ~(0xfffull << (12 * (4 - arity)));
  return a.bits & mask;
}

}  // namespace

AtomLedger::AtomLedger(const TraceGraph& g, std::vector<GroundAtom> tracked, int arity)
    : graph_(&g), tracked_(std::move(tracked)), nodes_(g.num_nodes()) {
  prefix_of_.resize(tracked_.size());
  prefix_bits_.resize(tracked_.size());
  std::vector<std::pair<uint64_t, int>> keys;
  for (size_t i = 0; i < tracked_.size(); ++i) {
    prefix_bits_[i] = prefix_key(tracked_[i], arity);
    keys.emplace_back(prefix_bits_[i], static_cast<int>(i));
  }
  std::sort(keys.begin(), keys.end());
  for (size_t i = 0; i < keys.size(); ++i) {
    if (i == 0 || keys[i].first != keys[i - 1].first) groups_.emplace_back();
    prefix_of_[keys[i].second] = static_cast<int32_t>(groups_.size() - 1);
    groups_.back().push_back(keys[i].second);
  }
}

int AtomLedger::atom_index(GroundAtom a) const {
  auto it = std::lower_bound(tracked_.begin(), tracked_.end(), a);
  if (it != tracked_.end() && *it == a) return static_cast<int>(it - tracked_.begin());
  return -1;
}

int AtomLedger::group_of_prefix(uint64_t prefix) const {
  for (size_t gi = 0; gi < groups_.size(); ++gi)
    if (!groups_[gi].empty() && prefix_bits_[groups_[gi][0]] == prefix)
      return static_cast<int>(gi);
  return -1;
}

int AtomLedger::find(int c) const {
  while (parent_[c] != c) {
    parent_[c] = parent_[parent_[c]];
    c = parent_[c];
  }
  return c;
}

bool AtomLedger::assign(int cls, Tri v) {
  Tri cur = class_value_[cls];
  if (cur == v) return true;
  if (cur != Tri::Unknown) return false;
  class_value_[cls] = v;
  return true;
}

// Enforce the mutex condition from newly-true classes: any atom true at a
// node forces every same-prefix sibling false there. Returns false on
// contradiction. true_queue holds classes whose cells just became true.
bool AtomLedger::close_condition2(std::vector<int>& true_queue) {
  while (!true_queue.empty()) {
    int cls = true_queue.back();
    true_queue.pop_back();
    for (int32_t c : class_cells_[cls]) {
      int atom = static_cast<int>(c / nodes_);
      NodeId node = static_cast<NodeId>(c % nodes_);
      for (int32_t sibling : groups_[prefix_of_[atom]]) {
        if (sibling == atom) continue;
        int sc = find(static_cast<int>(cell(sibling, node)));
        if (class_value_[sc] == Tri::True) return false;
        if (class_value_[sc] == Tri::Unknown) class_value_[sc] = Tri::False;
      }
    }
  }
  return true;
}

void AtomLedger::build_classes(const std::vector<EdgeEffects>& effects) {
  const auto& edges = graph_->edges();
  if (effects.size() != edges.size())
    throw std::logic_error("effects not aligned with edges");

  size_t n_cells = tracked_.size() * nodes_;
  parent_.resize(n_cells);
  for (size_t i = 0; i < n_cells; ++i) parent_[i] = static_cast<int32_t>(i);

  // Frame merges: an edge equates every atom it does not touch.
  auto touches = [&](const EdgeEffects& fx, int atom) {
    if (std::binary_search(fx.adds.begin(), fx.adds.end(), atom)) return true;
    if (std::binary_search(fx.plain_dels.begin(), fx.plain_dels.end(), atom)) return true;
    return std::binary_search(fx.prefix_dels.begin(), fx.prefix_dels.end(),
                              prefix_of_[atom]);
  };
  for (size_t ei = 0; ei < edges.size(); ++ei) {
    const EdgeEffects& fx = effects[ei];
    NodeId s = edges[ei].src, t = edges[ei].dst;
    if (s == t) continue;
    for (int a = 0; a < static_cast<int>(tracked_.size()); ++a) {
      if (touches(fx, a)) continue;
      int ra = find(static_cast<int>(cell(a, s)));
      int rb = find(static_cast<int>(cell(a, t)));
      if (ra != rb) parent_[std::max(ra, rb)] = std::min(ra, rb);
    }
  }
  class_value_.assign(n_cells, Tri::Unknown);
  class_cells_.assign(n_cells, {});
  for (size_t c = 0; c < n_cells; ++c)
    class_cells_[find(static_cast<int>(c))].push_back(static_cast<int32_t>(c));
}

AtomLedger::Result AtomLedger::propagate(const std::vector<EdgeEffects>& effects,
                                         const LedgerOptions& opts) {
  Result res;
  condition2_ = opts.mutex_condition2;
  violation_kind_ = 0;
  violation_edge_ = 0;
  const auto& edges = graph_->edges();
  build_classes(effects);

  std::vector<int> true_queue;
  auto set_value = [&](int atom, NodeId node, Tri v) {
    int cls = find(static_cast<int>(cell(atom, node)));
    if (!assign(cls, v)) return false;
    if (v == Tri::True && opts.mutex_condition2) true_queue.push_back(cls);
    return true;
  };

  // Unit constraints from edge effects. A self-loop edge (merged endpoints)
  // that adds or deletes is contradictory by construction and caught here
  // because src and dst share cells.
  for (size_t ei = 0; ei < edges.size(); ++ei) {
    const EdgeEffects& fx = effects[ei];
    NodeId s = edges[ei].src, t = edges[ei].dst;
    auto conflict = [&]() {
      violation_kind_ = 2;
      violation_edge_ = static_cast<EdgeId>(ei);
      return res;
    };
    for (int32_t a : fx.adds) {
      if (!set_value(a, s, Tri::False)) return conflict();
      if (!set_value(a, t, Tri::True)) return conflict();
    }
    for (int32_t a : fx.plain_dels) {
      if (!set_value(a, s, Tri::True)) return conflict();
      if (!set_value(a, t, Tri::False)) return conflict();
    }
    for (int32_t g : fx.prefix_dels) {
      for (int32_t a : groups_[g]) {
        if (std::binary_search(fx.adds.begin(), fx.adds.end(), a)) continue;
        if (!set_value(a, t, Tri::False)) return conflict();
      }
    }
  }
  if (opts.mutex_condition2 && !close_condition2(true_queue)) {
    violation_kind_ = 3;
    return res;
  }

  // Existence clauses: each prefix delete needs one true atom with the
  // prefix at the edge source. Unit-narrow to fixpoint.
  struct Clause {
    std::vector<int32_t> cells;
    EdgeId edge;
  };
  std::vector<Clause> clauses;
  if (opts.existence_clauses) {
    for (size_t ei = 0; ei < edges.size(); ++ei) {
      for (int32_t g : effects[ei].prefix_dels) {
        Clause cl;
        cl.edge = static_cast<EdgeId>(ei);
        for (int32_t a : groups_[g])
          cl.cells.push_back(static_cast<int32_t>(cell(a, edges[ei].src)));
        clauses.push_back(std::move(cl));
      }
    }
  }

  auto clause_state = [&](const Clause& cl, int* unknown_cls) {
    // 1 satisfied, 0 open, -1 violated
    int unknowns = 0;
    for (int32_t c : cl.cells) {
      int cls = find(c);
      if (class_value_[cls] == Tri::True) return 1;
      if (class_value_[cls] == Tri::Unknown) {
        ++unknowns;
        if (unknown_cls) *unknown_cls = cls;
      }
    }
    if (unknowns == 0) return -1;
    return 0;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (const Clause& cl : clauses) {
      int ucls = -1;
      int st = clause_state(cl, &ucls);
      if (st == -1) {
        violation_kind_ = 1;
        violation_edge_ = cl.edge;
        return res;
      }
      if (st == 0) {
        // Count distinct unknown classes; one left means it is forced true.
        std::vector<int> un;
        for (int32_t c : cl.cells) {
          int cls = find(c);
          if (class_value_[cls] == Tri::Unknown) un.push_back(cls);
        }
        std::sort(un.begin(), un.end());
        un.erase(std::unique(un.begin(), un.end()), un.end());
        if (un.size() == 1) {
          if (!assign(un[0], Tri::True)) {
            violation_kind_ = 1;
            violation_edge_ = cl.edge;
            return res;
          }
          if (opts.mutex_condition2) {
            true_queue.push_back(un[0]);
            if (!close_condition2(true_queue)) {
              violation_kind_ = 3;
              violation_edge_ = cl.edge;
              return res;
            }
          }
          changed = true;
        }
      }
    }
  }

  // Anything still open goes to search over the involved classes. Forced
  // values stay as they are; the search only decides satisfiability.
  std::vector<const Clause*> open;
  for (const Clause& cl : clauses)
    if (clause_state(cl, nullptr) == 0) open.push_back(&cl);

  if (open.empty()) {
    res.consistent = true;
    return res;
  }
  res.search_used = true;

  // Depth-first: satisfy open clauses one at a time by trying each unknown
  // candidate class as true. The ledger view keeps only forced values, so
  // the pre-search state is restored afterwards.
  std::vector<Tri> forced = class_value_;
  size_t budget = opts.search_budget;

  struct Frame {
    std::vector<Tri> values;
    std::vector<const Clause*> open;
    size_t next_candidate = 0;
  };

  std::vector<Frame> stack;
  stack.push_back(Frame{class_value_, open, 0});
  while (!stack.empty() && !res.consistent) {
    if (budget-- == 0) throw std::runtime_error("ledger search budget exhausted");
    Frame& f = stack.back();
    if (f.open.empty()) {
      res.consistent = true;
      break;
    }
    const Clause& cl = *f.open.front();
    class_value_ = f.values;
    std::vector<int> cand;
    for (int32_t c : cl.cells) {
      int cls = find(c);
      if (class_value_[cls] == Tri::Unknown) cand.push_back(cls);
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    if (f.next_candidate >= cand.size()) {
      stack.pop_back();
      continue;
    }
    int pick = cand[f.next_candidate++];
    bool ok = assign(pick, Tri::True);
    if (ok && opts.mutex_condition2) {
      std::vector<int> q{pick};
      ok = close_condition2(q);
    }
    if (!ok) continue;
    std::vector<const Clause*> next_open;
    bool violated = false;
    for (const Clause* c2 : f.open) {
      int st = clause_state(*c2, nullptr);
      if (st == -1) {
        violated = true;
        break;
      }
      if (st == 0) next_open.push_back(c2);
    }
    if (violated) continue;
    stack.push_back(Frame{class_value_, std::move(next_open), 0});
  }

  class_value_ = std::move(forced);
  if (!res.consistent && !open.empty()) {
    violation_kind_ = 1;
    violation_edge_ = open.front()->edge;
  }
  return res;
}

Tri AtomLedger::value(int atom_idx, NodeId node) const {
  if (atom_idx < 0) return Tri::Unknown;
  return class_value_[find(static_cast<int>(cell(atom_idx, node)))];
}

Tri AtomLedger::value(GroundAtom a, NodeId node) const { return value(atom_index(a), node); }

}  // namespace sps
