#include "stripsplus/trace_graph.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace sps {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(size_t n) : parent(n) {
    for (size_t i = 0; i < n; ++i) parent[i] = static_cast<int>(i);
  }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

TraceGraph TraceGraph::build(const TraceFile& tf, const ObsDecl& obs) {
  TraceGraph g;
  g.obs_ = obs;

  // Raw node numbering in file order.
  std::map<std::string, int> raw_id;
  std::vector<std::string> raw_labels;
  for (const auto& b : tf.blocks) {
    for (const auto& n : b.node_ids) {
      if (raw_id.count(n)) throw SemanticError("duplicate node id " + n);
      raw_id[n] = static_cast<int>(raw_labels.size());
      raw_labels.push_back(n);
    }
  }

  UnionFind uf(raw_labels.size());
  for (const auto& [a, b] : tf.eqs) {
    auto ia = raw_id.find(a), ib = raw_id.find(b);
    if (ia == raw_id.end() || ib == raw_id.end())
      throw SemanticError("eq references unknown node");
    uf.unite(ia->second, ib->second);
  }

  // Compact merged representatives to dense node ids, in raw order.
  std::vector<int> compact(raw_labels.size(), -1);
  for (size_t i = 0; i < raw_labels.size(); ++i) {
    int rep = uf.find(static_cast<int>(i));
    if (compact[rep] < 0) {
      compact[rep] = static_cast<int>(g.node_count_++);
      g.node_labels_.push_back(raw_labels[rep]);
    }
    compact[i] = compact[rep];
  }
  g.node_obs_.resize(g.node_count_);
  g.out_.resize(g.node_count_);
  g.in_.resize(g.node_count_);
  for (size_t i = 0; i < raw_labels.size(); ++i)
    g.label_index_.emplace_back(raw_labels[i], static_cast<NodeId>(compact[i]));
  std::sort(g.label_index_.begin(), g.label_index_.end());

  // Observed-predicate ids follow declaration order (full/local only).
  std::vector<std::pair<std::string, uint8_t>> obs_preds;
  for (const auto& e : obs.entries)
    if (e.mode != ObsMode::Hidden) obs_preds.emplace_back(e.pred, e.arity);

  auto obs_id = [&obs_preds](const std::string& name) {
    for (size_t i = 0; i < obs_preds.size(); ++i)
      if (obs_preds[i].first == name) return static_cast<int>(i);
    return -1;
  };

  // First pass: per-raw-node observation sets, then merge with conflict
  // detection for fully observable predicates (observations are noise-free,
  // so merged nodes must agree exactly on a full predicate's atom set).
  std::vector<std::vector<GroundAtom>> raw_obs(raw_labels.size());
  for (const auto& b : tf.blocks) {
    for (size_t ni = 0; ni < b.node_ids.size(); ++ni) {
      int rid = raw_id[b.node_ids[ni]];
      for (const auto& [pred, args] : b.node_obs[ni]) {
        int pid = obs_id(pred);
        if (pid < 0) throw SemanticError("observation of undeclared predicate " + pred);
        if (args.size() != obs_preds[pid].second)
          throw SemanticError("observation arity mismatch for " + pred);
        std::vector<ObjectId> oa;
        for (const auto& a : args) oa.push_back(static_cast<ObjectId>(g.objects_.intern(a)));
        raw_obs[rid].push_back(GroundAtom::pack(static_cast<PredId>(pid), oa));
      }
    }
  }
  for (auto& v : raw_obs) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  // Conflict check per full predicate; local observations just union.
  std::vector<bool> is_full(obs_preds.size(), false);
  for (size_t i = 0; i < obs_preds.size(); ++i)
    is_full[i] = obs.mode_of(obs_preds[i].first) == ObsMode::Full;

  std::vector<int> merged_seen(g.node_count_, -1);
  for (size_t i = 0; i < raw_labels.size(); ++i) {
    int m = compact[i];
    if (merged_seen[m] < 0) {
      merged_seen[m] = static_cast<int>(i);
      g.node_obs_[m] = raw_obs[i];
    } else {
      int first = merged_seen[m];
      for (PredId p = 0; p < obs_preds.size(); ++p) {
        if (!is_full[p]) continue;
        auto slice = [&](const std::vector<GroundAtom>& v) {
          std::vector<GroundAtom> s;
          for (GroundAtom a : v)
            if (a.pred() == p) s.push_back(a);
          return s;
        };
        if (slice(raw_obs[i]) != slice(raw_obs[first]))
          throw ObservationConflict("merged nodes " + raw_labels[first] + " and " +
                                    raw_labels[i] + " disagree on " + obs_preds[p].first);
      }
      std::vector<GroundAtom> merged;
      std::set_union(g.node_obs_[m].begin(), g.node_obs_[m].end(), raw_obs[i].begin(),
                     raw_obs[i].end(), std::back_inserter(merged));
      g.node_obs_[m] = std::move(merged);
    }
  }

  // Schemas discovered from the traces; arity must be consistent.
  auto schema_of = [&g](const std::string& name, size_t arity) {
    for (size_t i = 0; i < g.schemas_.size(); ++i) {
      if (g.schemas_[i].name == name) {
        if (g.schemas_[i].explicit_arity != arity)
          throw SemanticError("action " + name + " used with inconsistent arities");
        return static_cast<SchemaId>(i);
      }
    }
    SchemaInfo s;
    s.name = name;
    s.explicit_arity = static_cast<uint8_t>(arity);
    g.schemas_.push_back(std::move(s));
    return static_cast<SchemaId>(g.schemas_.size() - 1);
  };

  for (size_t bi = 0; bi < tf.blocks.size(); ++bi) {
    const auto& b = tf.blocks[bi];
    for (size_t si = 0; si < b.steps.size(); ++si) {
      const TraceStep& st = b.steps[si];
      Edge e;
      e.src = static_cast<NodeId>(compact[raw_id[b.node_ids[si]]]);
      e.dst = static_cast<NodeId>(compact[raw_id[b.node_ids[si + 1]]]);
      e.schema = schema_of(st.action, st.args.size());
      for (const auto& a : st.args)
        e.explicit_args.push_back(static_cast<ObjectId>(g.objects_.intern(a)));
      e.trace = static_cast<uint32_t>(bi);
      e.step = static_cast<uint32_t>(si);
      g.edges_.push_back(std::move(e));
    }
  }
  // Schemas sorted by name for deterministic ids; edges re-keyed afterwards.
  std::stable_sort(g.schemas_.begin(), g.schemas_.end(),
                   [](const SchemaInfo& a, const SchemaInfo& b) { return a.name < b.name; });
  {
    std::map<std::string, SchemaId> by_name;
    for (size_t i = 0; i < g.schemas_.size(); ++i)
      by_name[g.schemas_[i].name] = static_cast<SchemaId>(i);
    size_t ei = 0;
    for (size_t bi = 0; bi < tf.blocks.size(); ++bi)
      for (const auto& st : tf.blocks[bi].steps) g.edges_[ei++].schema = by_name[st.action];
  }

  g.occ_.resize(g.schemas_.size());
  for (EdgeId i = 0; i < g.edges_.size(); ++i) {
    const Edge& e = g.edges_[i];
    g.out_[e.src].push_back(i);
    g.in_[e.dst].push_back(i);
    g.occ_[e.schema].push_back(i);
  }
  return g;
}

int TraceGraph::schema_id(const std::string& name) const {
  for (size_t i = 0; i < schemas_.size(); ++i)
    if (schemas_[i].name == name) return static_cast<int>(i);
  return -1;
}

int TraceGraph::obs_pred_id(const std::string& name) const {
  int i = 0;
  for (const auto& e : obs_.entries) {
    if (e.mode == ObsMode::Hidden) continue;
    if (e.pred == name) return i;
    ++i;
  }
  return -1;
}

std::vector<ObjectId> TraceGraph::known_local_objects(NodeId n) const {
  std::vector<ObjectId> out;
  for (EdgeId ei : out_[n]) {
    const Edge& e = edges_[ei];
    out.insert(out.end(), e.explicit_args.begin(), e.explicit_args.end());
    out.insert(out.end(), e.implicit_args.begin(), e.implicit_args.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int TraceGraph::node_of_label(const std::string& label) const {
  auto it = std::lower_bound(label_index_.begin(), label_index_.end(),
                             std::make_pair(label, NodeId{0}));
  if (it != label_index_.end() && it->first == label) return static_cast<int>(it->second);
  return -1;
}

std::string TraceGraph::debug_dump() const {
  std::ostringstream os;
  os << "graph nodes " << node_count_ << " edges " << edges_.size() << "\n";
  for (NodeId n = 0; n < node_count_; ++n) {
    os << "node " << n << " label " << node_labels_[n] << " obs " << node_obs_[n].size() << "\n";
  }
  for (const Edge& e : edges_) {
    os << "edge " << e.src << " -> " << e.dst << " " << schemas_[e.schema].name;
    for (ObjectId o : e.explicit_args) os << " " << objects_.name(o);
    if (!e.implicit_args.empty()) {
      os << " |";
      for (ObjectId o : e.implicit_args) os << " " << objects_.name(o);
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace sps
