#include "stripsplus/analyzer.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace sps {

int DependencyGraph::vertex_of(const std::string& label) const {
  for (size_t i = 0; i < vertices.size(); ++i)
    if (vertices[i].label == label) return static_cast<int>(i);
  return -1;
}

std::string DependencyGraph::dump() const {
  std::ostringstream os;
  os << "vertices " << vertices.size() << " edges " << edges.size() << "\n";
  for (const auto& v : vertices) os << "vertex " << v.label << "\n";
  for (const auto& e : edges) {
    const char* t = e.type == EdgeType::Effect ? "effect"
                    : e.type == EdgeType::Precondition ? "precondition"
                                                       : "stratification";
    os << "edge " << vertices[e.from].label << " -> " << vertices[e.to].label << " " << t << "\n";
  }
  os << (acyclic ? "acyclic" : "cyclic");
  if (acyclic) os << " rank " << rank;
  os << "\n";
  return os.str();
}

DependencyGraph dependency_graph(const DomainSpec& d,
                                 const std::set<std::string>& observed_predicates) {
  DependencyGraph g;
  std::map<std::string, int> index;
  auto add_vertex = [&](DependencyGraph::Vertex v) {
    auto it = index.find(v.label);
    if (it != index.end()) return it->second;
    index[v.label] = static_cast<int>(g.vertices.size());
    g.vertices.push_back(std::move(v));
    return static_cast<int>(g.vertices.size() - 1);
  };

  for (PredId p = 0; p < d.predicates.size(); ++p) {
    if (observed_predicates.count(d.predicates[p].name)) continue;
    add_vertex({DependencyGraph::Vertex::Predicate, d.predicates[p].name, p, 0, 0});
  }
  for (SchemaId s = 0; s < d.schemas.size(); ++s) {
    for (int zi = 1; zi <= d.schemas[s].implicit_arity(); ++zi) {
      add_vertex({DependencyGraph::Vertex::ZVar,
                  "z" + std::to_string(zi) + "^" + d.schemas[s].name, 0, s, zi});
    }
  }

  auto zlabel = [&](SchemaId s, int zi) {
    return "z" + std::to_string(zi) + "^" + d.schemas[s].name;
  };
  std::set<std::pair<int, int>> seen;
  auto add_edge = [&](int from, int to, DependencyGraph::EdgeType t) {
    if (from < 0 || to < 0) return;
    if (!seen.insert({from, to}).second) return;
    g.edges.push_back({from, to, t});
  };

  for (SchemaId s = 0; s < d.schemas.size(); ++s) {
    const ActionSchema& a = d.schemas[s];
    // Effect edges: p -> z_i^a for p-effects mentioning z_i, except deletes
    // of an atom that already occurs in Q^i.
    auto effect_edges = [&](const std::vector<LiftedAtom>& effs, bool deletes) {
      for (const auto& e : effs) {
        for (const auto& v : e.args) {
          if (v.cls != VarClass::Implicit) continue;
          if (deletes) {
            const Subquery& q = a.subqueries[v.index - 1];
            LiftedAtom probe = e;
            probe.negated = false;
            if (std::find(q.atoms.begin(), q.atoms.end(), probe) != q.atoms.end()) continue;
          }
          add_edge(g.vertex_of(d.predicates[e.pred].name), g.vertex_of(zlabel(s, v.index)),
                   DependencyGraph::EdgeType::Effect);
        }
      }
    };
    effect_edges(a.add_effects, false);
    effect_edges(a.del_effects, true);

    // Precondition edges and stratification edges from subquery atoms.
    for (const Subquery& q : a.subqueries) {
      for (const auto& atom : q.atoms) {
        add_edge(g.vertex_of(zlabel(s, q.target)), g.vertex_of(d.predicates[atom.pred].name),
                 DependencyGraph::EdgeType::Precondition);
        for (const auto& v : atom.args) {
          if (v.cls == VarClass::Implicit && v.index < q.target) {
            add_edge(g.vertex_of(zlabel(s, q.target)), g.vertex_of(zlabel(s, v.index)),
                     DependencyGraph::EdgeType::Stratification);
          }
        }
      }
    }
  }

  // Acyclicity + longest path by edges (Kahn order).
  size_t n = g.vertices.size();
  std::vector<int> indeg(n, 0);
  std::vector<std::vector<int>> out(n);
  for (const auto& e : g.edges) {
    out[e.from].push_back(e.to);
    indeg[e.to]++;
  }
  std::vector<int> order;
  for (size_t i = 0; i < n; ++i)
    if (indeg[i] == 0) order.push_back(static_cast<int>(i));
  std::vector<int> dist(n, 0);
  for (size_t qi = 0; qi < order.size(); ++qi) {
    int v = order[qi];
    for (int to : out[v]) {
      dist[to] = std::max(dist[to], dist[v] + 1);
      if (--indeg[to] == 0) order.push_back(to);
    }
  }
  g.acyclic = order.size() == n;
  if (g.acyclic) g.rank = n == 0 ? 0 : *std::max_element(dist.begin(), dist.end());
  return g;
}

std::vector<std::string> key_predicates(const DomainSpec& d) {
  std::set<std::string> keys;
  auto scan = [&](const LiftedAtom& a) {
    int x_count = 0;
    std::set<int> zs;
    for (const auto& v : a.args) {
      if (v.cls == VarClass::Explicit) ++x_count;
      if (v.cls == VarClass::Implicit) zs.insert(v.index);
    }
    if (x_count == 0 && zs.size() == 1) keys.insert(d.predicates[a.pred].name);
  };
  for (const auto& s : d.schemas) {
    for (const auto& q : s.subqueries)
      for (const auto& a : q.atoms) scan(a);
    for (const auto& a : s.extra_precondition) scan(a);
  }
  return {keys.begin(), keys.end()};
}

LearnabilityReport check_learnability(const DomainSpec& d, const ObsDecl& obs, int d_max) {
  LearnabilityReport r;
  std::set<std::string> observed;
  for (const auto& e : obs.entries)
    if (e.mode != ObsMode::Hidden) observed.insert(e.pred);
  DependencyGraph g = dependency_graph(d, observed);
  r.acyclic = g.acyclic;
  r.rank = g.rank;
  r.rank_within_dmax = g.acyclic && (d_max == 0 || g.rank <= d_max);
  r.keys = key_predicates(d);
  r.local_conditions_hold = true;
  for (const auto& k : r.keys) {
    if (obs.mode_of(k) != ObsMode::Full) {
      r.keys_not_fully_observed.push_back(k);
      r.local_conditions_hold = false;
    }
  }
  std::ostringstream os;
  os << (g.acyclic ? "dependency graph acyclic, rank " + std::to_string(g.rank)
                   : "dependency graph CYCLIC");
  if (d_max > 0) os << (r.rank_within_dmax ? ", within d_max" : ", exceeds d_max");
  os << "\nkey predicates:";
  for (const auto& k : r.keys) os << " " << k;
  if (r.keys.empty()) os << " (none)";
  os << "\nlocal-observability conditions " << (r.local_conditions_hold ? "hold" : "violated");
  for (const auto& k : r.keys_not_fully_observed) os << " (" << k << " not fully observed)";
  os << "\n";
  r.text = os.str();
  return r;
}

}  // namespace sps
