#pragma once

#include <set>
#include <string>
#include <vector>

#include "stripsplus/domain.hpp"
#include "stripsplus/trace.hpp"

namespace sps {

// Dependency graph over implicit variables z_i^a and (non-observed)
// predicates. Effect edges run p -> z_i^a, precondition edges z_i^a -> p,
// stratification edges z_j^a -> z_i^a for j > i. Deletes whose atom is
// itself part of Q^i stay out: that variable is determined by the very atom
// being removed, so learning it needs no prior knowledge of p's effects.
struct DependencyGraph {
  struct Vertex {
    enum Kind { Predicate, ZVar } kind;
    std::string label;       // predicate name or z<i>^<action>
    PredId pred = 0;         // when Predicate
    SchemaId schema = 0;     // when ZVar
    int z_index = 0;
  };
  enum class EdgeType { Effect, Precondition, Stratification };
  struct Edge {
    int from, to;
    EdgeType type;
  };

  std::vector<Vertex> vertices;
  std::vector<Edge> edges;

  bool acyclic = false;
  int rank = -1;  // longest path in edges; defined only when acyclic

  int vertex_of(const std::string& label) const;
  std::string dump() const;
};

DependencyGraph dependency_graph(const DomainSpec& d,
                                 const std::set<std::string>& observed_predicates);

// Key predicates: appear in a precondition atom with no explicit argument
// and exactly one implicit argument.
std::vector<std::string> key_predicates(const DomainSpec& d);

struct LearnabilityReport {
  bool acyclic = false;
  int rank = -1;
  bool rank_within_dmax = false;
  std::vector<std::string> keys;
  std::vector<std::string> keys_not_fully_observed;
  bool local_conditions_hold = false;  // all keys fully observed
  std::string text;
};

LearnabilityReport check_learnability(const DomainSpec& d, const ObsDecl& obs, int d_max);

}  // namespace sps
