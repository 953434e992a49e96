#pragma once

#include <string>
#include <vector>

#include "stripsplus/trace.hpp"

namespace sps {

struct ObservationConflict : std::runtime_error {
  explicit ObservationConflict(const std::string& m) : std::runtime_error(m) {}
};

// The merged labeled graph G_T of a set of extended traces. Objects and
// action names are interned per graph; observed predicates come from the
// observability declaration. Implicit arguments discovered during learning
// are annotated onto edges in place.
class TraceGraph {
 public:
  struct SchemaInfo {
    std::string name;
    uint8_t explicit_arity = 0;
    uint8_t implicit_count = 0;  // grows as queries are learned
    int positions() const { return explicit_arity + implicit_count; }
  };

  struct Edge {
    NodeId src, dst;
    SchemaId schema;
    std::vector<ObjectId> explicit_args;
    std::vector<ObjectId> implicit_args;  // parallel to learned z order
    uint32_t trace;  // block index
    uint32_t step;

    ObjectId position(int idx) const {  // 1-based over explicit then implicit
      int e = static_cast<int>(explicit_args.size());
      return idx <= e ? explicit_args[idx - 1] : implicit_args[idx - 1 - e];
    }
  };

  static TraceGraph build(const TraceFile& tf, const ObsDecl& obs);

  size_t num_nodes() const { return node_count_; }
  size_t num_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  std::vector<Edge>& edges_mutable() { return edges_; }
  const std::vector<EdgeId>& out_edges(NodeId n) const { return out_[n]; }
  const std::vector<EdgeId>& in_edges(NodeId n) const { return in_[n]; }

  const std::vector<SchemaInfo>& schemas() const { return schemas_; }
  std::vector<SchemaInfo>& schemas_mutable() { return schemas_; }
  int schema_id(const std::string& name) const;

  const SymbolTable& objects() const { return objects_; }
  size_t num_objects() const { return objects_.size(); }

  // Observed predicate table (from the declaration, in declaration order).
  const ObsDecl& obs_decl() const { return obs_; }
  int obs_pred_id(const std::string& name) const;
  const std::vector<GroundAtom>& observations(NodeId n) const { return node_obs_[n]; }

  // True local objects known to the learner at a node: the arguments of the
  // trace actions leaving the node (an under-approximation of locality).
  std::vector<ObjectId> known_local_objects(NodeId n) const;

  // Edge indices per schema, in (trace, step) order: the occurrence lists
  // that feature checking and query synthesis iterate.
  const std::vector<EdgeId>& occurrences(SchemaId s) const { return occ_[s]; }

  const std::string& node_label(NodeId n) const { return node_labels_[n]; }
  int node_of_label(const std::string& label) const;

  std::string debug_dump() const;

 private:
  size_t node_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeId>> out_, in_;
  std::vector<SchemaInfo> schemas_;
  SymbolTable objects_;
  ObsDecl obs_;
  std::vector<std::vector<GroundAtom>> node_obs_;
  std::vector<std::string> node_labels_;  // representative raw label per merged node
  std::vector<std::vector<EdgeId>> occ_;
  std::vector<std::pair<std::string, NodeId>> label_index_;
};

}  // namespace sps
