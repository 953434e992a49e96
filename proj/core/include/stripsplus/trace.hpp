#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stripsplus/domain.hpp"

namespace sps {

enum class ObsMode : uint8_t { Hidden, Full, Local };

// Observability declaration: named predicates with arity and mode. The
// learner sees only the full/local entries; the sampler additionally uses
// hidden lines to suppress emission.
struct ObsDecl {
  struct Entry {
    std::string pred;
    uint8_t arity;
    ObsMode mode;
  };
  std::vector<Entry> entries;

  ObsMode mode_of(const std::string& pred) const {
    for (const auto& e : entries)
      if (e.pred == pred) return e.mode;
    return ObsMode::Hidden;
  }
};

ObsDecl parse_obs_decl(const std::string& text);
std::string write_obs_decl(const ObsDecl& d);

// One step of a trace block: action with explicit arguments, leading to the
// next node whose observations follow.
struct TraceStep {
  std::string action;
  std::vector<std::string> args;  // object names
  std::string to_node;
};

struct NegativeWitness {
  std::string pred;
  std::vector<std::string> args;
  int deleter_index;  // step index of the deleting action
};

struct TraceBlock {
  std::string id;
  std::vector<std::string> node_ids;                       // node_ids[i] before step i
  std::vector<std::vector<std::pair<std::string, std::vector<std::string>>>> node_obs;
  std::vector<TraceStep> steps;
  std::optional<NegativeWitness> negative;
};

struct TraceFile {
  std::vector<std::pair<std::string, std::string>> meta;  // ordered key/value
  std::vector<TraceBlock> blocks;
  std::vector<std::pair<std::string, std::string>> eqs;

  std::string meta_value(const std::string& key) const {
    for (const auto& [k, v] : meta)
      if (k == key) return v;
    return {};
  }
  size_t total_steps() const {
    size_t n = 0;
    for (const auto& b : blocks) n += b.steps.size();
    return n;
  }
};

// Reads the line-oriented trace format. When a domain is given, action names
// and observation predicates are validated against it and observations of
// non-observable predicates are rejected.
TraceFile read_traces(const std::string& text);
TraceFile read_traces(const std::string& text, const DomainSpec& domain, const ObsDecl& obs);

std::string write_traces(const TraceFile& tf);

// Test-only sidecar: full hidden states per node and fully bound actions per
// edge. Never consumed by the learner.
struct GroundTruth {
  std::vector<std::string> objects;
  std::vector<std::string> predicates;  // name per PredId used in states
  std::map<std::string, std::vector<GroundAtom>> node_state;  // node id -> sorted atoms
  struct EdgeTruth {
    std::string from, to;
    std::string action;
    std::vector<ObjectId> explicit_args, implicit_args;
  };
  std::vector<EdgeTruth> edges;
};

std::string write_ground_truth(const GroundTruth& gt);
GroundTruth read_ground_truth(const std::string& text);

}  // namespace sps
