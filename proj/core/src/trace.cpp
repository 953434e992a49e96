#include "stripsplus/trace.hpp"

#include <sstream>

#include "stripsplus/io.hpp"

namespace sps {

namespace {

struct LineReader {
  std::istringstream in;
  int lineno = 0;
  explicit LineReader(const std::string& text) : in(text) {}
  bool next(std::vector<std::string>& words) {
    std::string line;
    while (std::getline(in, line)) {
      ++lineno;
      words.clear();
      std::istringstream ls(line);
      std::string w;
      while (ls >> w) {
        if (w[0] == '#') break;  // comment to end of line
        words.push_back(w);
      }
      if (!words.empty()) return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw io::ParseError(lineno, 1, msg);
  }
};

}  // namespace

ObsDecl parse_obs_decl(const std::string& text) {
  ObsDecl d;
  LineReader r(text);
  std::vector<std::string> w;
  while (r.next(w)) {
    if (w.size() != 3) r.fail("expected: <predicate> <arity> full|local|hidden");
    ObsDecl::Entry e;
    e.pred = w[0];
    e.arity = static_cast<uint8_t>(std::stoi(w[1]));
    if (w[2] == "full") e.mode = ObsMode::Full;
    else if (w[2] == "local") e.mode = ObsMode::Local;
    else if (w[2] == "hidden") e.mode = ObsMode::Hidden;
    else r.fail("unknown mode " + w[2]);
    d.entries.push_back(std::move(e));
  }
  return d;
}

std::string write_obs_decl(const ObsDecl& d) {
  std::ostringstream os;
  for (const auto& e : d.entries) {
    os << e.pred << " " << static_cast<int>(e.arity) << " "
       << (e.mode == ObsMode::Full ? "full" : e.mode == ObsMode::Local ? "local" : "hidden")
       << "\n";
  }
  return os.str();
}

TraceFile read_traces(const std::string& text) {
  TraceFile tf;
  LineReader r(text);
  std::vector<std::string> w;
  TraceBlock* cur = nullptr;
  bool in_block = false;

  while (r.next(w)) {
    const std::string& kw = w[0];
    if (kw == "meta") {
      if (w.size() < 3) r.fail("meta needs key and value");
      std::string value = w[2];
      for (size_t i = 3; i < w.size(); ++i) value += " " + w[i];
      tf.meta.emplace_back(w[1], value);
    } else if (kw == "trace") {
      if (w.size() != 2) r.fail("trace needs an id");
      tf.blocks.emplace_back();
      cur = &tf.blocks.back();
      cur->id = w[1];
      in_block = true;
    } else if (kw == "node") {
      if (!in_block) r.fail("node outside trace block");
      if (w.size() != 2) r.fail("node needs an id");
      if (!cur->node_ids.empty()) r.fail("only the first node is declared with 'node'");
      cur->node_ids.push_back(w[1]);
      cur->node_obs.emplace_back();
    } else if (kw == "obs") {
      if (!in_block || cur->node_ids.empty()) r.fail("obs before any node");
      if (w.size() < 2) r.fail("obs needs a predicate");
      std::vector<std::string> args(w.begin() + 2, w.end());
      cur->node_obs.back().emplace_back(w[1], std::move(args));
    } else if (kw == "action") {
      if (!in_block || cur->node_ids.empty()) r.fail("action before any node");
      // action <name> <obj>* -> <nid>
      if (w.size() < 4 || w[w.size() - 2] != "->") r.fail("action line needs '-> <node>'");
      TraceStep st;
      st.action = w[1];
      for (size_t i = 2; i + 2 < w.size(); ++i) st.args.push_back(w[i]);
      st.to_node = w.back();
      cur->node_ids.push_back(st.to_node);
      cur->node_obs.emplace_back();
      cur->steps.push_back(std::move(st));
    } else if (kw == "negwitness") {
      if (!in_block) r.fail("negwitness outside trace block");
      if (w.size() < 3) r.fail("negwitness <pred> <obj>* <deleter-index>");
      NegativeWitness nw;
      nw.pred = w[1];
      for (size_t i = 2; i + 1 < w.size(); ++i) nw.args.push_back(w[i]);
      nw.deleter_index = std::stoi(w.back());
      cur->negative = std::move(nw);
    } else if (kw == "end") {
      if (!in_block) r.fail("end outside trace block");
      in_block = false;
      cur = nullptr;
    } else if (kw == "eq") {
      if (in_block) r.fail("eq lines come after all trace blocks");
      if (w.size() != 3) r.fail("eq <node> <node>");
      tf.eqs.emplace_back(w[1], w[2]);
    } else {
      r.fail("unknown keyword " + kw);
    }
  }
  if (in_block) throw io::ParseError(r.lineno, 1, "unterminated trace block");

  // Node ids must be unique before merging.
  std::map<std::string, int> seen;
  for (const auto& b : tf.blocks)
    for (const auto& n : b.node_ids)
      if (++seen[n] > 1) throw io::ParseError(0, 0, "duplicate node id " + n);
  return tf;
}

TraceFile read_traces(const std::string& text, const DomainSpec& domain, const ObsDecl& obs) {
  TraceFile tf = read_traces(text);
  for (const auto& b : tf.blocks) {
    for (const auto& st : b.steps) {
      int sid = domain.schema_id(st.action);
      if (sid < 0) throw SemanticError("trace action " + st.action + " not in domain");
      if (st.args.size() != domain.schemas[sid].explicit_arity)
        throw SemanticError("trace action " + st.action + " has wrong argument count");
    }
    for (const auto& node : b.node_obs) {
      for (const auto& [pred, args] : node) {
        int pid = domain.predicate_id(pred);
        if (pid < 0) throw SemanticError("observation of unknown predicate " + pred);
        if (args.size() != domain.predicates[pid].arity)
          throw SemanticError("observation arity mismatch for " + pred);
        if (obs.mode_of(pred) == ObsMode::Hidden)
          throw SemanticError("observation of hidden predicate " + pred);
      }
    }
  }
  return tf;
}

std::string write_traces(const TraceFile& tf) {
  std::ostringstream os;
  for (const auto& [k, v] : tf.meta) os << "meta " << k << " " << v << "\n";
  for (const auto& b : tf.blocks) {
    os << "trace " << b.id << "\n";
    if (b.negative) {
      os << "negwitness " << b.negative->pred;
      for (const auto& a : b.negative->args) os << " " << a;
      os << " " << b.negative->deleter_index << "\n";
    }
    for (size_t i = 0; i < b.node_ids.size(); ++i) {
      if (i == 0) os << "node " << b.node_ids[0] << "\n";
      for (const auto& [pred, args] : b.node_obs[i]) {
        os << "obs " << pred;
        for (const auto& a : args) os << " " << a;
        os << "\n";
      }
      if (i < b.steps.size()) {
        os << "action " << b.steps[i].action;
        for (const auto& a : b.steps[i].args) os << " " << a;
        os << " -> " << b.steps[i].to_node << "\n";
      }
    }
    os << "end\n";
  }
  for (const auto& [a, b] : tf.eqs) os << "eq " << a << " " << b << "\n";
  return os.str();
}

std::string write_ground_truth(const GroundTruth& gt) {
  std::ostringstream os;
  os << "objects";
  for (const auto& o : gt.objects) os << " " << o;
  os << "\npredicates";
  for (const auto& p : gt.predicates) os << " " << p;
  os << "\n";
  for (const auto& [node, atoms] : gt.node_state) {
    os << "state " << node << "\n";
    for (GroundAtom a : atoms) {
      os << "atom " << a.bits << "\n";
    }
  }
  for (const auto& e : gt.edges) {
    os << "edge " << e.from << " " << e.to << " " << e.action;
    for (ObjectId o : e.explicit_args) os << " " << o;
    os << " |";
    for (ObjectId o : e.implicit_args) os << " " << o;
    os << "\n";
  }
  return os.str();
}

GroundTruth read_ground_truth(const std::string& text) {
  GroundTruth gt;
  LineReader r(text);
  std::vector<std::string> w;
  std::vector<GroundAtom>* cur = nullptr;
  while (r.next(w)) {
    if (w[0] == "objects") {
      gt.objects.assign(w.begin() + 1, w.end());
    } else if (w[0] == "predicates") {
      gt.predicates.assign(w.begin() + 1, w.end());
    } else if (w[0] == "state") {
      cur = &gt.node_state[w[1]];
    } else if (w[0] == "atom") {
      if (!cur) r.fail("atom before state");
      cur->push_back(GroundAtom{std::stoull(w[1])});
    } else if (w[0] == "edge") {
      GroundTruth::EdgeTruth e;
      e.from = w[1];
      e.to = w[2];
      e.action = w[3];
      size_t i = 4;
      for (; i < w.size() && w[i] != "|"; ++i)
        e.explicit_args.push_back(static_cast<ObjectId>(std::stoi(w[i])));
      for (++i; i < w.size(); ++i)
        e.implicit_args.push_back(static_cast<ObjectId>(std::stoi(w[i])));
      gt.edges.push_back(std::move(e));
    } else {
      r.fail("unknown keyword " + w[0]);
    }
  }
  return gt;
}

}  // namespace sps
