#include "stripsplus/sampler.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "stripsplus/io.hpp"

namespace sps {

uint64_t domain_fingerprint(const DomainSpec& d) { return fnv1a(io::write_domain(d)); }
uint64_t instance_fingerprint(const Instance& inst) {
  uint64_t h = fnv1a(inst.name);
  for (const auto& o : inst.objects) h = fnv1a(o.data(), o.size(), h);
  h = fnv1a(inst.init.data(), inst.init.size() * sizeof(GroundAtom), h);
  return h;
}

namespace {

struct Walker {
  const DomainSpec& d;
  const Instance& inst;

  std::vector<GroundAction> steps(const State& s) const {
    return applicable_actions(d, s, inst.objects.size());
  }
};

State initial_state(const Instance& inst) {
  State s;
  s.atoms = inst.init;
  return s;
}

State walk_burn_in(const DomainSpec& d, const Instance& inst, State s, int n, Rng& rng) {
  Walker w{d, inst};
  for (int i = 0; i < n; ++i) {
    auto acts = w.steps(s);
    if (acts.empty()) throw DeadEnd("burn-in hit a dead end");
    const GroundAction& a = acts[rng.below(acts.size())];
    s = apply(d, d.schemas[a.schema], s, a.explicit_args, a.implicit_args, true);
  }
  return s;
}

void emit_observations(const DomainSpec& d, const Instance& inst, const State& s,
                       const ObsDecl& obs,
                       std::vector<std::pair<std::string, std::vector<std::string>>>* out) {
  std::vector<GroundAtom> locals;
  bool locals_ready = false;
  for (const auto& e : obs.entries) {
    if (e.mode == ObsMode::Hidden) continue;
    int pid = d.predicate_id(e.pred);
    if (pid < 0) throw SemanticError("observability declares unknown predicate " + e.pred);
    if (e.mode == ObsMode::Local && !locals_ready) {
      locals = local_atoms(d, s, inst.objects.size());
      locals_ready = true;
    }
    for (GroundAtom a : s.atoms) {
      if (a.pred() != pid) continue;
      if (e.mode == ObsMode::Local &&
          !std::binary_search(locals.begin(), locals.end(), a))
        continue;
      std::vector<std::string> args;
      for (int i = 0; i < d.predicates[pid].arity; ++i) args.push_back(inst.objects[a.arg(i)]);
      out->emplace_back(e.pred, std::move(args));
    }
  }
}

}  // namespace

SampleResult sample_traces(const DomainSpec& d, const Instance& inst, const ObsDecl& obs,
                           const SamplerConfig& cfg) {
  SampleResult res;
  Walker w{d, inst};
  Rng root(cfg.seed);
  State start = walk_burn_in(d, inst, initial_state(inst), cfg.burn_in, root);

  res.traces.meta.emplace_back("domain", to_hex(domain_fingerprint(d)));
  res.traces.meta.emplace_back("instance", to_hex(instance_fingerprint(inst)));
  res.traces.meta.emplace_back("seed", std::to_string(cfg.seed));
  res.traces.meta.emplace_back("kind", "positive");

  for (const auto& o : inst.objects) res.ground_truth.objects.push_back(o);
  for (const auto& p : d.predicates) res.ground_truth.predicates.push_back(p.name);

  std::map<uint64_t, std::string> first_label;  // state hash -> first node label
  std::map<uint64_t, int> visits;

  for (int ti = 0; ti < cfg.traces; ++ti) {
    Rng rng = root.split(ti);
    TraceBlock block;
    block.id = cfg.id_prefix + std::to_string(ti);
    State s = start;

    auto node_label = [&](int step) {
      return cfg.id_prefix + std::to_string(ti) + "_n" + std::to_string(step);
    };

    auto note_node = [&](int step, const State& st) {
      std::string label = node_label(step);
      block.node_ids.push_back(label);
      block.node_obs.emplace_back();
      emit_observations(d, inst, st, obs, &block.node_obs.back());
      res.ground_truth.node_state[label] = st.atoms;
      uint64_t h = st.hash();
      ++visits[h];
      auto it = first_label.find(h);
      if (it == first_label.end())
        first_label.emplace(h, label);
      else
        res.traces.eqs.emplace_back(it->second, label);
      return label;
    };

    // First node declared explicitly; later nodes come from action lines.
    block.node_ids.push_back(node_label(0));
    block.node_obs.emplace_back();
    emit_observations(d, inst, s, obs, &block.node_obs.back());
    res.ground_truth.node_state[node_label(0)] = s.atoms;
    {
      uint64_t h = s.hash();
      ++visits[h];
      auto it = first_label.find(h);
      if (it == first_label.end())
        first_label.emplace(h, node_label(0));
      else
        res.traces.eqs.emplace_back(it->second, node_label(0));
    }

    for (int step = 0; step < cfg.length; ++step) {
      auto acts = w.steps(s);
      if (acts.empty()) throw DeadEnd("trace " + block.id + " dead-ends at step " +
                                      std::to_string(step));
      size_t pick = 0;
      if (cfg.method == SamplerConfig::Bfs) {
        // Coverage-greedy: successor with the fewest visits; ties broken by
        // the deterministic action order with a seeded rotation.
        int best = -1;
        long best_visits = -1;
        size_t rot = rng.below(acts.size());
        for (size_t i = 0; i < acts.size(); ++i) {
          size_t j = (i + rot) % acts.size();
          const GroundAction& a = acts[j];
          State nxt = apply(d, d.schemas[a.schema], s, a.explicit_args, a.implicit_args, true);
          auto it = visits.find(nxt.hash());
          long v = it == visits.end() ? 0 : it->second;
          if (best < 0 || v < best_visits) {
            best = static_cast<int>(j);
            best_visits = v;
          }
        }
        pick = static_cast<size_t>(best);
      } else {
        pick = rng.below(acts.size());
      }
      const GroundAction& a = acts[pick];

      TraceStep st;
      st.action = d.schemas[a.schema].name;
      for (ObjectId o : a.explicit_args) st.args.push_back(inst.objects[o]);
      st.to_node = node_label(step + 1);
      block.steps.push_back(st);

      GroundTruth::EdgeTruth et;
      et.from = block.node_ids.back();
      et.to = st.to_node;
      et.action = st.action;
      et.explicit_args = a.explicit_args;
      et.implicit_args = a.implicit_args;
      res.ground_truth.edges.push_back(std::move(et));

      s = apply(d, d.schemas[a.schema], s, a.explicit_args, a.implicit_args, true);
      note_node(step + 1, s);
    }
    res.traces.blocks.push_back(std::move(block));
  }
  return res;
}

SampleResult sample_negative_traces(const DomainSpec& d, const Instance& inst, const ObsDecl& obs,
                                    const SamplerConfig& cfg) {
  SampleResult res;
  Walker w{d, inst};
  Rng root(cfg.seed);
  State start = walk_burn_in(d, inst, initial_state(inst), cfg.burn_in, root);

  res.traces.meta.emplace_back("domain", to_hex(domain_fingerprint(d)));
  res.traces.meta.emplace_back("instance", to_hex(instance_fingerprint(inst)));
  res.traces.meta.emplace_back("seed", std::to_string(cfg.seed));
  res.traces.meta.emplace_back("kind", "negative");

  for (int ti = 0; ti < cfg.negatives; ++ti) {
    bool produced = false;
    for (int attempt = 0; attempt < 32 && !produced; ++attempt) {
      Rng rng = root.split(ti * 131 + attempt);

      // One seeded walk, recording states, actions and per-atom add/delete
      // steps for fast witness lookup.
      std::vector<State> states{start};
      std::vector<GroundAction> actions;
      std::vector<std::vector<GroundAction>> applicable_sets;
      std::map<uint64_t, std::vector<int>> add_steps, del_steps;
      for (int step = 0; step < cfg.length; ++step) {
        auto acts = w.steps(states.back());
        if (acts.empty()) break;
        applicable_sets.push_back(acts);
        const GroundAction& a = acts[rng.below(acts.size())];
        const ActionSchema& schema = d.schemas[a.schema];
        for (const auto& eff : schema.add_effects)
          add_steps[ground_atom(eff, a.explicit_args, a.implicit_args).bits].push_back(step);
        for (const auto& eff : schema.del_effects)
          del_steps[ground_atom(eff, a.explicit_args, a.implicit_args).bits].push_back(step);
        actions.push_back(a);
        states.push_back(apply(d, schema, states.back(), a.explicit_args, a.implicit_args, true));
      }

      // Candidate: action g applicable at step t whose fluent precondition
      // atom p (established by an earlier add) is deleted at step j >= t,
      // with g inapplicable right after step j. Prefer late deleters.
      struct Candidate {
        int j, t;
        GroundAction g;
        GroundAtom p;
      };
      std::optional<Candidate> best;

      for (int t = 0; t < static_cast<int>(actions.size()); ++t) {
        for (const GroundAction& g : applicable_sets[t]) {
          const ActionSchema& schema = d.schemas[g.schema];
          // Grounded fluent precondition atoms under this binding.
          std::vector<GroundAtom> precs;
          for (const auto& q : schema.subqueries)
            for (const auto& a : q.atoms)
              if (!d.predicates[a.pred].is_static)
                precs.push_back(ground_atom(a, g.explicit_args, g.implicit_args));
          for (const auto& a : schema.extra_precondition) {
            bool grounded = true;
            for (const auto& v : a.args)
              if (v.cls == VarClass::Existential) grounded = false;
            if (grounded && !a.negated && !d.predicates[a.pred].is_static)
              precs.push_back(ground_atom(a, g.explicit_args, g.implicit_args));
          }
          for (GroundAtom p : precs) {
            auto it = add_steps.find(p.bits);
            if (it == add_steps.end()) continue;
            bool added_before = false;
            for (int s2 : it->second)
              if (s2 < t) added_before = true;
            if (!added_before) continue;  // witness must be in-trace evidence
            // First deletion at or after t.
            auto dit = del_steps.find(p.bits);
            if (dit == del_steps.end()) continue;
            auto jt = std::lower_bound(dit->second.begin(), dit->second.end(), t);
            if (jt == dit->second.end()) continue;
            int j = *jt;
            // g must actually be inapplicable after the deletion.
            AtomIndex idx(states[j + 1], d.predicates.size());
            auto ar = applicable(d, schema, idx, g.explicit_args, inst.objects.size());
            if (ar.applicable) continue;
            if (!best || j > best->j || (j == best->j && t < best->t)) {
              best = Candidate{j, t, g, p};
            }
          }
        }
      }

      if (!best) continue;
      TraceBlock block;
      block.id = cfg.id_prefix + std::to_string(ti);
      NegativeWitness nw;
      nw.pred = d.predicates[best->p.pred()].name;
      for (int i = 0; i < d.predicates[best->p.pred()].arity; ++i)
        nw.args.push_back(inst.objects[best->p.arg(i)]);
      nw.deleter_index = best->j;
      block.negative = nw;

      auto label = [&](int step) {
        return cfg.id_prefix + std::to_string(ti) + "_n" + std::to_string(step);
      };
      block.node_ids.push_back(label(0));
      block.node_obs.emplace_back();
      emit_observations(d, inst, states[0], obs, &block.node_obs.back());
      res.ground_truth.node_state[label(0)] = states[0].atoms;
      for (int s2 = 0; s2 <= best->j; ++s2) {
        TraceStep st;
        st.action = d.schemas[actions[s2].schema].name;
        for (ObjectId o : actions[s2].explicit_args) st.args.push_back(inst.objects[o]);
        st.to_node = label(s2 + 1);
        block.steps.push_back(st);
        block.node_ids.push_back(st.to_node);
        block.node_obs.emplace_back();
        emit_observations(d, inst, states[s2 + 1], obs, &block.node_obs.back());
        res.ground_truth.node_state[st.to_node] = states[s2 + 1].atoms;
      }
      // The failing final action.
      TraceStep fin;
      fin.action = d.schemas[best->g.schema].name;
      for (ObjectId o : best->g.explicit_args) fin.args.push_back(inst.objects[o]);
      fin.to_node = label(best->j + 2);
      block.steps.push_back(fin);
      block.node_ids.push_back(fin.to_node);
      block.node_obs.emplace_back();  // no observations after an inapplicable action
      res.traces.blocks.push_back(std::move(block));
      produced = true;
    }
    if (!produced)
      throw Exhausted("no negative trace found within budget for index " + std::to_string(ti));
  }
  return res;
}

}  // namespace sps
