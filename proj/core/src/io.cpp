#include "stripsplus/io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace sps::io {

namespace {

struct Token {
  enum Kind { LParen, RParen, Symbol, End } kind;
  std::string text;
  int line, col;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) {}

  Token next() {
    skip_ws();
    Token t;
    t.line = line_;
    t.col = col_;
    if (pos_ >= text_.size()) {
      t.kind = Token::End;
      return t;
    }
    char c = text_[pos_];
    if (c == '(') {
      advance();
      t.kind = Token::LParen;
      return t;
    }
    if (c == ')') {
      advance();
      t.kind = Token::RParen;
      return t;
    }
    t.kind = Token::Symbol;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != '(' && text_[pos_] != ')' && text_[pos_] != ';') {
      t.text += text_[pos_];
      advance();
    }
    if (t.text.empty()) throw ParseError(t.line, t.col, "unexpected character");
    return t;
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }
  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        return;
      }
    }
  }

  const std::string& text_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
};

// Minimal s-expression tree with source locations.
struct SExpr {
  bool is_list = false;
  std::string atom;
  std::vector<SExpr> items;
  int line = 0, col = 0;
};

SExpr parse_sexpr(Lexer& lx, Token first) {
  SExpr e;
  e.line = first.line;
  e.col = first.col;
  if (first.kind == Token::Symbol) {
    e.atom = first.text;
    return e;
  }
  if (first.kind != Token::LParen) throw ParseError(first.line, first.col, "expected '('");
  e.is_list = true;
  for (;;) {
    Token t = lx.next();
    if (t.kind == Token::RParen) return e;
    if (t.kind == Token::End) throw ParseError(t.line, t.col, "unexpected end of input");
    e.items.push_back(parse_sexpr(lx, t));
  }
}

SExpr parse_top(const std::string& text) {
  Lexer lx(text);
  Token t = lx.next();
  if (t.kind == Token::End) throw ParseError(t.line, t.col, "empty input");
  SExpr e = parse_sexpr(lx, t);
  Token rest = lx.next();
  if (rest.kind != Token::End) throw ParseError(rest.line, rest.col, "trailing content");
  return e;
}

bool valid_identifier(const std::string& s) {
  if (s.empty()) return false;
  if (!(std::islower(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) ||
          c == '_' || c == '-'))
      return false;
  return true;
}

// Canonical variable names: x<i>, y<i>, z<i> with 1-based indices.
std::optional<VariableRef> parse_var(const std::string& s) {
  if (s.size() < 2) return std::nullopt;
  VarClass cls;
  if (s[0] == 'x') cls = VarClass::Explicit;
  else if (s[0] == 'y') cls = VarClass::Existential;
  else if (s[0] == 'z') cls = VarClass::Implicit;
  else return std::nullopt;
  int idx = 0;
  for (size_t i = 1; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
    idx = idx * 10 + (s[i] - '0');
  }
  if (idx < 1 || idx > 200) return std::nullopt;
  return VariableRef{cls, static_cast<uint8_t>(idx)};
}

const SExpr& expect_list(const SExpr& e, const char* what) {
  if (!e.is_list) throw ParseError(e.line, e.col, std::string("expected list for ") + what);
  return e;
}

LiftedAtom parse_lifted_atom(const SExpr& e, const DomainSpec& d, bool allow_negated) {
  expect_list(e, "atom");
  if (e.items.empty()) throw ParseError(e.line, e.col, "empty atom");
  const SExpr* body = &e;
  LiftedAtom a;
  if (e.items[0].atom == "not") {
    if (!allow_negated) throw ParseError(e.line, e.col, "negated atom not allowed here");
    if (e.items.size() != 2) throw ParseError(e.line, e.col, "malformed (not ...)");
    a.negated = true;
    body = &e.items[1];
    expect_list(*body, "atom");
    if (body->items.empty()) throw ParseError(body->line, body->col, "empty atom");
  }
  const std::string& pname = body->items[0].atom;
  int pid = d.predicate_id(pname);
  if (pid < 0) throw ParseError(body->line, body->col, "undeclared predicate " + pname);
  a.pred = static_cast<PredId>(pid);
  for (size_t i = 1; i < body->items.size(); ++i) {
    auto v = parse_var(body->items[i].atom);
    if (!v) throw ParseError(body->items[i].line, body->items[i].col,
                             "expected variable, got " + body->items[i].atom);
    a.args.push_back(*v);
  }
  if (a.args.size() != d.predicates[a.pred].arity)
    throw ParseError(body->line, body->col, "arity mismatch for " + pname);
  return a;
}

std::vector<const SExpr*> conjunction_items(const SExpr& e) {
  // Either (and ...) or a single atom.
  std::vector<const SExpr*> items;
  if (e.is_list && !e.items.empty() && e.items[0].atom == "and") {
    for (size_t i = 1; i < e.items.size(); ++i) items.push_back(&e.items[i]);
  } else {
    items.push_back(&e);
  }
  return items;
}

}  // namespace

DomainSpec parse_domain(const std::string& text, const ParseOptions& opts) {
  SExpr root = parse_top(text);
  expect_list(root, "domain");
  if (root.items.size() < 2 || root.items[0].atom != "define")
    throw ParseError(root.line, root.col, "expected (define (domain ...) ...)");
  const SExpr& head = expect_list(root.items[1], "domain header");
  if (head.items.size() != 2 || head.items[0].atom != "domain")
    throw ParseError(head.line, head.col, "expected (domain <name>)");

  DomainSpec d;
  d.name = head.items[1].atom;
  if (!valid_identifier(d.name)) throw ParseError(head.line, head.col, "bad domain name");

  for (size_t i = 2; i < root.items.size(); ++i) {
    const SExpr& sec = expect_list(root.items[i], "section");
    if (sec.items.empty()) throw ParseError(sec.line, sec.col, "empty section");
    const std::string& kw = sec.items[0].atom;
    if (kw == ":predicates") {
      for (size_t j = 1; j < sec.items.size(); ++j) {
        const SExpr& pe = expect_list(sec.items[j], "predicate");
        if (pe.items.empty()) throw ParseError(pe.line, pe.col, "empty predicate");
        PredicateInfo p;
        p.name = pe.items[0].atom;
        if (!valid_identifier(p.name)) throw ParseError(pe.line, pe.col, "bad predicate name");
        int arity = 0;
        for (size_t k = 1; k < pe.items.size(); ++k) {
          if (pe.items[k].atom == ":static") {
            p.is_static = true;
          } else if (pe.items[k].atom == ":mutex") {
            p.is_mutex = true;
          } else {
            auto v = parse_var(pe.items[k].atom);
            if (!v || v->cls != VarClass::Explicit)
              throw ParseError(pe.items[k].line, pe.items[k].col, "expected x<i> placeholder");
            ++arity;
          }
        }
        if (arity > kMaxAtomArity) throw ParseError(pe.line, pe.col, "arity above limit");
        p.arity = static_cast<uint8_t>(arity);
        d.predicates.push_back(std::move(p));
      }
    } else if (kw == ":action") {
      if (sec.items.size() < 2) throw ParseError(sec.line, sec.col, "action without name");
      ActionSchema s;
      s.name = sec.items[1].atom;
      if (!valid_identifier(s.name)) throw ParseError(sec.line, sec.col, "bad action name");
      int n_vars = 0;
      std::vector<LiftedAtom> precondition;
      for (size_t j = 2; j + 1 < sec.items.size(); j += 2) {
        const std::string& key = sec.items[j].atom;
        const SExpr& val = sec.items[j + 1];
        if (key == ":parameters") {
          expect_list(val, ":parameters");
          for (size_t k = 0; k < val.items.size(); ++k) {
            auto v = parse_var(val.items[k].atom);
            if (!v || v->cls != VarClass::Explicit || v->index != k + 1)
              throw ParseError(val.items[k].line, val.items[k].col,
                               "parameters must be x1..xn in order");
          }
          s.explicit_arity = static_cast<uint8_t>(val.items.size());
        } else if (key == ":vars") {
          expect_list(val, ":vars");
          for (size_t k = 0; k < val.items.size(); ++k) {
            auto v = parse_var(val.items[k].atom);
            if (!v || v->cls != VarClass::Implicit || v->index != k + 1)
              throw ParseError(val.items[k].line, val.items[k].col,
                               ":vars must be z1..zn in order");
          }
          n_vars = static_cast<int>(val.items.size());
        } else if (key == ":precondition") {
          for (const SExpr* item : conjunction_items(val))
            precondition.push_back(parse_lifted_atom(*item, d, opts.allow_negative_preconditions));
        } else if (key == ":effect") {
          for (const SExpr* item : conjunction_items(val)) {
            LiftedAtom a = parse_lifted_atom(*item, d, true);
            if (a.negated) {
              a.negated = false;
              s.del_effects.push_back(std::move(a));
            } else {
              s.add_effects.push_back(std::move(a));
            }
          }
        } else {
          throw ParseError(sec.items[j].line, sec.items[j].col, "unknown key " + key);
        }
      }
      // Group precondition atoms into subqueries by their highest z index;
      // atoms without z go to the extra precondition. Negated atoms never
      // enter subqueries.
      s.subqueries.resize(n_vars);
      for (int q = 0; q < n_vars; ++q) s.subqueries[q].target = static_cast<uint8_t>(q + 1);
      for (auto& a : precondition) {
        int maxz = 0;
        for (const auto& v : a.args)
          if (v.cls == VarClass::Implicit) maxz = std::max(maxz, static_cast<int>(v.index));
        if (maxz == 0 || a.negated) {
          s.extra_precondition.push_back(std::move(a));
        } else {
          if (maxz > n_vars)
            throw ParseError(sec.line, sec.col, s.name + ": atom uses undeclared z variable");
          s.subqueries[maxz - 1].atoms.push_back(std::move(a));
        }
      }
      d.schemas.push_back(std::move(s));
    } else {
      throw ParseError(sec.line, sec.col, "unknown section " + kw);
    }
  }
  try {
    d.validate();
  } catch (const SemanticError& e) {
    throw ParseError(root.line, root.col, e.what());
  }
  return d;
}

Instance parse_instance(const std::string& text, const DomainSpec& d) {
  SExpr root = parse_top(text);
  expect_list(root, "instance");
  if (root.items.size() < 2 || root.items[0].atom != "define")
    throw ParseError(root.line, root.col, "expected (define (instance ...) ...)");
  const SExpr& head = expect_list(root.items[1], "instance header");
  if (head.items.size() != 2 || head.items[0].atom != "instance")
    throw ParseError(head.line, head.col, "expected (instance <name>)");

  Instance inst;
  inst.name = head.items[1].atom;
  for (size_t i = 2; i < root.items.size(); ++i) {
    const SExpr& sec = expect_list(root.items[i], "section");
    if (sec.items.empty()) throw ParseError(sec.line, sec.col, "empty section");
    const std::string& kw = sec.items[0].atom;
    if (kw == ":domain") {
      if (sec.items.size() != 2) throw ParseError(sec.line, sec.col, "bad :domain");
      inst.domain_name = sec.items[1].atom;
      if (inst.domain_name != d.name)
        throw ParseError(sec.line, sec.col, "instance is for domain " + inst.domain_name);
    } else if (kw == ":objects") {
      for (size_t j = 1; j < sec.items.size(); ++j) {
        const std::string& on = sec.items[j].atom;
        if (!valid_identifier(on)) throw ParseError(sec.items[j].line, sec.items[j].col, "bad object name");
        if (inst.object_id(on) >= 0)
          throw ParseError(sec.items[j].line, sec.items[j].col, "duplicate object " + on);
        inst.objects.push_back(on);
      }
      if (inst.objects.size() > kMaxObjectId)
        throw ParseError(sec.line, sec.col, "too many objects");
    } else if (kw == ":init") {
      for (size_t j = 1; j < sec.items.size(); ++j) {
        const SExpr& ae = expect_list(sec.items[j], "init atom");
        if (ae.items.empty()) throw ParseError(ae.line, ae.col, "empty atom");
        int pid = d.predicate_id(ae.items[0].atom);
        if (pid < 0) throw ParseError(ae.line, ae.col, "undeclared predicate " + ae.items[0].atom);
        if (ae.items.size() - 1 != d.predicates[pid].arity)
          throw ParseError(ae.line, ae.col, "arity mismatch for " + ae.items[0].atom);
        std::vector<ObjectId> args;
        for (size_t k = 1; k < ae.items.size(); ++k) {
          int oid = inst.object_id(ae.items[k].atom);
          if (oid < 0) throw ParseError(ae.items[k].line, ae.items[k].col,
                                        "unknown object " + ae.items[k].atom);
          args.push_back(static_cast<ObjectId>(oid));
        }
        inst.init.push_back(GroundAtom::pack(static_cast<PredId>(pid), args));
      }
    } else {
      throw ParseError(sec.line, sec.col, "unknown section " + kw);
    }
  }
  std::sort(inst.init.begin(), inst.init.end());
  inst.init.erase(std::unique(inst.init.begin(), inst.init.end()), inst.init.end());
  return inst;
}

namespace {

void write_atom(std::ostringstream& os, const DomainSpec& d, const LiftedAtom& a) {
  if (a.negated) os << "(not ";
  os << "(" << d.predicates[a.pred].name;
  for (const auto& v : a.args) os << " " << var_name(v);
  os << ")";
  if (a.negated) os << ")";
}

std::string atom_text(const DomainSpec& d, const LiftedAtom& a) {
  std::ostringstream os;
  write_atom(os, d, a);
  return os.str();
}

}  // namespace

std::string write_domain(const DomainSpec& d) {
  std::ostringstream os;
  os << "(define (domain " << d.name << ")\n";
  os << "  (:predicates";
  std::vector<const PredicateInfo*> preds;
  for (const auto& p : d.predicates) preds.push_back(&p);
  std::stable_sort(preds.begin(), preds.end(),
                   [](const PredicateInfo* a, const PredicateInfo* b) { return a->name < b->name; });
  for (const auto* p : preds) {
    os << " (" << p->name;
    for (int i = 1; i <= p->arity; ++i) os << " x" << i;
    if (p->is_static) os << " :static";
    if (p->is_mutex) os << " :mutex";
    os << ")";
  }
  os << ")\n";

  std::vector<const ActionSchema*> schemas;
  for (const auto& s : d.schemas) schemas.push_back(&s);
  std::stable_sort(schemas.begin(), schemas.end(),
                   [](const ActionSchema* a, const ActionSchema* b) { return a->name < b->name; });
  for (const auto* s : schemas) {
    os << "  (:action " << s->name << "\n    :parameters (";
    for (int i = 1; i <= s->explicit_arity; ++i) os << (i > 1 ? " " : "") << "x" << i;
    os << ")\n";
    if (!s->subqueries.empty()) {
      os << "    :vars (";
      for (size_t i = 1; i <= s->subqueries.size(); ++i) os << (i > 1 ? " " : "") << "z" << i;
      os << ")\n";
    }
    std::vector<std::string> pre;
    for (const auto& q : s->subqueries) {
      std::vector<std::string> group;
      for (const auto& a : q.atoms) group.push_back(atom_text(d, a));
      std::sort(group.begin(), group.end());
      pre.insert(pre.end(), group.begin(), group.end());
    }
    std::vector<std::string> extra;
    for (const auto& a : s->extra_precondition) extra.push_back(atom_text(d, a));
    std::sort(extra.begin(), extra.end());
    pre.insert(pre.end(), extra.begin(), extra.end());
    os << "    :precondition (and";
    for (const auto& t : pre) os << " " << t;
    os << ")\n";
    std::vector<std::string> effs;
    for (const auto& a : s->add_effects) effs.push_back(atom_text(d, a));
    std::sort(effs.begin(), effs.end());
    std::vector<std::string> dels;
    for (const auto& a : s->del_effects) {
      LiftedAtom n = a;
      n.negated = true;
      dels.push_back(atom_text(d, n));
    }
    std::sort(dels.begin(), dels.end());
    effs.insert(effs.end(), dels.begin(), dels.end());
    os << "    :effect (and";
    for (const auto& t : effs) os << " " << t;
    os << "))\n";
  }
  os << ")\n";
  return os.str();
}

std::string write_instance(const Instance& inst, const DomainSpec& d) {
  std::ostringstream os;
  os << "(define (instance " << inst.name << ")\n  (:domain " << d.name << ")\n  (:objects";
  for (const auto& o : inst.objects) os << " " << o;
  os << ")\n  (:init";
  for (GroundAtom a : inst.init) {
    os << " (" << d.predicates[a.pred()].name;
    for (int i = 0; i < d.predicates[a.pred()].arity; ++i) os << " " << inst.objects[a.arg(i)];
    os << ")";
  }
  os << "))\n";
  return os.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

}  // namespace sps::io
