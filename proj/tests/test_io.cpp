#include <doctest.h>

#include "stripsplus/io.hpp"
#include "test_util.hpp"

using namespace sps;

TEST_CASE("blocks4 parses with implicit variables grouped into subqueries") {
  DomainSpec d = io::parse_domain(read_data("blocks4.spd"));
  CHECK(d.name == "blocks4");
  CHECK(d.predicates.size() == 5);
  int stack = d.schema_id("stack");
  REQUIRE(stack >= 0);
  CHECK(d.schemas[stack].explicit_arity == 1);
  REQUIRE(d.schemas[stack].implicit_arity() == 1);
  // (holding z1) is the subquery; (clear x1) stays in the extra precondition.
  CHECK(d.schemas[stack].subqueries[0].atoms.size() == 1);
  CHECK(d.schemas[stack].extra_precondition.size() == 1);
}

TEST_CASE("empty action list still yields predicates") {
  DomainSpec d = io::parse_domain("(define (domain skel) (:predicates (p x1)))");
  CHECK(d.predicates.size() == 1);
  CHECK(d.schemas.empty());
}

TEST_CASE("unstratified subqueries are rejected") {
  // z1 only ever occurs together with z2, so nothing determines z1 alone.
  const char* text =
      "(define (domain bad) (:predicates (p x1 x2))"
      " (:action a :parameters () :vars (z1 z2)"
      "  :precondition (and (p z1 z2))"
      "  :effect (and (p z1 z2))))";
  CHECK_THROWS_AS(io::parse_domain(text), io::ParseError);
}

TEST_CASE("arity mismatch is a parse error with location") {
  const char* text =
      "(define (domain bad) (:predicates (on x1 x2))"
      " (:action a :parameters (x1) :precondition (and (on x1)) :effect (and (on x1 x1))))";
  try {
    io::parse_domain(text);
    FAIL("expected ParseError");
  } catch (const io::ParseError& e) {
    CHECK(e.line >= 1);
    CHECK(std::string(e.what()).find("arity") != std::string::npos);
  }
}

TEST_CASE("instance parsing checks objects and arities") {
  DomainSpec d = io::parse_domain(read_data("blocks4.spd"));
  Instance inst = io::parse_instance(read_data("blocks4-7.spi"), d);
  CHECK(inst.objects.size() == 7);
  CHECK(inst.init.size() == 15);

  CHECK_THROWS_AS(io::parse_instance("(define (instance x) (:domain blocks4)"
                                     " (:objects a) (:init (on a)))",
                                     d),
                  io::ParseError);
}

TEST_CASE("empty instance is valid") {
  DomainSpec d = io::parse_domain("(define (domain skel) (:predicates (p x1)))");
  Instance inst = io::parse_instance("(define (instance e) (:domain skel))", d);
  CHECK(inst.objects.empty());
  CHECK(inst.init.empty());
}

TEST_CASE("canonical writer round-trips all bundled domains") {
  for (const char* name : {"blocks4.spd"}) {
    DomainSpec d = io::parse_domain(read_data(name));
    std::string text = io::write_domain(d);
    DomainSpec d2 = io::parse_domain(text, {.allow_negative_preconditions = true});
    CHECK(io::write_domain(d2) == text);
  }
}

TEST_CASE("parser survives mangled input without crashing") {
  std::string src = read_data("blocks4.spd");
  for (uint64_t seed = 1; seed <= 50; ++seed) {
    std::string fuzzed = src;
    Rng rng(seed);
    for (int i = 0; i < 8; ++i) {
      size_t pos = rng.below(fuzzed.size());
      fuzzed[pos] = static_cast<char>(32 + rng.below(95));
    }
    try {
      io::parse_domain(fuzzed);
    } catch (const io::ParseError&) {
    } catch (const SemanticError&) {
    }
  }
  CHECK(true);
}
