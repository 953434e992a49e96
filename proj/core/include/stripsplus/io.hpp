#pragma once

#include <string>

#include "stripsplus/domain.hpp"

namespace sps::io {

struct ParseError : std::runtime_error {
  int line, col;
  ParseError(int l, int c, const std::string& m)
      : std::runtime_error("line " + std::to_string(l) + ":" + std::to_string(c) + ": " + m),
        line(l), col(c) {}
};

struct ParseOptions {
  // Hidden-domain files only admit positive precondition atoms; learned
  // domains are written (and re-read) with negative literals.
  bool allow_negative_preconditions = false;
};

DomainSpec parse_domain(const std::string& text, const ParseOptions& opts = {});
Instance parse_instance(const std::string& text, const DomainSpec& domain);

// Canonical serialization: predicates sorted by name, schemas by name,
// subqueries in stratification order. parse(write(d)) is structurally d.
std::string write_domain(const DomainSpec& d);
std::string write_instance(const Instance& inst, const DomainSpec& d);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace sps::io
