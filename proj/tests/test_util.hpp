#pragma once

#include <string>

#include "stripsplus/io.hpp"

// Bundled data lives next to the CLI; tests receive the directory via the
// SP_DATA_DIR compile definition set in CMake.
inline std::string data_path(const std::string& name) {
  return std::string(SP_DATA_DIR) + "/" + name;
}

inline std::string read_data(const std::string& name) {
  return sps::io::read_file(data_path(name));
}
