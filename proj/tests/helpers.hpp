#pragma once

#include <string>

#include "spicecheck/netlist.hpp"
#include "spicecheck/util.hpp"

namespace testutil {

inline std::string fixture_path(const std::string& rel) {
  return std::string(SPICECHECK_FIXTURE_DIR) + "/" + rel;
}

inline std::string golden_path(const std::string& rel) {
  return std::string(SPICECHECK_GOLDEN_DIR) + "/" + rel;
}

inline std::string read_fixture(const std::string& rel) {
  return spicecheck::detail::read_file(fixture_path(rel));
}

inline spicecheck::Netlist parse_fixture(const std::string& rel) {
  return spicecheck::parse_netlist(read_fixture(rel)).netlist;
}

}  // namespace testutil

#define CHECK_THROWS_CONTAINING(expr, needle)                                     \
  do {                                                                            \
    bool thrown_ = false;                                                         \
    try {                                                                         \
      (void)(expr);                                                               \
    } catch (const spicecheck::Error& e_) {                                       \
      thrown_ = true;                                                             \
      CHECK(std::string(e_.what()).find(needle) != std::string::npos);            \
    }                                                                             \
    CHECK(thrown_);                                                               \
  } while (0)
