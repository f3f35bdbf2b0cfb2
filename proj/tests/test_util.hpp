// Shared test helpers.

#ifndef TFC_TESTS_TEST_UTIL_HPP
#define TFC_TESTS_TEST_UTIL_HPP

#include "tfc/ir.hpp"

#include <map>
#include <string>

namespace tfc_test {

// Renames every value defined in the module to v0, v1, ... in preorder so
// that prints can be compared independently of fresh-name allocation order.
inline void canonicalizeNames(tfc::Module &m) {
  std::map<std::string, std::string> renames;
  std::uint64_t next = 0;
  tfc::walk(m.root, [&](tfc::Operation &op) {
    for (auto &res : op.results) {
      std::string fresh = "v" + std::to_string(next++);
      renames[res.name] = fresh;
      res.name = fresh;
    }
    for (auto &r : op.regions)
      for (auto &b : r.blocks)
        for (auto &arg : b.args) {
          std::string fresh = "v" + std::to_string(next++);
          renames[arg.name] = fresh;
          arg.name = fresh;
        }
    return true;
  });
  tfc::remapUses(m.root, renames);
}

} // namespace tfc_test

#endif
