//===- patterns.hpp - Named rewrite patterns and the greedy driver --------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef TFC_PATTERNS_HPP
#define TFC_PATTERNS_HPP

#include "tfc/conditions.hpp"
#include "tfc/rewriter.hpp"
#include "tfc/transform_ir.hpp"

namespace tfc {

struct PatternCtx {
  Module &module;
  Rewriter &rewriter;
  const DialectRegistry &reg;
};

struct Pattern {
  std::string name;
  ConditionSignature signature;
  // Attempts to rewrite `op` (identified by id; the op is live when called).
  // Returns true if a rewrite happened.
  std::function<bool(PatternCtx &, OpId)> apply;
};

class PatternRegistry {
public:
  DiagnosticList add(Pattern p);
  const Pattern *lookup(const std::string &name) const;
  const std::map<std::string, Pattern> &all() const { return patterns_; }

private:
  std::map<std::string, Pattern> patterns_;
};

// add_of_zero, mul_of_one, fold_constant_arith, cast_of_cast_cancel,
// subview_identity_fold, cmpi_const_fold, and the deliberately
// cost-regressing regress_hoist_blocker used by bisection tests.
//
// Each pattern except regress_hoist_blocker strictly decreases the op count
// of the module, which bounds the greedy driver; regress_hoist_blocker
// instead strictly decreases the summed remaining nesting depth below the
// ops it sinks.
void registerStandardPatterns(PatternRegistry &reg);

// Names of the shipped cost-reducing set (everything but the regressor).
std::vector<std::string> canonicalizePatternNames();

struct GreedyResult {
  bool ok = true;
  std::string error;
  std::uint64_t rewrites = 0;
};

// Greedy fixpoint application of the listed patterns within `root`
// (inclusive). Deterministic: scans ops in preorder, patterns in list order.
GreedyResult applyPatternsGreedy(Module &m, Rewriter &rewriter, OpId root,
                                 const std::vector<std::string> &names,
                                 const PatternRegistry &reg,
                                 const DialectRegistry &dialects,
                                 std::uint64_t rewrite_cap = 100000);

} // namespace tfc

#endif // TFC_PATTERNS_HPP
