//===- conditions.hpp - Pre/post-condition signatures and checking --------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Transforms and passes declare which payload op kinds they expect-and-remove
// (consumed) and which they may introduce (produced). Constrained pseudo-ops
// such as memref.subview.constr refine an existing op with operand-group
// cardinality and attribute constraints; they never register a new op. These
// declarations drive both the static pipeline checker and dynamic before /
// after checking.
//
//===----------------------------------------------------------------------===//

#ifndef TFC_CONDITIONS_HPP
#define TFC_CONDITIONS_HPP

#include "tfc/dialects.hpp"
#include "tfc/ir.hpp"

namespace tfc {

struct ConditionSignature {
  OpSetExpr consumed; // expected in the input and will be removed
  OpSetExpr produced; // possibly present afterwards
};

struct ConstrainedOpDef {
  std::string name; // e.g. "memref.subview.constr"
  std::string base; // e.g. "memref.subview"
  // Operand group name -> required cardinality. Groups not listed are
  // unconstrained.
  std::map<std::string, std::int64_t> group_cards;
};

class ConstraintTable {
public:
  DiagnosticList add(ConstrainedOpDef def);
  const ConstrainedOpDef *lookup(const std::string &name) const;
  const std::map<std::string, ConstrainedOpDef> &all() const { return defs_; }

private:
  std::map<std::string, ConstrainedOpDef> defs_;
};

// Generated verifier: true iff all cardinality constraints of `def` hold for
// `op`. Precondition: op.name == def.base.
bool verifyConstrained(const Operation &op, const ConstrainedOpDef &def,
                       const DialectRegistry &reg);

// Registers the constrained defs used by the shipped lowering chain
// (subview/extract_strided_metadata/extract_aligned_pointer/reinterpret_cast).
void registerBuiltinConstraints(ConstraintTable &table);

// Loads `sig`/`constr` declarations from text:
//   sig <name> consumes {a, b.*} produces {c, d.constr}
//   constr <name> on <base> group <group-name> card <n> [group ... card ...]
DiagnosticList loadConditionFile(const std::string &text,
                                 std::map<std::string, ConditionSignature> &sigs,
                                 ConstraintTable &table,
                                 const std::string &filename = "<conditions>");

//===----------------------------------------------------------------------===//
// Static pipeline checking
//===----------------------------------------------------------------------===//

struct StaticFinding {
  enum class Kind { ResidualOp, PhaseOrdering, OpaqueTransform };
  Kind kind;
  std::string atom;      // residual atom, or the consumed set text
  std::string transform; // the op that introduced / violated
  Location loc;
  std::string message;
};

struct StaticReport {
  std::vector<StaticFinding> findings;
  std::vector<std::string> warnings;
  bool clean() const {
    for (const auto &f : findings)
      if (f.kind != StaticFinding::Kind::OpaqueTransform)
        return false;
    return true;
  }
  std::string str() const;
};

// Signature lookup for a transform-script op at its program point; returns
// nothing for ops with no registered signature (opaque: state goes to top with
// a warning).
using SignatureResolver =
    std::function<std::optional<ConditionSignature>(const Operation &)>;

// Dataflow over the script in execution order: S' = (S \ match(consumed)) ∪
// produced. Reports residual atoms in the final state not matched by
// `final_allowed` (with the introducing transform) and phase-ordering
// violations (nonempty consumed set with empty intersection against S).
// Alternatives regions are joined by set union.
StaticReport checkStatic(const Module &script, const Operation &entry_sequence,
                         const OpSetExpr &initial, const OpSetExpr &final_allowed,
                         const SignatureResolver &resolve,
                         const DialectRegistry &payload_reg);

//===----------------------------------------------------------------------===//
// Dynamic checking
//===----------------------------------------------------------------------===//

enum class CheckStage { Before, After };

// Before: warn when no op matches `consumed` (the transform will be a no-op).
// After: error for surviving ops matching `consumed` unless they also match a
// produced atom (constrained atoms must additionally pass their verifier),
// plus an error for any op matching a produced constrained atom that fails
// its verifier.
std::vector<Diagnostic> checkDynamic(const Module &m,
                                     const ConditionSignature &sig,
                                     CheckStage stage,
                                     const DialectRegistry &reg,
                                     const ConstraintTable &table);

} // namespace tfc

#endif // TFC_CONDITIONS_HPP
