//===- transform_ir.hpp - The transform-script IR --------------------------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Transform scripts are ordinary IR in the same textual format as the
// payload: SSA values are handles (each holding an ordered list of payload
// ops) or parameters (constant data). Every transform op declares, at
// registration time, its operand effects (consumed or readonly), its result
// handle constraints, and its pre/post-condition signature. Scripts can
// therefore be verified, analyzed, and rewritten like any other program.
//
//===----------------------------------------------------------------------===//

#ifndef TFC_TRANSFORM_IR_HPP
#define TFC_TRANSFORM_IR_HPP

#include "tfc/conditions.hpp"
#include "tfc/dialects.hpp"
#include "tfc/ir.hpp"

namespace tfc {

struct ParamValue {
  enum class Kind { IntList, Str, OpName };
  Kind kind = Kind::IntList;
  std::vector<std::int64_t> ints;
  std::string str;

  static ParamValue fromInt(std::int64_t v) { return {Kind::IntList, {v}, ""}; }
  static ParamValue fromList(std::vector<std::int64_t> v) {
    return {Kind::IntList, std::move(v), ""};
  }
  static ParamValue fromStr(std::string s) { return {Kind::Str, {}, std::move(s)}; }
  static ParamValue fromOpName(std::string s) {
    return {Kind::OpName, {}, std::move(s)};
  }

  std::optional<std::int64_t> asSingleInt() const {
    if (kind == Kind::IntList && ints.size() == 1)
      return ints[0];
    return std::nullopt;
  }
  std::string str_repr() const;
  bool operator==(const ParamValue &) const = default;
};

enum class TransformStatusKind { Ok, Silenceable, Definite };

struct TransformStatus {
  TransformStatusKind kind = TransformStatusKind::Ok;
  std::string message;

  static TransformStatus ok() { return {}; }
  static TransformStatus silenceable(std::string msg) {
    return {TransformStatusKind::Silenceable, std::move(msg)};
  }
  static TransformStatus definite(std::string msg) {
    return {TransformStatusKind::Definite, std::move(msg)};
  }
  bool isOk() const { return kind == TransformStatusKind::Ok; }
};

// Consuming a handle "deallocates" it: the handle and every handle reaching
// the same payload ops or anything nested in them become unusable. Subtree is
// the rule for transforms that rewrite payload wholesale; pass and pattern
// application instead keeps other handles coherent through rewrite events and
// only deallocates the operand itself.
enum class InvalidationScope { OperandOnly, Subtree };

struct TransformOperandSpec {
  bool is_param = false;
  bool consumed = false;
  std::vector<std::string> constraint_atoms; // empty = any op
};

struct TransformResultSpec {
  bool is_param = false;
  std::vector<std::string> constraint_atoms;
};

struct TransformEffect {
  std::vector<bool> operand_consumed;
  std::vector<TransformResultSpec> produces;
};

struct InterpCtx; // interp.hpp

using TransformApplyFn =
    std::function<TransformStatus(InterpCtx &, const Operation &)>;

struct TransformOpInfo {
  std::string name;
  std::vector<TransformOperandSpec> operands;
  bool optional_trailing_param = false; // split/tile/unroll/assert
  std::vector<TransformResultSpec> results;
  bool results_from_match_attr = false; // structured.match: type from its attr
  int num_regions = 0;
  bool variadic_regions = false; // alternatives
  std::string symbol_attr;       // named_sequence / include sugar

  ConditionSignature condition;
  bool opaque_condition = false; // no declared signature: checker warns

  InvalidationScope invalidation = InvalidationScope::Subtree;
  TransformApplyFn apply; // empty for interpreter-structural ops

  // Extra script-verifier checks (e.g. interchange permutation validity).
  std::function<void(const Operation &, DiagnosticList &)> verifier;
};

class TransformRegistry {
public:
  TransformRegistry();

  // Registers a transform op; duplicate names are an error. This is also the
  // plugin mechanism: anything registered here is immediately usable in
  // scripts and visible to the static checker.
  DiagnosticList registerTransform(TransformOpInfo info);

  const TransformOpInfo *lookup(const std::string &name) const;
  const DialectRegistry &dialectRegistry() const { return dialect_; }
  const std::map<std::string, TransformOpInfo> &all() const { return infos_; }

  // Declared effect table entry for a registered op.
  std::optional<TransformEffect> effectsOf(const std::string &name) const;

private:
  std::map<std::string, TransformOpInfo> infos_;
  DialectRegistry dialect_;
};

// Registers the structural ops the interpreter itself executes:
// transform.named_sequence, transform.include, transform.sequence,
// transform.alternatives, transform.forward, and param.constant /
// param.trip_count. Leaf transforms are added by registerStandardTransforms
// (transforms.hpp) and the pass/pattern surface by registerPassTransforms
// (passes.hpp).
void registerStructuralTransforms(TransformRegistry &reg);

//===----------------------------------------------------------------------===//
// Scripts
//===----------------------------------------------------------------------===//

struct Script {
  Module module;
  std::map<std::string, OpId> sequences; // symbol -> named_sequence op

  const Operation *sequence(const std::string &name) const {
    auto it = sequences.find(name);
    return it == sequences.end() ? nullptr : findOp(module, it->second);
  }
};

struct ScriptParseResult {
  std::optional<Script> script;
  DiagnosticList diags;
  bool ok() const { return script.has_value() && !diags.hasErrors(); }
};

// Parse + verify: SSA form, known transform ops, handle constraints checked
// against transform signatures, include targets resolved, no include cycles.
ScriptParseResult parseTransform(const std::string &text,
                                 const TransformRegistry &treg,
                                 const DialectRegistry &payload_reg,
                                 const std::string &filename = "<script>");

// Re-verify an already-materialized script module (used after script-level
// rewrites).
DiagnosticList verifyScript(const Module &m, const TransformRegistry &treg,
                            const DialectRegistry &payload_reg);

std::string printScript(const Script &s, const TransformRegistry &treg);

// The constraint set a transform op's result values carry, given its attrs.
std::vector<TransformResultSpec> resultSpecsFor(const TransformOpInfo &info,
                                                const Operation &op);

// Whether a named_sequence consumes its N-th argument somewhere in its body
// (directly or through nested includes).
std::vector<bool> sequenceArgConsumption(const Module &script,
                                         const Operation &seq,
                                         const TransformRegistry &treg);

} // namespace tfc

#endif // TFC_TRANSFORM_IR_HPP
