//===- dialects.hpp - Op registry and op-set expressions ------------------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef TFC_DIALECTS_HPP
#define TFC_DIALECTS_HPP

#include "tfc/ir.hpp"

#include <set>

namespace tfc {

enum class Trait { Pure, LoopLike, Terminator, Allocating, MemoryRead, MemoryWrite };

// How an op's result types are determined when no `:` clause is given.
enum class ResultRule { None, FromClause, SameAsFirstOperand, Index, I1, ElementOfMemRef };

struct OpDefinition {
  std::string name;

  // Operand arity: fixed count, a free variadic tail, or named groups with
  // per-op segment sizes.
  int num_operands = 0;
  bool variadic = false;
  std::vector<std::string> operand_groups; // nonempty => segments required

  int num_results = 0;
  bool variadic_results = false;
  ResultRule result_rule = ResultRule::None;

  int num_regions = 0;
  bool multi_block = false; // region may hold several labeled blocks
  int num_successors = 0;

  std::vector<std::string> required_attrs;
  std::set<Trait> traits;
  std::string symbol_attr; // attr key filled by the `@sym` sugar, if any

  // Extra structural checks beyond the generic ones.
  std::function<void(const Operation &, DiagnosticList &)> verifier;

  bool hasTrait(Trait t) const { return traits.count(t) != 0; }
};

class DialectRegistry {
public:
  // Returns diagnostics on duplicate names; otherwise registers all.
  DiagnosticList registerDialect(std::vector<OpDefinition> defs);

  const OpDefinition *lookup(const std::string &name) const;
  bool known(const std::string &name) const { return lookup(name) != nullptr; }

  std::vector<std::string> opsWithTrait(Trait t) const;
  const std::map<std::string, OpDefinition> &all() const { return defs_; }

private:
  std::map<std::string, OpDefinition> defs_;
};

// Registers every built-in dialect: builtin, func, scf, cf, arith, affine,
// memref, llvmlite, lib.
void registerBuiltinDialects(DialectRegistry &reg);

// Loads additional op definitions from a declarative text file, one op per
// line: `op <name> {operands = N, results = N, regions = N, traits = [...],
// variadic = true, result_type = "clause"}`.
DiagnosticList loadPluginDialect(DialectRegistry &reg, const std::string &text,
                                 const std::string &filename = "<plugin>");

//===----------------------------------------------------------------------===//
// Op-set expressions
//===----------------------------------------------------------------------===//

// A set of op-name atoms. An atom is an exact name ("cf.br"), a dialect
// wildcard ("scf.*"), a trait/interface name ("interface:loop_like"), or a
// constrained pseudo-op name ("memref.subview.constr") which matches the base
// op by name; its structural constraint is checked separately.
struct OpSetExpr {
  std::vector<std::string> atoms;

  static OpSetExpr parse(const std::string &text); // comma/space separated
  bool empty() const { return atoms.empty(); }
  std::string str() const;
};

// Base op name of a constrained atom ("memref.subview.constr" ->
// "memref.subview"); returns the atom itself when it is not constrained.
std::string constrainedBase(const std::string &atom);
bool isConstrainedAtom(const std::string &atom);

// True iff `opname` matches one of the expression's atoms. Unresolvable atoms
// (unknown trait or op) are reported through `diags` when provided.
bool opInSet(const std::string &opname, const OpSetExpr &expr,
             const DialectRegistry &reg, DiagnosticList *diags = nullptr);

// Atom-level intersection test used by the static pipeline checker: does atom
// `a` denote any op that `b` also denotes?
bool atomsIntersect(const std::string &a, const std::string &b,
                    const DialectRegistry &reg);

//===----------------------------------------------------------------------===//
// Verifier
//===----------------------------------------------------------------------===//

// Structural verification: registered names, arity/segment consistency,
// required attributes, region shape, terminators, value-name uniqueness, and
// per-region dominance for the structured subset. Multi-block regions only
// check that branch targets exist. Never aborts; returns diagnostics.
DiagnosticList verifyModule(const Module &m, const DialectRegistry &reg);

// Walks ops under `scope` (inclusive, preorder) and returns ids of ops whose
// name matches `expr`.
std::vector<OpId> matchOps(const Module &m, OpId scope, const OpSetExpr &expr,
                           const DialectRegistry &reg);

} // namespace tfc

#endif // TFC_DIALECTS_HPP
