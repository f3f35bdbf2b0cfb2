//===- autotune.hpp - Constrained search over script parameters -----------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef TFC_AUTOTUNE_HPP
#define TFC_AUTOTUNE_HPP

#include "tfc/context.hpp"
#include "tfc/executor.hpp"

namespace tfc {

struct TuneParamDef {
  std::string name;
  std::int64_t lo = 0, hi = 0;
  std::vector<std::string> constraints; // expression strings
};

// Integer parameters with ranges and constraint predicates over the
// parameters and named dimension constants. Constraint language: + - * %,
// comparisons, && || !, and where(cond, expr) meaning cond implies expr.
struct ParamSpace {
  std::map<std::string, std::int64_t> dims;
  std::vector<TuneParamDef> params;
};

struct SpaceParseResult {
  std::optional<ParamSpace> space;
  DiagnosticList diags;
  bool ok() const { return space.has_value() && !diags.hasErrors(); }
};

// Parses the space file syntax:
//   dimensions { B = 4, M = 8 }
//   tuning_parameters: [
//     tile0: {range: [1, B], constraints: [B % tile0 == 0]},
//     vect:  {range: [0, 1], constraints: [where(vect == 1, tile1 % 8 == 0)]}
//   ]
SpaceParseResult parseSpaceFile(const std::string &text,
                                const std::string &filename = "<space>");

using Assignment = std::map<std::string, std::int64_t>;

// Evaluates one constraint expression; nullopt on malformed input.
std::optional<std::int64_t> evalConstraintExpr(const std::string &expr,
                                               const Assignment &env,
                                               std::string *error = nullptr);

// True iff all constraints hold for a full assignment. Evaluation errors are
// reported through `diags` and yield false.
bool feasible(const ParamSpace &space, const Assignment &assignment,
              DiagnosticList *diags = nullptr);

enum class TuneStrategy { Exhaustive, Random, CoordDesc };
std::optional<TuneStrategy> tuneStrategyByName(const std::string &name);

struct TuneEval {
  Assignment assignment;
  double cost = 0;
  double best_so_far = 0;
};

struct TuneRequest {
  std::string entry;
  std::vector<ArgSpec> args;
  std::uint64_t budget = 100;
  TuneStrategy strategy = TuneStrategy::Exhaustive;
  std::uint64_t seed = 0;
  ExecOptions exec;
  InterpOptions interp;
};

struct TuneResult {
  bool ok = false;
  std::string error;
  Assignment best;
  double best_cost = 0;
  std::vector<TuneEval> trace;
  std::uint64_t evaluations = 0;
};

// Substitutes ${name} placeholders in the script template, interprets the
// script on a fresh clone of the module, and scores the result with the
// executor's weighted cost. Scripts failing with a silenceable error score
// +infinity. Deterministic for a given (space, strategy, seed, budget).
TuneResult tune(const std::string &script_template, const ParamSpace &space,
                const Module &module, const Context &ctx, const TuneRequest &req);

std::string tuneTraceCsv(const TuneResult &result);

// ${name} placeholders appearing in the template.
std::set<std::string> templateParams(const std::string &text);

} // namespace tfc

#endif // TFC_AUTOTUNE_HPP
