//===- executor.hpp - Deterministic payload interpreter -------------------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Reference interpreter for payload programs. It doubles as the semantics
// oracle for transformation correctness and as the deterministic cost model
// used by tuning and bisection: runtime cost is a weighted count of executed
// ops, with a discount for loops carrying the vectorize marker and a closed
// formula for lib.call_kernel.
//
//===----------------------------------------------------------------------===//

#ifndef TFC_EXECUTOR_HPP
#define TFC_EXECUTOR_HPP

#include "tfc/dialects.hpp"
#include "tfc/ir.hpp"

namespace tfc {

struct MemRefVal {
  int buffer = -1;
  std::int64_t offset = 0;
  std::vector<std::int64_t> sizes;
  std::vector<std::int64_t> strides;
  bool operator==(const MemRefVal &) const = default;
};

using RtVal = std::variant<std::int64_t, double, MemRefVal>;

struct BufferInit {
  enum class Fill { Zeros, Ones, Iota, Values };
  TypeKind elem = TypeKind::F64;
  std::vector<std::int64_t> shape;
  Fill fill = Fill::Zeros;
  std::vector<double> values; // for Fill::Values (also carries ints)
};

struct ArgSpec {
  enum class Kind { Int, Float, Buffer } kind = Kind::Int;
  std::int64_t int_val = 0;
  double float_val = 0;
  BufferInit buffer;

  static ArgSpec makeInt(std::int64_t v) { return {Kind::Int, v, 0, {}}; }
  static ArgSpec makeFloat(double v) { return {Kind::Float, 0, v, {}}; }
  static ArgSpec makeBuffer(BufferInit b) { return {Kind::Buffer, 0, 0, std::move(b)}; }
};

// Parses "5", "2.5", "f64[4x4]", "i64[8]:ones", "f64[2x2]=1,2,3,4", ...
std::optional<ArgSpec> parseArgSpec(const std::string &text);

struct CostModel {
  std::map<std::string, double> weights; // per-op override
  double default_weight = 1.0;
  int vector_width = 8;
  double kernel_alpha = 0.05;

  double weightOf(const std::string &opname) const {
    auto it = weights.find(opname);
    return it == weights.end() ? default_weight : it->second;
  }
};

struct CostReport {
  std::uint64_t ops_executed = 0;
  double weighted_cost = 0;
  std::map<std::string, std::uint64_t> per_op;
  std::string json() const;
};

struct BufferContents {
  TypeKind elem = TypeKind::F64;
  std::vector<std::int64_t> shape;
  std::vector<double> f64;
  std::vector<std::int64_t> i64;
};

bool buffersEqualExact(const BufferContents &a, const BufferContents &b);
// Integers exact; floats within `rel_tol` relative error.
bool buffersClose(const BufferContents &a, const BufferContents &b, double rel_tol);

struct ExecResult {
  bool ok = false;
  Diagnostic error;
  std::vector<RtVal> returns;
  std::vector<BufferContents> arg_buffers; // final state, one per buffer arg
  CostReport cost;
};

struct ExecOptions {
  CostModel cost;
  std::uint64_t step_limit = 100000000; // 1e8
};

// Deterministic: identical (module, entry, args) yields identical results and
// cost report. The module is read-only.
ExecResult execute(const Module &m, const DialectRegistry &reg,
                   const std::string &entry, const std::vector<ArgSpec> &args,
                   const ExecOptions &opts = {});

bool execResultsEqualExact(const ExecResult &a, const ExecResult &b);
bool execResultsClose(const ExecResult &a, const ExecResult &b, double rel_tol);

// Evaluates the affine expression attribute grammar: + - * over integer
// literals and symbols s0..sN, with parentheses.
std::optional<std::int64_t> evalAffineExpr(const std::string &expr,
                                           const std::vector<std::int64_t> &syms);

} // namespace tfc

#endif // TFC_EXECUTOR_HPP
