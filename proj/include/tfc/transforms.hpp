//===- transforms.hpp - Standard transform op semantics -------------------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef TFC_TRANSFORMS_HPP
#define TFC_TRANSFORMS_HPP

#include "tfc/interp.hpp"
#include "tfc/transform_ir.hpp"

namespace tfc {

struct KernelDef {
  std::string name;
  std::int64_t m = 0, n = 0, k = 0;
  TypeKind elem = TypeKind::F64;
  std::optional<double> alpha; // cost override
};

class KernelRegistry {
public:
  void add(KernelDef def) { kernels_.push_back(std::move(def)); }
  const KernelDef *findExact(std::int64_t m, std::int64_t n, std::int64_t k,
                             TypeKind elem) const;
  const std::vector<KernelDef> &all() const { return kernels_; }

  // Lines: `kernel <name> M N K [alpha] [f64|i64]`.
  DiagnosticList loadFile(const std::string &text,
                          const std::string &filename = "<kernels>");

private:
  std::vector<KernelDef> kernels_;
};

// Registers structured.match, loop.hoist_invariants, loop.split, loop.tile,
// loop.unroll, loop.interchange, loop.vectorize_marker, transform.to_library,
// transform.assert, param.constant and param.trip_count semantics.
void registerStandardTransforms(TransformRegistry &reg);

// Utilities shared with passes and tests.
std::optional<std::int64_t> constantIntValue(const Module &m,
                                             const std::string &value_name);
Type typeOfValue(const Module &m, const std::string &value_name);

struct LoopBounds {
  std::int64_t lb = 0, ub = 0, step = 1;
  std::int64_t trip() const { return step > 0 ? (ub - lb) / step : 0; }
  bool normalized() const { return step > 0 && (ub - lb) % step == 0 && ub >= lb; }
};
std::optional<LoopBounds> staticLoopBounds(const Module &m, const Operation &loop);

// Trip count when statically derivable: either from constant bounds, or from
// the `(lb, lb + c, step)` shape that tiling produces.
std::optional<std::int64_t> staticTripCount(const Module &m, const Operation &loop);
// The step constant, when static.
std::optional<std::int64_t> staticStep(const Module &m, const Operation &loop);

// Root-down chain of perfectly nested scf.for loops (body = loop + yield),
// including the root; stops at the first imperfect level.
std::vector<OpId> perfectNestLoops(const Module &m, OpId root);

Operation makeOp(Module &m, const std::string &name,
                 std::vector<std::string> operands,
                 std::vector<std::pair<std::string, Type>> results,
                 AttrMap attrs = {});
Operation makeIndexConstant(Module &m, std::int64_t value, std::string *name_out);

} // namespace tfc

#endif // TFC_TRANSFORMS_HPP
