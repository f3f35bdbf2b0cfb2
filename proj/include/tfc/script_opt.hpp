//===- script_opt.hpp - Rewrites and analyses over transform scripts ------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Transform scripts are plain IR, so they get their own optimizations:
// include inlining (macro expansion), noop elimination with
// constant-parameter folding, a use-after-invalidation dataflow analysis, and
// abstraction-level introspection that fills in missing pass options.
//
//===----------------------------------------------------------------------===//

#ifndef TFC_SCRIPT_OPT_HPP
#define TFC_SCRIPT_OPT_HPP

#include "tfc/transform_ir.hpp"

namespace tfc {

// Expands every transform.include by splicing in the callee body with
// argument substitution. Fails (with the cycle listed) on recursive includes.
struct InlineResult {
  std::optional<Module> module;
  DiagnosticList diags;
  bool ok() const { return module.has_value() && !diags.hasErrors(); }
};
InlineResult inlineIncludes(const Module &script, const TransformRegistry &treg);

// Rewrites to fixpoint:
//  - constant parameters fold into attribute positions,
//  - loop.unroll with factor 1 becomes a transform.forward marker,
//  - loop.tile with all-zero sizes becomes a transform.forward marker,
//  - re-tiling the inner result of a previous tile with strictly larger
//    sizes (a guaranteed noop) becomes a transform.forward marker.
// Forward markers keep the consume effect visible to invalidation analysis.
Module simplifyScript(const Module &script, const TransformRegistry &treg);

// Forward "use after free" dataflow: defining a handle allocates, a consumed
// operand frees, and handles derived from (or matched inside) another handle
// partially alias it. Reports every use of a freed-or-alias-freed handle with
// both the use and the free site.
std::vector<Diagnostic> analyzeInvalidation(const Module &script,
                                            const TransformRegistry &treg);

// Tracks the abstraction level (arith until convert-arith-to-llvmlite runs,
// llvmlite afterwards) and fills the `op=` option of unconfigured
// instrument-accumulate passes accordingly. Errors when the level at such a
// pass is ambiguous (alternatives regions disagree).
struct InferResult {
  std::optional<Module> module;
  DiagnosticList diags;
  bool ok() const { return module.has_value() && !diags.hasErrors(); }
};
InferResult inferPassOptions(const Module &script, const TransformRegistry &treg);

} // namespace tfc

#endif // TFC_SCRIPT_OPT_HPP
