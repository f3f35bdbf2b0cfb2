//===- context.hpp - Registry bundle ---------------------------------------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef TFC_CONTEXT_HPP
#define TFC_CONTEXT_HPP

#include "tfc/conditions.hpp"
#include "tfc/dialects.hpp"
#include "tfc/interp.hpp"
#include "tfc/passes.hpp"
#include "tfc/patterns.hpp"
#include "tfc/transforms.hpp"

namespace tfc {

// Everything a compilation session needs: payload dialects, transform ops,
// passes, patterns, kernels, constrained-op defs, and signature overrides
// loaded from declaration files.
struct Context {
  DialectRegistry payload;
  TransformRegistry transforms;
  PassRegistry passes;
  PatternRegistry patterns;
  KernelRegistry kernels;
  ConstraintTable constraints;
  std::map<std::string, ConditionSignature> signature_overrides;

  static Context standard();

  SignatureResolver signatureResolver() const;

  InterpResult apply(const Script &script, Module &payload_module,
                     const InterpOptions &opts) const;
};

} // namespace tfc

#endif // TFC_CONTEXT_HPP
