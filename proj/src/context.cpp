//===- context.cpp - Registry bundle ---------------------------------------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "tfc/context.hpp"

#include <algorithm>

namespace tfc {

Context Context::standard() {
  Context ctx;
  registerBuiltinDialects(ctx.payload);
  registerStructuralTransforms(ctx.transforms);
  registerStandardTransforms(ctx.transforms);
  registerPassTransforms(ctx.transforms);
  registerStandardPasses(ctx.passes);
  registerStandardPatterns(ctx.patterns);
  registerBuiltinConstraints(ctx.constraints);
  return ctx;
}

SignatureResolver Context::signatureResolver() const {
  return [this](const Operation &op) -> std::optional<ConditionSignature> {
    if (op.name == "transform.apply_registered_pass") {
      const AttrValue *p = op.attr("pass");
      if (!p)
        return std::nullopt;
      if (auto it = signature_overrides.find(p->asStr());
          it != signature_overrides.end())
        return it->second;
      const Pass *pass = passes.lookup(p->asStr());
      if (!pass)
        return std::nullopt;
      return pass->signature;
    }
    if (op.name == "transform.apply_patterns") {
      const AttrValue *list = op.attr("patterns");
      if (!list || list->kind != AttrValue::Kind::StrList)
        return std::nullopt;
      // Patterns never guarantee removal; join the produced sets.
      ConditionSignature joined;
      for (const auto &name : list->asStrList()) {
        const Pattern *pat = patterns.lookup(name);
        if (!pat)
          return std::nullopt;
        for (const auto &a : pat->signature.produced.atoms)
          if (std::find(joined.produced.atoms.begin(), joined.produced.atoms.end(),
                        a) == joined.produced.atoms.end())
            joined.produced.atoms.push_back(a);
      }
      return joined;
    }
    if (auto it = signature_overrides.find(op.name); it != signature_overrides.end())
      return it->second;
    const TransformOpInfo *info = transforms.lookup(op.name);
    if (!info || info->opaque_condition)
      return std::nullopt;
    return info->condition;
  };
}

InterpResult Context::apply(const Script &script, Module &payload_module,
                            const InterpOptions &opts) const {
  return applyScript(script, payload_module, payload, transforms, opts, &kernels,
                     &passes, &patterns, &constraints, &signature_overrides);
}

} // namespace tfc
