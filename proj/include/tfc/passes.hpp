//===- passes.hpp - Coarse-grained passes invocable from scripts ----------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef TFC_PASSES_HPP
#define TFC_PASSES_HPP

#include "tfc/conditions.hpp"
#include "tfc/patterns.hpp"
#include "tfc/rewriter.hpp"
#include "tfc/transform_ir.hpp"

namespace tfc {

struct PassOptions {
  std::map<std::string, std::string> kv;
  static std::optional<PassOptions> parse(const std::string &text); // k=v,k=v
  const std::string *get(const std::string &key) const {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  }
};

struct PassCtx {
  Module &module;
  Rewriter &rewriter;
  const DialectRegistry &reg;
  const PatternRegistry *patterns = nullptr;
};

struct Pass {
  std::string name;
  ConditionSignature signature;
  std::function<TransformStatus(PassCtx &, OpId target, const PassOptions &)> run;
};

class PassRegistry {
public:
  DiagnosticList add(Pass p);
  const Pass *lookup(const std::string &name) const;
  const std::map<std::string, Pass> &all() const { return passes_; }

private:
  std::map<std::string, Pass> passes_;
};

// The progressive lowering chain (convert-scf-to-cf, convert-arith-to-
// llvmlite, convert-cf-to-llvmlite, convert-func-to-llvmlite,
// expand-strided-metadata, finalize-memref-to-llvmlite,
// reconcile-unrealized-casts) plus lower-affine, canonicalize, and the
// parameterized instrument-accumulate pass.
void registerStandardPasses(PassRegistry &reg);

// transform.apply_registered_pass and transform.apply_patterns.
void registerPassTransforms(TransformRegistry &treg);

//===----------------------------------------------------------------------===//
// Pass pipelines
//===----------------------------------------------------------------------===//

// One step of `builtin.module(p1, func.func(p2, p3{k=v}), p4)`.
struct PipelineEntry {
  std::string anchor; // builtin.module or func.func
  std::string pass;
  PassOptions options;
};

std::optional<std::vector<PipelineEntry>>
parsePipeline(const std::string &text, std::string *error);

// Runs a pipeline directly through the pass registry (no transform scripts
// involved); anchored entries run once per matching op.
TransformStatus runPipelineDirect(Module &m, const std::vector<PipelineEntry> &pipe,
                                  const PassRegistry &passes,
                                  const DialectRegistry &reg,
                                  const PatternRegistry *patterns);

} // namespace tfc

#endif // TFC_PASSES_HPP
