//===- driver.hpp - CLI-level workflows ------------------------------------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef TFC_DRIVER_HPP
#define TFC_DRIVER_HPP

#include "tfc/autotune.hpp"
#include "tfc/context.hpp"
#include "tfc/executor.hpp"

namespace tfc {

// Emits a transform script equivalent to a pass pipeline string: one
// apply_registered_pass per pass, nested anchors becoming structured.match +
// scoped application.
std::optional<std::string> pipelineToTransform(const std::string &pipeline,
                                               std::string *error);

//===----------------------------------------------------------------------===//
// Pattern bisection
//===----------------------------------------------------------------------===//

struct BisectResult {
  bool ok = false;
  std::string error;
  bool found = false;
  std::string culprit;
  std::uint64_t probes = 0;    // compilations beyond the full-set baseline
  double full_cost = 0;        // with every pattern enabled
  double culprit_free_cost = 0;
};

// Delta-debugging halving over the pattern list of the first apply_patterns
// op in the script: each probe interprets a script variant on a fresh payload
// clone and scores it with the executor. Finds the unique pattern whose
// removal minimizes cost, or reports that none regresses.
BisectResult bisectPatterns(const Context &ctx, const Module &payload,
                            const Script &base_script, const std::string &entry,
                            const std::vector<ArgSpec> &args,
                            const ExecOptions &exec = {});

// Exhaustive leave-one-out oracle used to validate bisection.
std::optional<std::string>
leaveOneOutCulprit(const Context &ctx, const Module &payload,
                   const Script &base_script, const std::string &entry,
                   const std::vector<ArgSpec> &args, const ExecOptions &exec = {});

//===----------------------------------------------------------------------===//
// Compile-time overhead measurement
//===----------------------------------------------------------------------===//

struct TimeReport {
  bool ok = false;
  std::string error;
  double direct_ms = 0; // median over reps
  double script_ms = 0;
  double overhead_percent = 0;
  bool outputs_identical = false;
  int reps = 0;
};

// Runs the pipeline (a) directly through the pass registry and (b) converted
// to a transform script and interpreted, with one discarded warm-up run and
// `reps` timed repetitions each. Output modules must be structurally
// identical or the report carries an error.
TimeReport timePipeline(const Context &ctx, const Module &payload,
                        const std::string &pipeline, int reps = 7);

// Synthetic payload with roughly `op_count` ops spread over functions with
// loops, memory traffic and arithmetic; used by the overhead benchmark.
std::string syntheticPayloadText(int op_count);

// "5", "[1, 2]", "@sym" or a bare op name / string.
ParamValue parseParamValueText(const std::string &text);

} // namespace tfc

#endif // TFC_DRIVER_HPP
