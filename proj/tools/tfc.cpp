//===- tfc.cpp - Command-line driver ---------------------------------------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "CLI11.hpp"

#include "tfc/autotune.hpp"
#include "tfc/context.hpp"
#include "tfc/driver.hpp"
#include "tfc/executor.hpp"
#include "tfc/script_opt.hpp"
#include "tfc/text.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace tfc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSilenceable = 1;
constexpr int kExitDefinite = 2;
constexpr int kExitCheckFailure = 3;

std::optional<std::string> readFile(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    return std::nullopt;
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void printDiags(const std::vector<Diagnostic> &diags) {
  for (const auto &d : diags)
    std::cerr << formatDiagnostic(d) << "\n";
}

struct CommonOpts {
  std::string kernels_file;
  std::string plugin_dialect_file;
  std::string conditions_file;
};

void addCommonOptions(CLI::App *cmd, CommonOpts &opts) {
  cmd->add_option("--kernels", opts.kernels_file,
                  "microkernel registry file (kernel <name> M N K [alpha])");
  cmd->add_option("--plugin-dialect", opts.plugin_dialect_file,
                  "declarative op definitions to register");
  cmd->add_option("--signatures", opts.conditions_file,
                  "sig/constr declarations overriding built-in conditions");
}

bool configureContext(Context &ctx, const CommonOpts &opts) {
  if (!opts.kernels_file.empty()) {
    auto text = readFile(opts.kernels_file);
    if (!text) {
      std::cerr << "error: cannot read " << opts.kernels_file << "\n";
      return false;
    }
    DiagnosticList diags = ctx.kernels.loadFile(*text, opts.kernels_file);
    printDiags(diags.items);
    if (diags.hasErrors())
      return false;
  }
  if (!opts.plugin_dialect_file.empty()) {
    auto text = readFile(opts.plugin_dialect_file);
    if (!text) {
      std::cerr << "error: cannot read " << opts.plugin_dialect_file << "\n";
      return false;
    }
    DiagnosticList diags =
        loadPluginDialect(ctx.payload, *text, opts.plugin_dialect_file);
    printDiags(diags.items);
    if (diags.hasErrors())
      return false;
  }
  if (!opts.conditions_file.empty()) {
    auto text = readFile(opts.conditions_file);
    if (!text) {
      std::cerr << "error: cannot read " << opts.conditions_file << "\n";
      return false;
    }
    DiagnosticList diags = loadConditionFile(*text, ctx.signature_overrides,
                                             ctx.constraints, opts.conditions_file);
    printDiags(diags.items);
    if (diags.hasErrors())
      return false;
  }
  return true;
}

std::optional<Module> loadPayload(Context &ctx, const std::string &path) {
  auto text = readFile(path);
  if (!text) {
    std::cerr << "error: cannot read " << path << "\n";
    return std::nullopt;
  }
  auto parsed = parsePayload(*text, ctx.payload, path);
  printDiags(parsed.diags.items);
  if (!parsed.ok())
    return std::nullopt;
  return std::move(parsed.module);
}

std::optional<Script> loadScript(Context &ctx, const std::string &path) {
  auto text = readFile(path);
  if (!text) {
    std::cerr << "error: cannot read " << path << "\n";
    return std::nullopt;
  }
  auto parsed = parseTransform(*text, ctx.transforms, ctx.payload, path);
  printDiags(parsed.diags.items);
  if (!parsed.ok())
    return std::nullopt;
  return std::move(parsed.script);
}

std::optional<std::vector<ArgSpec>> parseArgs(const std::vector<std::string> &raw) {
  std::vector<ArgSpec> args;
  for (const auto &a : raw) {
    auto spec = parseArgSpec(a);
    if (!spec) {
      std::cerr << "error: malformed --arg '" << a << "'\n";
      return std::nullopt;
    }
    args.push_back(std::move(*spec));
  }
  return args;
}

void printExecResult(const ExecResult &result, bool full_buffers) {
  for (size_t i = 0; i < result.returns.size(); ++i) {
    const RtVal &v = result.returns[i];
    std::cout << "result #" << i << ": ";
    if (std::holds_alternative<std::int64_t>(v))
      std::cout << std::get<std::int64_t>(v);
    else if (std::holds_alternative<double>(v))
      std::cout << std::get<double>(v);
    else
      std::cout << "<memref>";
    std::cout << "\n";
  }
  for (size_t i = 0; i < result.arg_buffers.size(); ++i) {
    const BufferContents &b = result.arg_buffers[i];
    std::cout << "buffer #" << i << " [";
    for (size_t d = 0; d < b.shape.size(); ++d)
      std::cout << (d ? "x" : "") << b.shape[d];
    std::cout << "]";
    size_t n = b.elem == TypeKind::F64 ? b.f64.size() : b.i64.size();
    size_t limit = full_buffers ? n : std::min<size_t>(n, 8);
    std::cout << (b.elem == TypeKind::F64 ? " f64:" : " i64:");
    for (size_t k = 0; k < limit; ++k) {
      if (b.elem == TypeKind::F64)
        std::cout << " " << b.f64[k];
      else
        std::cout << " " << b.i64[k];
    }
    if (limit < n)
      std::cout << " ... (" << n << " elements)";
    std::cout << "\n";
  }
}

int cmdRun(Context &ctx, const std::string &payload_path,
           const std::string &script_path,
           const std::vector<std::string> &raw_params, bool check_static,
           const std::string &initial, const std::string &final_allowed,
           bool check_dynamic, bool trace, bool time_it,
           const std::string &entry_seq) {
  auto payload = loadPayload(ctx, payload_path);
  if (!payload)
    return kExitDefinite;
  auto script = loadScript(ctx, script_path);
  if (!script)
    return kExitDefinite;

  if (check_static) {
    const Operation *entry = script->sequence(entry_seq);
    if (!entry) {
      std::cerr << "error: script has no @" << entry_seq << "\n";
      return kExitDefinite;
    }
    OpSetExpr init_set;
    if (!initial.empty()) {
      init_set = OpSetExpr::parse(initial);
    } else {
      std::set<std::string> names;
      walk(payload->root, [&](const Operation &op) {
        if (op.name != "builtin.module")
          names.insert(op.name);
        return true;
      });
      init_set.atoms.assign(names.begin(), names.end());
    }
    StaticReport report =
        checkStatic(script->module, *entry, init_set, OpSetExpr::parse(final_allowed),
                    ctx.signatureResolver(), ctx.payload);
    for (const auto &w : report.warnings)
      std::cerr << w << "\n";
    bool failed = false;
    for (const auto &f : report.findings) {
      if (f.kind == StaticFinding::Kind::OpaqueTransform)
        continue;
      std::cerr << script_path << ":" << f.loc.line << ":" << f.loc.col
                << ": error: " << f.message << "\n";
      failed = true;
    }
    if (failed)
      return kExitCheckFailure;
  }

  InterpOptions opts;
  opts.entry = entry_seq;
  opts.collect_trace = trace;
  opts.check_dynamic = check_dynamic;
  for (const auto &p : raw_params) {
    auto eq = p.find('=');
    if (eq == std::string::npos) {
      std::cerr << "error: --param expects name=value\n";
      return kExitDefinite;
    }
    opts.extern_params[p.substr(0, eq)] = parseParamValueText(p.substr(eq + 1));
  }

  auto t0 = std::chrono::steady_clock::now();
  InterpResult result = ctx.apply(*script, *payload, opts);
  auto t1 = std::chrono::steady_clock::now();

  if (trace)
    for (const auto &e : result.trace)
      std::cerr << e.json() << "\n";
  if (time_it)
    std::cerr << "interpretation took "
              << std::chrono::duration<double, std::milli>(t1 - t0).count()
              << " ms\n";
  printDiags(result.check_diags);
  if (!result.ok) {
    std::cerr << script_path << ":" << result.error.transform_loc.line << ":"
              << result.error.transform_loc.col << ": "
              << severityName(result.error.severity) << ": "
              << result.error.message << "\n";
    return result.error.severity == Severity::Definite ? kExitDefinite
                                                       : kExitSilenceable;
  }
  if (check_dynamic && !result.check_diags.empty())
    return kExitCheckFailure;
  std::cout << printModule(*payload, ctx.payload);
  return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"tfc: a miniature compiler driven by transform scripts"};
  app.require_subcommand(1);

  // ---- run ----
  auto *run = app.add_subcommand("run", "interpret a transform script over a payload");
  std::string run_payload, run_script, run_initial, run_final, run_entry = "transform_main";
  std::vector<std::string> run_params;
  bool run_check_static = false, run_check_dynamic = false, run_trace = false,
       run_time = false;
  CommonOpts run_common;
  run->add_option("payload", run_payload)->required();
  run->add_option("script", run_script)->required();
  run->add_option("--param", run_params, "external parameter name=value");
  run->add_flag("--check-static", run_check_static);
  run->add_option("--initial", run_initial, "initial op-set for --check-static");
  run->add_option("--final", run_final, "allowed final op-set for --check-static");
  run->add_flag("--check-dynamic", run_check_dynamic);
  run->add_flag("--trace", run_trace, "emit a JSON-lines trace to stderr");
  run->add_flag("--time", run_time);
  run->add_option("--entry-seq", run_entry, "entry sequence symbol");
  addCommonOptions(run, run_common);

  // ---- exec ----
  auto *exec_cmd = app.add_subcommand("exec", "execute a payload program");
  std::string exec_payload, exec_entry;
  std::vector<std::string> exec_args;
  bool exec_cost = false, exec_full = false;
  double exec_alpha = 0.05;
  int exec_width = 8;
  std::uint64_t exec_steps = 100000000;
  std::vector<std::string> exec_weights;
  CommonOpts exec_common;
  exec_cmd->add_option("payload", exec_payload)->required();
  exec_cmd->add_option("--entry", exec_entry)->required();
  exec_cmd->add_option("--arg", exec_args,
                       "argument: int, float, or f64[4x4](:ones|:iota|=v,v,...)");
  exec_cmd->add_flag("--cost", exec_cost, "print the cost report as JSON");
  exec_cmd->add_flag("--print-buffers", exec_full);
  exec_cmd->add_option("--vector-width", exec_width);
  exec_cmd->add_option("--kernel-alpha", exec_alpha);
  exec_cmd->add_option("--step-limit", exec_steps);
  exec_cmd->add_option("--weight", exec_weights, "per-op cost weight op=w");
  addCommonOptions(exec_cmd, exec_common);

  // ---- check ----
  auto *check = app.add_subcommand("check", "statically check a script's conditions");
  std::string check_script, check_initial, check_final, check_payload,
      check_entry = "transform_main";
  CommonOpts check_common;
  check->add_option("script", check_script)->required();
  check->add_option("--payload", check_payload, "derive the initial set from a payload");
  check->add_option("--initial", check_initial);
  check->add_option("--final", check_final);
  check->add_option("--entry-seq", check_entry);
  addCommonOptions(check, check_common);

  // ---- opt-script ----
  auto *opt = app.add_subcommand("opt-script", "optimize / analyze a transform script");
  std::string opt_script;
  bool opt_inline = false, opt_simplify = false, opt_check_inval = false,
       opt_infer = false;
  CommonOpts opt_common;
  opt->add_option("script", opt_script)->required();
  opt->add_flag("--inline", opt_inline, "expand includes");
  opt->add_flag("--simplify", opt_simplify, "remove noop transforms, fold params");
  opt->add_flag("--check-invalidation", opt_check_inval,
                "report uses of invalidated handles");
  opt->add_flag("--infer-options", opt_infer,
                "fill instrument-accumulate op= by abstraction level");
  addCommonOptions(opt, opt_common);

  // ---- pipeline-to-transform ----
  auto *p2t = app.add_subcommand("pipeline-to-transform",
                                 "convert a pass pipeline string to a script");
  std::string p2t_pipeline;
  p2t->add_option("pipeline", p2t_pipeline)->required();

  // ---- bisect ----
  auto *bisect = app.add_subcommand(
      "bisect", "find the cost-regressing pattern in an apply_patterns list");
  std::string bisect_payload, bisect_script, bisect_entry;
  std::vector<std::string> bisect_args;
  CommonOpts bisect_common;
  bisect->add_option("payload", bisect_payload)->required();
  bisect->add_option("script", bisect_script)->required();
  bisect->add_option("--entry", bisect_entry)->required();
  bisect->add_option("--arg", bisect_args);
  addCommonOptions(bisect, bisect_common);

  // ---- tune ----
  auto *tune_cmd = app.add_subcommand("tune", "search a constrained parameter space");
  std::string tune_payload, tune_template, tune_space, tune_entry,
      tune_strategy = "exhaustive", tune_csv;
  std::vector<std::string> tune_args;
  std::uint64_t tune_budget = 100, tune_seed = 0;
  CommonOpts tune_common;
  tune_cmd->add_option("payload", tune_payload)->required();
  tune_cmd->add_option("template", tune_template,
                       "script with ${param} placeholders")->required();
  tune_cmd->add_option("space", tune_space, "tuning_parameters file")->required();
  tune_cmd->add_option("--entry", tune_entry)->required();
  tune_cmd->add_option("--arg", tune_args);
  tune_cmd->add_option("--strategy", tune_strategy,
                       "exhaustive | random | coorddesc");
  tune_cmd->add_option("--budget", tune_budget);
  tune_cmd->add_option("--seed", tune_seed);
  tune_cmd->add_option("--trace-csv", tune_csv, "write the evaluation trace CSV here");
  addCommonOptions(tune_cmd, tune_common);

  // ---- time ----
  auto *time_cmd = app.add_subcommand(
      "time", "compare direct pass execution with script interpretation");
  std::string time_payload, time_pipeline;
  int time_reps = 7;
  CommonOpts time_common;
  time_cmd->add_option("payload", time_payload)->required();
  time_cmd->add_option("pipeline", time_pipeline)->required();
  time_cmd->add_option("--reps", time_reps);
  addCommonOptions(time_cmd, time_common);

  CLI11_PARSE(app, argc, argv);

  Context ctx = Context::standard();

  if (run->parsed()) {
    if (!configureContext(ctx, run_common))
      return kExitDefinite;
    return cmdRun(ctx, run_payload, run_script, run_params, run_check_static,
                  run_initial, run_final, run_check_dynamic, run_trace, run_time,
                  run_entry);
  }

  if (exec_cmd->parsed()) {
    if (!configureContext(ctx, exec_common))
      return kExitDefinite;
    auto payload = loadPayload(ctx, exec_payload);
    if (!payload)
      return kExitDefinite;
    auto args = parseArgs(exec_args);
    if (!args)
      return kExitDefinite;
    ExecOptions opts;
    opts.step_limit = exec_steps;
    opts.cost.vector_width = exec_width;
    opts.cost.kernel_alpha = exec_alpha;
    for (const auto &w : exec_weights) {
      auto eq = w.find('=');
      if (eq != std::string::npos)
        opts.cost.weights[w.substr(0, eq)] = std::strtod(w.c_str() + eq + 1, nullptr);
    }
    ExecResult result = execute(*payload, ctx.payload, exec_entry, *args, opts);
    if (!result.ok) {
      std::cerr << formatDiagnostic(result.error) << "\n";
      return kExitDefinite;
    }
    printExecResult(result, exec_full);
    if (exec_cost)
      std::cout << result.cost.json() << "\n";
    return kExitOk;
  }

  if (check->parsed()) {
    if (!configureContext(ctx, check_common))
      return kExitDefinite;
    auto script = loadScript(ctx, check_script);
    if (!script)
      return kExitDefinite;
    const Operation *entry = script->sequence(check_entry);
    if (!entry) {
      std::cerr << "error: script has no @" << check_entry << "\n";
      return kExitDefinite;
    }
    OpSetExpr init_set = OpSetExpr::parse(check_initial);
    if (init_set.empty() && !check_payload.empty()) {
      auto payload = loadPayload(ctx, check_payload);
      if (!payload)
        return kExitDefinite;
      std::set<std::string> names;
      walk(payload->root, [&](const Operation &op) {
        if (op.name != "builtin.module")
          names.insert(op.name);
        return true;
      });
      init_set.atoms.assign(names.begin(), names.end());
    }
    StaticReport report =
        checkStatic(script->module, *entry, init_set, OpSetExpr::parse(check_final),
                    ctx.signatureResolver(), ctx.payload);
    for (const auto &w : report.warnings)
      std::cerr << w << "\n";
    bool failed = false;
    for (const auto &f : report.findings) {
      if (f.kind == StaticFinding::Kind::OpaqueTransform)
        continue;
      std::cerr << check_script << ":" << f.loc.line << ":" << f.loc.col
                << ": error: " << f.message << "\n";
      failed = true;
    }
    std::cout << (failed ? "check: FAILED\n" : "check: clean\n");
    return failed ? kExitCheckFailure : kExitOk;
  }

  if (opt->parsed()) {
    if (!configureContext(ctx, opt_common))
      return kExitDefinite;
    auto script = loadScript(ctx, opt_script);
    if (!script)
      return kExitDefinite;
    Module m = std::move(script->module);
    if (opt_inline) {
      auto inlined = inlineIncludes(m, ctx.transforms);
      printDiags(inlined.diags.items);
      if (!inlined.ok())
        return kExitDefinite;
      m = std::move(*inlined.module);
    }
    if (opt_simplify)
      m = simplifyScript(m, ctx.transforms);
    if (opt_infer) {
      auto inferred = inferPassOptions(m, ctx.transforms);
      printDiags(inferred.diags.items);
      if (!inferred.ok())
        return kExitDefinite;
      m = std::move(*inferred.module);
    }
    if (opt_check_inval) {
      auto diags = analyzeInvalidation(m, ctx.transforms);
      printDiags(diags);
      if (!diags.empty())
        return kExitCheckFailure;
    }
    std::cout << printModule(m, ctx.transforms.dialectRegistry());
    return kExitOk;
  }

  if (p2t->parsed()) {
    std::string error;
    auto text = pipelineToTransform(p2t_pipeline, &error);
    if (!text) {
      std::cerr << "error: " << error << "\n";
      return kExitDefinite;
    }
    std::cout << *text;
    return kExitOk;
  }

  if (bisect->parsed()) {
    if (!configureContext(ctx, bisect_common))
      return kExitDefinite;
    auto payload = loadPayload(ctx, bisect_payload);
    auto script = loadScript(ctx, bisect_script);
    auto args = parseArgs(bisect_args);
    if (!payload || !script || !args)
      return kExitDefinite;
    BisectResult result =
        bisectPatterns(ctx, *payload, *script, bisect_entry, *args);
    if (!result.ok) {
      std::cerr << "error: " << result.error << "\n";
      return kExitDefinite;
    }
    if (result.found)
      std::cout << "culprit: " << result.culprit << "\n";
    else
      std::cout << "no culprit\n";
    std::cout << "probes: " << result.probes << "\n";
    std::cout << "cost with full set: " << result.full_cost << "\n";
    std::cout << "cost without culprit: " << result.culprit_free_cost << "\n";
    return kExitOk;
  }

  if (tune_cmd->parsed()) {
    if (!configureContext(ctx, tune_common))
      return kExitDefinite;
    auto payload = loadPayload(ctx, tune_payload);
    auto tmpl = readFile(tune_template);
    auto space_text = readFile(tune_space);
    auto args = parseArgs(tune_args);
    if (!payload || !tmpl || !space_text || !args) {
      std::cerr << "error: missing inputs\n";
      return kExitDefinite;
    }
    auto space = parseSpaceFile(*space_text, tune_space);
    printDiags(space.diags.items);
    if (!space.ok())
      return kExitDefinite;
    auto strategy = tuneStrategyByName(tune_strategy);
    if (!strategy) {
      std::cerr << "error: unknown strategy '" << tune_strategy << "'\n";
      return kExitDefinite;
    }
    TuneRequest req;
    req.entry = tune_entry;
    req.args = *args;
    req.budget = tune_budget;
    req.seed = tune_seed;
    req.strategy = *strategy;
    TuneResult result = tune(*tmpl, *space.space, *payload, ctx, req);
    if (!result.ok) {
      std::cerr << "error: " << result.error << "\n";
      return kExitDefinite;
    }
    std::cout << "best:";
    for (const auto &[k, v] : result.best)
      std::cout << " " << k << "=" << v;
    std::cout << "\ncost: " << result.best_cost << "\n";
    std::cout << "evaluations: " << result.evaluations << "\n";
    std::string csv = tuneTraceCsv(result);
    if (tune_csv.empty()) {
      std::cout << csv;
    } else {
      std::ofstream out(tune_csv);
      out << csv;
    }
    return kExitOk;
  }

  if (time_cmd->parsed()) {
    if (!configureContext(ctx, time_common))
      return kExitDefinite;
    auto payload = loadPayload(ctx, time_payload);
    if (!payload)
      return kExitDefinite;
    TimeReport report = timePipeline(ctx, *payload, time_pipeline, time_reps);
    if (!report.ok) {
      std::cerr << "error: " << report.error << "\n";
      return kExitDefinite;
    }
    std::cout << "direct median:      " << report.direct_ms << " ms\n";
    std::cout << "interpreted median: " << report.script_ms << " ms\n";
    std::cout << "overhead:           " << report.overhead_percent << " %\n";
    std::cout << "outputs identical:  " << (report.outputs_identical ? "yes" : "no")
              << "\n";
    return kExitOk;
  }

  return kExitOk;
}
