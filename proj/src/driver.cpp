//===- driver.cpp - CLI-level workflows ------------------------------------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "tfc/driver.hpp"
#include "tfc/text.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <sstream>

namespace tfc {

std::optional<std::string> pipelineToTransform(const std::string &pipeline,
                                               std::string *error) {
  auto parsed = parsePipeline(pipeline, error);
  if (!parsed)
    return std::nullopt;
  std::ostringstream os;
  os << "transform.named_sequence @transform_main {\n^bb0(%root: !any):\n";
  int n = 0;
  for (const auto &entry : *parsed) {
    std::string anchor_handle = "%a" + std::to_string(n);
    os << "  " << anchor_handle << " = structured.match(%root) {ops = [\""
       << entry.anchor << "\"]}\n";
    os << "  %r" << n << " = transform.apply_registered_pass(" << anchor_handle
       << ") {pass = \"" << entry.pass << "\"";
    if (!entry.options.kv.empty()) {
      os << ", options = \"";
      bool first = true;
      for (const auto &[k, v] : entry.options.kv) {
        if (!first)
          os << ",";
        first = false;
        os << k << "=" << v;
      }
      os << "\"";
    }
    os << "}\n";
    ++n;
  }
  os << "}\n";
  return os.str();
}

//===----------------------------------------------------------------------===//
// Pattern bisection
//===----------------------------------------------------------------------===//

namespace {

// Rewrites the first apply_patterns op to carry `subset` and returns the
// script copy.
std::optional<Module> scriptWithPatterns(const Module &script,
                                         const std::vector<std::string> &subset) {
  Module copy = script;
  bool done = false;
  walk(copy.root, [&](Operation &op) {
    if (op.name == "transform.apply_patterns" && !done) {
      op.attrs["patterns"] = AttrValue::makeStrList(subset);
      done = true;
      return false;
    }
    return true;
  });
  if (!done)
    return std::nullopt;
  return copy;
}

struct ProbeRunner {
  const Context &ctx;
  const Module &payload;
  const Module &script;
  const std::string &entry;
  const std::vector<ArgSpec> &args;
  const ExecOptions &exec;
  std::map<std::string, double> cache;
  std::uint64_t probes = 0;

  double probe(const std::vector<std::string> &subset, std::string *error) {
    std::string key;
    for (const auto &s : subset)
      key += s + ",";
    if (auto it = cache.find(key); it != cache.end())
      return it->second;
    ++probes;
    auto variant = scriptWithPatterns(script, subset);
    if (!variant) {
      *error = "script has no apply_patterns op";
      return std::numeric_limits<double>::quiet_NaN();
    }
    Script s;
    s.module = std::move(*variant);
    walk(s.module.root, [&](const Operation &op) {
      if (op.name == "transform.named_sequence")
        if (const AttrValue *sym = op.attr("sym_name"))
          s.sequences[sym->asStr()] = op.id;
      return true;
    });
    Module clone = payload;
    InterpOptions opts;
    opts.collect_trace = false;
    InterpResult ir = ctx.apply(s, clone, opts);
    if (!ir.ok) {
      *error = "probe compilation failed: " + ir.error.message;
      return std::numeric_limits<double>::quiet_NaN();
    }
    ExecResult ex = execute(clone, ctx.payload, entry, args, exec);
    if (!ex.ok) {
      *error = "probe execution failed: " + ex.error.message;
      return std::numeric_limits<double>::quiet_NaN();
    }
    cache[key] = ex.cost.weighted_cost;
    return ex.cost.weighted_cost;
  }
};

std::vector<std::string> fullPatternList(const Module &script) {
  std::vector<std::string> out;
  walk(script.root, [&](const Operation &op) {
    if (op.name == "transform.apply_patterns")
      if (const AttrValue *p = op.attr("patterns")) {
        out = p->asStrList();
        return false;
      }
    return true;
  });
  return out;
}

std::vector<std::string> without(const std::vector<std::string> &all,
                                 const std::vector<std::string> &removed) {
  std::vector<std::string> out;
  for (const auto &p : all)
    if (std::find(removed.begin(), removed.end(), p) == removed.end())
      out.push_back(p);
  return out;
}

} // namespace

BisectResult bisectPatterns(const Context &ctx, const Module &payload,
                            const Script &base_script, const std::string &entry,
                            const std::vector<ArgSpec> &args,
                            const ExecOptions &exec) {
  BisectResult result;
  std::vector<std::string> all = fullPatternList(base_script.module);
  if (all.empty()) {
    result.error = "the script has no apply_patterns op with a pattern list";
    return result;
  }
  ProbeRunner runner{ctx, payload, base_script.module, entry, args, exec, {}, 0};
  std::string error;
  double full = runner.probe(all, &error);
  if (!error.empty()) {
    result.error = error;
    return result;
  }
  runner.probes = 0; // the full-set baseline is not counted as a probe
  result.full_cost = full;

  std::vector<std::string> candidates = all;
  while (candidates.size() > 1) {
    size_t half = (candidates.size() + 1) / 2;
    std::vector<std::string> a(candidates.begin(), candidates.begin() + half);
    std::vector<std::string> b(candidates.begin() + half, candidates.end());
    double cost_wo_a = runner.probe(without(all, a), &error);
    if (!error.empty()) {
      result.error = error;
      return result;
    }
    double cost_wo_b = runner.probe(without(all, b), &error);
    if (!error.empty()) {
      result.error = error;
      return result;
    }
    // Removing the half that contains the culprit lowers the cost more.
    candidates = cost_wo_a <= cost_wo_b ? a : b;
  }

  const std::string &suspect = candidates[0];
  double verified = runner.probe(without(all, {suspect}), &error);
  if (!error.empty()) {
    result.error = error;
    return result;
  }
  result.ok = true;
  result.probes = runner.probes;
  if (verified < full) {
    result.found = true;
    result.culprit = suspect;
    result.culprit_free_cost = verified;
  } else {
    result.found = false; // no culprit
    result.culprit_free_cost = full;
  }
  return result;
}

std::optional<std::string>
leaveOneOutCulprit(const Context &ctx, const Module &payload,
                   const Script &base_script, const std::string &entry,
                   const std::vector<ArgSpec> &args, const ExecOptions &exec) {
  std::vector<std::string> all = fullPatternList(base_script.module);
  ProbeRunner runner{ctx, payload, base_script.module, entry, args, exec, {}, 0};
  std::string error;
  double full = runner.probe(all, &error);
  if (!error.empty())
    return std::nullopt;
  std::optional<std::string> best;
  double best_cost = full;
  for (const auto &p : all) {
    double c = runner.probe(without(all, {p}), &error);
    if (!error.empty())
      return std::nullopt;
    if (c < best_cost) {
      best_cost = c;
      best = p;
    }
  }
  return best;
}

//===----------------------------------------------------------------------===//
// Timing
//===----------------------------------------------------------------------===//

namespace {

double medianMs(std::vector<double> &xs) {
  std::sort(xs.begin(), xs.end());
  size_t n = xs.size();
  return n == 0 ? 0 : (n % 2 ? xs[n / 2] : (xs[n / 2 - 1] + xs[n / 2]) / 2);
}

} // namespace

TimeReport timePipeline(const Context &ctx, const Module &payload,
                        const std::string &pipeline, int reps) {
  TimeReport report;
  report.reps = reps;
  std::string error;
  auto pipe = parsePipeline(pipeline, &error);
  if (!pipe) {
    report.error = error;
    return report;
  }
  auto script_text = pipelineToTransform(pipeline, &error);
  if (!script_text) {
    report.error = error;
    return report;
  }
  auto parsed = parseTransform(*script_text, ctx.transforms, ctx.payload);
  if (!parsed.ok()) {
    report.error = "converted script does not verify:\n" + parsed.diags.str();
    return report;
  }

  using clock = std::chrono::steady_clock;
  std::optional<Module> direct_out, script_out;
  std::vector<double> direct_ms, script_ms;
  for (int rep = -1; rep < reps; ++rep) { // rep -1: discarded warm-up
    Module m = payload;
    auto t0 = clock::now();
    TransformStatus s =
        runPipelineDirect(m, *pipe, ctx.passes, ctx.payload, &ctx.patterns);
    auto t1 = clock::now();
    if (!s.isOk()) {
      report.error = "direct pipeline failed: " + s.message;
      return report;
    }
    if (rep >= 0)
      direct_ms.push_back(
          std::chrono::duration<double, std::milli>(t1 - t0).count());
    direct_out = std::move(m);
  }
  for (int rep = -1; rep < reps; ++rep) {
    Module m = payload;
    InterpOptions opts;
    opts.collect_trace = false;
    auto t0 = clock::now();
    InterpResult r = ctx.apply(*parsed.script, m, opts);
    auto t1 = clock::now();
    if (!r.ok) {
      report.error = "interpreted pipeline failed: " + r.error.message;
      return report;
    }
    if (rep >= 0)
      script_ms.push_back(
          std::chrono::duration<double, std::milli>(t1 - t0).count());
    script_out = std::move(m);
  }

  report.direct_ms = medianMs(direct_ms);
  report.script_ms = medianMs(script_ms);
  report.overhead_percent =
      report.direct_ms > 0
          ? (report.script_ms - report.direct_ms) / report.direct_ms * 100.0
          : 0;
  report.outputs_identical = structurallyEqual(*direct_out, *script_out);
  if (!report.outputs_identical) {
    report.error = "direct and interpreted modes produced different payloads";
    return report;
  }
  report.ok = true;
  return report;
}

std::string syntheticPayloadText(int op_count) {
  // Each function contributes ~25 ops including a loop with memory traffic.
  std::ostringstream os;
  int funcs = std::max(1, op_count / 25);
  for (int fi = 0; fi < funcs; ++fi) {
    std::string p = "f" + std::to_string(fi);
    os << "func.func @work" << fi << " {\n";
    os << "^bb" << p << "(%" << p << "A: memref<16xi64>):\n";
    os << "  %" << p << "c0 = arith.constant {value = 0} : index\n";
    os << "  %" << p << "c1 = arith.constant {value = 1} : index\n";
    os << "  %" << p << "c16 = arith.constant {value = 16} : index\n";
    os << "  %" << p << "k3 = arith.constant {value = 3} : i64\n";
    os << "  %" << p << "k5 = arith.constant {value = 5} : i64\n";
    os << "  %" << p << "k0 = arith.constant {value = 0} : i64\n";
    os << "  %" << p << "m = arith.muli(%" << p << "k3, %" << p << "k5)\n";
    os << "  %" << p << "z = arith.addi(%" << p << "m, %" << p << "k0)\n";
    os << "  scf.for(%" << p << "c0, %" << p << "c16, %" << p << "c1) {\n";
    os << "  ^bb" << p << "b(%" << p << "i: index):\n";
    os << "    %" << p << "v = memref.load(%" << p << "A, %" << p << "i)\n";
    os << "    %" << p << "w = arith.addi(%" << p << "v, %" << p << "z)\n";
    os << "    %" << p << "x = arith.muli(%" << p << "w, %" << p << "k3)\n";
    os << "    %" << p << "c = arith.cmpi(%" << p << "x, %" << p
       << "k5) {predicate = \"slt\"}\n";
    os << "    scf.if(%" << p << "c) {\n";
    os << "      memref.store(%" << p << "x, %" << p << "A, %" << p << "i)\n";
    os << "      scf.yield\n";
    os << "    } {\n";
    os << "      memref.store(%" << p << "w, %" << p << "A, %" << p << "i)\n";
    os << "      scf.yield\n";
    os << "    }\n";
    os << "    scf.yield\n";
    os << "  }\n";
    os << "  func.return\n";
    os << "}\n";
  }
  return os.str();
}

ParamValue parseParamValueText(const std::string &text) {
  if (!text.empty() && text.front() == '[') {
    std::vector<std::int64_t> xs;
    std::string cur;
    for (char c : text.substr(1)) {
      if (c == ',' || c == ']') {
        if (!cur.empty())
          xs.push_back(std::strtoll(cur.c_str(), nullptr, 10));
        cur.clear();
      } else if (c != ' ') {
        cur += c;
      }
    }
    return ParamValue::fromList(std::move(xs));
  }
  char *end = nullptr;
  std::int64_t v = std::strtoll(text.c_str(), &end, 10);
  if (end == text.c_str() + text.size() && !text.empty())
    return ParamValue::fromInt(v);
  if (text.find('.') != std::string::npos)
    return ParamValue::fromOpName(text);
  return ParamValue::fromStr(text);
}

} // namespace tfc
