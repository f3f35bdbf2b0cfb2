//===- transform_ir.cpp - The transform-script IR --------------------------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "tfc/transform_ir.hpp"
#include "tfc/text.hpp"

#include <set>
#include <sstream>

namespace tfc {

std::string ParamValue::str_repr() const {
  switch (kind) {
  case Kind::Str:
    return "\"" + str + "\"";
  case Kind::OpName:
    return str;
  case Kind::IntList: {
    if (ints.size() == 1)
      return std::to_string(ints[0]);
    std::string s = "[";
    for (size_t i = 0; i < ints.size(); ++i) {
      if (i)
        s += ", ";
      s += std::to_string(ints[i]);
    }
    return s + "]";
  }
  }
  return "";
}

//===----------------------------------------------------------------------===//
// Registry
//===----------------------------------------------------------------------===//

TransformRegistry::TransformRegistry() {
  // The wrapper op so parsed scripts verify as modules.
  OpDefinition mod;
  mod.name = "builtin.module";
  mod.num_regions = 1;
  dialect_.registerDialect({mod});
}

DiagnosticList TransformRegistry::registerTransform(TransformOpInfo info) {
  DiagnosticList diags;
  if (infos_.count(info.name)) {
    diags.error("transform op '" + info.name + "' is already registered");
    return diags;
  }
  OpDefinition d;
  d.name = info.name;
  d.variadic = true; // exact arity enforced by the script verifier
  d.num_operands = 0;
  d.variadic_results = true;
  d.num_regions = info.variadic_regions ? -1 : info.num_regions;
  d.symbol_attr = info.symbol_attr;
  dialect_.registerDialect({d});
  infos_.emplace(info.name, std::move(info));
  return diags;
}

const TransformOpInfo *TransformRegistry::lookup(const std::string &name) const {
  auto it = infos_.find(name);
  return it == infos_.end() ? nullptr : &it->second;
}

std::optional<TransformEffect>
TransformRegistry::effectsOf(const std::string &name) const {
  const TransformOpInfo *info = lookup(name);
  if (!info)
    return std::nullopt;
  TransformEffect e;
  for (const auto &o : info->operands)
    e.operand_consumed.push_back(o.consumed);
  e.produces = info->results;
  return e;
}

void registerStructuralTransforms(TransformRegistry &reg) {
  {
    TransformOpInfo seq;
    seq.name = "transform.named_sequence";
    seq.num_regions = 1;
    seq.symbol_attr = "sym_name";
    reg.registerTransform(seq);
  }
  {
    TransformOpInfo inc;
    inc.name = "transform.include";
    inc.symbol_attr = "callee";
    // Operand arity and effects come from the callee; checked structurally.
    reg.registerTransform(inc);
  }
  {
    TransformOpInfo s;
    s.name = "transform.sequence";
    s.operands.push_back({false, false, {}});
    s.num_regions = 1;
    reg.registerTransform(s);
  }
  {
    TransformOpInfo alt;
    alt.name = "transform.alternatives";
    alt.operands.push_back({false, true, {}});
    alt.variadic_regions = true;
    alt.invalidation = InvalidationScope::Subtree;
    reg.registerTransform(alt);
  }
  {
    // Internal marker the script simplifier substitutes for removed noop
    // transforms; keeps their consume effect visible to invalidation
    // analysis. Consumes its operand, yields empty handles.
    TransformOpInfo fwd;
    fwd.name = "transform.forward";
    fwd.operands.push_back({false, true, {}});
    reg.registerTransform(fwd);
  }
}

//===----------------------------------------------------------------------===//
// Result specs
//===----------------------------------------------------------------------===//

std::vector<TransformResultSpec> resultSpecsFor(const TransformOpInfo &info,
                                                const Operation &op) {
  if (info.results_from_match_attr) {
    TransformResultSpec spec;
    if (const AttrValue *ops = op.attr("ops");
        ops && ops->kind == AttrValue::Kind::StrList)
      spec.constraint_atoms = ops->asStrList();
    return {spec};
  }
  if (info.name == "transform.forward") {
    std::vector<TransformResultSpec> specs(op.results.size());
    return specs;
  }
  return info.results;
}

//===----------------------------------------------------------------------===//
// Script verification
//===----------------------------------------------------------------------===//

namespace {

struct ValueKind {
  bool is_param = false;
  std::vector<std::string> atoms; // handle constraint; empty = any
};

struct ScriptVerifier {
  const TransformRegistry &treg;
  const DialectRegistry &payload_reg;
  const Module &m;
  DiagnosticList &diags;
  std::map<std::string, const Operation *> sequences;

  bool atomCovered(const std::string &o, const std::vector<std::string> &req) {
    for (const auto &r : req) {
      if (r == o || r == "any_op" || r == "*")
        return true;
      if (r.size() > 2 && r.rfind(".*") == r.size() - 2) {
        std::string prefix = r.substr(0, r.size() - 1);
        if (o.rfind(prefix, 0) == 0)
          return true;
      }
      if (r.rfind("interface:", 0) == 0) {
        OpSetExpr e;
        e.atoms = {r};
        if (opInSet(o, e, payload_reg))
          return true;
      }
    }
    return false;
  }

  void checkHandleConstraint(const Operation &op, size_t idx,
                             const ValueKind &have,
                             const std::vector<std::string> &req) {
    if (req.empty())
      return; // any op accepted
    if (have.atoms.empty()) {
      diags.error("'" + op.name + "' operand #" + std::to_string(idx) +
                      " requires a handle constrained to " +
                      OpSetExpr{req}.str() + " but an unconstrained handle was passed",
                  op.loc, m.filename);
      return;
    }
    for (const auto &o : have.atoms)
      if (!atomCovered(o, req))
        diags.error("'" + op.name + "' operand #" + std::to_string(idx) +
                        " requires " + OpSetExpr{req}.str() + " but got a handle to " +
                        OpSetExpr{have.atoms}.str(),
                    op.loc, m.filename);
  }

  void verifyBody(const Block &block, std::map<std::string, ValueKind> env) {
    for (const auto &op : block.ops)
      verifyScriptOp(op, env);
  }

  void verifyScriptOp(const Operation &op, std::map<std::string, ValueKind> &env) {
    const TransformOpInfo *info = treg.lookup(op.name);
    if (!info) {
      diags.error("unknown transform op '" + op.name + "'", op.loc, m.filename);
      return;
    }

    auto lookupVal = [&](const std::string &name) -> const ValueKind * {
      auto it = env.find(name);
      return it == env.end() ? nullptr : &it->second;
    };

    if (op.name == "transform.include") {
      const AttrValue *callee = op.attr("callee");
      if (!callee || callee->kind != AttrValue::Kind::Sym) {
        diags.error("transform.include requires a @callee", op.loc, m.filename);
        return;
      }
      auto it = sequences.find(callee->asStr());
      if (it == sequences.end()) {
        diags.error("include of undefined sequence '@" + callee->asStr() + "'",
                    op.loc, m.filename);
        return;
      }
      const Block &entry = it->second->regions.at(0).blocks.at(0);
      if (entry.args.size() != op.operands.size()) {
        diags.error("include of '@" + callee->asStr() + "' passes " +
                        std::to_string(op.operands.size()) + " arguments, expected " +
                        std::to_string(entry.args.size()),
                    op.loc, m.filename);
        return;
      }
      for (size_t i = 0; i < op.operands.size(); ++i) {
        const ValueKind *have = lookupVal(op.operands[i]);
        if (!have)
          continue; // dominance diagnostics already cover this
        const Type &want = entry.args[i].type;
        if (want.kind == TypeKind::Param) {
          if (!have->is_param)
            diags.error("include argument #" + std::to_string(i) +
                            " must be a parameter",
                        op.loc, m.filename);
        } else {
          if (have->is_param)
            diags.error("include argument #" + std::to_string(i) +
                            " must be a handle",
                        op.loc, m.filename);
          else
            checkHandleConstraint(op, i, *have, want.handle_atoms);
        }
      }
      return;
    }

    if (op.name != "transform.named_sequence") {
      // Operand arity and kinds against the registered signature.
      size_t min_args = info->operands.size();
      size_t max_args = min_args + (info->optional_trailing_param ? 1 : 0);
      if (op.operands.size() < min_args || op.operands.size() > max_args) {
        diags.error("'" + op.name + "' expects " + std::to_string(min_args) +
                        (info->optional_trailing_param ? " or " + std::to_string(max_args)
                                                       : "") +
                        " operands, got " + std::to_string(op.operands.size()),
                    op.loc, m.filename);
      }
      for (size_t i = 0; i < op.operands.size(); ++i) {
        const ValueKind *have = lookupVal(op.operands[i]);
        if (!have)
          continue;
        bool want_param =
            i < info->operands.size() ? info->operands[i].is_param : true;
        if (want_param != have->is_param) {
          diags.error("'" + op.name + "' operand #" + std::to_string(i) +
                          (want_param ? " must be a parameter" : " must be a handle"),
                      op.loc, m.filename);
          continue;
        }
        if (!want_param && i < info->operands.size())
          checkHandleConstraint(op, i, *have, info->operands[i].constraint_atoms);
      }
      // Result count.
      bool flexible = info->results_from_match_attr ||
                      op.name == "transform.forward";
      if (!flexible && op.results.size() != info->results.size())
        diags.error("'" + op.name + "' produces " +
                        std::to_string(info->results.size()) + " results, got " +
                        std::to_string(op.results.size()),
                    op.loc, m.filename);
    }

    if (info->verifier)
      info->verifier(op, diags);

    // Bind results.
    std::vector<TransformResultSpec> specs = resultSpecsFor(*info, op);
    for (size_t i = 0; i < op.results.size(); ++i) {
      ValueKind vk;
      if (i < specs.size()) {
        vk.is_param = specs[i].is_param;
        vk.atoms = specs[i].constraint_atoms;
      }
      env[op.results[i].name] = vk;
    }

    // Regions: sequence and alternatives bind their block argument to the
    // operand's payload; named_sequence arguments were bound by the caller.
    for (const auto &r : op.regions) {
      for (const auto &b : r.blocks) {
        auto inner = env;
        if (!b.args.empty()) {
          if (op.name == "transform.sequence" ||
              op.name == "transform.alternatives") {
            if (b.args.size() > 1)
              diags.error("'" + op.name + "' regions take at most one argument",
                          op.loc, m.filename);
            const ValueKind *target =
                op.operands.empty() ? nullptr : lookupVal(op.operands[0]);
            ValueKind vk;
            if (const Type &t = b.args[0].type; t.kind == TypeKind::Handle)
              vk.atoms = t.handle_atoms;
            else if (target)
              vk = *target;
            inner[b.args[0].name] = vk;
          } else if (op.name == "transform.named_sequence") {
            for (const auto &arg : b.args) {
              ValueKind vk;
              if (arg.type.kind == TypeKind::Param)
                vk.is_param = true;
              else if (arg.type.kind == TypeKind::Handle)
                vk.atoms = arg.type.handle_atoms;
              else
                diags.error("named_sequence arguments must be handles (!any, "
                            "!op<...>) or !param",
                            op.loc, m.filename);
              inner[arg.name] = vk;
            }
          } else {
            diags.error("'" + op.name + "' does not take region arguments", op.loc,
                        m.filename);
          }
        }
        for (const auto &o : b.ops)
          verifyScriptOp(o, inner);
      }
    }
  }

  void detectIncludeCycles() {
    // DFS over the include call graph.
    std::map<std::string, std::vector<std::string>> edges;
    for (const auto &[name, seq] : sequences) {
      std::vector<std::string> callees;
      walk(*seq, [&](const Operation &op) {
        if (op.name == "transform.include")
          if (const AttrValue *c = op.attr("callee");
              c && c->kind == AttrValue::Kind::Sym)
            callees.push_back(c->asStr());
        return true;
      });
      edges[name] = std::move(callees);
    }
    std::set<std::string> done;
    std::vector<std::string> stack;
    std::function<bool(const std::string &)> dfs = [&](const std::string &n) -> bool {
      if (std::find(stack.begin(), stack.end(), n) != stack.end()) {
        std::string cycle;
        for (auto it = std::find(stack.begin(), stack.end(), n); it != stack.end();
             ++it)
          cycle += "@" + *it + " -> ";
        cycle += "@" + n;
        diags.error("recursive include cycle: " + cycle, {}, m.filename);
        return true;
      }
      if (done.count(n))
        return false;
      stack.push_back(n);
      for (const auto &c : edges[n])
        if (edges.count(c) && dfs(c))
          return true;
      stack.pop_back();
      done.insert(n);
      return false;
    };
    for (const auto &[name, _] : edges)
      if (dfs(name))
        return;
  }

  void run() {
    for (const auto &b : m.root.regions.at(0).blocks)
      for (const auto &op : b.ops) {
        if (op.name != "transform.named_sequence") {
          diags.error("top level of a transform script holds named sequences only",
                      op.loc, m.filename);
          continue;
        }
        const AttrValue *sym = op.attr("sym_name");
        if (!sym || sym->kind != AttrValue::Kind::Sym) {
          diags.error("named_sequence requires a symbol name", op.loc, m.filename);
          continue;
        }
        if (!sequences.emplace(sym->asStr(), &op).second)
          diags.error("duplicate sequence '@" + sym->asStr() + "'", op.loc,
                      m.filename);
      }
    for (const auto &[name, seq] : sequences) {
      std::map<std::string, ValueKind> env;
      verifyScriptOp(*seq, env);
    }
    detectIncludeCycles();
  }
};

} // namespace

DiagnosticList verifyScript(const Module &m, const TransformRegistry &treg,
                            const DialectRegistry &payload_reg) {
  DiagnosticList diags = verifyModule(m, treg.dialectRegistry());
  ScriptVerifier v{treg, payload_reg, m, diags, {}};
  if (!m.root.regions.empty())
    v.run();
  return diags;
}

ScriptParseResult parseTransform(const std::string &text,
                                 const TransformRegistry &treg,
                                 const DialectRegistry &payload_reg,
                                 const std::string &filename) {
  ScriptParseResult result;
  ParseResult parsed = parseModuleText(text, treg.dialectRegistry(), filename);
  result.diags = parsed.diags;
  if (!parsed.module)
    return result;
  DiagnosticList vdiags = verifyScript(*parsed.module, treg, payload_reg);
  for (auto &d : vdiags.items)
    result.diags.items.push_back(d);
  if (result.diags.hasErrors())
    return result;
  Script s;
  s.module = std::move(*parsed.module);
  walk(s.module.root, [&](const Operation &op) {
    if (op.name == "transform.named_sequence")
      if (const AttrValue *sym = op.attr("sym_name"))
        s.sequences[sym->asStr()] = op.id;
    return true;
  });
  result.script = std::move(s);
  return result;
}

std::string printScript(const Script &s, const TransformRegistry &treg) {
  return printModule(s.module, treg.dialectRegistry());
}

std::vector<bool> sequenceArgConsumption(const Module &script,
                                         const Operation &seq,
                                         const TransformRegistry &treg) {
  const Block &entry = seq.regions.at(0).blocks.at(0);
  std::vector<bool> consumed(entry.args.size(), false);

  // Alias map: region block args alias the operand they are bound to.
  std::map<std::string, std::string> alias;
  std::function<std::string(const std::string &)> resolve =
      [&](const std::string &n) -> std::string {
    auto it = alias.find(n);
    return it == alias.end() ? n : resolve(it->second);
  };

  std::map<std::string, const Operation *> sequences;
  walk(script.root, [&](const Operation &op) {
    if (op.name == "transform.named_sequence")
      if (const AttrValue *sym = op.attr("sym_name"))
        sequences[sym->asStr()] = &op;
    return true;
  });

  std::set<std::string> marked;
  std::set<const Operation *> visiting;
  std::function<void(const Operation &)> scan = [&](const Operation &op) {
    const TransformOpInfo *info = treg.lookup(op.name);
    if (op.name == "transform.include") {
      const AttrValue *c = op.attr("callee");
      auto it = c ? sequences.find(c->asStr()) : sequences.end();
      if (it != sequences.end() && !visiting.count(it->second)) {
        visiting.insert(it->second);
        std::vector<bool> callee_consumed =
            sequenceArgConsumption(script, *it->second, treg);
        visiting.erase(it->second);
        for (size_t i = 0; i < op.operands.size() && i < callee_consumed.size(); ++i)
          if (callee_consumed[i])
            marked.insert(resolve(op.operands[i]));
      }
    } else if (info) {
      for (size_t i = 0; i < op.operands.size(); ++i) {
        bool is_consumed = i < info->operands.size() && info->operands[i].consumed;
        if (is_consumed)
          marked.insert(resolve(op.operands[i]));
      }
    }
    for (const auto &r : op.regions)
      for (const auto &b : r.blocks) {
        if (!b.args.empty() && !op.operands.empty() &&
            (op.name == "transform.sequence" || op.name == "transform.alternatives"))
          alias[b.args[0].name] = op.operands[0];
        for (const auto &o : b.ops)
          scan(o);
      }
  };
  for (const auto &o : entry.ops)
    scan(o);

  for (size_t i = 0; i < entry.args.size(); ++i)
    consumed[i] = marked.count(entry.args[i].name) != 0;
  return consumed;
}

} // namespace tfc
