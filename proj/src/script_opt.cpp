//===- script_opt.cpp - Rewrites and analyses over transform scripts ------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "tfc/script_opt.hpp"

#include <set>
#include <sstream>

namespace tfc {

namespace {

std::map<std::string, const Operation *> sequencesOf(const Module &script) {
  std::map<std::string, const Operation *> out;
  walk(script.root, [&](const Operation &op) {
    if (op.name == "transform.named_sequence")
      if (const AttrValue *sym = op.attr("sym_name"))
        out[sym->asStr()] = &op;
    return true;
  });
  return out;
}

bool detectCycle(const Module &script, DiagnosticList &diags) {
  auto sequences = sequencesOf(script);
  std::map<std::string, std::vector<std::string>> edges;
  for (const auto &[name, seq] : sequences) {
    auto &out = edges[name];
    walk(*seq, [&](const Operation &op) {
      if (op.name == "transform.include")
        if (const AttrValue *c = op.attr("callee"))
          out.push_back(c->asStr());
      return true;
    });
  }
  std::set<std::string> done;
  std::vector<std::string> stack;
  std::function<bool(const std::string &)> dfs = [&](const std::string &n) -> bool {
    auto it = std::find(stack.begin(), stack.end(), n);
    if (it != stack.end()) {
      std::string cycle;
      for (; it != stack.end(); ++it)
        cycle += "@" + *it + " -> ";
      diags.error("recursive include cycle: " + cycle + "@" + n, {},
                  script.filename);
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
      return true;
  return false;
}

// Expands one include op in `ops`; returns true if something was expanded.
bool expandFirstInclude(Module &script, std::vector<Operation> &ops,
                        const std::map<std::string, const Operation *> &sequences) {
  for (size_t i = 0; i < ops.size(); ++i) {
    Operation &op = ops[i];
    if (op.name == "transform.include") {
      const AttrValue *callee_attr = op.attr("callee");
      auto it = callee_attr ? sequences.find(callee_attr->asStr()) : sequences.end();
      if (it == sequences.end())
        return false;
      const Block &body = it->second->regions.at(0).blocks.at(0);
      // Substitute block args with the include operands; internal defs get
      // fresh names to preserve single assignment.
      std::map<std::string, std::string> renames;
      for (size_t a = 0; a < body.args.size() && a < op.operands.size(); ++a)
        renames[body.args[a].name] = op.operands[a];
      std::vector<Operation> expansion;
      for (const auto &o : body.ops) {
        Operation copy = cloneWithFreshNames(o, script, renames);
        remapUses(copy, renames);
        expansion.push_back(std::move(copy));
      }
      ops.erase(ops.begin() + i);
      ops.insert(ops.begin() + i, std::make_move_iterator(expansion.begin()),
                 std::make_move_iterator(expansion.end()));
      return true;
    }
    for (auto &r : op.regions)
      for (auto &b : r.blocks)
        if (expandFirstInclude(script, b.ops, sequences))
          return true;
  }
  return false;
}

} // namespace

InlineResult inlineIncludes(const Module &script, const TransformRegistry &) {
  InlineResult result;
  Module m = script;
  if (detectCycle(m, result.diags))
    return result;
  // Sequence pointers are re-resolved after every expansion step: splicing
  // only rewrites nested op lists, never the top-level sequence list.
  bool changed = true;
  while (changed) {
    changed = false;
    auto seqs = sequencesOf(m);
    for (auto &b : m.root.regions.at(0).blocks) {
      for (auto &op : b.ops)
        for (auto &r : op.regions)
          for (auto &blk : r.blocks)
            if (expandFirstInclude(m, blk.ops, seqs)) {
              changed = true;
              break;
            }
      if (changed)
        break;
    }
  }
  result.module = std::move(m);
  return result;
}

//===----------------------------------------------------------------------===//
// Simplification
//===----------------------------------------------------------------------===//

namespace {

const char *paramAttrKeyFor(const std::string &opname) {
  if (opname == "loop.split")
    return "at";
  if (opname == "loop.tile")
    return "sizes";
  if (opname == "loop.unroll")
    return "factor";
  if (opname == "transform.assert")
    return "value";
  return nullptr;
}

// Number of fixed (non-param) operands for ops with an optional trailing
// parameter.
size_t fixedOperandsFor(const std::string &opname) {
  return opname == "transform.assert" ? 0 : 1;
}

struct Simplifier {
  Module &m;
  const TransformRegistry &treg;
  bool changed = false;

  // value name -> defining op copy (for param.constant and tile lookups)
  std::map<std::string, Operation> defs;

  void scanDefs() {
    defs.clear();
    walk(m.root, [&](const Operation &op) {
      for (const auto &res : op.results)
        defs[res.name] = op;
      return true;
    });
  }

  std::uint64_t useCount(const std::string &name) {
    std::uint64_t n = 0;
    walk(m.root, [&](const Operation &op) {
      for (const auto &o : op.operands)
        if (o == name)
          ++n;
      return true;
    });
    return n;
  }

  void foldConstantParams(std::vector<Operation> &ops) {
    for (auto &op : ops) {
      const char *key = paramAttrKeyFor(op.name);
      size_t fixed = fixedOperandsFor(op.name);
      if (key && !op.hasAttr(key) && op.operands.size() == fixed + 1) {
        auto it = defs.find(op.operands[fixed]);
        if (it != defs.end() && it->second.name == "param.constant") {
          op.attrs[key] = *it->second.attr("value");
          op.operands.pop_back();
          changed = true;
        }
      }
      for (auto &r : op.regions)
        for (auto &b : r.blocks)
          foldConstantParams(b.ops);
    }
  }

  void dropDeadParamConstants(std::vector<Operation> &ops) {
    for (size_t i = 0; i < ops.size();) {
      Operation &op = ops[i];
      if (op.name == "param.constant" && !op.results.empty() &&
          useCount(op.results[0].name) == 0) {
        ops.erase(ops.begin() + i);
        changed = true;
        continue;
      }
      for (auto &r : op.regions)
        for (auto &b : r.blocks)
          dropDeadParamConstants(b.ops);
      ++i;
    }
  }

  // Replaces ops[i] by a transform.forward marker preserving the consumed
  // operand and result names (bound to empty handles at interpretation).
  void toForward(std::vector<Operation> &ops, size_t i) {
    Operation fwd;
    fwd.id = m.newOpId();
    fwd.name = "transform.forward";
    fwd.loc = ops[i].loc;
    fwd.operands = {ops[i].operands[0]};
    fwd.results = ops[i].results;
    for (auto &res : fwd.results)
      res.type = Type::anyHandle();
    ops[i] = std::move(fwd);
    changed = true;
  }

  void simplifyNoops(std::vector<Operation> &ops) {
    for (size_t i = 0; i < ops.size(); ++i) {
      Operation &op = ops[i];
      if (op.name == "loop.unroll" && op.operands.size() == 1) {
        if (const AttrValue *f = op.attr("factor");
            f && f->kind == AttrValue::Kind::Int && f->asInt() == 1) {
          toForward(ops, i);
          continue;
        }
      }
      if (op.name == "loop.tile" && op.operands.size() == 1) {
        if (const AttrValue *s = op.attr("sizes");
            s && s->kind == AttrValue::Kind::IntList) {
          bool all_zero = true;
          for (auto v : s->asIntList())
            if (v != 0)
              all_zero = false;
          if (all_zero && !s->asIntList().empty()) {
            toForward(ops, i);
            continue;
          }
          // Redundant re-tile: the operand is the inner result of a previous
          // tile and every size is strictly larger than before, which the
          // tile transform treats as a noop (sizes clamp past the trip
          // count).
          auto it = defs.find(op.operands[0]);
          if (it != defs.end() && it->second.name == "loop.tile" &&
              it->second.results.size() == 2 &&
              it->second.results[1].name == op.operands[0]) {
            const AttrValue *prev = it->second.attr("sizes");
            if (prev && prev->kind == AttrValue::Kind::IntList) {
              const auto &s1 = prev->asIntList();
              const auto &s2 = s->asIntList();
              bool strictly_larger = s1.size() == s2.size() && !s1.empty();
              for (size_t k = 0; k < s1.size() && strictly_larger; ++k)
                if (!(s2[k] > s1[k] && s1[k] > 0))
                  strictly_larger = false;
              if (strictly_larger) {
                toForward(ops, i);
                continue;
              }
            }
          }
        }
      }
      for (auto &r : op.regions)
        for (auto &b : r.blocks)
          simplifyNoops(b.ops);
    }
  }
};

} // namespace

Module simplifyScript(const Module &script, const TransformRegistry &treg) {
  Module m = script;
  Simplifier s{m, treg, false, {}};
  bool any = true;
  while (any) {
    s.changed = false;
    s.scanDefs();
    for (auto &b : m.root.regions.at(0).blocks)
      for (auto &op : b.ops)
        for (auto &r : op.regions)
          for (auto &blk : r.blocks)
            s.foldConstantParams(blk.ops);
    s.scanDefs();
    for (auto &b : m.root.regions.at(0).blocks)
      for (auto &op : b.ops)
        for (auto &r : op.regions)
          for (auto &blk : r.blocks)
            s.simplifyNoops(blk.ops);
    for (auto &b : m.root.regions.at(0).blocks)
      for (auto &op : b.ops)
        for (auto &r : op.regions)
          for (auto &blk : r.blocks)
            s.dropDeadParamConstants(blk.ops);
    any = s.changed;
  }
  return m;
}

//===----------------------------------------------------------------------===//
// Use-after-invalidation analysis
//===----------------------------------------------------------------------===//

namespace {

struct HandleNode {
  std::set<std::string> ancestors; // handles this one is derived from / nested in
  std::string match_key;           // equal keys may point at the same payload
  bool freed = false;
  std::string freed_by;
  Location freed_loc;
};

struct InvalidationAnalysis {
  const Module &script;
  const TransformRegistry &treg;
  std::vector<Diagnostic> diags;
  std::map<std::string, const Operation *> sequences;

  std::map<std::string, HandleNode> nodes;
  std::map<std::string, std::string> alias; // region args -> operand value

  std::string resolve(const std::string &n) const {
    auto it = alias.find(n);
    return it == alias.end() ? n : resolve(it->second);
  }

  std::string describe(const Operation &op) {
    return "'" + op.name + "' at " + std::to_string(op.loc.line) + ":" +
           std::to_string(op.loc.col);
  }

  void free(const std::string &name, const Operation &op) {
    auto mark = [&](HandleNode &n) {
      if (!n.freed) {
        n.freed = true;
        n.freed_by = describe(op);
        n.freed_loc = op.loc;
      }
    };
    auto root_it = nodes.find(name);
    if (root_it == nodes.end())
      return;
    mark(root_it->second);
    // Derived or identically-matched handles go with it.
    for (auto &[other, node] : nodes) {
      if (other == name)
        continue;
      if (node.ancestors.count(name))
        mark(node);
      else if (!node.match_key.empty() &&
               node.match_key == root_it->second.match_key)
        mark(node);
    }
  }

  void checkUse(const std::string &operand, const Operation &op) {
    auto it = nodes.find(resolve(operand));
    if (it == nodes.end() || !it->second.freed)
      return;
    diags.push_back({Severity::Error,
                     "use of invalidated handle '%" + operand + "' in " +
                         describe(op) + "; invalidated by " + it->second.freed_by,
                     op.loc, script.filename});
  }

  std::string matchKeyFor(const Operation &op, const std::string &scope) {
    std::ostringstream os;
    os << scope << "|";
    for (const auto &[k, v] : op.attrs)
      os << k << "=" << v.str() << ";";
    return os.str();
  }

  void visit(const Operation &op) {
    const TransformOpInfo *info = treg.lookup(op.name);

    // Uses are checked first (before this op's own effects).
    for (const auto &o : op.operands)
      checkUse(o, op);

    if (op.name == "transform.include") {
      const AttrValue *c = op.attr("callee");
      auto it = c ? sequences.find(c->asStr()) : sequences.end();
      if (it != sequences.end()) {
        std::vector<bool> consumed =
            sequenceArgConsumption(script, *it->second, treg);
        for (size_t i = 0; i < op.operands.size() && i < consumed.size(); ++i)
          if (consumed[i])
            free(resolve(op.operands[i]), op);
      }
      return;
    }

    // Effects: consumed operands free their nodes.
    if (info) {
      for (size_t i = 0; i < op.operands.size(); ++i)
        if (i < info->operands.size() && info->operands[i].consumed)
          free(resolve(op.operands[i]), op);
    }

    // Results allocate.
    std::string operand0 =
        op.operands.empty() ? std::string() : resolve(op.operands[0]);
    for (const auto &res : op.results) {
      HandleNode node;
      if (!operand0.empty()) {
        auto pit = nodes.find(operand0);
        if (pit != nodes.end())
          node.ancestors = pit->second.ancestors;
        if (op.name == "structured.match" || op.name == "loop.hoist_invariants" ||
            op.name == "param.trip_count") {
          // Derived within the operand: nested aliasing.
          node.ancestors.insert(operand0);
          if (op.name == "structured.match")
            node.match_key = matchKeyFor(op, operand0);
        }
        // Consuming producers (split/tile/...) replace the operand: results
        // live where the operand lived, but are not nested inside it.
      }
      nodes[res.name] = std::move(node);
    }

    // Regions: alternatives and sequence bind their arg to the operand.
    for (const auto &r : op.regions)
      for (const auto &b : r.blocks) {
        if (!b.args.empty() && !op.operands.empty() &&
            (op.name == "transform.sequence" || op.name == "transform.alternatives")) {
          if (op.name == "transform.sequence") {
            alias[b.args[0].name] = op.operands[0];
          } else {
            // Re-established handle to the same payload: aliases the target's
            // ancestry but not its freed state.
            HandleNode node;
            auto pit = nodes.find(resolve(op.operands[0]));
            if (pit != nodes.end()) {
              node.ancestors = pit->second.ancestors;
              node.match_key = pit->second.match_key;
            }
            nodes[b.args[0].name] = std::move(node);
          }
        }
        for (const auto &o : b.ops)
          visit(o);
      }
  }

  void run() {
    sequences = sequencesOf(script);
    for (const auto &[name, seq] : sequences) {
      nodes.clear();
      alias.clear();
      const Block &entry = seq->regions.at(0).blocks.at(0);
      for (const auto &arg : entry.args)
        nodes[arg.name] = HandleNode{};
      for (const auto &op : entry.ops)
        visit(op);
    }
  }
};

} // namespace

std::vector<Diagnostic> analyzeInvalidation(const Module &script,
                                            const TransformRegistry &treg) {
  InvalidationAnalysis a{script, treg, {}, {}, {}, {}};
  a.run();
  return a.diags;
}

//===----------------------------------------------------------------------===//
// Pass option inference
//===----------------------------------------------------------------------===//

namespace {

enum class Level { Arith, Llvmlite, Ambiguous };

struct OptionInference {
  Module &m;
  DiagnosticList &diags;

  Level visit(std::vector<Operation> &ops, Level level) {
    for (auto &op : ops) {
      if (op.name == "transform.apply_registered_pass") {
        const AttrValue *pass = op.attr("pass");
        std::string pass_name = pass ? pass->asStr() : "";
        if (pass_name == "instrument-accumulate") {
          std::string options;
          if (const AttrValue *o = op.attr("options"))
            options = o->asStr();
          bool has_op = options.find("op=") != std::string::npos;
          if (!has_op) {
            if (level == Level::Ambiguous) {
              diags.error("cannot infer op= for instrument-accumulate: the "
                          "abstraction level here is ambiguous",
                          op.loc, m.filename);
            } else {
              std::string inferred =
                  level == Level::Arith ? "op=arith.addi" : "op=llvmlite.add";
              op.attrs["options"] = AttrValue::makeStr(
                  options.empty() ? inferred : options + "," + inferred);
            }
          }
        } else if (pass_name == "convert-arith-to-llvmlite") {
          level = Level::Llvmlite;
        }
      }
      if (op.name == "transform.alternatives") {
        std::optional<Level> joined;
        for (auto &r : op.regions)
          for (auto &b : r.blocks) {
            Level end = visit(b.ops, level);
            if (!joined)
              joined = end;
            else if (*joined != end)
              joined = Level::Ambiguous;
          }
        if (joined)
          level = *joined;
        continue;
      }
      for (auto &r : op.regions)
        for (auto &b : r.blocks)
          level = visit(b.ops, level);
    }
    return level;
  }
};

} // namespace

InferResult inferPassOptions(const Module &script, const TransformRegistry &) {
  InferResult result;
  Module m = script;
  OptionInference inf{m, result.diags};
  for (auto &b : m.root.regions.at(0).blocks)
    for (auto &op : b.ops)
      if (op.name == "transform.named_sequence")
        for (auto &r : op.regions)
          for (auto &blk : r.blocks)
            inf.visit(blk.ops, Level::Arith);
  if (result.diags.hasErrors())
    return result;
  result.module = std::move(m);
  return result;
}

} // namespace tfc
