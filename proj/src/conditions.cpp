//===- conditions.cpp - Pre/post-condition machinery ----------------------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "tfc/conditions.hpp"

#include <sstream>

namespace tfc {

DiagnosticList ConstraintTable::add(ConstrainedOpDef def) {
  DiagnosticList diags;
  if (!isConstrainedAtom(def.name)) {
    diags.error("constrained op name '" + def.name + "' must end in '.constr'");
    return diags;
  }
  if (constrainedBase(def.name) != def.base) {
    diags.error("constrained op '" + def.name + "' must refine its base '" +
                def.base + "'");
    return diags;
  }
  defs_[def.name] = std::move(def);
  return diags;
}

const ConstrainedOpDef *ConstraintTable::lookup(const std::string &name) const {
  auto it = defs_.find(name);
  return it == defs_.end() ? nullptr : &it->second;
}

bool verifyConstrained(const Operation &op, const ConstrainedOpDef &def,
                       const DialectRegistry &reg) {
  if (op.name != def.base)
    return false;
  const OpDefinition *d = reg.lookup(op.name);
  if (!d)
    return false;
  if (def.group_cards.empty())
    return true;
  // Group cardinalities come from the op's segment sizes; an op without
  // segments has a single implicit group.
  for (const auto &[group, card] : def.group_cards) {
    std::int64_t actual = -1;
    if (!d->operand_groups.empty() && op.segments) {
      for (size_t g = 0; g < d->operand_groups.size(); ++g)
        if (d->operand_groups[g] == group && g < op.segments->size())
          actual = (*op.segments)[g];
    } else if (group == "operands") {
      actual = static_cast<std::int64_t>(op.operands.size());
    }
    if (actual != card)
      return false;
  }
  return true;
}

void registerBuiltinConstraints(ConstraintTable &table) {
  // Trivial subviews: offsets, sizes and strides all static (the dynamic
  // operand groups have cardinality zero).
  table.add({"memref.subview.constr",
             "memref.subview",
             {{"offsets", 0}, {"sizes", 0}, {"strides", 0}}});
  // Metadata extraction takes just the source memref.
  table.add({"memref.extract_strided_metadata.constr",
             "memref.extract_strided_metadata",
             {{"operands", 1}}});
  table.add({"memref.extract_aligned_pointer_as_index.constr",
             "memref.extract_aligned_pointer_as_index",
             {{"operands", 1}}});
  // A reinterpret_cast may carry one dynamic offset, but sizes and strides
  // must be static.
  table.add({"memref.reinterpret_cast.constr",
             "memref.reinterpret_cast",
             {{"sizes", 0}, {"strides", 0}}});
}

//===----------------------------------------------------------------------===//
// Declaration file
//===----------------------------------------------------------------------===//

DiagnosticList loadConditionFile(const std::string &text,
                                 std::map<std::string, ConditionSignature> &sigs,
                                 ConstraintTable &table,
                                 const std::string &filename) {
  DiagnosticList diags;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // Strip comments and whitespace.
    if (auto pos = line.find("//"); pos != std::string::npos)
      line = line.substr(0, pos);
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head))
      continue;
    Location loc{lineno, 1};
    if (head == "sig") {
      std::string name, kw;
      if (!(ls >> name >> kw) || kw != "consumes") {
        diags.error("expected: sig <name> consumes {...} produces {...}", loc,
                    filename);
        continue;
      }
      std::string rest;
      std::getline(ls, rest);
      auto prod_pos = rest.find("produces");
      if (prod_pos == std::string::npos) {
        diags.error("missing 'produces' clause", loc, filename);
        continue;
      }
      ConditionSignature sig;
      sig.consumed = OpSetExpr::parse(rest.substr(0, prod_pos));
      sig.produced = OpSetExpr::parse(rest.substr(prod_pos + 8));
      sigs[name] = std::move(sig);
    } else if (head == "constr") {
      std::string name, on, base;
      if (!(ls >> name >> on >> base) || on != "on") {
        diags.error("expected: constr <name> on <base> [group <g> card <n>]...",
                    loc, filename);
        continue;
      }
      ConstrainedOpDef def;
      def.name = name;
      def.base = base;
      std::string kw;
      while (ls >> kw) {
        std::string group;
        std::int64_t card;
        if (kw != "group" || !(ls >> group) || !(ls >> kw) || kw != "card" ||
            !(ls >> card)) {
          diags.error("malformed group/card clause", loc, filename);
          break;
        }
        def.group_cards[group] = card;
      }
      DiagnosticList add_diags = table.add(std::move(def));
      for (auto &d : add_diags.items) {
        d.loc = loc;
        d.file = filename;
        diags.items.push_back(d);
      }
    } else {
      diags.error("unknown declaration '" + head + "'", loc, filename);
    }
  }
  return diags;
}

//===----------------------------------------------------------------------===//
// Static pipeline checking
//===----------------------------------------------------------------------===//

namespace {

// Abstract state: op-kind atoms possibly present, each with the transform
// that introduced it (empty = initial set).
struct AbstractState {
  std::map<std::string, std::string> atoms; // atom -> introducer
  bool top = false;                         // unknown contents

  void join(const AbstractState &other) {
    top = top || other.top;
    for (const auto &[a, who] : other.atoms)
      atoms.emplace(a, who);
  }
};

struct StaticChecker {
  const SignatureResolver &resolve;
  const DialectRegistry &reg;
  StaticReport &report;
  const Module &script;

  std::string describeOp(const Operation &op) {
    std::string s = op.name;
    if (const AttrValue *p = op.attr("pass"))
      s += " '" + p->asStr() + "'";
    return s;
  }

  void applySignature(const Operation &op, const ConditionSignature &sig,
                      AbstractState &state) {
    if (!sig.consumed.empty() && !state.top) {
      bool any = false;
      for (const auto &[atom, _] : state.atoms)
        for (const auto &c : sig.consumed.atoms)
          if (atomsIntersect(atom, c, reg))
            any = true;
      if (!any) {
        StaticFinding f;
        f.kind = StaticFinding::Kind::PhaseOrdering;
        f.atom = sig.consumed.str();
        f.transform = describeOp(op);
        f.loc = op.loc;
        f.message = "phase-ordering violation: " + f.transform + " consumes " +
                    f.atom + " but no such ops can be present at this point";
        report.findings.push_back(std::move(f));
      }
    }
    // S' = (S \ match(consumed)) ∪ produced.
    if (!state.top) {
      for (auto it = state.atoms.begin(); it != state.atoms.end();) {
        bool removed = false;
        for (const auto &c : sig.consumed.atoms)
          if (atomsIntersect(it->first, c, reg))
            removed = true;
        it = removed ? state.atoms.erase(it) : ++it;
      }
    }
    for (const auto &p : sig.produced.atoms)
      state.atoms[p] = describeOp(op);
  }

  void walkBody(const Block &block, AbstractState &state) {
    for (const auto &op : block.ops)
      visit(op, state);
  }

  void visit(const Operation &op, AbstractState &state) {
    if (op.name == "transform.include") {
      // Follow the include into its callee body.
      if (const AttrValue *c = op.attr("callee")) {
        const Operation *callee = nullptr;
        walk(script.root, [&](const Operation &o) {
          if (o.name == "transform.named_sequence")
            if (const AttrValue *sym = o.attr("sym_name");
                sym && sym->asStr() == c->asStr()) {
              callee = &o;
              return false;
            }
          return true;
        });
        if (callee)
          walkBody(callee->regions.at(0).blocks.at(0), state);
      }
      return;
    }
    if (op.name == "transform.alternatives") {
      // Any region may execute: join the post-states.
      AbstractState joined;
      bool first = true;
      for (const auto &r : op.regions) {
        AbstractState branch = state;
        for (const auto &b : r.blocks)
          walkBody(b, branch);
        if (first) {
          joined = branch;
          first = false;
        } else {
          joined.join(branch);
        }
      }
      if (!first)
        state = joined;
      return;
    }
    if (op.name == "transform.sequence" || op.name == "transform.named_sequence") {
      for (const auto &r : op.regions)
        for (const auto &b : r.blocks)
          walkBody(b, state);
      return;
    }

    std::optional<ConditionSignature> sig = resolve(op);
    if (!sig) {
      report.warnings.push_back(
          formatDiagnostic({Severity::Warning,
                            "transform '" + describeOp(op) +
                                "' has no declared conditions; assuming it may "
                                "produce anything",
                            op.loc,
                            script.filename}));
      StaticFinding f;
      f.kind = StaticFinding::Kind::OpaqueTransform;
      f.transform = describeOp(op);
      f.loc = op.loc;
      f.message = "opaque transform " + f.transform;
      report.findings.push_back(std::move(f));
      state.top = true;
      return;
    }
    applySignature(op, *sig, state);
  }
};

} // namespace

std::string StaticReport::str() const {
  std::ostringstream os;
  for (const auto &f : findings)
    os << f.message << "\n";
  for (const auto &w : warnings)
    os << w << "\n";
  return os.str();
}

StaticReport checkStatic(const Module &script, const Operation &entry_sequence,
                         const OpSetExpr &initial, const OpSetExpr &final_allowed,
                         const SignatureResolver &resolve,
                         const DialectRegistry &payload_reg) {
  StaticReport report;
  AbstractState state;
  for (const auto &a : initial.atoms)
    state.atoms[a] = "";

  StaticChecker checker{resolve, payload_reg, report, script};
  checker.walkBody(entry_sequence.regions.at(0).blocks.at(0), state);

  if (!state.top && !final_allowed.empty()) {
    for (const auto &[atom, who] : state.atoms) {
      bool allowed = false;
      for (const auto &f : final_allowed.atoms)
        if (atomsIntersect(atom, f, payload_reg))
          allowed = true;
      if (!allowed) {
        StaticFinding f;
        f.kind = StaticFinding::Kind::ResidualOp;
        f.atom = atom;
        f.transform = who;
        f.message = "residual op kind '" + atom + "'" +
                    (who.empty() ? std::string(" from the initial set")
                                 : " introduced by " + who) +
                    " is not covered by the final set " + final_allowed.str();
        report.findings.push_back(std::move(f));
      }
    }
  }
  return report;
}

//===----------------------------------------------------------------------===//
// Dynamic checking
//===----------------------------------------------------------------------===//

std::vector<Diagnostic> checkDynamic(const Module &m,
                                     const ConditionSignature &sig,
                                     CheckStage stage,
                                     const DialectRegistry &reg,
                                     const ConstraintTable &table) {
  std::vector<Diagnostic> diags;
  if (stage == CheckStage::Before) {
    if (sig.consumed.empty())
      return diags;
    bool any = false;
    walk(m.root, [&](const Operation &op) {
      if (opInSet(op.name, sig.consumed, reg)) {
        any = true;
        return false;
      }
      return true;
    });
    if (!any)
      diags.push_back({Severity::Warning,
                       "no payload op matches the pre-condition " +
                           sig.consumed.str() + "; the transform will be a no-op",
                       {},
                       m.filename});
    return diags;
  }

  // After: consumed survivors are errors unless they are sanctioned by a
  // produced atom (constrained atoms must pass their generated verifier), and
  // any op matching a produced constrained atom must verify.
  walk(m.root, [&](const Operation &op) {
    bool matches_consumed = opInSet(op.name, sig.consumed, reg);
    bool sanctioned = false;
    bool reported = false;
    for (const auto &p : sig.produced.atoms) {
      if (isConstrainedAtom(p)) {
        if (constrainedBase(p) == op.name) {
          const ConstrainedOpDef *def = table.lookup(p);
          if (def && verifyConstrained(op, *def, reg)) {
            sanctioned = true;
          } else if (def && !reported) {
            reported = true;
            diags.push_back({Severity::Error,
                             "op '" + op.name + "' violates post-condition '" + p +
                                 "'",
                             op.loc,
                             m.filename});
          }
        }
      } else if (matches_consumed) {
        OpSetExpr e;
        e.atoms = {p};
        if (opInSet(op.name, e, reg))
          sanctioned = true;
      }
    }
    if (matches_consumed && !sanctioned && !reported) {
      std::string msg = op.name == "builtin.unrealized_conversion_cast"
                            ? "failed to legalize operation "
                              "'builtin.unrealized_conversion_cast' that was "
                              "explicitly marked illegal"
                            : "op '" + op.name +
                                  "' should have been removed (pre-condition " +
                                  sig.consumed.str() + " still matches)";
      diags.push_back({Severity::Error, msg, op.loc, m.filename});
    }
    return true;
  });
  return diags;
}

} // namespace tfc
