//===- patterns.cpp - Named rewrite patterns and the greedy driver --------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "tfc/patterns.hpp"
#include "tfc/transforms.hpp"

#include <set>

namespace tfc {

DiagnosticList PatternRegistry::add(Pattern p) {
  DiagnosticList diags;
  if (patterns_.count(p.name)) {
    diags.error("pattern '" + p.name + "' is already registered");
    return diags;
  }
  patterns_.emplace(p.name, std::move(p));
  return diags;
}

const Pattern *PatternRegistry::lookup(const std::string &name) const {
  auto it = patterns_.find(name);
  return it == patterns_.end() ? nullptr : &it->second;
}

namespace {

bool isIntConstant(const Module &m, const std::string &name, std::int64_t want) {
  auto v = constantIntValue(m, name);
  return v.has_value() && *v == want;
}

bool isFloatConstant(const Module &m, const std::string &name, double want) {
  bool found = false;
  walk(m.root, [&](const Operation &op) {
    for (const auto &res : op.results)
      if (res.name == name) {
        if (op.name == "arith.constant" || op.name == "llvmlite.constant")
          if (const AttrValue *v = op.attr("value");
              v && v->kind == AttrValue::Kind::Float && v->asFloat() == want)
            found = true;
        return false;
      }
    return true;
  });
  return found;
}

std::optional<AttrValue> constantAttr(const Module &m, const std::string &name) {
  std::optional<AttrValue> found;
  walk(m.root, [&](const Operation &op) {
    for (const auto &res : op.results)
      if (res.name == name) {
        if (op.name == "arith.constant" || op.name == "llvmlite.constant")
          if (const AttrValue *v = op.attr("value"))
            found = *v;
        return false;
      }
    return true;
  });
  return found;
}

// x + 0 and 0 + x (integer or float) fold to x.
bool patAddOfZero(PatternCtx &ctx, OpId id) {
  const Operation *op = findOp(ctx.module, id);
  if (op->name != "arith.addi" && op->name != "arith.addf")
    return false;
  bool zero0 = op->name == "arith.addi"
                   ? isIntConstant(ctx.module, op->operands[0], 0)
                   : isFloatConstant(ctx.module, op->operands[0], 0.0);
  bool zero1 = op->name == "arith.addi"
                   ? isIntConstant(ctx.module, op->operands[1], 0)
                   : isFloatConstant(ctx.module, op->operands[1], 0.0);
  if (zero1)
    return ctx.rewriter.replaceWithValue(id, op->operands[0]);
  if (zero0)
    return ctx.rewriter.replaceWithValue(id, op->operands[1]);
  return false;
}

// x - 0 folds to x.
bool patSubOfZero(PatternCtx &ctx, OpId id) {
  const Operation *op = findOp(ctx.module, id);
  if (op->name != "arith.subi")
    return false;
  if (isIntConstant(ctx.module, op->operands[1], 0))
    return ctx.rewriter.replaceWithValue(id, op->operands[0]);
  return false;
}

bool patMulOfOne(PatternCtx &ctx, OpId id) {
  const Operation *op = findOp(ctx.module, id);
  if (op->name != "arith.muli" && op->name != "arith.mulf")
    return false;
  bool one0 = op->name == "arith.muli"
                  ? isIntConstant(ctx.module, op->operands[0], 1)
                  : isFloatConstant(ctx.module, op->operands[0], 1.0);
  bool one1 = op->name == "arith.muli"
                  ? isIntConstant(ctx.module, op->operands[1], 1)
                  : isFloatConstant(ctx.module, op->operands[1], 1.0);
  if (one1)
    return ctx.rewriter.replaceWithValue(id, op->operands[0]);
  if (one0)
    return ctx.rewriter.replaceWithValue(id, op->operands[1]);
  return false;
}

// Arithmetic over two constants folds to a constant (comparisons are handled
// by cmpi_const_fold).
bool patFoldConstantArith(PatternCtx &ctx, OpId id) {
  const Operation *op = findOp(ctx.module, id);
  const std::string &n = op->name;
  bool int_op = n == "arith.addi" || n == "arith.muli" || n == "arith.subi";
  bool float_op = n == "arith.addf" || n == "arith.mulf";
  bool cast_op = n == "arith.index_cast";
  if (!int_op && !float_op && !cast_op)
    return false;
  auto a = constantAttr(ctx.module, op->operands[0]);
  if (!a)
    return false;
  AttrValue folded;
  if (cast_op) {
    if (a->kind != AttrValue::Kind::Int)
      return false;
    folded = *a;
  } else {
    auto b = constantAttr(ctx.module, op->operands[1]);
    if (!b)
      return false;
    if (int_op) {
      if (a->kind != AttrValue::Kind::Int || b->kind != AttrValue::Kind::Int)
        return false;
      std::int64_t x = a->asInt(), y = b->asInt();
      folded = AttrValue::makeInt(n == "arith.addi" ? x + y
                                  : n == "arith.muli" ? x * y
                                                      : x - y);
    } else {
      if (a->kind != AttrValue::Kind::Float || b->kind != AttrValue::Kind::Float)
        return false;
      double x = a->asFloat(), y = b->asFloat();
      folded = AttrValue::makeFloat(n == "arith.addf" ? x + y : x * y);
    }
  }
  Operation cst = makeOp(ctx.module, "arith.constant", {},
                         {{ctx.module.freshValueName(), op->results[0].type}},
                         {{"value", folded}});
  std::map<std::string, std::string> fwd{{op->results[0].name, cst.results[0].name}};
  OpId cst_id = cst.id;
  ctx.rewriter.replaceWithEvent(id, {std::move(cst)}, {cst_id}, fwd);
  return true;
}

bool patCmpiConstFold(PatternCtx &ctx, OpId id) {
  const Operation *op = findOp(ctx.module, id);
  if (op->name != "arith.cmpi")
    return false;
  auto a = constantAttr(ctx.module, op->operands[0]);
  auto b = constantAttr(ctx.module, op->operands[1]);
  if (!a || !b || a->kind != AttrValue::Kind::Int || b->kind != AttrValue::Kind::Int)
    return false;
  std::int64_t x = a->asInt(), y = b->asInt();
  const std::string &p = op->attr("predicate")->asStr();
  bool r = p == "eq"    ? x == y
           : p == "ne"  ? x != y
           : p == "slt" ? x < y
           : p == "sle" ? x <= y
           : p == "sgt" ? x > y
                        : x >= y;
  Operation cst = makeOp(ctx.module, "arith.constant", {},
                         {{ctx.module.freshValueName(), Type::i1()}},
                         {{"value", AttrValue::makeInt(r ? 1 : 0)}});
  std::map<std::string, std::string> fwd{{op->results[0].name, cst.results[0].name}};
  OpId cst_id = cst.id;
  ctx.rewriter.replaceWithEvent(id, {std::move(cst)}, {cst_id}, fwd);
  return true;
}

// cast(cast(x: A->B): B->A) folds to x; same-type casts fold immediately.
bool patCastOfCastCancel(PatternCtx &ctx, OpId id) {
  const Operation *op = findOp(ctx.module, id);
  if (op->name != "builtin.unrealized_conversion_cast")
    return false;
  Type in = typeOfValue(ctx.module, op->operands[0]);
  if (in == op->results[0].type)
    return ctx.rewriter.replaceWithValue(id, op->operands[0]);
  const Operation *def = nullptr;
  walk(ctx.module.root, [&](const Operation &o) {
    for (const auto &res : o.results)
      if (res.name == op->operands[0]) {
        def = &o;
        return false;
      }
    return true;
  });
  if (!def || def->name != "builtin.unrealized_conversion_cast")
    return false;
  Type original = typeOfValue(ctx.module, def->operands[0]);
  if (original == op->results[0].type)
    return ctx.rewriter.replaceWithValue(id, def->operands[0]);
  return false;
}

// A subview that covers its (static, identity-layout) source exactly folds to
// the source.
bool patSubviewIdentityFold(PatternCtx &ctx, OpId id) {
  const Operation *op = findOp(ctx.module, id);
  if (op->name != "memref.subview" || !op->segments)
    return false;
  for (size_t g = 1; g < op->segments->size(); ++g)
    if ((*op->segments)[g] != 0)
      return false;
  Type src = typeOfValue(ctx.module, op->operands[0]);
  if (src.kind != TypeKind::MemRef || src.explicit_layout)
    return false;
  const AttrValue *off = op->attr("static_offsets");
  const AttrValue *sz = op->attr("static_sizes");
  const AttrValue *st = op->attr("static_strides");
  if (!off || !sz || !st)
    return false;
  for (auto v : off->asIntList())
    if (v != 0)
      return false;
  for (auto v : st->asIntList())
    if (v != 1)
      return false;
  if (sz->asIntList() != src.shape)
    return false;
  return ctx.rewriter.replaceWithValue(id, op->operands[0]);
}

// Deliberately counter-productive: sinks a loop-invariant pure op into the
// loop that immediately follows it when all its uses live inside that loop.
// Results stay identical; the op is just re-executed every iteration, which
// regresses the weighted cost.
bool patRegressHoistBlocker(PatternCtx &ctx, OpId id) {
  const Operation *op = findOp(ctx.module, id);
  const OpDefinition *d = ctx.reg.lookup(op->name);
  if (!d || !d->hasTrait(Trait::Pure) || !op->regions.empty() ||
      op->results.empty())
    return false;
  const Operation *parent = findParent(ctx.module, id);
  if (!parent)
    return false;
  for (const auto &r : parent->regions)
    for (const auto &b : r.blocks)
      for (size_t i = 0; i + 1 < b.ops.size(); ++i) {
        if (b.ops[i].id != id)
          continue;
        const Operation &next = b.ops[i + 1];
        if (next.name != "scf.for" ||
            next.regions[0].blocks[0].ops.size() < 2)
          return false;
        // Loop bounds must not depend on the op, and all uses must be inside.
        std::set<std::string> defined;
        for (const auto &res : op->results)
          defined.insert(res.name);
        for (const auto &o : next.operands)
          if (defined.count(o))
            return false;
        bool external_use = false;
        std::set<OpId> inside;
        for (OpId sid : subtreeIds(next))
          inside.insert(sid);
        walk(ctx.module.root, [&](const Operation &user) {
          if (user.id == id)
            return true;
          for (const auto &use : user.operands)
            if (defined.count(use) && !inside.count(user.id))
              external_use = true;
          return !external_use;
        });
        if (external_use)
          return false;
        OpId first_body_op = next.regions[0].blocks[0].ops.front().id;
        return ctx.rewriter.moveBefore(id, first_body_op);
      }
  return false;
}

} // namespace

void registerStandardPatterns(PatternRegistry &reg) {
  auto sig = [](const char *consumed, const char *produced) {
    ConditionSignature s;
    s.consumed = OpSetExpr::parse(consumed);
    s.produced = OpSetExpr::parse(produced);
    return s;
  };
  reg.add({"add_of_zero", sig("", ""), patAddOfZero});
  reg.add({"sub_of_zero", sig("", ""), patSubOfZero});
  reg.add({"mul_of_one", sig("", ""), patMulOfOne});
  reg.add({"fold_constant_arith", sig("", "arith.constant"), patFoldConstantArith});
  reg.add({"cmpi_const_fold", sig("", "arith.constant"), patCmpiConstFold});
  reg.add({"cast_of_cast_cancel", sig("", ""), patCastOfCastCancel});
  reg.add({"subview_identity_fold", sig("", ""), patSubviewIdentityFold});
  reg.add({"regress_hoist_blocker", sig("", ""), patRegressHoistBlocker});
}

std::vector<std::string> canonicalizePatternNames() {
  return {"add_of_zero",       "sub_of_zero",         "mul_of_one",
          "fold_constant_arith", "cmpi_const_fold",   "cast_of_cast_cancel",
          "subview_identity_fold"};
}

GreedyResult applyPatternsGreedy(Module &m, Rewriter &rewriter, OpId root,
                                 const std::vector<std::string> &names,
                                 const PatternRegistry &reg,
                                 const DialectRegistry &dialects,
                                 std::uint64_t rewrite_cap) {
  GreedyResult result;
  std::vector<const Pattern *> patterns;
  for (const auto &n : names) {
    const Pattern *p = reg.lookup(n);
    if (!p) {
      result.ok = false;
      result.error = "unknown pattern '" + n + "'";
      return result;
    }
    patterns.push_back(p);
  }
  PatternCtx ctx{m, rewriter, dialects};
  bool changed = true;
  while (changed) {
    changed = false;
    const Operation *scope = findOp(m, root);
    if (!scope)
      break;
    std::vector<OpId> ids = subtreeIds(*scope);
    for (OpId id : ids) {
      if (!findOp(m, id))
        continue; // removed by an earlier rewrite in this sweep
      for (const Pattern *p : patterns) {
        if (p->apply(ctx, id)) {
          changed = true;
          if (++result.rewrites > rewrite_cap) {
            result.ok = false;
            result.error = "pattern rewrite cap of " +
                           std::to_string(rewrite_cap) + " exceeded";
            return result;
          }
          break; // op may be gone; move to the next one
        }
      }
    }
    // Dead-code sweep: the normal form carries no unused pure ops.
    if (!names.empty()) {
      const Operation *live_scope = findOp(m, root);
      if (!live_scope)
        break;
      for (OpId id : subtreeIds(*live_scope)) {
        const Operation *op = findOp(m, id);
        if (!op || op->results.empty() || !op->regions.empty())
          continue;
        const OpDefinition *d = dialects.lookup(op->name);
        if (!d || !d->hasTrait(Trait::Pure))
          continue;
        bool used = false;
        for (const auto &res : op->results) {
          walk(m.root, [&](const Operation &user) {
            for (const auto &o : user.operands)
              if (o == res.name)
                used = true;
            return !used;
          });
        }
        if (!used) {
          rewriter.erase(id);
          changed = true;
        }
      }
    }
  }
  return result;
}

} // namespace tfc
