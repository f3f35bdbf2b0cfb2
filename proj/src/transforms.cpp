//===- transforms.cpp - Standard transform op semantics -------------------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "tfc/transforms.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace tfc {

//===----------------------------------------------------------------------===//
// Kernel registry
//===----------------------------------------------------------------------===//

const KernelDef *KernelRegistry::findExact(std::int64_t m, std::int64_t n,
                                           std::int64_t k, TypeKind elem) const {
  for (const auto &def : kernels_)
    if (def.m == m && def.n == n && def.k == k && def.elem == elem)
      return &def;
  return nullptr;
}

DiagnosticList KernelRegistry::loadFile(const std::string &text,
                                        const std::string &filename) {
  DiagnosticList diags;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto pos = line.find("//"); pos != std::string::npos)
      line = line.substr(0, pos);
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head))
      continue;
    if (head != "kernel") {
      diags.error("expected: kernel <name> M N K [alpha] [f64|i64]",
                  {lineno, 1}, filename);
      continue;
    }
    KernelDef def;
    if (!(ls >> def.name >> def.m >> def.n >> def.k)) {
      diags.error("malformed kernel line", {lineno, 1}, filename);
      continue;
    }
    std::string extra;
    while (ls >> extra) {
      if (extra == "f64")
        def.elem = TypeKind::F64;
      else if (extra == "i64")
        def.elem = TypeKind::I64;
      else
        def.alpha = std::strtod(extra.c_str(), nullptr);
    }
    add(std::move(def));
  }
  return diags;
}

//===----------------------------------------------------------------------===//
// Shared utilities
//===----------------------------------------------------------------------===//

std::optional<std::int64_t> constantIntValue(const Module &m,
                                             const std::string &value_name) {
  std::optional<std::int64_t> found;
  walk(m.root, [&](const Operation &op) {
    for (const auto &res : op.results)
      if (res.name == value_name) {
        if (op.name == "arith.constant" || op.name == "llvmlite.constant")
          if (const AttrValue *v = op.attr("value");
              v && v->kind == AttrValue::Kind::Int)
            found = v->asInt();
        return false;
      }
    return true;
  });
  return found;
}

Type typeOfValue(const Module &m, const std::string &value_name) {
  Type found = Type::none();
  walk(m.root, [&](const Operation &op) {
    for (const auto &res : op.results)
      if (res.name == value_name) {
        found = res.type;
        return false;
      }
    for (const auto &r : op.regions)
      for (const auto &b : r.blocks)
        for (const auto &arg : b.args)
          if (arg.name == value_name) {
            found = arg.type;
            return false;
          }
    return true;
  });
  return found;
}

std::optional<LoopBounds> staticLoopBounds(const Module &m, const Operation &loop) {
  if (loop.name != "scf.for" || loop.operands.size() != 3)
    return std::nullopt;
  auto lb = constantIntValue(m, loop.operands[0]);
  auto ub = constantIntValue(m, loop.operands[1]);
  auto step = constantIntValue(m, loop.operands[2]);
  if (!lb || !ub || !step || *step <= 0)
    return std::nullopt;
  return LoopBounds{*lb, *ub, *step};
}

std::optional<std::int64_t> staticStep(const Module &m, const Operation &loop) {
  if (loop.name != "scf.for" || loop.operands.size() != 3)
    return std::nullopt;
  auto step = constantIntValue(m, loop.operands[2]);
  if (!step || *step <= 0)
    return std::nullopt;
  return step;
}

std::optional<std::int64_t> staticTripCount(const Module &m, const Operation &loop) {
  auto step = staticStep(m, loop);
  if (!step)
    return std::nullopt;
  if (auto bounds = staticLoopBounds(m, loop)) {
    if (!bounds->normalized())
      return std::nullopt;
    return bounds->trip();
  }
  // Tile-shaped loops: ub = lb + span with a constant span.
  const Operation *ub_def = nullptr;
  walk(m.root, [&](const Operation &op) {
    for (const auto &res : op.results)
      if (res.name == loop.operands[1]) {
        ub_def = &op;
        return false;
      }
    return true;
  });
  if (!ub_def || ub_def->name != "arith.addi")
    return std::nullopt;
  std::optional<std::int64_t> span;
  if (ub_def->operands[0] == loop.operands[0])
    span = constantIntValue(m, ub_def->operands[1]);
  else if (ub_def->operands[1] == loop.operands[0])
    span = constantIntValue(m, ub_def->operands[0]);
  if (!span || *span < 0 || *span % *step != 0)
    return std::nullopt;
  return *span / *step;
}

std::vector<OpId> perfectNestLoops(const Module &m, OpId root) {
  std::vector<OpId> loops;
  const Operation *cur = findOp(m, root);
  while (cur && cur->name == "scf.for") {
    loops.push_back(cur->id);
    const Block &body = cur->regions.at(0).blocks.at(0);
    if (body.ops.size() == 2 && body.ops[0].name == "scf.for" &&
        body.ops[1].name == "scf.yield")
      cur = &body.ops[0];
    else
      break;
  }
  return loops;
}

Operation makeOp(Module &m, const std::string &name,
                 std::vector<std::string> operands,
                 std::vector<std::pair<std::string, Type>> results, AttrMap attrs) {
  Operation op;
  op.id = m.newOpId();
  op.name = name;
  op.operands = std::move(operands);
  for (auto &[rname, rtype] : results)
    op.results.push_back({rname, rtype});
  op.attrs = std::move(attrs);
  return op;
}

Operation makeIndexConstant(Module &m, std::int64_t value, std::string *name_out) {
  std::string name = m.freshValueName();
  if (name_out)
    *name_out = name;
  return makeOp(m, "arith.constant", {}, {{name, Type::index()}},
                {{"value", AttrValue::makeInt(value)}});
}

namespace {

//===----------------------------------------------------------------------===//
// loop.hoist_invariants
//===----------------------------------------------------------------------===//

TransformStatus applyHoist(InterpCtx &ctx, const Operation &) {
  std::vector<OpId> moved_total;
  for (OpId loop_id : ctx.operand_ops.at(0)) {
    Operation *loop = ctx.rewriter.find(loop_id);
    if (!loop || loop->name != "scf.for")
      return TransformStatus::silenceable("hoist target is not an scf.for");

    std::set<std::string> defined_inside;
    for (const auto &[name, _] : collectDefs(*loop))
      defined_inside.insert(name);
    std::set<std::string> hoisted_names;

    // Fixpoint: an op moves when it is pure, region-free, and every operand
    // is defined outside the loop (counting previously hoisted ops).
    while (true) {
      std::vector<OpId> round;
      walk(*loop, [&](const Operation &op) {
        if (op.id == loop->id)
          return true;
        const OpDefinition *d = ctx.payload_reg.lookup(op.name);
        if (!d || !d->hasTrait(Trait::Pure) || !op.regions.empty())
          return true;
        for (const auto &use : op.operands)
          if (defined_inside.count(use) && !hoisted_names.count(use))
            return true;
        round.push_back(op.id);
        return true;
      });
      if (round.empty())
        break;
      for (OpId id : round) {
        Operation *op = ctx.rewriter.find(id);
        for (const auto &res : op->results)
          hoisted_names.insert(res.name);
        ctx.rewriter.moveBefore(id, loop_id);
        moved_total.push_back(id);
        loop = ctx.rewriter.find(loop_id);
      }
    }
  }
  ctx.setResultHandle(0, moved_total);
  return TransformStatus::ok();
}

//===----------------------------------------------------------------------===//
// loop.split
//===----------------------------------------------------------------------===//

TransformStatus applySplit(InterpCtx &ctx, const Operation &top) {
  auto at_param = ctx.paramOrAttr(top, 1, "at");
  auto at = at_param ? at_param->asSingleInt() : std::nullopt;
  if (!at)
    return TransformStatus::definite("loop.split requires an integer 'at'");

  std::vector<OpId> firsts, seconds;
  for (OpId loop_id : ctx.operand_ops.at(0)) {
    const Operation *loop = ctx.rewriter.find(loop_id);
    if (!loop || loop->name != "scf.for")
      return TransformStatus::silenceable("split target is not an scf.for");
    auto bounds = staticLoopBounds(ctx.payload, *loop);
    if (!bounds)
      return TransformStatus::silenceable(
          "split requires static loop bounds with a positive step");
    if (*at < bounds->lb || *at > bounds->ub)
      return TransformStatus::silenceable(
          "split point " + std::to_string(*at) + " is outside [" +
          std::to_string(bounds->lb) + ", " + std::to_string(bounds->ub) + "]");
    if ((*at - bounds->lb) % bounds->step != 0)
      return TransformStatus::silenceable("split point is not aligned to the step");

    std::string at_name;
    Operation at_cst = makeIndexConstant(ctx.payload, *at, &at_name);
    std::map<std::string, std::string> r1, r2;
    Operation first = cloneWithFreshNames(*loop, ctx.payload, r1);
    Operation second = cloneWithFreshNames(*loop, ctx.payload, r2);
    first.operands = {loop->operands[0], at_name, loop->operands[2]};
    second.operands = {at_name, loop->operands[1], loop->operands[2]};
    OpId first_id = first.id, second_id = second.id;
    ctx.rewriter.replace(loop_id,
                         {std::move(at_cst), std::move(first), std::move(second)});
    firsts.push_back(first_id);
    seconds.push_back(second_id);
  }
  ctx.setResultHandle(0, firsts);
  ctx.setResultHandle(1, seconds);
  return TransformStatus::ok();
}

//===----------------------------------------------------------------------===//
// loop.tile
//===----------------------------------------------------------------------===//

TransformStatus applyTile(InterpCtx &ctx, const Operation &top) {
  auto sizes_param = ctx.paramOrAttr(top, 1, "sizes");
  if (!sizes_param || sizes_param->kind != ParamValue::Kind::IntList)
    return TransformStatus::definite("loop.tile requires integer 'sizes'");
  const std::vector<std::int64_t> &sizes = sizes_param->ints;

  std::vector<OpId> outer_all, inner_all;
  std::set<OpId> handled;
  for (OpId root_id : ctx.operand_ops.at(0)) {
    // Loops nested in a band this invocation already processed (e.g. the
    // remaining entries of a multi-loop inner-band handle) count as handled.
    if (handled.count(root_id))
      continue;
    std::vector<OpId> nest = perfectNestLoops(ctx.payload, root_id);
    if (const Operation *root = findOp(ctx.payload, root_id))
      for (OpId sid : subtreeIds(*root))
        handled.insert(sid);
    if (nest.size() < sizes.size())
      return TransformStatus::silenceable(
          "tile requires a perfect loop nest of depth " +
          std::to_string(sizes.size()));
    nest.resize(sizes.size());

    struct Dim {
      std::int64_t trip = 0;
      std::int64_t step = 1;
      std::int64_t size = 0; // 0 = untouched
      std::string iv;
      std::string block_label;
      std::vector<std::string> loop_operands;
      AttrMap attrs;
    };
    std::vector<Dim> dims;
    for (size_t k = 0; k < sizes.size(); ++k) {
      const Operation *loop = findOp(ctx.payload, nest[k]);
      auto trip = staticTripCount(ctx.payload, *loop);
      auto step = staticStep(ctx.payload, *loop);
      if (!trip || !step)
        return TransformStatus::silenceable(
            "tile requires statically known trip counts");
      std::int64_t s = sizes[k];
      // A size of zero skips the loop, as does a size strictly larger than
      // the trip count. A size equal to the trip count still tiles (one
      // outer iteration).
      if (s < 0)
        return TransformStatus::definite("negative tile size");
      if (s > *trip)
        s = 0;
      if (s > 0 && *trip % s != 0)
        return TransformStatus::silenceable(
            "trip count " + std::to_string(*trip) +
            " is not divisible by tile size " + std::to_string(s) +
            "; split the loop first");
      Dim d;
      d.trip = *trip;
      d.step = *step;
      d.size = s;
      d.iv = loop->regions.at(0).blocks.at(0).args.at(0).name;
      d.block_label = loop->regions.at(0).blocks.at(0).label;
      d.loop_operands = loop->operands;
      d.attrs = loop->attrs;
      dims.push_back(std::move(d));
    }
    bool any = std::any_of(dims.begin(), dims.end(),
                           [](const Dim &d) { return d.size > 0; });
    if (!any)
      continue; // noop; handles stay empty

    // Innermost payload: everything below the deepest tiled band level.
    const Operation *deepest = findOp(ctx.payload, nest.back());
    std::vector<Operation> innermost_body = deepest->regions.at(0).blocks.at(0).ops;

    // Fresh outer ivs and tile-step constants.
    std::vector<Operation> prologue;
    struct OuterInfo {
      std::string iv;
      std::string step_name;
    };
    std::map<size_t, OuterInfo> outer_info;
    for (size_t k = 0; k < dims.size(); ++k) {
      if (dims[k].size == 0)
        continue;
      std::string step_name;
      prologue.push_back(makeIndexConstant(
          ctx.payload, dims[k].size * dims[k].step, &step_name));
      outer_info[k] = {ctx.payload.freshValueName(), step_name};
    }

    std::vector<OpId> outer_ids, inner_ids;
    // Build from the inside out: inner band first.
    std::vector<Operation> current = std::move(innermost_body);
    for (size_t rk = dims.size(); rk-- > 0;) {
      if (dims[rk].size == 0)
        continue;
      const Dim &d = dims[rk];
      // Inner loop: iv keeps its original name so the body is untouched.
      std::string bound_name = ctx.payload.freshValueName();
      Operation bound =
          makeOp(ctx.payload, "arith.addi", {outer_info[rk].iv, outer_info[rk].step_name},
                 {{bound_name, Type::index()}});
      Operation inner = makeOp(ctx.payload, "scf.for",
                               {outer_info[rk].iv, bound_name, d.loop_operands[2]},
                               {}, d.attrs);
      if (const AttrValue *label = inner.attr("label"))
        inner.attrs["label"] = AttrValue::makeStr(label->asStr() + ".in");
      inner.regions.emplace_back();
      Block body;
      body.label = d.block_label.empty() ? ctx.payload.freshBlockLabel()
                                         : d.block_label;
      body.args.push_back({d.iv, Type::index()});
      body.ops = std::move(current);
      body.ops.push_back(makeOp(ctx.payload, "scf.yield", {}, {}));
      inner.regions[0].blocks.push_back(std::move(body));
      inner_ids.insert(inner_ids.begin(), inner.id);
      current.clear();
      current.push_back(std::move(bound));
      current.push_back(std::move(inner));
    }
    // Outer band, innermost-first.
    for (size_t rk = dims.size(); rk-- > 0;) {
      const Dim &d = dims[rk];
      Operation loop;
      if (d.size == 0) {
        loop = makeOp(ctx.payload, "scf.for", d.loop_operands, {}, d.attrs);
        loop.regions.emplace_back();
        Block body;
        body.label = d.block_label.empty() ? ctx.payload.freshBlockLabel()
                                           : d.block_label;
        body.args.push_back({d.iv, Type::index()});
        body.ops = std::move(current);
        body.ops.push_back(makeOp(ctx.payload, "scf.yield", {}, {}));
        loop.regions[0].blocks.push_back(std::move(body));
      } else {
        loop = makeOp(ctx.payload, "scf.for",
                      {d.loop_operands[0], d.loop_operands[1], outer_info[rk].step_name},
                      {}, d.attrs);
        loop.regions.emplace_back();
        Block body;
        body.label = ctx.payload.freshBlockLabel();
        body.args.push_back({outer_info[rk].iv, Type::index()});
        body.ops = std::move(current);
        body.ops.push_back(makeOp(ctx.payload, "scf.yield", {}, {}));
        loop.regions[0].blocks.push_back(std::move(body));
        outer_ids.insert(outer_ids.begin(), loop.id);
      }
      current.clear();
      current.push_back(std::move(loop));
    }

    std::vector<Operation> replacement = std::move(prologue);
    for (auto &op : current)
      replacement.push_back(std::move(op));
    ctx.rewriter.replace(root_id, std::move(replacement));
    for (OpId id : outer_ids)
      outer_all.push_back(id);
    for (OpId id : inner_ids)
      inner_all.push_back(id);
  }
  ctx.setResultHandle(0, outer_all);
  ctx.setResultHandle(1, inner_all);
  return TransformStatus::ok();
}

//===----------------------------------------------------------------------===//
// loop.unroll
//===----------------------------------------------------------------------===//

TransformStatus applyUnroll(InterpCtx &ctx, const Operation &top) {
  auto factor_param = ctx.paramOrAttr(top, 1, "factor");
  auto factor = factor_param ? factor_param->asSingleInt() : std::nullopt;
  if (!factor || *factor < 0)
    return TransformStatus::definite("loop.unroll requires a factor >= 0");

  for (OpId loop_id : ctx.operand_ops.at(0)) {
    const Operation *loop = ctx.rewriter.find(loop_id);
    if (!loop || loop->name != "scf.for")
      return TransformStatus::silenceable("unroll target is not an scf.for");
    auto trip_opt = staticTripCount(ctx.payload, *loop);
    auto step_opt = staticStep(ctx.payload, *loop);
    if (!trip_opt || !step_opt)
      return TransformStatus::silenceable("unroll requires a static trip count");
    std::int64_t trip = *trip_opt;
    std::int64_t step = *step_opt;
    auto lb_const = constantIntValue(ctx.payload, loop->operands[0]);
    std::int64_t f = *factor;
    if (f == 1)
      continue; // noop; the handle is still consumed for uniform effects
    if (f != 0 && f != trip && (f > trip || trip % f != 0))
      return TransformStatus::silenceable("factor " + std::to_string(f) +
                                          " does not divide trip count " +
                                          std::to_string(trip));

    const Block &body = loop->regions.at(0).blocks.at(0);
    const std::string &iv = body.args.at(0).name;

    if (f == 0 || f == trip) {
      // Full unroll: replicate the body with substituted induction values
      // (constants for static lower bounds, lb + t*step otherwise).
      std::vector<Operation> replacement;
      for (std::int64_t t = 0; t < trip; ++t) {
        std::string civ;
        if (lb_const) {
          replacement.push_back(
              makeIndexConstant(ctx.payload, *lb_const + t * step, &civ));
        } else {
          std::string offset;
          replacement.push_back(
              makeIndexConstant(ctx.payload, t * step, &offset));
          Operation add = makeOp(ctx.payload, "arith.addi",
                                 {loop->operands[0], offset},
                                 {{ctx.payload.freshValueName(), Type::index()}});
          civ = add.results[0].name;
          replacement.push_back(std::move(add));
        }
        std::map<std::string, std::string> renames{{iv, civ}};
        for (const auto &op : body.ops) {
          if (op.name == "scf.yield")
            continue;
          Operation copy = cloneWithFreshNames(op, ctx.payload, renames);
          remapUses(copy, renames);
          replacement.push_back(std::move(copy));
        }
      }
      ctx.rewriter.replace(loop_id, std::move(replacement));
    } else {
      // Partial unroll: step scaled by f, body replicated with iv offsets.
      std::vector<Operation> replacement;
      std::string step_name;
      replacement.push_back(
          makeIndexConstant(ctx.payload, step * f, &step_name));
      std::vector<std::string> offset_names(f);
      for (std::int64_t t = 1; t < f; ++t)
        replacement.push_back(makeIndexConstant(ctx.payload, t * step,
                                                &offset_names[t]));
      Operation new_loop =
          makeOp(ctx.payload, "scf.for",
                 {loop->operands[0], loop->operands[1], step_name}, {}, loop->attrs);
      new_loop.regions.emplace_back();
      Block new_body;
      new_body.label = body.label;
      new_body.args.push_back({iv, Type::index()});
      for (std::int64_t t = 0; t < f; ++t) {
        std::map<std::string, std::string> renames;
        if (t > 0) {
          std::string ivt = ctx.payload.freshValueName();
          new_body.ops.push_back(makeOp(ctx.payload, "arith.addi",
                                        {iv, offset_names[t]},
                                        {{ivt, Type::index()}}));
          renames[iv] = ivt;
        }
        for (const auto &op : body.ops) {
          if (op.name == "scf.yield")
            continue;
          Operation copy = cloneWithFreshNames(op, ctx.payload, renames);
          remapUses(copy, renames);
          new_body.ops.push_back(std::move(copy));
        }
      }
      new_body.ops.push_back(makeOp(ctx.payload, "scf.yield", {}, {}));
      new_loop.regions[0].blocks.push_back(std::move(new_body));
      replacement.push_back(std::move(new_loop));
      ctx.rewriter.replace(loop_id, std::move(replacement));
    }
  }
  return TransformStatus::ok();
}

//===----------------------------------------------------------------------===//
// loop.interchange
//===----------------------------------------------------------------------===//

TransformStatus applyInterchange(InterpCtx &ctx, const Operation &top) {
  const AttrValue *perm_attr = top.attr("perm");
  if (!perm_attr || perm_attr->kind != AttrValue::Kind::IntList)
    return TransformStatus::definite("loop.interchange requires a 'perm' list");
  const std::vector<std::int64_t> &perm = perm_attr->asIntList();

  std::vector<OpId> new_roots;
  for (OpId root_id : ctx.operand_ops.at(0)) {
    std::vector<OpId> nest = perfectNestLoops(ctx.payload, root_id);
    if (nest.size() < perm.size())
      return TransformStatus::silenceable(
          "interchange requires a perfect nest of depth " +
          std::to_string(perm.size()));
    nest.resize(perm.size());

    struct LoopShape {
      std::vector<std::string> operands;
      std::string iv;
      std::string block_label;
      AttrMap attrs;
    };
    std::vector<LoopShape> shapes;
    std::set<std::string> nest_ivs;
    for (OpId id : nest) {
      const Operation *loop = findOp(ctx.payload, id);
      LoopShape s{loop->operands,
                  loop->regions.at(0).blocks.at(0).args.at(0).name,
                  loop->regions.at(0).blocks.at(0).label, loop->attrs};
      nest_ivs.insert(s.iv);
      shapes.push_back(std::move(s));
    }
    // Rectangularity: bounds must not reference the nest's own ivs.
    for (const auto &s : shapes)
      for (const auto &o : s.operands)
        if (nest_ivs.count(o))
          return TransformStatus::silenceable(
              "interchange requires rectangular loop bounds");

    const Operation *deepest = findOp(ctx.payload, nest.back());
    std::vector<Operation> current = deepest->regions.at(0).blocks.at(0).ops;
    OpId new_root_id = 0;
    for (size_t rk = perm.size(); rk-- > 0;) {
      const LoopShape &s = shapes[static_cast<size_t>(perm[rk])];
      Operation loop = makeOp(ctx.payload, "scf.for", s.operands, {}, s.attrs);
      loop.regions.emplace_back();
      Block body;
      body.label = s.block_label;
      body.args.push_back({s.iv, Type::index()});
      body.ops = std::move(current);
      if (body.ops.empty() || body.ops.back().name != "scf.yield")
        body.ops.push_back(makeOp(ctx.payload, "scf.yield", {}, {}));
      loop.regions[0].blocks.push_back(std::move(body));
      new_root_id = loop.id;
      current.clear();
      current.push_back(std::move(loop));
    }
    ctx.rewriter.replace(root_id, std::move(current));
    new_roots.push_back(new_root_id);
  }
  ctx.setResultHandle(0, new_roots);
  return TransformStatus::ok();
}

//===----------------------------------------------------------------------===//
// loop.vectorize_marker
//===----------------------------------------------------------------------===//

TransformStatus applyVectorizeMarker(InterpCtx &ctx, const Operation &) {
  for (OpId loop_id : ctx.operand_ops.at(0)) {
    Operation *loop = ctx.rewriter.find(loop_id);
    if (!loop || loop->name != "scf.for")
      return TransformStatus::silenceable("vectorize target is not an scf.for");
    bool innermost = true;
    walk(*loop, [&](const Operation &op) {
      if (op.id != loop->id && (op.name == "scf.for" || op.name == "scf.forall"))
        innermost = false;
      return innermost;
    });
    if (!innermost)
      return TransformStatus::silenceable("vectorize marker requires the innermost loop");
    if (!staticTripCount(ctx.payload, *loop))
      return TransformStatus::silenceable("vectorize marker requires a static trip count");
    // Attribute-only change: identity is preserved and the handle stays valid.
    loop->attrs["vectorized"] = AttrValue::makeBool(true);
  }
  return TransformStatus::ok();
}

//===----------------------------------------------------------------------===//
// transform.to_library
//===----------------------------------------------------------------------===//

struct MatmulMatch {
  // Loops outermost-first: optional batch, then i, j, k.
  std::vector<const Operation *> loops;
  bool batched = false;
  std::vector<std::string> prefix; // shared leading subscripts
  std::int64_t batch_pos = -1;     // index of the batch iv within prefix
  std::string a, b, c;             // buffer value names
  std::int64_t m = 0, n = 0, k = 0, batch = 1;
  TypeKind elem = TypeKind::F64;
};

// Matches the canonical multiply-accumulate nest
//   C[pre.., i, j] += A[pre.., i, k] * B[pre.., k, j]
// where the innermost three loops are (i, j, k) in order and `pre` subscripts
// are identical across A, B and C.
std::optional<MatmulMatch> matchMatmul(const Module &m, OpId root_id) {
  std::vector<OpId> nest_ids = perfectNestLoops(m, root_id);
  if (nest_ids.size() != 3 && nest_ids.size() != 4)
    return std::nullopt;
  MatmulMatch match;
  match.batched = nest_ids.size() == 4;
  for (OpId id : nest_ids)
    match.loops.push_back(findOp(m, id));

  std::vector<std::string> ivs;
  for (const Operation *loop : match.loops)
    ivs.push_back(loop->regions.at(0).blocks.at(0).args.at(0).name);
  size_t base = match.batched ? 1 : 0;
  const std::string &iv_i = ivs[base], &iv_j = ivs[base + 1], &iv_k = ivs[base + 2];

  const Block &body = match.loops.back()->regions.at(0).blocks.at(0);
  const Operation *loadA = nullptr, *loadB = nullptr, *loadC = nullptr;
  const Operation *mul = nullptr, *add = nullptr, *store = nullptr;
  std::vector<const Operation *> loads;
  for (const auto &op : body.ops) {
    if (op.name == "memref.load")
      loads.push_back(&op);
    else if (op.name == "arith.mulf" || op.name == "arith.muli")
      mul = &op;
    else if (op.name == "arith.addf" || op.name == "arith.addi")
      add = &op;
    else if (op.name == "memref.store")
      store = &op;
    else if (op.name != "scf.yield")
      return std::nullopt;
  }
  if (loads.size() != 3 || !mul || !add || !store)
    return std::nullopt;

  auto definesValue = [](const Operation *op, const std::string &v) {
    return !op->results.empty() && op->results[0].name == v;
  };
  // mul(a, b): its operands identify the A and B loads by subscript shape.
  for (const Operation *ld : loads) {
    if (definesValue(ld, mul->operands[0]) || definesValue(ld, mul->operands[1])) {
      size_t rank = ld->operands.size() - 1;
      if (rank < 2)
        return std::nullopt;
      const std::string &x = ld->operands[rank - 1], &y = ld->operands[rank];
      if (y == iv_k && x == iv_i)
        loadA = ld;
      else if (x == iv_k && y == iv_j)
        loadB = ld;
    }
  }
  for (const Operation *ld : loads)
    if (ld != loadA && ld != loadB)
      loadC = ld;
  if (!loadA || !loadB || !loadC)
    return std::nullopt;
  // add(C, mul) in either operand order, stored back to the same subscripts.
  bool add_ok =
      (definesValue(loadC, add->operands[0]) && definesValue(mul, add->operands[1])) ||
      (definesValue(loadC, add->operands[1]) && definesValue(mul, add->operands[0]));
  if (!add_ok || !definesValue(add, store->operands[0]))
    return std::nullopt;
  // Store subscripts must equal the C-load subscripts.
  if (std::vector<std::string>(store->operands.begin() + 1, store->operands.end()) !=
      std::vector<std::string>(loadC->operands.begin(), loadC->operands.end()))
    return std::nullopt;

  auto subsOf = [](const Operation *ld) {
    return std::vector<std::string>(ld->operands.begin() + 1, ld->operands.end());
  };
  std::vector<std::string> sa = subsOf(loadA), sb = subsOf(loadB), sc = subsOf(loadC);
  if (sa.size() < 2 || sb.size() != sa.size() || sc.size() != sa.size())
    return std::nullopt;
  size_t rank = sa.size();
  if (sa[rank - 2] != iv_i || sa[rank - 1] != iv_k || sb[rank - 2] != iv_k ||
      sb[rank - 1] != iv_j || sc[rank - 2] != iv_i || sc[rank - 1] != iv_j)
    return std::nullopt;
  for (size_t p = 0; p + 2 < rank; ++p) {
    if (sa[p] != sb[p] || sa[p] != sc[p])
      return std::nullopt;
    match.prefix.push_back(sa[p]);
  }
  // Prefix entries must be outer values; in the batched form exactly one of
  // them is the batch loop's own iv.
  for (size_t p = 0; p < match.prefix.size(); ++p) {
    if (match.batched && match.prefix[p] == ivs[0]) {
      if (match.batch_pos >= 0)
        return std::nullopt;
      match.batch_pos = static_cast<std::int64_t>(p);
    } else {
      for (const auto &iv : ivs)
        if (match.prefix[p] == iv)
          return std::nullopt;
    }
  }
  if (match.batched && match.batch_pos < 0)
    return std::nullopt;

  auto trip = [&](const Operation *loop) -> std::optional<std::int64_t> {
    return staticTripCount(m, *loop);
  };
  auto mt = trip(match.loops[base]), nt = trip(match.loops[base + 1]),
       kt = trip(match.loops[base + 2]);
  if (!mt || !nt || !kt)
    return std::nullopt;
  match.m = *mt;
  match.n = *nt;
  match.k = *kt;
  if (match.batched) {
    auto bt = trip(match.loops[0]);
    if (!bt)
      return std::nullopt;
    match.batch = *bt;
  }
  match.a = loadA->operands[0];
  match.b = loadB->operands[0];
  match.c = loadC->operands[0];
  Type ct = typeOfValue(m, match.c);
  match.elem = ct.kind == TypeKind::MemRef ? ct.elem : TypeKind::F64;
  return match;
}

TransformStatus applyToLibrary(InterpCtx &ctx, const Operation &) {
  if (!ctx.kernels)
    return TransformStatus::silenceable("no kernel registry configured");
  std::vector<OpId> calls;
  std::set<OpId> erased_by_self;
  for (OpId root_id : ctx.operand_ops.at(0)) {
    // Targets swallowed by an earlier replacement of the same transform
    // (nested loops of an already-replaced band) are considered handled.
    if (erased_by_self.count(root_id))
      continue;
    auto match = matchMatmul(ctx.payload, root_id);
    if (!match)
      return TransformStatus::silenceable(
          "target is not a canonical matmul nest");
    const KernelDef *kernel =
        ctx.kernels->findExact(match->m, match->n, match->k, match->elem);
    if (!kernel)
      return TransformStatus::silenceable(
          "microkernel library has no implementation with sizes " +
          std::to_string(match->m) + "x" + std::to_string(match->n) + "x" +
          std::to_string(match->k));

    size_t base = match->batched ? 1 : 0;
    std::vector<std::string> operands = {match->a, match->b, match->c};
    for (size_t p = 0; p < match->prefix.size(); ++p) {
      if (match->batched && static_cast<std::int64_t>(p) == match->batch_pos)
        operands.push_back(match->loops[0]->operands[0]); // batch base = lb
      else
        operands.push_back(match->prefix[p]);
    }
    operands.push_back(match->loops[base]->operands[0]);
    operands.push_back(match->loops[base + 1]->operands[0]);
    operands.push_back(match->loops[base + 2]->operands[0]);

    AttrMap attrs;
    attrs["kernel"] = AttrValue::makeStr(kernel->name);
    attrs["m"] = AttrValue::makeInt(match->m);
    attrs["n"] = AttrValue::makeInt(match->n);
    attrs["k"] = AttrValue::makeInt(match->k);
    if (match->batched) {
      attrs["batch"] = AttrValue::makeInt(match->batch);
      attrs["batch_pos"] = AttrValue::makeInt(match->batch_pos);
    }
    if (kernel->alpha)
      attrs["alpha"] = AttrValue::makeFloat(*kernel->alpha);
    Operation call = makeOp(ctx.payload, "lib.call_kernel", operands, {}, attrs);
    call.segments = std::vector<std::int64_t>{
        1, 1, 1, static_cast<std::int64_t>(match->prefix.size()), 1, 1, 1};

    for (const Operation *loop : match->loops)
      for (OpId id : subtreeIds(*loop))
        erased_by_self.insert(id);
    OpId call_id = call.id;
    ctx.rewriter.replace(root_id, {std::move(call)});
    calls.push_back(call_id);
  }
  ctx.setResultHandle(0, calls);
  return TransformStatus::ok();
}

//===----------------------------------------------------------------------===//
// transform.assert / params
//===----------------------------------------------------------------------===//

TransformStatus applyAssert(InterpCtx &ctx, const Operation &top) {
  auto p = ctx.paramOrAttr(top, 0, "value");
  auto v = p ? p->asSingleInt() : std::nullopt;
  if (!v)
    return TransformStatus::definite("transform.assert requires an integer");
  if (*v == 0)
    return TransformStatus::silenceable("assertion failed (value is 0)");
  return TransformStatus::ok();
}

TransformStatus applyParamConstant(InterpCtx &ctx, const Operation &top) {
  const AttrValue *v = top.attr("value");
  if (!v)
    return TransformStatus::definite("param.constant requires 'value'");
  switch (v->kind) {
  case AttrValue::Kind::Int:
    ctx.setResultParam(0, ParamValue::fromInt(v->asInt()));
    break;
  case AttrValue::Kind::IntList:
    ctx.setResultParam(0, ParamValue::fromList(v->asIntList()));
    break;
  case AttrValue::Kind::Str:
    ctx.setResultParam(0, ParamValue::fromStr(v->asStr()));
    break;
  default:
    return TransformStatus::definite("unsupported param.constant value kind");
  }
  return TransformStatus::ok();
}

TransformStatus applyTripCount(InterpCtx &ctx, const Operation &) {
  std::vector<std::int64_t> trips;
  for (OpId id : ctx.operand_ops.at(0)) {
    const Operation *loop = findOp(ctx.payload, id);
    if (!loop)
      return TransformStatus::definite("trip_count of a dangling op");
    auto trip = staticTripCount(ctx.payload, *loop);
    if (!trip)
      return TransformStatus::silenceable("trip_count requires static bounds");
    trips.push_back(*trip);
  }
  ctx.setResultParam(0, ParamValue::fromList(trips));
  return TransformStatus::ok();
}

//===----------------------------------------------------------------------===//
// structured.match
//===----------------------------------------------------------------------===//

TransformStatus applyMatch(InterpCtx &ctx, const Operation &top) {
  OpSetExpr expr;
  if (const AttrValue *ops = top.attr("ops");
      ops && ops->kind == AttrValue::Kind::StrList)
    expr.atoms = ops->asStrList();
  else
    expr.atoms = {"any_op"};

  std::string select = "all";
  if (const AttrValue *s = top.attr("select"))
    select = s->asStr();

  std::vector<std::pair<std::string, AttrValue>> where;
  for (const auto &[key, value] : top.attrs)
    if (key.rfind("where.", 0) == 0)
      where.push_back({key.substr(6), value});

  std::vector<OpId> matched;
  std::set<OpId> seen;
  for (OpId scope : ctx.operand_ops.at(0)) {
    for (OpId id : matchOps(ctx.payload, scope, expr, ctx.payload_reg)) {
      if (!seen.insert(id).second)
        continue;
      const Operation *op = findOp(ctx.payload, id);
      bool pass = true;
      for (const auto &[key, want] : where) {
        const AttrValue *have = op->attr(key);
        if (!have || !(*have == want))
          pass = false;
      }
      if (pass)
        matched.push_back(id);
    }
  }
  if (select == "innermost") {
    std::set<OpId> set(matched.begin(), matched.end());
    std::vector<OpId> inner;
    for (OpId id : matched) {
      const Operation *op = findOp(ctx.payload, id);
      bool contains_other = false;
      walk(*op, [&](const Operation &o) {
        if (o.id != id && set.count(o.id))
          contains_other = true;
        return !contains_other;
      });
      if (!contains_other)
        inner.push_back(id);
    }
    matched = std::move(inner);
  } else if (select == "first" && matched.size() > 1) {
    matched.resize(1);
  }
  ctx.setResultHandle(0, matched);
  return TransformStatus::ok();
}

} // namespace

//===----------------------------------------------------------------------===//
// Registration
//===----------------------------------------------------------------------===//

void registerStandardTransforms(TransformRegistry &reg) {
  auto sig = [](const char *consumed, const char *produced) {
    ConditionSignature s;
    s.consumed = OpSetExpr::parse(consumed);
    s.produced = OpSetExpr::parse(produced);
    return s;
  };

  {
    TransformOpInfo i;
    i.name = "structured.match";
    i.operands.push_back({false, false, {}});
    i.results_from_match_attr = true;
    i.results.push_back({false, {}});
    i.condition = sig("", "");
    i.invalidation = InvalidationScope::OperandOnly;
    i.apply = applyMatch;
    reg.registerTransform(std::move(i));
  }
  {
    TransformOpInfo i;
    i.name = "loop.hoist_invariants";
    i.operands.push_back({false, false, {"scf.for"}});
    i.results.push_back({false, {}});
    i.condition = sig("", "");
    i.apply = applyHoist;
    reg.registerTransform(std::move(i));
  }
  {
    TransformOpInfo i;
    i.name = "loop.split";
    i.operands.push_back({false, true, {"scf.for"}});
    i.optional_trailing_param = true;
    i.results.push_back({false, {"scf.for"}});
    i.results.push_back({false, {"scf.for"}});
    i.condition = sig("scf.for", "scf.for, arith.constant");
    i.apply = applySplit;
    reg.registerTransform(std::move(i));
  }
  {
    TransformOpInfo i;
    i.name = "loop.tile";
    i.operands.push_back({false, true, {"scf.for"}});
    i.optional_trailing_param = true;
    i.results.push_back({false, {"scf.for"}});
    i.results.push_back({false, {"scf.for"}});
    i.condition = sig("scf.for", "scf.for, arith.constant, arith.addi");
    i.apply = applyTile;
    reg.registerTransform(std::move(i));
  }
  {
    TransformOpInfo i;
    i.name = "loop.unroll";
    i.operands.push_back({false, true, {"scf.for"}});
    i.optional_trailing_param = true;
    i.condition = sig("scf.for", "scf.for, arith.constant, arith.addi");
    i.apply = applyUnroll;
    reg.registerTransform(std::move(i));
  }
  {
    TransformOpInfo i;
    i.name = "loop.interchange";
    i.operands.push_back({false, true, {"scf.for"}});
    i.results.push_back({false, {"scf.for"}});
    i.condition = sig("scf.for", "scf.for");
    i.verifier = [](const Operation &op, DiagnosticList &diags) {
      const AttrValue *perm = op.attr("perm");
      if (!perm || perm->kind != AttrValue::Kind::IntList) {
        diags.error("loop.interchange requires a 'perm' int list", op.loc);
        return;
      }
      std::vector<std::int64_t> p = perm->asIntList();
      std::vector<std::int64_t> sorted = p;
      std::sort(sorted.begin(), sorted.end());
      for (size_t i = 0; i < sorted.size(); ++i)
        if (sorted[i] != static_cast<std::int64_t>(i)) {
          diags.error("'perm' must be a permutation of 0.." +
                          std::to_string(p.size() - 1),
                      op.loc);
          return;
        }
    };
    i.apply = applyInterchange;
    reg.registerTransform(std::move(i));
  }
  {
    TransformOpInfo i;
    i.name = "loop.vectorize_marker";
    i.operands.push_back({false, false, {"scf.for"}});
    i.condition = sig("", "");
    i.apply = applyVectorizeMarker;
    reg.registerTransform(std::move(i));
  }
  {
    TransformOpInfo i;
    i.name = "transform.to_library";
    i.operands.push_back({false, true, {"scf.for"}});
    i.results.push_back({false, {"lib.call_kernel"}});
    i.condition = sig("scf.for", "lib.call_kernel");
    i.apply = applyToLibrary;
    reg.registerTransform(std::move(i));
  }
  {
    TransformOpInfo i;
    i.name = "transform.assert";
    i.optional_trailing_param = true;
    i.condition = sig("", "");
    i.apply = applyAssert;
    reg.registerTransform(std::move(i));
  }
  {
    TransformOpInfo i;
    i.name = "param.constant";
    i.results.push_back({true, {}});
    i.condition = sig("", "");
    i.verifier = [](const Operation &op, DiagnosticList &diags) {
      if (!op.hasAttr("value"))
        diags.error("param.constant requires a 'value' attribute", op.loc);
    };
    i.apply = applyParamConstant;
    reg.registerTransform(std::move(i));
  }
  {
    TransformOpInfo i;
    i.name = "param.trip_count";
    i.operands.push_back({false, false, {"scf.for"}});
    i.results.push_back({true, {}});
    i.condition = sig("", "");
    i.invalidation = InvalidationScope::OperandOnly;
    i.apply = applyTripCount;
    reg.registerTransform(std::move(i));
  }
}

} // namespace tfc
