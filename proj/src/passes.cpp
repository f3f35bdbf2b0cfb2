//===- passes.cpp - Coarse-grained passes invocable from scripts ----------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// The lowering chain mirrors a classic progressive flow: structured control
// flow to branches, arithmetic / control flow / functions to the llvmlite
// target dialect, strided memref addressing expanded into explicit affine
// arithmetic, trivially-indexed memrefs to flat pointers, and a final
// reconciliation of the unrealized conversion casts the conversions insert at
// type boundaries.
//
//===----------------------------------------------------------------------===//

#include "tfc/passes.hpp"
#include "tfc/interp.hpp"
#include "tfc/transforms.hpp"

#include <set>
#include <sstream>

namespace tfc {

DiagnosticList PassRegistry::add(Pass p) {
  DiagnosticList diags;
  if (passes_.count(p.name)) {
    diags.error("pass '" + p.name + "' is already registered");
    return diags;
  }
  passes_.emplace(p.name, std::move(p));
  return diags;
}

const Pass *PassRegistry::lookup(const std::string &name) const {
  auto it = passes_.find(name);
  return it == passes_.end() ? nullptr : &it->second;
}

std::optional<PassOptions> PassOptions::parse(const std::string &text) {
  PassOptions o;
  if (text.empty())
    return o;
  std::string cur;
  auto flush = [&]() -> bool {
    if (cur.empty())
      return true;
    auto eq = cur.find('=');
    if (eq == std::string::npos || eq == 0)
      return false;
    o.kv[cur.substr(0, eq)] = cur.substr(eq + 1);
    cur.clear();
    return true;
  };
  for (char c : text) {
    if (c == ',') {
      if (!flush())
        return std::nullopt;
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!flush())
    return std::nullopt;
  return o;
}

namespace {

ConditionSignature sig(const char *consumed, const char *produced) {
  ConditionSignature s;
  s.consumed = OpSetExpr::parse(consumed);
  s.produced = OpSetExpr::parse(produced);
  return s;
}

std::vector<OpId> funcsUnder(const Module &m, OpId target) {
  std::vector<OpId> funcs;
  const Operation *root = findOp(m, target);
  if (!root)
    return funcs;
  if (root->name == "func.func" || root->name == "llvmlite.func") {
    funcs.push_back(root->id);
    return funcs;
  }
  walk(*root, [&](const Operation &op) {
    if (op.name == "func.func" || op.name == "llvmlite.func")
      funcs.push_back(op.id);
    return true;
  });
  return funcs;
}

std::vector<OpId> opsNamed(const Module &m, OpId scope,
                           const std::string &dialect_or_name) {
  OpSetExpr e;
  e.atoms = {dialect_or_name};
  DialectRegistry dummy;
  std::vector<OpId> out;
  const Operation *root = findOp(m, scope);
  if (!root)
    return out;
  bool wildcard = dialect_or_name.size() > 2 &&
                  dialect_or_name.rfind(".*") == dialect_or_name.size() - 2;
  std::string prefix =
      wildcard ? dialect_or_name.substr(0, dialect_or_name.size() - 1) : "";
  walk(*root, [&](const Operation &op) {
    if (wildcard ? op.name.rfind(prefix, 0) == 0 : op.name == dialect_or_name)
      out.push_back(op.id);
    return true;
  });
  return out;
}

Operation makeCast(Module &m, const std::string &operand, Type to,
                   std::string *out_name) {
  std::string name = m.freshValueName();
  if (out_name)
    *out_name = name;
  return makeOp(m, "builtin.unrealized_conversion_cast", {operand},
                {{name, std::move(to)}});
}

std::uint64_t countUses(const Module &m, const std::string &name) {
  std::uint64_t n = 0;
  walk(m.root, [&](const Operation &op) {
    for (const auto &o : op.operands)
      if (o == name)
        ++n;
    return true;
  });
  return n;
}

//===----------------------------------------------------------------------===//
// convert-scf-to-cf
//===----------------------------------------------------------------------===//

// Rewrites scf.forall into a nest of scf.for (sequential semantics).
void lowerForallOps(PassCtx &ctx, OpId func_id) {
  while (true) {
    std::vector<OpId> foralls = opsNamed(ctx.module, func_id, "scf.forall");
    if (foralls.empty())
      return;
    OpId id = foralls.front();
    const Operation *fa = findOp(ctx.module, id);
    std::string c0, c1;
    Operation c0_op = makeIndexConstant(ctx.module, 0, &c0);
    Operation c1_op = makeIndexConstant(ctx.module, 1, &c1);
    const Block &body = fa->regions[0].blocks[0];
    // Innermost loop carries the forall body; build from the inside out.
    std::vector<Operation> current = body.ops;
    if (current.empty() || current.back().name != "scf.yield")
      current.push_back(makeOp(ctx.module, "scf.yield", {}, {}));
    OpId outermost = 0;
    for (size_t d = fa->operands.size(); d-- > 0;) {
      Operation loop = makeOp(ctx.module, "scf.for",
                              {c0, fa->operands[d], c1}, {},
                              d == 0 ? fa->attrs : AttrMap{});
      loop.regions.emplace_back();
      Block b;
      b.label = ctx.module.freshBlockLabel();
      b.args.push_back({body.args[d].name, Type::index()});
      b.ops = std::move(current);
      loop.regions[0].blocks.push_back(std::move(b));
      outermost = loop.id;
      current.clear();
      current.push_back(std::move(loop));
      if (d != 0)
        current.push_back(makeOp(ctx.module, "scf.yield", {}, {}));
    }
    (void)outermost;
    std::vector<Operation> replacement;
    replacement.push_back(std::move(c0_op));
    replacement.push_back(std::move(c1_op));
    OpId new_root = current[0].id;
    for (auto &op : current)
      replacement.push_back(std::move(op));
    ctx.rewriter.replaceWithEvent(id, std::move(replacement), {new_root}, {});
  }
}

struct CfgBuilder {
  Module &m;
  std::vector<Block> blocks;
  std::vector<OpId> erased;

  Block *current() { return &blocks.back(); }

  void startBlock(std::string label, std::vector<ValueDef> args = {}) {
    Block b;
    b.label = std::move(label);
    b.args = std::move(args);
    blocks.push_back(std::move(b));
  }

  void emitOps(const std::vector<Operation> &ops) {
    for (const auto &op : ops) {
      if (op.name == "scf.yield") {
        erased.push_back(op.id);
        continue;
      }
      if (op.name == "scf.for") {
        emitFor(op);
        continue;
      }
      if (op.name == "scf.if") {
        emitIf(op);
        continue;
      }
      current()->ops.push_back(op); // identity preserved
    }
  }

  void emitFor(const Operation &loop) {
    erased.push_back(loop.id);
    const Block &body = loop.regions[0].blocks[0];
    std::string header = m.freshBlockLabel();
    std::string body_l = m.freshBlockLabel();
    std::string exit_l = m.freshBlockLabel();
    const std::string &iv = body.args[0].name;

    Operation entry_br =
        makeOp(m, "cf.br", {loop.operands[0]}, {}, {});
    entry_br.successors = {header};
    current()->ops.push_back(std::move(entry_br));

    startBlock(header, {{iv, Type::index()}});
    std::string cmp = m.freshValueName();
    current()->ops.push_back(makeOp(m, "arith.cmpi", {iv, loop.operands[1]},
                                    {{cmp, Type::i1()}},
                                    {{"predicate", AttrValue::makeStr("slt")}}));
    Operation cond = makeOp(m, "cf.cond_br", {cmp}, {}, {});
    cond.successors = {body_l, exit_l};
    cond.segments = std::vector<std::int64_t>{1, 0, 0};
    current()->ops.push_back(std::move(cond));

    startBlock(body_l);
    emitOps(body.ops);
    std::string next = m.freshValueName();
    current()->ops.push_back(makeOp(m, "arith.addi", {iv, loop.operands[2]},
                                    {{next, Type::index()}}));
    Operation back_br = makeOp(m, "cf.br", {next}, {}, {});
    back_br.successors = {header};
    current()->ops.push_back(std::move(back_br));

    startBlock(exit_l);
  }

  void emitIf(const Operation &ifop) {
    erased.push_back(ifop.id);
    std::string then_l = m.freshBlockLabel();
    std::string else_l = m.freshBlockLabel();
    std::string merge_l = m.freshBlockLabel();
    Operation cond = makeOp(m, "cf.cond_br", {ifop.operands[0]}, {}, {});
    cond.successors = {then_l, else_l};
    cond.segments = std::vector<std::int64_t>{1, 0, 0};
    current()->ops.push_back(std::move(cond));

    startBlock(then_l);
    emitOps(ifop.regions[0].blocks[0].ops);
    Operation to_merge1 = makeOp(m, "cf.br", {}, {}, {});
    to_merge1.successors = {merge_l};
    current()->ops.push_back(std::move(to_merge1));

    startBlock(else_l);
    if (ifop.regions.size() > 1 && !ifop.regions[1].blocks.empty())
      emitOps(ifop.regions[1].blocks[0].ops);
    Operation to_merge2 = makeOp(m, "cf.br", {}, {}, {});
    to_merge2.successors = {merge_l};
    current()->ops.push_back(std::move(to_merge2));

    startBlock(merge_l);
  }
};

TransformStatus passScfToCf(PassCtx &ctx, OpId target, const PassOptions &) {
  for (OpId func_id : funcsUnder(ctx.module, target)) {
    lowerForallOps(ctx, func_id);
    Operation *func = ctx.rewriter.find(func_id);
    if (!func || func->regions.empty() || func->regions[0].blocks.empty())
      continue;
    bool has_scf = !opsNamed(ctx.module, func_id, "scf.*").empty();
    if (!has_scf)
      continue;
    if (func->regions[0].blocks.size() != 1)
      return TransformStatus::silenceable(
          "convert-scf-to-cf expects single-block functions with structured "
          "control flow");
    CfgBuilder builder{ctx.module, {}, {}};
    const Block &entry = func->regions[0].blocks[0];
    builder.startBlock(ctx.module.freshBlockLabel(), entry.args);
    builder.emitOps(entry.ops);
    // Nested yields inside erased loops were collected; terminators of the
    // trailing block come from the original func.return.
    Region region;
    region.blocks = std::move(builder.blocks);
    ctx.rewriter.replaceRegion(func_id, std::move(region), builder.erased);
  }
  return TransformStatus::ok();
}

//===----------------------------------------------------------------------===//
// convert-arith-to-llvmlite
//===----------------------------------------------------------------------===//

TransformStatus passArithToLlvmlite(PassCtx &ctx, OpId target, const PassOptions &) {
  std::vector<OpId> ids = opsNamed(ctx.module, target, "arith.*");
  for (OpId id : ids) {
    const Operation *op = ctx.rewriter.find(id);
    if (!op)
      continue;
    const std::string &n = op->name;
    std::vector<Operation> out;
    // Bridge an integer operand into i64, inserting a cast when needed.
    auto bridgeInt = [&](const std::string &name) {
      Type t = typeOfValue(ctx.module, name);
      if (t.kind == TypeKind::Index) {
        std::string casted;
        out.push_back(makeCast(ctx.module, name, Type::i64(), &casted));
        return casted;
      }
      return name;
    };
    auto finish = [&](Operation main, Type old_type) {
      std::string main_name = main.results[0].name;
      OpId main_id = main.id;
      out.push_back(std::move(main));
      std::map<std::string, std::string> fwd;
      const std::string old_name = op->results[0].name;
      if (old_type.kind == TypeKind::Index) {
        std::string back;
        out.push_back(makeCast(ctx.module, main_name, Type::index(), &back));
        fwd[old_name] = back;
      } else {
        fwd[old_name] = main_name;
      }
      ctx.rewriter.replaceWithEvent(id, std::move(out), {main_id}, fwd);
    };

    if (n == "arith.constant") {
      const AttrValue *v = op->attr("value");
      Type old_type = op->results[0].type;
      Type new_type = v->kind == AttrValue::Kind::Float ? Type::f64()
                      : old_type.kind == TypeKind::I1   ? Type::i1()
                                                        : Type::i64();
      Operation cst = makeOp(ctx.module, "llvmlite.constant", {},
                             {{ctx.module.freshValueName(), new_type}},
                             {{"value", *v}});
      finish(std::move(cst), old_type);
    } else if (n == "arith.addi" || n == "arith.muli" || n == "arith.addf" ||
               n == "arith.mulf") {
      bool is_int = n == "arith.addi" || n == "arith.muli";
      std::string a = is_int ? bridgeInt(op->operands[0]) : op->operands[0];
      std::string b = is_int ? bridgeInt(op->operands[1]) : op->operands[1];
      Type res = is_int ? Type::i64() : Type::f64();
      bool add = n == "arith.addi" || n == "arith.addf";
      Operation main = makeOp(ctx.module, add ? "llvmlite.add" : "llvmlite.mul",
                              {a, b}, {{ctx.module.freshValueName(), res}});
      finish(std::move(main), op->results[0].type);
    } else if (n == "arith.subi") {
      std::string a = bridgeInt(op->operands[0]);
      std::string b = bridgeInt(op->operands[1]);
      std::string neg1;
      Operation c = makeOp(ctx.module, "llvmlite.constant", {},
                           {{ctx.module.freshValueName(), Type::i64()}},
                           {{"value", AttrValue::makeInt(-1)}});
      neg1 = c.results[0].name;
      out.push_back(std::move(c));
      Operation mul = makeOp(ctx.module, "llvmlite.mul", {b, neg1},
                             {{ctx.module.freshValueName(), Type::i64()}});
      std::string negb = mul.results[0].name;
      out.push_back(std::move(mul));
      Operation main = makeOp(ctx.module, "llvmlite.add", {a, negb},
                              {{ctx.module.freshValueName(), Type::i64()}});
      finish(std::move(main), op->results[0].type);
    } else if (n == "arith.cmpi") {
      std::string a = bridgeInt(op->operands[0]);
      std::string b = bridgeInt(op->operands[1]);
      Operation main = makeOp(ctx.module, "llvmlite.icmp", {a, b},
                              {{ctx.module.freshValueName(), Type::i1()}},
                              {{"predicate", *op->attr("predicate")}});
      finish(std::move(main), Type::i1());
    } else if (n == "arith.index_cast") {
      // Becomes a plain conversion cast with the original result type.
      Operation cast = makeCast(ctx.module, op->operands[0],
                                op->results[0].type, nullptr);
      std::map<std::string, std::string> fwd{
          {op->results[0].name, cast.results[0].name}};
      OpId cast_id = cast.id;
      ctx.rewriter.replaceWithEvent(id, {std::move(cast)}, {cast_id}, fwd);
    } else {
      return TransformStatus::silenceable("cannot convert '" + n + "'");
    }
  }
  return TransformStatus::ok();
}

//===----------------------------------------------------------------------===//
// convert-cf-to-llvmlite / convert-func-to-llvmlite
//===----------------------------------------------------------------------===//

TransformStatus passCfToLlvmlite(PassCtx &ctx, OpId target, const PassOptions &) {
  for (OpId id : opsNamed(ctx.module, target, "cf.*")) {
    const Operation *op = ctx.rewriter.find(id);
    if (!op)
      continue;
    Operation repl = *op;
    repl.id = ctx.module.newOpId();
    repl.name = op->name == "cf.br" ? "llvmlite.br" : "llvmlite.cond_br";
    ctx.rewriter.replace(id, {std::move(repl)});
  }
  return TransformStatus::ok();
}

TransformStatus passFuncToLlvmlite(PassCtx &ctx, OpId target, const PassOptions &) {
  for (OpId func_id : funcsUnder(ctx.module, target)) {
    Operation *func = ctx.rewriter.find(func_id);
    if (!func || func->name != "func.func")
      continue;
    // Index-typed block arguments become i64; a cast back to index feeds the
    // remaining index users.
    for (auto &block : func->regions[0].blocks) {
      for (auto &arg : block.args) {
        if (arg.type.kind != TypeKind::Index)
          continue;
        std::string casted;
        Operation cast = makeCast(ctx.module, arg.name, Type::index(), &casted);
        std::map<std::string, std::string> remap{{arg.name, casted}};
        for (auto &op : block.ops)
          remapUses(op, remap);
        // Branches elsewhere in the function may also pass this value on.
        for (auto &other : func->regions[0].blocks)
          if (&other != &block)
            for (auto &op : other.ops)
              remapUses(op, remap);
        arg.type = Type::i64();
        block.ops.insert(block.ops.begin(), std::move(cast));
      }
    }
    // Branch operands feeding retyped block arguments bridge through i64.
    for (auto &block : func->regions[0].blocks) {
      if (block.ops.empty())
        continue;
      Operation &term = block.ops.back();
      if (term.name != "cf.br" && term.name != "cf.cond_br" &&
          term.name != "llvmlite.br" && term.name != "llvmlite.cond_br")
        continue;
      std::vector<Operation> casts;
      for (auto &operand : term.operands) {
        if (typeOfValue(ctx.module, operand).kind != TypeKind::Index)
          continue;
        std::string casted;
        casts.push_back(makeCast(ctx.module, operand, Type::i64(), &casted));
        operand = casted;
      }
      block.ops.insert(block.ops.end() - 1,
                       std::make_move_iterator(casts.begin()),
                       std::make_move_iterator(casts.end()));
    }
    func = ctx.rewriter.find(func_id);
    for (OpId id : opsNamed(ctx.module, func_id, "func.return")) {
      const Operation *op = ctx.rewriter.find(id);
      Operation repl = *op;
      repl.id = ctx.module.newOpId();
      repl.name = "llvmlite.return";
      ctx.rewriter.replace(id, {std::move(repl)});
    }
    for (OpId id : opsNamed(ctx.module, func_id, "func.call")) {
      const Operation *op = ctx.rewriter.find(id);
      Operation repl = *op;
      repl.id = ctx.module.newOpId();
      repl.name = "llvmlite.call";
      std::vector<Operation> casts_in, casts_out;
      std::map<std::string, std::string> fwd;
      for (auto &operand : repl.operands) {
        if (typeOfValue(ctx.module, operand).kind == TypeKind::Index) {
          std::string casted;
          casts_in.push_back(makeCast(ctx.module, operand, Type::i64(), &casted));
          operand = casted;
        }
      }
      // Index-typed results become i64 with a cast back for index users.
      for (auto &res : repl.results) {
        if (res.type.kind != TypeKind::Index)
          continue;
        std::string old_name = res.name;
        res.name = ctx.module.freshValueName();
        res.type = Type::i64();
        Operation back = makeCast(ctx.module, res.name, Type::index(), nullptr);
        fwd[old_name] = back.results[0].name;
        casts_out.push_back(std::move(back));
      }
      OpId repl_id = repl.id;
      std::vector<Operation> final_ops = std::move(casts_in);
      final_ops.push_back(std::move(repl));
      for (auto &o : casts_out)
        final_ops.push_back(std::move(o));
      ctx.rewriter.replaceWithEvent(id, std::move(final_ops), {repl_id}, fwd);
    }
    // Finally the function op itself.
    func = ctx.rewriter.find(func_id);
    Operation repl = *func;
    repl.id = ctx.module.newOpId();
    repl.name = "llvmlite.func";
    ctx.rewriter.replace(func_id, {std::move(repl)});
  }
  return TransformStatus::ok();
}

//===----------------------------------------------------------------------===//
// expand-strided-metadata
//===----------------------------------------------------------------------===//

TransformStatus passExpandStridedMetadata(PassCtx &ctx, OpId target,
                                          const PassOptions &) {
  for (OpId id : opsNamed(ctx.module, target, "memref.subview")) {
    const Operation *op = ctx.rewriter.find(id);
    if (!op || !op->segments)
      continue;
    const auto &segs = *op->segments;
    if (segs.size() != 4 || (segs[1] == 0 && segs[2] == 0 && segs[3] == 0))
      continue; // already trivial: satisfies subview.constr
    if (segs[2] != 0 || segs[3] != 0)
      return TransformStatus::silenceable(
          "expand-strided-metadata supports dynamic offsets only");

    Type src_type = typeOfValue(ctx.module, op->operands[0]);
    if (src_type.kind != TypeKind::MemRef)
      return TransformStatus::silenceable("subview source type is unknown");
    std::vector<std::int64_t> src_strides = src_type.explicit_layout
                                                ? src_type.layout_strides
                                                : src_type.contiguousStrides();
    for (auto s : src_strides)
      if (s == kDynamic)
        return TransformStatus::silenceable("dynamic source strides unsupported");
    if (src_type.explicit_layout && src_type.layout_offset == kDynamic)
      return TransformStatus::silenceable("dynamic source offset unsupported");

    size_t rank = src_type.shape.size();
    const std::vector<std::int64_t> &offsets = op->attr("static_offsets")->asIntList();
    const std::vector<std::int64_t> &sizes = op->attr("static_sizes")->asIntList();
    const std::vector<std::int64_t> &strides = op->attr("static_strides")->asIntList();
    if (offsets.size() != rank)
      return TransformStatus::silenceable("subview rank mismatch");

    // Metadata: base buffer view, plus the source's own offset.
    std::vector<std::pair<std::string, Type>> meta_results;
    std::string base_name = ctx.module.freshValueName();
    std::string off_name = ctx.module.freshValueName();
    meta_results.push_back({base_name, Type::memref({kDynamic}, src_type.elem)});
    meta_results.push_back({off_name, Type::index()});
    for (size_t k = 0; k < 2 * rank; ++k)
      meta_results.push_back({ctx.module.freshValueName(), Type::index()});
    Operation esm = makeOp(ctx.module, "memref.extract_strided_metadata",
                           {op->operands[0]}, std::move(meta_results));

    // offset' = s0 + sum(static parts) + sum(dynamic offsets * stride).
    std::ostringstream expr;
    expr << "s0";
    std::int64_t static_sum = 0;
    std::vector<std::string> apply_operands = {off_name};
    size_t dyn_index = 1; // operand 0 is the source memref
    int sym = 1;
    for (size_t k = 0; k < rank; ++k) {
      if (offsets[k] == kDynamic) {
        apply_operands.push_back(op->operands[dyn_index++]);
        expr << " + s" << sym++ << "*" << src_strides[k];
      } else {
        static_sum += offsets[k] * src_strides[k];
      }
    }
    if (static_sum != 0)
      expr << " + " << static_sum;
    Operation apply =
        makeOp(ctx.module, "affine.apply", apply_operands,
               {{ctx.module.freshValueName(), Type::index()}},
               {{"expr", AttrValue::makeStr(expr.str())}});
    std::string new_off = apply.results[0].name;

    std::vector<std::int64_t> view_strides;
    for (size_t k = 0; k < sizes.size(); ++k) {
      if (sizes[k] == kDynamic || strides[k] == kDynamic)
        return TransformStatus::silenceable("dynamic sizes/strides unsupported");
      view_strides.push_back(strides[k] * src_strides[k]);
    }
    Type view_type = Type::memrefLayout(sizes, src_type.elem, kDynamic, view_strides);
    Operation rc = makeOp(
        ctx.module, "memref.reinterpret_cast", {base_name, new_off},
        {{ctx.module.freshValueName(), view_type}},
        {{"static_offsets", AttrValue::makeIntList({kDynamic})},
         {"static_sizes", AttrValue::makeIntList(sizes)},
         {"static_strides", AttrValue::makeIntList(view_strides)}});
    rc.segments = std::vector<std::int64_t>{1, 1, 0, 0};

    std::map<std::string, std::string> fwd{{op->results[0].name, rc.results[0].name}};
    OpId rc_id = rc.id;
    ctx.rewriter.replaceWithEvent(
        id, {std::move(esm), std::move(apply), std::move(rc)}, {rc_id}, fwd);
  }
  return TransformStatus::ok();
}

//===----------------------------------------------------------------------===//
// finalize-memref-to-llvmlite
//===----------------------------------------------------------------------===//

struct MemLowering {
  std::string addr; // i64 value: start address of the view
  std::vector<std::int64_t> sizes;
  std::vector<std::int64_t> strides;
  // Static offset already folded into addr; nullopt when it was dynamic.
  std::optional<std::int64_t> view_offset = 0;
};

TransformStatus passFinalizeMemref(PassCtx &ctx, OpId target, const PassOptions &) {
  for (OpId func_id : funcsUnder(ctx.module, target)) {
    Operation *func = ctx.rewriter.find(func_id);
    std::map<std::string, MemLowering> info;

    // Memref-typed block arguments become flat addresses.
    for (auto &block : func->regions[0].blocks) {
      for (auto &arg : block.args) {
        if (arg.type.kind != TypeKind::MemRef)
          continue;
        Type t = arg.type;
        for (auto d : t.shape)
          if (d == kDynamic)
            return TransformStatus::silenceable(
                "finalize-memref requires static argument shapes");
        if (t.explicit_layout &&
            (t.layout_offset != 0 || t.layout_strides != t.contiguousStrides()))
          return TransformStatus::silenceable(
              "finalize-memref requires identity argument layouts");
        info[arg.name] = {arg.name, t.shape, t.contiguousStrides(), 0};
        arg.type = Type::i64();
      }
    }

    auto lookupInfo = [&](const std::string &name) -> const MemLowering * {
      auto it = info.find(name);
      return it == info.end() ? nullptr : &it->second;
    };
    auto bridgeIndex = [&](const std::string &name, std::vector<Operation> &out) {
      Type t = typeOfValue(ctx.module, name);
      if (t.kind == TypeKind::I64)
        return name;
      std::string casted;
      out.push_back(makeCast(ctx.module, name, Type::i64(), &casted));
      return casted;
    };
    auto makeI64Const = [&](std::int64_t v, std::vector<Operation> &out) {
      Operation c = makeOp(ctx.module, "llvmlite.constant", {},
                           {{ctx.module.freshValueName(), Type::i64()}},
                           {{"value", AttrValue::makeInt(v)}});
      std::string n = c.results[0].name;
      out.push_back(std::move(c));
      return n;
    };

    std::vector<OpId> ids = opsNamed(ctx.module, func_id, "memref.*");
    for (OpId id : ids) {
      const Operation *op = ctx.rewriter.find(id);
      if (!op)
        continue;
      const std::string &n = op->name;
      std::vector<Operation> out;

      if (n == "memref.alloc") {
        const Type &t = op->results[0].type;
        std::int64_t total = 1;
        for (auto d : t.shape) {
          if (d == kDynamic)
            return TransformStatus::silenceable("dynamic alloc unsupported");
          total *= d;
        }
        Operation alloca =
            makeOp(ctx.module, "llvmlite.alloca", {},
                   {{ctx.module.freshValueName(), Type::i64()}},
                   {{"size", AttrValue::makeInt(total)},
                    {"elem", AttrValue::makeStr(t.elem == TypeKind::F64 ? "f64"
                                                                        : "i64")}});
        std::string name = alloca.results[0].name;
        info[name] = {name, t.shape, t.contiguousStrides(), 0};
        std::map<std::string, std::string> fwd{{op->results[0].name, name}};
        OpId main_id = alloca.id;
        ctx.rewriter.replaceWithEvent(id, {std::move(alloca)}, {main_id}, fwd);
      } else if (n == "memref.subview") {
        const auto &segs = *op->segments;
        if (segs[1] != 0 || segs[2] != 0 || segs[3] != 0)
          return TransformStatus::silenceable(
              "finalize-memref-to-llvmlite requires trivial subviews "
              "(run expand-strided-metadata first)");
        const MemLowering *src = lookupInfo(op->operands[0]);
        if (!src)
          return TransformStatus::silenceable("subview source was not lowered");
        const auto &offsets = op->attr("static_offsets")->asIntList();
        const auto &sizes = op->attr("static_sizes")->asIntList();
        const auto &strides = op->attr("static_strides")->asIntList();
        std::int64_t delta = 0;
        std::vector<std::int64_t> view_strides;
        for (size_t k = 0; k < offsets.size(); ++k)
          delta += offsets[k] * src->strides.at(k);
        for (size_t k = 0; k < sizes.size(); ++k)
          view_strides.push_back(strides[k] * src->strides.at(k));
        std::string delta_name = makeI64Const(delta, out);
        Operation add = makeOp(ctx.module, "llvmlite.add", {src->addr, delta_name},
                               {{ctx.module.freshValueName(), Type::i64()}});
        std::string name = add.results[0].name;
        OpId main_id = add.id;
        out.push_back(std::move(add));
        info[name] = {name, sizes, view_strides, delta};
        std::map<std::string, std::string> fwd{{op->results[0].name, name}};
        ctx.rewriter.replaceWithEvent(id, std::move(out), {main_id}, fwd);
      } else if (n == "memref.extract_strided_metadata") {
        const MemLowering *src = lookupInfo(op->operands[0]);
        if (!src)
          return TransformStatus::silenceable("metadata source was not lowered");
        if (!src->view_offset)
          return TransformStatus::silenceable("dynamic offset metadata unsupported");
        std::int64_t src_offset = *src->view_offset;
        // Base address = view address - static offset.
        std::string base = src->addr;
        if (src_offset != 0) {
          std::string delta = makeI64Const(-src_offset, out);
          Operation add = makeOp(ctx.module, "llvmlite.add", {src->addr, delta},
                                 {{ctx.module.freshValueName(), Type::i64()}});
          base = add.results[0].name;
          out.push_back(std::move(add));
        }
        std::int64_t flat = 1;
        for (auto d : src->sizes)
          flat *= d;
        if (!info.count(base))
          info[base] = {base, {flat}, {1}, 0};
        std::map<std::string, std::string> fwd{{op->results[0].name, base}};
        // Offset / sizes / strides become constants cast back to index.
        auto emitIndexConst = [&](std::int64_t v, const std::string &old_name) {
          std::string c = makeI64Const(v, out);
          std::string back;
          out.push_back(makeCast(ctx.module, c, Type::index(), &back));
          fwd[old_name] = back;
        };
        if (op->results.size() >= 2)
          emitIndexConst(src_offset, op->results[1].name);
        size_t rank = src->sizes.size();
        for (size_t k = 0; k < rank && 2 + k < op->results.size(); ++k)
          emitIndexConst(src->sizes[k], op->results[2 + k].name);
        for (size_t k = 0; k < rank && 2 + rank + k < op->results.size(); ++k)
          emitIndexConst(src->strides[k], op->results[2 + rank + k].name);
        OpId anchor = out.empty() ? 0 : out.front().id;
        std::vector<OpId> event = anchor ? std::vector<OpId>{anchor}
                                         : std::vector<OpId>{};
        ctx.rewriter.replaceWithEvent(id, std::move(out), std::move(event), fwd);
      } else if (n == "memref.reinterpret_cast") {
        const auto &segs = *op->segments;
        if (segs[2] != 0 || segs[3] != 0)
          return TransformStatus::silenceable("dynamic sizes/strides unsupported");
        const MemLowering *base = lookupInfo(op->operands[0]);
        if (!base)
          return TransformStatus::silenceable("reinterpret base was not lowered");
        const auto &offsets = op->attr("static_offsets")->asIntList();
        const auto &sizes = op->attr("static_sizes")->asIntList();
        const auto &strides = op->attr("static_strides")->asIntList();
        std::string off_name;
        if (!offsets.empty() && offsets[0] == kDynamic)
          off_name = bridgeIndex(op->operands[1], out);
        else
          off_name = makeI64Const(offsets.empty() ? 0 : offsets[0], out);
        Operation add = makeOp(ctx.module, "llvmlite.add", {base->addr, off_name},
                               {{ctx.module.freshValueName(), Type::i64()}});
        std::string name = add.results[0].name;
        OpId main_id = add.id;
        out.push_back(std::move(add));
        std::optional<std::int64_t> rc_off;
        if (!offsets.empty() && offsets[0] != kDynamic)
          rc_off = offsets[0];
        info[name] = {name, sizes, strides, rc_off};
        std::map<std::string, std::string> fwd{{op->results[0].name, name}};
        ctx.rewriter.replaceWithEvent(id, std::move(out), {main_id}, fwd);
      } else if (n == "memref.load" || n == "memref.store") {
        size_t mem_idx = n == "memref.load" ? 0 : 1;
        const MemLowering *mem = lookupInfo(op->operands[mem_idx]);
        if (!mem)
          return TransformStatus::silenceable("memref value was not lowered");
        std::string addr = mem->addr;
        for (size_t k = 0; k < mem->strides.size(); ++k) {
          std::string idx = bridgeIndex(op->operands[mem_idx + 1 + k], out);
          std::string stride = makeI64Const(mem->strides[k], out);
          Operation mul = makeOp(ctx.module, "llvmlite.mul", {idx, stride},
                                 {{ctx.module.freshValueName(), Type::i64()}});
          std::string term = mul.results[0].name;
          out.push_back(std::move(mul));
          Operation add = makeOp(ctx.module, "llvmlite.add", {addr, term},
                                 {{ctx.module.freshValueName(), Type::i64()}});
          addr = add.results[0].name;
          out.push_back(std::move(add));
        }
        if (n == "memref.load") {
          Operation load = makeOp(ctx.module, "llvmlite.load", {addr},
                                  {{ctx.module.freshValueName(),
                                    op->results[0].type}});
          std::map<std::string, std::string> fwd{
              {op->results[0].name, load.results[0].name}};
          OpId main_id = load.id;
          out.push_back(std::move(load));
          ctx.rewriter.replaceWithEvent(id, std::move(out), {main_id}, fwd);
        } else {
          Operation store =
              makeOp(ctx.module, "llvmlite.store", {op->operands[0], addr}, {});
          OpId main_id = store.id;
          out.push_back(std::move(store));
          ctx.rewriter.replaceWithEvent(id, std::move(out), {main_id}, {});
        }
      } else {
        return TransformStatus::silenceable("finalize-memref cannot lower '" + n +
                                            "'");
      }
    }
  }
  return TransformStatus::ok();
}

//===----------------------------------------------------------------------===//
// reconcile-unrealized-casts
//===----------------------------------------------------------------------===//

TransformStatus passReconcileCasts(PassCtx &ctx, OpId target, const PassOptions &) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (OpId id : opsNamed(ctx.module, target, "builtin.unrealized_conversion_cast")) {
      const Operation *op = ctx.rewriter.find(id);
      if (!op)
        continue;
      // Unused casts disappear.
      if (countUses(ctx.module, op->results[0].name) == 0) {
        ctx.rewriter.erase(id);
        changed = true;
        continue;
      }
      // Same-type casts forward their operand.
      Type in = typeOfValue(ctx.module, op->operands[0]);
      if (in == op->results[0].type) {
        ctx.rewriter.replaceWithValue(id, op->operands[0]);
        changed = true;
        continue;
      }
      // cast(cast(x: A->B): B->A) cancels to x.
      const Operation *def = nullptr;
      walk(ctx.module.root, [&](const Operation &o) {
        for (const auto &res : o.results)
          if (res.name == op->operands[0]) {
            def = &o;
            return false;
          }
        return true;
      });
      if (def && def->name == "builtin.unrealized_conversion_cast" &&
          typeOfValue(ctx.module, def->operands[0]) == op->results[0].type) {
        ctx.rewriter.replaceWithValue(id, def->operands[0]);
        changed = true;
      }
    }
  }
  if (!opsNamed(ctx.module, target, "builtin.unrealized_conversion_cast").empty())
    return TransformStatus::silenceable(
        "failed to legalize operation 'builtin.unrealized_conversion_cast' "
        "that was explicitly marked illegal");
  return TransformStatus::ok();
}

//===----------------------------------------------------------------------===//
// lower-affine
//===----------------------------------------------------------------------===//

struct AffineCodegen {
  Module &m;
  const std::vector<std::string> &syms;
  std::vector<Operation> ops;
  const std::string &s;
  size_t pos = 0;
  bool failed = false;

  void skip() {
    while (pos < s.size() && s[pos] == ' ')
      ++pos;
  }
  std::string constant(std::int64_t v) {
    std::string name;
    ops.push_back(makeIndexConstant(m, v, &name));
    return name;
  }
  std::string binary(const char *opname, const std::string &a,
                     const std::string &b) {
    Operation op = makeOp(m, opname, {a, b}, {{m.freshValueName(), Type::index()}});
    std::string name = op.results[0].name;
    ops.push_back(std::move(op));
    return name;
  }
  std::string primary() {
    skip();
    if (pos >= s.size()) {
      failed = true;
      return "";
    }
    if (s[pos] == '(') {
      ++pos;
      std::string v = expr();
      skip();
      if (pos < s.size() && s[pos] == ')')
        ++pos;
      else
        failed = true;
      return v;
    }
    if (s[pos] == '-') {
      ++pos;
      return binary("arith.subi", constant(0), primary());
    }
    if (s[pos] == 's') {
      ++pos;
      size_t start = pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos])))
        ++pos;
      size_t idx = std::strtoull(s.substr(start, pos - start).c_str(), nullptr, 10);
      if (start == pos || idx >= syms.size()) {
        failed = true;
        return "";
      }
      return syms[idx];
    }
    if (std::isdigit(static_cast<unsigned char>(s[pos]))) {
      size_t start = pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos])))
        ++pos;
      return constant(std::strtoll(s.substr(start, pos - start).c_str(), nullptr, 10));
    }
    failed = true;
    return "";
  }
  std::string term() {
    std::string v = primary();
    while (!failed) {
      skip();
      if (pos < s.size() && s[pos] == '*') {
        ++pos;
        v = binary("arith.muli", v, primary());
      } else {
        break;
      }
    }
    return v;
  }
  std::string expr() {
    std::string v = term();
    while (!failed) {
      skip();
      if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
        char c = s[pos++];
        v = binary(c == '+' ? "arith.addi" : "arith.subi", v, term());
      } else {
        break;
      }
    }
    return v;
  }
};

TransformStatus passLowerAffine(PassCtx &ctx, OpId target, const PassOptions &) {
  for (OpId id : opsNamed(ctx.module, target, "affine.apply")) {
    const Operation *op = ctx.rewriter.find(id);
    if (!op)
      continue;
    AffineCodegen cg{ctx.module, op->operands, {}, op->attr("expr")->asStr()};
    std::string result = cg.expr();
    cg.skip();
    if (cg.failed || cg.pos != cg.s.size())
      return TransformStatus::silenceable("malformed affine expression");
    std::map<std::string, std::string> fwd{{op->results[0].name, result}};
    std::vector<OpId> event;
    if (!cg.ops.empty())
      event.push_back(cg.ops.back().id);
    ctx.rewriter.replaceWithEvent(id, std::move(cg.ops), std::move(event), fwd);
  }
  return TransformStatus::ok();
}

//===----------------------------------------------------------------------===//
// canonicalize / instrument-accumulate
//===----------------------------------------------------------------------===//

TransformStatus passCanonicalize(PassCtx &ctx, OpId target, const PassOptions &) {
  if (!ctx.patterns)
    return TransformStatus::definite("canonicalize needs a pattern registry");
  GreedyResult r = applyPatternsGreedy(ctx.module, ctx.rewriter, target,
                                       canonicalizePatternNames(), *ctx.patterns,
                                       ctx.reg);
  if (!r.ok)
    return TransformStatus::definite(r.error);
  return TransformStatus::ok();
}

TransformStatus passInstrumentAccumulate(PassCtx &ctx, OpId target,
                                         const PassOptions &opts) {
  const std::string *opname = opts.get("op");
  if (!opname)
    return TransformStatus::silenceable(
        "instrument-accumulate requires the option op=<name>");
  const OpDefinition *d = ctx.reg.lookup(*opname);
  if (!d)
    return TransformStatus::silenceable("instrument-accumulate: unknown op '" +
                                        *opname + "'");
  if (!d->hasTrait(Trait::Pure) || d->num_results != 1)
    return TransformStatus::silenceable(
        "instrument-accumulate targets pure single-result ops");
  for (OpId id : opsNamed(ctx.module, target, *opname)) {
    const Operation *op = ctx.rewriter.find(id);
    if (!op || op->hasAttr("instrumented"))
      continue;
    // Duplicate the accumulation next to the original, tagged for later
    // collection; semantics are unchanged.
    Operation clone = *op;
    clone.id = ctx.module.newOpId();
    clone.results[0].name = ctx.module.freshValueName();
    clone.attrs["instrumented"] = AttrValue::makeBool(true);
    ctx.rewriter.insertAfter(id, std::move(clone));
  }
  return TransformStatus::ok();
}

} // namespace

void registerStandardPasses(PassRegistry &reg) {
  reg.add({"convert-scf-to-cf",
           sig("scf.*", "cf.br, cf.cond_br, arith.addi, arith.cmpi, "
                        "arith.index_cast, arith.constant, "
                        "builtin.unrealized_conversion_cast"),
           passScfToCf});
  reg.add({"convert-arith-to-llvmlite",
           sig("arith.*", "llvmlite.add, llvmlite.mul, llvmlite.icmp, "
                          "llvmlite.constant, builtin.unrealized_conversion_cast"),
           passArithToLlvmlite});
  reg.add({"convert-cf-to-llvmlite",
           sig("cf.*", "llvmlite.br, llvmlite.cond_br, "
                       "builtin.unrealized_conversion_cast"),
           passCfToLlvmlite});
  reg.add({"convert-func-to-llvmlite",
           sig("func.*", "llvmlite.func, llvmlite.call, llvmlite.return, "
                         "llvmlite.undef, builtin.unrealized_conversion_cast"),
           passFuncToLlvmlite});
  reg.add({"expand-strided-metadata",
           sig("memref.*",
               "memref.subview.constr, memref.extract_strided_metadata.constr, "
               "memref.extract_aligned_pointer_as_index.constr, "
               "memref.reinterpret_cast.constr, memref.load, memref.store, "
               "memref.alloc, affine.apply, builtin.unrealized_conversion_cast"),
           passExpandStridedMetadata});
  reg.add({"finalize-memref-to-llvmlite",
           sig("memref.subview.constr, memref.extract_strided_metadata.constr, "
               "memref.extract_aligned_pointer_as_index.constr, "
               "memref.reinterpret_cast.constr, memref.load, memref.store, "
               "memref.alloc",
               "llvmlite.add, llvmlite.mul, llvmlite.constant, llvmlite.load, "
               "llvmlite.store, llvmlite.alloca, llvmlite.gep, "
               "llvmlite.ptrtoint, builtin.unrealized_conversion_cast"),
           passFinalizeMemref});
  reg.add({"reconcile-unrealized-casts",
           sig("builtin.unrealized_conversion_cast", ""), passReconcileCasts});
  reg.add({"lower-affine",
           sig("affine.*", "arith.addi, arith.muli, arith.subi, arith.constant"),
           passLowerAffine});
  reg.add({"canonicalize", sig("", "arith.constant"), passCanonicalize});
  reg.add({"instrument-accumulate", sig("", ""), passInstrumentAccumulate});
}

//===----------------------------------------------------------------------===//
// Pass-facing transform ops
//===----------------------------------------------------------------------===//

namespace {

TransformStatus applyRegisteredPassTransform(InterpCtx &ctx, const Operation &top) {
  const AttrValue *pass_attr = top.attr("pass");
  if (!pass_attr || pass_attr->kind != AttrValue::Kind::Str)
    return TransformStatus::definite(
        "apply_registered_pass requires a string 'pass' attribute");
  const Pass *pass = ctx.passes ? ctx.passes->lookup(pass_attr->asStr()) : nullptr;
  if (!pass)
    return TransformStatus::definite("unknown pass '" + pass_attr->asStr() + "'");
  PassOptions options;
  if (const AttrValue *o = top.attr("options")) {
    auto parsed = PassOptions::parse(o->asStr());
    if (!parsed)
      return TransformStatus::definite("malformed pass options '" + o->asStr() +
                                       "'");
    options = std::move(*parsed);
  }

  if (ctx.check_dynamic && ctx.check_sink && ctx.constraints)
    for (auto &d : checkDynamic(ctx.payload, pass->signature, CheckStage::Before,
                                ctx.payload_reg, *ctx.constraints))
      ctx.check_sink->push_back(d);

  // Track the target roots across events so the result handle follows
  // replacements performed by the pass.
  std::vector<OpId> roots = ctx.operand_ops.at(0);
  size_t mark = ctx.rewriter.listenerMark();
  ctx.rewriter.addListener([&roots](const RewriteEvent &ev) {
    for (auto &r : roots) {
      if (r != ev.old_op)
        continue;
      if (ev.kind == RewriteEvent::Kind::Replaced && !ev.new_ops.empty())
        r = ev.new_ops[0];
      else
        r = 0;
    }
  });
  PassCtx pctx{ctx.payload, ctx.rewriter, ctx.payload_reg, ctx.patterns};
  TransformStatus status = TransformStatus::ok();
  for (size_t i = 0; i < roots.size() && status.isOk(); ++i) {
    if (roots[i] == 0)
      continue;
    status = pass->run(pctx, roots[i], options);
  }
  ctx.rewriter.truncateListeners(mark);
  if (!status.isOk())
    return status;

  std::vector<OpId> result;
  for (OpId r : roots)
    if (r != 0 && findOp(ctx.payload, r))
      result.push_back(r);
  ctx.setResultHandle(0, result);

  if (ctx.check_dynamic && ctx.check_sink && ctx.constraints)
    for (auto &d : checkDynamic(ctx.payload, pass->signature, CheckStage::After,
                                ctx.payload_reg, *ctx.constraints))
      ctx.check_sink->push_back(d);
  return TransformStatus::ok();
}

TransformStatus applyPatternsTransform(InterpCtx &ctx, const Operation &top) {
  const AttrValue *pats = top.attr("patterns");
  if (!pats || pats->kind != AttrValue::Kind::StrList)
    return TransformStatus::definite(
        "apply_patterns requires a 'patterns' string list");
  if (!ctx.patterns)
    return TransformStatus::definite("no pattern registry configured");
  for (OpId root : ctx.operand_ops.at(0)) {
    GreedyResult r = applyPatternsGreedy(ctx.payload, ctx.rewriter, root,
                                         pats->asStrList(), *ctx.patterns,
                                         ctx.payload_reg);
    if (!r.ok)
      return TransformStatus::definite(r.error);
  }
  return TransformStatus::ok();
}

} // namespace

void registerPassTransforms(TransformRegistry &treg) {
  {
    TransformOpInfo i;
    i.name = "transform.apply_registered_pass";
    i.operands.push_back({false, true, {}});
    i.results.push_back({false, {}});
    // The effective signature comes from the named pass; resolved by the
    // static checker through the signature resolver.
    i.condition = sig("", "");
    i.opaque_condition = true;
    i.invalidation = InvalidationScope::OperandOnly;
    i.apply = applyRegisteredPassTransform;
    i.verifier = [](const Operation &op, DiagnosticList &diags) {
      if (!op.hasAttr("pass"))
        diags.error("apply_registered_pass requires a 'pass' attribute", op.loc);
    };
    treg.registerTransform(std::move(i));
  }
  {
    TransformOpInfo i;
    i.name = "transform.apply_patterns";
    i.operands.push_back({false, false, {}});
    i.condition = sig("", "");
    i.opaque_condition = true; // refined per pattern list by the resolver
    i.invalidation = InvalidationScope::OperandOnly;
    i.apply = applyPatternsTransform;
    i.verifier = [](const Operation &op, DiagnosticList &diags) {
      if (!op.hasAttr("patterns"))
        diags.error("apply_patterns requires a 'patterns' attribute", op.loc);
    };
    treg.registerTransform(std::move(i));
  }
}

//===----------------------------------------------------------------------===//
// Pipeline strings
//===----------------------------------------------------------------------===//

std::optional<std::vector<PipelineEntry>> parsePipeline(const std::string &text,
                                                        std::string *error) {
  auto fail = [&](const std::string &msg) {
    if (error)
      *error = msg;
    return std::nullopt;
  };
  std::vector<PipelineEntry> out;
  size_t pos = 0;
  auto skip = [&] {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\n' ||
                                 text[pos] == '\t'))
      ++pos;
  };
  auto ident = [&] {
    std::string s;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) ||
            text[pos] == '-' || text[pos] == '_' || text[pos] == '.'))
      s += text[pos++];
    return s;
  };

  std::function<bool(const std::string &)> parseList =
      [&](const std::string &anchor) -> bool {
    while (true) {
      skip();
      if (pos >= text.size())
        return true;
      std::string name = ident();
      if (name.empty())
        return false;
      skip();
      if (pos < text.size() && text[pos] == '(') {
        // Nested anchor scope.
        if (name != "builtin.module" && name != "func.func")
          return false;
        ++pos;
        if (!parseList(name))
          return false;
        skip();
        if (pos >= text.size() || text[pos] != ')')
          return false;
        ++pos;
      } else {
        PipelineEntry e;
        e.anchor = anchor;
        e.pass = name;
        if (pos < text.size() && text[pos] == '{') {
          size_t close = text.find('}', pos);
          if (close == std::string::npos)
            return false;
          auto opts = PassOptions::parse(text.substr(pos + 1, close - pos - 1));
          if (!opts)
            return false;
          e.options = std::move(*opts);
          pos = close + 1;
        }
        out.push_back(std::move(e));
      }
      skip();
      if (pos < text.size() && text[pos] == ',') {
        ++pos;
        continue;
      }
      return true;
    }
  };

  skip();
  if (text.compare(pos, 15, "builtin.module(") == 0) {
    pos += 15;
    if (!parseList("builtin.module"))
      return fail("malformed pipeline string");
    skip();
    if (pos >= text.size() || text[pos] != ')')
      return fail("unbalanced parentheses in pipeline");
    ++pos;
    skip();
    if (pos != text.size())
      return fail("trailing characters after pipeline");
  } else if (pos == text.size()) {
    // Empty pipeline.
  } else {
    if (!parseList("builtin.module"))
      return fail("malformed pipeline string");
  }
  return out;
}

TransformStatus runPipelineDirect(Module &m, const std::vector<PipelineEntry> &pipe,
                                  const PassRegistry &passes,
                                  const DialectRegistry &reg,
                                  const PatternRegistry *patterns) {
  Rewriter rewriter(m);
  PassCtx ctx{m, rewriter, reg, patterns};
  for (const auto &entry : pipe) {
    const Pass *pass = passes.lookup(entry.pass);
    if (!pass)
      return TransformStatus::definite("unknown pass '" + entry.pass + "'");
    std::vector<OpId> targets;
    if (entry.anchor == "builtin.module") {
      targets.push_back(m.root.id);
    } else {
      walk(m.root, [&](const Operation &op) {
        if (op.name == entry.anchor)
          targets.push_back(op.id);
        return true;
      });
    }
    for (OpId t : targets) {
      if (!findOp(m, t))
        continue;
      TransformStatus s = pass->run(ctx, t, entry.options);
      if (!s.isOk())
        return s;
    }
  }
  return TransformStatus::ok();
}

} // namespace tfc

