//===- dialects.cpp - Op registry, op sets, and the module verifier -------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "tfc/dialects.hpp"
#include "tfc/text.hpp"

#include <algorithm>
#include <sstream>

namespace tfc {

DiagnosticList DialectRegistry::registerDialect(std::vector<OpDefinition> defs) {
  DiagnosticList diags;
  for (auto &d : defs) {
    if (defs_.count(d.name)) {
      diags.error("duplicate op definition '" + d.name + "'");
      continue;
    }
    defs_.emplace(d.name, std::move(d));
  }
  return diags;
}

const OpDefinition *DialectRegistry::lookup(const std::string &name) const {
  auto it = defs_.find(name);
  return it == defs_.end() ? nullptr : &it->second;
}

std::vector<std::string> DialectRegistry::opsWithTrait(Trait t) const {
  std::vector<std::string> names;
  for (const auto &[name, def] : defs_)
    if (def.hasTrait(t))
      names.push_back(name);
  return names;
}

//===----------------------------------------------------------------------===//
// Built-in dialects
//===----------------------------------------------------------------------===//

namespace {

OpDefinition def(std::string name, int operands, int results, ResultRule rule,
                 std::set<Trait> traits = {}) {
  OpDefinition d;
  d.name = std::move(name);
  d.num_operands = operands;
  d.num_results = results;
  d.result_rule = rule;
  d.traits = std::move(traits);
  return d;
}

void verifyCmpPredicate(const Operation &op, DiagnosticList &diags) {
  static const std::set<std::string> kPreds = {"eq", "ne", "slt", "sle", "sgt", "sge"};
  const AttrValue *p = op.attr("predicate");
  if (!p || p->kind != AttrValue::Kind::Str || !kPreds.count(p->asStr()))
    diags.error("'" + op.name + "' needs a predicate attr in {eq, ne, slt, sle, sgt, sge}",
                op.loc);
}

// static_offsets/sizes/strides sentinel counts must agree with the dynamic
// operand group cardinalities.
void verifyStridedAttrs(const Operation &op, DiagnosticList &diags) {
  if (!op.segments || op.segments->size() != 4)
    return; // arity diagnostics already emitted
  auto countDynamic = [](const AttrValue &a) {
    std::int64_t n = 0;
    for (auto v : a.asIntList())
      if (v == kDynamic)
        ++n;
    return n;
  };
  const char *keys[3] = {"static_offsets", "static_sizes", "static_strides"};
  for (int g = 0; g < 3; ++g) {
    const AttrValue *a = op.attr(keys[g]);
    if (!a || a->kind != AttrValue::Kind::IntList)
      continue;
    if (countDynamic(*a) != (*op.segments)[g + 1])
      diags.error("'" + op.name + "': dynamic entries of " + keys[g] +
                      " disagree with operand group size",
                  op.loc);
  }
}

} // namespace

void registerBuiltinDialects(DialectRegistry &reg) {
  std::vector<OpDefinition> defs;

  // builtin
  {
    OpDefinition m = def("builtin.module", 0, 0, ResultRule::None);
    m.num_regions = 1;
    defs.push_back(m);
    defs.push_back(def("builtin.unrealized_conversion_cast", 1, 1,
                       ResultRule::FromClause, {Trait::Pure}));
  }

  // func
  {
    OpDefinition f = def("func.func", 0, 0, ResultRule::None);
    f.num_regions = 1;
    f.multi_block = true;
    f.symbol_attr = "sym_name";
    f.required_attrs = {"sym_name"};
    defs.push_back(f);

    OpDefinition call = def("func.call", 0, 0, ResultRule::FromClause);
    call.variadic = true;
    call.variadic_results = true;
    call.symbol_attr = "callee";
    call.required_attrs = {"callee"};
    defs.push_back(call);

    OpDefinition ret = def("func.return", 0, 0, ResultRule::None, {Trait::Terminator});
    ret.variadic = true;
    defs.push_back(ret);
  }

  // scf
  {
    OpDefinition f = def("scf.for", 3, 0, ResultRule::None, {Trait::LoopLike});
    f.num_regions = 1;
    f.verifier = [](const Operation &op, DiagnosticList &diags) {
      if (op.regions.size() == 1 && op.regions[0].blocks.size() == 1) {
        const Block &b = op.regions[0].blocks[0];
        if (b.args.size() != 1 || b.args[0].type.kind != TypeKind::Index)
          diags.error("scf.for body must take exactly one index argument", op.loc);
        if (b.ops.empty() || b.ops.back().name != "scf.yield")
          diags.error("scf.for body must end with scf.yield", op.loc);
      }
    };
    defs.push_back(f);

    OpDefinition fa = def("scf.forall", 0, 0, ResultRule::None, {Trait::LoopLike});
    fa.variadic = true;
    fa.num_regions = 1;
    fa.verifier = [](const Operation &op, DiagnosticList &diags) {
      if (op.regions.size() == 1 && op.regions[0].blocks.size() == 1) {
        const Block &b = op.regions[0].blocks[0];
        if (b.args.size() != op.operands.size())
          diags.error("scf.forall takes one upper bound per induction variable", op.loc);
        if (b.ops.empty() || b.ops.back().name != "scf.yield")
          diags.error("scf.forall body must end with scf.yield", op.loc);
      }
    };
    defs.push_back(fa);

    OpDefinition si = def("scf.if", 1, 0, ResultRule::None);
    si.num_regions = 2;
    si.verifier = [](const Operation &op, DiagnosticList &diags) {
      for (const auto &r : op.regions)
        for (const auto &b : r.blocks)
          if (b.ops.empty() || b.ops.back().name != "scf.yield")
            diags.error("scf.if regions must end with scf.yield", op.loc);
    };
    defs.push_back(si);

    OpDefinition y = def("scf.yield", 0, 0, ResultRule::None, {Trait::Terminator});
    y.variadic = true;
    defs.push_back(y);
  }

  // cf
  {
    OpDefinition br = def("cf.br", 0, 0, ResultRule::None, {Trait::Terminator});
    br.variadic = true;
    br.num_successors = 1;
    defs.push_back(br);

    OpDefinition cbr = def("cf.cond_br", 1, 0, ResultRule::None, {Trait::Terminator});
    cbr.operand_groups = {"cond", "true_args", "false_args"};
    cbr.num_successors = 2;
    defs.push_back(cbr);
  }

  // arith
  {
    OpDefinition c = def("arith.constant", 0, 1, ResultRule::FromClause, {Trait::Pure});
    c.required_attrs = {"value"};
    defs.push_back(c);
    for (const char *n : {"arith.addi", "arith.muli", "arith.subi"})
      defs.push_back(def(n, 2, 1, ResultRule::SameAsFirstOperand, {Trait::Pure}));
    {
      OpDefinition cmp = def("arith.cmpi", 2, 1, ResultRule::I1, {Trait::Pure});
      cmp.required_attrs = {"predicate"};
      cmp.verifier = verifyCmpPredicate;
      defs.push_back(cmp);
    }
    defs.push_back(def("arith.index_cast", 1, 1, ResultRule::FromClause, {Trait::Pure}));
    for (const char *n : {"arith.addf", "arith.mulf"})
      defs.push_back(def(n, 2, 1, ResultRule::SameAsFirstOperand, {Trait::Pure}));
  }

  // affine
  {
    OpDefinition a = def("affine.apply", 0, 1, ResultRule::Index, {Trait::Pure});
    a.variadic = true;
    a.required_attrs = {"expr"};
    defs.push_back(a);
  }

  // memref
  {
    OpDefinition alloc = def("memref.alloc", 0, 1, ResultRule::FromClause,
                             {Trait::Allocating});
    defs.push_back(alloc);

    OpDefinition load = def("memref.load", 1, 1, ResultRule::ElementOfMemRef,
                            {Trait::MemoryRead});
    load.variadic = true; // memref + rank indices
    defs.push_back(load);

    OpDefinition store = def("memref.store", 2, 0, ResultRule::None,
                             {Trait::MemoryWrite});
    store.variadic = true; // value, memref, rank indices
    defs.push_back(store);

    OpDefinition sub = def("memref.subview", 0, 1, ResultRule::FromClause, {Trait::Pure});
    sub.operand_groups = {"source", "offsets", "sizes", "strides"};
    sub.required_attrs = {"static_offsets", "static_sizes", "static_strides"};
    sub.verifier = verifyStridedAttrs;
    defs.push_back(sub);

    OpDefinition esm = def("memref.extract_strided_metadata", 1, 0,
                           ResultRule::FromClause, {Trait::Pure});
    esm.variadic_results = true; // base, offset, sizes..., strides...
    defs.push_back(esm);

    defs.push_back(def("memref.extract_aligned_pointer_as_index", 1, 1,
                       ResultRule::Index, {Trait::Pure}));

    OpDefinition rc = def("memref.reinterpret_cast", 0, 1, ResultRule::FromClause,
                          {Trait::Pure});
    rc.operand_groups = {"source", "offsets", "sizes", "strides"};
    rc.required_attrs = {"static_offsets", "static_sizes", "static_strides"};
    rc.verifier = verifyStridedAttrs;
    defs.push_back(rc);
  }

  // llvmlite: a deliberately small LLVM-shaped target dialect with flat
  // pointers represented as i64 element addresses.
  {
    OpDefinition f = def("llvmlite.func", 0, 0, ResultRule::None);
    f.num_regions = 1;
    f.multi_block = true;
    f.symbol_attr = "sym_name";
    f.required_attrs = {"sym_name"};
    defs.push_back(f);

    OpDefinition br = def("llvmlite.br", 0, 0, ResultRule::None, {Trait::Terminator});
    br.variadic = true;
    br.num_successors = 1;
    defs.push_back(br);

    OpDefinition cbr = def("llvmlite.cond_br", 1, 0, ResultRule::None, {Trait::Terminator});
    cbr.operand_groups = {"cond", "true_args", "false_args"};
    cbr.num_successors = 2;
    defs.push_back(cbr);

    OpDefinition call = def("llvmlite.call", 0, 0, ResultRule::FromClause);
    call.variadic = true;
    call.variadic_results = true;
    call.symbol_attr = "callee";
    call.required_attrs = {"callee"};
    defs.push_back(call);

    OpDefinition ret = def("llvmlite.return", 0, 0, ResultRule::None, {Trait::Terminator});
    ret.variadic = true;
    defs.push_back(ret);

    for (const char *n : {"llvmlite.add", "llvmlite.mul"})
      defs.push_back(def(n, 2, 1, ResultRule::SameAsFirstOperand, {Trait::Pure}));

    OpDefinition icmp = def("llvmlite.icmp", 2, 1, ResultRule::I1, {Trait::Pure});
    icmp.required_attrs = {"predicate"};
    icmp.verifier = verifyCmpPredicate;
    defs.push_back(icmp);

    defs.push_back(def("llvmlite.gep", 2, 1, ResultRule::SameAsFirstOperand, {Trait::Pure}));
    defs.push_back(def("llvmlite.load", 1, 1, ResultRule::FromClause, {Trait::MemoryRead}));
    defs.push_back(def("llvmlite.store", 2, 0, ResultRule::None, {Trait::MemoryWrite}));

    OpDefinition c = def("llvmlite.constant", 0, 1, ResultRule::FromClause, {Trait::Pure});
    c.required_attrs = {"value"};
    defs.push_back(c);

    OpDefinition alloca = def("llvmlite.alloca", 0, 1, ResultRule::FromClause,
                              {Trait::Allocating});
    alloca.required_attrs = {"size"};
    defs.push_back(alloca);

    defs.push_back(def("llvmlite.ptrtoint", 1, 1, ResultRule::FromClause, {Trait::Pure}));
    defs.push_back(def("llvmlite.undef", 0, 1, ResultRule::FromClause, {Trait::Pure}));
  }

  // lib: microkernel call installed by transform.to_library. Operand layout:
  // A, B, C, shared prefix indices, then the i/j/k base indices.
  {
    OpDefinition k = def("lib.call_kernel", 0, 0, ResultRule::None,
                         {Trait::MemoryRead, Trait::MemoryWrite});
    k.operand_groups = {"a", "b", "c", "prefix", "i_base", "j_base", "k_base"};
    k.required_attrs = {"kernel", "m", "n", "k"};
    defs.push_back(k);
  }

  reg.registerDialect(std::move(defs));
}

//===----------------------------------------------------------------------===//
// Plugin dialects
//===----------------------------------------------------------------------===//

DiagnosticList loadPluginDialect(DialectRegistry &reg, const std::string &text,
                                 const std::string &filename) {
  DiagnosticList diags;
  DialectRegistry meta;
  OpDefinition od;
  od.name = "opdef";
  od.required_attrs = {"name"};
  meta.registerDialect({od});

  ParseResult parsed = parseModuleText(text, meta, filename);
  if (!parsed.module) {
    diags.items = parsed.diags.items;
    return diags;
  }
  std::vector<OpDefinition> defs;
  walk(parsed.module->root, [&](const Operation &op) {
    if (op.name != "opdef") {
      if (op.name != "builtin.module")
        diags.error("expected 'opdef' entries", op.loc, filename);
      return true;
    }
    OpDefinition d;
    const AttrValue *name = op.attr("name");
    if (!name || name->kind != AttrValue::Kind::Str) {
      diags.error("opdef requires a string 'name'", op.loc, filename);
      return true;
    }
    d.name = name->asStr();
    if (const AttrValue *a = op.attr("operands"))
      d.num_operands = static_cast<int>(a->asInt());
    if (const AttrValue *a = op.attr("results"))
      d.num_results = static_cast<int>(a->asInt());
    if (const AttrValue *a = op.attr("regions"))
      d.num_regions = static_cast<int>(a->asInt());
    if (const AttrValue *a = op.attr("variadic"))
      d.variadic = a->asBool();
    if (const AttrValue *a = op.attr("result_type")) {
      const std::string &r = a->asStr();
      if (r == "clause")
        d.result_rule = ResultRule::FromClause;
      else if (r == "same_as_first")
        d.result_rule = ResultRule::SameAsFirstOperand;
      else if (r == "index")
        d.result_rule = ResultRule::Index;
      else if (r == "i1")
        d.result_rule = ResultRule::I1;
      else if (r == "element_of_memref")
        d.result_rule = ResultRule::ElementOfMemRef;
      else
        diags.error("unknown result_type '" + r + "'", op.loc, filename);
    } else if (d.num_results > 0) {
      d.result_rule = ResultRule::FromClause;
    }
    if (const AttrValue *a = op.attr("traits"))
      for (const auto &t : a->asStrList()) {
        if (t == "pure")
          d.traits.insert(Trait::Pure);
        else if (t == "loop_like")
          d.traits.insert(Trait::LoopLike);
        else if (t == "terminator")
          d.traits.insert(Trait::Terminator);
        else if (t == "allocating")
          d.traits.insert(Trait::Allocating);
        else if (t == "memory_read")
          d.traits.insert(Trait::MemoryRead);
        else if (t == "memory_write")
          d.traits.insert(Trait::MemoryWrite);
        else
          diags.error("unknown trait '" + t + "'", op.loc, filename);
      }
    defs.push_back(std::move(d));
    return true;
  });
  DiagnosticList reg_diags = reg.registerDialect(std::move(defs));
  for (auto &d : reg_diags.items)
    diags.items.push_back(d);
  return diags;
}

//===----------------------------------------------------------------------===//
// Op-set expressions
//===----------------------------------------------------------------------===//

OpSetExpr OpSetExpr::parse(const std::string &text) {
  OpSetExpr e;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      e.atoms.push_back(cur);
      cur.clear();
    }
  };
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '{' || c == '}' || c == '\t')
      flush();
    else
      cur += c;
  }
  flush();
  return e;
}

std::string OpSetExpr::str() const {
  std::string s = "{";
  for (size_t i = 0; i < atoms.size(); ++i) {
    if (i)
      s += ", ";
    s += atoms[i];
  }
  return s + "}";
}

bool isConstrainedAtom(const std::string &atom) {
  return atom.size() > 7 && atom.rfind(".constr") == atom.size() - 7;
}

std::string constrainedBase(const std::string &atom) {
  if (isConstrainedAtom(atom))
    return atom.substr(0, atom.size() - 7);
  return atom;
}

static std::optional<Trait> traitByName(const std::string &name) {
  if (name == "pure")
    return Trait::Pure;
  if (name == "loop_like")
    return Trait::LoopLike;
  if (name == "terminator")
    return Trait::Terminator;
  if (name == "allocating")
    return Trait::Allocating;
  if (name == "memory_read")
    return Trait::MemoryRead;
  if (name == "memory_write")
    return Trait::MemoryWrite;
  return std::nullopt;
}

static bool isWildcard(const std::string &atom) {
  return atom.size() > 2 && atom.rfind(".*") == atom.size() - 2;
}

static bool atomMatchesName(const std::string &atom, const std::string &opname,
                            const DialectRegistry &reg, DiagnosticList *diags) {
  if (atom == "any_op" || atom == "*")
    return true;
  if (atom.rfind("interface:", 0) == 0) {
    auto t = traitByName(atom.substr(10));
    if (!t) {
      if (diags)
        diags->error("unresolvable op-set atom '" + atom + "'");
      return false;
    }
    const OpDefinition *d = reg.lookup(opname);
    return d && d->hasTrait(*t);
  }
  if (isWildcard(atom)) {
    std::string prefix = atom.substr(0, atom.size() - 1); // keep the dot
    return opname.rfind(prefix, 0) == 0;
  }
  std::string base = constrainedBase(atom);
  if (diags && !reg.known(base))
    diags->error("unresolvable op-set atom '" + atom + "'");
  // A constrained atom matches by base name only; the structural constraint
  // is checked by the conditions machinery.
  return opname == base;
}

bool opInSet(const std::string &opname, const OpSetExpr &expr,
             const DialectRegistry &reg, DiagnosticList *diags) {
  for (const auto &atom : expr.atoms)
    if (atomMatchesName(atom, opname, reg, diags))
      return true;
  return false;
}

bool atomsIntersect(const std::string &a, const std::string &b,
                    const DialectRegistry &reg) {
  auto expand = [&](const std::string &atom) -> std::vector<std::string> {
    if (atom.rfind("interface:", 0) == 0) {
      if (auto t = traitByName(atom.substr(10)))
        return reg.opsWithTrait(*t);
      return {};
    }
    return {atom};
  };
  auto pairIntersects = [&](const std::string &x, const std::string &y) {
    if (x == "any_op" || y == "any_op" || x == "*" || y == "*")
      return true;
    bool wx = isWildcard(x), wy = isWildcard(y);
    if (wx && wy)
      return x == y;
    if (wx)
      return constrainedBase(y).rfind(x.substr(0, x.size() - 1), 0) == 0;
    if (wy)
      return constrainedBase(x).rfind(y.substr(0, y.size() - 1), 0) == 0;
    // Exact/constrained atoms intersect only when identical: a constrained
    // atom is a refinement and does not stand for its unconstrained base.
    return x == y;
  };
  for (const auto &x : expand(a))
    for (const auto &y : expand(b))
      if (pairIntersects(x, y))
        return true;
  return false;
}

//===----------------------------------------------------------------------===//
// Verifier
//===----------------------------------------------------------------------===//

namespace {

struct VerifyCtx {
  const DialectRegistry &reg;
  DiagnosticList &diags;
  const std::string &file;
  std::map<std::string, Type> value_types;
};

Type typeOf(const VerifyCtx &ctx, const std::string &name) {
  auto it = ctx.value_types.find(name);
  return it == ctx.value_types.end() ? Type::none() : it->second;
}

void typedChecks(VerifyCtx &ctx, const Operation &op) {
  auto err = [&](const std::string &m) { ctx.diags.error(m, op.loc, ctx.file); };
  if (op.name == "scf.for") {
    for (const auto &o : op.operands)
      if (typeOf(ctx, o).kind != TypeKind::Index)
        err("scf.for bounds must be index values");
  } else if (op.name == "scf.if") {
    if (!op.operands.empty() && typeOf(ctx, op.operands[0]).kind != TypeKind::I1)
      err("scf.if condition must be i1");
  } else if (op.name == "memref.load" || op.name == "memref.store") {
    size_t mem_idx = op.name == "memref.load" ? 0 : 1;
    if (op.operands.size() > mem_idx) {
      Type mt = typeOf(ctx, op.operands[mem_idx]);
      if (mt.kind != TypeKind::MemRef) {
        err(op.name + " expects a memref operand");
        return;
      }
      size_t want = mem_idx + 1 + mt.shape.size();
      if (op.operands.size() != want)
        err(op.name + " index count must equal memref rank");
      if (op.name == "memref.store") {
        Type vt = typeOf(ctx, op.operands[0]);
        if (vt.kind != TypeKind::None && vt.kind != mt.elem)
          err("memref.store value type does not match element type");
      }
      if (op.name == "memref.load" && !op.results.empty() &&
          op.results[0].type.kind != mt.elem)
        err("memref.load result type does not match element type");
    }
  } else if (op.name == "arith.addi" || op.name == "arith.muli" ||
             op.name == "arith.subi" || op.name == "arith.cmpi") {
    for (const auto &o : op.operands) {
      Type t = typeOf(ctx, o);
      if (t.kind != TypeKind::None && !t.isIntLike())
        err(op.name + " operates on integer-like values");
    }
  } else if (op.name == "arith.addf" || op.name == "arith.mulf") {
    for (const auto &o : op.operands) {
      Type t = typeOf(ctx, o);
      if (t.kind != TypeKind::None && t.kind != TypeKind::F64)
        err(op.name + " operates on f64 values");
    }
  }
}

// Dominance within one region: blocks are ordered; an operand must be visible
// from an enclosing scope, an earlier block, a block argument, or an earlier
// op in the same block.
void verifyOp(VerifyCtx &ctx, const Operation &op,
              std::vector<std::string> &scope, bool in_multi_block);

void verifyRegionBody(VerifyCtx &ctx, const Operation &op, const Region &region,
                      std::vector<std::string> &scope) {
  const OpDefinition *d = ctx.reg.lookup(op.name);
  bool multi = d && d->multi_block;
  if (!multi && region.blocks.size() > 1)
    ctx.diags.error("'" + op.name + "' region must contain exactly one block",
                    op.loc, ctx.file);

  std::set<std::string> labels;
  for (const auto &b : region.blocks)
    if (!b.label.empty())
      labels.insert(b.label);

  size_t scope_mark = scope.size();
  for (const auto &b : region.blocks) {
    for (const auto &arg : b.args)
      scope.push_back(arg.name);
    for (const auto &o : b.ops) {
      // Operand visibility.
      for (const auto &use : o.operands)
        if (std::find(scope.begin(), scope.end(), use) == scope.end())
          ctx.diags.error("operand '%" + use +
                              "' does not dominate its use in '" + o.name + "'",
                          o.loc, ctx.file);
      // Branch targets must exist in this region.
      for (const auto &succ : o.successors)
        if (!labels.count(succ))
          ctx.diags.error("branch target '^" + succ + "' does not exist", o.loc,
                          ctx.file);
      verifyOp(ctx, o, scope, multi);
      for (const auto &res : o.results)
        scope.push_back(res.name);
    }
    // Terminator discipline for multi-block regions.
    if (multi && !b.ops.empty()) {
      const OpDefinition *td = ctx.reg.lookup(b.ops.back().name);
      if (!td || !td->hasTrait(Trait::Terminator))
        ctx.diags.error("block '^" + b.label + "' must end with a terminator",
                        b.ops.back().loc, ctx.file);
    }
  }
  scope.resize(scope_mark);
}

void verifyOp(VerifyCtx &ctx, const Operation &op,
              std::vector<std::string> &scope, bool /*in_multi_block*/) {
  const OpDefinition *d = ctx.reg.lookup(op.name);
  if (!d) {
    ctx.diags.error("unknown op '" + op.name + "'", op.loc, ctx.file);
    for (const auto &r : op.regions)
      verifyRegionBody(ctx, op, r, scope);
    return;
  }

  // Arity.
  if (!d->operand_groups.empty()) {
    if (!op.segments) {
      ctx.diags.error("'" + op.name + "' requires a segments attribute", op.loc,
                      ctx.file);
    } else {
      if (op.segments->size() != d->operand_groups.size())
        ctx.diags.error("'" + op.name + "' expects " +
                            std::to_string(d->operand_groups.size()) +
                            " operand groups",
                        op.loc, ctx.file);
      std::int64_t sum = 0;
      for (auto s : *op.segments) {
        if (s < 0)
          ctx.diags.error("'" + op.name + "' has a negative segment size", op.loc,
                          ctx.file);
        sum += s;
      }
      if (sum != static_cast<std::int64_t>(op.operands.size()))
        ctx.diags.error("'" + op.name + "' segment sizes sum to " +
                            std::to_string(sum) + " but op has " +
                            std::to_string(op.operands.size()) + " operands",
                        op.loc, ctx.file);
    }
  } else if (d->variadic) {
    if (static_cast<int>(op.operands.size()) < d->num_operands)
      ctx.diags.error("'" + op.name + "' expects at least " +
                          std::to_string(d->num_operands) + " operands",
                      op.loc, ctx.file);
  } else if (static_cast<int>(op.operands.size()) != d->num_operands) {
    ctx.diags.error("'" + op.name + "' expects " + std::to_string(d->num_operands) +
                        " operands, got " + std::to_string(op.operands.size()),
                    op.loc, ctx.file);
  }

  if (!d->variadic_results &&
      static_cast<int>(op.results.size()) != d->num_results)
    ctx.diags.error("'" + op.name + "' expects " + std::to_string(d->num_results) +
                        " results",
                    op.loc, ctx.file);

  if (d->num_regions >= 0 &&
      static_cast<int>(op.regions.size()) != d->num_regions)
    ctx.diags.error("'" + op.name + "' expects " + std::to_string(d->num_regions) +
                        " regions",
                    op.loc, ctx.file);

  if (static_cast<int>(op.successors.size()) != d->num_successors)
    ctx.diags.error("'" + op.name + "' expects " + std::to_string(d->num_successors) +
                        " successors",
                    op.loc, ctx.file);

  for (const auto &key : d->required_attrs)
    if (!op.hasAttr(key))
      ctx.diags.error("'" + op.name + "' requires attribute '" + key + "'", op.loc,
                      ctx.file);

  if (d->verifier)
    d->verifier(op, ctx.diags);
  typedChecks(ctx, op);

  for (const auto &r : op.regions)
    verifyRegionBody(ctx, op, r, scope);
}

} // namespace

DiagnosticList verifyModule(const Module &m, const DialectRegistry &reg) {
  DiagnosticList diags;

  // Value names bound exactly once, module wide.
  std::set<std::string> seen;
  walk(m.root, [&](const Operation &op) {
    auto checkName = [&](const std::string &n, Location loc) {
      if (!seen.insert(n).second)
        diags.error("value '%" + n + "' is bound more than once", loc, m.filename);
    };
    for (const auto &res : op.results)
      checkName(res.name, op.loc);
    for (const auto &r : op.regions)
      for (const auto &b : r.blocks)
        for (const auto &arg : b.args)
          checkName(arg.name, op.loc);
    return true;
  });

  VerifyCtx ctx{reg, diags, m.filename, {}};
  walk(m.root, [&](const Operation &op) {
    for (const auto &res : op.results)
      ctx.value_types[res.name] = res.type;
    for (const auto &r : op.regions)
      for (const auto &b : r.blocks)
        for (const auto &arg : b.args)
          ctx.value_types[arg.name] = arg.type;
    return true;
  });

  std::vector<std::string> scope;
  verifyOp(ctx, m.root, scope, false);
  return diags;
}

std::vector<OpId> matchOps(const Module &m, OpId scope, const OpSetExpr &expr,
                           const DialectRegistry &reg) {
  std::vector<OpId> out;
  const Operation *root = findOp(m, scope);
  if (!root)
    return out;
  walk(*root, [&](const Operation &op) {
    if (opInSet(op.name, expr, reg))
      out.push_back(op.id);
    return true;
  });
  return out;
}

} // namespace tfc
