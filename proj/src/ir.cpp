//===- ir.cpp - Core IR data structures -----------------------------------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "tfc/ir.hpp"

#include <cstdio>
#include <sstream>

namespace tfc {

std::string severityName(Severity s) {
  switch (s) {
  case Severity::Error:
    return "error";
  case Severity::Warning:
    return "warning";
  case Severity::Silenceable:
    return "silenceable";
  case Severity::Definite:
    return "definite";
  }
  return "error";
}

std::string formatDiagnostic(const Diagnostic &d) {
  std::ostringstream os;
  os << (d.file.empty() ? "<memory>" : d.file) << ":" << d.loc.line << ":"
     << d.loc.col << ": " << severityName(d.severity) << ": " << d.message;
  return os.str();
}

std::string DiagnosticList::str() const {
  std::ostringstream os;
  for (const auto &d : items)
    os << formatDiagnostic(d) << "\n";
  return os.str();
}

//===----------------------------------------------------------------------===//
// Types
//===----------------------------------------------------------------------===//

Type Type::memref(std::vector<std::int64_t> shape, TypeKind elem) {
  Type t;
  t.kind = TypeKind::MemRef;
  t.elem = elem;
  t.shape = std::move(shape);
  return t;
}

Type Type::memrefLayout(std::vector<std::int64_t> shape, TypeKind elem,
                        std::int64_t offset,
                        std::vector<std::int64_t> strides) {
  Type t = memref(std::move(shape), elem);
  t.explicit_layout = true;
  t.layout_offset = offset;
  t.layout_strides = std::move(strides);
  return t;
}

Type Type::handle(std::vector<std::string> atoms) {
  Type t;
  t.kind = TypeKind::Handle;
  t.handle_atoms = std::move(atoms);
  return t;
}

std::vector<std::int64_t> Type::contiguousStrides() const {
  std::vector<std::int64_t> strides(shape.size(), 1);
  for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i)
    strides[i] = strides[i + 1] * shape[i + 1];
  return strides;
}

static std::string dimStr(std::int64_t d) {
  return d == kDynamic ? "?" : std::to_string(d);
}

std::string Type::str() const {
  switch (kind) {
  case TypeKind::None:
    return "none";
  case TypeKind::Index:
    return "index";
  case TypeKind::I1:
    return "i1";
  case TypeKind::I64:
    return "i64";
  case TypeKind::F64:
    return "f64";
  case TypeKind::Param:
    return "!param";
  case TypeKind::Handle: {
    if (handle_atoms.empty())
      return "!any";
    std::string s = "!op<";
    for (size_t i = 0; i < handle_atoms.size(); ++i) {
      if (i)
        s += ", ";
      s += handle_atoms[i];
    }
    return s + ">";
  }
  case TypeKind::MemRef: {
    std::string s = "memref<";
    for (auto d : shape) {
      s += dimStr(d);
      s += "x";
    }
    s += elem == TypeKind::F64 ? "f64" : (elem == TypeKind::I64 ? "i64" : "index");
    if (explicit_layout) {
      s += ", offset: " + dimStr(layout_offset) + ", strides: [";
      for (size_t i = 0; i < layout_strides.size(); ++i) {
        if (i)
          s += ", ";
        s += dimStr(layout_strides[i]);
      }
      s += "]";
    }
    return s + ">";
  }
  }
  return "none";
}

//===----------------------------------------------------------------------===//
// Attributes
//===----------------------------------------------------------------------===//

AttrValue AttrValue::makeInt(std::int64_t v) {
  AttrValue a;
  a.kind = Kind::Int;
  a.value = v;
  return a;
}
AttrValue AttrValue::makeFloat(double v) {
  AttrValue a;
  a.kind = Kind::Float;
  a.value = v;
  return a;
}
AttrValue AttrValue::makeBool(bool v) {
  AttrValue a;
  a.kind = Kind::Bool;
  a.value = v;
  return a;
}
AttrValue AttrValue::makeStr(std::string v) {
  AttrValue a;
  a.kind = Kind::Str;
  a.value = std::move(v);
  return a;
}
AttrValue AttrValue::makeSym(std::string v) {
  AttrValue a;
  a.kind = Kind::Sym;
  a.value = std::move(v);
  return a;
}
AttrValue AttrValue::makeIntList(std::vector<std::int64_t> v) {
  AttrValue a;
  a.kind = Kind::IntList;
  a.value = std::move(v);
  return a;
}
AttrValue AttrValue::makeStrList(std::vector<std::string> v) {
  AttrValue a;
  a.kind = Kind::StrList;
  a.value = std::move(v);
  return a;
}

std::string formatFloat(double v) {
  char buf[64];
  if (v == static_cast<std::int64_t>(v) && std::abs(v) < 1e15) {
    std::snprintf(buf, sizeof(buf), "%.1f", v);
  } else {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
  }
  return buf;
}

std::string AttrValue::str() const {
  std::ostringstream os;
  switch (kind) {
  case Kind::Int:
    os << asInt();
    break;
  case Kind::Float:
    os << formatFloat(asFloat());
    break;
  case Kind::Bool:
    os << (asBool() ? "true" : "false");
    break;
  case Kind::Str:
    os << '"' << asStr() << '"';
    break;
  case Kind::Sym:
    os << '@' << asStr();
    break;
  case Kind::IntList: {
    os << '[';
    const auto &xs = asIntList();
    for (size_t i = 0; i < xs.size(); ++i) {
      if (i)
        os << ", ";
      os << dimStr(xs[i]);
    }
    os << ']';
    break;
  }
  case Kind::StrList: {
    os << '[';
    const auto &xs = asStrList();
    for (size_t i = 0; i < xs.size(); ++i) {
      if (i)
        os << ", ";
      os << '"' << xs[i] << '"';
    }
    os << ']';
    break;
  }
  }
  return os.str();
}

//===----------------------------------------------------------------------===//
// Traversal
//===----------------------------------------------------------------------===//

bool walk(const Operation &op, const std::function<bool(const Operation &)> &fn) {
  if (!fn(op))
    return false;
  for (const auto &r : op.regions)
    for (const auto &b : r.blocks)
      for (const auto &o : b.ops)
        if (!walk(o, fn))
          return false;
  return true;
}

bool walk(Operation &op, const std::function<bool(Operation &)> &fn) {
  if (!fn(op))
    return false;
  for (auto &r : op.regions)
    for (auto &b : r.blocks)
      for (auto &o : b.ops)
        if (!walk(o, fn))
          return false;
  return true;
}

Operation *findOp(Module &m, OpId id) {
  Operation *found = nullptr;
  walk(m.root, [&](Operation &op) {
    if (op.id == id) {
      found = &op;
      return false;
    }
    return true;
  });
  return found;
}

const Operation *findOp(const Module &m, OpId id) {
  return findOp(const_cast<Module &>(m), id);
}

static Operation *findParentIn(Operation &op, OpId id) {
  for (auto &r : op.regions)
    for (auto &b : r.blocks)
      for (auto &o : b.ops) {
        if (o.id == id)
          return &op;
        if (Operation *p = findParentIn(o, id))
          return p;
      }
  return nullptr;
}

Operation *findParent(Module &m, OpId id) { return findParentIn(m.root, id); }

const Operation *findParent(const Module &m, OpId id) {
  return findParentIn(const_cast<Module &>(m).root, id);
}

std::vector<OpId> subtreeIds(const Operation &op) {
  std::vector<OpId> ids;
  walk(op, [&](const Operation &o) {
    ids.push_back(o.id);
    return true;
  });
  return ids;
}

bool contains(const Operation &maybe_ancestor, OpId id) {
  bool found = false;
  walk(maybe_ancestor, [&](const Operation &o) {
    if (o.id == id) {
      found = true;
      return false;
    }
    return true;
  });
  return found;
}

//===----------------------------------------------------------------------===//
// Structural equality
//===----------------------------------------------------------------------===//

bool structurallyEqual(const Operation &a, const Operation &b) {
  if (a.name != b.name || a.operands != b.operands || a.results != b.results ||
      a.successors != b.successors || a.attrs != b.attrs ||
      a.segments != b.segments || a.regions.size() != b.regions.size())
    return false;
  for (size_t r = 0; r < a.regions.size(); ++r) {
    const auto &ra = a.regions[r], &rb = b.regions[r];
    if (ra.blocks.size() != rb.blocks.size())
      return false;
    for (size_t bi = 0; bi < ra.blocks.size(); ++bi) {
      const auto &ba = ra.blocks[bi], &bb = rb.blocks[bi];
      if (ba.label != bb.label || ba.args != bb.args ||
          ba.ops.size() != bb.ops.size())
        return false;
      for (size_t oi = 0; oi < ba.ops.size(); ++oi)
        if (!structurallyEqual(ba.ops[oi], bb.ops[oi]))
          return false;
    }
  }
  return true;
}

bool structurallyEqual(const Module &a, const Module &b) {
  return structurallyEqual(a.root, b.root);
}

//===----------------------------------------------------------------------===//
// Cloning
//===----------------------------------------------------------------------===//

static void cloneInto(Operation &op, Module &m,
                      std::map<std::string, std::string> &renames) {
  op.id = m.newOpId();
  for (auto &res : op.results) {
    std::string fresh = m.freshValueName();
    renames[res.name] = fresh;
    res.name = fresh;
  }
  for (auto &r : op.regions)
    for (auto &b : r.blocks) {
      for (auto &arg : b.args) {
        std::string fresh = m.freshValueName();
        renames[arg.name] = fresh;
        arg.name = fresh;
      }
      for (auto &o : b.ops)
        cloneInto(o, m, renames);
    }
}

Operation cloneWithFreshNames(const Operation &op, Module &m,
                              std::map<std::string, std::string> &renames) {
  Operation copy = op;
  cloneInto(copy, m, renames);
  remapUses(copy, renames);
  return copy;
}

void remapUses(Operation &op, const std::map<std::string, std::string> &renames) {
  for (auto &use : op.operands) {
    auto it = renames.find(use);
    if (it != renames.end())
      use = it->second;
  }
  for (auto &r : op.regions)
    for (auto &b : r.blocks)
      for (auto &o : b.ops)
        remapUses(o, renames);
}

std::map<std::string, OpId> collectDefs(const Operation &root) {
  std::map<std::string, OpId> defs;
  walk(root, [&](const Operation &op) {
    for (const auto &res : op.results)
      defs[res.name] = op.id;
    for (const auto &r : op.regions)
      for (const auto &b : r.blocks)
        for (const auto &arg : b.args)
          defs[arg.name] = op.id;
    return true;
  });
  return defs;
}

} // namespace tfc
