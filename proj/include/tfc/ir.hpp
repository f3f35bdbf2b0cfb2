//===- ir.hpp - Core IR data structures -----------------------------------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// The in-memory form of both the payload IR and the transform-script IR:
// operations with operands, results, attributes and nested regions. Modules
// are plain values; all structural mutation goes through rewriter.hpp so that
// replace/erase events reach subscribed listeners.
//
//===----------------------------------------------------------------------===//

#ifndef TFC_IR_HPP
#define TFC_IR_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace tfc {

using OpId = std::uint64_t;

// Sentinel for a dynamic dimension / offset / stride. Printed as `?`.
inline constexpr std::int64_t kDynamic = std::numeric_limits<std::int64_t>::min();

struct Location {
  int line = 0;
  int col = 0;
};

enum class Severity { Error, Warning, Silenceable, Definite };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string message;
  Location loc;
  std::string file;
};

std::string severityName(Severity s);
std::string formatDiagnostic(const Diagnostic &d);

struct DiagnosticList {
  std::vector<Diagnostic> items;

  void error(std::string msg, Location loc = {}, std::string file = "") {
    items.push_back({Severity::Error, std::move(msg), loc, std::move(file)});
  }
  void warn(std::string msg, Location loc = {}, std::string file = "") {
    items.push_back({Severity::Warning, std::move(msg), loc, std::move(file)});
  }
  bool hasErrors() const {
    for (const auto &d : items)
      if (d.severity != Severity::Warning)
        return true;
    return false;
  }
  bool empty() const { return items.empty(); }
  std::string str() const;
};

//===----------------------------------------------------------------------===//
// Types
//===----------------------------------------------------------------------===//

enum class TypeKind { None, Index, I1, I64, F64, MemRef, Handle, Param };

struct Type {
  TypeKind kind = TypeKind::None;

  // MemRef payload.
  TypeKind elem = TypeKind::None;
  std::vector<std::int64_t> shape;
  bool explicit_layout = false;
  std::int64_t layout_offset = 0;
  std::vector<std::int64_t> layout_strides;

  // Handle payload: constraint atoms; empty means "any op".
  std::vector<std::string> handle_atoms;

  bool operator==(const Type &) const = default;

  static Type none() { return {}; }
  static Type ofKind(TypeKind k) {
    Type t;
    t.kind = k;
    return t;
  }
  static Type index() { return ofKind(TypeKind::Index); }
  static Type i1() { return ofKind(TypeKind::I1); }
  static Type i64() { return ofKind(TypeKind::I64); }
  static Type f64() { return ofKind(TypeKind::F64); }
  static Type memref(std::vector<std::int64_t> shape, TypeKind elem);
  static Type memrefLayout(std::vector<std::int64_t> shape, TypeKind elem,
                           std::int64_t offset,
                           std::vector<std::int64_t> strides);
  static Type anyHandle() { return ofKind(TypeKind::Handle); }
  static Type handle(std::vector<std::string> atoms);
  static Type param() { return ofKind(TypeKind::Param); }

  bool isIntLike() const {
    return kind == TypeKind::Index || kind == TypeKind::I1 ||
           kind == TypeKind::I64;
  }
  int rank() const { return static_cast<int>(shape.size()); }
  // Row-major contiguous strides for the static shape.
  std::vector<std::int64_t> contiguousStrides() const;
  std::string str() const;
};

//===----------------------------------------------------------------------===//
// Attributes
//===----------------------------------------------------------------------===//

struct AttrValue {
  enum class Kind { Int, Float, Bool, Str, Sym, IntList, StrList };
  Kind kind = Kind::Int;
  std::variant<std::int64_t, double, bool, std::string,
               std::vector<std::int64_t>, std::vector<std::string>>
      value;

  AttrValue() : value(std::int64_t{0}) {}
  static AttrValue makeInt(std::int64_t v);
  static AttrValue makeFloat(double v);
  static AttrValue makeBool(bool v);
  static AttrValue makeStr(std::string v);
  static AttrValue makeSym(std::string v);
  static AttrValue makeIntList(std::vector<std::int64_t> v);
  static AttrValue makeStrList(std::vector<std::string> v);

  bool operator==(const AttrValue &) const = default;

  std::int64_t asInt() const { return std::get<std::int64_t>(value); }
  double asFloat() const { return std::get<double>(value); }
  bool asBool() const { return std::get<bool>(value); }
  const std::string &asStr() const { return std::get<std::string>(value); }
  const std::vector<std::int64_t> &asIntList() const {
    return std::get<std::vector<std::int64_t>>(value);
  }
  const std::vector<std::string> &asStrList() const {
    return std::get<std::vector<std::string>>(value);
  }
  std::string str() const;
};

using AttrMap = std::map<std::string, AttrValue>;

//===----------------------------------------------------------------------===//
// Operations, blocks, regions, modules
//===----------------------------------------------------------------------===//

struct ValueDef {
  std::string name;
  Type type;
  bool operator==(const ValueDef &) const = default;
};

struct Region;

struct Operation {
  OpId id = 0;
  std::string name;
  Location loc;
  std::vector<std::string> operands;
  std::vector<ValueDef> results;
  std::vector<std::string> successors; // block labels, for branch ops
  AttrMap attrs;
  std::optional<std::vector<std::int64_t>> segments;
  std::vector<Region> regions;

  bool hasAttr(const std::string &key) const { return attrs.count(key) != 0; }
  const AttrValue *attr(const std::string &key) const {
    auto it = attrs.find(key);
    return it == attrs.end() ? nullptr : &it->second;
  }
  std::string dialect() const {
    auto dot = name.find('.');
    return dot == std::string::npos ? name : name.substr(0, dot);
  }
};

struct Block {
  std::string label; // empty for a single implicit block
  std::vector<ValueDef> args;
  std::vector<Operation> ops;
};

struct Region {
  std::vector<Block> blocks;
};

// A module owns a root operation (conventionally builtin.module) plus the
// counters used to mint fresh op ids and value names. Op ids are never reused
// within a module's lifetime, so a dangling handle is detectable by lookup
// failure.
struct Module {
  Operation root;
  std::string filename = "<memory>";
  OpId next_op_id = 1;
  std::uint64_t next_value = 0;
  std::uint64_t next_block = 0;

  OpId newOpId() { return next_op_id++; }
  std::string freshValueName() { return "t" + std::to_string(next_value++); }
  std::string freshBlockLabel() { return "bb" + std::to_string(next_block++); }
};

//===----------------------------------------------------------------------===//
// Traversal and lookup helpers
//===----------------------------------------------------------------------===//

// Preorder walk over op and everything nested in it. Return false from the
// callback to stop early.
bool walk(const Operation &op, const std::function<bool(const Operation &)> &fn);
bool walk(Operation &op, const std::function<bool(Operation &)> &fn);

Operation *findOp(Module &m, OpId id);
const Operation *findOp(const Module &m, OpId id);

// Parent operation of `id`, or nullptr for the root.
Operation *findParent(Module &m, OpId id);
const Operation *findParent(const Module &m, OpId id);

std::vector<OpId> subtreeIds(const Operation &op);

// True if `maybe_ancestor` contains (or is) the op `id`.
bool contains(const Operation &maybe_ancestor, OpId id);

// Structural equality ignoring op ids and source locations.
bool structurallyEqual(const Operation &a, const Operation &b);
bool structurallyEqual(const Module &a, const Module &b);

// Deep copy with fresh op ids and fresh names for every value defined inside
// (results and block args). References to values defined outside the clone
// are left untouched. `renames` accumulates old-name -> new-name.
Operation cloneWithFreshNames(const Operation &op, Module &m,
                              std::map<std::string, std::string> &renames);

// Rename uses of values according to `renames`, recursively.
void remapUses(Operation &op, const std::map<std::string, std::string> &renames);

// Name of the value-defining entity: results and block args, preorder.
// Returns a map value-name -> defining op id (block args map to the op owning
// the region).
std::map<std::string, OpId> collectDefs(const Operation &root);

} // namespace tfc

#endif // TFC_IR_HPP
