//===- executor.cpp - Deterministic payload interpreter -------------------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "tfc/executor.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

namespace tfc {

std::string formatFloat(double v); // ir.cpp

std::string CostReport::json() const {
  std::ostringstream os;
  os << "{\"ops_executed\": " << ops_executed << ", \"weighted_cost\": ";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", weighted_cost);
  os << buf << ", \"per_op\": {";
  bool first = true;
  for (const auto &[k, v] : per_op) {
    if (!first)
      os << ", ";
    first = false;
    os << "\"" << k << "\": " << v;
  }
  os << "}}";
  return os.str();
}

//===----------------------------------------------------------------------===//
// Affine expression evaluation
//===----------------------------------------------------------------------===//

namespace {

struct AffineParser {
  const std::string &s;
  const std::vector<std::int64_t> &syms;
  size_t pos = 0;
  bool failed = false;

  void skip() {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t'))
      ++pos;
  }

  std::int64_t primary() {
    skip();
    if (pos >= s.size()) {
      failed = true;
      return 0;
    }
    if (s[pos] == '(') {
      ++pos;
      std::int64_t v = expr();
      skip();
      if (pos < s.size() && s[pos] == ')')
        ++pos;
      else
        failed = true;
      return v;
    }
    if (s[pos] == '-') {
      ++pos;
      return -primary();
    }
    if (s[pos] == 's') {
      ++pos;
      size_t start = pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos])))
        ++pos;
      if (start == pos) {
        failed = true;
        return 0;
      }
      size_t idx = std::strtoull(s.c_str() + start, nullptr, 10);
      if (idx >= syms.size()) {
        failed = true;
        return 0;
      }
      return syms[idx];
    }
    if (std::isdigit(static_cast<unsigned char>(s[pos]))) {
      size_t start = pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos])))
        ++pos;
      return std::strtoll(s.substr(start, pos - start).c_str(), nullptr, 10);
    }
    failed = true;
    return 0;
  }

  std::int64_t term() {
    std::int64_t v = primary();
    while (true) {
      skip();
      if (pos < s.size() && s[pos] == '*') {
        ++pos;
        v *= primary();
      } else {
        break;
      }
    }
    return v;
  }

  std::int64_t expr() {
    std::int64_t v = term();
    while (true) {
      skip();
      if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
        char op = s[pos++];
        std::int64_t rhs = term();
        v = op == '+' ? v + rhs : v - rhs;
      } else {
        break;
      }
    }
    return v;
  }
};

} // namespace

std::optional<std::int64_t> evalAffineExpr(const std::string &expr,
                                           const std::vector<std::int64_t> &syms) {
  AffineParser p{expr, syms};
  std::int64_t v = p.expr();
  p.skip();
  if (p.failed || p.pos != expr.size())
    return std::nullopt;
  return v;
}

//===----------------------------------------------------------------------===//
// Argument specs
//===----------------------------------------------------------------------===//

std::optional<ArgSpec> parseArgSpec(const std::string &text) {
  if (text.empty())
    return std::nullopt;
  // Buffer form: elem[shape](:fill|=v,v,...)?
  if (text.rfind("f64[", 0) == 0 || text.rfind("i64[", 0) == 0) {
    BufferInit b;
    b.elem = text[0] == 'f' ? TypeKind::F64 : TypeKind::I64;
    size_t close = text.find(']');
    if (close == std::string::npos)
      return std::nullopt;
    std::string dims = text.substr(4, close - 4);
    std::string cur;
    for (char c : dims + "x") {
      if (c == 'x') {
        if (cur.empty())
          return std::nullopt;
        b.shape.push_back(std::strtoll(cur.c_str(), nullptr, 10));
        cur.clear();
      } else {
        cur += c;
      }
    }
    std::string rest = text.substr(close + 1);
    if (rest.empty()) {
      b.fill = BufferInit::Fill::Zeros;
    } else if (rest == ":zeros") {
      b.fill = BufferInit::Fill::Zeros;
    } else if (rest == ":ones") {
      b.fill = BufferInit::Fill::Ones;
    } else if (rest == ":iota") {
      b.fill = BufferInit::Fill::Iota;
    } else if (rest[0] == '=') {
      b.fill = BufferInit::Fill::Values;
      std::string v;
      for (char c : rest.substr(1) + ",") {
        if (c == ',') {
          if (!v.empty())
            b.values.push_back(std::strtod(v.c_str(), nullptr));
          v.clear();
        } else {
          v += c;
        }
      }
    } else {
      return std::nullopt;
    }
    return ArgSpec::makeBuffer(std::move(b));
  }
  if (text.find('.') != std::string::npos || text.find('e') != std::string::npos)
    return ArgSpec::makeFloat(std::strtod(text.c_str(), nullptr));
  char *end = nullptr;
  std::int64_t v = std::strtoll(text.c_str(), &end, 10);
  if (end != text.c_str() + text.size())
    return std::nullopt;
  return ArgSpec::makeInt(v);
}

//===----------------------------------------------------------------------===//
// Buffer comparison
//===----------------------------------------------------------------------===//

bool buffersEqualExact(const BufferContents &a, const BufferContents &b) {
  return a.elem == b.elem && a.shape == b.shape && a.f64 == b.f64 && a.i64 == b.i64;
}

bool buffersClose(const BufferContents &a, const BufferContents &b, double rel_tol) {
  if (a.elem != b.elem || a.shape != b.shape || a.i64 != b.i64 ||
      a.f64.size() != b.f64.size())
    return false;
  for (size_t i = 0; i < a.f64.size(); ++i) {
    double x = a.f64[i], y = b.f64[i];
    double scale = std::max({std::abs(x), std::abs(y), 1.0});
    if (std::abs(x - y) > rel_tol * scale)
      return false;
  }
  return true;
}

//===----------------------------------------------------------------------===//
// Execution engine
//===----------------------------------------------------------------------===//

namespace {

struct ExecError {
  Diagnostic diag;
};

[[noreturn]] void fail(const Operation &op, const std::string &msg,
                       const std::string &file) {
  throw ExecError{{Severity::Definite, msg, op.loc, file}};
}

struct Buffer {
  TypeKind elem = TypeKind::F64;
  std::vector<std::int64_t> shape;
  std::vector<double> f64;
  std::vector<std::int64_t> i64;
  std::int64_t base = 0;
  std::int64_t size() const {
    return static_cast<std::int64_t>(elem == TypeKind::F64 ? f64.size() : i64.size());
  }
};

class Engine {
public:
  Engine(const Module &m, const DialectRegistry &reg, const ExecOptions &opts)
      : m_(m), reg_(reg), opts_(opts) {}

  ExecResult run(const std::string &entry, const std::vector<ArgSpec> &args);

private:
  using Env = std::map<std::string, RtVal>;

  const Operation *findFunc(const std::string &sym) const {
    const Operation *found = nullptr;
    walk(m_.root, [&](const Operation &op) {
      if ((op.name == "func.func" || op.name == "llvmlite.func")) {
        const AttrValue *s = op.attr("sym_name");
        if (s && s->asStr() == sym) {
          found = &op;
          return false;
        }
      }
      return true;
    });
    return found;
  }

  int newBuffer(TypeKind elem, std::vector<std::int64_t> shape,
                const BufferInit *init) {
    Buffer b;
    b.elem = elem;
    b.shape = shape;
    std::int64_t n = 1;
    for (auto d : shape)
      n *= d;
    if (elem == TypeKind::F64)
      b.f64.assign(n, 0.0);
    else
      b.i64.assign(n, 0);
    if (init) {
      for (std::int64_t i = 0; i < n; ++i) {
        double v = 0;
        switch (init->fill) {
        case BufferInit::Fill::Zeros:
          v = 0;
          break;
        case BufferInit::Fill::Ones:
          v = 1;
          break;
        case BufferInit::Fill::Iota:
          v = static_cast<double>(i % 11); // small values keep f64 sums stable
          break;
        case BufferInit::Fill::Values:
          v = i < static_cast<std::int64_t>(init->values.size()) ? init->values[i] : 0;
          break;
        }
        if (elem == TypeKind::F64)
          b.f64[i] = v;
        else
          b.i64[i] = static_cast<std::int64_t>(v);
      }
    }
    b.base = next_addr_;
    next_addr_ += std::max<std::int64_t>(n, 1) + 16;
    buffers_.push_back(std::move(b));
    return static_cast<int>(buffers_.size() - 1);
  }

  int bufferAt(std::int64_t addr, const Operation &op) const {
    for (int i = static_cast<int>(buffers_.size()) - 1; i >= 0; --i) {
      const Buffer &b = buffers_[i];
      if (addr >= b.base && addr < b.base + b.size())
        return i;
    }
    fail(op, "address " + std::to_string(addr) + " is out of bounds", m_.filename);
  }

  std::int64_t asInt(const RtVal &v, const Operation &op) const {
    if (std::holds_alternative<std::int64_t>(v))
      return std::get<std::int64_t>(v);
    if (std::holds_alternative<MemRefVal>(v)) {
      // Pointer coercion: a memref decays to its base address.
      const MemRefVal &mv = std::get<MemRefVal>(v);
      return buffers_[mv.buffer].base + mv.offset;
    }
    fail(op, "expected an integer value", m_.filename);
  }

  double asFloat(const RtVal &v, const Operation &op) const {
    if (std::holds_alternative<double>(v))
      return std::get<double>(v);
    if (std::holds_alternative<std::int64_t>(v))
      return static_cast<double>(std::get<std::int64_t>(v));
    fail(op, "expected a float value", m_.filename);
  }

  const MemRefVal &asMemRef(const RtVal &v, const Operation &op) const {
    if (!std::holds_alternative<MemRefVal>(v))
      fail(op, "expected a memref value", m_.filename);
    return std::get<MemRefVal>(v);
  }

  RtVal lookup(Env &env, const std::string &name, const Operation &op) const {
    auto it = env.find(name);
    if (it == env.end())
      fail(op, "use of undefined value '%" + name + "'", m_.filename);
    return it->second;
  }

  void countOp(const Operation &op) {
    if (++steps_ > opts_.step_limit)
      throw ExecError{{Severity::Definite,
                       "step limit of " + std::to_string(opts_.step_limit) +
                           " ops exceeded",
                       op.loc,
                       m_.filename}};
    ++report_.ops_executed;
    ++report_.per_op[op.name];
    double w = opts_.cost.weightOf(op.name);
    if (op.name == "lib.call_kernel")
      return; // costed by the kernel formula at the call site
    const OpDefinition *d = reg_.lookup(op.name);
    bool arith_like = d && d->hasTrait(Trait::Pure) && op.regions.empty();
    if (vec_depth_ > 0 && arith_like)
      vec_accum_ += w;
    else
      report_.weighted_cost += w;
  }

  // Executes ops of a single block (structured control flow only). Returns
  // true if a func-level return was reached.
  bool execBlockOps(const Block &block, Env &env, std::vector<RtVal> &rets);

  // Executes a multi-block region body with branches, starting at the entry
  // block whose args are already bound.
  bool execCfg(const Region &region, Env &env, std::vector<RtVal> &rets);

  bool execOp(const Operation &op, Env &env, std::vector<RtVal> &rets);

  std::vector<RtVal> callFunction(const Operation &callee,
                                  std::vector<RtVal> args, const Operation &site);

  RtVal makeDescriptor(const Type &t, int buffer_index) {
    MemRefVal mv;
    mv.buffer = buffer_index;
    mv.offset = t.explicit_layout ? t.layout_offset : 0;
    mv.sizes = t.shape;
    mv.strides = t.explicit_layout ? t.layout_strides : t.contiguousStrides();
    return mv;
  }

  const Module &m_;
  const DialectRegistry &reg_;
  const ExecOptions &opts_;
  std::vector<Buffer> buffers_;
  std::int64_t next_addr_ = 4096;
  std::uint64_t steps_ = 0;
  CostReport report_;
  int vec_depth_ = 0;
  double vec_accum_ = 0;
};

bool Engine::execBlockOps(const Block &block, Env &env, std::vector<RtVal> &rets) {
  for (const auto &op : block.ops) {
    if (op.name == "scf.yield") {
      countOp(op);
      return false;
    }
    if (execOp(op, env, rets))
      return true;
  }
  return false;
}

bool Engine::execCfg(const Region &region, Env &env, std::vector<RtVal> &rets) {
  if (region.blocks.empty())
    return false;
  const Block *cur = &region.blocks[0];
  auto blockByLabel = [&](const std::string &label,
                          const Operation &op) -> const Block * {
    for (const auto &b : region.blocks)
      if (b.label == label)
        return &b;
    fail(op, "branch to unknown block '^" + label + "'", m_.filename);
  };
  while (true) {
    const Block *next = nullptr;
    for (const auto &op : cur->ops) {
      bool is_br = op.name == "cf.br" || op.name == "llvmlite.br";
      bool is_cond = op.name == "cf.cond_br" || op.name == "llvmlite.cond_br";
      if (is_br || is_cond) {
        countOp(op);
        std::string target;
        std::vector<RtVal> vals;
        if (is_br) {
          target = op.successors.at(0);
          for (const auto &o : op.operands)
            vals.push_back(lookup(env, o, op));
        } else {
          bool cond = asInt(lookup(env, op.operands.at(0), op), op) != 0;
          const auto &segs = *op.segments;
          size_t t_begin = 1, t_count = segs.at(1), f_count = segs.at(2);
          target = cond ? op.successors.at(0) : op.successors.at(1);
          size_t begin = cond ? t_begin : t_begin + t_count;
          size_t count = cond ? t_count : f_count;
          for (size_t i = 0; i < count; ++i)
            vals.push_back(lookup(env, op.operands.at(begin + i), op));
        }
        next = blockByLabel(target, op);
        if (vals.size() != next->args.size())
          fail(op, "branch argument count mismatch for '^" + target + "'",
               m_.filename);
        for (size_t i = 0; i < vals.size(); ++i)
          env[next->args[i].name] = vals[i];
        break;
      }
      if (execOp(op, env, rets))
        return true;
    }
    if (!next)
      return false; // fell off the block without a terminator
    cur = next;
  }
}

std::vector<RtVal> Engine::callFunction(const Operation &callee,
                                        std::vector<RtVal> args,
                                        const Operation &site) {
  const Region &body = callee.regions.at(0);
  if (body.blocks.empty())
    fail(site, "call to a function with no body", m_.filename);
  Env env;
  const Block &entry = body.blocks[0];
  if (entry.args.size() != args.size())
    fail(site, "call argument count mismatch for @" +
                   callee.attr("sym_name")->asStr(),
         m_.filename);
  for (size_t i = 0; i < args.size(); ++i)
    env[entry.args[i].name] = args[i];
  std::vector<RtVal> rets;
  if (body.blocks.size() > 1) {
    execCfg(body, env, rets);
  } else {
    for (const auto &op : entry.ops)
      if (execOp(op, env, rets))
        break;
  }
  return rets;
}

bool Engine::execOp(const Operation &op, Env &env, std::vector<RtVal> &rets) {
  countOp(op);
  const std::string &n = op.name;
  auto in = [&](size_t i) { return lookup(env, op.operands.at(i), op); };
  auto setResult = [&](size_t i, RtVal v) { env[op.results.at(i).name] = v; };

  if (n == "arith.constant" || n == "llvmlite.constant") {
    const AttrValue *v = op.attr("value");
    if (v->kind == AttrValue::Kind::Float)
      setResult(0, v->asFloat());
    else
      setResult(0, v->asInt());
    return false;
  }
  if (n == "arith.addi" || n == "arith.muli" || n == "arith.subi") {
    std::int64_t a = asInt(in(0), op), b = asInt(in(1), op);
    setResult(0, n == "arith.addi" ? a + b : (n == "arith.muli" ? a * b : a - b));
    return false;
  }
  if (n == "llvmlite.add" || n == "llvmlite.mul") {
    RtVal a = in(0), b = in(1);
    bool flt = std::holds_alternative<double>(a) || std::holds_alternative<double>(b);
    if (flt) {
      double x = asFloat(a, op), y = asFloat(b, op);
      setResult(0, n == "llvmlite.add" ? x + y : x * y);
    } else {
      std::int64_t x = asInt(a, op), y = asInt(b, op);
      setResult(0, n == "llvmlite.add" ? x + y : x * y);
    }
    return false;
  }
  if (n == "arith.addf" || n == "arith.mulf") {
    double a = asFloat(in(0), op), b = asFloat(in(1), op);
    setResult(0, n == "arith.addf" ? a + b : a * b);
    return false;
  }
  if (n == "arith.cmpi" || n == "llvmlite.icmp") {
    std::int64_t a = asInt(in(0), op), b = asInt(in(1), op);
    const std::string &p = op.attr("predicate")->asStr();
    bool r = p == "eq"    ? a == b
             : p == "ne"  ? a != b
             : p == "slt" ? a < b
             : p == "sle" ? a <= b
             : p == "sgt" ? a > b
                          : a >= b;
    setResult(0, static_cast<std::int64_t>(r));
    return false;
  }
  if (n == "arith.index_cast" || n == "llvmlite.ptrtoint" ||
      n == "builtin.unrealized_conversion_cast") {
    RtVal v = in(0);
    if (std::holds_alternative<MemRefVal>(v))
      setResult(0, asInt(v, op)); // decay to address
    else
      setResult(0, v);
    return false;
  }
  if (n == "llvmlite.gep") {
    setResult(0, asInt(in(0), op) + asInt(in(1), op));
    return false;
  }
  if (n == "llvmlite.undef") {
    setResult(0, std::int64_t{0});
    return false;
  }
  if (n == "affine.apply") {
    std::vector<std::int64_t> syms;
    for (size_t i = 0; i < op.operands.size(); ++i)
      syms.push_back(asInt(in(i), op));
    auto v = evalAffineExpr(op.attr("expr")->asStr(), syms);
    if (!v)
      fail(op, "malformed affine expression '" + op.attr("expr")->asStr() + "'",
           m_.filename);
    setResult(0, *v);
    return false;
  }
  if (n == "memref.alloc") {
    const Type &t = op.results.at(0).type;
    for (auto d : t.shape)
      if (d == kDynamic)
        fail(op, "memref.alloc requires a static shape", m_.filename);
    int idx = newBuffer(t.elem, t.shape, nullptr);
    setResult(0, makeDescriptor(t, idx));
    return false;
  }
  if (n == "llvmlite.alloca") {
    std::int64_t size = op.attr("size")->asInt();
    TypeKind elem = TypeKind::F64;
    if (const AttrValue *e = op.attr("elem"); e && e->asStr() == "i64")
      elem = TypeKind::I64;
    int idx = newBuffer(elem, {size}, nullptr);
    setResult(0, buffers_[idx].base);
    return false;
  }
  if (n == "memref.load" || n == "memref.store") {
    size_t mem_idx = n == "memref.load" ? 0 : 1;
    MemRefVal mv = asMemRef(in(mem_idx), op);
    Buffer &buf = buffers_.at(mv.buffer);
    std::int64_t linear = mv.offset;
    for (size_t k = 0; k < mv.sizes.size(); ++k) {
      std::int64_t idx = asInt(in(mem_idx + 1 + k), op);
      if (idx < 0 || idx >= mv.sizes[k])
        fail(op, "index " + std::to_string(idx) + " out of bounds for dim " +
                     std::to_string(k) + " (size " + std::to_string(mv.sizes[k]) +
                     ")",
             m_.filename);
      linear += idx * mv.strides[k];
    }
    if (linear < 0 || linear >= buf.size())
      fail(op, "access at linear offset " + std::to_string(linear) +
                   " is outside the buffer",
           m_.filename);
    if (n == "memref.load") {
      if (buf.elem == TypeKind::F64)
        setResult(0, buf.f64[linear]);
      else
        setResult(0, buf.i64[linear]);
    } else {
      RtVal v = in(0);
      if (buf.elem == TypeKind::F64)
        buf.f64[linear] = asFloat(v, op);
      else
        buf.i64[linear] = asInt(v, op);
    }
    return false;
  }
  if (n == "llvmlite.load" || n == "llvmlite.store") {
    size_t addr_idx = n == "llvmlite.load" ? 0 : 1;
    std::int64_t addr = asInt(in(addr_idx), op);
    int bi = bufferAt(addr, op);
    Buffer &buf = buffers_[bi];
    std::int64_t linear = addr - buf.base;
    if (n == "llvmlite.load") {
      if (buf.elem == TypeKind::F64)
        setResult(0, buf.f64[linear]);
      else
        setResult(0, buf.i64[linear]);
    } else {
      RtVal v = in(0);
      if (buf.elem == TypeKind::F64)
        buf.f64[linear] = asFloat(v, op);
      else
        buf.i64[linear] = asInt(v, op);
    }
    return false;
  }
  if (n == "memref.subview" || n == "memref.reinterpret_cast") {
    const auto &segs = *op.segments;
    MemRefVal src = asMemRef(in(0), op);
    size_t dyn = segs[0]; // next dynamic operand index
    auto takeList = [&](const char *key) {
      std::vector<std::int64_t> out;
      for (auto v : op.attr(key)->asIntList()) {
        if (v == kDynamic)
          out.push_back(asInt(in(dyn++), op));
        else
          out.push_back(v);
      }
      return out;
    };
    std::vector<std::int64_t> offsets = takeList("static_offsets");
    std::vector<std::int64_t> sizes = takeList("static_sizes");
    std::vector<std::int64_t> strides = takeList("static_strides");
    MemRefVal mv;
    mv.buffer = src.buffer;
    if (n == "memref.subview") {
      mv.offset = src.offset;
      for (size_t k = 0; k < offsets.size(); ++k)
        mv.offset += offsets[k] * src.strides.at(k);
      for (size_t k = 0; k < sizes.size(); ++k) {
        mv.sizes.push_back(sizes[k]);
        mv.strides.push_back(strides[k] * src.strides.at(k));
      }
    } else {
      // reinterpret_cast addresses the underlying buffer directly.
      mv.offset = offsets.empty() ? 0 : offsets[0];
      mv.sizes = sizes;
      mv.strides = strides;
    }
    setResult(0, mv);
    return false;
  }
  if (n == "memref.extract_strided_metadata") {
    MemRefVal src = asMemRef(in(0), op);
    const Buffer &buf = buffers_.at(src.buffer);
    MemRefVal base;
    base.buffer = src.buffer;
    base.offset = 0;
    base.sizes = {buf.size()};
    base.strides = {1};
    size_t r = src.sizes.size();
    if (op.results.size() != 2 + 2 * r)
      fail(op, "metadata result count does not match memref rank", m_.filename);
    setResult(0, base);
    setResult(1, src.offset);
    for (size_t k = 0; k < r; ++k)
      setResult(2 + k, src.sizes[k]);
    for (size_t k = 0; k < r; ++k)
      setResult(2 + r + k, src.strides[k]);
    return false;
  }
  if (n == "memref.extract_aligned_pointer_as_index") {
    MemRefVal src = asMemRef(in(0), op);
    setResult(0, buffers_.at(src.buffer).base);
    return false;
  }
  if (n == "scf.for") {
    std::int64_t lb = asInt(in(0), op), ub = asInt(in(1), op),
                 step = asInt(in(2), op);
    if (step <= 0)
      fail(op, "scf.for requires a positive step", m_.filename);
    const Block &body = op.regions.at(0).blocks.at(0);
    bool vectorized = false;
    if (const AttrValue *v = op.attr("vectorized"))
      vectorized = v->kind == AttrValue::Kind::Bool && v->asBool();
    if (vectorized)
      ++vec_depth_;
    for (std::int64_t iv = lb; iv < ub; iv += step) {
      env[body.args.at(0).name] = iv;
      if (execBlockOps(body, env, rets)) {
        if (vectorized)
          --vec_depth_;
        return true;
      }
    }
    if (vectorized) {
      if (--vec_depth_ == 0) {
        report_.weighted_cost +=
            std::ceil(vec_accum_ / std::max(1, opts_.cost.vector_width));
        vec_accum_ = 0;
      }
    }
    return false;
  }
  if (n == "scf.forall") {
    const Block &body = op.regions.at(0).blocks.at(0);
    size_t dims = op.operands.size();
    std::vector<std::int64_t> ubs;
    for (size_t i = 0; i < dims; ++i)
      ubs.push_back(asInt(in(i), op));
    std::vector<std::int64_t> ivs(dims, 0);
    std::function<bool(size_t)> loop = [&](size_t d) -> bool {
      if (d == dims) {
        for (size_t i = 0; i < dims; ++i)
          env[body.args.at(i).name] = ivs[i];
        return execBlockOps(body, env, rets);
      }
      for (ivs[d] = 0; ivs[d] < ubs[d]; ++ivs[d])
        if (loop(d + 1))
          return true;
      return false;
    };
    return dims == 0 ? false : loop(0);
  }
  if (n == "scf.if") {
    bool cond = asInt(in(0), op) != 0;
    const Region &r = op.regions.at(cond ? 0 : 1);
    if (!r.blocks.empty())
      return execBlockOps(r.blocks[0], env, rets);
    return false;
  }
  if (n == "func.call" || n == "llvmlite.call") {
    const std::string &callee = op.attr("callee")->asStr();
    const Operation *f = findFunc(callee);
    if (!f)
      fail(op, "call to unknown function '@" + callee + "'", m_.filename);
    std::vector<RtVal> args;
    for (size_t i = 0; i < op.operands.size(); ++i)
      args.push_back(in(i));
    std::vector<RtVal> results = callFunction(*f, std::move(args), op);
    if (results.size() < op.results.size())
      fail(op, "call to '@" + callee + "' returned too few values", m_.filename);
    for (size_t i = 0; i < op.results.size(); ++i)
      setResult(i, results[i]);
    return false;
  }
  if (n == "func.return" || n == "llvmlite.return") {
    rets.clear();
    for (size_t i = 0; i < op.operands.size(); ++i)
      rets.push_back(in(i));
    return true;
  }
  if (n == "lib.call_kernel") {
    const auto &segs = *op.segments;
    size_t pos = 0;
    auto take = [&](std::int64_t count) {
      std::vector<RtVal> vals;
      for (std::int64_t i = 0; i < count; ++i)
        vals.push_back(in(pos++));
      return vals;
    };
    MemRefVal A = asMemRef(take(segs[0]).at(0), op);
    MemRefVal B = asMemRef(take(segs[1]).at(0), op);
    MemRefVal C = asMemRef(take(segs[2]).at(0), op);
    std::vector<RtVal> prefix = take(segs[3]);
    std::int64_t i0 = asInt(take(segs[4]).at(0), op);
    std::int64_t j0 = asInt(take(segs[5]).at(0), op);
    std::int64_t k0 = asInt(take(segs[6]).at(0), op);
    std::int64_t M = op.attr("m")->asInt(), N = op.attr("n")->asInt(),
                 K = op.attr("k")->asInt();
    std::int64_t batch = op.hasAttr("batch") ? op.attr("batch")->asInt() : 1;
    std::int64_t batch_pos = op.hasAttr("batch_pos") ? op.attr("batch_pos")->asInt() : -1;
    std::int64_t b0 = 0;
    if (batch_pos >= 0)
      b0 = asInt(prefix.at(batch_pos), op);

    auto element = [&](const MemRefVal &mv, const std::vector<std::int64_t> &pre,
                       std::int64_t x, std::int64_t y) -> std::int64_t {
      std::int64_t linear = mv.offset;
      size_t k = 0;
      for (; k < pre.size(); ++k) {
        if (pre[k] < 0 || pre[k] >= mv.sizes.at(k))
          fail(op, "kernel prefix index out of bounds", m_.filename);
        linear += pre[k] * mv.strides[k];
      }
      if (x < 0 || x >= mv.sizes.at(k) || y < 0 || y >= mv.sizes.at(k + 1))
        fail(op, "kernel tile index out of bounds", m_.filename);
      return linear + x * mv.strides[k] + y * mv.strides[k + 1];
    };

    Buffer &bufA = buffers_.at(A.buffer);
    Buffer &bufB = buffers_.at(B.buffer);
    Buffer &bufC = buffers_.at(C.buffer);
    for (std::int64_t t = 0; t < batch; ++t) {
      std::vector<std::int64_t> pre;
      for (size_t i = 0; i < prefix.size(); ++i)
        pre.push_back(static_cast<std::int64_t>(i) == batch_pos
                          ? b0 + t
                          : asInt(prefix[i], op));
      for (std::int64_t p = 0; p < M; ++p)
        for (std::int64_t q = 0; q < N; ++q) {
          std::int64_t c_lin = element(C, pre, i0 + p, j0 + q);
          if (bufC.elem == TypeKind::F64) {
            double acc = bufC.f64.at(c_lin);
            for (std::int64_t r = 0; r < K; ++r)
              acc += bufA.f64.at(element(A, pre, i0 + p, k0 + r)) *
                     bufB.f64.at(element(B, pre, k0 + r, j0 + q));
            bufC.f64[c_lin] = acc;
          } else {
            std::int64_t acc = bufC.i64.at(c_lin);
            for (std::int64_t r = 0; r < K; ++r)
              acc += bufA.i64.at(element(A, pre, i0 + p, k0 + r)) *
                     bufB.i64.at(element(B, pre, k0 + r, j0 + q));
            bufC.i64[c_lin] = acc;
          }
        }
    }
    double alpha = opts_.cost.kernel_alpha;
    if (const AttrValue *a = op.attr("alpha"); a && a->kind == AttrValue::Kind::Float)
      alpha = a->asFloat();
    report_.weighted_cost +=
        alpha * static_cast<double>(batch) * static_cast<double>(M) *
        static_cast<double>(N) * static_cast<double>(K);
    return false;
  }
  fail(op, "op '" + n + "' is not in the executable subset", m_.filename);
}

ExecResult Engine::run(const std::string &entry, const std::vector<ArgSpec> &args) {
  ExecResult result;
  try {
    const Operation *f = findFunc(entry);
    if (!f)
      throw ExecError{{Severity::Definite, "entry '@" + entry + "' not found",
                       {}, m_.filename}};
    const Block &eb = f->regions.at(0).blocks.at(0);
    if (eb.args.size() != args.size())
      throw ExecError{{Severity::Definite,
                       "entry expects " + std::to_string(eb.args.size()) +
                           " arguments, got " + std::to_string(args.size()),
                       f->loc,
                       m_.filename}};
    std::vector<RtVal> rt_args;
    std::vector<int> arg_buffer_indices;
    for (size_t i = 0; i < args.size(); ++i) {
      const ArgSpec &a = args[i];
      const Type &pt = eb.args[i].type;
      switch (a.kind) {
      case ArgSpec::Kind::Int:
        rt_args.push_back(a.int_val);
        break;
      case ArgSpec::Kind::Float:
        rt_args.push_back(a.float_val);
        break;
      case ArgSpec::Kind::Buffer: {
        int idx = newBuffer(a.buffer.elem, a.buffer.shape, &a.buffer);
        arg_buffer_indices.push_back(idx);
        if (pt.kind == TypeKind::MemRef) {
          rt_args.push_back(makeDescriptor(pt, idx));
        } else {
          // Lowered entry: pass the base address.
          rt_args.push_back(buffers_[idx].base);
        }
        break;
      }
      }
    }
    Operation site; // synthetic call site for diagnostics
    site.name = "entry";
    result.returns = callFunction(*f, std::move(rt_args), site);
    for (int idx : arg_buffer_indices) {
      const Buffer &b = buffers_[idx];
      result.arg_buffers.push_back({b.elem, b.shape, b.f64, b.i64});
    }
    // Flush a trailing vectorized accumulation if the entry itself was marked.
    if (vec_accum_ > 0) {
      report_.weighted_cost +=
          std::ceil(vec_accum_ / std::max(1, opts_.cost.vector_width));
      vec_accum_ = 0;
    }
    result.cost = report_;
    result.ok = true;
  } catch (const ExecError &e) {
    result.ok = false;
    result.error = e.diag;
  }
  return result;
}

} // namespace

ExecResult execute(const Module &m, const DialectRegistry &reg,
                   const std::string &entry, const std::vector<ArgSpec> &args,
                   const ExecOptions &opts) {
  Engine engine(m, reg, opts);
  return engine.run(entry, args);
}

bool execResultsEqualExact(const ExecResult &a, const ExecResult &b) {
  if (!a.ok || !b.ok || a.returns.size() != b.returns.size() ||
      a.arg_buffers.size() != b.arg_buffers.size())
    return false;
  for (size_t i = 0; i < a.returns.size(); ++i)
    if (a.returns[i] != b.returns[i])
      return false;
  for (size_t i = 0; i < a.arg_buffers.size(); ++i)
    if (!buffersEqualExact(a.arg_buffers[i], b.arg_buffers[i]))
      return false;
  return true;
}

bool execResultsClose(const ExecResult &a, const ExecResult &b, double rel_tol) {
  if (!a.ok || !b.ok || a.returns.size() != b.returns.size() ||
      a.arg_buffers.size() != b.arg_buffers.size())
    return false;
  for (size_t i = 0; i < a.returns.size(); ++i) {
    const RtVal &x = a.returns[i], &y = b.returns[i];
    if (std::holds_alternative<double>(x) && std::holds_alternative<double>(y)) {
      double dx = std::get<double>(x), dy = std::get<double>(y);
      double scale = std::max({std::abs(dx), std::abs(dy), 1.0});
      if (std::abs(dx - dy) > rel_tol * scale)
        return false;
    } else if (x != y) {
      return false;
    }
  }
  for (size_t i = 0; i < a.arg_buffers.size(); ++i)
    if (!buffersClose(a.arg_buffers[i], b.arg_buffers[i], rel_tol))
      return false;
  return true;
}

} // namespace tfc
