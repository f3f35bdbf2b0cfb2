//===- interp.hpp - Transform script interpreter ---------------------------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Sequential interpretation of a verified script over a payload module. The
// interpreter owns the handle table, tracks invalidation (consuming a handle
// also invalidates every handle reaching the same or nested payload ops),
// subscribes to rewrite events to keep surviving handles coherent, and
// implements the alternatives construct with snapshot rollback.
//
//===----------------------------------------------------------------------===//

#ifndef TFC_INTERP_HPP
#define TFC_INTERP_HPP

#include "tfc/rewriter.hpp"
#include "tfc/transform_ir.hpp"

namespace tfc {

class KernelRegistry;
class PassRegistry;
class PatternRegistry;

struct TraceEntry {
  std::string op;
  Location loc;
  std::vector<std::pair<std::string, std::vector<OpId>>> operands;
  std::vector<std::pair<std::string, std::vector<OpId>>> results;
  std::string status; // ok | silenceable | definite
  std::string message;
  std::string json() const;
};

struct InterpError {
  Severity severity = Severity::Definite; // Silenceable or Definite
  std::string message;
  Location transform_loc;
  std::optional<Location> payload_loc;
};

struct InterpOptions {
  std::string entry = "transform_main";
  std::map<std::string, ParamValue> extern_params;
  bool collect_trace = true;
  bool check_dynamic = false; // before/after condition checks around passes
};

struct InterpResult {
  bool ok = false;
  InterpError error;
  std::vector<TraceEntry> trace;
  std::vector<Diagnostic> check_diags; // dynamic condition findings
};

// Everything a transform implementation may touch. Handles are resolved (and
// invalidation enforced) before the callback runs; results are reported back
// through setResult*.
struct InterpCtx {
  Module &payload;
  Rewriter &rewriter;
  const DialectRegistry &payload_reg;
  const TransformRegistry &treg;
  const KernelRegistry *kernels = nullptr;
  const PassRegistry *passes = nullptr;
  const PatternRegistry *patterns = nullptr;
  const ConstraintTable *constraints = nullptr;
  const std::map<std::string, ConditionSignature> *pass_signatures = nullptr;
  bool check_dynamic = false;
  std::vector<Diagnostic> *check_sink = nullptr;

  // Resolved operand contents, parallel to the op's operand list.
  std::vector<std::vector<OpId>> operand_ops;
  std::vector<std::optional<ParamValue>> operand_params;

  // Filled by the callback.
  std::vector<std::vector<OpId>> result_ops;
  std::vector<ParamValue> result_params;

  // Integer parameter from either a trailing param operand or an attribute.
  std::optional<ParamValue> paramOrAttr(const Operation &op, size_t fixed_operands,
                                        const std::string &attr_key) const;

  void setResultHandle(size_t i, std::vector<OpId> ops) {
    if (result_ops.size() <= i)
      result_ops.resize(i + 1);
    result_ops[i] = std::move(ops);
  }
  void setResultParam(size_t i, ParamValue v) {
    if (result_params.size() <= i)
      result_params.resize(i + 1);
    result_params[i] = std::move(v);
  }
};

class Interpreter {
public:
  Interpreter(const Script &script, Module &payload,
              const DialectRegistry &payload_reg, const TransformRegistry &treg);

  void setKernels(const KernelRegistry *k) { kernels_ = k; }
  void setPasses(const PassRegistry *p) { passes_ = p; }
  void setPatterns(const PatternRegistry *p) { patterns_ = p; }
  void setConstraints(const ConstraintTable *c) { constraints_ = c; }
  void setPassSignatures(const std::map<std::string, ConditionSignature> *s) {
    pass_signatures_ = s;
  }

  InterpResult run(const InterpOptions &opts);

private:
  struct Slot {
    bool is_param = false;
    std::vector<OpId> ops;
    ParamValue param;
    bool invalidated = false;
    std::string invalidated_by;
    Location invalidated_loc;
  };

  struct Snapshot {
    Operation payload_root;
    OpId next_op_id;
    std::uint64_t next_value;
    std::uint64_t next_block;
    std::vector<Slot> slots;
    std::map<std::string, size_t> env;
  };

  TransformStatus execBody(const Block &block);
  TransformStatus execOp(const Operation &op);
  TransformStatus execInclude(const Operation &op);
  TransformStatus execAlternatives(const Operation &op);
  TransformStatus execLeaf(const Operation &op, const TransformOpInfo &info);

  size_t newSlot() {
    slots_.emplace_back();
    return slots_.size() - 1;
  }
  Slot *slotFor(const std::string &name) {
    auto it = env_.find(name);
    return it == env_.end() ? nullptr : &slots_[it->second];
  }

  void invalidateSubtree(const std::vector<OpId> &roots, const std::string &who,
                         Location loc);
  void onRewriteEvent(const RewriteEvent &ev);

  Snapshot takeSnapshot() const;
  void restoreSnapshot(Snapshot snap);

  void pushTrace(const Operation &op, const TransformStatus &status);

  const Script &script_;
  Module &payload_;
  const DialectRegistry &payload_reg_;
  const TransformRegistry &treg_;
  Rewriter rewriter_;

  const KernelRegistry *kernels_ = nullptr;
  const PassRegistry *passes_ = nullptr;
  const PatternRegistry *patterns_ = nullptr;
  const ConstraintTable *constraints_ = nullptr;
  const std::map<std::string, ConditionSignature> *pass_signatures_ = nullptr;

  std::vector<Slot> slots_;
  std::map<std::string, size_t> env_; // value name -> slot
  std::vector<TraceEntry> trace_;
  std::vector<Diagnostic> check_diags_;
  bool collect_trace_ = true;
  bool check_dynamic_ = false;
  std::string pending_error_;
  Location pending_error_loc_;
};

// Top-level entry: interprets @transform_main over the payload. On success
// the payload verifies; on a definite error interpretation aborts with a
// partial trace; an uncaught silenceable error is reported at top level.
InterpResult applyScript(const Script &script, Module &payload,
                         const DialectRegistry &payload_reg,
                         const TransformRegistry &treg, const InterpOptions &opts,
                         const KernelRegistry *kernels = nullptr,
                         const PassRegistry *passes = nullptr,
                         const PatternRegistry *patterns = nullptr,
                         const ConstraintTable *constraints = nullptr,
                         const std::map<std::string, ConditionSignature>
                             *pass_signatures = nullptr);

} // namespace tfc

#endif // TFC_INTERP_HPP
