//===- interp.cpp - Transform script interpreter ---------------------------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "tfc/interp.hpp"

#include <set>
#include <sstream>

namespace tfc {

std::string TraceEntry::json() const {
  auto idList = [](const std::vector<OpId> &ids) {
    std::string s = "[";
    for (size_t i = 0; i < ids.size(); ++i) {
      if (i)
        s += ", ";
      s += std::to_string(ids[i]);
    }
    return s + "]";
  };
  std::ostringstream os;
  os << "{\"op\": \"" << op << "\", \"operands\": {";
  for (size_t i = 0; i < operands.size(); ++i) {
    if (i)
      os << ", ";
    os << "\"%" << operands[i].first << "\": " << idList(operands[i].second);
  }
  os << "}, \"result_handles\": {";
  for (size_t i = 0; i < results.size(); ++i) {
    if (i)
      os << ", ";
    os << "\"%" << results[i].first << "\": " << idList(results[i].second);
  }
  os << "}, \"status\": \"" << status << "\"";
  if (!message.empty())
    os << ", \"message\": \"" << message << "\"";
  os << "}";
  return os.str();
}

std::optional<ParamValue> InterpCtx::paramOrAttr(const Operation &op,
                                                 size_t fixed_operands,
                                                 const std::string &attr_key) const {
  if (const AttrValue *a = op.attr(attr_key)) {
    if (a->kind == AttrValue::Kind::Int)
      return ParamValue::fromInt(a->asInt());
    if (a->kind == AttrValue::Kind::IntList)
      return ParamValue::fromList(a->asIntList());
    if (a->kind == AttrValue::Kind::Str)
      return ParamValue::fromStr(a->asStr());
  }
  if (op.operands.size() > fixed_operands &&
      operand_params.size() > fixed_operands &&
      operand_params[fixed_operands].has_value())
    return operand_params[fixed_operands];
  return std::nullopt;
}

//===----------------------------------------------------------------------===//
// Interpreter
//===----------------------------------------------------------------------===//

Interpreter::Interpreter(const Script &script, Module &payload,
                         const DialectRegistry &payload_reg,
                         const TransformRegistry &treg)
    : script_(script), payload_(payload), payload_reg_(payload_reg), treg_(treg),
      rewriter_(payload) {
  rewriter_.addListener([this](const RewriteEvent &ev) { onRewriteEvent(ev); });
}

void Interpreter::onRewriteEvent(const RewriteEvent &ev) {
  for (auto &slot : slots_) {
    if (slot.is_param || slot.invalidated)
      continue;
    auto it = std::find(slot.ops.begin(), slot.ops.end(), ev.old_op);
    if (it == slot.ops.end())
      continue;
    if (ev.kind == RewriteEvent::Kind::Erased) {
      slot.ops.erase(it);
    } else if (ev.new_ops.size() == 1) {
      // Retarget to the single replacement.
      *it = ev.new_ops[0];
    } else {
      // Drop-to-empty policy for one-to-many replacements.
      slot.ops.erase(it);
    }
  }
}

void Interpreter::invalidateSubtree(const std::vector<OpId> &roots,
                                    const std::string &who, Location loc) {
  std::set<OpId> closure;
  for (OpId root : roots) {
    const Operation *op = findOp(payload_, root);
    if (!op) {
      closure.insert(root);
      continue;
    }
    for (OpId id : subtreeIds(*op))
      closure.insert(id);
  }
  for (auto &slot : slots_) {
    if (slot.is_param || slot.invalidated)
      continue;
    for (OpId id : slot.ops)
      if (closure.count(id)) {
        slot.invalidated = true;
        slot.invalidated_by = who;
        slot.invalidated_loc = loc;
        break;
      }
  }
}

Interpreter::Snapshot Interpreter::takeSnapshot() const {
  return {payload_.root, payload_.next_op_id, payload_.next_value,
          payload_.next_block, slots_, env_};
}

void Interpreter::restoreSnapshot(Snapshot snap) {
  payload_.root = std::move(snap.payload_root);
  payload_.next_op_id = snap.next_op_id;
  payload_.next_value = snap.next_value;
  payload_.next_block = snap.next_block;
  slots_ = std::move(snap.slots);
  env_ = std::move(snap.env);
}

void Interpreter::pushTrace(const Operation &op, const TransformStatus &status) {
  if (!collect_trace_)
    return;
  TraceEntry e;
  e.op = op.name;
  e.loc = op.loc;
  for (const auto &name : op.operands) {
    Slot *s = slotFor(name);
    e.operands.push_back({name, s && !s->is_param ? s->ops : std::vector<OpId>{}});
  }
  for (const auto &res : op.results) {
    Slot *s = slotFor(res.name);
    e.results.push_back({res.name, s && !s->is_param ? s->ops : std::vector<OpId>{}});
  }
  e.status = status.kind == TransformStatusKind::Ok            ? "ok"
             : status.kind == TransformStatusKind::Silenceable ? "silenceable"
                                                               : "definite";
  e.message = status.message;
  trace_.push_back(std::move(e));
}

TransformStatus Interpreter::execBody(const Block &block) {
  for (const auto &op : block.ops) {
    TransformStatus s = execOp(op);
    if (!s.isOk())
      return s;
  }
  return TransformStatus::ok();
}

TransformStatus Interpreter::execOp(const Operation &op) {
  const TransformOpInfo *info = treg_.lookup(op.name);
  if (!info) {
    TransformStatus s =
        TransformStatus::definite("unknown transform op '" + op.name + "'");
    pending_error_loc_ = op.loc;
    pushTrace(op, s);
    return s;
  }

  if (op.name == "transform.include")
    return execInclude(op);
  if (op.name == "transform.alternatives")
    return execAlternatives(op);
  if (op.name == "transform.sequence") {
    // Alias the region argument to the operand and run the body.
    Slot *target = slotFor(op.operands.at(0));
    if (!target) {
      pending_error_loc_ = op.loc;
      return TransformStatus::definite("unbound handle '%" + op.operands[0] + "'");
    }
    const Block &body = op.regions.at(0).blocks.at(0);
    if (!body.args.empty())
      env_[body.args[0].name] = env_[op.operands[0]];
    TransformStatus s = execBody(body);
    pushTrace(op, s);
    return s;
  }
  return execLeaf(op, *info);
}

TransformStatus Interpreter::execInclude(const Operation &op) {
  const AttrValue *callee_attr = op.attr("callee");
  const Operation *callee =
      callee_attr ? script_.sequence(callee_attr->asStr()) : nullptr;
  if (!callee) {
    pending_error_loc_ = op.loc;
    return TransformStatus::definite("include of unknown sequence");
  }
  const Block &entry = callee->regions.at(0).blocks.at(0);
  // Arguments are passed by reference: the callee's block args share the
  // caller's slots, so consumption propagates to the caller.
  for (size_t i = 0; i < op.operands.size(); ++i) {
    auto it = env_.find(op.operands[i]);
    if (it == env_.end()) {
      pending_error_loc_ = op.loc;
      return TransformStatus::definite("unbound value '%" + op.operands[i] + "'");
    }
    env_[entry.args.at(i).name] = it->second;
  }
  TransformStatus s = execBody(entry);
  pushTrace(op, s);
  return s;
}

TransformStatus Interpreter::execAlternatives(const Operation &op) {
  auto it = env_.find(op.operands.at(0));
  if (it == env_.end()) {
    pending_error_loc_ = op.loc;
    return TransformStatus::definite("unbound handle '%" + op.operands[0] + "'");
  }
  Slot target = slots_[it->second];
  if (target.invalidated) {
    pending_error_loc_ = op.loc;
    return TransformStatus::definite(
        "use of invalidated handle '%" + op.operands[0] + "'; invalidated by " +
        target.invalidated_by);
  }
  std::string who = "transform.alternatives at " +
                    std::to_string(op.loc.line) + ":" + std::to_string(op.loc.col);
  // The target is consumed: regions work on re-established handles instead.
  slots_[it->second].invalidated = true;
  slots_[it->second].invalidated_by = who;
  slots_[it->second].invalidated_loc = op.loc;
  invalidateSubtree(target.ops, who, op.loc);

  if (op.regions.empty()) {
    pending_error_loc_ = op.loc;
    return TransformStatus::definite("alternatives requires at least one region");
  }

  Snapshot snap = takeSnapshot();
  TransformStatus last = TransformStatus::ok();
  for (const auto &region : op.regions) {
    const Block &body = region.blocks.at(0);
    if (!body.args.empty()) {
      size_t slot = newSlot();
      slots_[slot].ops = target.ops;
      env_[body.args[0].name] = slot;
    }
    TransformStatus s = execBody(body);
    if (s.isOk()) {
      pushTrace(op, s);
      return s;
    }
    if (s.kind == TransformStatusKind::Definite) {
      // Definite errors abort without trying further regions.
      pushTrace(op, s);
      return s;
    }
    last = s;
    restoreSnapshot(snap);
    snap = takeSnapshot();
  }
  TransformStatus s = TransformStatus::silenceable(
      "all alternatives failed; last error: " + last.message);
  pending_error_loc_ = op.loc;
  pushTrace(op, s);
  return s;
}

TransformStatus Interpreter::execLeaf(const Operation &op,
                                      const TransformOpInfo &info) {
  if (op.name == "transform.named_sequence")
    return TransformStatus::ok(); // definitions execute via include / entry

  InterpCtx ctx{payload_,  rewriter_,  payload_reg_, treg_,
                kernels_,  passes_,    patterns_,    constraints_,
                pass_signatures_, check_dynamic_, &check_diags_,
                {},        {},         {},           {}};

  // Resolve operands, enforcing invalidation at dispatch.
  std::vector<OpId> consumed_roots;
  for (size_t i = 0; i < op.operands.size(); ++i) {
    Slot *slot = slotFor(op.operands[i]);
    if (!slot) {
      pending_error_loc_ = op.loc;
      TransformStatus s =
          TransformStatus::definite("unbound value '%" + op.operands[i] + "'");
      pushTrace(op, s);
      return s;
    }
    if (slot->invalidated) {
      pending_error_loc_ = op.loc;
      TransformStatus s = TransformStatus::definite(
          "use of invalidated handle '%" + op.operands[i] + "'; invalidated by " +
          slot->invalidated_by + " at " +
          std::to_string(slot->invalidated_loc.line) + ":" +
          std::to_string(slot->invalidated_loc.col));
      pushTrace(op, s);
      return s;
    }
    if (slot->is_param) {
      ctx.operand_ops.emplace_back();
      ctx.operand_params.emplace_back(slot->param);
    } else {
      // A live slot never maps to an erased id: events keep lists coherent.
      ctx.operand_ops.push_back(slot->ops);
      ctx.operand_params.emplace_back(std::nullopt);
      bool is_consumed = i < info.operands.size() && info.operands[i].consumed;
      if (is_consumed)
        for (OpId id : slot->ops)
          consumed_roots.push_back(id);
    }
  }

  TransformStatus status = info.apply
                               ? info.apply(ctx, op)
                               : TransformStatus::ok(); // marker ops like forward
  if (!status.isOk()) {
    pending_error_loc_ = op.loc;
    pushTrace(op, status);
    return status;
  }

  // Consumption: the operand handle is deallocated; for Subtree scope every
  // handle reaching the consumed payload (or anything nested) goes with it.
  std::string who = op.name + " at " + std::to_string(op.loc.line) + ":" +
                    std::to_string(op.loc.col);
  for (size_t i = 0; i < op.operands.size(); ++i) {
    bool is_consumed = i < info.operands.size() && info.operands[i].consumed;
    if (!is_consumed)
      continue;
    if (Slot *slot = slotFor(op.operands[i])) {
      slot->invalidated = true;
      slot->invalidated_by = who;
      slot->invalidated_loc = op.loc;
    }
  }
  if (!consumed_roots.empty() && info.invalidation == InvalidationScope::Subtree)
    invalidateSubtree(consumed_roots, who, op.loc);

  // Bind results.
  for (size_t i = 0; i < op.results.size(); ++i) {
    size_t slot = newSlot();
    bool is_param = i < info.results.size() && info.results[i].is_param;
    if (info.results_from_match_attr)
      is_param = false;
    if (is_param) {
      slots_[slot].is_param = true;
      if (i < ctx.result_params.size())
        slots_[slot].param = ctx.result_params[i];
    } else {
      if (i < ctx.result_ops.size())
        slots_[slot].ops = ctx.result_ops[i];
    }
    env_[op.results[i].name] = slot;
  }
  pushTrace(op, status);
  return status;
}

InterpResult Interpreter::run(const InterpOptions &opts) {
  collect_trace_ = opts.collect_trace;
  check_dynamic_ = opts.check_dynamic;
  InterpResult result;

  const Operation *entry = script_.sequence(opts.entry);
  if (!entry) {
    result.error = {Severity::Definite,
                    "script has no @" + opts.entry + " sequence",
                    {},
                    std::nullopt};
    return result;
  }
  const Block &body = entry->regions.at(0).blocks.at(0);
  // First argument: handle to the payload root. Remaining arguments are
  // parameters bound by name from extern_params.
  for (size_t i = 0; i < body.args.size(); ++i) {
    const ValueDef &arg = body.args[i];
    size_t slot = newSlot();
    if (i == 0 && arg.type.kind == TypeKind::Handle) {
      slots_[slot].ops = {payload_.root.id};
    } else if (arg.type.kind == TypeKind::Param) {
      auto it = opts.extern_params.find(arg.name);
      if (it == opts.extern_params.end()) {
        result.error = {Severity::Definite,
                        "missing external parameter '" + arg.name + "'",
                        entry->loc,
                        std::nullopt};
        return result;
      }
      slots_[slot].is_param = true;
      slots_[slot].param = it->second;
    } else {
      result.error = {Severity::Definite,
                      "entry sequence arguments must be one root handle followed "
                      "by parameters",
                      entry->loc,
                      std::nullopt};
      return result;
    }
    env_[arg.name] = slot;
  }

  TransformStatus status = execBody(body);
  result.trace = std::move(trace_);
  result.check_diags = std::move(check_diags_);
  if (!status.isOk()) {
    result.error = {status.kind == TransformStatusKind::Definite
                        ? Severity::Definite
                        : Severity::Silenceable,
                    status.message, pending_error_loc_, std::nullopt};
    return result;
  }
  DiagnosticList verify = verifyModule(payload_, payload_reg_);
  if (verify.hasErrors()) {
    result.error = {Severity::Definite,
                    "payload fails verification after interpretation:\n" +
                        verify.str(),
                    entry->loc,
                    std::nullopt};
    return result;
  }
  result.ok = true;
  return result;
}

InterpResult applyScript(const Script &script, Module &payload,
                         const DialectRegistry &payload_reg,
                         const TransformRegistry &treg, const InterpOptions &opts,
                         const KernelRegistry *kernels, const PassRegistry *passes,
                         const PatternRegistry *patterns,
                         const ConstraintTable *constraints,
                         const std::map<std::string, ConditionSignature>
                             *pass_signatures) {
  Interpreter interp(script, payload, payload_reg, treg);
  interp.setKernels(kernels);
  interp.setPasses(passes);
  interp.setPatterns(patterns);
  interp.setConstraints(constraints);
  interp.setPassSignatures(pass_signatures);
  return interp.run(opts);
}

} // namespace tfc
