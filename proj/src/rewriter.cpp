//===- rewriter.cpp - Event-emitting structural mutation ------------------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "tfc/rewriter.hpp"

#include <set>

namespace tfc {

namespace {

struct Located {
  Block *block = nullptr;
  size_t index = 0;
  bool valid() const { return block != nullptr; }
};

Located locateIn(Operation &root, OpId id) {
  for (auto &r : root.regions)
    for (auto &b : r.blocks)
      for (size_t i = 0; i < b.ops.size(); ++i) {
        if (b.ops[i].id == id)
          return {&b, i};
        Located l = locateIn(b.ops[i], id);
        if (l.valid())
          return l;
      }
  return {};
}

} // namespace

Rewriter::OpSlot Rewriter::locate(OpId id) {
  Located l = locateIn(module_.root, id);
  return {l.block, l.index};
}

void Rewriter::emit(const RewriteEvent &ev) {
  ++events_;
  for (auto &fn : listeners_)
    fn(ev);
}

bool Rewriter::erase(OpId id) {
  OpSlot slot = locate(id);
  if (!slot.block)
    return false;
  emit({RewriteEvent::Kind::Erased, id, {}});
  ++mutations_;
  slot.block->ops.erase(slot.block->ops.begin() + slot.index);
  return true;
}

std::vector<OpId> Rewriter::replace(OpId id, std::vector<Operation> with) {
  return replaceAndForward(id, std::move(with), {});
}

std::vector<OpId> Rewriter::replaceAndForward(
    OpId id, std::vector<Operation> with,
    const std::map<std::string, std::string> &value_replacements) {
  std::vector<OpId> new_ids;
  for (const auto &op : with)
    new_ids.push_back(op.id);
  return replaceWithEvent(id, std::move(with), new_ids, value_replacements);
}

std::vector<OpId> Rewriter::replaceWithEvent(
    OpId id, std::vector<Operation> with, std::vector<OpId> event_new_ops,
    const std::map<std::string, std::string> &value_replacements) {
  OpSlot slot = locate(id);
  if (!slot.block)
    return {};
  std::vector<OpId> new_ids;
  for (const auto &op : with)
    new_ids.push_back(op.id);
  emit({RewriteEvent::Kind::Replaced, id, std::move(event_new_ops)});
  ++mutations_;
  slot.block->ops.erase(slot.block->ops.begin() + slot.index);
  slot.block->ops.insert(slot.block->ops.begin() + slot.index,
                         std::make_move_iterator(with.begin()),
                         std::make_move_iterator(with.end()));
  if (!value_replacements.empty())
    remapUses(module_.root, value_replacements);
  return new_ids;
}

bool Rewriter::replaceWithValue(OpId id, const std::string &value_name) {
  Operation *op = find(id);
  if (!op || op->results.size() != 1)
    return false;
  std::map<std::string, std::string> fwd{{op->results[0].name, value_name}};
  // Retarget handles to the op defining the forwarded value; block arguments
  // yield the empty set.
  std::vector<OpId> event_targets;
  auto defs = collectDefs(module_.root);
  if (auto it = defs.find(value_name); it != defs.end()) {
    const Operation *def = findOp(module_, it->second);
    bool is_block_arg = true;
    if (def)
      for (const auto &res : def->results)
        if (res.name == value_name)
          is_block_arg = false;
    if (!is_block_arg)
      event_targets.push_back(it->second);
  }
  replaceWithEvent(id, {}, std::move(event_targets), fwd);
  return true;
}

bool Rewriter::replaceRegion(OpId op_id, Region with,
                             const std::vector<OpId> &erased_ids) {
  Operation *op = find(op_id);
  if (!op || op->regions.empty())
    return false;
  for (OpId id : erased_ids) {
    emit({RewriteEvent::Kind::Erased, id, {}});
    ++mutations_;
  }
  op = find(op_id); // listeners must not mutate, but re-locate to be safe
  op->regions[0] = std::move(with);
  return true;
}

bool Rewriter::insertBefore(OpId anchor, Operation op) {
  OpSlot slot = locate(anchor);
  if (!slot.block)
    return false;
  slot.block->ops.insert(slot.block->ops.begin() + slot.index, std::move(op));
  return true;
}

bool Rewriter::insertAfter(OpId anchor, Operation op) {
  OpSlot slot = locate(anchor);
  if (!slot.block)
    return false;
  slot.block->ops.insert(slot.block->ops.begin() + slot.index + 1, std::move(op));
  return true;
}

bool Rewriter::moveBefore(OpId id, OpId anchor) {
  OpSlot from = locate(id);
  if (!from.block)
    return false;
  Operation moved = std::move(from.block->ops[from.index]);
  from.block->ops.erase(from.block->ops.begin() + from.index);
  OpSlot to = locate(anchor);
  if (!to.block) {
    // Anchor vanished (should not happen); reinsert where it was.
    from.block->ops.insert(from.block->ops.begin() + from.index, std::move(moved));
    return false;
  }
  to.block->ops.insert(to.block->ops.begin() + to.index, std::move(moved));
  return true;
}

std::optional<Diagnostic> applyEdits(Module &m, std::vector<Edit> edits,
                                     const std::vector<RewriteListener> &listeners) {
  // Validate against live ids as the edits would apply in order.
  std::set<OpId> erased;
  for (const auto &e : edits) {
    if (erased.count(e.target) || !findOp(m, e.target))
      return Diagnostic{Severity::Definite,
                        "edit references op #" + std::to_string(e.target) +
                            " which is not live",
                        {},
                        m.filename};
    const Operation *op = findOp(m, e.target);
    for (OpId id : subtreeIds(*op))
      erased.insert(id);
  }
  Rewriter rw(m);
  for (const auto &l : listeners)
    rw.addListener(l);
  for (auto &e : edits) {
    if (e.kind == Edit::Kind::Erase)
      rw.erase(e.target);
    else
      rw.replace(e.target, std::move(e.replacements));
  }
  return std::nullopt;
}

} // namespace tfc
