//===- rewriter.hpp - Event-emitting structural mutation ------------------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef TFC_REWRITER_HPP
#define TFC_REWRITER_HPP

#include "tfc/ir.hpp"

namespace tfc {

struct RewriteEvent {
  enum class Kind { Replaced, Erased };
  Kind kind;
  OpId old_op = 0;
  std::vector<OpId> new_ops; // empty for erasures
};

using RewriteListener = std::function<void(const RewriteEvent &)>;

// All structural mutation of a module funnels through here. Each replace or
// erase fires exactly one event, delivered before the old op id becomes
// unreachable. Moves preserve op identity and fire no event.
class Rewriter {
public:
  explicit Rewriter(Module &m) : module_(m) {}

  Module &module() { return module_; }

  void addListener(RewriteListener fn) { listeners_.push_back(std::move(fn)); }
  size_t listenerMark() const { return listeners_.size(); }
  void truncateListeners(size_t mark) { listeners_.resize(mark); }

  Operation *find(OpId id) { return findOp(module_, id); }

  // Erases `id` and everything nested in it. One Erased event for the root.
  bool erase(OpId id);

  // Replaces `id` with `with` (already carrying fresh ids). Returns the new
  // ids, or empty on failure. One Replaced event.
  std::vector<OpId> replace(OpId id, std::vector<Operation> with);

  // Like replace, but also forwards uses of the old op's results to
  // `value_replacements` (old result name -> replacement value name).
  std::vector<OpId>
  replaceAndForward(OpId id, std::vector<Operation> with,
                    const std::map<std::string, std::string> &value_replacements);

  // Like replaceAndForward with an explicit event payload: the Replaced event
  // reports `event_new_ops` (e.g. just the main replacement, not helper
  // casts), or an existing op id when folding to an already-present value.
  std::vector<OpId>
  replaceWithEvent(OpId id, std::vector<Operation> with,
                   std::vector<OpId> event_new_ops,
                   const std::map<std::string, std::string> &value_replacements);

  // Folds `id` away, forwarding its single result to the existing value
  // `value_name`. The event points handles at the defining op of that value,
  // or at nothing when it is a block argument.
  bool replaceWithValue(OpId id, const std::string &value_name);

  bool insertBefore(OpId anchor, Operation op);
  bool insertAfter(OpId anchor, Operation op);

  // Moves `id` immediately before `anchor`; both must be live. Identity is
  // preserved and no event fires.
  bool moveBefore(OpId id, OpId anchor);

  // Swaps in a rebuilt region for `op` (used by whole-function lowerings).
  // Ids of surviving ops must be preserved by the caller; `erased_ids` lists
  // the ops that vanish, each of which gets one Erased event.
  bool replaceRegion(OpId op, Region with, const std::vector<OpId> &erased_ids);

  std::uint64_t mutationCount() const { return mutations_; }
  std::uint64_t eventCount() const { return events_; }

private:
  struct OpSlot {
    Block *block = nullptr;
    size_t index = 0;
  };
  OpSlot locate(OpId id);
  void emit(const RewriteEvent &ev);

  Module &module_;
  std::vector<RewriteListener> listeners_;
  std::uint64_t mutations_ = 0;
  std::uint64_t events_ = 0;
};

// Batch edit interface: edits apply atomically in order; an edit referencing
// an op erased by an earlier edit (or unknown) is a definite error and leaves
// the module untouched.
struct Edit {
  enum class Kind { Erase, Replace } kind;
  OpId target = 0;
  std::vector<Operation> replacements; // for Replace
};

std::optional<Diagnostic> applyEdits(Module &m, std::vector<Edit> edits,
                                     const std::vector<RewriteListener> &listeners);

} // namespace tfc

#endif // TFC_REWRITER_HPP
